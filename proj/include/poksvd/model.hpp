#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "poksvd/numerics.hpp"

namespace poksvd {

/// Atom normalization convention.
///
/// PerBin: unit norm and, for every bin, the first-channel entry is real and
/// nonnegative. This is the convention of the phase-optimized model, where a
/// per-bin rotation is absorbed by the phase matrix.
///
/// Global: unit norm and a single rotation per atom making its largest
/// first-channel entry real positive. Used by the phase-blind baselines,
/// whose phase columns are constant across bins and cannot absorb per-bin
/// rotations.
enum class Gauge : std::uint32_t { PerBin = 0, Global = 1 };

inline constexpr double kAtomNormTolerance = 1e-10;

/// K unit-norm complex atoms of length M * F. Atom k is stored as column k;
/// its bin-f block d_{fk} is rows [f * M, f * M + M).
class Dictionary {
 public:
  Dictionary() = default;
  /// Validates the gauge invariants with the given norm tolerance.
  Dictionary(Index channels, Index bins, ComplexMatrix atoms, Gauge gauge = Gauge::PerBin,
             double norm_tolerance = kAtomNormTolerance);

  Index channels() const { return channels_; }
  Index bins() const { return bins_; }
  Index size() const { return atoms_.cols(); }
  Index frame_dim() const { return channels_ * bins_; }
  Gauge gauge() const { return gauge_; }

  const ComplexMatrix& atoms() const { return atoms_; }
  auto atom(Index k) const { return atoms_.col(k); }
  auto block(Index f, Index k) const { return atoms_.col(k).segment(f * channels_, channels_); }

  /// Replaces atom k; the new atom must already satisfy the gauge.
  void set_atom(Index k, const ComplexVector& atom);

 private:
  Index channels_ = 0;
  Index bins_ = 0;
  ComplexMatrix atoms_;
  Gauge gauge_ = Gauge::PerBin;
};

/// Throws ContractViolation naming the first violated invariant.
void check_atom_gauge(const ComplexVector& atom, Index channels, Gauge gauge,
                      double norm_tolerance = kAtomNormTolerance);

/// Nonnegative activations over all K atoms plus the ordered list of
/// selected atom indices.
struct SparseCode {
  RealVector gains;
  std::vector<Index> support;

  static SparseCode empty(Index atoms) { return {RealVector::Zero(atoms), {}}; }
  bool contains(Index k) const;
  Index nnz() const { return static_cast<Index>(support.size()); }
};

/// Per-frame phase corrections, one length-F unit-modulus column per active atom.
class PhaseMatrix {
 public:
  PhaseMatrix() = default;
  explicit PhaseMatrix(Index bins) : bins_(bins) {}

  Index bins() const { return bins_; }
  bool contains(Index k) const { return columns_.count(k) != 0; }
  const ComplexVector& column(Index k) const;
  void set(Index k, ComplexVector column);
  void erase(Index k) { columns_.erase(k); }
  const std::map<Index, ComplexVector>& columns() const { return columns_; }

 private:
  Index bins_ = 0;
  std::map<Index, ComplexVector> columns_;
};

struct CodingDiagnostics {
  int refine_iterations = 0;
  int refine_cap_hits = 0;
  int ridge_fallbacks = 0;
  int rejected_phase_updates = 0;
  /// Residual norm after every refinement step, in order (only when tracing).
  std::vector<double> residual_trace;
};

struct CodingResult {
  SparseCode code;
  PhaseMatrix phases;
  ComplexVector residual;
  double residual_norm = 0.0;
  CodingDiagnostics diagnostics;
};

/// sum over the support of x_k * [phi_{0k} d_{0k}; ...; phi_{(F-1)k} d_{(F-1)k}].
ComplexVector apply_phased_dictionary(const Dictionary& dict, const PhaseMatrix& phases,
                                      const SparseCode& code);

struct NormalizedAtom {
  ComplexVector atom;
  /// Rotation applied to each bin: atom_f = row_phases_f * input_f / gain.
  ComplexVector row_phases;
  double gain = 0.0;
};

/// Rescales to unit norm and rotates into the requested gauge. A bin whose
/// first-channel entry is zero is rotated so its largest-magnitude channel is
/// real positive; an all-zero bin gets rotation 1.
NormalizedAtom normalize_atom(const ComplexVector& atom, Index channels,
                              Gauge gauge = Gauge::PerBin);

/// sum_f |<a_f | b_f>|, invariant to any per-bin unit rotation of either vector.
double phase_invariant_correlation(const ComplexVector& a, const ComplexVector& b, Index channels);

/// Largest phase-invariant correlation between two distinct atoms.
double coherence(const Dictionary& dict);

/// Unit complex z / |z|, or fallback when z == 0.
inline Complex unit_phase(Complex z, Complex fallback = Complex(1.0, 0.0)) {
  const double mag = std::abs(z);
  return mag > 0.0 ? z / mag : fallback;
}

}  // namespace poksvd
