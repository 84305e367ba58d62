#pragma once

#include <string>
#include <vector>

#include "poksvd/model.hpp"

namespace poksvd {

/// How candidate atoms are scored during greedy selection.
enum class SelectionRule {
  /// c_k = sum_f |<r_f | d_fk>|, the gain of the best phase-corrected fit.
  Derived,
  /// c_k = |sum_f b_fk / |b_fk||, magnitude of the sum of unit phasors.
  Literal,
};

/// How a single phase entry is re-estimated inside refinement.
enum class PhaseUpdateRule {
  /// z = <r_f | d_f> + phi_old * x * ||d_f||^2, the exact per-entry minimizer.
  Exact,
  /// z = <r_f | d_f> + phi_old * x, which drops the per-bin atom energy.
  /// Updates that would raise the residual are rejected.
  Literal,
};

std::string to_string(SelectionRule rule);
SelectionRule parse_selection_rule(const std::string& name);

struct PursuitConfig {
  Index s_max = 3;
  /// Absolute residual-norm stop.
  double tau = 1e-4;
  /// Relative residual change that ends refinement.
  double epsilon = 1e-3;
  int max_refine_iters = 100;
  /// Off reproduces classic OMP: atoms are matched as whole vectors and each
  /// atom carries one phase shared by all bins.
  bool phase_optimization = true;
  SelectionRule selection = SelectionRule::Derived;
  PhaseUpdateRule phase_update = PhaseUpdateRule::Exact;
  /// Fill CodingDiagnostics::residual_trace.
  bool record_trace = false;

  void validate() const;
};

struct AtomSelection {
  Index atom = 0;
  double gain = 0.0;
  double score = 0.0;
  /// Optimal per-bin phase column for the selected atom.
  ComplexVector phases;
};

/// Best single-atom fit of the residual among atoms not in `excluded`.
/// Ties go to the lowest index; if every score is zero the lowest candidate
/// is returned with gain 0.
AtomSelection select_best_atom(const ComplexVector& residual, const Dictionary& dict,
                               const std::vector<Index>& excluded, const PursuitConfig& cfg = {});

/// Phase minimizing ||e - phi * gain * d|| for e = residual + phi_old * gain * d.
/// `residual` and `atom_block` are one bin's M-vectors.
Complex updated_bin_phase(const ComplexVector& residual, const ComplexVector& atom_block,
                          double gain, Complex phi_old,
                          PhaseUpdateRule rule = PhaseUpdateRule::Exact);

struct Refinement {
  /// Nonnegative gains, one per support entry.
  RealVector gains;
  /// F x |support| unit-modulus phase columns.
  ComplexMatrix phases;
  ComplexVector residual;
  double residual_norm = 0.0;
  int iterations = 0;
  bool hit_cap = false;
  int ridge_fallbacks = 0;
  int rejected_phase_updates = 0;
  /// Residual norm after every least-squares step and every per-atom phase sweep.
  std::vector<double> trace;
};

/// Alternating gain / phase optimization on a fixed support. Complex
/// least-squares gains are folded to nonnegative magnitudes by rotating the
/// atom's whole phase column.
Refinement refine_support(const ComplexVector& y, const Dictionary& dict,
                          const std::vector<Index>& support, const ComplexMatrix& phases_in,
                          const PursuitConfig& cfg);

/// Phase-optimized orthogonal matching pursuit of one frame.
CodingResult po_omp(const ComplexVector& y, const Dictionary& dict, const PursuitConfig& cfg);

}  // namespace poksvd
