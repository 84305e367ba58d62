#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "poksvd/pursuit.hpp"
#include "poksvd/spectral.hpp"

namespace poksvd {

struct LearningConfig {
  Index atoms = 40;
  PursuitConfig pursuit;
  /// Relative change of the total squared residual that ends training.
  double epsilon_outer = 1e-3;
  /// Relative change of the restricted per-atom objective that ends an atom update.
  double epsilon_atom = 1e-3;
  int max_outer_iters = 50;
  int max_atom_iters = 20;
  std::uint64_t seed = 0;
  /// Keep a frame's new code only if it does not increase that frame's residual.
  bool external_inference = true;
  double svd_tol = 1e-10;
  int svd_max_iters = 10000;

  Gauge gauge() const { return pursuit.phase_optimization ? Gauge::PerBin : Gauge::Global; }
  void validate() const;
};

/// One progress record per outer iteration.
struct IterationLog {
  int iteration = 0;
  double objective = 0.0;
  int atoms_replaced = 0;
  int codes_rejected = 0;
};

struct TrainedModel {
  Dictionary dictionary;
  std::vector<SparseCode> codes;
  std::vector<PhaseMatrix> phases;
  /// Sum over frames of the squared residual norm, after each outer iteration.
  std::vector<double> objective_trace;
  std::vector<IterationLog> log;
};

using ProgressCallback = std::function<void(const IterationLog&)>;

/// K distinct nonzero frames drawn without replacement, each normalized into
/// the given gauge, in the order they were drawn.
Dictionary init_dictionary(const ComplexMatrix& frames, Index channels, Index atoms,
                           std::uint64_t seed, Gauge gauge = Gauge::PerBin);

/// E_k: column t is y_t minus the phase-corrected contributions of every atom but k.
ComplexMatrix compute_atom_residual(const ComplexMatrix& frames, const Dictionary& dict,
                                    const std::vector<SparseCode>& codes,
                                    const std::vector<PhaseMatrix>& phases, Index k);

struct AtomUpdate {
  ComplexVector atom;
  RealVector gains;
  /// F x n phase rows for the n support frames.
  ComplexMatrix phases;
  /// Restricted objective ||E_k - (d x){Phi}||_F, initial value first.
  std::vector<double> objective_trace;
  int iterations = 0;
};

/// Rank-1 refit of one atom on its support frames (the columns of
/// `residual`), alternating a dominant-singular-triple step on the
/// conjugate-phase-rotated residual with a closed-form phase update.
AtomUpdate update_atom(const ComplexMatrix& residual, const ComplexVector& atom,
                       const RealVector& gains, const ComplexMatrix& phases, Index channels,
                       const LearningConfig& cfg);

/// Restricted objective of update_atom for the given factors.
double restricted_objective(const ComplexMatrix& residual, const ComplexVector& atom,
                            const RealVector& gains, const ComplexMatrix& phases, Index channels);

TrainedModel po_ksvd(const ComplexMatrix& frames, Index channels, const LearningConfig& cfg,
                     const ProgressCallback& progress = {});

/// Same, starting from a caller-supplied dictionary instead of random frames.
TrainedModel po_ksvd(const ComplexMatrix& frames, Index channels, Dictionary initial,
                     const LearningConfig& cfg, const ProgressCallback& progress = {});

inline TrainedModel po_ksvd(const Spectrogram& spec, const LearningConfig& cfg,
                            const ProgressCallback& progress = {}) {
  return po_ksvd(spec.values(), spec.channels(), cfg, progress);
}

}  // namespace poksvd
