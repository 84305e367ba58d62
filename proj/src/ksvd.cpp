#include "poksvd/ksvd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace poksvd {

void LearningConfig::validate() const {
  pursuit.validate();
  if (atoms < 1) throw ConfigError("K (atom count) must be >= 1");
  if (!(epsilon_outer > 0.0 && epsilon_outer < 1.0))
    throw ConfigError("epsilon_outer must lie in (0, 1)");
  if (!(epsilon_atom > 0.0 && epsilon_atom < 1.0))
    throw ConfigError("epsilon_atom must lie in (0, 1)");
  if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be >= 1");
  if (max_atom_iters < 1) throw ConfigError("max_atom_iters must be >= 1");
  if (!(svd_tol > 0.0)) throw ConfigError("svd_tol must be positive");
  if (svd_max_iters < 1) throw ConfigError("svd_max_iters must be >= 1");
}

Dictionary init_dictionary(const ComplexMatrix& frames, Index channels, Index atoms,
                           std::uint64_t seed, Gauge gauge) {
  if (channels < 1 || frames.rows() % channels != 0)
    throw ContractViolation("init_dictionary: frame length is not a multiple of channels");
  std::vector<Index> candidates;
  for (Index t = 0; t < frames.cols(); ++t)
    if (frames.col(t).squaredNorm() > 0.0) candidates.push_back(t);
  if (frames.cols() < atoms || static_cast<Index>(candidates.size()) < atoms)
    throw ComputationError("insufficient training data");

  std::mt19937_64 rng(seed);
  ComplexMatrix init(frames.rows(), atoms);
  for (Index k = 0; k < atoms; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k),
                                                    candidates.size() - 1);
    std::swap(candidates[static_cast<std::size_t>(k)], candidates[pick(rng)]);
    init.col(k) =
        normalize_atom(frames.col(candidates[static_cast<std::size_t>(k)]), channels, gauge).atom;
  }
  return Dictionary(channels, frames.rows() / channels, std::move(init), gauge);
}

ComplexMatrix compute_atom_residual(const ComplexMatrix& frames, const Dictionary& dict,
                                    const std::vector<SparseCode>& codes,
                                    const std::vector<PhaseMatrix>& phases, Index k) {
  if (frames.rows() != dict.frame_dim())
    throw ContractViolation("compute_atom_residual: frame length mismatch");
  if (static_cast<Index>(codes.size()) != frames.cols() ||
      static_cast<Index>(phases.size()) != frames.cols())
    throw ContractViolation("compute_atom_residual: need one code and phase matrix per frame");
  if (k < 0 || k >= dict.size()) throw ContractViolation("compute_atom_residual: bad atom index");

  ComplexMatrix out = frames;
  for (Index t = 0; t < frames.cols(); ++t) {
    SparseCode others = codes[static_cast<std::size_t>(t)];
    others.support.erase(std::remove(others.support.begin(), others.support.end(), k),
                         others.support.end());
    out.col(t) -= apply_phased_dictionary(dict, phases[static_cast<std::size_t>(t)], others);
  }
  return out;
}

double restricted_objective(const ComplexMatrix& residual, const ComplexVector& atom,
                            const RealVector& gains, const ComplexMatrix& phases, Index channels) {
  const Index bins = phases.rows();
  double total = 0.0;
  for (Index t = 0; t < residual.cols(); ++t)
    for (Index f = 0; f < bins; ++f)
      total += (residual.col(t).segment(f * channels, channels) -
                (phases(f, t) * gains(t)) * atom.segment(f * channels, channels))
                   .squaredNorm();
  return std::sqrt(total);
}

AtomUpdate update_atom(const ComplexMatrix& residual, const ComplexVector& atom,
                       const RealVector& gains, const ComplexMatrix& phases, Index channels,
                       const LearningConfig& cfg) {
  const Index n = residual.cols();
  const Index bins = channels > 0 ? residual.rows() / channels : 0;
  if (channels < 1 || residual.rows() != channels * bins || atom.size() != residual.rows() ||
      gains.size() != n || phases.rows() != bins || phases.cols() != n)
    throw ContractViolation("update_atom: inconsistent shapes");

  AtomUpdate out{atom, gains, phases, {}, 0};
  // Dead atom: nothing to fit, left for the caller to replace.
  if (n == 0) return out;

  const Gauge gauge = cfg.gauge();
  double current = restricted_objective(residual, out.atom, out.gains, out.phases, channels);
  out.objective_trace.push_back(current);

  for (int it = 1; it <= cfg.max_atom_iters; ++it) {
    out.iterations = it;
    const double previous = current;

    ComplexMatrix rotated = residual;
    for (Index t = 0; t < n; ++t)
      for (Index f = 0; f < bins; ++f)
        rotated.col(t).segment(f * channels, channels) *= std::conj(out.phases(f, t));
    if (rotated.cwiseAbs2().sum() == 0.0) break;

    SingularTriple triple;
    try {
      triple = dominant_singular_triple(rotated, cfg.svd_tol, cfg.svd_max_iters);
    } catch (const ConvergenceError& e) {
      triple = e.last_iterate();
    }

    // rotated ~= left * sigma * right^H, so the activation row is sigma * conj(right).
    const NormalizedAtom gauged = normalize_atom(triple.left, channels, gauge);
    ComplexVector cand_atom = gauged.atom;
    RealVector cand_gains(n);
    ComplexMatrix cand_phases = out.phases;
    for (Index t = 0; t < n; ++t) {
      const Complex activation = triple.sigma * std::conj(triple.right(t));
      cand_gains(t) = std::abs(activation);
      const Complex fold = unit_phase(activation);
      for (Index f = 0; f < bins; ++f)
        cand_phases(f, t) *= std::conj(gauged.row_phases(f)) * fold;
    }
    const double cand_obj = restricted_objective(residual, cand_atom, cand_gains, cand_phases,
                                                 channels);
    if (cand_obj <= current) {
      out.atom = std::move(cand_atom);
      out.gains = std::move(cand_gains);
      out.phases = std::move(cand_phases);
      current = cand_obj;
    }

    if (cfg.pursuit.phase_optimization) {
      for (Index t = 0; t < n; ++t) {
        for (Index f = 0; f < bins; ++f) {
          const Complex match = out.gains(t) * out.atom.segment(f * channels, channels)
                                                   .dot(residual.col(t).segment(f * channels, channels));
          out.phases(f, t) = unit_phase(match, out.phases(f, t));
        }
      }
      current = restricted_objective(residual, out.atom, out.gains, out.phases, channels);
    }
    out.objective_trace.push_back(current);

    // The phase-blind update is a single exact rank-1 fit.
    if (!cfg.pursuit.phase_optimization || current == 0.0) break;
    if (previous - current < cfg.epsilon_atom * previous) break;
  }
  return out;
}

TrainedModel po_ksvd(const ComplexMatrix& frames, Index channels, const LearningConfig& cfg,
                     const ProgressCallback& progress) {
  cfg.validate();
  return po_ksvd(frames, channels, init_dictionary(frames, channels, cfg.atoms, cfg.seed, cfg.gauge()),
                 cfg, progress);
}

TrainedModel po_ksvd(const ComplexMatrix& frames, Index channels, Dictionary initial,
                     const LearningConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  if (initial.frame_dim() != frames.rows() || initial.channels() != channels)
    throw ContractViolation("po_ksvd: dictionary shape does not match the training frames");
  if (initial.gauge() != cfg.gauge())
    throw ContractViolation("po_ksvd: dictionary gauge does not match the pursuit mode");
  const Index num_frames = frames.cols();
  const Index num_atoms = initial.size();
  if (num_frames < num_atoms) throw ComputationError("insufficient training data");

  TrainedModel model;
  model.dictionary = std::move(initial);
  Dictionary& dict = model.dictionary;
  const Index bins = dict.bins();
  model.codes.assign(static_cast<std::size_t>(num_frames), SparseCode::empty(num_atoms));
  model.phases.assign(static_cast<std::size_t>(num_frames), PhaseMatrix(bins));
  ComplexMatrix residual = frames;

  auto refresh_residual = [&](Index t) {
    const auto ut = static_cast<std::size_t>(t);
    residual.col(t) = frames.col(t) - apply_phased_dictionary(dict, model.phases[ut], model.codes[ut]);
  };

  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    IterationLog entry;
    entry.iteration = iter;

    for (Index t = 0; t < num_frames; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      CodingResult coded = po_omp(frames.col(t), dict, cfg.pursuit);
      if (cfg.external_inference && coded.residual_norm > residual.col(t).norm()) {
        ++entry.codes_rejected;
        continue;
      }
      model.codes[ut] = std::move(coded.code);
      model.phases[ut] = std::move(coded.phases);
      residual.col(t) = coded.residual;
    }

    std::vector<std::vector<Index>> users(static_cast<std::size_t>(num_atoms));
    for (Index t = 0; t < num_frames; ++t)
      for (Index k : model.codes[static_cast<std::size_t>(t)].support)
        users[static_cast<std::size_t>(k)].push_back(t);

    // Replace unused atoms by the worst-reconstructed frames.
    std::vector<bool> donor_used(static_cast<std::size_t>(num_frames), false);
    for (Index k = 0; k < num_atoms; ++k) {
      if (!users[static_cast<std::size_t>(k)].empty()) continue;
      Index worst = -1;
      double worst_norm = 0.0;
      for (Index t = 0; t < num_frames; ++t) {
        const double norm = residual.col(t).norm();
        if (!donor_used[static_cast<std::size_t>(t)] && norm > worst_norm &&
            frames.col(t).squaredNorm() > 0.0) {
          worst = t;
          worst_norm = norm;
        }
      }
      if (worst < 0) break;
      donor_used[static_cast<std::size_t>(worst)] = true;
      dict.set_atom(k, normalize_atom(frames.col(worst), channels, dict.gauge()).atom);
      ++entry.atoms_replaced;
    }

    for (Index k = 0; k < num_atoms; ++k) {
      const auto& support = users[static_cast<std::size_t>(k)];
      const auto n = static_cast<Index>(support.size());
      if (n == 0) continue;

      ComplexMatrix restricted(dict.frame_dim(), n);
      RealVector gains(n);
      ComplexMatrix phase_rows(bins, n);
      for (Index i = 0; i < n; ++i) {
        const auto ut = static_cast<std::size_t>(support[static_cast<std::size_t>(i)]);
        gains(i) = model.codes[ut].gains(k);
        phase_rows.col(i) = model.phases[ut].column(k);
        restricted.col(i) = residual.col(support[static_cast<std::size_t>(i)]);
        for (Index f = 0; f < bins; ++f)
          restricted.col(i).segment(f * channels, channels) +=
              (gains(i) * phase_rows(f, i)) * dict.block(f, k);
      }

      AtomUpdate update = update_atom(restricted, dict.atom(k), gains, phase_rows, channels, cfg);
      dict.set_atom(k, update.atom);
      for (Index i = 0; i < n; ++i) {
        const Index t = support[static_cast<std::size_t>(i)];
        const auto ut = static_cast<std::size_t>(t);
        model.codes[ut].gains(k) = update.gains(i);
        model.phases[ut].set(k, update.phases.col(i));
        refresh_residual(t);
      }
    }

    entry.objective = residual.colwise().squaredNorm().sum();
    model.objective_trace.push_back(entry.objective);
    model.log.push_back(entry);
    if (progress) progress(entry);

    const auto& trace = model.objective_trace;
    if (entry.objective == 0.0) break;
    if (trace.size() >= 2) {
      const double previous = trace[trace.size() - 2];
      if (std::abs(previous - entry.objective) < cfg.epsilon_outer * previous) break;
    }
  }
  return model;
}

}  // namespace poksvd
