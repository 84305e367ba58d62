#include "poksvd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poksvd {

namespace {

double capped_db(double numerator, double denominator) {
  if (denominator <= 0.0) return kMetricCapDb;
  if (numerator <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(numerator / denominator), -kMetricCapDb, kMetricCapDb);
}

}  // namespace

void MaskConfig::validate() const {
  if (!(floor_quantile > 0.0 && floor_quantile <= 1.0))
    throw ConfigError("floor_quantile must lie in (0, 1], got " + std::to_string(floor_quantile));
}

MaskOutcome apply_mask(const Spectrogram& target, const Spectrogram& noise_estimate,
                       const MaskConfig& cfg) {
  cfg.validate();
  if (!target.same_shape(noise_estimate))
    throw ContractViolation("apply_mask: target and noise estimate differ in shape");

  MaskOutcome out{target, 0};
  const Index frames = target.frames();
  if (frames == 0) return out;
  const Index channels = target.channels();
  const Index bins = target.bins();

  const auto quiet = std::max<Index>(
      1, static_cast<Index>(std::ceil(cfg.floor_quantile * static_cast<double>(frames))));
  Eigen::MatrixXd floor_level(bins, channels);
  std::vector<double> mags(static_cast<std::size_t>(frames));
  for (Index f = 0; f < bins; ++f) {
    for (Index m = 0; m < channels; ++m) {
      for (Index t = 0; t < frames; ++t) mags[static_cast<std::size_t>(t)] = std::abs(target.at(f, m, t));
      std::partial_sort(mags.begin(), mags.begin() + quiet, mags.end());
      double sum = 0.0;
      for (Index i = 0; i < quiet; ++i) sum += mags[static_cast<std::size_t>(i)];
      floor_level(f, m) = sum / static_cast<double>(quiet);
    }
  }

  for (Index t = 0; t < frames; ++t) {
    for (Index f = 0; f < bins; ++f) {
      bool bin_masked = false;
      if (cfg.summed_channels) {
        double target_psd = 0.0, noise_psd = 0.0;
        for (Index m = 0; m < channels; ++m) {
          target_psd += std::norm(target.at(f, m, t));
          noise_psd += std::norm(noise_estimate.at(f, m, t));
        }
        bin_masked = target_psd < noise_psd;
      }
      for (Index m = 0; m < channels; ++m) {
        const bool masked = cfg.summed_channels
                                ? bin_masked
                                : std::norm(target.at(f, m, t)) < std::norm(noise_estimate.at(f, m, t));
        if (!masked) continue;
        out.masked.at(f, m, t) = floor_level(f, m) * unit_phase(target.at(f, m, t));
        ++out.masked_points;
      }
    }
  }
  return out;
}

DenoiseResult denoise(const Spectrogram& mixture, const Dictionary& noise_dict,
                      const PursuitConfig& cfg, const std::optional<MaskConfig>& mask) {
  cfg.validate();
  if (mixture.channels() != noise_dict.channels() || mixture.bins() != noise_dict.bins())
    throw ContractViolation("denoise: mixture has " + std::to_string(mixture.channels()) +
                            " channels x " + std::to_string(mixture.bins()) +
                            " bins, dictionary has " + std::to_string(noise_dict.channels()) +
                            " x " + std::to_string(noise_dict.bins()));

  DenoiseResult out{mixture, Spectrogram(mixture.channels(), mixture.frames(), mixture.config()), {}, 0};
  out.codes.reserve(static_cast<std::size_t>(mixture.frames()));
  for (Index t = 0; t < mixture.frames(); ++t) {
    CodingResult coded = po_omp(mixture.values().col(t), noise_dict, cfg);
    out.noise_estimate.values().col(t) = mixture.values().col(t) - coded.residual;
    out.target.values().col(t) = coded.residual;
    out.codes.push_back(std::move(coded.code));
  }
  if (mask) {
    MaskOutcome masked = apply_mask(out.target, out.noise_estimate, *mask);
    out.target = std::move(masked.masked);
    out.masked_points = masked.masked_points;
  }
  return out;
}

EvalReport evaluate(const ComplexMatrix& reference, const ComplexMatrix& estimate,
                    const ComplexMatrix* noise_reference) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    throw ContractViolation("evaluate: reference and estimate differ in shape");
  const double ref_energy = reference.squaredNorm();
  if (!(ref_energy > 0.0)) throw ComputationError("degenerate reference");

  EvalReport report;
  report.sdr_db = capped_db(ref_energy, (reference - estimate).squaredNorm());
  if (noise_reference) {
    if (noise_reference->rows() != reference.rows() || noise_reference->cols() != reference.cols())
      throw ContractViolation("evaluate: noise reference differs in shape");
    const double noise_energy = noise_reference->squaredNorm();
    if (!(noise_energy > 0.0)) throw ComputationError("degenerate noise reference");
    // Energy of the projections of the estimate onto span{s} and span{n}.
    const Complex on_target = (reference.array().conjugate() * estimate.array()).sum();
    const Complex on_noise = (noise_reference->array().conjugate() * estimate.array()).sum();
    report.sir_db = capped_db(std::norm(on_target) / ref_energy, std::norm(on_noise) / noise_energy);
  }
  return report;
}

EvalReport evaluate(const Spectrogram& reference, const Spectrogram& estimate,
                    const Spectrogram* noise_reference) {
  if (!reference.same_shape(estimate))
    throw ContractViolation("evaluate: spectrogram shapes differ");
  EvalReport report = evaluate(reference.values(), estimate.values(),
                               noise_reference ? &noise_reference->values() : nullptr);
  const ComplexMatrix diff = reference.values() - estimate.values();
  for (Index t = 0; t < diff.cols(); ++t) report.frame_residual_norms.push_back(diff.col(t).norm());
  return report;
}

EvalReport evaluate(const SampleMatrix& reference, const SampleMatrix& estimate,
                    const SampleMatrix* noise_reference) {
  const ComplexMatrix noise = noise_reference ? noise_reference->cast<Complex>() : ComplexMatrix();
  return evaluate(ComplexMatrix(reference.cast<Complex>()), ComplexMatrix(estimate.cast<Complex>()),
                  noise_reference ? &noise : nullptr);
}

std::vector<Index> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const Index rows = weights.rows();
  const Index cols = weights.cols();
  if (rows == 0 || cols == 0) return std::vector<Index>(static_cast<std::size_t>(rows), -1);
  if (rows > cols) {
    // Assign columns to rows on the transpose, then invert the mapping.
    const std::vector<Index> by_col = max_weight_assignment(weights.transpose());
    std::vector<Index> out(static_cast<std::size_t>(rows), -1);
    for (Index c = 0; c < cols; ++c)
      if (by_col[static_cast<std::size_t>(c)] >= 0)
        out[static_cast<std::size_t>(by_col[static_cast<std::size_t>(c)])] = c;
    return out;
  }

  // Hungarian algorithm (potentials form) minimizing -weights, rows <= cols.
  const double inf = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(rows);
  const auto m = static_cast<std::size_t>(cols);
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -weights(static_cast<Index>(i0 - 1), static_cast<Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> out(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out[p[j] - 1] = static_cast<Index>(j - 1);
  return out;
}

AtomMatch atom_match_score(const Dictionary& learned, const Dictionary& truth) {
  if (learned.channels() != truth.channels() || learned.bins() != truth.bins())
    throw ContractViolation("atom_match_score: dictionaries differ in channels or bins");
  const Index num_true = truth.size();
  const Index num_learned = learned.size();
  Eigen::MatrixXd scores(num_true, num_learned);
  for (Index j = 0; j < num_true; ++j)
    for (Index k = 0; k < num_learned; ++k)
      scores(j, k) = phase_invariant_correlation(learned.atom(k), truth.atom(j), truth.channels());

  AtomMatch out;
  out.best_score = RealVector::Zero(num_true);
  out.best_atom.assign(static_cast<std::size_t>(num_true), -1);
  for (Index j = 0; j < num_true && num_learned > 0; ++j) {
    Index k = 0;
    out.best_score(j) = scores.row(j).maxCoeff(&k);
    out.best_atom[static_cast<std::size_t>(j)] = k;
  }
  out.assigned_atom = max_weight_assignment(scores);
  out.assigned_score = RealVector::Zero(num_true);
  for (Index j = 0; j < num_true; ++j) {
    const Index k = out.assigned_atom[static_cast<std::size_t>(j)];
    if (k >= 0) out.assigned_score(j) = scores(j, k);
  }
  return out;
}

double support_recovery_rate(const std::vector<SparseCode>& truth,
                             const std::vector<SparseCode>& estimate) {
  if (truth.size() != estimate.size())
    throw ContractViolation("support_recovery_rate: frame counts differ");
  if (truth.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    auto a = truth[t].support;
    auto b = estimate[t].support;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace poksvd
