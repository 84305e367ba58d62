#include "poksvd/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace poksvd {

namespace {

ComplexMatrix draw_atoms(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index m = spec.channels;
  ComplexMatrix atoms(m * spec.bins, spec.atoms);
  for (Index k = 0; k < spec.atoms; ++k) {
    for (Index f = 0; f < spec.bins; ++f) {
      const double envelope = std::exp(spec.spectral_spread * normal(rng));
      for (Index c = 0; c < m; ++c) {
        const double re = normal(rng);
        const double im = normal(rng);
        atoms(f * m + c, k) = envelope * Complex(re, im);
      }
    }
    if (spec.zero_edge_bins) {
      atoms.col(k).head(m).setZero();
      atoms.col(k).tail(m).setZero();
    }
    atoms.col(k) = normalize_atom(atoms.col(k), m, Gauge::PerBin).atom;
  }
  return atoms;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (channels < 1) throw ConfigError("synthetic: channels must be >= 1");
  if (bins < 2) throw ConfigError("synthetic: bins must be >= 2");
  if (zero_edge_bins && bins < 3) throw ConfigError("synthetic: zero_edge_bins needs >= 3 bins");
  if (frames < 0) throw ConfigError("synthetic: frames must be >= 0");
  if (atoms < 1) throw ConfigError("synthetic: atoms must be >= 1");
  if (s_max < 0 || s_max > atoms) throw ConfigError("synthetic: need 0 <= s_max <= atoms");
  if (!(gain_lo > 0.0) || gain_hi < gain_lo) throw ConfigError("synthetic: need 0 < gain_lo <= gain_hi");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic: noise_sigma must be >= 0");
  if (!(spectral_spread >= 0.0)) throw ConfigError("synthetic: spectral_spread must be >= 0");
  if (max_coherence < 0.0) throw ConfigError("synthetic: max_coherence must be >= 0");
  if (max_redraws < 1) throw ConfigError("synthetic: max_redraws must be >= 1");
}

StftConfig SyntheticSpec::nominal_stft(std::uint32_t sample_rate) const {
  StftConfig cfg;
  cfg.sample_rate = sample_rate;
  cfg.window_len = 2 * (bins - 1);
  cfg.hop = cfg.window_len;
  cfg.taper = Taper::Rectangular;
  return cfg;
}

Dictionary random_dictionary(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < spec.max_redraws; ++attempt) {
    Dictionary dict(spec.channels, spec.bins, draw_atoms(spec, rng));
    if (spec.max_coherence <= 0.0 || coherence(dict) < spec.max_coherence) return dict;
  }
  throw ComputationError("could not draw a dictionary with coherence below " +
                         std::to_string(spec.max_coherence) + " in " +
                         std::to_string(spec.max_redraws) + " attempts");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::uint64_t dict_seed = rng();
  GroundTruth truth{random_dictionary(spec, dict_seed), {}, {}};
  const Dictionary& dict = truth.dictionary;

  std::uniform_real_distribution<double> gain_dist(spec.gain_lo, spec.gain_hi);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

  const Index m = spec.channels;
  ComplexMatrix values(dict.frame_dim(), spec.frames);
  std::vector<Index> pool(static_cast<std::size_t>(spec.atoms));
  for (Index t = 0; t < spec.frames; ++t) {
    std::iota(pool.begin(), pool.end(), Index{0});
    SparseCode code = SparseCode::empty(spec.atoms);
    PhaseMatrix phases(spec.bins);
    for (Index i = 0; i < spec.s_max; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
      const Index k = pool[static_cast<std::size_t>(i)];
      code.support.push_back(k);
      code.gains(k) = gain_dist(rng);
      ComplexVector column(spec.bins);
      for (Index f = 0; f < spec.bins; ++f) column(f) = std::polar(1.0, angle_dist(rng));
      phases.set(k, std::move(column));
    }
    values.col(t) = apply_phased_dictionary(dict, phases, code);
    if (spec.noise_sigma > 0.0) {
      for (Index r = 0; r < values.rows(); ++r) {
        const double re = noise(rng);
        const double im = noise(rng);
        values(r, t) += Complex(re, im);
      }
      if (spec.zero_edge_bins) {
        values.col(t).head(m).setZero();
        values.col(t).tail(m).setZero();
      }
    }
    truth.codes.push_back(std::move(code));
    truth.phases.push_back(std::move(phases));
  }
  return {Spectrogram(m, std::move(values), spec.nominal_stft()), std::move(truth)};
}

}  // namespace poksvd
