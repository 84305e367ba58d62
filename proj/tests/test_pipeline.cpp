#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "poksvd/errors.hpp"
#include "poksvd/pipeline.hpp"
#include "poksvd/synthetic.hpp"

using namespace poksvd;
using namespace poksvd::testing;

namespace {

const StftConfig kSmall{16000, 14, 14, Taper::Rectangular};  // 8 bins

Spectrogram wrap(Index channels, ComplexMatrix values) {
  return Spectrogram(channels, std::move(values), kSmall);
}

}  // namespace

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.s_max = 9;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.gain_lo = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  CHECK(spec.nominal_stft().window_len == 30);
  CHECK(spec.nominal_stft().hop == 30);
  CHECK(spec.nominal_stft().num_bins() == 16);
}

TEST_CASE("noiseless synthetic frames are exactly the planted model") {
  SyntheticSpec spec;
  spec.frames = 50;
  spec.seed = 3;
  auto data = generate_synthetic(spec);
  CHECK(data.spectrogram.frames() == 50);
  CHECK(data.truth.dictionary.size() == 8);
  for (Index t = 0; t < 50; ++t) {
    const auto& code = data.truth.codes[t];
    CHECK(code.nnz() == 2);
    for (Index k : code.support) {
      CHECK(code.gains(k) >= 0.5);
      CHECK(code.gains(k) <= 2.0);
    }
    CHECK((data.spectrogram.values().col(t) -
           apply_phased_dictionary(data.truth.dictionary, data.truth.phases[t], code))
              .norm() < 1e-12);
  }
  auto again = generate_synthetic(spec);
  CHECK(again.spectrogram.values() == data.spectrogram.values());
}

TEST_CASE("synthetic with s_max = 0 is all zero") {
  SyntheticSpec spec;
  spec.s_max = 0;
  spec.frames = 5;
  auto data = generate_synthetic(spec);
  CHECK(data.spectrogram.values().norm() == 0.0);
}

TEST_CASE("synthetic noise has the requested variance") {
  SyntheticSpec spec;
  spec.frames = 2000;
  spec.noise_sigma = 0.1;
  auto noisy = generate_synthetic(spec);
  ComplexMatrix noise = noisy.spectrogram.values();
  for (Index t = 0; t < noise.cols(); ++t)
    noise.col(t) -= apply_phased_dictionary(noisy.truth.dictionary, noisy.truth.phases[t], noisy.truth.codes[t]);
  // sum of 2N squared N(0, sigma^2) parts: chi-square with 2N degrees of freedom
  const double dof = 2.0 * static_cast<double>(noise.size());
  const double stat = noise.squaredNorm() / (0.1 * 0.1);
  CHECK(std::abs(stat - dof) < 5.0 * std::sqrt(2.0 * dof));
}

TEST_CASE("coherence limit and spread") {
  SyntheticSpec spec;
  spec.spectral_spread = 1.5;
  spec.max_coherence = 0.5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(coherence(random_dictionary(spec, seed)) < 0.5);
  spec.spectral_spread = 0.0;
  spec.max_redraws = 3;
  CHECK_THROWS_AS(random_dictionary(spec, 0), ComputationError);
}

TEST_CASE("zeroed edge bins") {
  SyntheticSpec spec;
  spec.zero_edge_bins = true;
  spec.noise_sigma = 0.1;
  spec.frames = 10;
  auto data = generate_synthetic(spec);
  for (Index t = 0; t < 10; ++t)
    for (Index m = 0; m < 2; ++m) {
      CHECK(data.spectrogram.at(0, m, t) == Complex(0, 0));
      CHECK(data.spectrogram.at(15, m, t) == Complex(0, 0));
    }
}

TEST_CASE("denoise conserves the mixture") {
  std::mt19937_64 rng(1);
  auto dict = random_dictionary(2, 8, 4, rng);
  const auto mix = wrap(2, random_complex(16, 12, rng));
  PursuitConfig cfg;
  cfg.s_max = 2;
  auto out = denoise(mix, dict, cfg);
  CHECK((out.target.values() + out.noise_estimate.values() - mix.values()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out.codes.size() == 12);
  CHECK(out.masked_points == 0);
}

TEST_CASE("pure model noise is removed") {
  SyntheticSpec spec;
  spec.bins = 8;
  spec.frames = 20;
  spec.atoms = 4;
  spec.spectral_spread = 1.5;
  spec.max_coherence = 0.5;
  auto data = generate_synthetic(spec);
  PursuitConfig cfg;
  cfg.s_max = 2;
  cfg.tau = 1e-6;
  cfg.epsilon = 1e-9;
  cfg.max_refine_iters = 2000;
  auto out = denoise(wrap(2, data.spectrogram.values()), data.truth.dictionary, cfg);
  int clean = 0;
  for (Index t = 0; t < 20; ++t) clean += out.target.values().col(t).norm() < cfg.tau + 1e-8;
  CHECK(clean >= 19);
}

TEST_CASE("a target orthogonal to every atom passes through") {
  // atoms live on channel 0, target on channel 1
  std::mt19937_64 rng(2);
  ComplexMatrix d = ComplexMatrix::Zero(16, 3);
  for (Index k = 0; k < 3; ++k)
    for (Index f = 0; f < 8; ++f) d(2 * f, k) = random_vector(1, rng)(0);
  for (Index k = 0; k < 3; ++k) d.col(k) = normalize_atom(d.col(k), 2).atom;
  Dictionary dict(2, 8, d);
  ComplexMatrix y = ComplexMatrix::Zero(16, 5);
  for (Index f = 0; f < 8; ++f) y.row(2 * f + 1) = random_complex(1, 5, rng);
  auto out = denoise(wrap(2, y), dict, {});
  CHECK(out.noise_estimate.values().norm() < 1e-12);
  CHECK((out.target.values() - y).norm() < 1e-12);
}

TEST_CASE("denoising with the true noise model improves SDR") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SyntheticSpec spec;
    spec.frames = 10;
    spec.atoms = 6;
    spec.seed = seed;
    auto noise = generate_synthetic(spec);
    std::mt19937_64 rng(seed + 7);
    ComplexMatrix target = random_complex(32, 10, rng);
    target *= std::sqrt(noise.spectrogram.values().squaredNorm() / target.squaredNorm() * std::pow(10.0, -0.5));
    const Spectrogram mix(2, target + noise.spectrogram.values(), noise.spectrogram.config());
    PursuitConfig cfg;
    cfg.s_max = 2;
    auto out = denoise(mix, noise.truth.dictionary, cfg);
    const double before = evaluate(target, mix.values()).sdr_db;
    const double after = evaluate(target, out.target.values()).sdr_db;
    CHECK(before == doctest::Approx(-5.0).epsilon(1e-9));
    improved += after > before;
  }
  CHECK(improved >= 90);
}

TEST_CASE("mask counts match a direct loop and keep the phase") {
  std::mt19937_64 rng(3);
  const auto target = wrap(2, random_complex(16, 20, rng));
  const auto noise = wrap(2, random_complex(16, 20, rng));
  for (bool summed : {false, true}) {
    MaskConfig cfg;
    cfg.summed_channels = summed;
    auto out = apply_mask(target, noise, cfg);
    Index expected = 0;
    for (Index t = 0; t < 20; ++t)
      for (Index f = 0; f < 8; ++f)
        for (Index m = 0; m < 2; ++m) {
          double tp = std::norm(target.at(f, m, t)), np = std::norm(noise.at(f, m, t));
          if (summed) {
            tp = std::norm(target.at(f, 0, t)) + std::norm(target.at(f, 1, t));
            np = std::norm(noise.at(f, 0, t)) + std::norm(noise.at(f, 1, t));
          }
          if (tp < np) {
            ++expected;
            CHECK(std::abs(std::arg(out.masked.at(f, m, t)) - std::arg(target.at(f, m, t))) < 1e-12);
          } else {
            CHECK(out.masked.at(f, m, t) == target.at(f, m, t));
          }
        }
    CHECK(out.masked_points == expected);
  }
}

TEST_CASE("mask floor is the mean of the quietest frames") {
  ComplexMatrix t = ComplexMatrix::Zero(2, 10);
  for (Index i = 0; i < 10; ++i) t(0, i) = Complex(0, 1.0 + i);  // magnitudes 1..10
  ComplexMatrix n = ComplexMatrix::Zero(2, 10);
  n(0, 9) = 100.0;
  const StftConfig cfg{16000, 2, 2, Taper::Rectangular};  // 2 bins, 1 channel
  MaskConfig mc;
  mc.floor_quantile = 0.2;
  auto out = apply_mask(Spectrogram(1, t, cfg), Spectrogram(1, n, cfg), mc);
  CHECK(out.masked_points == 1);
  CHECK(std::abs(out.masked.at(0, 0, 9) - Complex(0, 1.5)) < 1e-14);
}

TEST_CASE("mask degenerate cases") {
  std::mt19937_64 rng(4);
  const auto target = wrap(1, random_complex(8, 6, rng));
  auto same = apply_mask(target, wrap(1, ComplexMatrix::Zero(8, 6)));
  CHECK(same.masked.values() == target.values());
  CHECK(same.masked_points == 0);
  auto zero = apply_mask(wrap(1, ComplexMatrix::Zero(8, 6)), target);
  CHECK(zero.masked.values().norm() == 0.0);
  MaskConfig bad;
  bad.floor_quantile = 0.0;
  CHECK_THROWS_AS(apply_mask(target, target, bad), ConfigError);
}

TEST_CASE("denoise with mask reports masked points") {
  std::mt19937_64 rng(5);
  auto dict = random_dictionary(2, 8, 4, rng);
  const auto mix = wrap(2, random_complex(16, 12, rng));
  auto plain = denoise(mix, dict, {});
  auto masked = denoise(mix, dict, {}, MaskConfig{});
  auto direct = apply_mask(plain.target, plain.noise_estimate);
  CHECK(masked.masked_points == direct.masked_points);
  CHECK(masked.target.values() == direct.masked.values());
}

TEST_CASE("SDR of a perfect estimate is capped at 100 dB") {
  std::mt19937_64 rng(6);
  const ComplexMatrix s = random_complex(5, 4, rng);
  CHECK(evaluate(s, s).sdr_db == kMetricCapDb);
  CHECK(evaluate(s, ComplexMatrix(s * 1e-200)).sdr_db > -kMetricCapDb - 1e-9);
}

TEST_CASE("SDR of a known error is 10 dB") {
  ComplexMatrix s = ComplexMatrix::Zero(2, 1);
  s(0, 0) = std::sqrt(10.0);
  ComplexMatrix e = s;
  e(1, 0) = 1.0;
  CHECK(evaluate(s, e).sdr_db == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("SDR and SIR against a long-double oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix s = random_complex(6, 5, rng);
    const ComplexMatrix n = random_complex(6, 5, rng);
    const ComplexMatrix est = s + 0.3 * n + 0.1 * random_complex(6, 5, rng);
    long double ss = 0, err = 0;
    std::complex<long double> sp = 0, np = 0;
    long double nn = 0;
    for (Index i = 0; i < s.size(); ++i) {
      const std::complex<long double> a(s(i).real(), s(i).imag()), b(n(i).real(), n(i).imag()),
          e(est(i).real(), est(i).imag());
      ss += std::norm(a);
      nn += std::norm(b);
      err += std::norm(a - e);
      sp += std::conj(a) * e;
      np += std::conj(b) * e;
    }
    const double sdr = static_cast<double>(10.0L * std::log10(ss / err));
    const double sir = static_cast<double>(10.0L * std::log10((std::norm(sp) / ss) / (std::norm(np) / nn)));
    auto rep = evaluate(s, est, &n);
    CHECK(rep.sdr_db == doctest::Approx(sdr).epsilon(1e-10));
    REQUIRE(rep.sir_db.has_value());
    CHECK(*rep.sir_db == doctest::Approx(sir).epsilon(1e-10));
  }
}

TEST_CASE("SDR is invariant to a joint rescale") {
  std::mt19937_64 rng(8);
  const ComplexMatrix s = random_complex(4, 4, rng);
  const ComplexMatrix e = s + 0.2 * random_complex(4, 4, rng);
  CHECK(evaluate(s, e).sdr_db == doctest::Approx(evaluate(ComplexMatrix(3.0 * s), ComplexMatrix(3.0 * e)).sdr_db));
}

TEST_CASE("evaluate errors and per-frame norms") {
  std::mt19937_64 rng(9);
  const ComplexMatrix s = random_complex(3, 3, rng);
  CHECK_THROWS_WITH_AS(evaluate(ComplexMatrix::Zero(3, 3), s), "degenerate reference", ComputationError);
  const ComplexMatrix zero = ComplexMatrix::Zero(3, 3);
  CHECK_THROWS_WITH_AS(evaluate(s, s, &zero), "degenerate noise reference", ComputationError);
  CHECK_THROWS_AS(evaluate(s, ComplexMatrix(s.leftCols(2))), ContractViolation);
  auto spec_a = wrap(1, random_complex(8, 3, rng));
  auto spec_b = wrap(1, random_complex(8, 3, rng));
  auto rep = evaluate(spec_a, spec_b);
  REQUIRE(rep.frame_residual_norms.size() == 3);
  CHECK(rep.frame_residual_norms[1] == doctest::Approx((spec_a.values() - spec_b.values()).col(1).norm()));
  SampleMatrix x = SampleMatrix::Random(50, 2);
  CHECK(evaluate(x, x).sdr_db == kMetricCapDb);
}

TEST_CASE("atom matching") {
  std::mt19937_64 rng(10);
  auto truth = random_dictionary(2, 4, 3, rng);
  auto same = atom_match_score(truth, truth);
  for (Index k = 0; k < 3; ++k) {
    CHECK(same.assigned_score(k) == doctest::Approx(1.0));
    CHECK(same.assigned_atom[k] == k);
  }
  // per-bin rotations and a permutation change nothing
  ComplexMatrix rotated(8, 3);
  for (Index k = 0; k < 3; ++k) {
    ComplexVector a = truth.atom((k + 1) % 3);
    for (Index f = 0; f < 4; ++f) a.segment(2 * f, 2) *= random_phase(rng);
    rotated.col(k) = normalize_atom(a, 2).atom;
  }
  auto perm = atom_match_score(Dictionary(2, 4, rotated), truth);
  for (Index k = 0; k < 3; ++k) {
    CHECK(perm.assigned_score(k) == doctest::Approx(1.0));
    CHECK(perm.assigned_atom[k] == (k + 2) % 3);
  }
  ComplexMatrix e1 = ComplexMatrix::Zero(4, 1), e2 = ComplexMatrix::Zero(4, 1);
  e1(0, 0) = 1.0;
  e2(3, 0) = 1.0;
  CHECK(atom_match_score(Dictionary(2, 2, e1), Dictionary(2, 2, e2)).best_score(0) == 0.0);
}

TEST_CASE("max weight assignment beats greedy") {
  Eigen::MatrixXd w(2, 2);
  w << 0.9, 0.8, 0.85, 0.1;
  auto a = max_weight_assignment(w);
  CHECK(a == std::vector<Index>{1, 0});
  Eigen::MatrixXd wide(3, 2);
  wide << 1, 0, 0, 1, 0.5, 0.5;
  auto b = max_weight_assignment(wide);
  CHECK(b[0] == 0);
  CHECK(b[1] == 1);
  CHECK(b[2] == -1);
}

TEST_CASE("support recovery rate") {
  std::vector<SparseCode> a(4, SparseCode::empty(3)), b(4, SparseCode::empty(3));
  a[0].support = {0, 1};
  b[0].support = {1, 0};
  a[1].support = {2};
  b[1].support = {1};
  CHECK(support_recovery_rate(a, b) == doctest::Approx(0.75));
  CHECK_THROWS_AS(support_recovery_rate(a, std::vector<SparseCode>(3)), ContractViolation);
}
