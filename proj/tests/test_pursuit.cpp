#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>

#include "helpers.hpp"
#include "reference_omp.hpp"
#include "poksvd/errors.hpp"
#include "poksvd/pursuit.hpp"

using namespace poksvd;
using namespace poksvd::testing;

namespace {

ComplexVector phased_atom(const Dictionary& dict, Index k, const ComplexVector& phases) {
  ComplexVector v = dict.atom(k);
  for (Index f = 0; f < dict.bins(); ++f) v.segment(f * dict.channels(), dict.channels()) *= phases(f);
  return v;
}

// Best achievable single-atom cost, with per-bin phases from a grid.
double grid_selection_cost(const ComplexVector& r, const Dictionary& dict, int points) {
  double best = r.squaredNorm();
  for (Index k = 0; k < dict.size(); ++k) {
    double gain = 0.0;
    for (Index f = 0; f < dict.bins(); ++f) {
      const Complex b = dict.block(f, k).dot(r.segment(f * dict.channels(), dict.channels()));
      double top = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < points; ++i)
        top = std::max(top, (std::conj(std::polar(1.0, 2.0 * M_PI * i / points)) * b).real());
      gain += top;
    }
    gain = std::max(gain, 0.0);
    best = std::min(best, r.squaredNorm() - gain * gain);
  }
  return best;
}

struct Planted {
  Dictionary dict;
  ComplexVector y;
  std::vector<Index> support;
  RealVector gains;
  ComplexMatrix phases;
};

Planted planted_frame(std::mt19937_64& rng, Index m, Index f, Index k, std::vector<Index> support) {
  Planted p{random_dictionary(m, f, k, rng), ComplexVector::Zero(m * f), support,
            RealVector(support.size()), ComplexMatrix(f, support.size())};
  std::uniform_real_distribution<double> g(0.5, 2.0);
  for (std::size_t j = 0; j < support.size(); ++j) {
    p.gains(j) = g(rng);
    for (Index b = 0; b < f; ++b) p.phases(b, j) = random_phase(rng);
    p.y += p.gains(j) * phased_atom(p.dict, support[j], p.phases.col(j));
  }
  return p;
}

}  // namespace

TEST_CASE("config validation and names") {
  PursuitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.s_max = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.tau = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_selection_rule("literal") == SelectionRule::Literal);
  CHECK(to_string(SelectionRule::Derived) == "derived");
  CHECK_THROWS_AS(parse_selection_rule("max"), ConfigError);
}

TEST_CASE("selecting a phase-rotated atom recovers it exactly") {
  std::mt19937_64 rng(1);
  auto dict = random_dictionary(2, 4, 6, rng);
  ComplexVector phases(4);
  for (Index f = 0; f < 4; ++f) phases(f) = random_phase(rng);
  const ComplexVector r = 1.7 * phased_atom(dict, 4, phases);
  auto pick = select_best_atom(r, dict, {});
  CHECK(pick.atom == 4);
  CHECK(pick.gain == doctest::Approx(1.7).epsilon(1e-12));
  CHECK((pick.phases - phases).norm() < 1e-12);
  CHECK((r - pick.gain * phased_atom(dict, 4, pick.phases)).norm() < 1e-12);
}

TEST_CASE("selection honours exclusions and ties") {
  std::mt19937_64 rng(2);
  auto dict = random_dictionary(2, 3, 3, rng);
  const ComplexVector r = dict.atom(1);
  CHECK(select_best_atom(r, dict, {}).atom == 1);
  CHECK(select_best_atom(r, dict, {1}).atom != 1);
  CHECK_THROWS_AS(select_best_atom(r, dict, {0, 1, 2}), ContractViolation);
  auto zero = select_best_atom(ComplexVector::Zero(6), dict, {0});
  CHECK(zero.atom == 1);
  CHECK(zero.gain == 0.0);
  CHECK_THROWS_AS(select_best_atom(ComplexVector::Zero(5), dict, {}), ContractViolation);
}

TEST_CASE("derived selection matches a 720-point per-bin grid") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto dict = random_dictionary(2, 3, 4, rng);
    const ComplexVector r = random_vector(6, rng);
    auto pick = select_best_atom(r, dict, {});
    const double achieved = (r - pick.gain * phased_atom(dict, pick.atom, pick.phases)).squaredNorm();
    CHECK(achieved <= grid_selection_cost(r, dict, 720) + 1e-6);
  }
}

TEST_CASE("literal selection scores by the phasor sum") {
  std::mt19937_64 rng(4);
  auto dict = random_dictionary(2, 5, 4, rng);
  const ComplexVector r = random_vector(10, rng);
  PursuitConfig cfg;
  cfg.selection = SelectionRule::Literal;
  auto pick = select_best_atom(r, dict, {}, cfg);
  double best = -1.0;
  Index best_k = -1;
  for (Index k = 0; k < 4; ++k) {
    Complex sum = 0.0;
    for (Index f = 0; f < 5; ++f) sum += unit_phase(dict.block(f, k).dot(r.segment(2 * f, 2)));
    if (std::abs(sum) > best) {
      best = std::abs(sum);
      best_k = k;
    }
  }
  CHECK(pick.atom == best_k);
  CHECK(pick.score == doctest::Approx(best));
}

TEST_CASE("classic selection matches whole atoms") {
  std::mt19937_64 rng(5);
  auto dict = random_dictionary(2, 4, 5, rng, Gauge::Global);
  const ComplexVector r = random_vector(8, rng);
  PursuitConfig cfg;
  cfg.phase_optimization = false;
  auto pick = select_best_atom(r, dict, {}, cfg);
  Index best = 0;
  for (Index k = 1; k < 5; ++k)
    if (std::abs(dict.atom(k).dot(r)) > std::abs(dict.atom(best).dot(r))) best = k;
  CHECK(pick.atom == best);
  CHECK(pick.gain == doctest::Approx(std::abs(dict.atom(best).dot(r))));
  for (Index f = 1; f < 4; ++f) CHECK(pick.phases(f) == pick.phases(0));
}

TEST_CASE("exact phase update is optimal against a 3600-point grid") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> g(0.1, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 1 + trial % 4;
    const ComplexVector r = random_vector(m, rng);
    const ComplexVector d = random_vector(m, rng) * g(rng);
    const double x = g(rng);
    const Complex old = random_phase(rng);
    const ComplexVector e = r + old * x * d;
    const Complex phi = updated_bin_phase(r, d, x, old);
    CHECK(std::abs(std::abs(phi) - 1.0) < 1e-14);
    CHECK((e - phi * x * d).squaredNorm() <= grid_min_phase_cost(e, d, x, 3600) + 1e-9);
  }
}

TEST_CASE("literal phase update drops the atom energy") {
  ComplexVector r(1), d(1);
  r << Complex(0, 0);
  d << Complex(0.5, 0);
  // exact: z = 0 + 1 * 2 * 0.25 keeps the phase; literal differs only in magnitude of z
  CHECK(updated_bin_phase(r, d, 2.0, Complex(0, 1)) == Complex(0, 1));
  r << Complex(-0.9, 0);
  const Complex exact = updated_bin_phase(r, d, 1.0, Complex(1, 0), PhaseUpdateRule::Exact);
  const Complex literal = updated_bin_phase(r, d, 1.0, Complex(1, 0), PhaseUpdateRule::Literal);
  CHECK(std::abs(exact - Complex(-1, 0)) < 1e-15);   // 0.5*(-0.9) + 0.25 < 0
  CHECK(std::abs(literal - Complex(1, 0)) < 1e-15);  // 0.5*(-0.9) + 1 > 0
}

TEST_CASE("refine_support on an exactly planted support reaches zero") {
  std::mt19937_64 rng(7);
  auto p = planted_frame(rng, 2, 6, 5, {1, 3});
  PursuitConfig cfg;
  cfg.epsilon = 1e-12;
  cfg.max_refine_iters = 10000;
  auto ref = refine_support(p.y, p.dict, p.support, p.phases, cfg);
  CHECK(ref.residual_norm < 1e-12);
  CHECK((ref.gains - p.gains).norm() < 1e-10);
  CHECK(ref.iterations >= 1);
}

TEST_CASE("refine_support residual is consistent and non-increasing") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto dict = random_dictionary(3, 5, 6, rng);
    const ComplexVector y = random_vector(15, rng);
    ComplexMatrix phases(5, 3);
    for (Index i = 0; i < phases.size(); ++i) phases(i) = random_phase(rng);
    PursuitConfig cfg;
    cfg.record_trace = true;
    cfg.epsilon = 1e-9;
    auto ref = refine_support(y, dict, {0, 2, 5}, phases, cfg);
    for (std::size_t i = 1; i < ref.trace.size(); ++i)
      CHECK(ref.trace[i] <= ref.trace[i - 1] * (1.0 + 1e-12) + 1e-15);
    ComplexVector model = ComplexVector::Zero(15);
    Index j = 0;
    for (Index k : {0, 2, 5}) {
      CHECK(ref.gains(j) >= 0.0);
      model += ref.gains(j) * phased_atom(dict, k, ref.phases.col(j));
      ++j;
    }
    CHECK((y - model - ref.residual).norm() < 1e-10);
    CHECK(ref.residual.norm() == doctest::Approx(ref.residual_norm).epsilon(1e-12));
  }
}

TEST_CASE("refine_support rejects bad shapes") {
  std::mt19937_64 rng(9);
  auto dict = random_dictionary(2, 3, 3, rng);
  const ComplexVector y = random_vector(6, rng);
  CHECK_THROWS_AS(refine_support(y, dict, {}, ComplexMatrix(3, 0), {}), ContractViolation);
  CHECK_THROWS_AS(refine_support(y, dict, {0}, ComplexMatrix::Ones(2, 1), {}), ContractViolation);
}

TEST_CASE("po_omp of zero is empty") {
  std::mt19937_64 rng(10);
  auto dict = random_dictionary(2, 4, 3, rng);
  auto res = po_omp(ComplexVector::Zero(8), dict, {});
  CHECK(res.code.support.empty());
  CHECK(res.residual_norm == 0.0);
  CHECK(res.code.gains.isZero());
}

TEST_CASE("po_omp recovers a two-atom phase-rich frame") {
  std::mt19937_64 rng(11);
  auto p = planted_frame(rng, 2, 8, 4, {0, 2});
  PursuitConfig cfg;
  cfg.s_max = 2;
  cfg.tau = 1e-10;
  cfg.epsilon = 1e-10;
  cfg.max_refine_iters = 5000;
  auto res = po_omp(p.y, p.dict, cfg);
  std::vector<Index> sorted = res.code.support;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<Index>{0, 2});
  CHECK(res.residual_norm < 1e-8);
  CHECK(res.code.gains(0) == doctest::Approx(p.gains(0)).epsilon(1e-6));
  CHECK(res.code.gains(2) == doctest::Approx(p.gains(1)).epsilon(1e-6));
  CHECK(res.code.gains(1) == 0.0);
}

TEST_CASE("po_omp invariants on random frames") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto dict = random_dictionary(2, 5, 6, rng);
    const ComplexVector y = random_vector(10, rng);
    PursuitConfig cfg;
    cfg.s_max = 4;
    cfg.record_trace = true;
    auto res = po_omp(y, dict, cfg);
    const auto& trace = res.diagnostics.residual_trace;
    CHECK(trace.front() == doctest::Approx(y.norm()));
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12));
    std::vector<Index> sorted = res.code.support;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(res.code.nnz() <= 4);
    CHECK((y - apply_phased_dictionary(dict, res.phases, res.code) - res.residual).norm() < 1e-12);
    for (Index k = 0; k < 6; ++k) {
      CHECK(res.code.gains(k) >= 0.0);
      CHECK((res.code.gains(k) > 0.0) <= res.code.contains(k));
    }
  }
}

TEST_CASE("po_omp stops at tau") {
  std::mt19937_64 rng(13);
  auto p = planted_frame(rng, 2, 4, 4, {1});
  PursuitConfig cfg;
  cfg.s_max = 3;
  cfg.tau = 1e-6;
  auto res = po_omp(p.y, p.dict, cfg);
  CHECK(res.code.support == std::vector<Index>{1});
  cfg.tau = 10.0 * p.y.norm();
  CHECK(po_omp(p.y, p.dict, cfg).code.support.empty());
}

TEST_CASE("with one bin phase-optimized pursuit is complex OMP") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto dict = random_dictionary(8, 1, 10, rng);
    const ComplexVector y = random_vector(8, rng);
    PursuitConfig cfg;
    cfg.s_max = 3;
    cfg.tau = 0.0;
    auto res = po_omp(y, dict, cfg);
    auto ref = reference_omp(dict.atoms(), y, 3, 0.0);
    CHECK(res.code.support == ref.support);
    for (std::size_t j = 0; j < ref.support.size(); ++j)
      CHECK(res.code.gains(ref.support[j]) == doctest::Approx(std::abs(ref.coefficients(j))).epsilon(1e-10));
    CHECK((res.residual - ref.residual).norm() < 1e-10);
  }
}

TEST_CASE("classic mode is complex OMP on whole atoms") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto dict = random_dictionary(1, 8, 12, rng, Gauge::Global);
    const ComplexVector y = random_vector(8, rng);
    PursuitConfig cfg;
    cfg.s_max = 4;
    cfg.tau = 0.0;
    cfg.phase_optimization = false;
    auto res = po_omp(y, dict, cfg);
    auto ref = reference_omp(dict.atoms(), y, 4, 0.0);
    CHECK(res.code.support == ref.support);
    CHECK((res.residual - ref.residual).norm() < 1e-10);
    for (Index k : res.code.support) {
      const auto& col = res.phases.column(k);
      CHECK((col.array() - col(0)).abs().maxCoeff() < 1e-15);
    }
  }
}
