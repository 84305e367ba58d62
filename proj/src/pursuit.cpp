#include "poksvd/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poksvd {

namespace {

// Selection gains at or below this fraction of the residual norm are rounding noise.
constexpr double kNegligibleGain = 1e-13;

ComplexMatrix phased_subdictionary(const Dictionary& dict, const std::vector<Index>& support,
                                   const ComplexMatrix& phases) {
  const Index m = dict.channels();
  ComplexMatrix a(dict.frame_dim(), static_cast<Index>(support.size()));
  for (Index j = 0; j < a.cols(); ++j) {
    const Index k = support[static_cast<std::size_t>(j)];
    for (Index f = 0; f < dict.bins(); ++f)
      a.col(j).segment(f * m, m) = phases(f, j) * dict.block(f, k);
  }
  return a;
}

}  // namespace

std::string to_string(SelectionRule rule) {
  return rule == SelectionRule::Derived ? "derived" : "literal";
}

SelectionRule parse_selection_rule(const std::string& name) {
  if (name == "derived") return SelectionRule::Derived;
  if (name == "literal") return SelectionRule::Literal;
  throw ConfigError("selection-rule must be 'derived' or 'literal', got '" + name + "'");
}

void PursuitConfig::validate() const {
  if (s_max < 1) throw ConfigError("s_max must be >= 1");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (max_refine_iters < 1) throw ConfigError("max_refine_iters must be >= 1");
}

AtomSelection select_best_atom(const ComplexVector& residual, const Dictionary& dict,
                               const std::vector<Index>& excluded, const PursuitConfig& cfg) {
  if (residual.size() != dict.frame_dim())
    throw ContractViolation("select_best_atom: residual length != dictionary frame length");
  const Index m = dict.channels();
  const Index bins = dict.bins();

  AtomSelection best;
  bool found = false;
  ComplexVector matches(bins);
  for (Index k = 0; k < dict.size(); ++k) {
    if (std::find(excluded.begin(), excluded.end(), k) != excluded.end()) continue;

    double score = 0.0;
    double gain = 0.0;
    if (cfg.phase_optimization) {
      Complex phasor_sum(0.0, 0.0);
      for (Index f = 0; f < bins; ++f) {
        matches(f) = dict.block(f, k).dot(residual.segment(f * m, m));
        gain += std::abs(matches(f));
        phasor_sum += unit_phase(matches(f));
      }
      score = cfg.selection == SelectionRule::Derived ? gain : std::abs(phasor_sum);
    } else {
      const Complex match = dict.atom(k).dot(residual);
      gain = std::abs(match);
      score = gain;
      matches.setConstant(match);
    }

    if (!found || score > best.score) {
      found = true;
      best.atom = k;
      best.score = score;
      best.gain = gain;
      best.phases = matches.unaryExpr([](Complex z) { return unit_phase(z); });
    }
  }
  if (!found) throw ContractViolation("select_best_atom: every atom is excluded");
  return best;
}

Complex updated_bin_phase(const ComplexVector& residual, const ComplexVector& atom_block,
                          double gain, Complex phi_old, PhaseUpdateRule rule) {
  const double weight = rule == PhaseUpdateRule::Exact ? atom_block.squaredNorm() : 1.0;
  const Complex z = atom_block.dot(residual) + phi_old * gain * weight;
  return unit_phase(z, phi_old);
}

Refinement refine_support(const ComplexVector& y, const Dictionary& dict,
                          const std::vector<Index>& support, const ComplexMatrix& phases_in,
                          const PursuitConfig& cfg) {
  const auto s = static_cast<Index>(support.size());
  if (s == 0) throw ContractViolation("refine_support: empty support");
  if (y.size() != dict.frame_dim()) throw ContractViolation("refine_support: y length mismatch");
  if (phases_in.rows() != dict.bins() || phases_in.cols() != s)
    throw ContractViolation("refine_support: phase matrix must be bins x |support|");

  const Index m = dict.channels();
  Refinement out;
  out.phases = phases_in;
  out.gains = RealVector::Zero(s);

  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_refine_iters; ++it) {
    out.iterations = it;

    const ComplexMatrix a = phased_subdictionary(dict, support, out.phases);
    const LeastSquaresSolution ls = least_squares_solve(a, y);
    if (ls.ridge_fallback) ++out.ridge_fallbacks;
    ComplexVector ls_residual = y - a * ls.x;
    // The solve cannot do worse than the current iterate except by rounding;
    // keep the iterate so the residual never grows.
    if (it > 1 && ls_residual.norm() > previous) break;
    for (Index j = 0; j < s; ++j) {
      out.gains(j) = std::abs(ls.x(j));
      out.phases.col(j) *= unit_phase(ls.x(j));
    }
    out.residual = std::move(ls_residual);
    if (cfg.record_trace) out.trace.push_back(out.residual.norm());

    if (cfg.phase_optimization) {
      for (Index j = 0; j < s; ++j) {
        const Index k = support[static_cast<std::size_t>(j)];
        const double gain = out.gains(j);
        if (gain == 0.0) continue;
        const ComplexVector residual_before = out.residual;
        const ComplexVector phases_before = out.phases.col(j);
        for (Index f = 0; f < dict.bins(); ++f) {
          auto r_f = out.residual.segment(f * m, m);
          const ComplexVector d_f = dict.block(f, k);
          const Complex old_phase = out.phases(f, j);
          const Complex new_phase = updated_bin_phase(r_f, d_f, gain, old_phase, cfg.phase_update);
          if (new_phase == old_phase) continue;
          const ComplexVector candidate = r_f + (gain * (old_phase - new_phase)) * d_f;
          if (candidate.squaredNorm() <= r_f.squaredNorm()) {
            r_f = candidate;
            out.phases(f, j) = new_phase;
          } else {
            ++out.rejected_phase_updates;
          }
        }
        // Per-bin gains can still round to a larger total norm.
        if (out.residual.norm() > residual_before.norm()) {
          out.residual = residual_before;
          out.phases.col(j) = phases_before;
        }
        if (cfg.record_trace) out.trace.push_back(out.residual.norm());
      }
    }

    const double current = out.residual.norm();
    out.residual_norm = current;
    // Without phase freedom one least-squares solve is already optimal.
    if (!cfg.phase_optimization || current == 0.0) break;
    if ((previous - current) < cfg.epsilon * previous) break;
    previous = current;
    if (it == cfg.max_refine_iters) out.hit_cap = true;
  }
  return out;
}

CodingResult po_omp(const ComplexVector& y, const Dictionary& dict, const PursuitConfig& cfg) {
  cfg.validate();
  if (y.size() != dict.frame_dim())
    throw ContractViolation("po_omp: frame length " + std::to_string(y.size()) +
                            " != dictionary frame length " + std::to_string(dict.frame_dim()));

  CodingResult result;
  result.code = SparseCode::empty(dict.size());
  result.phases = PhaseMatrix(dict.bins());

  std::vector<Index> support;
  ComplexMatrix phases(dict.bins(), 0);
  RealVector gains;
  ComplexVector residual = y;
  double residual_norm = y.norm();
  if (cfg.record_trace) result.diagnostics.residual_trace.push_back(residual_norm);

  while (static_cast<Index>(support.size()) < std::min(cfg.s_max, dict.size()) &&
         residual_norm > cfg.tau) {
    const AtomSelection pick = select_best_atom(residual, dict, support, cfg);
    if (pick.gain <= kNegligibleGain * residual_norm) break;

    support.push_back(pick.atom);
    phases.conservativeResize(Eigen::NoChange, phases.cols() + 1);
    phases.col(phases.cols() - 1) = pick.phases;

    Refinement refined = refine_support(y, dict, support, phases, cfg);
    if (refined.residual_norm > residual_norm) {
      support.pop_back();
      phases.conservativeResize(Eigen::NoChange, phases.cols() - 1);
      break;
    }
    phases = std::move(refined.phases);
    gains = std::move(refined.gains);
    residual = std::move(refined.residual);
    residual_norm = refined.residual_norm;

    auto& diag = result.diagnostics;
    diag.refine_iterations += refined.iterations;
    diag.refine_cap_hits += refined.hit_cap ? 1 : 0;
    diag.ridge_fallbacks += refined.ridge_fallbacks;
    diag.rejected_phase_updates += refined.rejected_phase_updates;
    if (cfg.record_trace)
      diag.residual_trace.insert(diag.residual_trace.end(), refined.trace.begin(),
                                 refined.trace.end());
  }

  for (std::size_t j = 0; j < support.size(); ++j) {
    const Index k = support[j];
    result.code.gains(k) = gains(static_cast<Index>(j));
    result.phases.set(k, phases.col(static_cast<Index>(j)));
  }
  result.code.support = std::move(support);
  result.residual = y - apply_phased_dictionary(dict, result.phases, result.code);
  result.residual_norm = result.residual.norm();
  return result;
}

}  // namespace poksvd
