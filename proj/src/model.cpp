#include "poksvd/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poksvd {

void check_atom_gauge(const ComplexVector& atom, Index channels, Gauge gauge,
                      double norm_tolerance) {
  if (channels < 1 || atom.size() % channels != 0)
    throw ContractViolation("atom length " + std::to_string(atom.size()) +
                            " is not a multiple of the channel count");
  const double norm = atom.norm();
  if (std::abs(norm - 1.0) > norm_tolerance)
    throw ContractViolation("atom is not unit norm (norm = " + std::to_string(norm) + ")");
  if (gauge == Gauge::PerBin) {
    for (Index f = 0; f < atom.size() / channels; ++f) {
      const Complex lead = atom(f * channels);
      if (lead.imag() != 0.0 || lead.real() < 0.0)
        throw ContractViolation("first-channel entry of bin " + std::to_string(f) +
                                " is not real nonnegative");
    }
  }
}

Dictionary::Dictionary(Index channels, Index bins, ComplexMatrix atoms, Gauge gauge,
                       double norm_tolerance)
    : channels_(channels), bins_(bins), atoms_(std::move(atoms)), gauge_(gauge) {
  if (channels_ < 1 || bins_ < 1) throw ContractViolation("Dictionary: empty channel or bin axis");
  if (atoms_.rows() != channels_ * bins_)
    throw ContractViolation("Dictionary: atom length " + std::to_string(atoms_.rows()) +
                            " != channels * bins");
  for (Index k = 0; k < atoms_.cols(); ++k) {
    try {
      check_atom_gauge(atoms_.col(k), channels_, gauge_, norm_tolerance);
    } catch (const ContractViolation& e) {
      throw ContractViolation("Dictionary atom " + std::to_string(k) + ": " + e.what());
    }
  }
}

void Dictionary::set_atom(Index k, const ComplexVector& atom) {
  if (k < 0 || k >= size()) throw ContractViolation("Dictionary::set_atom: index out of range");
  if (atom.size() != frame_dim()) throw ContractViolation("Dictionary::set_atom: wrong length");
  check_atom_gauge(atom, channels_, gauge_);
  atoms_.col(k) = atom;
}

bool SparseCode::contains(Index k) const {
  return std::find(support.begin(), support.end(), k) != support.end();
}

const ComplexVector& PhaseMatrix::column(Index k) const {
  auto it = columns_.find(k);
  if (it == columns_.end())
    throw ContractViolation("phase column missing for atom " + std::to_string(k));
  return it->second;
}

void PhaseMatrix::set(Index k, ComplexVector column) {
  if (column.size() != bins_) throw ContractViolation("PhaseMatrix::set: column length != bins");
  columns_[k] = std::move(column);
}

ComplexVector apply_phased_dictionary(const Dictionary& dict, const PhaseMatrix& phases,
                                      const SparseCode& code) {
  if (code.gains.size() != dict.size())
    throw ContractViolation("apply_phased_dictionary: code length != atom count");
  if (phases.bins() != dict.bins())
    throw ContractViolation("apply_phased_dictionary: phase matrix bin count mismatch");
  const Index m = dict.channels();
  ComplexVector out = ComplexVector::Zero(dict.frame_dim());
  for (Index k : code.support) {
    if (k < 0 || k >= dict.size()) throw ContractViolation("support index out of range");
    const ComplexVector& phi = phases.column(k);
    const double gain = code.gains(k);
    for (Index f = 0; f < dict.bins(); ++f)
      out.segment(f * m, m) += (gain * phi(f)) * dict.block(f, k);
  }
  return out;
}

NormalizedAtom normalize_atom(const ComplexVector& atom, Index channels, Gauge gauge) {
  if (channels < 1 || atom.size() % channels != 0)
    throw ContractViolation("normalize_atom: length is not a multiple of the channel count");
  const double gain = atom.norm();
  if (!(gain > 0.0)) throw ComputationError("degenerate atom");

  const Index bins = atom.size() / channels;
  NormalizedAtom out;
  out.gain = gain;
  out.atom = atom / gain;
  out.row_phases = ComplexVector::Ones(bins);

  if (gauge == Gauge::Global) {
    Index best = 0;
    double best_mag = -1.0;
    for (Index f = 0; f < bins; ++f) {
      const double mag = std::abs(out.atom(f * channels));
      if (mag > best_mag) {
        best_mag = mag;
        best = f;
      }
    }
    const Complex rot = std::conj(unit_phase(out.atom(best * channels)));
    out.atom *= rot;
    out.atom(best * channels) = Complex(std::abs(out.atom(best * channels)), 0.0);
    out.row_phases.setConstant(rot);
    return out;
  }

  for (Index f = 0; f < bins; ++f) {
    auto block = out.atom.segment(f * channels, channels);
    Index pivot = 0;
    if (block(0) == Complex(0.0, 0.0)) {
      double best_mag = 0.0;
      for (Index m = 1; m < channels; ++m) {
        if (std::abs(block(m)) > best_mag) {
          best_mag = std::abs(block(m));
          pivot = m;
        }
      }
      if (best_mag == 0.0) continue;
    }
    const Complex rot = std::conj(unit_phase(block(pivot)));
    block *= rot;
    block(pivot) = Complex(std::abs(block(pivot)), 0.0);
    out.row_phases(f) = rot;
  }
  return out;
}

double phase_invariant_correlation(const ComplexVector& a, const ComplexVector& b, Index channels) {
  if (a.size() != b.size() || channels < 1 || a.size() % channels != 0)
    throw ContractViolation("phase_invariant_correlation: shape mismatch");
  double total = 0.0;
  for (Index f = 0; f < a.size() / channels; ++f)
    total += std::abs(b.segment(f * channels, channels).dot(a.segment(f * channels, channels)));
  return total;
}

double coherence(const Dictionary& dict) {
  double worst = 0.0;
  for (Index j = 0; j < dict.size(); ++j)
    for (Index k = j + 1; k < dict.size(); ++k)
      worst = std::max(worst,
                       phase_invariant_correlation(dict.atom(j), dict.atom(k), dict.channels()));
  return worst;
}

}  // namespace poksvd
