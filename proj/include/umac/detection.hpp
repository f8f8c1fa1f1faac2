// Preamble detection (orthogonal matching pursuit), energy detection, pilot
// channel estimation and the cancellation primitive.

#pragma once

#include <limits>
#include <vector>

#include "umac/core.hpp"
#include "umac/sequences.hpp"

namespace umac {

struct OmpStop {
  std::size_t max_iters = 1;
  double residual_threshold = 0.0;  // fraction of energy(y)
};

struct DetectionResult {
  std::vector<std::size_t> indices;  // selection order
  std::vector<cdouble> coefficients;  // least-squares amplitudes, same order
  double residual_energy = 0.0;
  std::vector<double> residual_history;  // entry t = residual after t selections
};

inline constexpr double kOmpPivotTolerance = 1e-12;

/// Greedy sparse recovery: pick the column most correlated with the
/// residual, re-project y onto the span of the picked columns, repeat.
/// The projection is kept as an incrementally built orthonormal basis
/// (modified Gram-Schmidt with one re-orthogonalisation pass); a column whose
/// new direction falls under the pivot tolerance is skipped for good.
inline DetectionResult omp_detect(std::span<const cdouble> y, const Dictionary& dict, const OmpStop& stop) {
  const std::size_t m = dict.rows();
  const std::size_t cols = dict.size();
  if (y.size() != m) throw ConfigError("omp_detect: observation length does not match the dictionary");

  DetectionResult out;
  std::vector<cdouble> r(y.begin(), y.end());
  const double y_energy = ComplexSignal::energy_of(y);
  const double stop_energy = stop.residual_threshold * y_energy;
  double r_energy = y_energy;
  out.residual_history.push_back(r_energy);

  std::vector<double> col_energy(cols);
  for (std::size_t j = 0; j < cols; ++j) col_energy[j] = ComplexSignal::energy_of(dict.column(j));
  std::vector<char> blocked(cols, 0);

  std::vector<std::vector<cdouble>> basis;       // orthonormal q_t
  std::vector<std::vector<cdouble>> r_factor;    // column t of R: <q_i, a_t>, i <= t
  std::vector<cdouble> v(m);

  while (out.indices.size() < stop.max_iters && r_energy > stop_energy) {
    std::size_t best = cols;
    double best_score = -1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (blocked[j] || col_energy[j] <= 0.0) continue;
      const double score = std::norm(inner(dict.column(j), r)) / col_energy[j];
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best == cols) break;

    auto a = dict.column(best);
    std::copy(a.begin(), a.end(), v.begin());
    std::vector<cdouble> rcol(basis.size() + 1, cdouble{0.0, 0.0});
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const cdouble c = inner(basis[i], v);
        rcol[i] += c;
        for (std::size_t t = 0; t < m; ++t) v[t] -= c * basis[i][t];
      }
    }
    const double v_energy = ComplexSignal::energy_of(v);
    blocked[best] = 1;
    if (v_energy <= kOmpPivotTolerance * col_energy[best]) continue;

    const double norm = std::sqrt(v_energy);
    for (auto& x : v) x /= norm;
    rcol.back() = norm;
    const cdouble alpha = inner(v, r);
    for (std::size_t t = 0; t < m; ++t) r[t] -= alpha * v[t];
    r_energy = ComplexSignal::energy_of(r);

    basis.push_back(v);
    r_factor.push_back(std::move(rcol));
    out.indices.push_back(best);
    out.residual_history.push_back(r_energy);
  }

  // Back-substitution R c = Q^H y.
  const std::size_t s = basis.size();
  std::vector<cdouble> b(s);
  for (std::size_t i = 0; i < s; ++i) b[i] = inner(basis[i], y);
  out.coefficients.assign(s, cdouble{0.0, 0.0});
  for (std::size_t ii = s; ii-- > 0;) {
    cdouble acc = b[ii];
    for (std::size_t t = ii + 1; t < s; ++t) acc -= r_factor[t][ii] * out.coefficients[t];
    out.coefficients[ii] = acc / r_factor[ii][ii];
  }
  out.residual_energy = r_energy;
  return out;
}

/// True iff the mean per-sample energy exceeds threshold_factor * sigma^2.
inline bool energy_detect(std::span<const cdouble> segment, double threshold_factor, double noise_power) {
  if (segment.empty()) throw ConfigError("energy_detect: empty segment");
  return ComplexSignal::energy_of(segment) / static_cast<double>(segment.size()) >
         threshold_factor * noise_power;
}

/// Least-squares scalar gain: <p, y> / ||p||^2.
inline cdouble ls_channel_estimate(std::span<const cdouble> y_segment, std::span<const cdouble> pilot) {
  if (y_segment.size() != pilot.size()) throw ConfigError("ls_channel_estimate: length mismatch");
  const double e = ComplexSignal::energy_of(pilot);
  if (!(e > 0.0)) throw ConfigError("ls_channel_estimate: zero-energy pilot");
  return inner(pilot, y_segment) / e;
}

/// y with `contribution` subtracted on [offset, offset + contribution.size()).
inline ComplexSignal subtract(const ComplexSignal& y, std::span<const cdouble> contribution, std::size_t offset = 0) {
  if (offset + contribution.size() > y.size()) throw ConfigError("subtract: contribution does not fit");
  ComplexSignal out = y;
  for (std::size_t t = 0; t < contribution.size(); ++t) out[offset + t] -= contribution[t];
  return out;
}

/// In-place variant used by the receivers' cancellation loops.
inline void subtract_in_place(ComplexSignal& y, std::span<const cdouble> contribution, cdouble scale,
                              std::size_t offset = 0) {
  if (offset + contribution.size() > y.size()) throw ConfigError("subtract: contribution does not fit");
  for (std::size_t t = 0; t < contribution.size(); ++t) y[offset + t] -= scale * contribution[t];
}

}  // namespace umac
