// Preamble and pilot dictionaries.

#pragma once

#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "umac/core.hpp"

namespace umac {

enum class DictionaryKind { ZadoffChu, GaussianNormalized };

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// x[m] = exp(-j pi u m (m + 1) / N) for prime N.
inline ComplexSignal zadoff_chu(std::uint64_t root, std::uint64_t length) {
  if (!is_prime(length)) throw ConfigError("Zadoff-Chu length must be prime");
  if (root < 1 || root >= length || std::gcd(root, length) != 1)
    throw ConfigError("Zadoff-Chu root must be in [1, N-1] and coprime with N");
  ComplexSignal x(length);
  const std::uint64_t two_n = 2 * length;
  for (std::uint64_t m = 0; m < length; ++m) {
    // Reduce the phase index modulo 2N in integers so large m stays exact.
    const std::uint64_t r = (root % two_n) * ((m * (m + 1)) % two_n) % two_n;
    const double phase = -std::numbers::pi * static_cast<double>(r) / static_cast<double>(length);
    x[m] = cdouble{std::cos(phase), std::sin(phase)};
  }
  return x;
}

/// Immutable column-major dictionary of equal-length columns.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::size_t rows, DictionaryKind kind, double per_column_energy)
      : rows_(rows), kind_(kind), per_column_energy_(per_column_energy) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_ == 0 ? 0 : data_.size() / rows_; }
  DictionaryKind kind() const noexcept { return kind_; }
  double per_column_energy() const noexcept { return per_column_energy_; }

  std::span<const cdouble> column(std::size_t j) const {
    return std::span<const cdouble>(data_).subspan(j * rows_, rows_);
  }
  ComplexSignal column_signal(std::size_t j) const {
    auto c = column(j);
    return ComplexSignal(std::vector<cdouble>(c.begin(), c.end()));
  }

  void push_back(std::span<const cdouble> col) {
    if (col.size() != rows_) throw ConfigError("dictionary column length mismatch");
    data_.insert(data_.end(), col.begin(), col.end());
  }

 private:
  std::size_t rows_ = 0;
  DictionaryKind kind_ = DictionaryKind::GaussianNormalized;
  double per_column_energy_ = 0.0;
  std::vector<cdouble> data_;
};

struct PreambleSpec {
  std::size_t size = 64;
  std::size_t base_length = 139;
  std::size_t repetitions = 2;
  double power_scale = 1.0;
  DictionaryKind kind = DictionaryKind::ZadoffChu;
  std::size_t zc_cyclic_shift = 13;  // N_cs spacing between cyclic shifts

  std::size_t length() const noexcept { return base_length * repetitions; }
};

namespace detail {

inline void scale_to_energy(std::vector<cdouble>& col, double target) {
  const double e = ComplexSignal::energy_of(col);
  if (e <= 0.0) return;
  const double a = std::sqrt(target / e);
  for (auto& v : col) v *= a;
}

inline Dictionary gaussian_dictionary(std::size_t size, std::size_t length, double energy, Rng& rng) {
  Dictionary dict(length, DictionaryKind::GaussianNormalized, energy);
  std::vector<cdouble> col(length);
  for (std::size_t j = 0; j < size; ++j) {
    for (auto& v : col) v = rng.complex_normal(1.0);
    scale_to_energy(col, energy);
    dict.push_back(col);
  }
  return dict;
}

}  // namespace detail

inline std::size_t zadoff_chu_capacity(const PreambleSpec& spec) {
  const std::size_t shifts = spec.zc_cyclic_shift == 0 ? 1 : spec.base_length / spec.zc_cyclic_shift;
  return (spec.base_length - 1) * std::max<std::size_t>(shifts, 1);
}

/// Preamble dictionary with columns of length base_length * repetitions and
/// energy length * power_scale (unit transmit power). ZC index i maps to
/// root 1 + i / shifts and cyclic shift (i % shifts) * N_cs: all shifts of a
/// root come before the next root.
inline Dictionary build_preamble_dictionary(const PreambleSpec& spec, Rng& rng) {
  if (spec.size < 1) throw ConfigError("preamble dictionary size must be >= 1");
  if (spec.base_length < 1 || spec.repetitions < 1)
    throw ConfigError("preamble length and repetitions must be >= 1");
  if (!(spec.power_scale > 0.0)) throw ConfigError("preamble power_scale must be > 0");
  const std::size_t m = spec.length();
  const double energy = static_cast<double>(m) * spec.power_scale;

  if (spec.kind == DictionaryKind::GaussianNormalized)
    return detail::gaussian_dictionary(spec.size, m, energy, rng);

  if (spec.size > zadoff_chu_capacity(spec))
    throw ConfigError("Zadoff-Chu family of length " + std::to_string(spec.base_length) +
                      " cannot provide " + std::to_string(spec.size) +
                      " preambles; use kind GaussianNormalized");
  const std::size_t shifts =
      std::max<std::size_t>(spec.zc_cyclic_shift == 0 ? 1 : spec.base_length / spec.zc_cyclic_shift, 1);
  Dictionary dict(m, DictionaryKind::ZadoffChu, energy);
  std::vector<cdouble> col(m);
  const double amp = std::sqrt(spec.power_scale);
  std::uint64_t root = 0;
  ComplexSignal base;
  for (std::size_t i = 0; i < spec.size; ++i) {
    const std::uint64_t r = 1 + i / shifts;
    if (r != root) {
      root = r;
      base = zadoff_chu(root, spec.base_length);
    }
    const std::size_t shift = (i % shifts) * spec.zc_cyclic_shift;
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep)
      for (std::size_t t = 0; t < spec.base_length; ++t)
        col[rep * spec.base_length + t] = amp * base[(t + shift) % spec.base_length];
    dict.push_back(col);
  }
  return dict;
}

/// Gaussian pilot set with per-column energy = length (unit data power).
inline Dictionary build_pilot_dictionary(std::size_t size, std::size_t length, Rng& rng) {
  if (size < 1 || length < 1) throw ConfigError("pilot dictionary needs size >= 1 and length >= 1");
  return detail::gaussian_dictionary(size, length, static_cast<double>(length), rng);
}

}  // namespace umac
