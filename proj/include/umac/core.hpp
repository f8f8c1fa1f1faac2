// Core value types shared by every umac module: complex signals, messages,
// seeded random streams and the error hierarchy.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace umac {

using cdouble = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or mismatched dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical routine could not converge or bracket a root.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A finite sequence of complex channel uses.
class ComplexSignal {
 public:
  ComplexSignal() = default;
  explicit ComplexSignal(std::size_t n) : samples_(n, cdouble{0.0, 0.0}) {}
  explicit ComplexSignal(std::vector<cdouble> samples) : samples_(std::move(samples)) {}

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  cdouble& operator[](std::size_t i) { return samples_[i]; }
  const cdouble& operator[](std::size_t i) const { return samples_[i]; }

  std::span<cdouble> samples() noexcept { return samples_; }
  std::span<const cdouble> samples() const noexcept { return samples_; }

  auto begin() noexcept { return samples_.begin(); }
  auto end() noexcept { return samples_.end(); }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  double energy() const noexcept { return energy_of(samples_); }

  static double energy_of(std::span<const cdouble> x) noexcept {
    double e = 0.0;
    for (const auto& v : x) e += std::norm(v);
    return e;
  }

  ComplexSignal& operator+=(const ComplexSignal& other) {
    if (other.size() != size()) throw ConfigError("signal length mismatch in +=");
    for (std::size_t i = 0; i < size(); ++i) samples_[i] += other.samples_[i];
    return *this;
  }

  ComplexSignal& operator*=(cdouble a) noexcept {
    for (auto& v : samples_) v *= a;
    return *this;
  }

  friend bool operator==(const ComplexSignal&, const ComplexSignal&) = default;

 private:
  std::vector<cdouble> samples_;
};

inline cdouble inner(std::span<const cdouble> a, std::span<const cdouble> b) {
  // <a, b> = sum conj(a_i) b_i
  cdouble s{0.0, 0.0};
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Payload of a user: an ordered bit string. Ordering makes sets of decoded
/// messages well defined.
struct Message {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  auto operator<=>(const Message&) const = default;

  /// Integer value of the first min(64, size) bits, MSB first.
  std::uint64_t to_index() const noexcept {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bits.size() && i < 64; ++i) v = (v << 1) | (bits[i] & 1u);
    return v;
  }

  static Message from_index(std::uint64_t value, std::size_t k) {
    Message m;
    m.bits.resize(k, 0);
    for (std::size_t i = 0; i < k && i < 64; ++i) m.bits[k - 1 - i] = (value >> i) & 1u;
    return m;
  }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) noexcept {
  return splitmix64(root ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded random source. Child streams are derived from (seed, stream id)
/// only, so parallel consumers never share state and results do not depend
/// on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  std::mt19937_64& engine() noexcept { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  /// Circularly-symmetric complex normal with E|z|^2 = variance.
  cdouble complex_normal(double variance = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(engine_);
    const double im = nd(engine_);
    return {re, im};
  }

  Message message(std::size_t k) {
    Message m;
    m.bits.resize(k);
    for (auto& b : m.bits) b = static_cast<std::uint8_t>(engine_() & 1u);
    return m;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace umac
