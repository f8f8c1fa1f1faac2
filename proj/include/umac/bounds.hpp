// Closed-form references: Aloha collision probability, AWGN capacity and
// dispersion, the normal approximation and its inverse, and imported
// achievability curves.

#pragma once

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "umac/core.hpp"

namespace umac::bounds {

/// Probability that at least one of the other K_a - 1 users picks a given
/// user's slot out of L.
inline double aloha_collision_probability(std::uint64_t ka, std::uint64_t slots) {
  if (ka < 1 || slots < 1) throw ConfigError("aloha_collision_probability needs ka >= 1, L >= 1");
  const double others = static_cast<double>(ka - 1);
  return -std::expm1(others * std::log1p(-1.0 / static_cast<double>(slots)));
}

inline double aloha_collision_upper_bound(std::uint64_t ka, std::uint64_t slots) {
  return static_cast<double>(ka - 1) / static_cast<double>(slots);
}

/// log2(1 + snr), bits per complex channel use.
inline double awgn_capacity(double snr) {
  if (!(snr > 0.0)) throw ConfigError("snr must be > 0");
  return std::log2(1.0 + snr);
}

/// snr (snr + 2) / (snr + 1)^2 * log2(e)^2.
inline double awgn_dispersion(double snr) {
  if (!(snr > 0.0)) throw ConfigError("snr must be > 0");
  const double log2e = std::numbers::log2e;
  return snr * (snr + 2.0) / ((snr + 1.0) * (snr + 1.0)) * log2e * log2e;
}

/// Upper-tail standard normal probability Q(x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse Q-function. Acklam's rational approximation (relative error about
/// 1e-9) followed by two Halley steps on Q(x) - eps.
inline double q_inv(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("q_inv needs 0 < eps < 1");
  if (eps == 0.5) return 0.0;

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

  // Lower-tail quantile z of p, then Q^{-1}(eps) = -z(eps).
  const double p = eps;
  constexpr double p_low = 0.02425;
  double z;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Phi(z) = 1 - Q(z); Halley on Phi(z) - p.
  for (int it = 0; it < 2; ++it) {
    const double e = 0.5 * std::erfc(-z / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(z * z / 2.0);
    z = z - u / (1.0 + z * u / 2.0);
  }
  return -z;
}

struct BoundQuery {
  double n = 1.0;        // complex channel uses
  double k = 1.0;        // payload bits, log2 M
  double epsilon = 0.1;  // target error probability
  double snr = 1.0;      // P / sigma^2, linear

  void validate() const {
    if (!(n >= 1.0)) throw ConfigError("BoundQuery: n must be >= 1");
    if (!(k >= 1.0)) throw ConfigError("BoundQuery: k must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("BoundQuery: need 0 < epsilon < 1");
    if (!(snr > 0.0)) throw ConfigError("BoundQuery: snr must be > 0");
  }
};

/// n C - sqrt(n V) Q^{-1}(eps). The O(log n) term is dropped.
inline double normal_approx_log_M(const BoundQuery& q) {
  q.validate();
  return q.n * awgn_capacity(q.snr) - std::sqrt(q.n * awgn_dispersion(q.snr)) * q_inv(q.epsilon);
}

/// The unique snr at which normal_approx_log_M equals k.
///
/// log M(snr) can dip below zero for tiny snr when eps < 1/2, but it is
/// increasing wherever it is positive, so a positive target has exactly one
/// crossing. The bracket starts below it and doubles upward.
inline double min_snr_single_user(double n, double k, double epsilon) {
  BoundQuery q{n, k, epsilon, 1.0};
  auto f = [&](double snr) {
    q.snr = snr;
    return normal_approx_log_M(q) - k;
  };
  double lo = 1e-12;
  double hi = 1.0;
  if (!(f(lo) < 0.0)) throw NumericError("min_snr_single_user: lower bracket is not below target");
  int expansions = 0;
  while (f(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 200) throw NumericError("min_snr_single_user: bracket expansion failed");
  }
  std::uintmax_t max_iter = 500;
  auto tol = [](double a, double b) { return std::fabs(b - a) <= 1e-12 * std::fabs(b); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
  if (max_iter >= 500) throw NumericError("min_snr_single_user: root finding did not converge");
  return 0.5 * (a + b);
}

struct ReferencePoint {
  std::uint64_t ka = 0;
  double snr_db = 0.0;
  bool operator==(const ReferencePoint&) const = default;
};

struct ReferenceCurve {
  std::string label;
  std::vector<ReferencePoint> points;
};

/// Parses a `ka,snr_db` CSV. Errors carry the offending line number.
inline ReferenceCurve parse_reference_curve(std::istream& in, std::string label = {}) {
  ReferenceCurve curve;
  curve.label = std::move(label);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "ka,snr_db") throw ParseError("expected header 'ka,snr_db'", line_no);
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected two comma-separated fields", line_no);
    ReferencePoint p;
    try {
      std::size_t used = 0;
      const std::string ka_text = line.substr(0, comma);
      const long long ka = std::stoll(ka_text, &used);
      if (used != ka_text.size() || ka < 1) throw ParseError("invalid ka", line_no);
      p.ka = static_cast<std::uint64_t>(ka);
      const std::string snr_text = line.substr(comma + 1);
      p.snr_db = std::stod(snr_text, &used);
      if (used != snr_text.size()) throw ParseError("invalid snr_db", line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("non-numeric field", line_no);
    }
    if (!curve.points.empty() && p.ka <= curve.points.back().ka)
      throw ParseError("ka must be strictly increasing", line_no);
    curve.points.push_back(p);
  }
  if (!header_seen) throw ParseError("empty reference curve", line_no);
  return curve;
}

inline ReferenceCurve load_reference_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference curve " + path);
  return parse_reference_curve(in, path);
}

}  // namespace umac::bounds
