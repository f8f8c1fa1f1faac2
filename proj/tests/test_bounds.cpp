#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "umac/bounds.hpp"

using namespace umac;
using namespace umac::bounds;

TEST(Aloha, CollisionProbability) {
  EXPECT_EQ(aloha_collision_probability(1, 64), 0.0);
  EXPECT_DOUBLE_EQ(aloha_collision_probability(2, 64), 1.0 / 64.0);
  double p = 1.0;
  for (int i = 0; i < 49; ++i) p *= 63.0 / 64.0;
  EXPECT_NEAR(aloha_collision_probability(50, 64), 1.0 - p, 1e-12);
  EXPECT_NEAR(aloha_collision_probability(50, 64), 0.5378, 1e-4);
}

TEST(Aloha, UnionBoundHolds) {
  std::mt19937_64 g(1);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t ka = 1 + g() % 500;
    const std::uint64_t l = 1 + g() % 1000;
    EXPECT_LE(aloha_collision_probability(ka, l), aloha_collision_upper_bound(ka, l) + 1e-15)
        << "ka=" << ka << " L=" << l;
  }
}

TEST(Capacity, Values) {
  EXPECT_DOUBLE_EQ(awgn_capacity(1.0), 1.0);
  EXPECT_DOUBLE_EQ(awgn_capacity(3.0), 2.0);
  EXPECT_NEAR(awgn_capacity(10.0), std::log(11.0) / std::log(2.0), 1e-12);
  EXPECT_NEAR(awgn_capacity(10.0), 3.4594, 1e-4);
}

TEST(Dispersion, Values) {
  const double l2e = std::log2(std::exp(1.0));
  EXPECT_NEAR(awgn_dispersion(1e-12), 0.0, 1e-10);
  EXPECT_NEAR(awgn_dispersion(1e9), l2e * l2e, 1e-8);
  EXPECT_NEAR(awgn_dispersion(1e9), 2.0814, 1e-4);
  EXPECT_NEAR(awgn_dispersion(1.0), 0.75 * l2e * l2e, 1e-12);
  EXPECT_NEAR(awgn_dispersion(1.0), 1.5611, 1e-4);
}

TEST(QInv, Values) {
  EXPECT_EQ(q_inv(0.5), 0.0);
  const double eps = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(q_inv(eps), 1.0, 1e-12);
  for (double e : {1e-9, 1e-5, 0.01, 0.05, 0.1, 0.3, 0.49}) {
    // 1 - e carries an absolute rounding error of about 1e-16, which moves
    // the inverse by that much over the normal density.
    const double slack = 1e-9 + 4.0 * std::numeric_limits<double>::epsilon() / (std::exp(-0.5 * q_inv(e) * q_inv(e)) / std::sqrt(2.0 * std::numbers::pi));
    EXPECT_NEAR(q_inv(e), -q_inv(1.0 - e), slack) << e;
    EXPECT_NEAR(q_function(q_inv(e)), e, 1e-12 * std::max(1.0, 1.0 / e) * e) << e;
  }
  EXPECT_THROW(q_inv(0.0), ConfigError);
  EXPECT_THROW(q_inv(1.0), ConfigError);
}

TEST(NormalApprox, HalfEpsilonIsCapacity) {
  for (double snr : {0.1, 1.0, 7.3}) {
    BoundQuery q{500.0, 100.0, 0.5, snr};
    EXPECT_DOUBLE_EQ(normal_approx_log_M(q), 500.0 * awgn_capacity(snr));
  }
}

TEST(NormalApprox, LargeBlocklengthApproachesCapacity) {
  // The per-use penalty is sqrt(V/n) Q^{-1}(eps), about 3e-3 at n = 1e6,
  // and shrinks by 10 at n = 1e8.
  const double c = awgn_capacity(2.0);
  const double gap6 = c - normal_approx_log_M({1e6, 1.0, 0.01, 2.0}) / 1e6;
  const double gap8 = c - normal_approx_log_M({1e8, 1.0, 0.01, 2.0}) / 1e8;
  EXPECT_NEAR(gap6, std::sqrt(awgn_dispersion(2.0) / 1e6) * q_inv(0.01), 1e-9);
  EXPECT_NEAR(gap6 / gap8, 10.0, 1e-6);
}

TEST(NormalApprox, Monotone) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> snr_d(0.05, 30.0), eps_d(0.001, 0.4), n_d(50.0, 5000.0);
  for (int i = 0; i < 500; ++i) {
    const double n = n_d(g), eps = eps_d(g), s1 = snr_d(g), s2 = snr_d(g);
    BoundQuery a{n, 1.0, eps, std::min(s1, s2)};
    BoundQuery b{n, 1.0, eps, std::max(s1, s2) * 1.01};
    const double la = normal_approx_log_M(a);
    const double lb = normal_approx_log_M(b);
    // Increasing in snr wherever log M is positive.
    if (la > 0.0) EXPECT_LT(la, lb) << "n=" << n << " eps=" << eps;
    BoundQuery c = a;
    c.n = n * 1.5;
    if (la > 0.0) EXPECT_LT(la, normal_approx_log_M(c));
  }
}

TEST(NormalApprox, InvalidQuery) {
  EXPECT_THROW(normal_approx_log_M({0.5, 1.0, 0.1, 1.0}), ConfigError);
  EXPECT_THROW(normal_approx_log_M({10.0, 1.0, 0.0, 1.0}), ConfigError);
  EXPECT_THROW(normal_approx_log_M({10.0, 1.0, 0.1, 0.0}), ConfigError);
  EXPECT_THROW(normal_approx_log_M({10.0, 0.0, 0.1, 1.0}), ConfigError);
}

TEST(MinSnr, HalfEpsilonInvertsCapacity) {
  const double s = 2.7;
  const double k = 500.0 * std::log2(1.0 + s);
  EXPECT_NEAR(min_snr_single_user(500.0, k, 0.5), s, 1e-6 * s);
}

TEST(MinSnr, OrderingInEpsilon) {
  EXPECT_GT(min_snr_single_user(500, 100, 1e-2), min_snr_single_user(500, 100, 1e-1));
}

TEST(MinSnr, MatchesGridScan) {
  // Scan snr in dB on a 0.001 dB grid and take the first point with log M >= k.
  const double n = 500, k = 100, eps = 1e-2;
  double found_db = std::nan("");
  for (double db = -20.0; db < 20.0; db += 0.001) {
    BoundQuery q{n, k, eps, std::pow(10.0, db / 10.0)};
    if (normal_approx_log_M(q) >= k) {
      found_db = db;
      break;
    }
  }
  ASSERT_FALSE(std::isnan(found_db));
  EXPECT_NEAR(10.0 * std::log10(min_snr_single_user(n, k, eps)), found_db, 0.01);
}

TEST(MinSnr, RoundTrip) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> n_d(100.0, 3000.0), eps_d(1e-4, 0.45), rate_d(0.01, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double n = n_d(g), eps = eps_d(g);
    const double k = std::max(1.0, rate_d(g) * n);
    const double s = min_snr_single_user(n, k, eps);
    EXPECT_NEAR(normal_approx_log_M({n, k, eps, s}), k, 1e-6 * k);
  }
  // Inverse direction: the snr that yields 100 bits at n = 500 is recovered.
  const double s0 = 1.37;
  const double k0 = normal_approx_log_M({500.0, 1.0, 0.05, s0});
  EXPECT_NEAR(min_snr_single_user(500.0, k0, 0.05), s0, 1e-6 * s0);
}

TEST(ReferenceCurve, RoundTrip) {
  std::istringstream in("ka,snr_db\n2,0.5\n10,1.25\n");
  auto c = parse_reference_curve(in, "ref");
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0], (ReferencePoint{2, 0.5}));
  EXPECT_EQ(c.points[1], (ReferencePoint{10, 1.25}));
  EXPECT_EQ(c.label, "ref");
}

TEST(ReferenceCurve, Errors) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_reference_curve(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  std::istringstream empty("");
  EXPECT_THROW(parse_reference_curve(empty), ParseError);
  EXPECT_EQ(line_of("ka,snr_db\n2,1.0\n2,1.5\n"), 3u);
  EXPECT_EQ(line_of("ka,snr_db\n5,1.0\n3,1.5\n"), 3u);
  EXPECT_EQ(line_of("k,snr\n"), 1u);
  EXPECT_EQ(line_of("ka,snr_db\n2,abc\n"), 2u);
  EXPECT_EQ(line_of("ka,snr_db\n2,1,3\n"), 2u);
  EXPECT_EQ(line_of("ka,snr_db\n0,1\n"), 2u);
  EXPECT_THROW(load_reference_curve("/nonexistent/curve.csv"), ConfigError);
}
