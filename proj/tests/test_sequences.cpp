#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "umac/sequences.hpp"

using namespace umac;

namespace {

cdouble cyclic_corr(const ComplexSignal& a, const ComplexSignal& b, std::size_t lag) {
  const std::size_t n = a.size();
  cdouble s{0.0, 0.0};
  for (std::size_t m = 0; m < n; ++m) s += a[m] * std::conj(b[(m + lag) % n]);
  return s;
}

double max_coherence(const Dictionary& d, std::size_t pairs, Rng& rng) {
  double worst = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto i = rng.uniform_int(d.size());
    auto j = rng.uniform_int(d.size());
    if (i == j) j = (j + 1) % d.size();
    worst = std::max(worst, std::abs(inner(d.column(i), d.column(j))) / d.per_column_energy());
  }
  return worst;
}

}  // namespace

TEST(ZadoffChu, UnitModulus) {
  for (std::uint64_t root : {1u, 2u, 25u, 138u}) {
    auto x = zadoff_chu(root, 139);
    for (auto v : x) EXPECT_NEAR(std::abs(v), 1.0, 1e-15);
  }
}

TEST(ZadoffChu, MatchesDirectFormula) {
  auto x = zadoff_chu(5, 139);
  for (std::size_t m = 0; m < 139; ++m) {
    const double phase = -M_PI * 5.0 * static_cast<double>(m) * static_cast<double>(m + 1) / 139.0;
    EXPECT_NEAR(std::abs(x[m] - std::polar(1.0, phase)), 0.0, 1e-9);
  }
}

TEST(ZadoffChu, AutocorrelationSidelobesVanish) {
  for (std::uint64_t n : {7u, 139u}) {
    for (std::uint64_t root = 1; root < n; ++root) {
      auto x = zadoff_chu(root, n);
      EXPECT_NEAR(std::abs(cyclic_corr(x, x, 0)), static_cast<double>(n), 1e-9);
      for (std::size_t lag = 1; lag < n; ++lag)
        EXPECT_LT(std::abs(cyclic_corr(x, x, lag)), 1e-9) << "N=" << n << " u=" << root << " lag=" << lag;
    }
  }
}

TEST(ZadoffChu, CrossCorrelationIsSqrtN) {
  auto a = zadoff_chu(1, 139);
  auto b = zadoff_chu(2, 139);
  for (std::size_t lag = 0; lag < 139; ++lag)
    EXPECT_NEAR(std::abs(cyclic_corr(a, b, lag)), std::sqrt(139.0), 1e-6);
}

TEST(ZadoffChu, InvalidArguments) {
  EXPECT_THROW(zadoff_chu(1, 138), ConfigError);
  EXPECT_THROW(zadoff_chu(0, 139), ConfigError);
  EXPECT_THROW(zadoff_chu(139, 139), ConfigError);
}

TEST(PreambleDictionary, StandardZadoffChuSet) {
  PreambleSpec spec;
  Rng rng(0);
  auto d = build_preamble_dictionary(spec, rng);
  ASSERT_EQ(d.size(), 64u);
  ASSERT_EQ(d.rows(), 278u);
  EXPECT_EQ(d.kind(), DictionaryKind::ZadoffChu);
  for (std::size_t j = 0; j < d.size(); ++j) {
    auto c = d.column(j);
    EXPECT_NEAR(ComplexSignal::energy_of(c), 278.0, 278.0 * 1e-9);
    for (std::size_t t = 0; t < 139; ++t) {
      EXPECT_NEAR(std::abs(c[t]), 1.0, 1e-12);
      EXPECT_EQ(c[t], c[t + 139]);
    }
  }
  // Distinct columns.
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j)
      EXPECT_LT(std::abs(inner(d.column(i), d.column(j))), 0.99 * 278.0);
}

TEST(PreambleDictionary, ShiftsOfARootComeFirst) {
  PreambleSpec spec;
  spec.size = 12;
  spec.repetitions = 1;
  Rng rng(0);
  auto d = build_preamble_dictionary(spec, rng);
  const std::size_t shifts = 139 / 13;
  auto root1 = zadoff_chu(1, 139);
  auto root2 = zadoff_chu(2, 139);
  for (std::size_t t = 0; t < 139; ++t) {
    EXPECT_EQ(d.column(1)[t], root1[(t + 13) % 139]);
    EXPECT_EQ(d.column(shifts)[t], root2[t]);
  }
}

TEST(PreambleDictionary, PowerScale) {
  PreambleSpec spec;
  spec.size = 3;
  spec.power_scale = 1.0 / 12.0;
  Rng rng(0);
  auto d = build_preamble_dictionary(spec, rng);
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_NEAR(ComplexSignal::energy_of(d.column(j)), 278.0 / 12.0, 1e-9 * 278.0 / 12.0);
}

TEST(PreambleDictionary, ZadoffChuOverflowSuggestsGaussian) {
  PreambleSpec spec;
  spec.size = 2000;  // 138 roots x 10 shifts = 1380 available
  Rng rng(0);
  try {
    build_preamble_dictionary(spec, rng);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("GaussianNormalized"), std::string::npos);
  }
}

TEST(PreambleDictionary, GaussianEnergyExact) {
  for (std::size_t size : {1u, 7u, 300u}) {
    PreambleSpec spec;
    spec.kind = DictionaryKind::GaussianNormalized;
    spec.size = size;
    spec.base_length = 50;
    spec.repetitions = 3;
    spec.power_scale = 0.5;
    Rng rng(size);
    auto d = build_preamble_dictionary(spec, rng);
    ASSERT_EQ(d.size(), size);
    for (std::size_t j = 0; j < size; ++j)
      EXPECT_NEAR(ComplexSignal::energy_of(d.column(j)), 75.0, 75.0 * 1e-9);
  }
}

TEST(PreambleDictionary, LargeGaussianCoherence) {
  PreambleSpec spec;
  spec.kind = DictionaryKind::GaussianNormalized;
  spec.size = 8192;
  spec.base_length = 1778;
  spec.repetitions = 1;
  Rng rng(1);
  auto d = build_preamble_dictionary(spec, rng);
  Rng pick(2);
  EXPECT_LT(max_coherence(d, 20000, pick), 0.2);
}

TEST(PreambleDictionary, GaussianDeterministic) {
  PreambleSpec spec;
  spec.kind = DictionaryKind::GaussianNormalized;
  spec.size = 16;
  Rng a(99), b(99), c(100);
  auto da = build_preamble_dictionary(spec, a);
  auto db = build_preamble_dictionary(spec, b);
  auto dc = build_preamble_dictionary(spec, c);
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_TRUE(std::equal(da.column(j).begin(), da.column(j).end(), db.column(j).begin()));
    EXPECT_FALSE(std::equal(da.column(j).begin(), da.column(j).end(), dc.column(j).begin()));
  }
}

TEST(PreambleDictionary, InvalidSpec) {
  Rng rng(0);
  PreambleSpec spec;
  spec.size = 0;
  EXPECT_THROW(build_preamble_dictionary(spec, rng), ConfigError);
  spec = {};
  spec.power_scale = 0.0;
  EXPECT_THROW(build_preamble_dictionary(spec, rng), ConfigError);
  spec = {};
  spec.base_length = 140;
  EXPECT_THROW(build_preamble_dictionary(spec, rng), ConfigError);
}

TEST(PilotDictionary, Basics) {
  Rng rng(0);
  auto one = build_pilot_dictionary(1, 50, rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(ComplexSignal::energy_of(one.column(0)), 50.0, 50e-9);

  int low = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng r(seed);
    auto d = build_pilot_dictionary(2, 50, r);
    EXPECT_NEAR(ComplexSignal::energy_of(d.column(1)), 50.0, 50e-9);
    if (std::abs(inner(d.column(0), d.column(1))) / 50.0 < 0.5) ++low;
  }
  EXPECT_GE(low, 990);
  EXPECT_THROW(build_pilot_dictionary(0, 50, rng), ConfigError);
}

TEST(Dictionary, ColumnLengthMismatch) {
  Dictionary d(4, DictionaryKind::GaussianNormalized, 4.0);
  std::vector<cdouble> col(3);
  EXPECT_THROW(d.push_back(col), ConfigError);
}
