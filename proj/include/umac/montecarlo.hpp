// PUPE estimation and the minimum-SNR search.

#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "umac/core.hpp"

namespace umac {

struct TrialOutcome {
  std::size_t users = 0;
  std::size_t missed = 0;   // transmitted messages absent from the decoder output
  std::size_t clashed = 0;  // users whose message equals another user's
};

/// One Monte-Carlo trial: (K_a, SNR in dB, trial seed) -> outcome. Must be
/// a pure function of its arguments.
using TrialFunction = std::function<TrialOutcome(std::size_t ka, double snr_db, std::uint64_t seed)>;

struct Scenario {
  std::string label;
  std::string channel;
  TrialFunction trial;
};

struct PupeEstimate {
  double pupe = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double clash_rate = 0.0;
};

inline constexpr double kWilsonZ95 = 1.959963984540054;

struct Interval {
  double low;
  double high;
};

/// Wilson score interval for a proportion p observed over n trials.
inline Interval wilson_interval(double p, std::size_t n, double z = kWilsonZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

/// Worker count: UMAC_BENCH_THREADS if set, else the hardware concurrency.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("UMAC_BENCH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

inline std::uint64_t trial_seed(std::uint64_t root, std::uint64_t trial) { return mix_seed(root, trial); }

/// PUPE over `trials` independent trials. Trial t uses seed
/// trial_seed(seed, t), so any two calls sharing a seed share their trials
/// prefix. Aggregation is over integer counters and does not depend on
/// thread scheduling.
inline PupeEstimate estimate_pupe(const Scenario& scenario, std::size_t ka, double snr_db, std::size_t trials,
                                  std::uint64_t seed, std::size_t threads = worker_count()) {
  if (trials < 1) throw ConfigError("estimate_pupe needs trials >= 1");
  if (ka < 1) throw ConfigError("estimate_pupe needs K_a >= 1");
  if (!scenario.trial) throw ConfigError("unknown scenario '" + scenario.label + "'");

  struct Acc {
    std::uint64_t missed = 0;
    std::uint64_t missed_sq = 0;
    std::uint64_t clashed = 0;
  };
  threads = std::clamp<std::size_t>(threads, 1, trials);
  std::vector<Acc> acc(threads);
  auto work = [&](std::size_t w) {
    for (std::size_t t = w; t < trials; t += threads) {
      const TrialOutcome o = scenario.trial(ka, snr_db, trial_seed(seed, t));
      acc[w].missed += o.missed;
      acc[w].missed_sq += static_cast<std::uint64_t>(o.missed) * o.missed;
      acc[w].clashed += o.clashed;
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  Acc total;
  for (const auto& a : acc) {
    total.missed += a.missed;
    total.missed_sq += a.missed_sq;
    total.clashed += a.clashed;
  }

  PupeEstimate e;
  e.trials = trials;
  e.seed = seed;
  const double n = static_cast<double>(trials);
  const double k = static_cast<double>(ka);
  e.pupe = static_cast<double>(total.missed) / (n * k);
  e.clash_rate = static_cast<double>(total.clashed) / (n * k);
  if (trials > 1) {
    const double mean_sq = static_cast<double>(total.missed_sq) / (k * k);
    const double var = std::max(0.0, (mean_sq - n * e.pupe * e.pupe) / (n - 1.0));
    e.std_error = std::sqrt(var / n);
  }
  const Interval ci = wilson_interval(e.pupe, trials);
  e.ci_low = ci.low;
  e.ci_high = ci.high;
  return e;
}

struct SearchParams {
  double snr_lo_db = -10.0;
  double snr_hi_db = 20.0;
  double tol_db = 0.1;
  std::vector<std::size_t> trials_schedule{200, 1000};  // probe i uses entry min(i, size - 1)
};

struct PupeCurvePoint {
  std::string label;
  std::string channel;
  std::size_t ka = 0;
  bool found = false;
  double min_snr_db = std::numeric_limits<double>::infinity();
  double achieved_pupe = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double snr_max_db = 0.0;
  bool non_monotone = false;
  double clash_rate = 0.0;
  std::size_t probes = 0;
};

/// Bisection on SNR (dB) for the smallest SNR with PUPE <= target, assuming
/// PUPE is non-increasing in SNR. Every probe reuses the same trial seeds.
/// A probe pair whose PUPE rises with SNR by more than five combined
/// standard errors sets `non_monotone`; the result is still reported.
inline PupeCurvePoint min_snr_for_pupe(const Scenario& scenario, std::size_t ka, double target_eps,
                                       const SearchParams& search, std::uint64_t seed) {
  if (!(search.snr_lo_db < search.snr_hi_db)) throw ConfigError("min_snr_for_pupe needs snr_lo < snr_hi");
  if (!(search.tol_db > 0.0)) throw ConfigError("min_snr_for_pupe needs tol_db > 0");
  if (search.trials_schedule.empty()) throw ConfigError("trials_schedule must not be empty");

  PupeCurvePoint pt;
  pt.label = scenario.label;
  pt.channel = scenario.channel;
  pt.ka = ka;
  pt.seed = seed;
  pt.snr_max_db = search.snr_hi_db;

  if (target_eps >= 1.0) {
    pt.found = true;
    pt.min_snr_db = search.snr_lo_db;
    return pt;
  }

  struct Probe {
    double snr_db;
    PupeEstimate est;
  };
  std::vector<Probe> probes;
  auto probe = [&](double snr_db) -> const PupeEstimate& {
    const std::size_t idx = std::min(probes.size(), search.trials_schedule.size() - 1);
    const std::size_t trials = std::max<std::size_t>(1, search.trials_schedule[idx]);
    probes.push_back({snr_db, estimate_pupe(scenario, ka, snr_db, trials, seed)});
    return probes.back().est;
  };
  auto accept = [&](const PupeEstimate& e, double snr_db) {
    pt.min_snr_db = snr_db;
    pt.achieved_pupe = e.pupe;
    pt.ci_low = e.ci_low;
    pt.ci_high = e.ci_high;
    pt.trials = e.trials;
    pt.clash_rate = e.clash_rate;
  };

  double lo = search.snr_lo_db;
  double hi = search.snr_hi_db;
  const PupeEstimate at_hi = probe(hi);
  if (at_hi.pupe > target_eps) {
    pt.found = false;
    pt.achieved_pupe = at_hi.pupe;
    pt.ci_low = at_hi.ci_low;
    pt.ci_high = at_hi.ci_high;
    pt.trials = at_hi.trials;
    pt.clash_rate = at_hi.clash_rate;
  } else {
    pt.found = true;
    accept(at_hi, hi);
    const PupeEstimate at_lo = probe(lo);
    if (at_lo.pupe <= target_eps) {
      accept(at_lo, lo);
    } else {
      while (hi - lo > search.tol_db) {
        const double mid = 0.5 * (lo + hi);
        const PupeEstimate e = probe(mid);
        if (e.pupe <= target_eps) {
          hi = mid;
          accept(e, mid);
        } else {
          lo = mid;
        }
      }
    }
  }

  pt.probes = probes.size();
  for (const auto& a : probes)
    for (const auto& b : probes) {
      if (!(a.snr_db < b.snr_db)) continue;
      const double se = std::sqrt(a.est.std_error * a.est.std_error + b.est.std_error * b.est.std_error);
      if (b.est.pupe - a.est.pupe > 5.0 * se && b.est.pupe > a.est.pupe) pt.non_monotone = true;
    }
  return pt;
}

/// One search per K_a with an independent root seed mix_seed(seed, K_a), so
/// each point is reproducible on its own and independent of the list order.
inline std::vector<PupeCurvePoint> run_sweep(const Scenario& scenario, std::span<const std::size_t> ka_list,
                                             double target_eps, const SearchParams& search, std::uint64_t seed) {
  std::vector<PupeCurvePoint> out;
  out.reserve(ka_list.size());
  for (auto ka : ka_list) out.push_back(min_snr_for_pupe(scenario, ka, target_eps, search, mix_seed(seed, ka)));
  return out;
}

}  // namespace umac
