// End-to-end encoders and receivers: slotted Aloha, 5G NR two-step random
// access (message A) and its repetition-based SB-IDMA extension.
//
// Two-step access is the rho = 1 case of the repetition engine, so the two
// share one encoder and one receiver.

#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "umac/channel.hpp"
#include "umac/codec.hpp"
#include "umac/core.hpp"
#include "umac/detection.hpp"
#include "umac/sequences.hpp"

namespace umac {

enum class PreambleMapping { OneToOne, ManyToOne };
enum class EnergyPolicy { SplitAcrossCopies, PerCopyFull };
enum class ReceiverMode { TIN, TIN_SIC };

// ---------------------------------------------------------------------------
// Access patterns

/// C(n, k), saturating at uint64 max.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i is C(n - k + i, i), always an integer.
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

/// Colexicographic unranking: index -> sorted rho-subset of {0..N-1}.
inline std::vector<std::size_t> pattern_from_index(std::uint64_t index, std::size_t n, std::size_t rho) {
  if (rho < 1 || rho > n) throw ConfigError("pattern_from_index needs 1 <= rho <= N");
  if (index >= binomial(n, rho)) throw ConfigError("pattern index out of range");
  std::vector<std::size_t> out(rho);
  std::uint64_t rest = index;
  std::size_t upper = n;
  for (std::size_t i = rho; i >= 1; --i) {
    std::size_t c = i - 1;
    // Largest c < upper with C(c, i) <= rest.
    std::size_t lo = i - 1, hi = upper - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (binomial(mid, i) <= rest)
        lo = mid;
      else
        hi = mid - 1;
    }
    c = lo;
    out[i - 1] = c;
    rest -= binomial(c, i);
    upper = c;
  }
  return out;
}

inline std::uint64_t pattern_rank(std::span<const std::size_t> pattern) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) r += binomial(pattern[i], i + 1);
  return r;
}

// ---------------------------------------------------------------------------
// Configurations

struct TwoStepConfig {
  PreambleSpec preamble;
  std::size_t n_occasions = 64;
  std::size_t occasion_len = 250;
  std::size_t pilot_len = 0;
  CodecSpec codec;
  PreambleMapping mapping = PreambleMapping::OneToOne;
  ChannelModel channel = ChannelModel::AWGN;

  std::size_t n_preambles() const noexcept { return preamble.size; }
  std::size_t preamble_region() const noexcept { return preamble.length(); }
  std::size_t frame_length() const noexcept { return preamble_region() + n_occasions * occasion_len; }
  std::size_t n_pilots() const noexcept {
    return pilot_len == 0 ? 0 : (preamble.size + n_occasions - 1) / n_occasions;
  }

  void validate() const {
    codec.validate();
    if (n_occasions < 1) throw ConfigError("n_occasions must be >= 1");
    if (occasion_len != pilot_len + codec.channel_uses())
      throw ConfigError("occasion_len must equal pilot_len + codeword_bits / 2 (" +
                        std::to_string(occasion_len) + " != " + std::to_string(pilot_len) + " + " +
                        std::to_string(codec.channel_uses()) + ")");
    if (mapping == PreambleMapping::OneToOne && preamble.size != n_occasions)
      throw ConfigError("one-to-one mapping requires n_preambles == n_occasions");
    if (mapping == PreambleMapping::ManyToOne && preamble.size < n_occasions)
      throw ConfigError("many-to-one mapping requires n_preambles >= n_occasions");
  }
};

struct SbidmaConfig {
  TwoStepConfig base;
  std::size_t rho = 2;
  EnergyPolicy energy_policy = EnergyPolicy::SplitAcrossCopies;

  std::uint64_t pattern_space_size() const { return binomial(base.n_occasions, rho); }

  void validate() const {
    base.validate();
    if (rho < 1 || rho > base.n_occasions) throw ConfigError("rho must be in [1, n_occasions]");
  }
};

// ---------------------------------------------------------------------------
// Ground truth and receiver output

struct TransmissionRecord {
  Message message;
  std::size_t preamble = 0;               // preamble index, or slot for slotted Aloha
  std::vector<std::size_t> occasions;     // occasions carrying a copy
  std::size_t pilot = 0;
  double copy_amplitude = 1.0;            // per-copy amplitude relative to sqrt(P)
  cdouble gain{1.0, 0.0};                 // channel gain H (1 on AWGN)
  ComplexSignal frame;                    // transmitted frame, before the channel gain
};

struct RoundDiagnostics {
  std::size_t detected = 0;
  std::size_t attempted = 0;
  std::size_t decoded = 0;
};

struct DecodeOutcome {
  std::set<Message> decoded_messages;
  std::set<std::size_t> detected_preambles;
  std::size_t sic_rounds = 0;
  std::vector<RoundDiagnostics> rounds;
};

/// Receiver-side knobs that are not part of the protocol itself.
struct ReceiverOptions {
  double omp_iters_per_user = 2.0;        // max_iters = factor * remaining users
  double omp_residual_factor = 1.1;       // stop when residual <= factor * expected noise energy
  double ml_residual_factor = 2.0;        // ML acceptance: residual <= factor * sigma^2 per sample
  double energy_threshold_factor = 1.5;   // slotted Aloha per-slot energy test
  double tie_tolerance = 1e-9;            // equal-gain users are indistinguishable
};

struct ReceiveContext {
  double noise_power = 1.0;
  double power = 1.0;
  ChannelModel channel = ChannelModel::AWGN;
};

namespace detail {

/// Strongest uncancelled user among `group`, or none when the top gains tie.
inline std::optional<std::size_t> strongest_distinguishable(std::span<const std::size_t> group,
                                                            std::span<const TransmissionRecord> genie,
                                                            double tie_tolerance) {
  if (group.empty()) return std::nullopt;
  std::size_t best = group.front();
  double best_g = std::norm(genie[best].gain);
  for (std::size_t i = 1; i < group.size(); ++i) {
    const double g = std::norm(genie[group[i]].gain);
    if (g > best_g) {
      best_g = g;
      best = group[i];
    }
  }
  for (auto u : group)
    if (u != best && std::norm(genie[u].gain) >= best_g * (1.0 - tie_tolerance)) return std::nullopt;
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Repetition engine (two-step is rho = 1)

class RepetitionProtocol {
 public:
  RepetitionProtocol(SbidmaConfig cfg, std::uint64_t seed, ReceiverOptions options = {})
      : cfg_(std::move(cfg)), options_(options), codec_(cfg_.base.codec, mix_seed(seed, 3)) {
    cfg_.validate();
    Rng pre_rng(mix_seed(seed, 1));
    preambles_ = build_preamble_dictionary(cfg_.base.preamble, pre_rng);
    if (cfg_.base.pilot_len > 0) {
      Rng pilot_rng(mix_seed(seed, 2));
      pilots_ = build_pilot_dictionary(cfg_.base.n_pilots(), cfg_.base.pilot_len, pilot_rng);
    }
    const std::uint64_t patterns = cfg_.pattern_space_size();
    const std::uint64_t n_pre = cfg_.base.n_preambles();
    const std::size_t n = cfg_.base.n_occasions;
    patterns_.resize(n_pre);
    pilot_of_.resize(n_pre);
    for (std::uint64_t p = 0; p < n_pre; ++p) {
      // Every pattern is used when there are enough preambles; otherwise the
      // preambles are spread evenly over the pattern index range.
      const std::uint64_t pattern =
          n_pre >= patterns ? p % patterns
                            : static_cast<std::uint64_t>(static_cast<unsigned __int128>(p) * patterns / n_pre);
      patterns_[p] = pattern_from_index(pattern, n, cfg_.rho);
      pilot_of_[p] = cfg_.base.n_pilots() == 0 ? 0 : (p / n) % cfg_.base.n_pilots();
    }
    copy_amplitude_ = cfg_.energy_policy == EnergyPolicy::SplitAcrossCopies
                          ? 1.0 / std::sqrt(static_cast<double>(cfg_.rho))
                          : 1.0;
  }

  const SbidmaConfig& config() const noexcept { return cfg_; }
  const Codec& codec() const noexcept { return codec_; }
  const Dictionary& preamble_dictionary() const noexcept { return preambles_; }
  const Dictionary& pilot_dictionary() const noexcept { return pilots_; }
  std::size_t frame_length() const noexcept { return cfg_.base.frame_length(); }
  std::size_t payload_bits() const noexcept { return cfg_.base.codec.payload_bits; }

  std::span<const std::size_t> occasions_of(std::size_t preamble) const { return patterns_.at(preamble); }
  std::size_t pilot_of(std::size_t preamble) const { return pilot_of_.at(preamble); }

  std::size_t occasion_offset(std::size_t occasion) const {
    return cfg_.base.preamble_region() + occasion * cfg_.base.occasion_len;
  }

  /// Frame for one user with a uniformly drawn preamble.
  TransmissionRecord encode(const Message& message, double power, Rng& rng) const {
    return encode_with_preamble(message, power, static_cast<std::size_t>(rng.uniform_int(cfg_.base.n_preambles())));
  }

  TransmissionRecord encode_with_preamble(const Message& message, double power, std::size_t preamble) const {
    if (preamble >= cfg_.base.n_preambles()) throw ConfigError("preamble index out of range");
    TransmissionRecord rec;
    rec.message = message;
    rec.preamble = preamble;
    rec.occasions = patterns_[preamble];
    rec.pilot = pilot_of_[preamble];
    rec.copy_amplitude = copy_amplitude_;
    rec.frame = ComplexSignal(frame_length());

    const double amp = std::sqrt(power);
    auto pre = preambles_.column(preamble);
    for (std::size_t t = 0; t < pre.size(); ++t) rec.frame[t] = amp * pre[t];

    const ComplexSignal w = codec_.encode(message);
    const double copy_amp = amp * copy_amplitude_;
    const std::size_t pilot_len = cfg_.base.pilot_len;
    for (auto occ : rec.occasions) {
      const std::size_t off = occasion_offset(occ);
      if (pilot_len > 0) {
        auto pilot = pilots_.column(rec.pilot);
        for (std::size_t t = 0; t < pilot_len; ++t) rec.frame[off + t] = copy_amp * pilot[t];
      }
      for (std::size_t t = 0; t < w.size(); ++t) rec.frame[off + pilot_len + t] = copy_amp * w[t];
    }
    return rec;
  }

  /// Message-A receiver. `genie` must carry the true gains; it is read for
  /// the oracle codec's SINR and for ideal cancellation only.
  DecodeOutcome receive(const ComplexSignal& y_in, ReceiverMode mode, std::span<const TransmissionRecord> genie,
                        const ReceiveContext& ctx) const {
    if (y_in.size() != frame_length()) throw ConfigError("receive: frame length mismatch");
    ComplexSignal y = y_in;
    DecodeOutcome out;
    const std::size_t users = genie.size();
    std::vector<char> cancelled(users, 0);
    std::size_t remaining = users;

    // occupancy[c] = users with a copy in occasion c
    std::vector<std::vector<std::size_t>> occupancy(cfg_.base.n_occasions);
    std::map<std::size_t, std::vector<std::size_t>> by_preamble;
    for (std::size_t u = 0; u < users; ++u) {
      for (auto c : genie[u].occasions) occupancy[c].push_back(u);
      by_preamble[genie[u].preamble].push_back(u);
    }

    const std::size_t max_rounds = mode == ReceiverMode::TIN ? 1 : users + 1;
    const std::size_t pre_len = cfg_.base.preamble_region();
    for (std::size_t round = 0; round < std::max<std::size_t>(max_rounds, 1); ++round) {
      RoundDiagnostics diag;
      ++out.sic_rounds;
      auto y_pre = y.samples().first(pre_len);
      const double y_pre_energy = ComplexSignal::energy_of(y_pre);
      OmpStop stop;
      stop.max_iters = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(options_.omp_iters_per_user * static_cast<double>(std::max<std::size_t>(remaining, 1)))));
      stop.residual_threshold =
          y_pre_energy > 0.0 ? options_.omp_residual_factor * static_cast<double>(pre_len) * ctx.noise_power / y_pre_energy : 0.0;
      const DetectionResult det = omp_detect(y_pre, preambles_, stop);
      diag.detected = det.indices.size();

      std::vector<std::size_t> order(det.indices.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return det.indices[a] < det.indices[b]; });

      std::vector<std::size_t> to_cancel;
      for (auto k : order) {
        const std::size_t p = det.indices[k];
        out.detected_preambles.insert(p);
        std::vector<std::size_t> group;
        if (auto it = by_preamble.find(p); it != by_preamble.end())
          for (auto u : it->second)
            if (!cancelled[u]) group.push_back(u);
        ++diag.attempted;
        auto decoded = attempt(y, p, det.coefficients[k], group, genie, cancelled, occupancy, ctx);
        if (!decoded) continue;
        const bool fresh = out.decoded_messages.insert(decoded->message).second;
        if (fresh) ++diag.decoded;
        if (decoded->user &&
            std::find(to_cancel.begin(), to_cancel.end(), *decoded->user) == to_cancel.end())
          to_cancel.push_back(*decoded->user);
      }
      out.rounds.push_back(diag);
      if (mode == ReceiverMode::TIN || to_cancel.empty()) break;
      for (auto u : to_cancel) {
        subtract_in_place(y, genie[u].frame.samples(), genie[u].gain);
        cancelled[u] = 1;
        --remaining;
      }
      if (remaining == 0) break;
    }
    return out;
  }

 private:
  struct Attempt {
    Message message;
    std::optional<std::size_t> user;  // genie user to cancel, when the message is correct
  };

  std::optional<Attempt> attempt(const ComplexSignal& y, std::size_t preamble, cdouble omp_coefficient,
                                 std::span<const std::size_t> group, std::span<const TransmissionRecord> genie,
                                 std::span<const char> cancelled,
                                 const std::vector<std::vector<std::size_t>>& occupancy,
                                 const ReceiveContext& ctx) const {
    const auto& occs = patterns_[preamble];
    const std::size_t pilot_len = cfg_.base.pilot_len;
    const double amp = std::sqrt(ctx.power) * copy_amplitude_;

    // Per-copy effective gain estimate on the unit-power codeword.
    std::vector<cdouble> est(occs.size());
    for (std::size_t i = 0; i < occs.size(); ++i) {
      if (ctx.channel == ChannelModel::AWGN) {
        est[i] = amp;
      } else if (pilot_len > 0) {
        const auto seg = y.samples().subspan(occasion_offset(occs[i]), pilot_len);
        est[i] = ls_channel_estimate(seg, pilots_.column(pilot_of_[preamble]));
      } else {
        est[i] = omp_coefficient * copy_amplitude_;
      }
    }

    const std::size_t data_len = codec_.length();
    if (codec_.spec().model == CodecModel::OracleThreshold) {
      auto target = detail::strongest_distinguishable(group, genie, options_.tie_tolerance);
      if (!target) return std::nullopt;
      const auto& tu = genie[*target];
      double sinr = 0.0;
      for (std::size_t i = 0; i < occs.size(); ++i) {
        const cdouble g = tu.gain * std::sqrt(ctx.power) * tu.copy_amplitude;
        double interference = 0.0;
        for (auto v : occupancy[occs[i]]) {
          if (v == *target || cancelled[v]) continue;
          interference += std::norm(genie[v].gain) * ctx.power * genie[v].copy_amplitude * genie[v].copy_amplitude;
        }
        const double mismatch = std::norm(est[i] - g);
        sinr += std::norm(g) / (ctx.noise_power + interference + mismatch);
      }
      auto r = codec_.decode({}, sinr, tu.message);
      if (!r.success) return std::nullopt;
      return Attempt{r.message, *target};
    }

    // Maximal-ratio combining of the data blocks, then exhaustive ML.
    double norm_sum = 0.0;
    for (auto g : est) norm_sum += std::norm(g);
    if (!(norm_sum > 0.0)) return std::nullopt;
    std::vector<cdouble> combined(data_len, cdouble{0.0, 0.0});
    for (std::size_t i = 0; i < occs.size(); ++i) {
      const auto seg = y.samples().subspan(occasion_offset(occs[i]) + pilot_len, data_len);
      const cdouble w = std::conj(est[i]) / norm_sum;
      for (std::size_t t = 0; t < data_len; ++t) combined[t] += w * seg[t];
    }
    auto r = codec_.decode(combined, 0.0);
    const ComplexSignal cw = codec_.encode(r.message);
    double residual = 0.0;
    for (std::size_t i = 0; i < occs.size(); ++i) {
      const auto seg = y.samples().subspan(occasion_offset(occs[i]) + pilot_len, data_len);
      for (std::size_t t = 0; t < data_len; ++t) residual += std::norm(seg[t] - est[i] * cw[t]);
    }
    const double allowed = options_.ml_residual_factor * ctx.noise_power * static_cast<double>(data_len * occs.size());
    if (residual > allowed) return std::nullopt;
    Attempt a{r.message, std::nullopt};
    for (auto u : group)
      if (genie[u].message == r.message) {
        a.user = u;
        break;
      }
    return a;
  }

  SbidmaConfig cfg_;
  ReceiverOptions options_;
  Codec codec_;
  Dictionary preambles_;
  Dictionary pilots_;
  std::vector<std::vector<std::size_t>> patterns_;
  std::vector<std::size_t> pilot_of_;
  double copy_amplitude_ = 1.0;
};

/// Two-step random access: the repetition engine with a single copy.
class TwoStepProtocol : public RepetitionProtocol {
 public:
  TwoStepProtocol(const TwoStepConfig& cfg, std::uint64_t seed, ReceiverOptions options = {})
      : RepetitionProtocol(SbidmaConfig{cfg, 1, EnergyPolicy::SplitAcrossCopies}, seed, options) {}
};

using SbidmaProtocol = RepetitionProtocol;

// ---------------------------------------------------------------------------
// Slotted Aloha

class SlottedAlohaProtocol {
 public:
  SlottedAlohaProtocol(SlottedAlohaConfig cfg, std::uint64_t seed, ReceiverOptions options = {})
      : cfg_(std::move(cfg)), options_(options), codec_(cfg_.codec, mix_seed(seed, 3)) {
    cfg_.validate();
  }

  const SlottedAlohaConfig& config() const noexcept { return cfg_; }
  const Codec& codec() const noexcept { return codec_; }
  std::size_t frame_length() const noexcept { return cfg_.frame_length(); }
  std::size_t payload_bits() const noexcept { return cfg_.codec.payload_bits; }

  TransmissionRecord encode(const Message& message, double power, Rng& rng) const {
    auto [frame, slot] = slotted_aloha_encode(cfg_, codec_, message, rng);
    frame *= std::sqrt(power);
    return make_record(message, std::move(frame), slot);
  }

  TransmissionRecord encode_in_slot(const Message& message, double power, std::size_t slot) const {
    if (slot >= cfg_.slots) throw ConfigError("slot index out of range");
    ComplexSignal frame(frame_length());
    const ComplexSignal w = codec_.encode(message);
    const double a = std::sqrt(power);
    for (std::size_t t = 0; t < w.size(); ++t) frame[slot * cfg_.slot_len + t] = a * w[t];
    return make_record(message, std::move(frame), slot);
  }

  /// Per-slot energy test and single-user decode. The slot carries no pilot,
  /// so on fading channels the decoder is handed the strongest user's true
  /// gain.
  DecodeOutcome receive(const ComplexSignal& y_in, ReceiverMode mode, std::span<const TransmissionRecord> genie,
                        const ReceiveContext& ctx) const {
    if (y_in.size() != frame_length()) throw ConfigError("receive: frame length mismatch");
    ComplexSignal y = y_in;
    DecodeOutcome out;
    std::vector<char> cancelled(genie.size(), 0);
    std::vector<std::vector<std::size_t>> in_slot(cfg_.slots);
    for (std::size_t u = 0; u < genie.size(); ++u) in_slot[genie[u].preamble].push_back(u);

    const std::size_t max_rounds = mode == ReceiverMode::TIN ? 1 : genie.size() + 1;
    const std::size_t len = cfg_.slot_len;
    for (std::size_t round = 0; round < std::max<std::size_t>(max_rounds, 1); ++round) {
      RoundDiagnostics diag;
      ++out.sic_rounds;
      std::vector<std::size_t> to_cancel;
      for (std::size_t s = 0; s < cfg_.slots; ++s) {
        const auto seg = y.samples().subspan(s * len, len);
        if (!energy_detect(seg, options_.energy_threshold_factor, ctx.noise_power)) continue;
        ++diag.detected;
        std::vector<std::size_t> group;
        for (auto u : in_slot[s])
          if (!cancelled[u]) group.push_back(u);
        ++diag.attempted;
        auto target = detail::strongest_distinguishable(group, genie, options_.tie_tolerance);

        std::optional<Message> decoded;
        std::optional<std::size_t> user;
        if (codec_.spec().model == CodecModel::OracleThreshold) {
          if (!target) continue;
          double interference = 0.0;
          for (auto v : group)
            if (v != *target) interference += std::norm(genie[v].gain) * ctx.power;
          const double sinr = std::norm(genie[*target].gain) * ctx.power / (ctx.noise_power + interference);
          auto r = codec_.decode({}, sinr, genie[*target].message);
          if (!r.success) continue;
          decoded = r.message;
          user = *target;
        } else {
          cdouble g = std::sqrt(ctx.power);
          if (ctx.channel != ChannelModel::AWGN) {
            if (!target) continue;
            g *= genie[*target].gain;
          }
          std::vector<cdouble> obs(len);
          for (std::size_t t = 0; t < len; ++t) obs[t] = seg[t] / g;
          auto r = codec_.decode(obs, 0.0);
          const ComplexSignal cw = codec_.encode(r.message);
          double residual = 0.0;
          for (std::size_t t = 0; t < len; ++t) residual += std::norm(seg[t] - g * cw[t]);
          if (residual > options_.ml_residual_factor * ctx.noise_power * static_cast<double>(len)) continue;
          decoded = r.message;
          for (auto u : group)
            if (genie[u].message == r.message) {
              user = u;
              break;
            }
        }
        if (out.decoded_messages.insert(*decoded).second) ++diag.decoded;
        if (user) to_cancel.push_back(*user);
      }
      out.rounds.push_back(diag);
      if (mode == ReceiverMode::TIN || to_cancel.empty()) break;
      for (auto u : to_cancel) {
        subtract_in_place(y, genie[u].frame.samples(), genie[u].gain);
        cancelled[u] = 1;
      }
    }
    return out;
  }

 private:
  TransmissionRecord make_record(const Message& message, ComplexSignal frame, std::size_t slot) const {
    TransmissionRecord rec;
    rec.message = message;
    rec.preamble = slot;
    rec.occasions = {slot};
    rec.frame = std::move(frame);
    return rec;
  }

  SlottedAlohaConfig cfg_;
  ReceiverOptions options_;
  Codec codec_;
};

}  // namespace umac
