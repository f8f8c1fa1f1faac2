// Inner-code models and the slotted-Aloha UMAC codebook.
//
// OracleThreshold is a surrogate for a practical short code: it succeeds iff
// the genie SINR clears the normal-approximation threshold plus a dB offset.
// MLRandomGaussian is a real code (seeded Gaussian codebook, exhaustive
// minimum-distance decoding) for small payloads.

#pragma once

#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "umac/bounds.hpp"
#include "umac/core.hpp"

namespace umac {

enum class CodecModel { OracleThreshold, MLRandomGaussian };

inline constexpr double kLdpcLikeOffsetDb = 1.6;
inline constexpr double kPolarLikeOffsetDb = 0.9;
inline constexpr std::size_t kMaxMlPayloadBits = 12;

struct CodecSpec {
  std::size_t codeword_bits = 500;  // n_c, QPSK-mapped onto n_c / 2 complex uses
  std::size_t payload_bits = 100;   // k
  CodecModel model = CodecModel::OracleThreshold;
  double offset_db = kLdpcLikeOffsetDb;
  double target_eps = 0.05;

  std::size_t channel_uses() const noexcept { return codeword_bits / 2; }

  void validate() const {
    if (codeword_bits < 2 || codeword_bits % 2 != 0)
      throw ConfigError("codeword_bits must be even and >= 2");
    if (payload_bits < 1) throw ConfigError("payload_bits must be >= 1");
    if (!(target_eps > 0.0 && target_eps < 1.0)) throw ConfigError("codec target_eps must be in (0, 1)");
    if (model == CodecModel::MLRandomGaussian && payload_bits > kMaxMlPayloadBits)
      throw ConfigError("MLRandomGaussian supports at most 12 payload bits");
  }
};

struct DecodeResult {
  bool success = false;
  Message message;
  double distance = std::numeric_limits<double>::infinity();  // ML only
};

namespace detail {

inline std::uint64_t hash_message(const Message& m, std::uint64_t salt) {
  // FNV-1a over the bits, then a splitmix finaliser.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  for (auto b : m.bits) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ m.bits.size());
}

}  // namespace detail

class Codec {
 public:
  Codec(CodecSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
    spec_.validate();
    if (spec_.model == CodecModel::MLRandomGaussian) {
      const std::size_t count = std::size_t{1} << spec_.payload_bits;
      const std::size_t n = spec_.channel_uses();
      codebook_.resize(count * n);
      Rng rng(seed);
      for (std::size_t w = 0; w < count; ++w) {
        auto col = std::span<cdouble>(codebook_).subspan(w * n, n);
        for (auto& v : col) v = rng.complex_normal(1.0);
        const double a = std::sqrt(static_cast<double>(n) / ComplexSignal::energy_of(col));
        for (auto& v : col) v *= a;
      }
    } else {
      threshold_ = bounds::min_snr_single_user(static_cast<double>(spec_.channel_uses()),
                                               static_cast<double>(spec_.payload_bits),
                                               spec_.target_eps) *
                   db_to_linear(spec_.offset_db);
    }
  }

  const CodecSpec& spec() const noexcept { return spec_; }
  std::size_t length() const noexcept { return spec_.channel_uses(); }

  /// Linear SINR above which the oracle model succeeds.
  double threshold() const noexcept { return threshold_; }

  /// Unit-power codeword: energy equals length() exactly (up to rounding).
  ComplexSignal encode(const Message& message) const {
    if (message.size() != spec_.payload_bits)
      throw ConfigError("message has " + std::to_string(message.size()) + " bits, codec expects " +
                        std::to_string(spec_.payload_bits));
    const std::size_t n = length();
    if (spec_.model == CodecModel::MLRandomGaussian) {
      auto col = codeword(message.to_index());
      return ComplexSignal(std::vector<cdouble>(col.begin(), col.end()));
    }
    Rng rng(detail::hash_message(message, seed_));
    ComplexSignal x(n);
    const double a = 1.0 / std::numbers::sqrt2;
    for (auto& v : x) {
      const auto bits = rng.engine()();
      v = cdouble{(bits & 1u) ? a : -a, (bits & 2u) ? a : -a};
    }
    return x;
  }

  /// OracleThreshold: success iff genie_sinr >= threshold, returning the
  /// genie candidate. MLRandomGaussian: nearest codeword to `observed`
  /// (already normalised by the channel estimate); genie inputs are ignored.
  DecodeResult decode(std::span<const cdouble> observed, double genie_sinr,
                      const std::optional<Message>& candidate = std::nullopt) const {
    DecodeResult r;
    if (spec_.model == CodecModel::OracleThreshold) {
      if (candidate && genie_sinr >= threshold_) {
        r.success = true;
        r.message = *candidate;
      }
      return r;
    }
    if (observed.size() != length()) throw ConfigError("observation length does not match codec");
    const std::size_t count = std::size_t{1} << spec_.payload_bits;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < count; ++w) {
      auto col = codeword(w);
      double d = 0.0;
      for (std::size_t t = 0; t < col.size(); ++t) d += std::norm(observed[t] - col[t]);
      if (d < best_d) {
        best_d = d;
        best = w;
      }
    }
    r.success = true;
    r.message = Message::from_index(best, spec_.payload_bits);
    r.distance = best_d;
    return r;
  }

 private:
  std::span<const cdouble> codeword(std::size_t index) const {
    const std::size_t n = length();
    return std::span<const cdouble>(codebook_).subspan(index * n, n);
  }

  CodecSpec spec_;
  std::uint64_t seed_;
  double threshold_ = 0.0;
  std::vector<cdouble> codebook_;
};

enum class SlotSelection { UniformRandom, PayloadHash };

struct SlottedAlohaConfig {
  std::size_t slots = 64;
  std::size_t slot_len = 250;
  CodecSpec codec;
  SlotSelection slot_selection = SlotSelection::UniformRandom;

  std::size_t frame_length() const noexcept { return slots * slot_len; }

  void validate() const {
    if (slots < 1) throw ConfigError("slotted Aloha needs at least one slot");
    codec.validate();
    if (slot_len != codec.channel_uses())
      throw ConfigError("slot_len must equal codeword_bits / 2");
  }
};

/// Slot chosen for a payload under the PayloadHash rule (FNV-1a of the bits).
inline std::size_t payload_hash_slot(const Message& message, std::size_t slots) {
  return static_cast<std::size_t>(detail::hash_message(message, 0) % slots);
}

/// Frame that is zero except for the selected slot, which carries the
/// codeword. Returns the frame and the slot index.
inline std::pair<ComplexSignal, std::size_t> slotted_aloha_encode(const SlottedAlohaConfig& cfg,
                                                                  const Codec& codec,
                                                                  const Message& message, Rng& rng) {
  const std::size_t slot = cfg.slot_selection == SlotSelection::PayloadHash
                               ? payload_hash_slot(message, cfg.slots)
                               : static_cast<std::size_t>(rng.uniform_int(cfg.slots));
  const ComplexSignal w = codec.encode(message);
  ComplexSignal frame(cfg.frame_length());
  std::copy(w.begin(), w.end(), frame.begin() + static_cast<std::ptrdiff_t>(slot * cfg.slot_len));
  return {std::move(frame), slot};
}

struct CodebookSize {
  std::uint64_t value = 0;  // valid when !saturated
  bool saturated = false;
  double log2_value = 0.0;
};

/// |C_SA| = L * 2^k, saturating when it does not fit 64 bits.
inline CodebookSize slotted_aloha_codebook_size(const SlottedAlohaConfig& cfg) {
  CodebookSize s;
  s.log2_value = std::log2(static_cast<double>(cfg.slots)) + static_cast<double>(cfg.codec.payload_bits);
  if (cfg.codec.payload_bits >= 64 ||
      cfg.slots > (std::numeric_limits<std::uint64_t>::max() >> cfg.codec.payload_bits)) {
    s.saturated = true;
    s.value = std::numeric_limits<std::uint64_t>::max();
  } else {
    s.value = static_cast<std::uint64_t>(cfg.slots) << cfg.codec.payload_bits;
  }
  return s;
}

}  // namespace umac
