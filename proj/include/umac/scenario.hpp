// Glue between protocols and the Monte-Carlo harness: one trial draws K_a
// messages, encodes, passes the channel and scores the decoder output.

#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "umac/channel.hpp"
#include "umac/montecarlo.hpp"
#include "umac/protocols.hpp"

namespace umac {

template <typename P>
concept UmacProtocol = requires(const P& p, const Message& m, Rng& rng, const ComplexSignal& y,
                                std::span<const TransmissionRecord> genie, const ReceiveContext& ctx) {
  { p.encode(m, 1.0, rng) } -> std::same_as<TransmissionRecord>;
  { p.receive(y, ReceiverMode::TIN, genie, ctx) } -> std::same_as<DecodeOutcome>;
  { p.frame_length() } -> std::convertible_to<std::size_t>;
  { p.payload_bits() } -> std::convertible_to<std::size_t>;
};

struct TrialData {
  std::vector<TransmissionRecord> records;
  ComplexSignal y;
};

/// Draws users and the channel output for one trial. Users come from
/// per-user streams of the trial seed and the channel from its own stream,
/// so none of the draws depend on the SNR.
template <UmacProtocol P>
TrialData simulate_transmission(const P& protocol, ChannelModel channel, std::size_t ka, double snr_db,
                                std::uint64_t seed) {
  Rng trial(seed);
  const Rng users = trial.split(1);
  Rng chan = trial.split(2);
  const double power = db_to_linear(snr_db);

  TrialData d;
  d.records.reserve(ka);
  std::vector<ComplexSignal> frames;
  frames.reserve(ka);
  for (std::size_t u = 0; u < ka; ++u) {
    Rng ur = users.split(u);
    const Message m = ur.message(protocol.payload_bits());
    d.records.push_back(protocol.encode(m, power, ur));
    frames.push_back(d.records.back().frame);
  }
  ChannelConfig cfg;
  cfg.noise_power = 1.0;
  // The frame-level constraint ||x||^2 <= nP is what check_power enforces.
  cfg.power_limit = power;
  cfg.model = channel;
  if (channel == ChannelModel::AWGN) {
    d.y = awgn_mac_transmit(frames, cfg, chan, protocol.frame_length());
  } else {
    auto [y, fading] = fading_mac_transmit(frames, cfg, chan, std::nullopt, protocol.frame_length());
    d.y = std::move(y);
    for (std::size_t u = 0; u < ka; ++u) d.records[u].gain = fading.gains[u];
  }
  return d;
}

inline TrialOutcome score(std::span<const TransmissionRecord> records, const DecodeOutcome& outcome) {
  TrialOutcome o;
  o.users = records.size();
  for (std::size_t u = 0; u < records.size(); ++u) {
    if (!outcome.decoded_messages.contains(records[u].message)) ++o.missed;
    for (std::size_t v = 0; v < records.size(); ++v)
      if (v != u && records[v].message == records[u].message) {
        ++o.clashed;
        break;
      }
  }
  return o;
}

template <UmacProtocol P>
Scenario make_scenario(std::shared_ptr<const P> protocol, ChannelModel channel, ReceiverMode mode,
                       std::string label) {
  Scenario s;
  s.label = std::move(label);
  s.channel = channel == ChannelModel::AWGN ? "awgn" : "rayleigh";
  s.trial = [protocol, channel, mode](std::size_t ka, double snr_db, std::uint64_t seed) {
    const TrialData d = simulate_transmission(*protocol, channel, ka, snr_db, seed);
    ReceiveContext ctx;
    ctx.noise_power = 1.0;
    ctx.power = db_to_linear(snr_db);
    ctx.channel = channel;
    return score(d.records, protocol->receive(d.y, mode, d.records, ctx));
  };
  return s;
}

}  // namespace umac
