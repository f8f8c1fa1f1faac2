// Experiment configuration: parse, validate, serialise and turn into a
// runnable Scenario.
//
// The document is JSON. Keys are flat; objects may group keys into sections
// ({"protocol": {...}, "search": {...}}) and section names are not part of
// the key. Unknown keys are rejected.

#pragma once

#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "umac/protocols.hpp"
#include "umac/scenario.hpp"

namespace umac {

enum class ScenarioKind { SlottedAloha, TwoStep, Sbidma };

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::TwoStep;
  ChannelModel channel = ChannelModel::AWGN;
  ReceiverMode receiver = ReceiverMode::TIN_SIC;
  std::optional<std::string> label;

  // protocol
  std::size_t n_preambles = 64;
  std::size_t preamble_len = 139;
  std::size_t preamble_reps = 2;
  DictionaryKind preamble_kind = DictionaryKind::ZadoffChu;
  double preamble_power_scale = 1.0;
  std::optional<std::size_t> zc_cyclic_shift;
  std::optional<PreambleMapping> mapping;
  std::size_t n_occasions = 64;
  std::size_t occasion_len = 250;
  std::size_t pilot_len = 0;
  std::size_t payload_bits = 100;
  std::size_t codeword_bits = 500;
  CodecModel codec_model = CodecModel::OracleThreshold;
  double codec_offset_db = kLdpcLikeOffsetDb;
  std::optional<double> codec_target_eps;
  std::size_t rho = 1;
  EnergyPolicy energy_policy = EnergyPolicy::SplitAcrossCopies;
  std::optional<SlotSelection> slot_selection;

  // experiment
  double target_pupe = 0.05;
  std::vector<std::size_t> ka_list;
  double snr_lo_db = -10.0;
  double snr_hi_db = 20.0;
  double tol_db = 0.1;
  std::vector<std::size_t> trials_schedule{200, 1000};
  std::uint64_t seed = 1;
  std::optional<std::string> reference_curve_path;

  bool operator==(const ExperimentConfig&) const = default;

  std::string display_label() const;
  CodecSpec codec_spec() const;
  TwoStepConfig twostep_config() const;
  SbidmaConfig sbidma_config() const;
  SlottedAlohaConfig slotted_aloha_config() const;
  SearchParams search_params(double trials_scale = 1.0) const;
  std::size_t frame_length() const;
  double energy_per_user_uses() const;  // transmitted energy / P
  void validate() const;
};

namespace config_detail {

template <typename E>
struct EnumNames;

template <>
struct EnumNames<ScenarioKind> {
  static constexpr std::pair<ScenarioKind, const char*> table[] = {
      {ScenarioKind::SlottedAloha, "slotted_aloha"}, {ScenarioKind::TwoStep, "twostep"}, {ScenarioKind::Sbidma, "sbidma"}};
};
template <>
struct EnumNames<ChannelModel> {
  static constexpr std::pair<ChannelModel, const char*> table[] = {{ChannelModel::AWGN, "awgn"},
                                                                   {ChannelModel::RayleighQuasiStatic, "rayleigh"}};
};
template <>
struct EnumNames<ReceiverMode> {
  static constexpr std::pair<ReceiverMode, const char*> table[] = {{ReceiverMode::TIN, "tin"},
                                                                   {ReceiverMode::TIN_SIC, "tin_sic"}};
};
template <>
struct EnumNames<DictionaryKind> {
  static constexpr std::pair<DictionaryKind, const char*> table[] = {{DictionaryKind::ZadoffChu, "zadoff_chu"},
                                                                     {DictionaryKind::GaussianNormalized, "gaussian"}};
};
template <>
struct EnumNames<PreambleMapping> {
  static constexpr std::pair<PreambleMapping, const char*> table[] = {{PreambleMapping::OneToOne, "one_to_one"},
                                                                      {PreambleMapping::ManyToOne, "many_to_one"}};
};
template <>
struct EnumNames<CodecModel> {
  static constexpr std::pair<CodecModel, const char*> table[] = {
      {CodecModel::OracleThreshold, "oracle_threshold"}, {CodecModel::MLRandomGaussian, "ml_random_gaussian"}};
};
template <>
struct EnumNames<EnergyPolicy> {
  static constexpr std::pair<EnergyPolicy, const char*> table[] = {
      {EnergyPolicy::SplitAcrossCopies, "split_across_copies"}, {EnergyPolicy::PerCopyFull, "per_copy_full"}};
};
template <>
struct EnumNames<SlotSelection> {
  static constexpr std::pair<SlotSelection, const char*> table[] = {{SlotSelection::UniformRandom, "uniform_random"},
                                                                    {SlotSelection::PayloadHash, "payload_hash"}};
};

template <typename E>
std::string enum_name(E e) {
  for (const auto& [v, name] : EnumNames<E>::table)
    if (v == e) return name;
  return "?";
}

template <typename E>
std::optional<E> enum_from(const std::string& s) {
  for (const auto& [v, name] : EnumNames<E>::table)
    if (s == name) return v;
  return std::nullopt;
}

template <typename E>
std::string enum_choices() {
  std::string out;
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (!out.empty()) out += "|";
    out += name;
  }
  return out;
}

inline const std::set<std::string>& required_keys() {
  static const std::set<std::string> keys = {
      "scenario",     "channel",      "payload_bits", "codeword_bits", "codec_model",  "n_occasions",
      "occasion_len", "target_pupe",  "ka_list",      "snr_lo_db",     "snr_hi_db",    "trials_schedule",
      "seed"};
  return keys;
}

inline const std::set<std::string>& preamble_keys() {
  static const std::set<std::string> keys = {"n_preambles", "preamble_len", "preamble_reps", "preamble_kind",
                                             "preamble_power_scale", "pilot_len"};
  return keys;
}

inline const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys = {"receiver",        "label",         "zc_cyclic_shift",
                                             "mapping",         "codec_offset_db", "codec_target_eps",
                                             "rho",             "energy_policy",   "slot_selection",
                                             "tol_db",          "reference_curve_path"};
  return keys;
}

/// Flattens sections; records the dotted path of every leaf for messages.
inline void flatten(const nlohmann::json& obj, const std::string& prefix, std::map<std::string, nlohmann::json>& out,
                    std::map<std::string, std::string>& paths) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      flatten(it.value(), path, out, paths);
      continue;
    }
    if (out.contains(it.key())) throw ConfigError(path + ": duplicate key (also at " + paths[it.key()] + ")");
    out[it.key()] = it.value();
    paths[it.key()] = path;
  }
}

class Reader {
 public:
  Reader(std::map<std::string, nlohmann::json> values, std::map<std::string, std::string> paths)
      : values_(std::move(values)), paths_(std::move(paths)) {}

  bool has(const std::string& key) const { return values_.contains(key); }

  std::size_t count(const std::string& key) const {
    const auto& v = get(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  std::uint64_t u64(const std::string& key) const {
    const auto& v = get(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double number(const std::string& key) const {
    const auto& v = get(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  std::string text(const std::string& key) const {
    const auto& v = get(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::vector<std::size_t> counts(const std::string& key) const {
    const auto& v = get(key);
    if (!v.is_array()) fail(key, "expected an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0) fail(key, "expected an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  template <typename E>
  E choice(const std::string& key) const {
    const auto s = text(key);
    auto e = enum_from<E>(s);
    if (!e) fail(key, "unknown value '" + s + "' (expected " + enum_choices<E>() + ")");
    return *e;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = paths_.find(key);
    throw ConfigError((it == paths_.end() ? key : it->second) + ": " + what);
  }

 private:
  const nlohmann::json& get(const std::string& key) const { return values_.at(key); }

  std::map<std::string, nlohmann::json> values_;
  std::map<std::string, std::string> paths_;
};

}  // namespace config_detail

inline std::string ExperimentConfig::display_label() const {
  if (label) return *label;
  return config_detail::enum_name(scenario) + "-" + config_detail::enum_name(receiver);
}

inline CodecSpec ExperimentConfig::codec_spec() const {
  CodecSpec c;
  c.codeword_bits = codeword_bits;
  c.payload_bits = payload_bits;
  c.model = codec_model;
  c.offset_db = codec_offset_db;
  c.target_eps = codec_target_eps.value_or(target_pupe);
  return c;
}

inline TwoStepConfig ExperimentConfig::twostep_config() const {
  TwoStepConfig t;
  t.preamble.size = n_preambles;
  t.preamble.base_length = preamble_len;
  t.preamble.repetitions = preamble_reps;
  t.preamble.power_scale = preamble_power_scale;
  t.preamble.kind = preamble_kind;
  if (zc_cyclic_shift) t.preamble.zc_cyclic_shift = *zc_cyclic_shift;
  t.n_occasions = n_occasions;
  t.occasion_len = occasion_len;
  t.pilot_len = pilot_len;
  t.codec = codec_spec();
  t.mapping = mapping.value_or(n_preambles == n_occasions ? PreambleMapping::OneToOne : PreambleMapping::ManyToOne);
  t.channel = channel;
  return t;
}

inline SbidmaConfig ExperimentConfig::sbidma_config() const {
  return SbidmaConfig{twostep_config(), rho, energy_policy};
}

inline SlottedAlohaConfig ExperimentConfig::slotted_aloha_config() const {
  SlottedAlohaConfig s;
  s.slots = n_occasions;
  s.slot_len = occasion_len;
  s.codec = codec_spec();
  s.slot_selection = slot_selection.value_or(SlotSelection::UniformRandom);
  return s;
}

inline SearchParams ExperimentConfig::search_params(double trials_scale) const {
  SearchParams p;
  p.snr_lo_db = snr_lo_db;
  p.snr_hi_db = snr_hi_db;
  p.tol_db = tol_db;
  p.trials_schedule.clear();
  for (auto t : trials_schedule)
    p.trials_schedule.push_back(
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(t) * trials_scale))));
  return p;
}

inline std::size_t ExperimentConfig::frame_length() const {
  if (scenario == ScenarioKind::SlottedAloha) return slotted_aloha_config().frame_length();
  return twostep_config().frame_length();
}

inline double ExperimentConfig::energy_per_user_uses() const {
  if (scenario == ScenarioKind::SlottedAloha) return static_cast<double>(occasion_len);
  const double pre = static_cast<double>(preamble_len * preamble_reps) * preamble_power_scale;
  const double copies = scenario == ScenarioKind::Sbidma ? static_cast<double>(rho) : 1.0;
  const double per_copy = scenario == ScenarioKind::Sbidma && energy_policy == EnergyPolicy::SplitAcrossCopies
                              ? 1.0 / copies
                              : 1.0;
  return pre + copies * per_copy * static_cast<double>(occasion_len);
}

inline void ExperimentConfig::validate() const {
  if (!(target_pupe > 0.0 && target_pupe <= 1.0)) throw ConfigError("target_pupe: must be in (0, 1]");
  if (ka_list.empty()) throw ConfigError("ka_list: must not be empty");
  for (auto ka : ka_list)
    if (ka < 1) throw ConfigError("ka_list: every K_a must be >= 1");
  if (!(snr_lo_db < snr_hi_db)) throw ConfigError("snr_lo_db: must be below snr_hi_db");
  if (!(tol_db > 0.0)) throw ConfigError("tol_db: must be > 0");
  if (trials_schedule.empty()) throw ConfigError("trials_schedule: must not be empty");
  for (auto t : trials_schedule)
    if (t < 1) throw ConfigError("trials_schedule: every entry must be >= 1");
  try {
    switch (scenario) {
      case ScenarioKind::SlottedAloha: slotted_aloha_config().validate(); break;
      case ScenarioKind::TwoStep: twostep_config().validate(); break;
      case ScenarioKind::Sbidma: sbidma_config().validate(); break;
    }
    if (scenario != ScenarioKind::SlottedAloha) {
      PreambleSpec p = twostep_config().preamble;
      if (p.kind == DictionaryKind::ZadoffChu) {
        if (!is_prime(p.base_length)) throw ConfigError("preamble_len: Zadoff-Chu length must be prime");
        if (p.size > zadoff_chu_capacity(p))
          throw ConfigError("n_preambles: exceeds the Zadoff-Chu family size; use preamble_kind gaussian");
      }
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  nlohmann::json doc;
  try {
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos ? nlohmann::json::object()
                                                                  : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, nlohmann::json> values;
  std::map<std::string, std::string> paths;
  flatten(doc, "", values, paths);

  for (const auto& [key, _] : values)
    if (!required_keys().contains(key) && !preamble_keys().contains(key) && !optional_keys().contains(key))
      throw ConfigError(paths[key] + ": unknown key");

  std::vector<std::string> missing;
  for (const auto& k : required_keys())
    if (!values.contains(k)) missing.push_back(k);
  if (values.contains("scenario") && values["scenario"] != "slotted_aloha") {
    for (const auto& k : preamble_keys())
      if (!values.contains(k)) missing.push_back(k);
    if (values["scenario"] == "sbidma") {
      for (const char* k : {"rho", "energy_policy"})
        if (!values.contains(k)) missing.push_back(k);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }

  Reader r(values, paths);
  ExperimentConfig c;
  c.scenario = r.choice<ScenarioKind>("scenario");
  c.channel = r.choice<ChannelModel>("channel");
  if (r.has("receiver")) c.receiver = r.choice<ReceiverMode>("receiver");
  if (r.has("label")) c.label = r.text("label");
  if (r.has("n_preambles")) c.n_preambles = r.count("n_preambles");
  if (r.has("preamble_len")) c.preamble_len = r.count("preamble_len");
  if (r.has("preamble_reps")) c.preamble_reps = r.count("preamble_reps");
  if (r.has("preamble_kind")) c.preamble_kind = r.choice<DictionaryKind>("preamble_kind");
  if (r.has("preamble_power_scale")) c.preamble_power_scale = r.number("preamble_power_scale");
  if (r.has("zc_cyclic_shift")) c.zc_cyclic_shift = r.count("zc_cyclic_shift");
  if (r.has("mapping")) c.mapping = r.choice<PreambleMapping>("mapping");
  c.n_occasions = r.count("n_occasions");
  c.occasion_len = r.count("occasion_len");
  if (r.has("pilot_len")) c.pilot_len = r.count("pilot_len");
  c.payload_bits = r.count("payload_bits");
  c.codeword_bits = r.count("codeword_bits");
  c.codec_model = r.choice<CodecModel>("codec_model");
  if (r.has("codec_offset_db")) c.codec_offset_db = r.number("codec_offset_db");
  if (r.has("codec_target_eps")) c.codec_target_eps = r.number("codec_target_eps");
  if (r.has("rho")) c.rho = r.count("rho");
  if (r.has("energy_policy")) c.energy_policy = r.choice<EnergyPolicy>("energy_policy");
  if (r.has("slot_selection")) c.slot_selection = r.choice<SlotSelection>("slot_selection");
  c.target_pupe = r.number("target_pupe");
  c.ka_list = r.counts("ka_list");
  c.snr_lo_db = r.number("snr_lo_db");
  c.snr_hi_db = r.number("snr_hi_db");
  if (r.has("tol_db")) c.tol_db = r.number("tol_db");
  c.trials_schedule = r.counts("trials_schedule");
  c.seed = r.u64("seed");
  if (r.has("reference_curve_path")) c.reference_curve_path = r.text("reference_curve_path");
  c.validate();
  return c;
}

/// Flat JSON document; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  using config_detail::enum_name;
  nlohmann::ordered_json j;
  j["scenario"] = enum_name(c.scenario);
  j["channel"] = enum_name(c.channel);
  j["receiver"] = enum_name(c.receiver);
  if (c.label) j["label"] = *c.label;
  j["n_preambles"] = c.n_preambles;
  j["preamble_len"] = c.preamble_len;
  j["preamble_reps"] = c.preamble_reps;
  j["preamble_kind"] = enum_name(c.preamble_kind);
  j["preamble_power_scale"] = c.preamble_power_scale;
  j["pilot_len"] = c.pilot_len;
  if (c.zc_cyclic_shift) j["zc_cyclic_shift"] = *c.zc_cyclic_shift;
  if (c.mapping) j["mapping"] = enum_name(*c.mapping);
  j["n_occasions"] = c.n_occasions;
  j["occasion_len"] = c.occasion_len;
  j["payload_bits"] = c.payload_bits;
  j["codeword_bits"] = c.codeword_bits;
  j["codec_model"] = enum_name(c.codec_model);
  j["codec_offset_db"] = c.codec_offset_db;
  if (c.codec_target_eps) j["codec_target_eps"] = *c.codec_target_eps;
  j["rho"] = c.rho;
  j["energy_policy"] = enum_name(c.energy_policy);
  if (c.slot_selection) j["slot_selection"] = enum_name(*c.slot_selection);
  j["target_pupe"] = c.target_pupe;
  j["ka_list"] = c.ka_list;
  j["snr_lo_db"] = c.snr_lo_db;
  j["snr_hi_db"] = c.snr_hi_db;
  j["tol_db"] = c.tol_db;
  j["trials_schedule"] = c.trials_schedule;
  j["seed"] = c.seed;
  if (c.reference_curve_path) j["reference_curve_path"] = *c.reference_curve_path;
  return j.dump(2) + "\n";
}

/// Builds the protocol (dictionaries and codebook seeded from c.seed) and
/// wraps it as a Monte-Carlo scenario.
inline Scenario build_scenario(const ExperimentConfig& c, ReceiverOptions options = {}) {
  c.validate();
  const std::string label = c.display_label();
  switch (c.scenario) {
    case ScenarioKind::SlottedAloha:
      return make_scenario(std::make_shared<const SlottedAlohaProtocol>(c.slotted_aloha_config(), c.seed, options),
                           c.channel, c.receiver, label);
    case ScenarioKind::TwoStep:
      return make_scenario(std::make_shared<const TwoStepProtocol>(c.twostep_config(), c.seed, options), c.channel,
                           c.receiver, label);
    case ScenarioKind::Sbidma:
      return make_scenario(std::make_shared<const SbidmaProtocol>(c.sbidma_config(), c.seed, options), c.channel,
                           c.receiver, label);
  }
  throw ConfigError("unknown scenario");
}

}  // namespace umac
