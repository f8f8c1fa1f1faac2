// Experiment runner behind the umac_sim CLI: sweeps K_a, writes the result
// CSV, keeps per-K_a checkpoints and prints a summary table.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "umac/bounds.hpp"
#include "umac/channel.hpp"
#include "umac/config.hpp"
#include "umac/montecarlo.hpp"

namespace umac {

inline constexpr const char* kCsvHeader = "scenario,channel,ka,min_snr_db,pupe,ci_low,ci_high,trials,seed,notes";

struct RunOptions {
  double trials_scale = 1.0;
  bool strict = false;
  bool quiet = false;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNotFound = 2, kExitIo = 3 };

namespace runner_detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string notes_for(const PupeCurvePoint& p, const ExperimentConfig& c) {
  std::string n;
  auto add = [&](const std::string& s) {
    if (!n.empty()) n += ";";
    n += s;
  };
  if (!p.found) add("not found <= " + fmt("%g", p.snr_max_db) + " dB");
  if (p.non_monotone) add("warning: non-monotone PUPE");
  if (c.codec_model == CodecModel::OracleThreshold) {
    add("surrogate codec offset " + fmt("%g", c.codec_offset_db) + " dB");
    if (c.codec_offset_db == kPolarLikeOffsetDb) add("polar-like offset (qualitative)");
  }
  if (p.clash_rate > 0.0) add("clash_rate=" + fmt("%.6g", p.clash_rate));
  return n;
}

inline std::string csv_row(const PupeCurvePoint& p, const ExperimentConfig& c) {
  std::ostringstream os;
  os << p.label << ',' << p.channel << ',' << p.ka << ',' << (p.found ? fmt("%.4f", p.min_snr_db) : "inf") << ','
     << fmt("%.6g", p.achieved_pupe) << ',' << fmt("%.6g", p.ci_low) << ',' << fmt("%.6g", p.ci_high) << ','
     << p.trials << ',' << p.seed << ',' << notes_for(p, c);
  return os.str();
}

inline std::string fingerprint(const ExperimentConfig& c, const RunOptions& opt) {
  const std::string text = serialize_config(c) + fmt("%.17g", opt.trials_scale);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return std::to_string(h);
}

struct Row {
  std::size_t ka;
  std::string line;
  bool found;
  double min_snr_db;
  double pupe;
  std::size_t trials;
  std::string notes;
};

inline std::optional<std::string> read_checkpoint(const std::filesystem::path& file, const std::string& fp) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string first, row;
  if (!std::getline(in, first) || first != "# " + fp) return std::nullopt;
  if (!std::getline(in, row) || row.empty()) return std::nullopt;
  return row;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace runner_detail

/// Runs the sweep described by `config` and writes the CSV to `out_path`.
/// Finished K_a points are checkpointed under `<out_path>.ckpt/` and reused
/// by a rerun with the same configuration; the directory is removed once the
/// CSV is complete.
inline int run(const ExperimentConfig& config, const std::string& out_path, const RunOptions& opt = {},
               std::ostream& log = std::cout) {
  using namespace runner_detail;
  namespace fs = std::filesystem;
  config.validate();

  std::optional<bounds::ReferenceCurve> reference;
  if (config.reference_curve_path) reference = bounds::load_reference_curve(*config.reference_curve_path);

  const fs::path out(out_path);
  if (out.has_parent_path() && !fs::exists(out.parent_path())) {
    log << "error: output directory does not exist: " << out.parent_path().string() << "\n";
    return kExitIo;
  }
  {
    std::ofstream probe(out, std::ios::app);
    if (!probe) {
      log << "error: cannot write " << out_path << "\n";
      return kExitIo;
    }
  }
  const fs::path ckpt_dir = fs::path(out_path + ".ckpt");
  std::error_code ec;
  fs::create_directories(ckpt_dir, ec);
  const std::string fp = fingerprint(config, opt);

  const Scenario scenario = build_scenario(config);
  const SearchParams search = config.search_params(opt.trials_scale);

  std::vector<Row> rows;
  for (auto ka : config.ka_list) {
    const fs::path file = ckpt_dir / ("ka_" + std::to_string(ka) + ".csv");
    std::string line;
    if (auto cached = read_checkpoint(file, fp)) {
      line = *cached;
      if (!opt.quiet) log << "K_a=" << ka << ": reused checkpoint\n";
    } else {
      const PupeCurvePoint p = min_snr_for_pupe(scenario, ka, config.target_pupe, search, mix_seed(config.seed, ka));
      line = csv_row(p, config);
      std::ofstream ck(file, std::ios::trunc);
      ck << "# " << fp << "\n" << line << "\n";
      if (!opt.quiet) log << "K_a=" << ka << ": " << (p.found ? fmt("%.2f dB", p.min_snr_db) : "not found") << "\n";
    }
    const auto f = split_csv(line);
    Row r;
    r.ka = ka;
    r.line = line;
    r.found = f.at(3) != "inf";
    r.min_snr_db = r.found ? std::stod(f.at(3)) : std::numeric_limits<double>::infinity();
    r.pupe = std::stod(f.at(4));
    r.trials = std::stoull(f.at(7));
    r.notes = f.size() > 9 ? f.at(9) : "";
    rows.push_back(std::move(r));
  }

  {
    std::ofstream csv(out, std::ios::trunc | std::ios::binary);
    csv << kCsvHeader << "\n";
    for (const auto& r : rows) csv << r.line << "\n";
    if (!csv) {
      log << "error: failed writing " << out_path << "\n";
      return kExitIo;
    }
  }
  fs::remove_all(ckpt_dir, ec);

  bool any_missing = false;
  if (!opt.quiet) {
    const std::size_t n = config.frame_length();
    log << "\n" << config.display_label() << " on " << config_detail::enum_name(config.channel) << ": frame " << n
        << " complex channel uses (" << 2 * n << " real degrees of freedom), target PUPE " << config.target_pupe
        << "\n";
    // SNR is P/sigma^2 per complex sample; the real-sample column is the
    // same operating point with P/2 per real sample over sigma^2.
    log << "  K_a   min SNR [dB]   per real [dB]   Eb/N0 [dB]     PUPE   trials";
    if (reference) log << "   ref [dB]   gap [dB]";
    log << "\n";
  }
  for (const auto& r : rows) {
    any_missing = any_missing || !r.found;
    if (opt.quiet) continue;
    std::string ebn0 = "-";
    if (r.found) {
      ChannelConfig ch;
      ch.noise_power = 1.0;
      ch.power_limit = db_to_linear(r.min_snr_db);
      ebn0 = fmt("%.2f", ebn0_db(config.energy_per_user_uses(), ch, static_cast<double>(config.payload_bits)));
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%5zu   %12s   %13s   %10s   %6.4f   %6zu", r.ka,
                  r.found ? fmt("%.2f", r.min_snr_db).c_str() : "not found",
                  r.found ? fmt("%.2f", r.min_snr_db - linear_to_db(2.0)).c_str() : "-", ebn0.c_str(), r.pupe,
                  r.trials);
    log << buf;
    if (reference) {
      auto it = std::find_if(reference->points.begin(), reference->points.end(),
                             [&](const auto& p) { return p.ka == r.ka; });
      if (it != reference->points.end()) {
        log << fmt("   %8.2f", it->snr_db);
        log << (r.found ? fmt("   %8.2f", r.min_snr_db - it->snr_db) : std::string("          -"));
      }
    }
    log << "\n";
  }
  if (opt.strict && any_missing) {
    if (!opt.quiet) log << "strict: at least one K_a point was not found\n";
    return kExitNotFound;
  }
  return kExitOk;
}

}  // namespace umac
