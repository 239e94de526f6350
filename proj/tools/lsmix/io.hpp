#pragma once

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lsmix/rng.hpp"
#include "lsmix/sim.hpp"

#ifndef LSMIX_VERSION
#define LSMIX_VERSION "0.0.0"
#endif

namespace lsmix::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kUsage = 2, kDegenerate = 3 };

/// Error carrying the exit code the process should return.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Object keys are kept sorted by nlohmann::json, so the compact dump is canonical.
inline std::string config_digest(const json& canonical) { return "fnv1a64:" + hex64(fnv1a64(canonical.dump())); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kUsage, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CliError(kUsage, "error while reading '" + path + "'");
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kUsage, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw CliError(kUsage, "error while writing '" + path + "'");
}

/// One decimal number per line. Blank lines are skipped; anything else unparsable is an error.
inline std::vector<double> parse_data(std::string_view text, const std::string& origin) {
  std::vector<double> out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    if (line.front() == '+') line.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size() || !std::isfinite(v)) {
      throw CliError(kUsage, origin + ":" + std::to_string(lineno) + ": not a finite number: '" + std::string(line) + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw CliError(kUsage, origin + ": no observations");
  return out;
}

inline std::string format_data(const std::vector<double>& values) {
  std::string out;
  out.reserve(values.size() * 24);
  for (const double v : values) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::size_t default_worker_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Provenance written next to every output. Only `config` and its digest are
/// meant to be compared across runs; timestamp and wall time naturally vary.
struct RunManifest {
  std::string command_line;
  json config;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double wall_time_s = 0.0;
  std::vector<std::string> outputs;

  json to_json() const {
    return json{{"command_line", command_line},
                {"config", config},
                {"config_digest", config_digest(config)},
                {"seed", seed},
                {"version", LSMIX_VERSION},
                {"rng", kRngAlgorithm},
                {"timestamp", utc_timestamp()},
                {"wall_time_s", wall_time_s},
                {"workers", workers},
                {"outputs", outputs}};
  }

  void write(const std::string& path) const { write_text_file(path, to_json().dump(2) + "\n"); }
};

inline std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

}  // namespace lsmix::cli
