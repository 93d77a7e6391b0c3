#pragma once

// Config file parsing with line diagnostics, canonical serialization (the
// round-trip anchor for manifests), polynomial string syntax, and the
// line-delimited record / CSV / manifest output formats.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coklab/limits.hpp"
#include "coklab/montecarlo.hpp"

namespace coklab {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline bool operator==(const ShiftSpec& a, const ShiftSpec& b) {
  return a.kind == b.kind && a.identity_rank == b.identity_rank && a.entries == b.entries;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.p == b.p && a.k == b.k && a.n_values == b.n_values &&
         a.sample_count == b.sample_count && a.seed == b.seed && a.workers == b.workers &&
         a.polynomials == b.polynomials && a.shift == b.shift &&
         a.gl_condition == b.gl_condition && a.linearization_v == b.linearization_v;
}

// ---------------------------------------------------------------------------
// polynomial strings: monic integer polynomials in t, e.g. "t^2+t+1", "t-1"

inline PolynomialSpec parse_polynomial(const std::string& text) {
  std::vector<i64> coeffs;
  auto bump = [&](size_t deg, i64 c) {
    if (coeffs.size() <= deg) coeffs.resize(deg + 1, 0);
    coeffs[deg] += c;
  };
  size_t i = 0;
  auto skip_ws = [&]() {
    while (i < text.size() && std::isspace((unsigned char)text[i])) ++i;
  };
  auto read_uint = [&](const char* what) -> i64 {
    size_t start = i;
    while (i < text.size() && std::isdigit((unsigned char)text[i])) ++i;
    if (i == start)
      throw ConfigError("polynomial \"" + text + "\": expected " + what + " at offset " +
                        std::to_string(start));
    i64 value = 0;
    for (size_t j = start; j < i; ++j) {
      if (value > (INT64_MAX - 9) / 10)
        throw ConfigError("polynomial \"" + text + "\": integer too large");
      value = value * 10 + (text[j] - '0');
    }
    return value;
  };

  skip_ws();
  if (i == text.size()) throw ConfigError("polynomial string is empty");
  bool first = true;
  while (true) {
    skip_ws();
    if (i == text.size()) {
      if (first) throw ConfigError("polynomial string is empty");
      throw ConfigError("polynomial \"" + text + "\": trailing operator");
    }
    i64 sign = 1;
    if (text[i] == '+' || text[i] == '-') {
      sign = (text[i] == '-') ? -1 : 1;
      ++i;
      skip_ws();
      if (i == text.size())
        throw ConfigError("polynomial \"" + text + "\": trailing operator");
    } else if (!first) {
      throw ConfigError("polynomial \"" + text + "\": expected '+' or '-' at offset " +
                        std::to_string(i));
    }
    i64 coeff = 1;
    bool saw_coeff = false;
    if (std::isdigit((unsigned char)text[i])) {
      coeff = read_uint("coefficient");
      saw_coeff = true;
      skip_ws();
      if (i < text.size() && text[i] == '*') {
        ++i;
        skip_ws();
        if (i == text.size() || text[i] != 't')
          throw ConfigError("polynomial \"" + text + "\": expected t after '*'");
      }
    }
    size_t deg = 0;
    if (i < text.size() && text[i] == 't') {
      ++i;
      deg = 1;
      skip_ws();
      if (i < text.size() && text[i] == '^') {
        ++i;
        skip_ws();
        i64 e = read_uint("exponent");
        if (e > 16) throw ConfigError("polynomial \"" + text + "\": exponent too large");
        deg = size_t(e);
      }
    } else if (!saw_coeff) {
      throw ConfigError("polynomial \"" + text + "\": unexpected character at offset " +
                        std::to_string(i));
    }
    bump(deg, sign * coeff);
    first = false;
    skip_ws();
    if (i == text.size()) break;
    if (text[i] != '+' && text[i] != '-')
      throw ConfigError("polynomial \"" + text + "\": unexpected character at offset " +
                        std::to_string(i));
  }
  while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
  if (coeffs.empty()) coeffs.push_back(0);
  PolynomialSpec spec;
  spec.coeffs = std::move(coeffs);
  return spec;
}

inline std::string polynomial_to_string(const PolynomialSpec& poly) {
  if (poly.coeffs.empty()) return "0";
  std::string out;
  for (size_t d = poly.coeffs.size(); d-- > 0;) {
    i64 c = poly.coeffs[d];
    if (c == 0 && !(d == 0 && out.empty() && poly.coeffs.size() == 1)) continue;
    i64 mag = c < 0 ? -c : c;
    if (out.empty())
      out += (c < 0) ? "-" : "";
    else
      out += (c < 0) ? "-" : "+";
    if (d == 0 || mag != 1) out += std::to_string(mag);
    if (d >= 1) out += "t";
    if (d >= 2) out += "^" + std::to_string(d);
  }
  if (out.empty()) out = "0";
  return out;
}

// ---------------------------------------------------------------------------
// config files: '#' comments, [section] headers, key = value lines

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace((unsigned char)s[b])) ++b;
  while (e > b && std::isspace((unsigned char)s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct LineRef {
  int line;
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
  }
};

inline u64 parse_u64(const std::string& v, const LineRef& at, u64 min = 0,
                     u64 max = ~(u64)0) {
  if (v.empty()) at.fail("expected an integer");
  u64 value = 0;
  for (char c : v) {
    if (!std::isdigit((unsigned char)c)) at.fail("invalid integer \"" + v + "\"");
    u64 d = u64(c - '0');
    if (value > (~(u64)0 - d) / 10) at.fail("integer out of range \"" + v + "\"");
    value = value * 10 + d;
  }
  if (value < min || value > max) at.fail("value " + v + " out of range");
  return value;
}

inline i64 parse_i64(const std::string& v, const LineRef& at) {
  std::string body = v;
  i64 sign = 1;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    if (body[0] == '-') sign = -1;
    body.erase(0, 1);
  }
  u64 mag = parse_u64(body, at, 0, (u64)INT64_MAX);
  return sign * i64(mag);
}

inline bool parse_bool(const std::string& v, const LineRef& at) {
  if (v == "true") return true;
  if (v == "false") return false;
  at.fail("expected true or false, got \"" + v + "\"");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.n_values.clear();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  bool have_samples = false;
  while (std::getline(in, raw)) {
    ++line;
    detail::LineRef at{line};
    std::string s = raw;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') at.fail("unterminated section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "ring" && section != "sampling" && section != "polynomials" &&
          section != "shift" && section != "linearization")
        at.fail("unknown section [" + section + "]");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) at.fail("expected key = value");
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) at.fail("empty key");
    if (section.empty()) at.fail("key outside any [section]");

    if (section == "ring") {
      if (key == "p")
        cfg.p = detail::parse_u64(value, at, 2);
      else if (key == "k")
        cfg.k = unsigned(detail::parse_u64(value, at, 1, 1u << 20));
      else
        at.fail("unknown ring key \"" + key + "\"");
    } else if (section == "sampling") {
      if (key == "n") {
        cfg.n_values.clear();
        for (const std::string& piece : detail::split(value, ','))
          cfg.n_values.push_back(unsigned(detail::parse_u64(piece, at, 1, 1u << 16)));
      } else if (key == "samples") {
        cfg.sample_count = detail::parse_u64(value, at, 1);
        have_samples = true;
      } else if (key == "seed") {
        cfg.seed = detail::parse_u64(value, at);
      } else if (key == "workers") {
        cfg.workers = unsigned(detail::parse_u64(value, at, 1, 4096));
      } else if (key == "gl") {
        cfg.gl_condition = detail::parse_bool(value, at);
      } else {
        at.fail("unknown sampling key \"" + key + "\"");
      }
    } else if (section == "polynomials") {
      // key names are labels; file order defines coordinate order
      try {
        cfg.polynomials.push_back(parse_polynomial(value));
      } catch (const ConfigError& e) {
        at.fail(e.what());
      }
    } else if (section == "shift") {
      if (key == "family") {
        if (value == "none" || value == "zero")
          cfg.shift.kind = ShiftFamilyKind::none;
        else if (value == "p_block_half")
          cfg.shift.kind = ShiftFamilyKind::p_block_half;
        else if (value == "identity_block")
          cfg.shift.kind = ShiftFamilyKind::identity_block;
        else if (value == "explicit")
          cfg.shift.kind = ShiftFamilyKind::explicit_matrix;
        else
          at.fail("unknown shift family \"" + value + "\"");
      } else if (key == "rank") {
        cfg.shift.identity_rank = unsigned(detail::parse_u64(value, at, 0, 1u << 16));
      } else if (key == "rows") {
        cfg.shift.entries.clear();
        for (const std::string& row : detail::split(value, ';')) {
          std::vector<i64> parsed;
          for (const std::string& piece : detail::split(row, ','))
            parsed.push_back(detail::parse_i64(piece, at));
          cfg.shift.entries.push_back(std::move(parsed));
        }
      } else {
        at.fail("unknown shift key \"" + key + "\"");
      }
    } else if (section == "linearization") {
      if (key == "v")
        cfg.linearization_v = unsigned(detail::parse_u64(value, at, 1, 1u << 20));
      else
        at.fail("unknown linearization key \"" + key + "\"");
    }
  }
  if (cfg.n_values.empty()) throw ConfigError("config is missing sampling.n");
  if (!have_samples) throw ConfigError("config is missing sampling.samples");
  return cfg;
}

// Canonical form: parse(serialize_config(cfg)) reproduces cfg exactly.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  out += "[ring]\n";
  out += "p = " + std::to_string(cfg.p) + "\n";
  out += "k = " + std::to_string(cfg.k) + "\n";
  out += "\n[sampling]\n";
  out += "n = ";
  for (size_t i = 0; i < cfg.n_values.size(); ++i)
    out += (i ? "," : "") + std::to_string(cfg.n_values[i]);
  out += "\n";
  out += "samples = " + std::to_string(cfg.sample_count) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "workers = " + std::to_string(cfg.workers) + "\n";
  out += std::string("gl = ") + (cfg.gl_condition ? "true" : "false") + "\n";
  if (!cfg.polynomials.empty()) {
    out += "\n[polynomials]\n";
    for (size_t i = 0; i < cfg.polynomials.size(); ++i)
      out += "P" + std::to_string(i + 1) + " = " + polynomial_to_string(cfg.polynomials[i]) +
             "\n";
  }
  if (cfg.shift.kind != ShiftFamilyKind::none || cfg.shift.identity_rank != 0 ||
      !cfg.shift.entries.empty()) {
    out += "\n[shift]\n";
    const char* family = "none";
    switch (cfg.shift.kind) {
      case ShiftFamilyKind::none: family = "none"; break;
      case ShiftFamilyKind::p_block_half: family = "p_block_half"; break;
      case ShiftFamilyKind::identity_block: family = "identity_block"; break;
      case ShiftFamilyKind::explicit_matrix: family = "explicit"; break;
    }
    out += std::string("family = ") + family + "\n";
    if (cfg.shift.identity_rank != 0)
      out += "rank = " + std::to_string(cfg.shift.identity_rank) + "\n";
    if (!cfg.shift.entries.empty()) {
      out += "rows = ";
      for (size_t i = 0; i < cfg.shift.entries.size(); ++i) {
        if (i) out += ";";
        for (size_t j = 0; j < cfg.shift.entries[i].size(); ++j)
          out += (j ? "," : "") + std::to_string(cfg.shift.entries[i][j]);
      }
      out += "\n";
    }
  }
  if (cfg.linearization_v != 0) {
    out += "\n[linearization]\n";
    out += "v = " + std::to_string(cfg.linearization_v) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// result records

inline std::string format_fixed(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9f", x);
  return buf;
}

inline std::string key_to_string(const EmpiricalJoint::Key& key) {
  std::string out;
  for (size_t c = 0; c < key.size(); ++c) {
    if (c) out += "|";
    out += "P" + std::to_string(c + 1) + ":[";
    for (size_t i = 0; i < key[c].size(); ++i) out += (i ? "," : "") + std::to_string(key[c][i]);
    out += "]";
  }
  return out;
}

inline double freq_stderr(double freq, u64 total) {
  return std::sqrt(std::max(freq * (1.0 - freq), 0.0) / double(total));
}

// One line per class tuple: fixed key=value fields, independent of ordering.
inline std::string format_record(const std::string& run, unsigned n, const std::string& key,
                                 u64 count, u64 total, const double* theory) {
  double freq = double(count) / double(total);
  std::string out = "run=" + run + " n=" + std::to_string(n) + " key=" + key +
                    " count=" + std::to_string(count) + " freq=" + format_fixed(freq) +
                    " theory=" + (theory ? format_fixed(*theory) : std::string("-")) +
                    " stderr=" + format_fixed(freq_stderr(freq, total));
  return out;
}

inline std::vector<std::string> format_records(
    const std::string& run, const EmpiricalJoint& joint,
    const std::map<EmpiricalJoint::Key, double>& theory) {
  std::vector<std::string> lines;
  for (const auto& [key, count] : joint.counts) {
    auto it = theory.find(key);
    const double* th = it == theory.end() ? nullptr : &it->second;
    lines.push_back(format_record(run, joint.n, key_to_string(key), count, joint.total, th));
  }
  lines.push_back(
      format_record(run, joint.n, "undetermined", joint.undetermined_count, joint.total, nullptr));
  return lines;
}

inline std::string csv_header() { return "key,count,frequency,theory,stderr"; }

inline std::vector<std::string> format_csv(const EmpiricalJoint& joint,
                                           const std::map<EmpiricalJoint::Key, double>& theory) {
  std::vector<std::string> lines;
  auto row = [&](const std::string& key, u64 count, const double* th) {
    double freq = double(count) / double(joint.total);
    lines.push_back("\"" + key + "\"," + std::to_string(count) + "," + format_fixed(freq) + "," +
                    (th ? format_fixed(*th) : std::string("")) + "," +
                    format_fixed(freq_stderr(freq, joint.total)));
  };
  for (const auto& [key, count] : joint.counts) {
    auto it = theory.find(key);
    row(key_to_string(key), count, it == theory.end() ? nullptr : &it->second);
  }
  row("undetermined", joint.undetermined_count, nullptr);
  return lines;
}

// ---------------------------------------------------------------------------
// run manifest

struct RunManifest {
  std::string command;
  u64 seed = 0;
  unsigned workers = 1;
  std::string started;
  std::string finished;
  std::vector<std::string> output_files;
  std::string config_text; // canonical serialization of the driving config
};

inline std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string manifest_to_string(const RunManifest& m) {
  std::string out;
  out += "# run manifest\n";
  out += "version = " + std::string(kArtifactVersion) + "\n";
  out += "command = " + m.command + "\n";
  out += "seed = " + std::to_string(m.seed) + "\n";
  out += "workers = " + std::to_string(m.workers) + "\n";
  out += "started = " + m.started + "\n";
  out += "finished = " + m.finished + "\n";
  for (const std::string& f : m.output_files) out += "output = " + f + "\n";
  out += "# --- config (canonical) ---\n";
  out += m.config_text;
  return out;
}

}  // namespace coklab
