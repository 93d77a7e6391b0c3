// Command-line front end: closed-form constants, seeded experiments driven
// by config files, exhaustive oracles, and a quick self-check. Exit codes:
// 0 success, 2 when --assert finds a threshold violation, 1 for any usage,
// config, or infrastructure error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coklab/report.hpp"

namespace fs = std::filesystem;
using namespace coklab;

namespace {

struct SimOpts {
  std::string config_path;
  std::string out_dir = "out";
  u64 seed = 0;
  bool seed_set = false;
  unsigned workers = 0; // 0: take the config's value
  bool do_assert = false;
  double tol = 0.01;
  bool csv = false;
};

Partition parse_partition_arg(const std::string& text) {
  Partition parts;
  std::vector<std::string> pieces = coklab::detail::split(text, ',');
  if (pieces.size() == 1 && pieces[0].empty()) return parts;
  for (const std::string& piece : pieces) {
    if (piece.empty() || piece.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("malformed partition \"" + text + "\": expected comma-separated positive integers");
    unsigned long v = std::stoul(piece);
    if (v == 0 || v > 64) throw ConfigError("partition part " + piece + " out of range [1, 64]");
    parts.push_back(unsigned(v));
  }
  std::sort(parts.rbegin(), parts.rend());
  return parts;
}

std::string partition_to_string(const Partition& parts) {
  std::string out = "[";
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + std::to_string(parts[i]);
  return out + "]";
}

std::string rational_to_string(const BigRat& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write failed on " + path.string());
}

// ---------------------------------------------------------------------------
// limits

struct LimitsOpts {
  u64 p = 2;
  u64 q = 0; // 0: use p
  unsigned k = 1;
  bool has_partition = false;
  std::string partition_text;
  std::vector<unsigned> cnr; // (n, r)
  bool has_alpha = false;
  u64 alpha_p = 2;
  int trivial_pair_corank = -1;
  double tol = 1e-12;
  std::string out_file;
};

int cmd_limits(const LimitsOpts& o) {
  std::vector<std::string> lines;
  if (o.has_alpha) {
    BigRat exact = alpha(o.alpha_p, o.k);
    lines.push_back("alpha p=" + std::to_string(o.alpha_p) + " k=" + std::to_string(o.k) +
                    " value=" + format_fixed(to_double(exact)) + " exact=" + rational_to_string(exact));
  }
  if (o.cnr.size() == 2) {
    BigRat exact = full_rank_prob(o.cnr[0], o.cnr[1], o.p);
    lines.push_back("cnr n=" + std::to_string(o.cnr[0]) + " r=" + std::to_string(o.cnr[1]) +
                    " p=" + std::to_string(o.p) + " value=" + format_fixed(to_double(exact)) +
                    " exact=" + rational_to_string(exact));
  }
  if (o.has_partition) {
    ModuleType m;
    m.q = o.q ? o.q : o.p;
    m.partition = parse_partition_arg(o.partition_text);
    LimitValue v = cohen_lenstra_mass(m, o.tol);
    std::ostringstream err;
    err.precision(3);
    err << v.truncation_error;
    lines.push_back("mass q=" + std::to_string(m.q) + " partition=" +
                    partition_to_string(m.partition) + " value=" + format_fixed(v.value) +
                    " trunc_error=" + err.str());
  }
  if (o.trivial_pair_corank >= 0) {
    LimitValue v = trivial_pair_limit(o.p, unsigned(o.trivial_pair_corank), o.tol);
    std::ostringstream err;
    err.precision(3);
    err << v.truncation_error;
    lines.push_back("trivial_pair p=" + std::to_string(o.p) + " corank=" +
                    std::to_string(o.trivial_pair_corank) + " value=" + format_fixed(v.value) +
                    " trunc_error=" + err.str());
  }
  if (lines.empty())
    throw ConfigError("limits: request at least one of --alpha, --cnr, --partition, --trivial-pair");
  std::string joined;
  for (const std::string& l : lines) joined += l + "\n";
  std::cout << joined;
  if (!o.out_file.empty()) write_text_file(o.out_file, joined);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct MassCache {
  std::map<std::pair<u64, Partition>, double> memo;

  double mass(u64 q, const Partition& parts) {
    auto key = std::make_pair(q, parts);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double v = cohen_lenstra_mass(ModuleType{q, parts}).value;
    memo.emplace(std::move(key), v);
    return v;
  }
};

// Limiting theory per observed key, where a closed form exists.
std::map<EmpiricalJoint::Key, double> theory_for(const std::string& kind,
                                                 const ExperimentConfig& cfg,
                                                 const EmpiricalJoint& joint, MassCache& cache) {
  std::map<EmpiricalJoint::Key, double> theo;
  if (kind == "joint") {
    std::vector<u64> qs;
    for (const PolynomialSpec& poly : cfg.polynomials) {
      u128 q = 1;
      for (int d = 0; d < poly.degree(); ++d) {
        q *= cfg.p;
        if (q > ((u128)1 << 62)) return theo; // residue field too large for doubles
      }
      qs.push_back(u64(q));
    }
    for (const auto& [key, count] : joint.counts) {
      (void)count;
      double v = 1.0;
      for (size_t j = 0; j < key.size(); ++j) v *= cache.mass(qs[j], key[j]);
      theo[key] = v;
    }
  } else if (kind == "shift") {
    switch (cfg.shift.kind) {
      case ShiftFamilyKind::p_block_half:
        // growing-corank regime: coordinates independent in the limit
        for (const auto& [key, count] : joint.counts) {
          (void)count;
          theo[key] = cache.mass(cfg.p, key[0]) * cache.mass(cfg.p, key[1]);
        }
        break;
      case ShiftFamilyKind::identity_block: {
        EmpiricalJoint::Key trivial{{}, {}};
        theo[trivial] = trivial_pair_limit(cfg.p, cfg.shift.identity_rank).value;
        break;
      }
      case ShiftFamilyKind::none:
        // zero shift: both coordinates are the same matrix
        for (const auto& [key, count] : joint.counts) {
          (void)count;
          if (key.size() == 2 && key[0] == key[1]) theo[key] = cache.mass(cfg.p, key[0]);
        }
        break;
      case ShiftFamilyKind::explicit_matrix:
        break; // no general closed form
    }
  }
  return theo;
}

void print_summary(const std::string& kind, const EmpiricalJoint& joint,
                   const std::map<EmpiricalJoint::Key, double>& theo) {
  double undet = double(joint.undetermined_count) / double(joint.total);
  std::cout << "run=" << kind << " n=" << joint.n << " N=" << joint.total
            << " classes=" << joint.counts.size() << " undetermined=" << format_fixed(undet)
            << " wall=" << format_fixed(joint.wall_seconds) << "s\n";
  std::vector<std::pair<EmpiricalJoint::Key, u64>> rows(joint.counts.begin(), joint.counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  size_t shown = std::min<size_t>(rows.size(), 12);
  for (size_t i = 0; i < shown; ++i) {
    const auto& [key, count] = rows[i];
    double freq = double(count) / double(joint.total);
    auto it = theo.find(key);
    std::cout << "  " << key_to_string(key) << " count=" << count << " freq=" << format_fixed(freq)
              << " theory=" << (it == theo.end() ? std::string("-") : format_fixed(it->second))
              << " stderr=" << format_fixed(freq_stderr(freq, joint.total)) << "\n";
  }
  if (rows.size() > shown)
    std::cout << "  (" << (rows.size() - shown) << " more classes in the records file)\n";
}

void collect_violations(const EmpiricalJoint& joint,
                        const std::map<EmpiricalJoint::Key, double>& theo, double tol,
                        std::vector<std::string>& violations) {
  for (const auto& [key, th] : theo) {
    auto it = joint.counts.find(key);
    double freq = it == joint.counts.end() ? 0.0 : double(it->second) / double(joint.total);
    if (std::abs(freq - th) > tol)
      violations.push_back("n=" + std::to_string(joint.n) + " key=" + key_to_string(key) +
                           " freq=" + format_fixed(freq) + " theory=" + format_fixed(th) +
                           " tol=" + format_fixed(tol));
  }
}

void write_records(const fs::path& dir, const std::string& stem, const std::string& kind,
                   const EmpiricalJoint& joint, const std::map<EmpiricalJoint::Key, double>& theo,
                   bool csv, RunManifest& manifest) {
  std::string body = "# manifest = manifest.txt\n";
  for (const std::string& line : format_records(kind, joint, theo)) body += line + "\n";
  fs::path rec = dir / (stem + "_records.txt");
  write_text_file(rec, body);
  manifest.output_files.push_back(rec.filename().string());
  if (csv) {
    std::string c = "# manifest = manifest.txt\n" + csv_header() + "\n";
    for (const std::string& line : format_csv(joint, theo)) c += line + "\n";
    fs::path cf = dir / (stem + ".csv");
    write_text_file(cf, c);
    manifest.output_files.push_back(cf.filename().string());
  }
}

int cmd_simulate(const std::string& kind, const SimOpts& o) {
  std::ifstream in(o.config_path);
  if (!in) throw ConfigError("cannot read config file " + o.config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config(buf.str());
  if (o.seed_set) cfg.seed = o.seed;
  if (o.workers != 0) cfg.workers = o.workers;

  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "simulate " + kind;
  manifest.seed = cfg.seed;
  manifest.workers = cfg.workers;
  manifest.started = timestamp_utc();
  manifest.config_text = serialize_config(cfg);

  MassCache cache;
  std::vector<std::string> violations;
  for (unsigned n : cfg.n_values) {
    ExperimentConfig one = cfg;
    one.n_values = {n};
    std::string stem = kind + "_n" + std::to_string(n);
    if (kind == "joint" || kind == "shift") {
      EmpiricalJoint joint = kind == "joint" ? run_joint(one) : run_shift(one);
      auto theo = theory_for(kind, one, joint, cache);
      print_summary(kind, joint, theo);
      write_records(dir, stem, kind, joint, theo, o.csv, manifest);
      if (o.do_assert) collect_violations(joint, theo, o.tol, violations);
    } else {
      LinearizationResult lr = run_linearization(one);
      std::map<EmpiricalJoint::Key, double> no_theory;
      print_summary("linearize-gl", lr.gl_side, no_theory);
      print_summary("linearize-haar", lr.haar_side, no_theory);
      std::cout << "run=linearize n=" << n << " tv_determined=" << format_fixed(lr.tv_determined)
                << " prank_mismatches=" << lr.prank_mismatches << "\n";
      write_records(dir, stem + "_gl", "linearize-gl", lr.gl_side, no_theory, o.csv, manifest);
      write_records(dir, stem + "_haar", "linearize-haar", lr.haar_side, no_theory, o.csv,
                    manifest);
      std::string summary = "# manifest = manifest.txt\nrun=linearize n=" + std::to_string(n) +
                            " tv_determined=" + format_fixed(lr.tv_determined) +
                            " prank_mismatches=" + std::to_string(lr.prank_mismatches) + "\n";
      fs::path sf = dir / (stem + "_summary.txt");
      write_text_file(sf, summary);
      manifest.output_files.push_back(sf.filename().string());
      if (o.do_assert && lr.prank_mismatches != 0)
        violations.push_back("n=" + std::to_string(n) + " prank_mismatches=" +
                             std::to_string(lr.prank_mismatches) + " expected 0");
    }
  }
  manifest.finished = timestamp_utc();
  write_text_file(dir / "manifest.txt", manifest_to_string(manifest));

  if (!violations.empty()) {
    std::cerr << "assertion violations (tolerance " << format_fixed(o.tol) << "):\n";
    for (const std::string& v : violations) std::cerr << "  " << v << "\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle_aut(u64 p, const std::string& partition_text) {
  Partition parts = parse_partition_arg(partition_text);
  BigInt brute = aut_order_bruteforce(p, parts);
  BigInt formula = aut_order(p, parts);
  std::cout << "aut p=" << p << " partition=" << partition_to_string(parts)
            << " bruteforce=" << brute.str() << " formula=" << formula.str()
            << " agree=" << (brute == formula ? "yes" : "no") << "\n";
  if (brute != formula) {
    std::cerr << "oracle disagreement: brute-force and closed-form differ\n";
    return 1;
  }
  return 0;
}

std::vector<u64> parse_shift_arg(const std::string& text, unsigned n, u64 p) {
  std::vector<u64> shift(size_t(n) * n, 0);
  if (text == "zero" || text.empty()) return shift;
  auto parse_entry = [&](const std::string& piece) -> u64 {
    if (piece.empty() || piece.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("malformed shift entry \"" + piece + "\"");
    u64 v = std::stoull(piece);
    if (v >= p) throw ConfigError("shift entry " + piece + " not reduced mod p");
    return v;
  };
  if (text.rfind("diag:", 0) == 0) {
    std::vector<std::string> pieces = coklab::detail::split(text.substr(5), ',');
    if (pieces.size() != n)
      throw ConfigError("diag shift needs " + std::to_string(n) + " entries");
    for (unsigned i = 0; i < n; ++i) shift[size_t(i) * n + i] = parse_entry(pieces[i]);
    return shift;
  }
  if (text.rfind("rows:", 0) == 0) {
    std::vector<std::string> rows = coklab::detail::split(text.substr(5), ';');
    if (rows.size() != n) throw ConfigError("rows shift needs " + std::to_string(n) + " rows");
    for (unsigned i = 0; i < n; ++i) {
      std::vector<std::string> pieces = coklab::detail::split(rows[i], ',');
      if (pieces.size() != n)
        throw ConfigError("rows shift row " + std::to_string(i) + " needs " + std::to_string(n) +
                          " entries");
      for (unsigned j = 0; j < n; ++j) shift[size_t(i) * n + j] = parse_entry(pieces[j]);
    }
    return shift;
  }
  throw ConfigError("shift must be \"zero\", \"diag:...\" or \"rows:...\"");
}

int cmd_oracle_enum_fp(unsigned n, u64 p, const std::string& shift_text) {
  std::vector<u64> shift = parse_shift_arg(shift_text, n, p);
  BigRat value = enum_fp_exact(n, p, shift);
  std::cout << "enum_fp n=" << n << " p=" << p << " shift=" << (shift_text.empty() ? "zero" : shift_text)
            << " value=" << rational_to_string(value) << " decimal=" << format_fixed(to_double(value));
  // identity-block shifts have a known limit as n grows: report it alongside
  unsigned rank = 0;
  bool diag_block = true;
  for (unsigned i = 0; i < n && diag_block; ++i)
    for (unsigned j = 0; j < n && diag_block; ++j) {
      u64 e = shift[size_t(i) * n + j];
      if (i != j) {
        if (e != 0) diag_block = false;
      } else if (e == 1 && rank == i) {
        ++rank;
      } else if (e != 0) {
        diag_block = false;
      }
    }
  if (diag_block) {
    LimitValue lim = trivial_pair_limit(p, rank);
    std::cout << " limit=" << format_fixed(lim.value);
    if (rank >= 1 && rank <= n)
      std::cout << " bound=" << format_fixed(1.0 - to_double(full_rank_prob(n, rank, p)));
  }
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int cmd_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  {
    bool ok = true;
    unsigned covered = 0;
    for (u64 p : {u64(2), u64(3)})
      for (const Partition& parts : partitions_up_to(8, 8, 8)) {
        // stay inside the enumerator caps: module order <= 2^12 and a tuple
        // space (p^(sum of pairwise min parts)) that enumerates instantly
        unsigned total = 0, digits = 0;
        for (unsigned a : parts) {
          total += a;
          for (unsigned b : parts) digits += std::min(a, b);
        }
        if (p == 2 ? (total > 12 || digits > 18) : (total > 7 || digits > 11)) continue;
        ++covered;
        if (aut_order_bruteforce(p, parts) != aut_order(p, parts)) ok = false;
      }
    check(ok && covered >= 30,
          "automorphism order: closed form matches exhaustive count (" +
              std::to_string(covered) + " shapes)");
  }
  {
    RingRef ring = make_ring(2, 4);
    SplitMix64 rng(42);
    bool ok = true;
    for (int rep = 0; rep < 50 && ok; ++rep) {
      unsigned n = 2 + unsigned(rng.next_below(4));
      ZpMatrix a = sample_matrix(n, ring, rng);
      ZpMatrix u = sample_gl(n, ring, rng);
      ZpMatrix v = sample_gl(n, ring, rng);
      if (!(cokernel_class(mat_mul(mat_mul(u, a), v)) == cokernel_class(a))) ok = false;
    }
    check(ok, "cokernel class is invariant under unit row and column operations");
  }
  {
    double sum = 0;
    for (const Partition& parts : partitions_up_to(10, 10, 4))
      sum += cohen_lenstra_mass(ModuleType{2, parts}).value;
    check(sum > 0.95 && sum < 1.0 + 1e-9, "mass function q=2 nearly sums to one over small classes");
  }
  {
    ExperimentConfig cfg;
    cfg.p = 3;
    cfg.k = 4;
    cfg.n_values = {4, 6};
    cfg.sample_count = 100;
    cfg.polynomials = {parse_polynomial("t"), parse_polynomial("t-1")};
    cfg.shift.kind = ShiftFamilyKind::identity_block;
    cfg.shift.identity_rank = 1;
    cfg.linearization_v = 1;
    bool ok = parse_config(serialize_config(cfg)) == cfg;
    check(ok, "config serialization round-trips");
  }
  {
    bool ok = enum_fp_exact(2, 2, {0, 0, 0, 0}) == BigRat(6, 16) &&
              enum_fp_exact(2, 2, {1, 0, 0, 0}) == BigRat(2, 16);
    check(ok, "exhaustive F_2 enumerator reproduces hand counts");
  }
  {
    ExperimentConfig cfg;
    cfg.p = 2;
    cfg.k = 4;
    cfg.n_values = {4};
    cfg.sample_count = 2000;
    cfg.seed = kDefaultSeed;
    cfg.polynomials = {parse_polynomial("t")};
    EmpiricalJoint a = run_joint(cfg);
    cfg.workers = 4;
    EmpiricalJoint b = run_joint(cfg);
    bool ok = a.counts == b.counts && a.undetermined_count == b.undetermined_count;
    check(ok, "joint run is worker-count independent");
  }
  if (failures) {
    std::cerr << failures << " selftest failure(s)\n";
    return 1;
  }
  std::cout << "selftest passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact-arithmetic laboratory for cokernel statistics of random p-adic matrices"};
  app.require_subcommand(1);

  LimitsOpts lo;
  CLI::App* limits_cmd = app.add_subcommand("limits", "print closed-form constants and masses");
  limits_cmd->add_option("--p", lo.p, "prime for cnr / mass / trivial-pair");
  limits_cmd->add_option("--q", lo.q, "residue field size for --partition (default: p)");
  limits_cmd->add_option("--k", lo.k, "index for --alpha");
  CLI::Option* part_opt =
      limits_cmd->add_option("--partition", lo.partition_text,
                             "partition such as \"3,1\" (empty string: trivial class)");
  limits_cmd->add_option("--cnr", lo.cnr, "n r: full-column-rank probability")->expected(2);
  CLI::Option* alpha_opt =
      limits_cmd->add_option("--alpha", lo.alpha_p, "p: print alpha_{p,k} (use with --k)");
  limits_cmd->add_option("--trivial-pair", lo.trivial_pair_corank,
                         "corank c: limit of Prob(cok(A)=0 and cok(A+diag(I_c,0))=0)");
  limits_cmd->add_option("--tol", lo.tol, "truncation tolerance for infinite products");
  limits_cmd->add_option("--out", lo.out_file, "also write the printed lines to this file");

  SimOpts so;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run a seeded experiment from a config");
  simulate_cmd->require_subcommand(1);
  std::vector<CLI::App*> sim_leaves;
  for (const char* kind : {"joint", "shift", "linearize"}) {
    CLI::App* leaf = simulate_cmd->add_subcommand(kind, std::string("run_") + (kind[0] == 'l' ? "linearization" : kind) + " experiment");
    leaf->add_option("--config", so.config_path, "experiment config file")->required();
    leaf->add_option("--seed", so.seed, "override the config seed");
    leaf->add_option("--workers", so.workers, "override the config worker count");
    leaf->add_option("--out", so.out_dir, "output directory (default: out)");
    leaf->add_flag("--assert", so.do_assert, "exit 2 if any theory comparison exceeds --tol");
    leaf->add_option("--tol", so.tol, "assertion tolerance (default 0.01)");
    leaf->add_flag("--csv", so.csv, "also write CSV exports");
    sim_leaves.push_back(leaf);
  }

  u64 oracle_p = 2;
  std::string oracle_partition;
  unsigned oracle_n = 2;
  std::string oracle_shift = "zero";
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exhaustive enumerations next to closed forms");
  oracle_cmd->require_subcommand(1);
  CLI::App* aut_cmd = oracle_cmd->add_subcommand("aut", "count automorphisms by brute force");
  aut_cmd->add_option("--p", oracle_p, "prime");
  aut_cmd->add_option("--partition", oracle_partition, "partition such as \"1,1\"");
  CLI::App* enum_cmd = oracle_cmd->add_subcommand("enum-fp", "enumerate all matrices over F_p");
  enum_cmd->add_option("--n", oracle_n, "matrix size")->required();
  enum_cmd->add_option("--p", oracle_p, "prime");
  enum_cmd->add_option("--shift", oracle_shift, "\"zero\", \"diag:1,0\" or \"rows:1,0;0,1\"");

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run quick internal consistency checks");

  // seed presence must be distinguished from seed value zero
  std::vector<CLI::Option*> seed_opts;
  for (CLI::App* leaf : sim_leaves) seed_opts.push_back(leaf->get_option("--seed"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  (void)part_opt;
  (void)alpha_opt;
  lo.has_partition = part_opt->count() > 0;
  lo.has_alpha = alpha_opt->count() > 0;
  for (CLI::Option* opt : seed_opts)
    if (opt->count() > 0) so.seed_set = true;

  try {
    if (limits_cmd->parsed()) return cmd_limits(lo);
    if (simulate_cmd->parsed())
      for (CLI::App* leaf : sim_leaves)
        if (leaf->parsed()) return cmd_simulate(leaf->get_name(), so);
    if (oracle_cmd->parsed()) {
      if (aut_cmd->parsed()) return cmd_oracle_aut(oracle_p, oracle_partition);
      if (enum_cmd->parsed()) return cmd_oracle_enum_fp(oracle_n, oracle_p, oracle_shift);
    }
    if (selftest_cmd->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const TooLargeError& e) {
    std::cerr << "enumeration too large: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 1;
}
