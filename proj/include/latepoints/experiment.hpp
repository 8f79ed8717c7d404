#pragma once

// Experiment orchestration: configuration, seeded replicas on a worker pool,
// field persistence with SHA-256 manifests, per-replica statistics and the
// CSV / JSON / plot-data reports.
//
// Output directory layout
//   manifest.json              config snapshot, tool version, one entry per replica
//   field_n{n}_r{idx}.lprw     first-hit field of replica idx at side n
//   ledger_n{n}_r{idx}.json    crossing counts at the fixed center
//   stats.csv                  n,seed,alpha,beta,statistic,value
//   summary.json               per-statistic medians, fits and predictions
//   *.dat                      two-column plot series

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "latepoints/estimators.hpp"
#include "latepoints/excursions.hpp"
#include "latepoints/field_io.hpp"
#include "latepoints/oracle.hpp"
#include "latepoints/theory.hpp"
#include "latepoints/walk.hpp"

#ifndef LATEPOINTS_VERSION
#define LATEPOINTS_VERSION "0.0.0"
#endif

namespace latepoints::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = LATEPOINTS_VERSION;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DigestMismatch : public io::FormatError {
 public:
  using io::FormatError::FormatError;
};

enum class Mode { theory, simulate, analyze, oracle, sweep };

inline const std::map<std::string, Mode>& mode_names() {
  static const std::map<std::string, Mode> m{{"theory", Mode::theory},   {"simulate", Mode::simulate},
                                             {"analyze", Mode::analyze}, {"oracle", Mode::oracle},
                                             {"sweep", Mode::sweep}};
  return m;
}

inline std::string to_string(Mode m) {
  for (const auto& [k, v] : mode_names())
    if (v == m) return k;
  return "?";
}

struct ExperimentConfig {
  Mode mode = Mode::theory;
  std::vector<std::int32_t> ns;
  std::vector<double> alphas{0.5};
  std::vector<double> betas{0.5};
  std::uint32_t seeds = 8;
  std::uint64_t master_seed = 1;
  int workers = 1;
  fs::path out = "latepoints_out";
  double schedule_base = 2.0;
  double schedule_r0 = 4.0;
  bool cover = false;
  std::set<std::string> explicit_keys;  // options given on the command line or in the file

  bool given(const std::string& key) const { return explicit_keys.count(key) != 0; }

  void validate() const {
    const bool walks = mode == Mode::simulate || mode == Mode::sweep;
    if (workers < 1) throw UsageError("--workers must be >= 1");
    if (seeds < 1) throw UsageError("--seeds must be >= 1");
    if (alphas.empty()) throw UsageError("--alpha needs at least one value");
    for (double a : alphas)
      if (!(a > 0.0 && a <= 1.0)) throw UsageError("alpha must lie in (0,1], got " + std::to_string(a));
    for (double b : betas)
      if (!(b > 0.0 && b < 1.0)) throw UsageError("beta must lie in (0,1), got " + std::to_string(b));
    for (auto n : ns)
      if (n < 2 || n > 65536) throw UsageError("n must lie in [2, 65536], got " + std::to_string(n));
    if (!(schedule_base > 1.0)) throw UsageError("--schedule-base must be > 1");
    if (!(schedule_r0 > 0.0)) throw UsageError("--schedule-r0 must be > 0");
    if (walks && ns.empty()) throw UsageError("mode " + to_string(mode) + " needs --n");
    if (mode == Mode::theory)
      for (const char* k : {"n", "seeds", "master-seed", "cover", "workers"})
        if (given(k)) throw UsageError(std::string("--") + k + " conflicts with --mode theory");
    if (mode == Mode::oracle)
      for (const char* k : {"alpha", "beta", "seeds", "master-seed", "cover"})
        if (given(k)) throw UsageError(std::string("--") + k + " conflicts with --mode oracle");
    if (mode == Mode::analyze)
      for (const char* k : {"n", "seeds", "master-seed", "cover"})
        if (given(k)) throw UsageError(std::string("--") + k + " conflicts with --mode analyze (read from the manifest)");
  }

  json to_json() const {
    return json{{"mode", to_string(mode)},
                {"n", ns},
                {"alpha", alphas},
                {"beta", betas},
                {"seeds", seeds},
                {"master-seed", master_seed},
                {"workers", workers},
                {"out", out.string()},
                {"schedule-base", schedule_base},
                {"schedule-r0", schedule_r0},
                {"cover", cover}};
  }
};

namespace detail {

template <class T>
std::vector<T> json_list(const json& v, const std::string& key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

template <class T>
T json_value(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

/// Apply a flat JSON object; keys already set by flags are left alone.
inline void apply_file(ExperimentConfig& cfg, const fs::path& path, const std::set<std::string>& from_flags) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a flat JSON object");
  for (const auto& [key, v] : j.items()) {
    if (v.is_object()) throw UsageError("config file must be flat; key '" + key + "' holds an object");
    if (from_flags.count(key)) continue;
    if (key == "mode") {
      const auto s = json_value<std::string>(v, key);
      const auto it = mode_names().find(s);
      if (it == mode_names().end()) throw UsageError("unknown mode '" + s + "'");
      cfg.mode = it->second;
    } else if (key == "n") {
      cfg.ns = json_list<std::int32_t>(v, key);
    } else if (key == "alpha") {
      cfg.alphas = json_list<double>(v, key);
    } else if (key == "beta") {
      cfg.betas = json_list<double>(v, key);
    } else if (key == "seeds") {
      cfg.seeds = json_value<std::uint32_t>(v, key);
    } else if (key == "master-seed") {
      cfg.master_seed = json_value<std::uint64_t>(v, key);
    } else if (key == "workers") {
      cfg.workers = json_value<int>(v, key);
    } else if (key == "out") {
      cfg.out = json_value<std::string>(v, key);
    } else if (key == "schedule-base") {
      cfg.schedule_base = json_value<double>(v, key);
    } else if (key == "schedule-r0") {
      cfg.schedule_r0 = json_value<double>(v, key);
    } else if (key == "cover") {
      cfg.cover = json_value<bool>(v, key);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
    cfg.explicit_keys.insert(key);
  }
}

}  // namespace detail

/// Thrown for --help; carries the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ExperimentConfig parse_config(int argc, const char* const* argv) {
  ExperimentConfig cfg;
  CLI::App app{"Late points of the planar torus random walk", "latepoints"};
  std::string mode;
  std::string config;
  std::string out;
  app.add_option("--mode", mode, "theory | simulate | analyze | oracle | sweep")
      ->check(CLI::IsMember({"theory", "simulate", "analyze", "oracle", "sweep"}));
  app.add_option("--n", cfg.ns, "torus sides")->delimiter(',');
  app.add_option("--alpha", cfg.alphas, "lateness levels in (0,1]")->delimiter(',');
  app.add_option("--beta", cfg.betas, "distance exponents in (0,1)")->delimiter(',');
  app.add_option("--seeds", cfg.seeds, "replicas per n");
  app.add_option("--master-seed", cfg.master_seed, "master seed for replica streams");
  app.add_option("--workers", cfg.workers, "worker threads");
  app.add_option("--out", out, "output directory");
  app.add_option("--config", config, "flat JSON config file; flags take precedence");
  app.add_option("--schedule-base", cfg.schedule_base, "geometric radius ratio");
  app.add_option("--schedule-r0", cfg.schedule_r0, "innermost radius");
  app.add_flag("--cover", cfg.cover, "run every walk to cover time");

  if (argc <= 1) throw UsageError("no arguments given\n" + app.help());
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  std::set<std::string> from_flags;
  for (const char* k : {"mode", "n", "alpha", "beta", "seeds", "master-seed", "workers", "out",
                        "schedule-base", "schedule-r0", "cover"})
    if (app.count(std::string("--") + k) > 0) from_flags.insert(k);
  if (!out.empty()) cfg.out = out;
  if (!mode.empty()) cfg.mode = mode_names().at(mode);
  cfg.explicit_keys = from_flags;
  if (!config.empty()) detail::apply_file(cfg, config, from_flags);
  if (!cfg.given("mode")) throw UsageError("--mode is required");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(std::vector<std::string> args) {
  std::vector<const char*> argv{"latepoints"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

// ---------------------------------------------------------------------------
// Digests

inline std::string sha256_hex(const std::vector<unsigned char>& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 15]);
  }
  return s;
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(io::read_bytes(p)); }

// ---------------------------------------------------------------------------
// Replicas

struct ReplicaSpec {
  std::int32_t n = 0;
  std::uint32_t index = 0;
  std::uint64_t ordinal = 0;
  std::uint64_t seed = 0;
};

/// One replica per (n, seed index), n ascending; stream = replica ordinal.
inline std::vector<ReplicaSpec> plan_replicas(std::vector<std::int32_t> ns, std::uint32_t seeds,
                                              std::uint64_t master) {
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<ReplicaSpec> out;
  for (auto n : ns)
    for (std::uint32_t i = 0; i < seeds; ++i) {
      const auto ord = out.size();
      out.push_back({n, i, ord, rng::replica_seed(master, ord)});
    }
  return out;
}

inline std::vector<ReplicaSpec> plan_replicas(const ExperimentConfig& cfg) {
  return plan_replicas(cfg.ns, cfg.seeds, cfg.master_seed);
}

/// Steps needed so every requested late set is defined.
inline std::uint64_t required_length(std::int32_t n, const std::vector<double>& alphas) {
  std::uint64_t t = 0;
  for (double a : alphas) t = std::max(t, estimators::late_threshold(a, n));
  return t;
}

inline Point fixed_center(std::int32_t n) { return {n / 2, n / 2}; }

/// Run `count` jobs on `workers` threads; job i only writes slot i.
template <class F>
void parallel_for(std::size_t count, int workers, F&& job) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) job(i);
  };
  const auto extra = static_cast<std::size_t>(std::max(1, workers)) - 1;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(extra, count); ++w) pool.emplace_back(loop);
  loop();
}

struct ReplicaRun {
  FirstHitField field;
  std::vector<std::uint64_t> level_counts;  // up-crossings per level at the fixed center
  std::uint64_t center_visits = 0;
  std::vector<double> radii;
};

inline ReplicaRun simulate_replica(const ReplicaSpec& r, bool cover, const std::vector<double>& alphas,
                                   std::optional<excursions::RadiiSchedule> schedule) {
  const WalkConfig wc{r.n, r.seed, {}};
  ReplicaRun out;
  if (schedule) {
    excursions::CrossingMachine m(r.n, fixed_center(r.n), *schedule);
    out.field = cover ? run_to_cover(wc, m) : run_to_time(wc, required_length(r.n, alphas), m);
    for (int l = 1; l <= schedule->top(); ++l) out.level_counts.push_back(m.up_count(l));
    out.center_visits = m.center_visits();
    for (int k = 0; k <= schedule->top(); ++k) out.radii.push_back(schedule->radius(k));
  } else {
    out.field = cover ? run_to_cover(wc) : run_to_time(wc, required_length(r.n, alphas));
  }
  return out;
}

inline std::optional<excursions::RadiiSchedule> schedule_for(const ExperimentConfig& cfg, std::int32_t n) {
  try {
    return excursions::RadiiSchedule::geometric_for_torus(n, cfg.schedule_r0, cfg.schedule_base);
  } catch (const excursions::DomainError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Statistics

struct StatRow {
  std::int32_t n = 0;
  std::uint64_t seed = 0;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::string statistic;
  double value = 0.0;
};

/// Statistic names and the exponent they estimate.
inline const std::vector<std::pair<std::string, theory::ExponentKind>>& statistic_kinds() {
  static const std::vector<std::pair<std::string, theory::ExponentKind>> k{
      {"late_count", theory::ExponentKind::late_count},
      {"fixed_disc", theory::ExponentKind::fixed_disc},
      {"late_disc", theory::ExponentKind::late_disc},
      {"pair_count", theory::ExponentKind::pair_rho}};
  return k;
}

/// Late-set statistics of one field.  Late sets the run is too short for and
/// radii n^beta beyond n/2 are skipped.
inline std::vector<StatRow> replica_statistics(const FirstHitField& f, const std::vector<double>& alphas,
                                               const std::vector<double>& betas) {
  std::vector<StatRow> rows;
  if (f.covered) rows.push_back({f.n, f.seed, {}, {}, "cover_ratio", estimators::cover_ratio(f.walk_length, f.n)});
  for (double a : alphas) {
    if (f.walk_length < estimators::late_threshold(a, f.n)) continue;
    const auto L = estimators::late_set(f, a);
    rows.push_back({f.n, f.seed, a, {}, "late_count", static_cast<double>(L.size())});
    for (double b : betas) {
      const double r = std::pow(static_cast<double>(f.n), b);
      if (r > f.n / 2.0) continue;
      rows.push_back({f.n, f.seed, a, b, "fixed_disc",
                      static_cast<double>(estimators::disc_count(L, fixed_center(f.n), r))});
      const double late_disc =
          L.size() == 0 ? 0.0
                        : static_cast<double>(estimators::disc_count(L, estimators::sample_late_point(L, f.seed), r));
      rows.push_back({f.n, f.seed, a, b, "late_disc", late_disc});
      rows.push_back({f.n, f.seed, a, b, "pair_count", static_cast<double>(estimators::pair_count(L, r))});
    }
  }
  return rows;
}

inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string stats_csv(const std::vector<StatRow>& rows) {
  std::string s = "n,seed,alpha,beta,statistic,value\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.seed) + ",";
    s += (r.alpha ? fmt9(*r.alpha) : "") + "," + (r.beta ? fmt9(*r.beta) : "") + ",";
    s += r.statistic + "," + fmt9(r.value) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

struct ReplicaEntry {
  ReplicaSpec replica;
  std::string field_file;
  std::string ledger_file;
  std::string sha256;
  std::uint64_t walk_length = 0;
  bool covered = false;
  std::string error;  // empty when the replica succeeded

  bool ok() const { return error.empty(); }
};

struct RunManifest {
  json config;
  std::string version = kToolVersion;
  std::vector<ReplicaEntry> replicas;

  json to_json() const {
    json reps = json::array();
    for (const auto& e : replicas) {
      json r{{"n", e.replica.n},          {"index", e.replica.index},   {"ordinal", e.replica.ordinal},
             {"seed", e.replica.seed},    {"file", e.field_file},    {"ledger", e.ledger_file},
             {"sha256", e.sha256},     {"walk_length", e.walk_length}, {"covered", e.covered},
             {"status", e.ok() ? "ok" : "failed"}};
      if (!e.ok()) r["error"] = e.error;
      reps.push_back(std::move(r));
    }
    return json{{"tool", "latepoints"}, {"version", version}, {"config", config}, {"replicas", reps}};
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.config = j.at("config");
    m.version = j.at("version").get<std::string>();
    for (const auto& r : j.at("replicas")) {
      ReplicaEntry e;
      e.replica = {r.at("n").get<std::int32_t>(), r.at("index").get<std::uint32_t>(),
                r.at("ordinal").get<std::uint64_t>(), r.at("seed").get<std::uint64_t>()};
      e.field_file = r.at("file").get<std::string>();
      e.ledger_file = r.value("ledger", std::string{});
      e.sha256 = r.at("sha256").get<std::string>();
      e.walk_length = r.at("walk_length").get<std::uint64_t>();
      e.covered = r.at("covered").get<bool>();
      e.error = r.value("error", std::string{});
      m.replicas.push_back(std::move(e));
    }
    return m;
  }
};

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

inline std::string field_name(const ReplicaSpec& s) {
  return "field_n" + std::to_string(s.n) + "_r" + std::to_string(s.index) + ".lprw";
}

inline std::string ledger_name(const ReplicaSpec& s) {
  return "ledger_n" + std::to_string(s.n) + "_r" + std::to_string(s.index) + ".json";
}

/// Run every replica, persist fields and ledgers, and write manifest.json.
/// A failing replica is recorded and the rest still run.
inline RunManifest run_sweep(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out);
  const auto plan = plan_replicas(cfg);
  RunManifest m;
  m.config = cfg.to_json();
  m.replicas.resize(plan.size());
  parallel_for(plan.size(), cfg.workers, [&](std::size_t i) {
    ReplicaEntry& e = m.replicas[i];
    e.replica = plan[i];
    e.field_file = field_name(plan[i]);
    try {
      const auto run = simulate_replica(plan[i], cfg.cover, cfg.alphas, schedule_for(cfg, plan[i].n));
      const auto bytes = io::encode_field(run.field);
      io::write_bytes(cfg.out / e.field_file, bytes);
      e.sha256 = sha256_hex(bytes);
      e.walk_length = run.field.walk_length;
      e.covered = run.field.covered;
      if (!run.radii.empty()) {
        e.ledger_file = ledger_name(plan[i]);
        const json lj{{"center", {fixed_center(plan[i].n).x, fixed_center(plan[i].n).y}},
                      {"radii", run.radii},
                      {"up_crossings", run.level_counts},
                      {"center_visits", run.center_visits},
                      {"walk_length", run.field.walk_length}};
        write_text(cfg.out / e.ledger_file, lj.dump(2) + "\n");
      }
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
  });
  write_text(cfg.out / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

inline RunManifest load_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("no manifest.json in " + dir.string());
  return RunManifest::from_json(json::parse(is));
}

/// Load a replica's field after checking its digest against the manifest.
inline FirstHitField load_replica(const fs::path& dir, const ReplicaEntry& e) {
  const auto bytes = io::read_bytes(dir / e.field_file);
  if (sha256_hex(bytes) != e.sha256) throw DigestMismatch("digest mismatch for " + e.field_file);
  return io::decode_field(bytes);
}

// ---------------------------------------------------------------------------
// Reports

struct Grouped {
  std::string statistic;
  std::optional<double> alpha, beta;
  std::map<std::int32_t, std::vector<double>> per_n;
};

inline std::vector<Grouped> group_rows(const std::vector<StatRow>& rows) {
  std::vector<Grouped> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Grouped& g) {
      return g.statistic == r.statistic && g.alpha == r.alpha && g.beta == r.beta;
    });
    if (it == out.end()) {
      out.push_back({r.statistic, r.alpha, r.beta, {}});
      it = out.end() - 1;
    }
    it->per_n[r.n].push_back(r.value);
  }
  return out;
}

inline std::optional<double> predicted_for(const Grouped& g) {
  if (g.statistic == "cover_ratio") return estimators::kCoverConstant;
  for (const auto& [name, kind] : statistic_kinds())
    if (name == g.statistic && g.alpha) {
      if (theory::needs_beta(kind) && !g.beta) return std::nullopt;
      return theory::predicted_exponent(kind, *g.alpha, g.beta);
    }
  return std::nullopt;
}

inline json summary_json(const std::vector<StatRow>& rows) {
  json groups = json::array();
  for (const auto& g : group_rows(rows)) {
    json j{{"statistic", g.statistic}};
    j["alpha"] = g.alpha ? json(*g.alpha) : json();
    j["beta"] = g.beta ? json(*g.beta) : json();
    json per_n = json::array();
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, vals] : g.per_n) {
      const auto s = estimators::summarize(vals);
      per_n.push_back({{"n", n}, {"replicas", vals.size()}, {"median", s.median}, {"mean", s.mean},
                       {"q1", s.q1}, {"q3", s.q3}});
      pts.emplace_back(n, s.median);
    }
    j["per_n"] = per_n;
    const auto pred = predicted_for(g);
    if (g.statistic == "cover_ratio") {
      j["predicted_constant"] = estimators::kCoverConstant;
    } else {
      j["predicted_exponent"] = pred ? json(*pred) : json();
      if (g.statistic == "pair_count" && g.alpha && g.beta)
        j["predicted_mean_exponent"] = theory::rho_hat_closed(*g.alpha, *g.beta);
      try {
        const auto fit = estimators::exponent_fit(pts);
        j["fit"] = {{"slope", fit.slope},         {"intercept", fit.intercept}, {"residual", fit.residual},
                    {"halfwidth95", fit.halfwidth}, {"excluded_n", fit.excluded_n}};
      } catch (const estimators::DomainError& e) {
        j["fit"] = {{"error", e.what()}};
      }
    }
    groups.push_back(std::move(j));
  }
  return groups;
}

inline std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

/// Two-column series: fitted slopes over beta next to the predicted curve.
inline void write_plot_data(const fs::path& dir, const json& groups, const std::vector<double>& alphas) {
  for (const auto& [name, kind] : statistic_kinds()) {
    if (!theory::needs_beta(kind)) continue;
    for (double a : alphas) {
      std::string emp, pred;
      for (const auto& g : groups)
        if (g["statistic"] == name && g["alpha"] == a && g["fit"].contains("slope"))
          emp += fmt9(g["beta"].get<double>()) + " " + fmt9(g["fit"]["slope"].get<double>()) + "\n";
      for (int j = 0; j < 512; ++j) {
        const double b = (j + 0.5) / 512.0;
        pred += fmt9(b) + " " + fmt9(theory::predicted_exponent(kind, a, b)) + "\n";
      }
      const std::string stem = name + "_a" + alpha_tag(a);
      write_text(dir / (stem + "_empirical.dat"), emp);
      write_text(dir / (stem + "_predicted.dat"), pred);
    }
  }
}

/// Statistics of every successful replica in the manifest, in manifest order.
inline std::vector<StatRow> analyze_manifest(const fs::path& dir, const RunManifest& m,
                                             const std::vector<double>& alphas, const std::vector<double>& betas,
                                             int workers) {
  std::vector<std::vector<StatRow>> per(m.replicas.size());
  std::vector<std::string> errors(m.replicas.size());
  parallel_for(m.replicas.size(), workers, [&](std::size_t i) {
    const auto& e = m.replicas[i];
    if (!e.ok()) return;
    try {
      per[i] = replica_statistics(load_replica(dir, e), alphas, betas);
      if (!e.ledger_file.empty()) {
        std::ifstream is(dir / e.ledger_file);
        const auto lj = json::parse(is);
        const auto counts = lj.at("up_crossings").get<std::vector<std::uint64_t>>();
        for (std::size_t l = 0; l < counts.size(); ++l)
          per[i].push_back({e.replica.n, e.replica.seed, {}, {}, "excursions_l" + std::to_string(l + 1),
                            static_cast<double>(counts[l])});
      }
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error(m.replicas[i].field_file + ": " + errors[i]);
  std::vector<StatRow> rows;
  for (auto& p : per) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

inline void emit_reports(const fs::path& dir, const RunManifest& m, const std::vector<StatRow>& rows,
                         const std::vector<double>& alphas) {
  ensure_dir(dir);
  write_text(dir / "stats.csv", stats_csv(rows));
  const json groups = summary_json(rows);
  std::size_t failed = 0;
  for (const auto& e : m.replicas) failed += !e.ok();
  const json summary{{"version", kToolVersion},
                     {"replicas", m.replicas.size()},
                     {"failed_replicas", failed},
                     {"groups", groups}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  write_plot_data(dir, groups, alphas);
}

// ---------------------------------------------------------------------------
// Theory and oracle tables

inline std::vector<double> beta_samples(std::size_t count = 512) {
  std::vector<double> b;
  for (std::size_t j = 0; j < count; ++j) b.push_back((static_cast<double>(j) + 0.5) / static_cast<double>(count));
  return b;
}

inline std::string theory_csv(const std::vector<double>& alphas, const std::vector<double>& betas) {
  using theory::ExponentKind;
  std::string s = "alpha,beta,kind,value\n";
  for (double a : alphas) {
    s += fmt9(a) + ",," + std::string(theory::to_string(ExponentKind::late_count)) + "," +
         fmt9(theory::predicted_exponent(ExponentKind::late_count, a)) + "\n";
    for (double b : betas)
      for (auto k : {ExponentKind::fixed_disc, ExponentKind::late_disc, ExponentKind::pair_rho,
                     ExponentKind::pair_rho_hat})
        s += fmt9(a) + "," + fmt9(b) + "," + std::string(theory::to_string(k)) + "," +
             fmt9(theory::predicted_exponent(k, a, b)) + "\n";
  }
  return s;
}

inline void run_theory(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out);
  const auto betas = cfg.given("beta") ? cfg.betas : beta_samples();
  write_text(cfg.out / "theory.csv", theory_csv(cfg.alphas, betas));
  for (double a : cfg.alphas) {
    std::string rho, rho_hat;
    for (double b : beta_samples()) {
      rho += fmt9(b) + " " + fmt9(theory::rho_closed(a, b)) + "\n";
      rho_hat += fmt9(b) + " " + fmt9(theory::rho_hat_closed(a, b)) + "\n";
    }
    write_text(cfg.out / ("rho_a" + alpha_tag(a) + ".dat"), rho);
    write_text(cfg.out / ("rho_hat_a" + alpha_tag(a) + ".dat"), rho_hat);
  }
}

/// Exact solves against their logarithmic approximations.
inline std::string oracle_csv(const std::vector<std::int32_t>& ns) {
  std::string s = "problem,n,r,R,x,exact,prediction,error\n";
  const auto row = [&](const char* prob, int n, int r, int R, int x, double exact, double pred) {
    s += std::string(prob) + "," + std::to_string(n) + "," + std::to_string(r) + "," + std::to_string(R) + "," +
         std::to_string(x) + "," + fmt9(exact) + "," + fmt9(pred) + "," + fmt9(exact - pred) + "\n";
  };
  for (auto n : ns) {
    const auto T = oracle::expected_exit_time(n);
    row("exit_time", n, 0, 0, 0, T.at({0, 0}), double(n) * n);
    const auto P = oracle::hit_before_exit_prob(n);
    const auto G = oracle::green_disc_field(n);
    for (int x = 1; x < n; ++x) {
      const double ln = std::log(double(n) / x);
      row("hit_prob_log", n, 0, 0, x, P.at({x, 0}) * std::log(double(n)), ln);
      row("green", n, 0, 0, x, G.at({x, 0}), 2 / std::numbers::pi * ln);
    }
  }
  for (auto [r, R] : {std::pair{8, 64}, std::pair{16, 128}}) {
    const auto A = oracle::annulus_prob(r, R);
    for (int x = r + 1; x < R; ++x)
      row("annulus", 0, r, R, x, A.at({x, 0}), std::log(double(R) / x) / std::log(double(R) / r));
  }
  return s;
}

inline void run_oracle(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out);
  write_text(cfg.out / "oracle.csv", oracle_csv(cfg.ns.empty() ? std::vector<std::int32_t>{16, 32, 64} : cfg.ns));
}

/// analyze: alpha / beta fall back to the manifest when not given.
inline void run_analyze(const ExperimentConfig& cfg) {
  const auto m = load_manifest(cfg.out);
  const auto& mc = m.config;
  const auto alphas = cfg.given("alpha") ? cfg.alphas : mc.at("alpha").get<std::vector<double>>();
  const auto betas = cfg.given("beta") ? cfg.betas : mc.at("beta").get<std::vector<double>>();
  emit_reports(cfg.out, m, analyze_manifest(cfg.out, m, alphas, betas, cfg.workers), alphas);
}

/// Dispatch; returns the process exit code (0 ok, 2 runtime failure).
inline int run(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::theory: run_theory(cfg); break;
    case Mode::oracle: run_oracle(cfg); break;
    case Mode::simulate: {
      const auto m = run_sweep(cfg);
      for (const auto& e : m.replicas)
        if (!e.ok()) return 2;
      break;
    }
    case Mode::sweep: {
      const auto m = run_sweep(cfg);
      emit_reports(cfg.out, m, analyze_manifest(cfg.out, m, cfg.alphas, cfg.betas, cfg.workers), cfg.alphas);
      for (const auto& e : m.replicas)
        if (!e.ok()) return 2;
      break;
    }
    case Mode::analyze: run_analyze(cfg); break;
  }
  return 0;
}

}  // namespace latepoints::experiment
