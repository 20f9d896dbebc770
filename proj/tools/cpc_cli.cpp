// Command-line front end: test | simulate | calibrate | bench | check.
// Exit codes: 0 ok, 2 usage, 3 data/validation, 4 numeric failure; `check`
// exits 1 when an oracle fails. All randomness flows from --seed (default 42,
// never wall clock); canonical payloads carry no timestamps, only the
// simulate manifest does.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpc/cpc.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// 17 significant digits round-trips a double exactly, so equal runs produce
// byte-identical files.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  cpc::require(static_cast<bool>(out), cpc::errc::file_not_found,
               "cannot open '" + path + "' for writing");
  out << body;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      cpc::require(used == tok.size(), cpc::errc::parse_error, "trailing characters");
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "'" + tok + "' is not a number");
    }
  }
  return out;
}

std::vector<Eigen::Index> parse_indices(const std::string& s, const std::string& flag) {
  std::vector<Eigen::Index> out;
  for (double v : parse_doubles(s, flag)) {
    if (v <= 0 || v != static_cast<double>(static_cast<long long>(v)))
      throw CLI::ValidationError(flag, "'" + fmt(v) + "' is not a positive integer");
    out.push_back(static_cast<Eigen::Index>(v));
  }
  return out;
}

// Flat key=value config: '#' comments, blank lines skipped, later keys win.
std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  cpc::require(static_cast<bool>(in), cpc::errc::file_not_found,
               "config file '" + path + "' not found");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    cpc::require(eq != std::string::npos, cpc::errc::parse_error,
                 path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    cpc::require(!key.empty(), cpc::errc::parse_error,
                 path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

// ---- classifier flags shared by test / simulate / calibrate / bench ----

struct ClassifierFlags {
  cpc::ClassifierConfig cfg;

  void attach(CLI::App* cmd) {
    cmd->add_option("--classifier", cfg.kind, "logistic | mlp | quadratic")
        ->check(CLI::IsMember({"logistic", "mlp", "quadratic"}));
    cmd->add_option("--lambda", cfg.lambda, "logistic L1 penalty");
    cmd->add_option("--max-iter", cfg.max_iter, "logistic iteration cap");
    cmd->add_option("--tol", cfg.tol, "logistic convergence tolerance");
    cmd->add_option("--hidden", cfg.hidden, "mlp hidden width (0: from dims)");
    cmd->add_option("--l1", cfg.l1_penalty, "mlp hidden-layer L1 penalty");
    cmd->add_option("--dropout", cfg.dropout, "mlp dropout rate");
    cmd->add_option("--epochs", cfg.epochs, "mlp epochs");
    cmd->add_option("--batch", cfg.batch, "mlp minibatch size");
    cmd->add_option("--step", cfg.step, "mlp step size");
    cmd->add_option("--optimizer", cfg.optimizer, "mlp update rule")
        ->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--s1", cfg.s1, "quadratic basis interaction order");
    cmd->add_option("--kn", cfg.k_n, "quadratic basis functions per subset");
    cmd->add_option("--quad-lambda", cfg.quad_lambda, "quadratic penalty (0: from m, n)");
  }

  // config-file keys mirror the flag names
  void apply_kv(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* k) { return kv.count(k) ? &kv.at(k) : nullptr; };
    if (auto* v = get("classifier")) cfg.kind = *v;
    if (auto* v = get("lambda")) cfg.lambda = std::stod(*v);
    if (auto* v = get("max_iter")) cfg.max_iter = std::stoi(*v);
    if (auto* v = get("tol")) cfg.tol = std::stod(*v);
    if (auto* v = get("hidden")) cfg.hidden = std::stoi(*v);
    if (auto* v = get("l1")) cfg.l1_penalty = std::stod(*v);
    if (auto* v = get("dropout")) cfg.dropout = std::stod(*v);
    if (auto* v = get("epochs")) cfg.epochs = std::stoi(*v);
    if (auto* v = get("batch")) cfg.batch = std::stoi(*v);
    if (auto* v = get("step")) cfg.step = std::stod(*v);
    if (auto* v = get("optimizer")) cfg.optimizer = *v;
    if (auto* v = get("s1")) cfg.s1 = std::stoi(*v);
    if (auto* v = get("kn")) cfg.k_n = std::stoi(*v);
    if (auto* v = get("quad_lambda")) cfg.quad_lambda = std::stod(*v);
  }
};

// ---- test ----

struct TestArgs {
  std::string csv, sparse_x, sparse_y;
  std::string x_sel, y_sel;
  std::string method = "cpc";
  std::string output, format = "json";
  bool no_standardize = false;
  int permutations = 200;
  std::uint64_t seed = 42;
  ClassifierFlags cls;
};

int run_test(const TestArgs& a) {
  const bool csv_mode = !a.csv.empty();
  const bool sparse_mode = !a.sparse_x.empty() || !a.sparse_y.empty();
  if (csv_mode == sparse_mode)
    throw CLI::ValidationError("test", "pass exactly one of --csv or --sparse-x/--sparse-y");
  if (sparse_mode && (a.sparse_x.empty() || a.sparse_y.empty()))
    throw CLI::ValidationError("--sparse-x/--sparse-y", "both files are required");

  nlohmann::json input;
  cpc::PairedSample sample;
  if (csv_mode) {
    const auto x_cols = split_list(a.x_sel);
    const auto y_cols = split_list(a.y_sel);
    if (x_cols.empty() || y_cols.empty())
      throw CLI::ValidationError("--x/--y", "column selectors are required with --csv");
    for (const auto& name : x_cols)
      if (std::find(y_cols.begin(), y_cols.end(), name) != y_cols.end())
        throw CLI::ValidationError("--x/--y", "selectors overlap on column '" + name + "'");
    sample = cpc::load_paired_csv(a.csv, x_cols, y_cols);
    input = {{"csv", a.csv}, {"x", x_cols}, {"y", y_cols}};
  } else {
    sample = cpc::load_sparse_market(a.sparse_x, a.sparse_y).to_dense();
    input = {{"sparse_x", a.sparse_x}, {"sparse_y", a.sparse_y}};
  }

  nlohmann::json out{{"command", "test"},
                     {"version", kVersion},
                     {"method", a.method},
                     {"input", input},
                     {"n", sample.n()},
                     {"d1", sample.d1()},
                     {"d2", sample.d2()},
                     {"standardize", !a.no_standardize},
                     {"seed", a.seed}};
  if (!a.no_standardize) sample = cpc::standardize(sample).first;

  std::string csv_body;
  if (a.method == "cpc") {
    const cpc::TestReport rep = cpc::cpc_test(sample, a.cls.cfg, a.seed);
    out["report"] = rep.to_json();
    if (rep.variance_floored)
      std::cerr << "warning: variance estimate hit the floor; p-value is conservative\n";
    if (rep.classifier.contains("converged") && rep.classifier["converged"] == false)
      std::cerr << "warning: classifier stopped before converging\n";
    csv_body = "method,n,d1,d2,R,sigma_hat_sq,statistic,p_value,tie_count,variance_floored,seed\n";
    csv_body += "cpc," + std::to_string(sample.n()) + "," + std::to_string(sample.d1()) + "," +
                std::to_string(sample.d2()) + "," + fmt(rep.r) + "," + fmt(rep.sigma_hat_sq) +
                "," + fmt(rep.statistic) + "," + fmt(rep.p_value) + "," +
                std::to_string(rep.tie_count) + "," + (rep.variance_floored ? "1" : "0") + "," +
                std::to_string(a.seed) + "\n";
  } else {
    const cpc::DcorResult res =
        cpc::dcor_test(sample.x, sample.y, a.permutations,
                       cpc::derive_seed(a.seed, cpc::detail::kDcorSeedTag));
    out["permutations"] = a.permutations;
    out["report"] = res.to_json();
    csv_body = "method,n,d1,d2,dcov_sq,dcor,p_value,permutations,seed\n";
    csv_body += "dcor," + std::to_string(sample.n()) + "," + std::to_string(sample.d1()) + "," +
                std::to_string(sample.d2()) + "," + fmt(res.dcov_sq) + "," + fmt(res.dcor) + "," +
                fmt(res.p_value ? *res.p_value : std::nan("")) + "," +
                std::to_string(a.permutations) + "," + std::to_string(a.seed) + "\n";
  }

  if (a.format == "csv")
    write_text(a.output, csv_body);
  else
    write_json(a.output, out);
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string config;
  std::string models = "M1";
  std::string a_grid = "0,0.5,1";
  std::string alphas = "0.05";
  std::string methods = "cpc";
  Eigen::Index n = 1000, d1 = 10, d2 = 10;
  std::string cov = "identity", tail = "gaussian";
  double rho = 0.0, tail_rho = 0.0;
  int reps = 500, permutations = 200, jobs = 1;
  std::uint64_t seed = 42;
  std::string output = "simulate";
  ClassifierFlags cls;
};

nlohmann::json model_json(const cpc::SimModel& m) {
  return {{"model", cpc::model_name(m.id)}, {"d1", m.d1},   {"d2", m.d2},
          {"cov", m.cov},                   {"rho", m.rho}, {"tail", m.tail},
          {"tail_rho", m.tail_rho}};
}

int run_simulate(SimulateArgs& a, const CLI::App* cmd) {
  if (!a.config.empty()) {
    const auto kv = read_kv_config(a.config);
    auto get = [&](const char* k) { return kv.count(k) ? &kv.at(k) : nullptr; };
    // flags given on the command line override the file
    auto absent = [&](const char* flag) { return cmd->count(flag) == 0; };
    if (auto* v = get("models"); v && absent("--models")) a.models = *v;
    if (auto* v = get("a"); v && absent("--a")) a.a_grid = *v;
    if (auto* v = get("alphas"); v && absent("--alphas")) a.alphas = *v;
    if (auto* v = get("methods"); v && absent("--methods")) a.methods = *v;
    if (auto* v = get("n"); v && absent("--n")) a.n = std::stoll(*v);
    if (auto* v = get("d1"); v && absent("--d1")) a.d1 = std::stoll(*v);
    if (auto* v = get("d2"); v && absent("--d2")) a.d2 = std::stoll(*v);
    if (auto* v = get("cov"); v && absent("--cov")) a.cov = *v;
    if (auto* v = get("rho"); v && absent("--rho")) a.rho = std::stod(*v);
    if (auto* v = get("tail"); v && absent("--tail")) a.tail = *v;
    if (auto* v = get("tail_rho"); v && absent("--tail-rho")) a.tail_rho = std::stod(*v);
    if (auto* v = get("reps"); v && absent("--reps")) a.reps = std::stoi(*v);
    if (auto* v = get("dcor_permutations"); v && absent("--permutations"))
      a.permutations = std::stoi(*v);
    if (auto* v = get("jobs"); v && absent("--jobs")) a.jobs = std::stoi(*v);
    if (auto* v = get("seed"); v && absent("--seed")) a.seed = std::stoull(*v);
    if (auto* v = get("output"); v && absent("--output")) a.output = *v;
    a.cls.apply_kv(kv);
  }

  if (a.cov != "identity" && a.cov != "ar1")
    throw CLI::ValidationError("--cov", "expected identity or ar1, got '" + a.cov + "'");
  if (a.tail != "gaussian" && a.tail != "student_t2")
    throw CLI::ValidationError("--tail", "expected gaussian or student_t2, got '" + a.tail + "'");

  cpc::PowerConfig pc;
  pc.models.clear();
  for (const auto& name : split_list(a.models)) {
    cpc::SimModel m;
    try {
      m.id = cpc::parse_model_id(name);
    } catch (const cpc::error&) {
      throw CLI::ValidationError("--models", "unknown model '" + name + "' (expected M1..M6)");
    }
    m.d1 = a.d1;
    m.d2 = a.d2;
    m.cov = a.cov;
    m.rho = a.rho;
    m.tail = a.tail;
    m.tail_rho = a.tail_rho;
    pc.models.push_back(m);
  }
  pc.a_grid = parse_doubles(a.a_grid, "--a");
  pc.alphas = parse_doubles(a.alphas, "--alphas");
  pc.methods = split_list(a.methods);
  pc.n = a.n;
  pc.reps = a.reps;
  pc.classifier = a.cls.cfg;
  pc.dcor_permutations = a.permutations;
  pc.master_seed = a.seed;
  pc.jobs = a.jobs;

  const cpc::PowerResult res = cpc::power_experiment(pc);

  // replicate seeds must never collide within a run
  std::vector<std::uint64_t> seeds = res.dataset_seeds;
  std::sort(seeds.begin(), seeds.end());
  cpc::require(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end(),
               cpc::errc::duplicate_entry, "derived replicate seeds collide");

  std::string reps_csv = "model,a,method,rep,p_value,failed\n";
  for (const auto& row : res.rows)
    reps_csv += row.model + "," + fmt(row.a) + "," + row.method + "," + std::to_string(row.rep) +
                "," + fmt(row.p_value) + "," + (row.failed ? "1" : "0") + "\n";

  std::string cells_csv = "model,a,method,alpha,power,se,reps,failures\n";
  std::string plot_csv = "a,method,alpha,power,se\n";
  for (const auto& c : res.cells) {
    cells_csv += c.model + "," + fmt(c.a) + "," + c.method + "," + fmt(c.alpha) + "," +
                 fmt(c.rejection_rate) + "," + fmt(c.mc_se) + "," + std::to_string(c.reps) + "," +
                 std::to_string(c.failures) + "\n";
    plot_csv += fmt(c.a) + "," + c.method + "," + fmt(c.alpha) + "," + fmt(c.rejection_rate) +
                "," + fmt(c.mc_se) + "\n";
  }

  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : pc.models) models.push_back(model_json(m));
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::json manifest{
      {"command", "simulate"},
      {"version", kVersion},
      {"timestamp_unix_ms",
       std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
      {"config",
       {{"models", models},
        {"a_grid", pc.a_grid},
        {"alphas", pc.alphas},
        {"methods", pc.methods},
        {"n", pc.n},
        {"reps", pc.reps},
        {"classifier", pc.classifier.to_json()},
        {"dcor_permutations", pc.dcor_permutations},
        {"master_seed", pc.master_seed},
        {"jobs", pc.jobs}}},
      {"dataset_seeds", res.dataset_seeds},
      {"outputs",
       {a.output + "_reps.csv", a.output + "_cells.csv", a.output + "_plot.csv"}}};

  write_text(a.output + "_reps.csv", reps_csv);
  write_text(a.output + "_cells.csv", cells_csv);
  write_text(a.output + "_plot.csv", plot_csv);
  write_json(a.output + "_manifest.json", manifest);

  std::cout << "wrote " << a.output << "_{reps,cells,plot}.csv and " << a.output
            << "_manifest.json\n";
  for (const auto& c : res.cells)
    std::cout << c.model << " a=" << fmt(c.a) << " " << c.method << " alpha=" << fmt(c.alpha)
              << " power=" << fmt(c.rejection_rate) << " se=" << fmt(c.mc_se) << "\n";
  return 0;
}

// ---- calibrate ----

struct CalibrateArgs {
  Eigen::Index n = 2000, d1 = 2, d2 = 2;
  int reps = 500, jobs = 1;
  std::uint64_t seed = 42;
  std::string output, format = "json";
  ClassifierFlags cls;
};

int run_calibrate(const CalibrateArgs& a) {
  cpc::CalibrationConfig cc;
  cc.n = a.n;
  cc.d1 = a.d1;
  cc.d2 = a.d2;
  cc.reps = a.reps;
  cc.classifier = a.cls.cfg;
  cc.master_seed = a.seed;
  cc.jobs = a.jobs;
  const cpc::CalibrationResult res = cpc::null_calibration(cc);

  if (a.format == "csv") {
    std::string body = "rep,statistic,p_value\n";
    for (std::size_t i = 0; i < res.statistics.size(); ++i)
      body += std::to_string(i) + "," + fmt(res.statistics[i]) + "," + fmt(res.p_values[i]) + "\n";
    write_text(a.output, body);
    return 0;
  }

  nlohmann::json qq = nlohmann::json::array();
  for (const auto& [theo, obs] : res.qq) qq.push_back({theo, obs});
  write_json(a.output,
             {{"command", "calibrate"},
              {"version", kVersion},
              {"config",
               {{"n", cc.n},
                {"d1", cc.d1},
                {"d2", cc.d2},
                {"reps", cc.reps},
                {"classifier", cc.classifier.to_json()},
                {"master_seed", cc.master_seed},
                {"jobs", cc.jobs}}},
              {"result",
               {{"ks_normal", res.ks_normal},
                {"ks_uniform_p", res.ks_uniform_p},
                {"chi_square_p", res.chi_square_p},
                {"floored", res.floored},
                {"mean_statistic", res.mean_statistic},
                {"qq", qq},
                {"statistics", res.statistics},
                {"p_values", res.p_values}}}});
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::vector<std::string> grid;
  std::string methods = "cpc,dcor,rank";
  int reps = 3;
  std::uint64_t seed = 42;
  std::string output;
  ClassifierFlags cls;
};

int run_bench(const BenchArgs& a) {
  cpc::BenchConfig bc;
  bc.methods = split_list(a.methods);
  bc.reps = a.reps;
  bc.seed = a.seed;
  bc.classifier = a.cls.cfg;
  for (const auto& tok : a.grid) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--grid", "expected key=values, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const auto vals = parse_indices(tok.substr(eq + 1), "--grid");
    if (key == "n")
      bc.n_grid = vals;
    else if (key == "d")
      bc.d_grid = vals;
    else
      throw CLI::ValidationError("--grid", "unknown grid axis '" + key + "'");
  }

  std::vector<cpc::BenchRow> rows = cpc::timing_bench(bc);
  std::sort(rows.begin(), rows.end(), [](const cpc::BenchRow& l, const cpc::BenchRow& r) {
    return std::tie(l.method, l.d, l.n) < std::tie(r.method, r.d, r.n);
  });
  std::string body = "method,n,d,seconds,rank_seconds\n";
  for (const auto& r : rows)
    body += r.method + "," + std::to_string(r.n) + "," + std::to_string(r.d) + "," +
            fmt(r.seconds) + "," + (std::isnan(r.rank_seconds) ? "" : fmt(r.rank_seconds)) + "\n";
  write_text(a.output, body);
  return 0;
}

// ---- check ----

struct CheckArgs {
  bool fast = false;
  std::uint64_t seed = 42;
};

// Random evaluation scores; odd reps draw from a coarse integer grid so ties
// are dense, even reps are continuous.
cpc::ScoredEvaluation fuzz_eval(cpc::Rng& rng, std::size_t rep) {
  const auto n2 = static_cast<std::size_t>(3 + rng.below(198));
  cpc::ScoredEvaluation eval;
  eval.s_joint.resize(n2);
  eval.s_prod.resize(n2);
  if (rep % 2 == 1) {
    const std::uint64_t levels = 2 + rng.below(1 + n2 / 4);
    for (auto& v : eval.s_joint) v = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
    for (auto& v : eval.s_prod) v = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
  } else {
    for (auto& v : eval.s_joint) v = rng.normal();
    for (auto& v : eval.s_prod) v = rng.normal();
  }
  return eval;
}

int run_check(const CheckArgs& a) {
  bool all_pass = true;
  auto report = [&](bool pass, const std::string& name, const std::string& details) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << details << "\n";
    all_pass = all_pass && pass;
  };

  {  // merge rank statistic vs the O(n2^2) double loop, exact equality
    const int reps = a.fast ? 500 : 10000;
    cpc::Rng rng(cpc::derive_seed(a.seed, 1));
    int bad = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto eval = fuzz_eval(rng, static_cast<std::size_t>(rep));
      const std::uint64_t tie_seed = cpc::derive_seed(a.seed, 2, static_cast<std::uint64_t>(rep));
      const auto fast_r = cpc::rank_sum_R(eval, tie_seed);
      const auto slow_r = cpc::rank_sum_R_naive(eval, tie_seed);
      if (fast_r.r != slow_r.r || fast_r.tie_pairs != slow_r.tie_pairs) ++bad;
    }
    report(bad == 0, "rank-merge-oracle",
           std::to_string(reps) + " fuzzed instances, " + std::to_string(bad) + " mismatches");
  }

  {  // variance estimate vs naive evaluation, both raw and tie-aware forms
    const int reps = a.fast ? 100 : 1000;
    cpc::Rng rng(cpc::derive_seed(a.seed, 3));
    int bad = 0;
    double worst = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto eval = fuzz_eval(rng, static_cast<std::size_t>(rep));
      const std::uint64_t tie_seed = cpc::derive_seed(a.seed, 4, static_cast<std::uint64_t>(rep));
      const double d1 = std::abs(cpc::variance_hat(eval).raw - cpc::variance_hat_naive(eval).raw);
      const double d2 = std::abs(cpc::variance_hat(eval, tie_seed).raw -
                                 cpc::variance_hat_naive(eval, tie_seed).raw);
      worst = std::max({worst, d1, d2});
      if (d1 > 1e-15 || d2 > 1e-15) ++bad;
    }
    report(bad == 0, "variance-oracle",
           std::to_string(reps) + " fuzzed instances, max |diff| = " + fmt(worst));
  }

  {  // total-variation sandwich on random discrete pairs, support <= 8
    const int reps = a.fast ? 100 : 1000;
    cpc::Rng rng(cpc::derive_seed(a.seed, 5));
    int bad = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto k = static_cast<std::size_t>(2 + rng.below(7));
      cpc::DiscreteDistPair pair;
      pair.p.resize(k);
      pair.q.resize(k);
      double sp = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        pair.q[i] = 0.05 + rng.uniform01();
        pair.p[i] = rng.below(4) == 0 ? 0.0 : rng.uniform01();
        sp += pair.p[i];
        sq += pair.q[i];
      }
      if (sp == 0.0) {
        pair.p[0] = 1.0;
        sp = 1.0;
      }
      for (std::size_t i = 0; i < k; ++i) {
        pair.p[i] /= sp;
        pair.q[i] /= sq;
      }
      if (!cpc::tv_bound_check(pair).pass) ++bad;
    }
    report(bad == 0, "tv-sandwich-oracle",
           std::to_string(reps) + " fuzzed pairs, " + std::to_string(bad) + " violations");
  }

  {  // analytic gradient vs central differences on a 5-parameter micro-net
    const int trials = a.fast ? 5 : 20;
    cpc::Rng rng(cpc::derive_seed(a.seed, 6));
    const Eigen::Index n = 100;
    Eigen::MatrixXd x(n, 2);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = rng.normal();
      y[static_cast<std::size_t>(i)] = rng.below(2) == 0 ? 0 : 1;
    }
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      cpc::MlpScoreModel m = cpc::mlp_init(2, 1, cpc::derive_seed(a.seed, 7, static_cast<std::uint64_t>(t)));
      m.b1[0] = rng.normal() * 0.1;
      m.w2[0] = rng.normal();
      m.b2 = rng.normal() * 0.1;
      const double l1 = 1e-4;
      const auto g = cpc::mlp_loss_gradient(m, x, y, l1);
      const double analytic[5] = {g.g_w1(0, 0), g.g_w1(0, 1), g.g_b1[0], g.g_w2[0], g.g_b2};
      double* params[5] = {&m.w1(0, 0), &m.w1(0, 1), &m.b1[0], &m.w2[0], &m.b2};
      const double h = 1e-6;
      double num = 0.0, den = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double keep = *params[j];
        *params[j] = keep + h;
        const double up = cpc::mlp_loss_gradient(m, x, y, l1).loss;
        *params[j] = keep - h;
        const double dn = cpc::mlp_loss_gradient(m, x, y, l1).loss;
        *params[j] = keep;
        const double fd = (up - dn) / (2 * h);
        num += (analytic[j] - fd) * (analytic[j] - fd);
        den += analytic[j] * analytic[j];
      }
      worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    }
    report(worst < 1e-4, "mlp-gradient-oracle",
           std::to_string(trials) + " random nets on 100 points, max rel err = " + fmt(worst));
  }

  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"classification-based independence testing toolkit"};
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "run one independence test");
  test->add_option("--csv", ta.csv, "paired CSV with a header row");
  test->add_option("--x", ta.x_sel, "comma-separated X column names");
  test->add_option("--y", ta.y_sel, "comma-separated Y column names");
  test->add_option("--sparse-x", ta.sparse_x, "X block in triplet format");
  test->add_option("--sparse-y", ta.sparse_y, "Y block in triplet format");
  test->add_option("--method", ta.method, "cpc | dcor")
      ->check(CLI::IsMember({"cpc", "dcor"}));
  test->add_option("--permutations", ta.permutations, "dcor permutation count");
  test->add_option("--seed", ta.seed, "master seed (default 42)");
  test->add_option("--output", ta.output, "output path (default stdout)");
  test->add_option("--format", ta.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  test->add_flag("--no-standardize", ta.no_standardize, "skip per-column standardization");
  ta.cls.attach(test);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "power/size campaign over a model grid");
  simulate->add_option("--config", sa.config, "key=value config file");
  simulate->add_option("--models", sa.models, "comma list of M1..M6");
  simulate->add_option("--a", sa.a_grid, "signal strengths");
  simulate->add_option("--alphas", sa.alphas, "test levels");
  simulate->add_option("--methods", sa.methods, "comma list of cpc,dcor");
  simulate->add_option("--n", sa.n, "sample size");
  simulate->add_option("--d1", sa.d1, "X dimension");
  simulate->add_option("--d2", sa.d2, "Y dimension");
  simulate->add_option("--cov", sa.cov, "identity | ar1");
  simulate->add_option("--rho", sa.rho, "ar1 correlation");
  simulate->add_option("--tail", sa.tail, "gaussian | student_t2");
  simulate->add_option("--tail-rho", sa.tail_rho, "heavy-tail scale correlation");
  simulate->add_option("--reps", sa.reps, "replicates per cell");
  simulate->add_option("--permutations", sa.permutations, "dcor permutation count");
  simulate->add_option("--jobs", sa.jobs, "worker threads (default 1)");
  simulate->add_option("--seed", sa.seed, "master seed (default 42)");
  simulate->add_option("--output", sa.output, "output file prefix");
  sa.cls.attach(simulate);

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "null-calibration study");
  calibrate->add_option("--n", ca.n, "sample size");
  calibrate->add_option("--d1", ca.d1, "X dimension");
  calibrate->add_option("--d2", ca.d2, "Y dimension");
  calibrate->add_option("--reps", ca.reps, "replicates");
  calibrate->add_option("--jobs", ca.jobs, "worker threads (default 1)");
  calibrate->add_option("--seed", ca.seed, "master seed (default 42)");
  calibrate->add_option("--output", ca.output, "output path (default stdout)");
  calibrate->add_option("--format", ca.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  ca.cls.attach(calibrate);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "wall-clock scaling table");
  bench->add_option("--grid", ba.grid, "axes as n=...,... d=...,...")->expected(-1);
  bench->add_option("--methods", ba.methods, "comma list of cpc,dcor,rank");
  bench->add_option("--reps", ba.reps, "timing repetitions");
  bench->add_option("--seed", ba.seed, "master seed (default 42)");
  bench->add_option("--output", ba.output, "output path (default stdout)");
  ba.cls.attach(bench);

  CheckArgs ka;
  auto* check = app.add_subcommand("check", "oracle suite; nonzero exit on any failure");
  check->add_flag("--fast", ka.fast, "reduced fuzz sizes");
  check->add_option("--seed", ka.seed, "master seed (default 42)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*test) return run_test(ta);
    if (*simulate) return run_simulate(sa, simulate);
    if (*calibrate) return run_calibrate(ca);
    if (*bench) return run_bench(ba);
    if (*check) return run_check(ka);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cpc::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cpc::is_numeric_failure(e.code()) ? 4 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
