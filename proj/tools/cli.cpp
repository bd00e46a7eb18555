/*
 * Copyright 2026 The pcplod Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pcplod/artifacts.hpp"
#include "pcplod/error.hpp"
#include "pcplod/evaluation.hpp"
#include "pcplod/parallel.hpp"
#include "pcplod/report.hpp"

namespace fs = std::filesystem;

namespace pcplod::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Common {
  int jobs = default_jobs();
  std::vector<std::string> argv;
};

Json base_manifest(const Common& c, const std::string& command) {
  Json j;
  j["command"] = command;
  j["argv"] = c.argv;
  return j;
}

// Input directories holding X.csv below `root`, with their path relative to it.
std::vector<std::pair<fs::path, fs::path>> batch_inputs(const fs::path& root) {
  std::vector<std::pair<fs::path, fs::path>> out;
  if (!fs::is_directory(root) || fs::exists(root / kDataName)) {
    out.emplace_back(root, fs::path("."));
    return out;
  }
  for (const auto& dir : find_dirs_with(root, kDataName))
    out.emplace_back(dir, fs::relative(dir, root));
  if (out.empty()) throw IoError(root.string() + ": no " + kDataName + " found");
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  fs::path out;
  SimScenario scenario;
  std::string noise = "low";
  int replicates = 1;
  bool full_grid = false;
  bool application = false;
};

int simulate(const SimulateOpts& o, const Common& c) {
  const auto start = Clock::now();
  if (o.replicates < 1) throw ConfigError("--replicates must be positive");
  if (o.application) {
    const MaskedMatrix x = gen_application_like(o.scenario.n, o.scenario.seed);
    fs::create_directories(o.out);
    write_lod_csv(x, o.out / kDataName);
    Json m = base_manifest(c, "simulate");
    m["kind"] = "application";
    m["n"] = o.scenario.n;
    m["p"] = x.cols();
    m["seed"] = o.scenario.seed;
    m["output"] = o.out.string();
    m["wall_time_seconds"] = seconds_since(start);
    write_manifest(o.out, m);
    std::cout << "wrote " << (o.out / kDataName).string() << '\n';
    return 0;
  }

  std::vector<SimScenario> cells;
  if (o.full_grid) {
    for (auto s : full_grid(o.scenario.seed)) {
      s.n = o.scenario.n;
      s.sparse_prob = o.scenario.sparse_prob;
      s.sparse_min = o.scenario.sparse_min;
      s.sparse_max = o.scenario.sparse_max;
      cells.push_back(s);
    }
  } else {
    SimScenario s = o.scenario;
    s.noise = parse_noise(o.noise);
    cells.push_back(s);
  }
  for (const auto& s : cells) s.validate();

  struct Job {
    SimScenario scenario;
    int replicate;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (const auto& cell : cells) {
    for (int r = 1; r <= o.replicates; ++r) {
      SimScenario s = cell;
      s.seed = replicate_seed(cell.seed, r);
      jobs.push_back({s, r, o.out / scenario_label(cell) / replicate_dir_name(r)});
    }
  }
  parallel_for(static_cast<int>(jobs.size()), c.jobs, [&](int i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    const auto t0 = Clock::now();
    write_dataset(gen_dataset(job.scenario), job.dir);
    Json m = base_manifest(c, "simulate");
    m["kind"] = "simulation";
    m["scenario"] = to_json(job.scenario);
    m["replicate"] = job.replicate;
    m["wall_time_seconds"] = seconds_since(t0);
    write_manifest(job.dir, m);
  });

  Json m = base_manifest(c, "simulate");
  m["kind"] = "simulation_batch";
  Json list = Json::array();
  for (const auto& cell : cells) list.push_back(to_json(cell));
  m["cells"] = list;
  m["replicates"] = o.replicates;
  m["datasets"] = jobs.size();
  m["wall_time_seconds"] = seconds_since(start);
  write_manifest(o.out, m);
  std::cout << "wrote " << jobs.size() << " dataset(s) under " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- solve

struct SolveOpts {
  fs::path input;
  fs::path out;
  std::optional<Index> rank;
  bool cv = false;
  CvConfig cvc;
  std::optional<double> cv_tol;
  std::optional<int> cv_max_iter;
  PcpConfig pcp;
  bool standardize = false;
  bool empty_is_below_lod = false;
  std::optional<Index> patterns;
};

void solve_one(const SolveOpts& o, const Common& c, const fs::path& input, const fs::path& out) {
  const auto start = Clock::now();
  MatrixSchema schema;
  schema.empty_is_below_lod = o.empty_is_below_lod;
  MaskedMatrix x = read_input(input, schema);
  if (o.standardize) x = standardize_columns(x);
  fs::create_directories(out);

  Json m = base_manifest(c, "solve");
  m["method"] = "pcp-lod";
  m["input"] = input.string();
  m["output"] = out.string();
  m["standardized"] = o.standardize;
  if (x.scale()) m["column_scale"] = std::vector<double>(x.scale()->begin(), x.scale()->end());

  PcpConfig cfg = o.pcp;
  if (o.cv) {
    PcpConfig cv_cfg = o.pcp;
    if (o.cv_tol) cv_cfg.tol = *o.cv_tol;
    if (o.cv_max_iter) cv_cfg.max_iter = *o.cv_max_iter;
    CvConfig cvc = o.cvc;
    cvc.jobs = c.jobs;
    const CvReport report = cv_select_rank(x, cv_cfg, cvc);
    write_cv_report(report, out);
    cfg.rank = report.selected_rank;
    Json cvj = to_json(cvc);
    cvj["solver"] = to_json(cv_cfg);
    cvj["selected_rank"] = report.selected_rank;
    m["cv"] = cvj;
  } else {
    cfg.rank = *o.rank;
  }
  m["solver"] = to_json(cfg);

  Decomposition d;
  try {
    d = solve(x, cfg);
  } catch (const NumericalError& e) {
    Json diag{{"error", e.what()}, {"rank", cfg.rank}};
    std::ofstream(out / "diagnostics.json") << diag.dump(2) << '\n';
    throw;
  }
  write_decomposition(d, x.column_names(), out);

  const SparseEventTable table = classify_sparse(d.sparse, x, d.low_rank);
  const SparsityStats stats = sparsity_stats(table);
  write_sparse_events(table, x.column_names(), out / "sparse_events.csv");
  write_event_histogram(stats, out / "event_histogram.csv");

  if (o.patterns) {
    const PatternModel pm = extract_patterns(d.low_rank, *o.patterns);
    write_patterns(pm, x.column_names(), out / "patterns");
    m["patterns"] = *o.patterns;
  }

  const auto& diag = d.diagnostics;
  m["selected_rank"] = cfg.rank;
  m["result"] = Json{{"iterations", diag.iterations},
                     {"converged", diag.converged},
                     {"objective", d.objective},
                     {"effective_rank", d.effective_rank},
                     {"lambda", d.lambda},
                     {"mu", d.mu},
                     {"final_rho", diag.final_rho},
                     {"polish_passes", diag.polish_passes},
                     {"polish_rows_zeroed", diag.polish_rows_zeroed},
                     {"non_null_fraction", stats.non_null_fraction}};
  m["wall_time_seconds"] = seconds_since(start);
  write_manifest(out, m);
}

int solve_cmd(const SolveOpts& o, const Common& c) {
  if (o.rank.has_value() == o.cv) throw ConfigError("give exactly one of --rank and --cv");
  const auto inputs = batch_inputs(o.input);
  // Replicates run in parallel; a single input hands the workers to CV.
  Common inner = c;
  if (inputs.size() > 1) inner.jobs = 1;
  parallel_for(static_cast<int>(inputs.size()), inputs.size() > 1 ? c.jobs : 1, [&](int i) {
    const auto& [in, rel] = inputs[static_cast<std::size_t>(i)];
    solve_one(o, inner, in, (o.out / rel).lexically_normal());
  });
  std::cout << "solved " << inputs.size() << " input(s) into " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- pca

struct PcaOpts {
  fs::path input;
  fs::path out;
  double variance = 0.8;
  bool standardize = false;
  bool empty_is_below_lod = false;
};

int pca_cmd(const PcaOpts& o, const Common& c) {
  if (!(o.variance > 0.0 && o.variance <= 1.0)) throw ConfigError("--variance must lie in (0, 1]");
  const auto inputs = batch_inputs(o.input);
  parallel_for(static_cast<int>(inputs.size()), c.jobs, [&](int i) {
    const auto start = Clock::now();
    const auto& [in, rel] = inputs[static_cast<std::size_t>(i)];
    const fs::path out = (o.out / rel).lexically_normal();
    MatrixSchema schema;
    schema.empty_is_below_lod = o.empty_is_below_lod;
    MaskedMatrix x = read_input(in, schema);
    if (o.standardize) x = standardize_columns(x);
    const auto imputed = x.count(EntryStatus::BelowLod) + x.count(EntryStatus::Missing);
    if (imputed == 0 && inputs.size() == 1)
      std::cerr << "pca: all entries observed, no imputation performed\n";
    const PcaModel model = fit_pca(impute_lod(x), o.variance);
    write_pca(model, x.column_names(), out);
    Json m = base_manifest(c, "pca");
    m["method"] = "pca";
    m["input"] = in.string();
    m["output"] = out.string();
    m["standardized"] = o.standardize;
    m["variance_threshold"] = o.variance;
    m["imputed_entries"] = imputed;
    m["k_selected"] = model.k_selected;
    m["wall_time_seconds"] = seconds_since(start);
    write_manifest(out, m);
  });
  std::cout << "fitted " << inputs.size() << " input(s) into " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  fs::path truth;
  std::vector<fs::path> methods;
  fs::path out;
  bool strata = true;
};

int evaluate_cmd(const EvaluateOpts& o, const Common& c) {
  const auto start = Clock::now();
  const auto truth_dirs = find_dirs_with(o.truth, "clean.csv");
  if (truth_dirs.empty()) throw IoError(o.truth.string() + ": no simulation truth found");
  if (o.methods.empty()) throw ConfigError("give at least one --method directory");

  std::vector<std::vector<MetricRow>> slots(truth_dirs.size());
  parallel_for(static_cast<int>(truth_dirs.size()), c.jobs, [&](int i) {
    const fs::path& tdir = truth_dirs[static_cast<std::size_t>(i)];
    const TruthData t = read_dataset(tdir);
    const fs::path rel = fs::relative(tdir, o.truth);
    auto& rows = slots[static_cast<std::size_t>(i)];
    for (const auto& mroot : o.methods) {
      const fs::path mdir = (mroot / rel).lexically_normal();
      const Json mm = read_manifest(mdir);
      const std::string method = mm.value("method", mroot.filename().string());
      const bool is_pcp = fs::exists(mdir / "L.csv");
      const Matrix pred = read_numeric_csv(mdir / (is_pcp ? "L.csv" : "prediction.csv"));
      auto r = evaluate_prediction(t.clean, t.censored, pred, t.r_true, t.scenario, method,
                                   t.replicate);
      if (is_pcp && fs::exists(mdir / "S.csv")) {
        const Matrix s = read_numeric_csv(mdir / "S.csv");
        if (s.rows() != pred.rows() || s.cols() != pred.cols())
          throw SchemaError(mdir.string() + ": S and L disagree in shape");
        auto sr = evaluate_sparse(s, pred, t.censored, t.sparse_truth, t.scenario, method,
                                  t.replicate);
        r.insert(r.end(), sr.begin(), sr.end());
      }
      for (auto& row : r)
        if (o.strata || row.stratum == "overall") rows.push_back(std::move(row));
    }
  });
  std::vector<MetricRow> all;
  for (auto& s : slots) all.insert(all.end(), s.begin(), s.end());
  fs::create_directories(o.out);
  write_metrics_csv(all, o.out / "metrics.csv");

  Json m = base_manifest(c, "evaluate");
  m["truth"] = o.truth.string();
  Json ms = Json::array();
  for (const auto& p : o.methods) ms.push_back(p.string());
  m["methods"] = ms;
  m["strata"] = o.strata;
  m["rows"] = all.size();
  m["wall_time_seconds"] = seconds_since(start);
  write_manifest(o.out, m);
  std::cout << "wrote " << all.size() << " metric rows to " << (o.out / "metrics.csv").string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOpts {
  std::vector<fs::path> metrics;
  std::vector<fs::path> fits;
  fs::path out;
};

int report_cmd(const ReportOpts& o, const Common& c) {
  const auto start = Clock::now();
  if (o.metrics.empty() && o.fits.empty())
    throw ConfigError("report needs --metrics files or --fit directories");
  fs::create_directories(o.out);
  Json m = base_manifest(c, "report");
  Json outputs = Json::array();

  std::vector<MetricRow> rows;
  for (const auto& p : o.metrics) {
    auto r = read_metrics_csv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (!o.metrics.empty() && rows.empty()) throw ConfigError("metrics files hold no rows");
  if (!rows.empty()) {
    write_summary_csv(summarize(rows), o.out / "summary.csv");
    outputs.push_back("summary.csv");
    const std::vector<std::pair<std::string, std::string>> tables = {
        {"overall", "table_overall.csv"},
        {"above_lod", "table_above_lod.csv"},
        {"below_lod", "table_below_lod.csv"}};
    for (const auto& [stratum, name] : tables)
      if (write_lod_table(rows, "relative_error", stratum, o.out / name)) outputs.push_back(name);
    const std::vector<std::tuple<std::string, std::string, std::string>> plots = {
        {"relative_error", "overall", "Overall relative prediction error"},
        {"relative_error", "above_lod", "Relative prediction error, values above the LOD"},
        {"relative_error", "below_lod", "Relative prediction error, values below the LOD"},
        {"left_vector_error", "overall", "Relative error of left singular vectors"},
        {"right_vector_error", "overall", "Relative error of right singular vectors"},
        {"non_null_fraction", "overall", "Fraction of non-null sparse entries"}};
    for (const auto& [metric, stratum, title] : plots) {
      const std::string name = "box_" + metric + "_" + stratum + ".svg";
      if (write_box_plot_svg(rows, metric, stratum, title, o.out / name)) outputs.push_back(name);
    }
  }

  for (std::size_t i = 0; i < o.fits.size(); ++i) {
    const fs::path& fit = o.fits[i];
    const std::string suffix = o.fits.size() > 1 ? "_" + std::to_string(i + 1) : "";
    if (fs::exists(fit / "patterns" / "loadings.csv")) {
      std::vector<std::string> names;
      const PatternModel pm = read_patterns(fit / "patterns", &names);
      write_loadings_svg(pm, names, o.out / ("loadings" + suffix + ".svg"));
      outputs.push_back("loadings" + suffix + ".svg");
    }
    if (fs::exists(fit / "sparse_events.csv")) {
      std::vector<std::string> names;
      const SparseEventTable t = read_sparse_events(fit / "sparse_events.csv", &names);
      write_sparse_heatmap_svg(t, names, o.out / ("sparse_events" + suffix + ".svg"));
      write_event_histogram(sparsity_stats(t), o.out / ("event_histogram" + suffix + ".csv"));
      outputs.push_back("sparse_events" + suffix + ".svg");
      outputs.push_back("event_histogram" + suffix + ".csv");
    }
  }
  if (outputs.empty()) throw ConfigError("nothing to report");

  Json in = Json::array();
  for (const auto& p : o.metrics) in.push_back(p.string());
  m["metrics"] = in;
  Json fits = Json::array();
  for (const auto& p : o.fits) fits.push_back(p.string());
  m["fits"] = fits;
  m["outputs"] = outputs;
  m["quantile_type"] = 7;
  m["wall_time_seconds"] = seconds_since(start);
  write_manifest(o.out, m);
  std::cout << "wrote " << outputs.size() << " report artifact(s) to " << o.out.string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Low-rank + sparse decomposition of censored exposure matrices", "pcplod"};
  app.set_version_flag("--version", kToolkitVersion);
  app.set_config("--config", "", "TOML config file mirroring the command-line flags");
  app.require_subcommand(1);
  Common common;
  common.argv = args;
  app.add_option("-j,--jobs", common.jobs, "Worker threads (default: $PCPLOD_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "Generate simulated datasets");
  sim->add_option("-o,--out", so.out, "Output directory")->required();
  sim->add_option("--n", so.scenario.n, "Observations")->capture_default_str();
  sim->add_option("--p", so.scenario.p, "Chemicals (multiple of 8)")->capture_default_str();
  sim->add_option("--noise", so.noise, "Noise structure")
      ->check(CLI::IsMember({"low", "high", "sparse"}))
      ->capture_default_str();
  sim->add_option("--lod-q", so.scenario.lod_quantile, "Censoring quantile")->capture_default_str();
  sim->add_option("--sparse-prob", so.scenario.sparse_prob, "Spike probability")
      ->capture_default_str();
  sim->add_option("--sparse-min", so.scenario.sparse_min, "Smallest spike")->capture_default_str();
  sim->add_option("--sparse-max", so.scenario.sparse_max, "Largest spike")->capture_default_str();
  sim->add_option("--replicates", so.replicates, "Datasets per scenario")->capture_default_str();
  sim->add_option("--seed", so.scenario.seed, "Master seed")->capture_default_str();
  sim->add_flag("--paper-grid", so.full_grid, "All 18 cells of p x noise x LOD quantile");
  sim->add_flag("--application", so.application, "One 21-chemical application-like panel");

  SolveOpts sv;
  auto* sol = app.add_subcommand("solve", "Decompose X into L + S");
  sol->add_option("input", sv.input, "Matrix CSV, dataset directory or batch root")->required();
  sol->add_option("-o,--out", sv.out, "Output directory")->required();
  auto* rank_opt = sol->add_option("--rank", sv.rank, "Rank bound")->check(CLI::PositiveNumber);
  auto* cv_flag = sol->add_flag("--cv", sv.cv, "Select the rank by cross-validation");
  rank_opt->excludes(cv_flag);
  sol->add_option("--cv-repeats", sv.cvc.repeats, "Hold-out repeats")->capture_default_str();
  sol->add_option("--cv-grid", sv.cvc.rank_grid, "Candidate ranks")->capture_default_str();
  sol->add_option("--cv-holdout", sv.cvc.holdout_fraction, "Hold-out fraction")
      ->capture_default_str();
  sol->add_option("--cv-seed", sv.cvc.seed, "Hold-out seed")->capture_default_str();
  sol->add_option("--cv-tol", sv.cv_tol, "Solver tolerance during cross-validation");
  sol->add_option("--cv-max-iter", sv.cv_max_iter, "Iteration cap during cross-validation");
  sol->add_option("--lambda", sv.pcp.lambda, "Sparse weight (default 1/sqrt(n))");
  sol->add_option("--mu", sv.pcp.mu, "Data-fit weight (default sqrt(p/2))");
  sol->add_option("--rho", sv.pcp.rho, "Initial coupling weight")->capture_default_str();
  sol->add_option("--tol", sv.pcp.tol, "Relative-change tolerance")->capture_default_str();
  sol->add_option("--max-iter", sv.pcp.max_iter, "Iteration cap")->capture_default_str();
  sol->add_option("--polish-passes", sv.pcp.final_polish_passes, "Final projection passes")
      ->capture_default_str();
  sol->add_flag("--standardize", sv.standardize, "Divide columns by their sd first");
  sol->add_flag("--empty-is-lod", sv.empty_is_below_lod,
                "Empty cells in columns with an LOD are below it");
  sol->add_option("--patterns", sv.patterns, "Extract this many SVD patterns from L")
      ->check(CLI::PositiveNumber);

  PcaOpts po;
  auto* pca = app.add_subcommand("pca", "PCA baseline on LOD/sqrt(2)-imputed data");
  pca->add_option("input", po.input, "Matrix CSV, dataset directory or batch root")->required();
  pca->add_option("-o,--out", po.out, "Output directory")->required();
  pca->add_option("--variance", po.variance, "Cumulative variance to retain")
      ->capture_default_str();
  pca->add_flag("--standardize", po.standardize, "Divide columns by their sd first");
  pca->add_flag("--empty-is-lod", po.empty_is_below_lod,
                "Empty cells in columns with an LOD are below it");

  EvaluateOpts eo;
  auto* ev = app.add_subcommand("evaluate", "Score fits against simulation truth");
  ev->add_option("--truth", eo.truth, "Simulation root")->required();
  ev->add_option("--method", eo.methods, "Fit root (repeatable)")->required();
  ev->add_option("-o,--out", eo.out, "Output directory")->required();
  ev->add_option("--strata", eo.strata, "Also score the above/below-LOD strata")
      ->capture_default_str();

  ReportOpts ro;
  auto* rep = app.add_subcommand("report", "Plots and summary tables");
  rep->add_option("--metrics", ro.metrics, "metrics.csv (repeatable)");
  rep->add_option("--fit", ro.fits, "Solve output with patterns and sparse events (repeatable)");
  rep->add_option("-o,--out", ro.out, "Output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << kToolkitVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "pcplod: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Usage);
  }
  common.jobs = std::max(1, common.jobs);

  try {
    if (sim->parsed()) return simulate(so, common);
    if (sol->parsed()) return solve_cmd(sv, common);
    if (pca->parsed()) return pca_cmd(po, common);
    if (ev->parsed()) return evaluate_cmd(eo, common);
    if (rep->parsed()) return report_cmd(ro, common);
  } catch (const Error& e) {
    std::cerr << "pcplod: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "pcplod: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Io);
  }
  return static_cast<int>(ExitCode::Usage);
}

}  // namespace pcplod::cli
