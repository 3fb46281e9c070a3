// Command line front end: simulate / fit / study / ingest / report.
// Exit codes: 0 success, 1 domain or data error, 2 usage error.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynssv/dataio.hpp"
#include "dynssv/diagnostics.hpp"
#include "dynssv/sampler.hpp"
#include "dynssv/study.hpp"
#include "dynssv/svg.hpp"
#include "dynssv/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dynssv;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Input files the user named on the command line are usage errors when
// absent; output failures stay runtime errors.
std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config, std::uint64_t seed, double wall,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = kVersion;
  m["wall_seconds"] = wall;
  m["outputs"] = outputs;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

// Family kind from a flag value; nu placeholder only clears validation.
MixKind kind_of(const std::string& name) {
  return family_from_name(name, 3.0).kind;
}

std::string model_label(MixKind kind, bool dynamic) {
  std::string tail = kind == MixKind::Normal
                         ? "N"
                         : (kind == MixKind::StudentT ? "t" : "S");
  return (dynamic ? std::string("DynSSV-") : std::string("StatSSV-")) + tail;
}

PriorConfig prior_for(MixKind kind, const std::string& prior_text) {
  const MixingFamily placeholder =
      kind == MixKind::Normal
          ? MixingFamily::normal()
          : (kind == MixKind::StudentT ? MixingFamily::student_t(10.0)
                                       : MixingFamily::slash(2.0));
  PriorConfig pc = PriorConfig::defaults(placeholder);
  try {
    pc.sigma_alpha = SigmaAlphaPrior::parse(prior_text);
  } catch (const std::domain_error& e) {
    // A bad flag value is a usage error at this boundary.
    throw std::invalid_argument(e.what());
  }
  return pc;
}

json sampler_json(const SamplerConfig& sc) {
  return json{{"iterations", sc.iterations},
              {"warmup", sc.warmup},
              {"chains", sc.chains},
              {"seed", sc.seed},
              {"target_accept", sc.target_accept},
              {"max_tree_depth", sc.max_tree_depth},
              {"init_jitter", sc.init_jitter}};
}

// Matrix from a headerless CSV of uniform numeric rows.
Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t n = 0;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) {
      values.push_back(std::stod(field));
      ++n;
    }
    if (cols == 0) cols = n;
    if (n != cols)
      throw std::runtime_error(path.string() + ": ragged row " +
                               std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path.string() + ": empty matrix");
  Matrix m(rows, cols);
  m.data = std::move(values);
  return m;
}

struct Table {
  std::vector<std::string> names;
  Matrix values{0, 0};
};

Table read_table_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty table");
  Table t;
  {
    std::istringstream head(line);
    std::string field;
    while (std::getline(head, field, ',')) t.names.push_back(field);
  }
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::size_t n = 0;
    while (std::getline(row, field, ',')) {
      values.push_back(std::stod(field));
      ++n;
    }
    if (n != t.names.size())
      throw std::runtime_error(path.string() + ": ragged row " +
                               std::to_string(rows + 2));
    ++rows;
  }
  t.values = Matrix(rows, t.names.size());
  t.values.data = std::move(values);
  return t;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string family = "n";
  std::size_t T = 500;
  double mu = 0.0, phi = 0.95, sigma_h = 0.15, sigma_alpha = 0.05,
         alpha1 = 0.0, nu = 8.0;
  std::uint64_t seed = 1;
  std::string out = "sim-out";
};

int cmd_simulate(const SimulateOpts& o, bool nu_given) {
  Timer timer;
  const MixKind kind = kind_of(o.family);
  if (kind == MixKind::Normal && nu_given)
    throw std::invalid_argument("--nu is meaningless for the normal family");
  if (kind != MixKind::Normal && !nu_given)
    throw std::invalid_argument("--nu is required for family " + o.family);

  ModelParams p;
  p.mu = o.mu;
  p.phi = o.phi;
  p.sigma_h = o.sigma_h;
  p.alpha1 = o.alpha1;
  p.sigma_alpha = o.sigma_alpha;
  p.family = kind == MixKind::Normal ? MixingFamily::normal()
                                     : family_from_name(o.family, o.nu);

  std::mt19937_64 rng(o.seed);
  const Simulation sim = simulate(p, o.T, rng);

  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "y.csv", dataset_to_csv(sim.data));

  std::ostringstream lat;
  lat.precision(17);
  lat << "t,h,alpha,u,w\n";
  for (std::size_t t = 0; t < o.T; ++t)
    lat << (t + 1) << ',' << sim.latents.h[t] << ',' << sim.latents.alpha[t]
        << ',' << sim.latents.u[t] << ',' << sim.latents.w[t] << '\n';
  write_text(fs::path(o.out) / "latents.csv", lat.str());

  json config{{"family", p.family.name()}, {"T", o.T},
              {"mu", o.mu},                {"phi", o.phi},
              {"sigma_h", o.sigma_h},      {"sigma_alpha", o.sigma_alpha},
              {"alpha1", o.alpha1}};
  if (kind != MixKind::Normal) config["nu"] = o.nu;
  write_manifest(o.out, "simulate", config, o.seed, timer.seconds(),
                 {"y.csv", "latents.csv"});
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  std::string data_path;
  std::string family = "n";
  bool static_model = false;
  std::string prior = "pcp:0.5,0.5";
  SamplerConfig sc;
  std::string out = "fit-out";
};

int cmd_fit(const FitOpts& o) {
  Timer timer;
  const MixKind kind = kind_of(o.family);
  const ModelConfig mc{kind, !o.static_model};
  const PriorConfig pc = prior_for(kind, o.prior);
  if (mc.dynamic_skewness && pc.sigma_alpha.near_degenerate())
    std::cerr << "warning: near-degenerate penalization (lambda = "
              << pc.sigma_alpha.lambda() << ") freezes the skewness path\n";

  std::ifstream in(o.data_path);
  if (!in) throw std::invalid_argument("cannot open " + o.data_path);
  const Dataset data =
      parse_dataset_csv(in, fs::path(o.data_path).stem().string());

  fs::create_directories(o.out);
  FitResult res;
  try {
    res = fit(data, mc, pc, o.sc);
  } catch (const std::exception& e) {
    json diag{{"command", "fit"},
              {"data", o.data_path},
              {"model", model_label(kind, mc.dynamic_skewness)},
              {"error", e.what()}};
    write_text(fs::path(o.out) / "diagnostics.json", diag.dump(2) + "\n");
    throw std::runtime_error(std::string("fit failed: ") + e.what() +
                             " (see diagnostics.json)");
  }

  const auto& names = res.chains[0].constrained_names;
  std::ostringstream draws;
  draws.precision(17);
  draws << "chain";
  for (const auto& n : names) draws << ',' << n;
  draws << '\n';
  for (std::size_t c = 0; c < res.chains.size(); ++c) {
    const Matrix& m = res.chains[c].constrained;
    for (std::size_t i = 0; i < m.rows; ++i) {
      draws << (c + 1);
      for (std::size_t j = 0; j < m.cols; ++j) draws << ',' << m(i, j);
      draws << '\n';
    }
  }
  write_text(fs::path(o.out) / "draws.csv", draws.str());

  std::ostringstream summary;
  summary.precision(9);
  summary << "parameter,mean,hpd_low,hpd_high,cd,inefficiency\n";
  for (const auto& n : names) {
    const ParamSummary ps = summarize_chain(n, res.scalar_draws(n));
    summary << n << ',' << ps.mean << ',' << ps.hpd_low << ',' << ps.hpd_high
            << ',' << ps.cd << ',' << ps.inefficiency << '\n';
  }
  write_text(fs::path(o.out) / "summary.csv", summary.str());

  const auto write_plain = [&](const fs::path& p, const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t j = 0; j < m.cols; ++j)
        os << (j ? "," : "") << m(i, j);
      os << '\n';
    }
    write_text(p, os.str());
  };
  const Matrix pooled = res.pooled_loglik();
  write_plain(fs::path(o.out) / "pointwise_loglik.csv", pooled);
  write_plain(fs::path(o.out) / "h_draws.csv", res.h_draws);
  write_plain(fs::path(o.out) / "alpha_draws.csv", res.alpha_draws);
  write_text(fs::path(o.out) / "data.csv", dataset_to_csv(data));

  json chain_info = json::array();
  std::size_t total_div = 0;
  for (const auto& ch : res.chains) {
    chain_info.push_back(json{{"divergences", ch.divergences},
                              {"step_size", ch.step_size_final},
                              {"wall_seconds", ch.wall_seconds}});
    total_div += ch.divergences;
  }
  json meta{{"T", data.size()},
            {"family", MixingFamily{kind, 3.0}.name()},
            {"dynamic_skewness", mc.dynamic_skewness},
            {"model", model_label(kind, mc.dynamic_skewness)},
            {"kept_total", pooled.rows},
            {"divergences", total_div},
            {"deviance_at_mean", deviance_at_mean(res)},
            {"chains", chain_info}};
  write_text(fs::path(o.out) / "metadata.json", meta.dump(2) + "\n");

  json prior_cfg{{"sigma_alpha", pc.sigma_alpha.describe()}};
  if (pc.sigma_alpha.kind == SigmaAlphaPriorKind::Pcp)
    prior_cfg["lambda"] = pc.sigma_alpha.lambda();
  json config{{"data", o.data_path},
              {"family", MixingFamily{kind, 3.0}.name()},
              {"static", o.static_model},
              {"sampler", sampler_json(o.sc)},
              {"threads", thread_budget()}};
  if (mc.dynamic_skewness) config["prior"] = prior_cfg;
  write_manifest(o.out, "fit", config, o.sc.seed, timer.seconds(),
                 {"draws.csv", "summary.csv", "pointwise_loglik.csv",
                  "h_draws.csv", "alpha_draws.csv", "data.csv",
                  "metadata.json"});
  return 0;
}

// ------------------------------------------------------------------- study

struct StudyOpts {
  std::string scenario_path;
  bool full_scale = false;
  std::string out = "study-out";
};

int cmd_study(const StudyOpts& o) {
  Timer timer;
  Scenario s = Scenario::from_json_text(read_text(o.scenario_path));
  if (o.full_scale) {
    s.T = 1500;
    s.replicates = 300;
    s.sampler.iterations = 7000;
    s.sampler.warmup = 5000;
  }
  for (const auto& pc : s.prior_menu)
    if (s.model.dynamic_skewness && pc.sigma_alpha.near_degenerate())
      std::cerr << "warning: near-degenerate penalization in prior "
                << pc.sigma_alpha.describe() << "\n";

  const StudyResult result = run_scenario(s);

  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "study.csv", study_csv(result));
  json config{{"scenario", json::parse(s.to_json_text())},
              {"full_scale", o.full_scale},
              {"threads", thread_budget()}};
  write_manifest(o.out, "study", config, s.sampler.seed, timer.seconds(),
                 {"study.csv"});
  return 0;
}

// ------------------------------------------------------------------ ingest

struct IngestOpts {
  std::string prices_path;
  std::string label;
  std::string out = "ingest-out";
};

int cmd_ingest(const IngestOpts& o) {
  Timer timer;
  const std::string label =
      o.label.empty() ? fs::path(o.prices_path).stem().string() : o.label;
  std::ifstream in(o.prices_path);
  if (!in) throw std::invalid_argument("cannot open " + o.prices_path);
  PriceSeries prices;
  Dataset returns;
  SummaryStats stats;
  try {
    prices = parse_price_csv(in, label);
    returns = compute_returns(prices);
    stats = summary_stats(returns);
  } catch (const std::invalid_argument& e) {
    // Content problems in the price file are data errors, not usage errors.
    throw std::runtime_error(e.what());
  }

  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "returns.csv", dataset_to_csv(returns));
  write_text(fs::path(o.out) / "stats.json",
             stats_to_json(stats, label) + "\n");
  write_manifest(o.out, "ingest",
                 json{{"prices", o.prices_path}, {"label", label}},
                 0, timer.seconds(), {"returns.csv", "stats.json"});
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportOpts {
  std::string fit_dir;
  std::string plots = "all";
  std::size_t window = 200;
  std::string out;
};

int cmd_report(const ReportOpts& o) {
  Timer timer;
  const fs::path fit_dir(o.fit_dir);
  const fs::path out_dir =
      o.out.empty() ? fit_dir / "report" : fs::path(o.out);
  const json meta = json::parse(read_text(fit_dir / "metadata.json"));

  const Matrix loglik = read_matrix_csv(fit_dir / "pointwise_loglik.csv");
  std::vector<double> dev(loglik.rows);
  for (std::size_t i = 0; i < loglik.rows; ++i) {
    CompensatedSum row;
    for (double v : loglik.row(i)) row.add(v);
    dev[i] = -2.0 * row.value();
  }
  const double dic_value = dic(dev, meta.at("deviance_at_mean").get<double>());
  const double waic_value = waic(loglik);
  const LooResult loo = loo_cv(loglik);
  double khat_max = -std::numeric_limits<double>::infinity();
  for (double k : loo.khat)
    if (std::isfinite(k)) khat_max = std::max(khat_max, k);

  fs::create_directories(out_dir);
  std::vector<std::string> outputs;

  {
    std::ostringstream os;
    os.precision(9);
    os << "model,dic,waic,loo,loo_khat_max,loo_flagged\n";
    os << meta.at("model").get<std::string>() << ',' << dic_value << ','
       << waic_value << ',' << loo.loo << ',';
    if (std::isfinite(khat_max)) os << khat_max;
    os << ',' << loo.flagged << '\n';
    write_text(out_dir / "criteria.csv", os.str());
    outputs.push_back("criteria.csv");
  }

  {
    const Table draws = read_table_csv(fit_dir / "draws.csv");
    std::ostringstream os;
    os.precision(9);
    os << "parameter,mean,hpd_low,hpd_high,cd,inefficiency\n";
    std::vector<double> column(draws.values.rows);
    for (std::size_t j = 0; j < draws.names.size(); ++j) {
      if (draws.names[j] == "chain") continue;
      for (std::size_t i = 0; i < draws.values.rows; ++i)
        column[i] = draws.values(i, j);
      const ParamSummary ps = summarize_chain(draws.names[j], column);
      os << ps.name << ',' << ps.mean << ',' << ps.hpd_low << ','
         << ps.hpd_high << ',' << ps.cd << ',' << ps.inefficiency << '\n';
    }
    write_text(out_dir / "params.csv", os.str());
    outputs.push_back("params.csv");
  }

  std::ifstream data_in(fit_dir / "data.csv");
  if (!data_in)
    throw std::invalid_argument("cannot open " +
                                (fit_dir / "data.csv").string());
  const Dataset data = parse_dataset_csv(data_in, "returns");
  const std::size_t T = data.size();
  std::vector<double> time(T);
  for (std::size_t t = 0; t < T; ++t) time[t] = double(t + 1);

  const bool want_vol = o.plots == "all" || o.plots == "volatility";
  const bool want_skew = o.plots == "all" || o.plots == "skewness";

  if (want_vol) {
    const Matrix h = read_matrix_csv(fit_dir / "h_draws.csv");
    if (h.cols != T)
      throw std::runtime_error("h_draws.csv does not match data length");
    std::vector<double> vol(T), abs_y(T);
    for (std::size_t t = 0; t < T; ++t) {
      CompensatedSum s;
      for (std::size_t i = 0; i < h.rows; ++i)
        s.add(std::exp(0.5 * h(i, t)));
      vol[t] = s.value() / double(h.rows);
      abs_y[t] = std::fabs(data.y[t]);
    }
    std::ostringstream os;
    os.precision(9);
    os << "t,abs_return,volatility\n";
    for (std::size_t t = 0; t < T; ++t)
      os << (t + 1) << ',' << abs_y[t] << ',' << vol[t] << '\n';
    write_text(out_dir / "volatility.csv", os.str());

    SvgPlot plot("Posterior volatility", "t", "exp(h/2)");
    plot.polyline(time, abs_y, "#9e9e9e", 0.8, 0.9);
    plot.polyline(time, vol, "#1565c0", 1.6);
    write_text(out_dir / "volatility.svg", plot.render());
    outputs.push_back("volatility.csv");
    outputs.push_back("volatility.svg");
  }

  if (want_skew) {
    const Matrix a = read_matrix_csv(fit_dir / "alpha_draws.csv");
    if (a.cols != T)
      throw std::runtime_error("alpha_draws.csv does not match data length");
    std::vector<double> mean(T), lo90(T), hi90(T), lo95(T), hi95(T);
    std::vector<double> column(a.rows);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < a.rows; ++i) column[i] = a(i, t);
      mean[t] = mean_of(column);
      std::tie(lo90[t], hi90[t]) = hpd(column, 0.90);
      std::tie(lo95[t], hi95[t]) = hpd(column, 0.95);
    }
    const std::size_t window = std::min<std::size_t>(o.window, T);
    const std::vector<double> rolling =
        rolling_skewness(std::span<const double>(data.y), window);

    std::ostringstream os;
    os.precision(9);
    os << "t,alpha_mean,hpd90_low,hpd90_high,hpd95_low,hpd95_high,"
          "rolling_skewness\n";
    for (std::size_t t = 0; t < T; ++t) {
      os << (t + 1) << ',' << mean[t] << ',' << lo90[t] << ',' << hi90[t]
         << ',' << lo95[t] << ',' << hi95[t] << ',';
      if (std::isfinite(rolling[t])) os << rolling[t];
      os << '\n';
    }
    write_text(out_dir / "skewness.csv", os.str());

    SvgPlot plot("Posterior skewness path", "t", "alpha");
    plot.band(time, lo95, hi95, "#bbdefb", 0.8);
    plot.band(time, lo90, hi90, "#64b5f6", 0.8);
    plot.polyline(time, mean, "#0d47a1", 1.6);
    plot.polyline(time, rolling, "#e53935", 1.0, 0.9);
    write_text(out_dir / "skewness.svg", plot.render());
    outputs.push_back("skewness.csv");
    outputs.push_back("skewness.svg");
  }

  write_manifest(out_dir, "report",
                 json{{"fit", o.fit_dir},
                      {"plots", o.plots},
                      {"window", o.window}},
                 0, timer.seconds(), outputs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic volatility with time-varying skewness"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic dataset");
  sim_cmd->add_option("--family", sim.family, "Mixing family")
      ->check(CLI::IsMember({"n", "t", "slash", "normal", "student_t"}));
  sim_cmd->add_option("--T", sim.T, "Series length");
  sim_cmd->add_option("--mu", sim.mu, "Log-volatility level");
  sim_cmd->add_option("--phi", sim.phi, "Log-volatility persistence");
  sim_cmd->add_option("--sigma-h", sim.sigma_h, "Log-volatility scale");
  sim_cmd->add_option("--sigma-alpha", sim.sigma_alpha, "Skewness-walk scale");
  sim_cmd->add_option("--alpha1", sim.alpha1, "Initial skewness");
  auto* nu_opt = sim_cmd->add_option("--nu", sim.nu, "Tail parameter");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out, "Output directory");

  FitOpts fo;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior");
  fit_cmd->add_option("--data", fo.data_path, "Returns CSV (t,y)")
      ->required();
  fit_cmd->add_option("--family", fo.family, "Mixing family")
      ->check(CLI::IsMember({"n", "t", "slash", "normal", "student_t"}));
  fit_cmd->add_flag("--static", fo.static_model,
                    "Constant skewness (StatSSV)");
  fit_cmd->add_option("--prior-sigma-alpha", fo.prior,
                      "pcp:U,p | exp | ig:shape,scale");
  fit_cmd->add_option("--iterations", fo.sc.iterations, "Total iterations");
  fit_cmd->add_option("--warmup", fo.sc.warmup, "Warmup iterations");
  fit_cmd->add_option("--chains", fo.sc.chains, "Chain count");
  fit_cmd->add_option("--seed", fo.sc.seed, "RNG seed");
  fit_cmd->add_option("--target-accept", fo.sc.target_accept,
                      "Dual-averaging target");
  fit_cmd->add_option("--max-depth", fo.sc.max_tree_depth,
                      "Trajectory doubling cap");
  fit_cmd->add_option("--jitter", fo.sc.init_jitter,
                      "Initialization jitter");
  fit_cmd->add_option("--out", fo.out, "Output directory");

  StudyOpts so;
  auto* study_cmd = app.add_subcommand("study", "Run a simulation study");
  study_cmd->add_option("--scenario", so.scenario_path, "Scenario JSON")
      ->required();
  study_cmd->add_flag("--full-scale", so.full_scale,
                      "Override scenario with m=300, T=1500, 7000/5000 iterations");
  study_cmd->add_option("--out", so.out, "Output directory");

  IngestOpts io;
  auto* ingest_cmd = app.add_subcommand("ingest", "Prices to returns");
  ingest_cmd->add_option("--prices", io.prices_path, "Price CSV (date,close)")
      ->required();
  ingest_cmd->add_option("--label", io.label, "Series label");
  ingest_cmd->add_option("--out", io.out, "Output directory");

  ReportOpts ro;
  auto* report_cmd =
      app.add_subcommand("report", "Criteria table and plots for a fit");
  report_cmd->add_option("--fit", ro.fit_dir, "Fit output directory")
      ->required();
  report_cmd->add_option("--plots", ro.plots, "Which plots to draw")
      ->check(CLI::IsMember({"all", "volatility", "skewness"}));
  report_cmd->add_option("--window", ro.window, "Rolling skewness window");
  report_cmd->add_option("--out", ro.out,
                         "Output directory (default: <fit>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim, nu_opt->count() > 0);
    if (fit_cmd->parsed()) return cmd_fit(fo);
    if (study_cmd->parsed()) return cmd_study(so);
    if (ingest_cmd->parsed()) return cmd_ingest(io);
    if (report_cmd->parsed()) return cmd_report(ro);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
