// Batch front door for the DP mixture library: data ingestion, fitting with
// restarts, simulation, hyperparameter estimation, metrics, and the scaling
// benchmark. See README for file formats.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpmix/config.hpp"
#include "dpmix/dpmix.hpp"

namespace fs = std::filesystem;
using namespace dpmix;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("DPMIX_LOG");
  if (!env) return LogLevel::Error;
  std::string s(env);
  if (s == "debug") return LogLevel::Debug;
  if (s == "info") return LogLevel::Info;
  return LogLevel::Error;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[dpmix] " << msg << "\n";
}

struct CommonOpts {
  std::string data_path;
  bool no_header = false;
  std::string label_column;
  bool standardize = false;
};

DataMatrix load_data(const CommonOpts& o) {
  std::optional<std::string> label;
  if (!o.label_column.empty()) label = o.label_column;
  DataMatrix X = ingest_csv(o.data_path, !o.no_header, label);
  log_info("loaded " + std::to_string(X.n()) + " x " + std::to_string(X.d()) +
           " from " + o.data_path);
  if (o.standardize) X = X.standardized();
  return X;
}

// Label file reader: uses the last column, skips a non-numeric first row,
// maps values (numeric or not) to dense integer codes.
std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("FileNotFound", "cannot open '" + path + "'");
  std::vector<std::string> cells;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto parts = detail::split_csv_line(line);
    const std::string v = detail::trim(parts.back());
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(v.c_str(), &end);
      if (end == v.c_str()) continue;  // header row
    }
    cells.push_back(v);
  }
  std::vector<int> out;
  out.reserve(cells.size());
  std::unordered_map<std::string, int> codes;
  for (const auto& c : cells) {
    auto [it, fresh] = codes.try_emplace(c, static_cast<int>(codes.size()));
    (void)fresh;
    out.push_back(it->second);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError("FileNotFound", "cannot write '" + path + "'");
  out << content;
}

void append_mat_param(JsonWriter& w, const std::string& key, const MatParam& p) {
  if (p.is_scalar()) {
    w.field(key, p.scale);
    return;
  }
  w.begin_array(key);
  for (Index r = 0; r < p.dense->rows(); ++r) {
    w.begin_nested_array();
    for (Index c = 0; c < p.dense->cols(); ++c) w.element((*p.dense)(r, c));
    w.end_array();
  }
  w.end_array();
}

std::string summary_json(const FitResult& r, const std::optional<double>& ari_value,
                         CovarianceModel model, const Hyperparams& h) {
  JsonWriter w;
  w.begin_object();
  w.field("k_post", r.k_post);
  if (ari_value) w.field("ari", *ari_value);
  else w.null_field("ari");
  w.field("vll", r.vll);
  w.field("elbo_final", r.trace.back().elbo);
  w.field("iterations", r.iterations);
  w.field("converged", r.converged);
  w.field("restarts", h.restarts);
  w.field("wall_time_s", r.wall_time_s);
  w.field("model", model_name(model));
  w.object_field("hyper");
  w.field("a", h.a);
  w.field("b", h.b);
  w.field("K", h.truncation);
  append_mat_param(w, "Sigma_mu", h.sigma_mu);
  w.field("k0", h.k0);
  w.field("sigma", h.fixed_sigma);
  append_mat_param(w, "Sigma", h.fixed_Sigma);
  w.field("g1", h.g1);
  w.field("g2", h.g2);
  w.field("nu0", h.nu0);
  append_mat_param(w, "V0", h.V0);
  w.field("mu0_L", h.mu0_L);
  w.field("sigma0_L", h.sigma0_L);
  w.field("a0_L", h.a0_L);
  w.field("b0_L", h.b0_L);
  w.field("a0", h.a0);
  w.field("b0", h.b0);
  w.field("c0", h.c0);
  w.field("restarts", h.restarts);
  w.field("max_iter", h.max_iter);
  w.field("rel_tol", h.rel_tol);
  w.field("seed", static_cast<unsigned long long>(h.seed));
  w.field("alpha_stabilizer",
          h.alpha_stabilizer == AlphaStabilizer::PrevMean ? "prev_mean" : "one");
  w.end_object();
  w.field("seed", static_cast<unsigned long long>(h.seed));
  w.end_object();
  return w.str() + "\n";
}

void write_fit_artifacts(const fs::path& out_dir, const FitResult& r,
                         const std::optional<double>& ari_value,
                         CovarianceModel model, const Hyperparams& h) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "assignments.csv");
    out << "sample,cluster\n";
    for (std::size_t i = 0; i < r.assignments.size(); ++i)
      out << i << "," << r.assignments[i] << "\n";
  }
  {
    std::vector<std::string> header{"sample"};
    for (Index k = 0; k < r.q.k(); ++k) header.push_back("q" + std::to_string(k));
    std::ofstream out(out_dir / "responsibilities.csv");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
    for (Index i = 0; i < r.q.n(); ++i) {
      out << i;
      for (Index k = 0; k < r.q.k(); ++k) out << "," << fmt17(r.q.q(i, k));
      out << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "trace.csv");
    out << "iteration,elbo,vll,t,e_alpha\n";
    for (std::size_t i = 0; i < r.trace.size(); ++i)
      out << (i + 1) << "," << fmt17(r.trace[i].elbo) << "," << fmt17(r.trace[i].vll)
          << "," << r.trace[i].t << "," << fmt17(r.trace[i].e_alpha) << "\n";
  }
  write_file((out_dir / "summary.json").string(), summary_json(r, ari_value, model, h));
}

int run(int argc, char** argv) {
  CLI::App app{"Adaptive DP mixture clustering via collapsed variational inference"};
  app.require_subcommand(1);

  // fit ----------------------------------------------------------------
  auto* cfit = app.add_subcommand("fit", "fit the mixture model to a CSV matrix");
  CommonOpts fin;
  std::string model_str = "m7", config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int restarts = -1, threads = 1, max_iter = -1, truncation = -1;
  double rel_tol = -1.0, k0 = -1.0, a0b0 = -1.0;
  bool use_eb = false;
  int eb_draws = 100;
  cfit->add_option("--data", fin.data_path, "input CSV, rows = samples")->required();
  cfit->add_flag("--no-header", fin.no_header, "input has no header row");
  cfit->add_option("--label-column", fin.label_column,
                   "column with true labels (name, or index if headerless)");
  cfit->add_flag("--standardize", fin.standardize, "feature-wise z-scoring");
  cfit->add_option("--model", model_str, "m1..m8 (default m7)");
  cfit->add_option("--config", config_path, "hyperparameter JSON");
  cfit->add_option("--seed", seed, "base RNG seed");
  cfit->add_option("--restarts", restarts, "number of random restarts");
  cfit->add_option("--threads", threads, "restart-level parallelism");
  cfit->add_option("--max-iter", max_iter, "sweep cap per restart");
  cfit->add_option("--rel-tol", rel_tol, "relative ELBO tolerance");
  cfit->add_option("--truncation", truncation, "variational truncation K");
  cfit->add_option("--k0", k0, "prior scaling k0");
  cfit->add_option("--a0b0", a0b0, "set a0 = b0");
  cfit->add_flag("--empirical-bayes", use_eb, "estimate a0 = b0 from the data");
  cfit->add_option("--eb-draws", eb_draws, "draws for --empirical-bayes");
  cfit->add_option("--out", out_dir, "output directory");

  // simulate -----------------------------------------------------------
  auto* csim = app.add_subcommand("simulate", "generate labeled synthetic data");
  SimSpec spec;
  std::string family = "gaussian", sim_out = ".";
  long sn = 100, sd = 2, sk = 2;
  csim->add_option("--n", sn, "samples")->required();
  csim->add_option("--d", sd, "features")->required();
  csim->add_option("--k", sk, "true clusters")->required();
  csim->add_option("--family", family, "gaussian | nb");
  csim->add_option("--separation", spec.separation, "Gaussian center radius");
  csim->add_option("--dispersion", spec.dispersion, "NB size parameter");
  csim->add_option("--nb-log-sd", spec.nb_log_sd, "log-sd of NB mean draws");
  csim->add_option("--seed", spec.seed, "RNG seed");
  csim->add_option("--out", sim_out, "output directory");

  // estimate-hyper -------------------------------------------------------
  auto* cest = app.add_subcommand("estimate-hyper", "empirical-Bayes a0 = b0 and k0");
  CommonOpts ein;
  int draws = 100;
  std::uint64_t eseed = 0;
  std::string est_out = ".";
  cest->add_option("--data", ein.data_path, "input CSV")->required();
  cest->add_flag("--no-header", ein.no_header, "input has no header row");
  cest->add_option("--label-column", ein.label_column, "column to drop as labels");
  cest->add_flag("--standardize", ein.standardize, "feature-wise z-scoring");
  cest->add_option("--draws", draws, "random allocation draws");
  cest->add_option("--seed", eseed, "RNG seed");
  cest->add_option("--out", est_out, "output directory");

  // metrics --------------------------------------------------------------
  auto* cmet = app.add_subcommand("metrics", "ARI / K_post between two labelings");
  std::string pred_path, truth_path;
  cmet->add_option("--pred", pred_path, "predicted labels CSV")->required();
  cmet->add_option("--truth", truth_path, "reference labels CSV")->required();

  // bench ----------------------------------------------------------------
  auto* cben = app.add_subcommand("bench", "fixed-sweep scaling benchmark");
  std::string n_grid_str = "100,200,400,800", d_grid_str = "10", bmodel = "m7",
              bench_out = ".";
  int sweeps = 20, reps = 3;
  std::uint64_t bseed = 0;
  cben->add_option("--n-grid", n_grid_str, "comma-separated N values");
  cben->add_option("--d-grid", d_grid_str, "comma-separated d values");
  cben->add_option("--model", bmodel, "m1..m8");
  cben->add_option("--sweeps", sweeps, "fixed sweep count per fit");
  cben->add_option("--reps", reps, "repetitions per grid point");
  cben->add_option("--seed", bseed, "RNG seed");
  cben->add_option("--out", bench_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (cfit->parsed()) {
    const CovarianceModel model = parse_model(model_str);
    DataMatrix X = load_data(fin);
    Hyperparams h = config_path.empty()
                        ? default_hyperparams(model, static_cast<int>(X.n()),
                                              static_cast<int>(X.d()))
                        : load_config(config_path);
    if (cfit->count("--seed")) h.seed = seed;
    if (restarts > 0) h.restarts = restarts;
    if (max_iter > 0) h.max_iter = max_iter;
    if (rel_tol > 0) h.rel_tol = rel_tol;
    if (truncation > 0) h.truncation = truncation;
    if (k0 > 0) h.k0 = k0;
    if (a0b0 > 0) h.a0 = h.b0 = a0b0;
    if (use_eb) {
      h.a0 = h.b0 = estimate_a0(X, eb_draws, h.seed);
      log_info("empirical-Bayes a0 = b0 = " + fmt17(h.a0));
    }
    validate(h, model, static_cast<int>(X.d()));
    FitResult r = fit(X, model, h, threads);
    std::optional<double> ari_value;
    if (X.has_labels()) ari_value = ari(r.assignments, X.labels());
    write_fit_artifacts(out_dir, r, ari_value, model, h);
    std::cout << "k_post " << r.k_post << "\n";
    if (ari_value) std::cout << "ari " << fmt17(*ari_value) << "\n";
    log_info("fit done: " + std::to_string(r.iterations) + " iterations, converged=" +
             (r.converged ? std::string("yes") : std::string("no")));
    return 0;
  }

  if (csim->parsed()) {
    spec.n = sn;
    spec.d = sd;
    spec.k_true = sk;
    if (family == "nb" || family == "negative-binomial")
      spec.family = SimFamily::NegativeBinomial;
    else if (family != "gaussian")
      throw ParseError("ParseError", "family must be gaussian or nb");
    LabeledData ld = simulate(spec);
    fs::create_directories(sim_out);
    std::vector<std::string> header;
    for (Index j = 0; j < ld.x.d(); ++j) header.push_back("f" + std::to_string(j));
    write_matrix_csv((fs::path(sim_out) / "data.csv").string(), header, ld.x.x());
    std::ofstream lout(fs::path(sim_out) / "labels.csv");
    lout << "label\n";
    for (int l : ld.labels) lout << l << "\n";
    std::cout << "wrote " << ld.x.n() << "x" << ld.x.d() << " to " << sim_out << "\n";
    return 0;
  }

  if (cest->parsed()) {
    DataMatrix X = load_data(ein);
    A0Estimate est = estimate_a0_detailed(X, draws, eseed);
    fs::create_directories(est_out);
    {
      std::ofstream out(fs::path(est_out) / "profile.csv");
      out << "a0,median_derivative\n";
      for (std::size_t i = 0; i < est.profile.grid.size(); ++i)
        out << fmt17(est.profile.grid[i]) << "," << fmt17(est.profile.derivative[i])
            << "\n";
    }
    JsonWriter w;
    w.begin_object();
    w.field("a0", est.a0);
    w.field("k0", choose_k0(static_cast<int>(X.n())));
    w.field("draws", draws);
    w.end_object();
    std::cout << w.str() << "\n";
    return 0;
  }

  if (cmet->parsed()) {
    const std::vector<int> pred = read_labels(pred_path);
    const std::vector<int> truth = read_labels(truth_path);
    JsonWriter w;
    w.begin_object();
    w.field("ari", ari(pred, truth));
    w.field("k_post_pred", k_post(pred));
    w.field("k_post_truth", k_post(truth));
    w.end_object();
    std::cout << w.str() << "\n";
    return 0;
  }

  // bench
  auto parse_grid = [](const std::string& s) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
  };
  const std::vector<long> n_grid = parse_grid(n_grid_str);
  const std::vector<long> d_grid = parse_grid(d_grid_str);
  const CovarianceModel model = parse_model(bmodel);
  for (long v : n_grid)
    if (v < 2) throw ParseError("ParseError", "grid values must be >= 2");
  for (long v : d_grid)
    if (v < 2) throw ParseError("ParseError", "grid values must be >= 2");

  struct Point { long n, d; double seconds; };
  std::vector<Point> points;
  for (long dv : d_grid)
    for (long nv : n_grid) {
      SimSpec bs;
      bs.n = nv;
      bs.d = dv;
      bs.k_true = std::min<long>(4, nv);
      bs.separation = 6.0;
      bs.seed = bseed;
      LabeledData ld = simulate(bs);
      Hyperparams h = default_hyperparams(model, static_cast<int>(nv),
                                          static_cast<int>(dv));
      h.restarts = 1;
      h.seed = bseed;
      std::vector<double> times;
      for (int rep = 0; rep < reps; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        FitResult r = fit_single(ld.x, model, h, bseed + rep, sweeps, false);
        times.push_back(std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
        (void)r;
      }
      std::sort(times.begin(), times.end());
      points.push_back(Point{nv, dv, times[times.size() / 2]});
      log_info("bench n=" + std::to_string(nv) + " d=" + std::to_string(dv) +
               " median " + fmt17(points.back().seconds) + "s");
    }

  fs::create_directories(bench_out);
  {
    std::ofstream out(fs::path(bench_out) / "bench.csv");
    out << "n,d,seconds\n";
    for (const auto& p : points)
      out << p.n << "," << p.d << "," << fmt17(p.seconds) << "\n";
  }
  if (n_grid.size() > 1 && d_grid.size() == 1) {
    // log-log slope of time against N log N
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = static_cast<int>(points.size());
    for (const auto& p : points) {
      const double x = std::log(p.n * std::log(static_cast<double>(p.n)));
      const double y = std::log(p.seconds);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    std::cout << "slope_vs_nlogn " << fmt17(slope) << "\n";
  }
  std::cout << "wrote bench.csv (" << points.size() << " points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "{\"error\":{\"type\":\"" << e.code() << "\",\"message\":\""
              << e.what() << "\"}}\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "{\"error\":{\"type\":\"" << e.code() << "\",\"message\":\""
              << e.what() << "\"}}\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "{\"error\":{\"type\":\"" << e.code() << "\",\"message\":\""
              << e.what() << "\"}}\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":{\"type\":\"Internal\",\"message\":\"" << e.what()
              << "\"}}\n";
    return 3;
  }
}
