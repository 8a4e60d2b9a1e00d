#pragma once

// Benchmark harness: seeded instance generation, experiment execution across
// retractions and trials (optionally concurrent), and machine-readable
// artifacts (trace CSVs, summary JSON, instance/point JSON files).

#include "orthoqp/diagnostics.hpp"
#include "orthoqp/linesearch.hpp"
#include "orthoqp/objective.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace orthoqp {

struct ExperimentConfig {
  int m = 20;
  int n = 10;
  double eig_lo = 0.0;           // uniform sampling interval for the diagonals
  double eig_hi = 1.0;
  int rank_deficit = 0;          // number of zero eigenvalues forced into B
  std::uint64_t seed = 42;
  int trials = 1;
  std::vector<RetractionKind> retractions = {RetractionKind::Polar, RetractionKind::QR,
                                             RetractionKind::Cayley,
                                             RetractionKind::Exponential};
  LineSearchConfig ls;           // gamma = 1, beta = 0.5, c = 0.001, stop 1e-8 defaults
  bool diagnostics = false;
  std::string out_dir = ".";

  void validate() const {
    if (m < n || n < 1) throw std::invalid_argument("ExperimentConfig: need m >= n >= 1");
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials >= 1");
    if (!(eig_hi >= eig_lo)) throw std::invalid_argument("ExperimentConfig: bad eig range");
    if (rank_deficit < 0 || rank_deficit >= n)
      throw std::invalid_argument("ExperimentConfig: rank deficit must be in [0, n)");
    if (retractions.empty())
      throw std::invalid_argument("ExperimentConfig: need at least one retraction");
    ls.validate();
  }
};

/// Diagonal instance with diag(A), diag(B) i.i.d. uniform on [lo, hi], sorted
/// non-increasing, with `rank_deficit` entries of B forced to zero.
inline ProblemInstance generate_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  detail::Rng rng(seed);
  VectorXd da(cfg.m), db(cfg.n);
  for (int i = 0; i < cfg.m; ++i)
    da(i) = cfg.eig_lo + (cfg.eig_hi - cfg.eig_lo) * detail::uniform01(rng);
  for (int j = 0; j < cfg.n; ++j)
    db(j) = j < cfg.n - cfg.rank_deficit
                ? cfg.eig_lo + (cfg.eig_hi - cfg.eig_lo) * detail::uniform01(rng)
                : 0.0;
  return ProblemInstance::from_diagonals(da, db);
}

namespace detail {

// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the trace as CSV with a fixed header; floats carry 17 significant
/// digits so that parse-back is bit-exact.
inline void emit_trace_csv(const IterateTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_trace_csv: cannot open " + path);
  out << "iter,f,grad_norm,step,move_norm,feas_err,backtracks\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << detail::format_double(r.f) << ','
        << detail::format_double(r.grad_norm) << ',' << detail::format_double(r.step) << ','
        << detail::format_double(r.move_norm) << ',' << detail::format_double(r.feas_err)
        << ',' << r.backtracks << '\n';
  }
  if (!out) throw std::runtime_error("emit_trace_csv: write failed for " + path);
}

inline std::vector<IterateRecord> parse_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "iter,f,grad_norm,step,move_norm,feas_err,backtracks")
    throw std::runtime_error("parse_trace_csv: bad header in " + path);
  std::vector<IterateRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    IterateRecord r;
    std::istringstream ss(line);
    std::string tok;
    const auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("parse_trace_csv: short row");
      return tok;
    };
    r.iter = std::stoi(next());
    r.f = std::strtod(next().c_str(), nullptr);
    r.grad_norm = std::strtod(next().c_str(), nullptr);
    r.step = std::strtod(next().c_str(), nullptr);
    r.move_norm = std::strtod(next().c_str(), nullptr);
    r.feas_err = std::strtod(next().c_str(), nullptr);
    r.backtracks = std::stoi(next());
    out.push_back(r);
  }
  return out;
}

// Instance and point files: JSON with explicit dims and row-major arrays.

inline nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

inline MatrixXd matrix_from_json(const nlohmann::json& arr, int rows, int cols) {
  if (static_cast<int>(arr.size()) != rows * cols)
    throw std::runtime_error("matrix_from_json: size mismatch");
  MatrixXd m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = arr[k++].get<double>();
  return m;
}

inline void write_instance_json(const ProblemInstance& p, const std::string& path) {
  nlohmann::json j{{"m", p.m()}, {"n", p.n()}, {"a", matrix_to_json(p.a)},
                   {"b", matrix_to_json(p.b)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_instance_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline ProblemInstance read_instance_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_instance_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const int m = j.at("m").get<int>(), n = j.at("n").get<int>();
  return ProblemInstance(matrix_from_json(j.at("a"), m, m), matrix_from_json(j.at("b"), n, n));
}

inline void write_point_json(const StiefelPoint& x, const std::string& path) {
  nlohmann::json j{{"m", x.rows()}, {"n", x.cols()}, {"x", matrix_to_json(x.matrix())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_point_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline StiefelPoint read_point_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_point_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const int m = j.at("m").get<int>(), n = j.at("n").get<int>();
  return StiefelPoint(matrix_from_json(j.at("x"), m, n));
}

/// Per-(trial, retraction) outcome.
struct RunSummary {
  std::string retraction;
  bool failed = false;
  std::string error;
  int iterations = 0;
  std::string termination;
  double final_f = 0;
  double final_grad_norm = 0;
  double final_feas = 0;
  double wall_time_s = 0;
  std::string trace_path;
  std::optional<RateFit> rate;
};

struct RunArtifact {
  std::uint64_t seed = 0;
  std::string summary_path;
  std::vector<RunSummary> runs;

  bool all_succeeded() const {
    for (const auto& r : runs)
      if (r.failed) return false;
    return true;
  }
};

/// Job concurrency cap: ORTHOQP_THREADS, default 1.
inline int thread_cap() {
  if (const char* env = std::getenv("ORTHOQP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

/// Runs trials x retractions. Each (trial, retraction) job owns its trace
/// file; per-trial summaries are aggregated after all jobs finish. Returns
/// one artifact per trial.
inline std::vector<RunArtifact> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  struct Job {
    int trial;
    RetractionKind kind;
    std::uint64_t seed;
    std::uint64_t x0_seed;
  };
  std::vector<Job> jobs;
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(t);
    detail::Rng derive(seed);
    derive.discard(static_cast<unsigned long long>(cfg.m) + cfg.n);  // past the instance draws
    const std::uint64_t x0_seed = derive();
    for (const auto kind : cfg.retractions) jobs.push_back(Job{t, kind, seed, x0_seed});
  }

  std::vector<RunSummary> results(jobs.size());
  std::atomic<size_t> next_job{0};
  const auto worker = [&]() {
    for (size_t j = next_job.fetch_add(1); j < jobs.size(); j = next_job.fetch_add(1)) {
      const Job& job = jobs[j];
      RunSummary& rs = results[j];
      rs.retraction = to_string(job.kind);
      const std::string stem = "trace_m" + std::to_string(cfg.m) + "_n" + std::to_string(cfg.n) +
                               "_seed" + std::to_string(job.seed) + "_" + rs.retraction + ".csv";
      rs.trace_path = (std::filesystem::path(cfg.out_dir) / stem).string();

      const ProblemInstance p = generate_instance(cfg, job.seed);
      const StiefelPoint x0 = random_point(cfg.m, cfg.n, job.x0_seed);
      LineSearchConfig ls = cfg.ls;
      ls.retraction = job.kind;

      const auto t0 = std::chrono::steady_clock::now();
      try {
        const IterateTrace trace = solve(p, x0, ls);
        rs.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rs.iterations = trace.iterations();
        rs.termination = to_string(trace.termination);
        rs.final_f = trace.final_f();
        rs.final_grad_norm = trace.final_grad_norm();
        rs.final_feas = feasibility_error(trace.final_point.matrix());
        emit_trace_csv(trace, rs.trace_path);
        if (cfg.diagnostics && trace.records.size() >= 10) {
          try {
            rs.rate = diagnose(p, trace, ls).f_rate;
          } catch (const std::invalid_argument&) {
            // trace too short or flat for a fit; omit the rate
          }
        }
      } catch (const solve_failure& e) {
        rs.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rs.failed = true;
        rs.error = e.what();
        rs.iterations = e.partial.iterations();
        rs.termination = to_string(e.partial.termination);
        rs.final_f = e.partial.final_f();
        rs.final_grad_norm = e.partial.final_grad_norm();
        rs.final_feas = feasibility_error(e.partial.final_point.matrix());
        emit_trace_csv(e.partial, rs.trace_path);  // partial artifact retained
      }
    }
  };

  const int threads = std::min<int>(thread_cap(), static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Aggregate per-trial summaries.
  std::vector<RunArtifact> artifacts(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    RunArtifact& art = artifacts[t];
    art.seed = cfg.seed + static_cast<std::uint64_t>(t);
    for (size_t j = 0; j < jobs.size(); ++j)
      if (jobs[j].trial == t) art.runs.push_back(results[j]);

    nlohmann::json jruns = nlohmann::json::array();
    for (const auto& r : art.runs) {
      nlohmann::json jr{{"retraction", r.retraction},
                        {"failed", r.failed},
                        {"iterations", r.iterations},
                        {"termination", r.termination},
                        {"final_f", r.final_f},
                        {"final_grad_norm", r.final_grad_norm},
                        {"final_feasibility", r.final_feas},
                        {"wall_time_s", r.wall_time_s},
                        {"trace_csv", r.trace_path}};
      if (r.failed) jr["error"] = r.error;
      if (r.rate) {
        jr["rate"] = r.rate->rate;
        jr["r_squared"] = r.rate->r_squared;
        jr["fit_points"] = r.rate->points;
      }
      jruns.push_back(jr);
    }
    nlohmann::json summary{
        {"config",
         {{"m", cfg.m}, {"n", cfg.n}, {"eig_lo", cfg.eig_lo}, {"eig_hi", cfg.eig_hi},
          {"rank_deficit", cfg.rank_deficit}, {"seed", cfg.seed}, {"trials", cfg.trials},
          {"rho", cfg.ls.rho}, {"gamma", cfg.ls.gamma}, {"beta", cfg.ls.beta},
          {"c", cfg.ls.c}, {"stop_tol", cfg.ls.stop_tol}, {"max_iters", cfg.ls.max_iters},
          {"diagnostics", cfg.diagnostics}}},
        {"seed", art.seed},
        {"runs", jruns}};
    art.summary_path = (std::filesystem::path(cfg.out_dir) /
                        ("summary_m" + std::to_string(cfg.m) + "_n" + std::to_string(cfg.n) +
                         "_seed" + std::to_string(art.seed) + ".json"))
                           .string();
    std::ofstream out(art.summary_path);
    if (!out) throw std::runtime_error("run_experiment: cannot write " + art.summary_path);
    out << summary.dump(2) << '\n';
  }
  return artifacts;
}

}  // namespace orthoqp
