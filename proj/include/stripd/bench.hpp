#ifndef STRIPD_BENCH_HPP
#define STRIPD_BENCH_HPP

#include <string>
#include <vector>

#include "stripd/config.hpp"

namespace stripd {

struct AggregateRow {
  std::int64_t iter;
  int metric;  // index into metric_names
  double min;
  double mean;
  double max;
};

struct BenchmarkOutput {
  std::vector<std::string> metric_names;
  std::vector<AggregateRow> rows;  // iteration-major, metric-major within
  std::string trace_csv;
  std::string meta_json;
  double step_margin = 0.0;
  double lambda_min_2u_minus_s = 0.0;
  std::optional<DispatchReference> reference;
  std::int64_t trials = 0;
  std::int64_t iterations = 0;

  double final_mean(const std::string& metric) const;
  double first_mean(const std::string& metric) const;
};

// Runs cfg.trials independent trials of the configured problem, each on its
// own derived random stream, and aggregates per-iteration metrics across
// trials. Trials run concurrently up to STRIPD_WORKERS (default: hardware
// concurrency); aggregation always reduces in trial order, so the rendered
// outputs are byte-identical for every worker count.
//
// Centralized and block runs measure, against the dispatch reference:
//   dist_to_solution, cost_gap, constraint_violation
// Distributed runs measure edge_violation and step_movement.
BenchmarkOutput run_benchmark(const RunConfig& cfg);

// Writes trace.csv and meta.json under dir, creating it if needed.
void write_outputs(const BenchmarkOutput& out, const std::string& dir);

}  // namespace stripd

#endif  // STRIPD_BENCH_HPP
