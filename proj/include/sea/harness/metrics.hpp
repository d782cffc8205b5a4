#pragma once

// Metric streams as CSV.
//
// Column order: step, seconds, return_mean, return_min, return_max,
// loss_policy, loss_value, entropy, extra1, extra2. For MiniGather extra1 is
// the mean count of agents alive at episode end and extra2 the mean food
// absorbed per episode; both are 0 for CoopNav.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sea::harness {

inline constexpr std::array<const char*, 10> kMetricColumns = {
    "step", "seconds", "return_mean", "return_min", "return_max",
    "loss_policy", "loss_value", "entropy", "extra1", "extra2"};

struct MetricRecord {
  std::uint64_t step = 0;
  double seconds = 0.0;
  double return_mean = 0.0;
  double return_min = 0.0;
  double return_max = 0.0;
  double loss_policy = 0.0;
  double loss_value = 0.0;
  double entropy = 0.0;
  double extra1 = 0.0;
  double extra2 = 0.0;

  std::array<double, 9> values() const;
};

std::string csv_header();
std::string csv_row(const MetricRecord& r);
MetricRecord parse_csv_row(const std::string& line);
// Reads a metric stream; enforces the header and strictly increasing steps.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

struct ExportOptions {
  bool interpolate = false;   // resample every run onto the first run's step grid
};

// Aggregates the metric streams of several runs. Each entry of `runs` is a
// run directory (holding metrics.csv) or a directory of run directories.
// Writes <out>/combined.csv (step, then <column>_mean, _min, _max for every
// other column) and a copy of each run's stream as <out>/<run name>.csv.
// Returns the run directories used, in the order aggregated.
std::vector<std::filesystem::path> export_metrics(const std::vector<std::filesystem::path>& runs,
                                                  const std::filesystem::path& out, ExportOptions options = {});

}  // namespace sea::harness
