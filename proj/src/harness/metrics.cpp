#include "sea/harness/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sea/ad/matrix.hpp"

namespace fs = std::filesystem;

namespace sea::harness {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Error("metrics: bad number '" + s + "'");
  return v;
}

bool is_run_dir(const fs::path& p) { return fs::is_regular_file(p / "metrics.csv"); }

std::vector<fs::path> collect_runs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> runs;
  for (const auto& in : inputs) {
    if (!fs::is_directory(in)) throw Error("export: '" + in.string() + "' is not a directory");
    if (is_run_dir(in)) {
      runs.push_back(in);
      continue;
    }
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_directory() && is_run_dir(e.path())) children.push_back(e.path());
    std::sort(children.begin(), children.end());
    runs.insert(runs.end(), children.begin(), children.end());
  }
  if (runs.empty()) throw Error("export: no metrics.csv found in the given run directories");
  return runs;
}

// Linear interpolation of one run onto `grid`, clamped at the ends.
std::vector<std::array<double, 9>> resample(const std::vector<MetricRecord>& run, const std::vector<std::uint64_t>& grid) {
  std::vector<std::array<double, 9>> out;
  for (std::uint64_t s : grid) {
    if (s <= run.front().step) {
      out.push_back(run.front().values());
      continue;
    }
    if (s >= run.back().step) {
      out.push_back(run.back().values());
      continue;
    }
    std::size_t j = 0;
    while (run[j + 1].step <= s) ++j;
    const auto a = run[j].values(), b = run[j + 1].values();
    const double w = double(s - run[j].step) / double(run[j + 1].step - run[j].step);
    std::array<double, 9> v{};
    for (std::size_t k = 0; k < 9; ++k) v[k] = a[k] + w * (b[k] - a[k]);
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::array<double, 9> MetricRecord::values() const {
  return {seconds, return_mean, return_min, return_max, loss_policy, loss_value, entropy, extra1, extra2};
}

std::string csv_header() {
  std::string h;
  for (std::size_t i = 0; i < kMetricColumns.size(); ++i) h += (i ? "," : "") + std::string(kMetricColumns[i]);
  return h;
}

std::string csv_row(const MetricRecord& r) {
  std::string s = std::to_string(r.step);
  for (double v : r.values()) s += "," + fmt(v);
  return s;
}

MetricRecord parse_csv_row(const std::string& line) {
  const auto cells = split(line);
  if (cells.size() != kMetricColumns.size())
    throw Error("metrics: expected " + std::to_string(kMetricColumns.size()) + " columns, got " +
                std::to_string(cells.size()));
  MetricRecord r;
  r.step = static_cast<std::uint64_t>(parse_cell(cells[0]));
  double* fields[] = {&r.seconds, &r.return_mean, &r.return_min, &r.return_max, &r.loss_policy,
                      &r.loss_value, &r.entropy, &r.extra1, &r.extra2};
  for (std::size_t i = 0; i < 9; ++i) *fields[i] = parse_cell(cells[i + 1]);
  return r;
}

std::vector<MetricRecord> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("metrics: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw Error("metrics: '" + path.string() + "' does not start with the expected header");
  std::vector<MetricRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_csv_row(line));
    if (out.size() > 1 && out.back().step <= out[out.size() - 2].step)
      throw Error("metrics: steps are not increasing in '" + path.string() + "'");
  }
  return out;
}

std::vector<fs::path> export_metrics(const std::vector<fs::path>& inputs, const fs::path& out, ExportOptions options) {
  const auto runs = collect_runs(inputs);
  std::vector<std::vector<MetricRecord>> data;
  for (const auto& r : runs) {
    data.push_back(read_metrics(r / "metrics.csv"));
    if (data.back().empty()) throw Error("export: '" + r.string() + "' has no metric records");
  }
  std::vector<std::uint64_t> grid;
  for (const auto& rec : data.front()) grid.push_back(rec.step);

  std::vector<std::vector<std::array<double, 9>>> rows;
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::vector<std::uint64_t> steps;
    for (const auto& rec : data[k]) steps.push_back(rec.step);
    if (steps != grid && !options.interpolate)
      throw Error("export: step grid of '" + runs[k].string() + "' differs from '" + runs[0].string() +
                  "'; rerun with --interpolate to resample onto the first run's steps");
    rows.push_back(resample(data[k], grid));
  }

  fs::create_directories(out);
  std::ofstream comb(out / "combined.csv");
  if (!comb) throw Error("export: cannot write '" + (out / "combined.csv").string() + "'");
  comb << "step";
  for (std::size_t c = 1; c < kMetricColumns.size(); ++c)
    comb << "," << kMetricColumns[c] << "_mean," << kMetricColumns[c] << "_min," << kMetricColumns[c] << "_max";
  comb << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    comb << grid[i];
    for (std::size_t c = 0; c < 9; ++c) {
      double sum = 0.0, lo = rows[0][i][c], hi = rows[0][i][c];
      for (const auto& r : rows) {
        sum += r[i][c];
        lo = std::min(lo, r[i][c]);
        hi = std::max(hi, r[i][c]);
      }
      comb << "," << fmt(sum / double(rows.size())) << "," << fmt(lo) << "," << fmt(hi);
    }
    comb << "\n";
  }

  for (const auto& r : runs) {
    std::string name = r.filename().string();
    if (name.empty()) name = r.parent_path().filename().string();
    fs::copy_file(r / "metrics.csv", out / (name + ".csv"), fs::copy_options::overwrite_existing);
  }
  return runs;
}

}  // namespace sea::harness
