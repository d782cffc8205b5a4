#pragma once

// Shared helpers for the test binaries: finite-difference oracle, random data
// and scratch directories.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sea/ad/tape.hpp"
#include "sea/rng.hpp"

namespace sea::testing {

inline ad::Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ad::Matrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2});
}

struct GradCheck {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

// Compares reverse-mode parameter gradients with central differences.
// `build` records a scalar loss on the given tape using the current parameter values.
inline GradCheck check_gradients(const std::vector<ad::Parameter*>& params,
                                  const std::function<ad::Var(ad::Tape&)>& build, double step = 1e-5) {
  for (ad::Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    ad::Var root = build(tape);
    tape.backward(root);
  }
  auto eval = [&] {
    ad::Tape tape;
    return build(tape).value()(0, 0);
  };
  GradCheck out;
  for (ad::Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + step;
      const double up = eval();
      w = saved - step;
      const double down = eval();
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(p->grad.data()[i], numeric);
      ++out.checked;
      if (err > out.worst) {
        out.worst = err;
        out.where = p->name + "[" + std::to_string(i) + "] analytic=" + std::to_string(p->grad.data()[i]) +
                    " numeric=" + std::to_string(numeric);
      }
    }
  }
  return out;
}

}  // namespace sea::testing

namespace sea::testing {

// Fresh, empty directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sea_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return (child.empty() ? path_ : path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sea::testing
