#include "sea/env/environment.hpp"

#include <json.hpp>

namespace sea::env {

std::size_t StepResult::alive_count() const {
  std::size_t n = 0;
  for (auto a : alive) n += a ? 1 : 0;
  return n;
}

void TrajectoryWriter::write(std::size_t step, const StepResult& result, const Matrix& actions) {
  nlohmann::json j;
  j["step"] = step;
  nlohmann::json pos = nlohmann::json::array();
  for (const Vec2& c : result.coords) pos.push_back({c.x, c.y});
  j["position"] = pos;
  nlohmann::json act = nlohmann::json::array();
  for (std::size_t r = 0; r < actions.rows(); ++r) {
    auto row = actions.row_span(r);
    act.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["action"] = act;
  j["reward"] = result.rewards;
  std::vector<int> alive(result.alive.begin(), result.alive.end());
  j["alive"] = alive;
  j["done"] = result.done;
  out_ << j.dump() << '\n';
}

}  // namespace sea::env
