#include "sea/rl/batch.hpp"

namespace sea::rl {

std::size_t Frame::alive_count() const {
  std::size_t n = 0;
  for (auto a : alive) n += a ? 1 : 0;
  return n;
}

std::vector<std::size_t> Frame::alive_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < alive.size(); ++i)
    if (alive[i]) idx.push_back(i);
  return idx;
}

Frame frame_from(const env::StepResult& result) { return {result.observations, result.coords, result.alive}; }

void ReplayBuffer::push(Transition t) {
  if (capacity_ == 0) throw Error("replay_buffer: capacity is zero");
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
  } else {
    slots_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (slots_.empty()) throw Error("replay_buffer: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
  std::vector<const Transition*> out(count);
  for (auto& p : out) p = &slots_[pick(rng)];
  return out;
}

void ReplayBuffer::restore(std::vector<Transition> slots, std::size_t cursor) {
  if (slots.size() > capacity_ || (capacity_ > 0 && cursor >= capacity_))
    throw Error("replay_buffer: restored contents exceed capacity");
  slots_ = std::move(slots);
  cursor_ = cursor;
}

}  // namespace sea::rl
