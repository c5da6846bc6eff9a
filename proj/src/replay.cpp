#include "softac/replay.hpp"

#include <stdexcept>

namespace softac {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  storage_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& tr) {
  if (storage_.size() < capacity_) {
    storage_.push_back(tr);
  } else {
    storage_[write_cursor_] = tr;  // overwrite oldest
  }
  write_cursor_ = (write_cursor_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, RngStream& rng) const {
  if (storage_.empty()) throw std::runtime_error("ReplayBuffer: cannot sample from empty buffer");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    batch.push_back(storage_[rng.uniform_int(storage_.size())]);
  return batch;
}

}  // namespace softac
