#pragma once

#include <vector>

#include "softac/bellman.hpp"
#include "softac/rng.hpp"

namespace softac {

// Fixed-capacity FIFO ring of transitions with uniform-with-replacement
// sampling. Owned by a single run loop; parallel experiments use disjoint
// buffers and RNG streams.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& tr);
  std::vector<Transition> sample(std::size_t batch_size, RngStream& rng) const;

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return storage_[i]; }

 private:
  std::size_t capacity_;
  std::size_t write_cursor_ = 0;
  std::vector<Transition> storage_;
};

}  // namespace softac
