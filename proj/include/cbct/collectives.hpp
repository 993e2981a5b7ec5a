// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cbct/errors.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Fixed-capacity FIFO between two pipeline stages. close() wakes every
/// waiter: pushes then fail and pops drain what is left.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Blocks while full. Returns false if the queue was closed.
  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  /// Blocks while empty. Returns nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Synchronous exchange among `size` members: each round every member
/// deposits one item and receives all items of the round in member order.
template <typename T>
class Rendezvous {
 public:
  using Round = std::shared_ptr<const std::vector<T>>;

  Rendezvous(int size, std::chrono::milliseconds timeout, std::string name = "collective")
      : size_(size), timeout_(timeout), name_(std::move(name)), slots_(size), filled_(size, false) {
    if (size < 1) throw ValidationError(name_ + ": group size must be >= 1");
  }

  int size() const noexcept { return size_; }

  Round exchange(int member, T item) {
    if (member < 0 || member >= size_) {
      throw IndexError(name_ + ": member " + std::to_string(member) + " outside group of " +
                       std::to_string(size_));
    }
    std::unique_lock lock(mu_);
    if (aborted_) throw PipelineError(name_ + ": group aborted", member);
    if (filled_[member]) {
      throw PipelineError(name_ + ": member " + std::to_string(member) + " contributed twice in one round", member);
    }
    slots_[member] = std::move(item);
    filled_[member] = true;
    const std::size_t generation = generation_;
    if (++arrived_ == size_) {
      result_ = std::make_shared<const std::vector<T>>(std::move(slots_));
      slots_ = std::vector<T>(size_);
      filled_.assign(size_, false);
      arrived_ = 0;
      ++generation_;
      cv_.notify_all();
      return result_;
    }
    const bool done = cv_.wait_for(lock, timeout_, [&] { return aborted_ || generation_ != generation; });
    if (generation_ != generation) return result_;
    if (!done) {
      std::string missing;
      for (int r = 0; r < size_; ++r)
        if (!filled_[r]) missing += (missing.empty() ? "" : ", ") + std::to_string(r);
      aborted_ = true;
      cv_.notify_all();
      throw TimeoutError(name_ + ": timed out waiting for member(s) " + missing, member);
    }
    throw PipelineError(name_ + ": group aborted", member);
  }

  /// Fails every pending and future exchange.
  void abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    cv_.notify_all();
  }

 private:
  int size_;
  std::chrono::milliseconds timeout_;
  std::string name_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<T> slots_;
  std::vector<bool> filled_;
  int arrived_ = 0;
  std::size_t generation_ = 0;
  bool aborted_ = false;
  Round result_;
};

/// Every member receives copies of all members' projections, in member
/// order. Mismatched shapes raise ShapeError on every member.
std::vector<Projection> all_gather(Rendezvous<Projection>& group, int member, Projection item);

/// Element-wise sum over the group, accumulated in ascending member order,
/// delivered to member 0. Other members get nullopt.
std::optional<Volume> reduce_sum(Rendezvous<Volume>& group, int member, Volume slab);

}  // namespace cbct
