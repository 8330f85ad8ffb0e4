#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "usac/rng.hpp"

namespace usac {

/// One environment interaction. `terminal` marks true termination only;
/// time-limit truncation is stored as non-terminal.
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;
};

/// Column-batched mini-batch; terminals are 0/1 reals so they can mask directly.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::RowVectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::RowVectorXd terminals;

  Eigen::Index size() const { return states.cols(); }
  static Batch from_transitions(const std::vector<Transition>& items);
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  /// Stored item i in insertion order among the retained ones (0 = oldest).
  Transition at(std::size_t i) const;

  Batch sample(std::size_t n, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& slots) const;

  /// Raw ring storage for snapshots: one column per slot.
  struct Storage {
    Eigen::MatrixXd states, actions, next_states;
    Eigen::RowVectorXd rewards, terminals;
    std::size_t size = 0;
    std::size_t next = 0;
  };
  Storage storage() const;
  void restore(const Storage& s);

 private:
  std::size_t capacity_;
  int state_dim_;
  int action_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> states_, actions_, next_states_, rewards_, terminals_;
};

}  // namespace usac
