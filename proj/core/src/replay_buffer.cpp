#include "usac/replay_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "usac/errors.hpp"

namespace usac {

Batch Batch::from_transitions(const std::vector<Transition>& items) {
  if (items.empty()) throw ContractError("Batch: empty transition list");
  const auto n = static_cast<Eigen::Index>(items.size());
  const auto ds = items.front().state.size();
  const auto da = items.front().action.size();
  Batch b;
  b.states.resize(ds, n);
  b.actions.resize(da, n);
  b.rewards.resize(n);
  b.next_states.resize(ds, n);
  b.terminals.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = items[static_cast<std::size_t>(j)];
    if (t.state.size() != ds || t.next_state.size() != ds || t.action.size() != da)
      throw ContractError("Batch: inconsistent transition dimensions");
    b.states.col(j) = t.state;
    b.actions.col(j) = t.action;
    b.rewards(j) = t.reward;
    b.next_states.col(j) = t.next_state;
    b.terminals(j) = t.terminal ? 1.0 : 0.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  if (state_dim <= 0 || action_dim <= 0) throw ContractError("replay buffer: dimensions must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.action.size() != action_dim_)
    throw ContractError("replay buffer: transition dimensions do not match");
  if (!std::isfinite(t.reward)) throw ContractError("replay buffer: non-finite reward");
  const auto ds = static_cast<std::size_t>(state_dim_);
  const auto da = static_cast<std::size_t>(action_dim_);
  if (size_ < capacity_ && next_ == size_) {
    // still growing: append
    states_.insert(states_.end(), t.state.data(), t.state.data() + ds);
    actions_.insert(actions_.end(), t.action.data(), t.action.data() + da);
    next_states_.insert(next_states_.end(), t.next_state.data(), t.next_state.data() + ds);
    rewards_.push_back(t.reward);
    terminals_.push_back(t.terminal ? 1.0 : 0.0);
  } else {
    std::copy_n(t.state.data(), ds, states_.begin() + static_cast<std::ptrdiff_t>(next_ * ds));
    std::copy_n(t.action.data(), da, actions_.begin() + static_cast<std::ptrdiff_t>(next_ * da));
    std::copy_n(t.next_state.data(), ds, next_states_.begin() + static_cast<std::ptrdiff_t>(next_ * ds));
    rewards_[next_] = t.reward;
    terminals_[next_] = t.terminal ? 1.0 : 0.0;
  }
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay buffer: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  const Batch b = gather({(oldest + i) % capacity_});
  return {b.states.col(0), b.actions.col(0), b.rewards(0), b.next_states.col(0), b.terminals(0) != 0.0};
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  const auto ds = static_cast<std::size_t>(state_dim_);
  const auto da = static_cast<std::size_t>(action_dim_);
  Batch b;
  b.states.resize(state_dim_, n);
  b.actions.resize(action_dim_, n);
  b.rewards.resize(n);
  b.next_states.resize(state_dim_, n);
  b.terminals.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t k = slots[static_cast<std::size_t>(j)];
    if (k >= size_) throw ContractError("replay buffer: slot out of range");
    b.states.col(j) = Eigen::Map<const Eigen::VectorXd>(states_.data() + k * ds, state_dim_);
    b.actions.col(j) = Eigen::Map<const Eigen::VectorXd>(actions_.data() + k * da, action_dim_);
    b.next_states.col(j) = Eigen::Map<const Eigen::VectorXd>(next_states_.data() + k * ds, state_dim_);
    b.rewards(j) = rewards_[k];
    b.terminals(j) = terminals_[k];
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw ContractError("replay buffer: cannot sample from an empty buffer");
  if (n == 0) throw ContractError("replay buffer: batch size must be positive");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = rng.index(size_);
  return gather(slots);
}

ReplayBuffer::Storage ReplayBuffer::storage() const {
  const auto n = static_cast<Eigen::Index>(size_);
  Storage s;
  s.states = Eigen::Map<const Eigen::MatrixXd>(states_.data(), state_dim_, n);
  s.actions = Eigen::Map<const Eigen::MatrixXd>(actions_.data(), action_dim_, n);
  s.next_states = Eigen::Map<const Eigen::MatrixXd>(next_states_.data(), state_dim_, n);
  s.rewards = Eigen::Map<const Eigen::RowVectorXd>(rewards_.data(), n);
  s.terminals = Eigen::Map<const Eigen::RowVectorXd>(terminals_.data(), n);
  s.size = size_;
  s.next = next_;
  return s;
}

void ReplayBuffer::restore(const Storage& s) {
  if (s.size > capacity_ || s.states.rows() != state_dim_ || s.actions.rows() != action_dim_ ||
      s.states.cols() != static_cast<Eigen::Index>(s.size))
    throw ContractError("replay buffer: snapshot does not fit this buffer");
  size_ = s.size;
  next_ = s.next;
  states_.assign(s.states.data(), s.states.data() + s.states.size());
  actions_.assign(s.actions.data(), s.actions.data() + s.actions.size());
  next_states_.assign(s.next_states.data(), s.next_states.data() + s.next_states.size());
  rewards_.assign(s.rewards.data(), s.rewards.data() + s.rewards.size());
  terminals_.assign(s.terminals.data(), s.terminals.data() + s.terminals.size());
}

}  // namespace usac
