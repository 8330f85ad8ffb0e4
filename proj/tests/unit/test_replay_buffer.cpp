#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "usac/errors.hpp"
#include "usac/replay_buffer.hpp"

namespace {

using usac::ReplayBuffer;
using usac::Transition;

Transition make(double id, bool terminal = false) {
  Transition t;
  t.state = Eigen::Vector2d(id, -id);
  t.action = Eigen::VectorXd::Constant(1, id / 10.0);
  t.reward = id;
  t.next_state = Eigen::Vector2d(id + 1, -id - 1);
  t.terminal = terminal;
  return t;
}

TEST(ReplayBuffer, EvictsOldestFirst) {
  ReplayBuffer buf(3, 2, 1);
  for (int i = 0; i < 5; ++i) buf.push(make(i));
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).reward, 2.0);
  EXPECT_EQ(buf.at(1).reward, 3.0);
  EXPECT_EQ(buf.at(2).reward, 4.0);
  EXPECT_THROW(buf.at(3), usac::ContractError);
}

TEST(ReplayBuffer, StoresTransitionsExactly) {
  ReplayBuffer buf(10, 2, 1);
  buf.push(make(0.1, true));
  const auto t = buf.at(0);
  EXPECT_EQ(t.state, make(0.1).state);
  EXPECT_EQ(t.action, make(0.1).action);
  EXPECT_EQ(t.next_state, make(0.1).next_state);
  EXPECT_TRUE(t.terminal);
  const auto b = buf.gather({0, 0});
  EXPECT_EQ(b.size(), 2);
  EXPECT_EQ(b.terminals(1), 1.0);
}

TEST(ReplayBuffer, SamplingCoversRetainedItemsUniformly) {
  ReplayBuffer buf(4, 2, 1);
  for (int i = 0; i < 6; ++i) buf.push(make(i));
  usac::Rng rng(1);
  const auto b = buf.sample(40000, rng);
  std::map<double, int> counts;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    ++counts[b.rewards(j)];
    EXPECT_EQ(b.states(0, j), b.rewards(j));  // rows stay aligned
    EXPECT_EQ(b.next_states(0, j), b.rewards(j) + 1);
  }
  ASSERT_EQ(counts.size(), 4u);
  EXPECT_EQ(counts.begin()->first, 2.0);
  for (const auto& [id, c] : counts) EXPECT_NEAR(c / 40000.0, 0.25, 0.01) << id;
}

TEST(ReplayBuffer, SamplingIsSeedDeterministic) {
  ReplayBuffer buf(100, 2, 1);
  for (int i = 0; i < 100; ++i) buf.push(make(i));
  usac::Rng a(9), b(9);
  EXPECT_EQ(buf.sample(32, a).rewards, buf.sample(32, b).rewards);
}

TEST(ReplayBuffer, Contracts) {
  EXPECT_THROW(ReplayBuffer(0, 2, 1), usac::ConfigError);
  ReplayBuffer buf(5, 2, 1);
  usac::Rng rng(0);
  EXPECT_THROW(buf.sample(1, rng), usac::ContractError);
  Transition bad = make(1);
  bad.state = Eigen::Vector3d::Zero();
  EXPECT_THROW(buf.push(bad), usac::ContractError);
  bad = make(1);
  bad.reward = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(buf.push(bad), usac::ContractError);
  buf.push(make(1));
  EXPECT_THROW(buf.sample(0, rng), usac::ContractError);
  EXPECT_THROW(buf.gather({1}), usac::ContractError);
}

TEST(ReplayBuffer, StorageRoundTrip) {
  ReplayBuffer buf(4, 2, 1);
  for (int i = 0; i < 6; ++i) buf.push(make(i, i % 2 == 0));
  ReplayBuffer copy(4, 2, 1);
  copy.restore(buf.storage());
  ASSERT_EQ(copy.size(), buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(copy.at(i).reward, buf.at(i).reward);
    EXPECT_EQ(copy.at(i).terminal, buf.at(i).terminal);
  }
  copy.push(make(10));
  buf.push(make(10));
  EXPECT_EQ(copy.at(0).reward, buf.at(0).reward);
  ReplayBuffer small(3, 2, 1);
  EXPECT_THROW(small.restore(buf.storage()), usac::ContractError);
}

TEST(Batch, FromTransitions) {
  const auto b = usac::Batch::from_transitions({make(1), make(2, true)});
  EXPECT_EQ(b.rewards, Eigen::RowVector2d(1, 2));
  EXPECT_EQ(b.terminals, Eigen::RowVector2d(0, 1));
  EXPECT_THROW(usac::Batch::from_transitions({}), usac::ContractError);
}

}  // namespace
