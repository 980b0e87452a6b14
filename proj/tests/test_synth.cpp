#include "promofraud/synth.hpp"

#include <gtest/gtest.h>

#include <set>

#include "promofraud/graph.hpp"
#include "promofraud/rules.hpp"
#include "test_util.hpp"

namespace pf = promofraud;

namespace {

pf::ScenarioConfig small_scenario() {
  pf::ScenarioConfig cfg;
  cfg.n_users = 600;
  cfg.n_products = 80;
  cfg.n_days = 14;
  cfg.n_stocking_groups = 3;  // covers all three co-conspiracy relations
  cfg.n_cashback_groups = 2;
  cfg.n_mixed_groups = 0;
  cfg.group_size_min = 6;
  cfg.group_size_max = 6;
  cfg.seed = 11;
  return cfg;
}

TEST(Generate, DeterministicGivenSeed) {
  const auto a = pf::generate(small_scenario());
  const auto b = pf::generate(small_scenario());
  EXPECT_EQ(pf::serialize_transactions(a.txns), pf::serialize_transactions(b.txns));
  ASSERT_EQ(a.labels.size(), b.labels.size());
  for (const auto& [user, label] : a.labels.entries()) {
    EXPECT_EQ(b.labels.label_of(user), label);
  }
  ASSERT_EQ(a.truth.groups.size(), b.truth.groups.size());
  for (std::size_t g = 0; g < a.truth.groups.size(); ++g) {
    EXPECT_EQ(a.truth.groups[g].members, b.truth.groups[g].members);
  }
}

TEST(Generate, NoGroupsMeansNoFraudLabels) {
  auto cfg = small_scenario();
  cfg.n_stocking_groups = 0;
  cfg.n_cashback_groups = 0;
  cfg.n_mixed_groups = 0;
  const auto out = pf::generate(cfg);
  for (const auto& [user, label] : out.labels.entries()) {
    EXPECT_NE(label, pf::LabelSet::kFraud);
  }
  EXPECT_TRUE(out.truth.groups.empty());
}

TEST(Generate, GroupsAreDisjointAndLabeledFraud) {
  const auto out = pf::generate(small_scenario());
  std::set<std::string> seen;
  for (const auto& g : out.truth.groups) {
    for (const auto& m : g.members) {
      EXPECT_TRUE(seen.insert(m).second) << "member in two groups: " << m;
      EXPECT_EQ(out.labels.label_of(m), pf::LabelSet::kFraud);
    }
  }
  EXPECT_LE(seen.size(), static_cast<std::size_t>(small_scenario().n_users));
}

TEST(Generate, DefaultScenarioHasExactlyHundredFraudUsers) {
  pf::ScenarioConfig cfg;  // 5 stocking + 5 cashback groups of size 10
  cfg.seed = 1;
  const auto out = pf::generate(cfg);
  std::size_t fraud = 0;
  for (const auto& [user, label] : out.labels.entries()) {
    fraud += label == pf::LabelSet::kFraud;
  }
  EXPECT_EQ(fraud, 100u);
  EXPECT_EQ(out.truth.total_members(), 100u);
}

TEST(Generate, EightyTwoPercentOfFraudUsersHaveBackgroundTxns) {
  const auto out = pf::generate(small_scenario());
  std::set<std::string> fraud_users;
  for (const auto& g : out.truth.groups) {
    fraud_users.insert(g.members.begin(), g.members.end());
  }
  std::set<std::string> with_background;
  for (const auto& t : out.txns) {
    if (!fraud_users.count(t.user_id)) continue;
    const auto& store = t.relation(pf::Relation::kRetailStore);
    // Group activity always happens at dedicated "gs*" stores.
    if (store && store->rfind("gs", 0) != 0) with_background.insert(t.user_id);
  }
  const auto expected = static_cast<std::size_t>(
      std::llround(0.82 * static_cast<double>(fraud_users.size())));
  EXPECT_EQ(with_background.size(), expected);
}

TEST(Generate, InfeasibleConfigRejected) {
  auto cfg = small_scenario();
  cfg.n_users = 20;
  cfg.n_stocking_groups = 5;
  cfg.n_cashback_groups = 0;
  cfg.group_size_min = 6;
  cfg.group_size_max = 6;
  EXPECT_THROW(pf::generate(cfg), std::invalid_argument);
}

TEST(Generate, Rule1FlagsEveryStockingGroup) {
  const auto out = pf::generate(small_scenario());
  const auto win = pf::window(out.txns, 14, 7);
  for (const auto& g : out.truth.groups) {
    if (g.type == pf::GroupType::kCashback) continue;
    const std::set<std::string> members(g.members.begin(), g.members.end());
    const auto cls = pf::classify_group(members, win, out.labels, out.schedule,
                                        0.05, 3.0);
    EXPECT_TRUE(cls.stocking) << "group " << g.group_id;
  }
}

TEST(Generate, Rule2FlagsCashbackHeaders) {
  const auto out = pf::generate(small_scenario());
  const auto win = pf::window(out.txns, 14, 7);
  for (const auto& g : out.truth.groups) {
    if (g.type == pf::GroupType::kStocking) continue;
    const std::set<std::string> members(g.members.begin(), g.members.end());
    const auto cls = pf::classify_group(members, win, out.labels, out.schedule,
                                        0.05, 3.0);
    EXPECT_TRUE(cls.cashback) << "group " << g.group_id;
  }
}

TEST(Generate, BackgroundPairsAreMostlySingleRelation) {
  const auto out = pf::generate(small_scenario());
  const auto win = pf::window(out.txns, 14, 7);
  const auto graph = pf::build_fused_graph(win, 1.0);
  std::set<std::string> planted;
  for (const auto& g : out.truth.groups) {
    planted.insert(g.members.begin(), g.members.end());
  }
  std::size_t normal_edges = 0;
  std::size_t multi_relation = 0;
  for (const auto& e : graph.edges()) {
    if (planted.count(graph.user(e.a)) || planted.count(graph.user(e.b))) continue;
    ++normal_edges;
    multi_relation += std::popcount(e.bits) >= 2;
  }
  ASSERT_GT(normal_edges, 0u);
  EXPECT_LT(static_cast<double>(multi_relation) / normal_edges, 0.4);
}

TEST(Generate, PlantedGroupsHaveHigherTcs) {
  const auto out = pf::generate(small_scenario());
  const auto win = pf::window(out.txns, 14, 7);
  const auto graph = pf::build_fused_graph(win, 1.0);
  std::set<std::string> planted;
  for (const auto& g : out.truth.groups) {
    planted.insert(g.members.begin(), g.members.end());
  }
  // Normal comparison groups: arbitrary slices of non-planted graph nodes.
  std::vector<std::string> normal_nodes;
  for (const auto& u : graph.users()) {
    if (!planted.count(u)) normal_nodes.push_back(u);
  }
  ASSERT_GE(normal_nodes.size(), 24u);
  for (const pf::Relation r :
       {pf::Relation::kPromotion, pf::Relation::kShareLink, pf::Relation::kGroupId}) {
    double planted_sum = 0.0;
    int planted_n = 0;
    double normal_sum = 0.0;
    int normal_n = 0;
    std::size_t cursor = 0;
    for (const auto& g : out.truth.groups) {
      std::set<std::string> members;
      for (const auto& m : g.members) {
        if (graph.index_of(m)) members.insert(m);
      }
      if (members.size() < 2) continue;
      if (const auto s = pf::tcs(graph, members, r)) {
        planted_sum += *s;
        ++planted_n;
      }
      std::set<std::string> normal_group;
      while (normal_group.size() < members.size() && cursor < normal_nodes.size()) {
        normal_group.insert(normal_nodes[cursor++]);
      }
      if (const auto s = pf::tcs(graph, normal_group, r)) {
        normal_sum += *s;
        ++normal_n;
      }
    }
    ASSERT_GT(planted_n, 0) << pf::relation_name(r);
    // A relation in which no sampled normal group has any presence counts as
    // zero cohesion.
    const double normal_mean = normal_n > 0 ? normal_sum / normal_n : 0.0;
    EXPECT_GT(planted_sum / planted_n, normal_mean) << pf::relation_name(r);
  }
}

TEST(GroupsIo, RoundTrip) {
  const auto out = pf::generate(small_scenario());
  testutil::TempDir dir;
  pf::write_groups(dir.file("groups.csv"), out.truth);
  const auto loaded = pf::load_groups(dir.file("groups.csv"));
  ASSERT_EQ(loaded.groups.size(), out.truth.groups.size());
  for (std::size_t g = 0; g < loaded.groups.size(); ++g) {
    EXPECT_EQ(loaded.groups[g].group_id, out.truth.groups[g].group_id);
    EXPECT_EQ(loaded.groups[g].type, out.truth.groups[g].type);
    EXPECT_EQ(loaded.groups[g].members, out.truth.groups[g].members);
    EXPECT_EQ(loaded.groups[g].header_user, out.truth.groups[g].header_user);
  }
  pf::write_schedule(dir.file("schedule.csv"), out.schedule);
  EXPECT_EQ(pf::load_schedule(dir.file("schedule.csv")), out.schedule);
}

}  // namespace
