#include "promofraud/rules.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "promofraud/metrics.hpp"
#include "promofraud/rng.hpp"

namespace pf = promofraud;

namespace {

pf::Transaction promo_txn(const std::string& user, const std::string& product,
                          double quantity, const std::string& promo,
                          const std::string& store = "s1", double price = 1.0) {
  pf::Transaction t;
  static int counter = 0;
  t.txn_id = "rt" + std::to_string(counter++);
  t.user_id = user;
  t.product_id = product;
  t.day = 1;
  t.quantity = static_cast<std::int64_t>(quantity);
  t.price = price;
  t.set_relation(pf::Relation::kPromotion, promo);
  t.set_relation(pf::Relation::kRetailStore, store);
  return t;
}

TEST(Rule1, ThreeSigmaBound) {
  std::map<std::string, pf::ProductQuantityStats> stats;
  stats["p1"] = {2.0, 1.0};
  const std::set<std::string> group = {"u1"};

  // Q = 6 >= 2 + 3*1 = 5 -> flagged
  auto res = pf::rule1_flag(group, {promo_txn("u1", "p1", 6, "pr")}, stats, 3.0);
  EXPECT_TRUE(res.flagged);
  ASSERT_EQ(res.witness_products.size(), 1u);
  EXPECT_EQ(res.witness_products[0], "p1");

  // Q = mean is never flagged while sigma > 0
  res = pf::rule1_flag(group, {promo_txn("u1", "p1", 2, "pr")}, stats, 3.0);
  EXPECT_FALSE(res.flagged);

  // exact boundary Q = mean + kappa*sigma is flagged (non-strict)
  res = pf::rule1_flag(group, {promo_txn("u1", "p1", 5, "pr")}, stats, 3.0);
  EXPECT_TRUE(res.flagged);
}

TEST(Rule1, GroupAverageUsesAllMembers) {
  std::map<std::string, pf::ProductQuantityStats> stats;
  stats["p1"] = {2.0, 1.0};
  const std::set<std::string> group = {"u1", "u2"};
  // total 8 over 2 members -> Q = 4 < 5
  auto res = pf::rule1_flag(
      group, {promo_txn("u1", "p1", 6, "pr"), promo_txn("u2", "p1", 2, "pr")},
      stats, 3.0);
  EXPECT_FALSE(res.flagged);
  // total 12 over 2 members -> Q = 6 >= 5
  res = pf::rule1_flag(
      group, {promo_txn("u1", "p1", 6, "pr"), promo_txn("u2", "p1", 6, "pr")},
      stats, 3.0);
  EXPECT_TRUE(res.flagged);
}

TEST(Rule1, OrderPermutationInvariant) {
  std::map<std::string, pf::ProductQuantityStats> stats;
  stats["p1"] = {2.0, 1.0};
  const std::set<std::string> group = {"u1", "u2"};
  std::vector<pf::Transaction> txns = {promo_txn("u1", "p1", 4, "pr"),
                                       promo_txn("u2", "p1", 3, "pr"),
                                       promo_txn("u1", "p1", 4, "pr")};
  const auto a = pf::rule1_flag(group, txns, stats, 3.0);
  std::reverse(txns.begin(), txns.end());
  const auto b = pf::rule1_flag(group, txns, stats, 3.0);
  EXPECT_EQ(a.flagged, b.flagged);
}

TEST(Rule2, CashbackRatioBound) {
  // One cashback transaction worth 80 plus commission income of 20.
  pf::CashbackSchedule schedule{{"prC", 80.0}};
  const std::vector<pf::Transaction> txns = {
      promo_txn("u1", "p1", 1, "prC", "h1", 400.0)};
  const auto income = pf::header_income("h1", txns, schedule, 0.05);
  EXPECT_DOUBLE_EQ(income.cashback, 80.0);
  EXPECT_DOUBLE_EQ(income.regular, 20.0);
  EXPECT_DOUBLE_EQ(income.ratio(), 0.8);
  // v = 0.8 >= 0.2 + 3*0.1 = 0.5 -> flagged
  EXPECT_TRUE(pf::rule2_flag("h1", txns, schedule, 0.05, 0.2, 0.1, 3.0));
}

TEST(Rule2, ZeroCashbackNeverFlagged) {
  pf::CashbackSchedule schedule;  // no promotion carries cashback
  const std::vector<pf::Transaction> txns = {
      promo_txn("u1", "p1", 1, "prX", "h1", 100.0)};
  EXPECT_FALSE(pf::rule2_flag("h1", txns, schedule, 0.05, 0.2, 0.1, 3.0));
}

TEST(Rule2, DegenerateSigmaBoundary) {
  // c = r -> v = 0.5; mu_v = 0.5, sigma_v = 0 -> flagged at the boundary.
  pf::CashbackSchedule schedule{{"prC", 10.0}};
  const std::vector<pf::Transaction> txns = {
      promo_txn("u1", "p1", 1, "prC", "h1", 200.0)};
  const auto income = pf::header_income("h1", txns, schedule, 0.05);
  EXPECT_DOUBLE_EQ(income.ratio(), 0.5);
  EXPECT_TRUE(pf::rule2_flag("h1", txns, schedule, 0.05, 0.5, 0.0, 3.0));
}

TEST(Rule2, NoIncomeNotFlagged) {
  pf::CashbackSchedule schedule;
  EXPECT_FALSE(pf::rule2_flag("h1", {}, schedule, 0.05, 0.0, 0.0, 3.0));
}

TEST(Metrics, TableCountsCrossCheck) {
  // 65,006 + 20,979 true positives; 356 + 8,075 false positives.
  const auto m = pf::metrics_from_counts(65006 + 20979, 356 + 8075, 0, 0);
  ASSERT_TRUE(m.precision.has_value());
  EXPECT_NEAR(*m.precision, 0.9107, 1e-4);
}

TEST(Metrics, PerfectOraclePredictions) {
  pf::GroundTruthGroups truth;
  pf::PlantedGroup g;
  g.group_id = "g0";
  g.members = {"u1", "u2"};
  truth.groups.push_back(g);
  const std::set<std::string> predicted = {"u1", "u2"};
  const std::vector<std::string> universe = {"u1", "u2", "u3", "u4"};
  pf::LabelSet labels;
  const auto m = pf::compute_metrics(predicted, labels, pf::MetricPolicy::kOracle,
                                     &truth, &universe);
  ASSERT_TRUE(m.precision && m.recall && m.f1);
  EXPECT_DOUBLE_EQ(*m.precision, 1.0);
  EXPECT_DOUBLE_EQ(*m.recall, 1.0);
  EXPECT_DOUBLE_EQ(*m.f1, 1.0);
  EXPECT_EQ(m.tn, 2);
}

TEST(Metrics, AllNegativeHasUndefinedPrecision) {
  pf::LabelSet labels;
  labels.set("u1", 1);
  labels.set("u2", 0);
  const auto m = pf::compute_metrics({}, labels, pf::MetricPolicy::kExcludeUnknown);
  EXPECT_FALSE(m.precision.has_value());
  ASSERT_TRUE(m.recall.has_value());
  EXPECT_DOUBLE_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.f1.has_value());
}

TEST(Metrics, ExcludePolicyIgnoresUnknown) {
  pf::LabelSet labels;
  labels.set("u1", 1);
  labels.set("u2", 0);
  labels.set("u3", -1);
  const auto m = pf::compute_metrics({"u1", "u3", "u9"}, labels,
                                     pf::MetricPolicy::kExcludeUnknown);
  EXPECT_EQ(m.tp, 1);
  EXPECT_EQ(m.fp, 0);  // u3 unknown, u9 unlabeled: both excluded
  EXPECT_EQ(m.fn, 0);
  EXPECT_EQ(m.tn, 1);
}

TEST(Metrics, F1Identity) {
  pf::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto m = pf::metrics_from_counts(rng.uniform_int(0, 50),
                                           rng.uniform_int(0, 50),
                                           rng.uniform_int(0, 50),
                                           rng.uniform_int(0, 50));
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
      ASSERT_TRUE(m.f1.has_value());
      EXPECT_NEAR(*m.f1,
                  2.0 * *m.precision * *m.recall / (*m.precision + *m.recall),
                  1e-12);
    } else {
      EXPECT_FALSE(m.f1.has_value());
    }
  }
}

TEST(AvoidedLosses, NegatedSum) {
  auto with_gm = [](double gm) {
    pf::Transaction t;
    static int counter = 0;
    t.txn_id = "a" + std::to_string(counter++);
    t.gross_margin = gm;
    return t;
  };
  EXPECT_DOUBLE_EQ(pf::avoided_losses({with_gm(-3), with_gm(-5), with_gm(2)}), 6.0);
  EXPECT_DOUBLE_EQ(pf::avoided_losses({}), 0.0);
  EXPECT_LE(pf::avoided_losses({with_gm(1), with_gm(0.5)}), 0.0);

  pf::Transaction missing;
  missing.txn_id = "m";
  EXPECT_THROW(pf::avoided_losses({missing}), std::invalid_argument);
}

}  // namespace
