#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "promofraud/relations.hpp"
#include "promofraud/synth.hpp"
#include "promofraud/txn.hpp"

namespace promofraud {

// Population statistics backing the two classification rules.
struct ProductQuantityStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct RuleStats {
  // product_id -> per-user quantity stats among normal users under one promotion
  std::map<std::string, ProductQuantityStats> products;
  double header_ratio_mean = 0.0;
  double header_ratio_std = 0.0;
  double kappa = 3.0;
};

namespace rules_detail {

inline ProductQuantityStats stats_of(const std::vector<double>& xs) {
  ProductQuantityStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

}  // namespace rules_detail

// Per-user purchased quantity q(u, p) summed over the user's transactions on
// product p within `txns` (expected to be pre-filtered to one promotion).
inline std::map<std::pair<std::string, std::string>, double> user_product_quantity(
    const std::vector<Transaction>& txns) {
  std::map<std::pair<std::string, std::string>, double> q;
  for (const auto& t : txns) {
    q[{t.user_id, t.product_id}] += static_cast<double>(t.quantity);
  }
  return q;
}

// Normal-population quantity stats for the transactions of one promotion.
// When a product has no normal purchasers the stats fall back to the pooled
// per-user quantities across all products of the promotion; `global_fallback`
// (stats over all promotions) covers the remaining gaps.
inline std::map<std::string, ProductQuantityStats> rule1_stats_for_promotion(
    const std::vector<Transaction>& promo_txns, const LabelSet& labels,
    const std::optional<ProductQuantityStats>& global_fallback = std::nullopt) {
  std::map<std::string, std::vector<double>> per_product;
  std::vector<double> pooled;
  std::set<std::string> all_products;
  const auto q = user_product_quantity(promo_txns);
  for (const auto& [key, quantity] : q) {
    all_products.insert(key.second);
    if (labels.label_of(key.first) == LabelSet::kNormal) {
      per_product[key.second].push_back(quantity);
      pooled.push_back(quantity);
    }
  }
  const ProductQuantityStats pooled_stats = rules_detail::stats_of(pooled);
  std::map<std::string, ProductQuantityStats> out;
  for (const auto& product : all_products) {
    const auto it = per_product.find(product);
    if (it != per_product.end() && !it->second.empty()) {
      out[product] = rules_detail::stats_of(it->second);
    } else if (!pooled.empty()) {
      out[product] = pooled_stats;
    } else if (global_fallback) {
      out[product] = *global_fallback;
    }
  }
  return out;
}

// Pooled per-user quantity stats of normal users across every promotion.
inline std::optional<ProductQuantityStats> rule1_global_normal_stats(
    const std::vector<Transaction>& txns, const LabelSet& labels) {
  std::map<std::string, std::vector<Transaction>> by_promo;
  for (const auto& t : txns) {
    const auto& promo = t.relation(Relation::kPromotion);
    if (promo) by_promo[*promo].push_back(t);
  }
  std::vector<double> pooled;
  for (const auto& [promo, ptxns] : by_promo) {
    for (const auto& [key, quantity] : user_product_quantity(ptxns)) {
      if (labels.label_of(key.first) == LabelSet::kNormal) pooled.push_back(quantity);
    }
  }
  if (pooled.empty()) return std::nullopt;
  return rules_detail::stats_of(pooled);
}

struct Rule1Result {
  bool flagged = false;
  std::vector<std::string> witness_products;
};

// Stocking-up rule: the group is flagged when, for some product, the group's
// average purchased quantity reaches mean + kappa * stddev of the normal
// population (non-strict, boundary included).
inline Rule1Result rule1_flag(const std::set<std::string>& group,
                              const std::vector<Transaction>& promo_txns,
                              const std::map<std::string, ProductQuantityStats>& stats,
                              double kappa = 3.0) {
  if (group.empty()) throw std::invalid_argument("empty group");
  if (kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
  std::map<std::string, double> group_total;
  const auto q = user_product_quantity(promo_txns);
  for (const auto& [key, quantity] : q) {
    if (group.count(key.first)) group_total[key.second] += quantity;
  }
  Rule1Result res;
  for (const auto& [product, total] : group_total) {
    const auto it = stats.find(product);
    if (it == stats.end()) continue;  // stats do not cover this product
    const double group_avg = total / static_cast<double>(group.size());
    if (group_avg >= it->second.mean + kappa * it->second.stddev) {
      res.flagged = true;
      res.witness_products.push_back(product);
    }
  }
  return res;
}

// Income split of one header (retail store owner): cashback total c, regular
// commission income r, and the cashback ratio v = c / (c + r).
struct HeaderIncome {
  double cashback = 0.0;
  double regular = 0.0;
  double ratio() const {
    const double income = cashback + regular;
    return income > 0.0 ? cashback / income : 0.0;
  }
};

inline HeaderIncome header_income(const std::string& retail_store,
                                  const std::vector<Transaction>& txns,
                                  const CashbackSchedule& schedule,
                                  double commission_rate) {
  HeaderIncome h;
  for (const auto& t : txns) {
    const auto& store = t.relation(Relation::kRetailStore);
    if (!store || *store != retail_store) continue;
    const double revenue = t.price * static_cast<double>(t.quantity);
    h.regular += commission_rate * revenue;
    const auto& promo = t.relation(Relation::kPromotion);
    if (promo) {
      const auto it = schedule.find(*promo);
      if (it != schedule.end()) h.cashback += it->second;
    }
  }
  return h;
}

// Cashback-abuse rule: a header is flagged when its cashback ratio reaches
// mean + kappa * stddev of the normal-header population. A header with zero
// income is never flagged.
inline bool rule2_flag(const std::string& header_store,
                       const std::vector<Transaction>& txns,
                       const CashbackSchedule& schedule, double commission_rate,
                       double ratio_mean, double ratio_std, double kappa = 3.0) {
  const HeaderIncome h = header_income(header_store, txns, schedule, commission_rate);
  if (h.cashback + h.regular <= 0.0) return false;
  return h.ratio() >= ratio_mean + kappa * ratio_std;
}

// Normal-header population: stores none of whose purchasers is labeled fraud.
inline std::pair<double, double> rule2_normal_header_stats(
    const std::vector<Transaction>& txns, const LabelSet& labels,
    const CashbackSchedule& schedule, double commission_rate) {
  std::map<std::string, bool> store_has_fraud;
  for (const auto& t : txns) {
    const auto& store = t.relation(Relation::kRetailStore);
    if (!store) continue;
    store_has_fraud[*store] |= labels.label_of(t.user_id) == LabelSet::kFraud;
  }
  std::vector<double> ratios;
  for (const auto& [store, has_fraud] : store_has_fraud) {
    if (has_fraud) continue;
    const HeaderIncome h = header_income(store, txns, schedule, commission_rate);
    if (h.cashback + h.regular > 0.0) ratios.push_back(h.ratio());
  }
  const auto s = rules_detail::stats_of(ratios);
  return {s.mean, s.stddev};
}

// Avoided economic losses of a blocked transaction set: the negated sum of
// gross margins. Every transaction must carry a gross margin.
inline double avoided_losses(const std::vector<Transaction>& blocked) {
  double sum = 0.0;
  for (const auto& t : blocked) {
    if (!t.gross_margin) {
      throw std::invalid_argument("transaction " + t.txn_id +
                                  " is missing gross_margin");
    }
    sum += *t.gross_margin;
  }
  return -sum;
}

// Group classification used by the evaluation report: applies Rule 1 per
// promotion present in the group's transactions and Rule 2 to the group's
// dominant retail stores.
struct GroupClassification {
  bool stocking = false;
  bool cashback = false;
};

inline GroupClassification classify_group(
    const std::set<std::string>& group, const std::vector<Transaction>& txns,
    const LabelSet& labels, const CashbackSchedule& schedule,
    double commission_rate, double kappa = 3.0) {
  GroupClassification out;
  std::map<std::string, std::vector<Transaction>> by_promo;
  std::set<std::string> group_stores;
  for (const auto& t : txns) {
    const auto& promo = t.relation(Relation::kPromotion);
    if (promo) by_promo[*promo].push_back(t);
    const auto& store = t.relation(Relation::kRetailStore);
    if (store && group.count(t.user_id)) group_stores.insert(*store);
  }
  const auto global_stats = rule1_global_normal_stats(txns, labels);
  for (const auto& [promo, ptxns] : by_promo) {
    bool group_present = false;
    for (const auto& t : ptxns) {
      if (group.count(t.user_id)) {
        group_present = true;
        break;
      }
    }
    if (!group_present) continue;
    const auto stats = rule1_stats_for_promotion(ptxns, labels, global_stats);
    if (rule1_flag(group, ptxns, stats, kappa).flagged) {
      out.stocking = true;
      break;
    }
  }
  const auto [mu_v, sigma_v] =
      rule2_normal_header_stats(txns, labels, schedule, commission_rate);
  for (const auto& store : group_stores) {
    if (rule2_flag(store, txns, schedule, commission_rate, mu_v, sigma_v, kappa)) {
      out.cashback = true;
      break;
    }
  }
  return out;
}

}  // namespace promofraud
