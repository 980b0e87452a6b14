#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "promofraud/csv.hpp"
#include "promofraud/relations.hpp"
#include "promofraud/rng.hpp"
#include "promofraud/txn.hpp"

namespace promofraud {

// Scenario generator: background normal traffic plus planted stocking-up and
// cashback-abuse groups with known membership. Deterministic given the seed.
struct ScenarioConfig {
  int n_users = 5000;
  int n_products = 400;
  int n_days = 14;
  double fraud_fraction = 0.015;  // documented target share of fraud users
  int n_stocking_groups = 5;
  int n_cashback_groups = 5;
  int n_mixed_groups = 0;
  int group_size_min = 10;
  int group_size_max = 10;
  double normal_txn_rate = 0.6;  // mean transactions per user per day
  std::uint64_t seed = 1;
};

enum class GroupType { kStocking, kCashback, kMixed };

inline std::string group_type_name(GroupType t) {
  switch (t) {
    case GroupType::kStocking: return "stocking";
    case GroupType::kCashback: return "cashback";
    case GroupType::kMixed: return "mixed";
  }
  return "?";
}

struct PlantedGroup {
  std::string group_id;
  GroupType type = GroupType::kStocking;
  std::vector<std::string> members;  // sorted
  std::string header_user;           // organizer; empty for pure stocking
  std::string retail_store;
};

struct GroundTruthGroups {
  std::vector<PlantedGroup> groups;

  bool is_planted(const std::string& user) const {
    for (const auto& g : groups) {
      if (std::binary_search(g.members.begin(), g.members.end(), user)) return true;
    }
    return false;
  }
  std::size_t total_members() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.members.size();
    return n;
  }
};

// promotion_id -> cashback amount credited to the header per transaction.
using CashbackSchedule = std::map<std::string, double>;

struct SynthOutput {
  std::vector<Transaction> txns;
  LabelSet labels;
  GroundTruthGroups truth;
  CashbackSchedule schedule;

  const GroundTruthGroups& ground_truth_groups() const { return truth; }
};

namespace synth_detail {

inline std::string pad_id(const char* prefix, int idx, int width) {
  std::string n = std::to_string(idx);
  if (static_cast<int>(n.size()) < width) {
    n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
  }
  return prefix + n;
}

inline double round_cents(double v) { return std::round(v * 100.0) / 100.0; }

struct Promo {
  std::string id;
  std::vector<int> products;
  int start = 1;
  int len = 4;
  bool cashback = false;

  bool active_on(std::int64_t day) const {
    return day >= start && day < start + len;
  }
};

}  // namespace synth_detail

inline SynthOutput generate(const ScenarioConfig& cfg) {
  using synth_detail::pad_id;
  using synth_detail::Promo;
  using synth_detail::round_cents;

  const int n_groups =
      cfg.n_stocking_groups + cfg.n_cashback_groups + cfg.n_mixed_groups;
  if (cfg.n_users < 2 || cfg.n_products < 8 || cfg.n_days < 1) {
    throw std::invalid_argument("scenario too small");
  }
  if (n_groups > 0 && (cfg.group_size_min < 2 || cfg.group_size_max < cfg.group_size_min)) {
    throw std::invalid_argument("invalid group size range");
  }
  if ((cfg.n_cashback_groups + cfg.n_mixed_groups) > 0 && cfg.n_days < 7) {
    throw std::invalid_argument(
        "infeasible config: cashback groups need at least 7 days");
  }

  Rng master(cfg.seed);
  Rng setup = master.fork(1);
  Rng traffic = master.fork(2);
  Rng group_rng = master.fork(3);
  Rng label_rng = master.fork(4);

  const int id_width = static_cast<int>(std::to_string(cfg.n_users).size());
  const int prod_width = static_cast<int>(std::to_string(cfg.n_products).size());

  // Relation value pools scale with the user count so that the fused graph
  // stays sparse (a handful of edges per user).
  const int n_stores = std::max(4, cfg.n_users / 50);
  const int n_locations = std::max(4, cfg.n_users / 25);
  const int n_links = std::max(4, cfg.n_users / 20);
  const int n_drivers = std::max(4, cfg.n_users / 50);
  const int n_chats = std::max(4, cfg.n_users / 25);
  const int n_coupons = 10;
  const int n_stims = 15;
  const int n_promos = std::max(8, cfg.n_users / 125);
  const int n_cheap = std::max(2, cfg.n_products / 4);  // low-cost band

  std::vector<double> price(cfg.n_products);
  for (int p = 0; p < cfg.n_products; ++p) {
    price[p] = round_cents(p < n_cheap ? setup.uniform(1.5, 5.0)
                                       : setup.uniform(4.0, 25.0));
  }

  std::vector<Promo> promos(n_promos);
  CashbackSchedule schedule;
  const int first_cashback = (3 * n_promos) / 4;
  for (int k = 0; k < n_promos; ++k) {
    Promo& pr = promos[k];
    pr.id = pad_id("promo", k, 3);
    pr.cashback = k >= first_cashback;
    if (pr.cashback) {
      // Long-running incentives on low-cost products.
      pr.start = 1;
      pr.len = cfg.n_days;
      for (int t = 0; t < 10; ++t) pr.products.push_back((k * 13 + t * 7) % n_cheap);
      schedule[pr.id] = round_cents(setup.uniform(0.6, 1.0));
    } else {
      // Short promotions with starts spread across the whole horizon so that
      // some are always live inside a trailing detection window.
      const int span = std::max(1, cfg.n_days - 3);
      const int denom = std::max(1, first_cashback - 1);
      pr.start = 1 + (k * (span - 1)) / denom;
      pr.len = 4;
      for (int t = 0; t < 10; ++t) {
        pr.products.push_back((k * 13 + t * 7) % cfg.n_products);
      }
    }
    std::sort(pr.products.begin(), pr.products.end());
    pr.products.erase(std::unique(pr.products.begin(), pr.products.end()),
                      pr.products.end());
  }
  std::vector<std::vector<int>> active_by_day(cfg.n_days + 1);
  for (int d = 1; d <= cfg.n_days; ++d) {
    for (int k = 0; k < n_promos; ++k) {
      if (promos[k].active_on(d)) active_by_day[d].push_back(k);
    }
  }

  // Per-user home assignments.
  std::vector<int> home_store(cfg.n_users), home_loc(cfg.n_users),
      home_chat(cfg.n_users);
  for (int u = 0; u < cfg.n_users; ++u) {
    home_store[u] = static_cast<int>(setup.index(n_stores));
    home_loc[u] = static_cast<int>(setup.index(n_locations));
    home_chat[u] = static_cast<int>(setup.index(n_chats));
  }
  auto stim_of_store = [&](const std::string& store) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : store) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return "stim" + std::to_string(h % n_stims);
  };

  // Fraud membership allocation.
  std::vector<int> order(cfg.n_users);
  for (int u = 0; u < cfg.n_users; ++u) order[u] = u;
  group_rng.shuffle(order);
  std::vector<int> group_sizes(n_groups);
  std::size_t total_members = 0;
  for (int g = 0; g < n_groups; ++g) {
    group_sizes[g] = static_cast<int>(
        group_rng.uniform_int(cfg.group_size_min, cfg.group_size_max));
    total_members += group_sizes[g];
  }
  if (total_members > static_cast<std::size_t>(cfg.n_users)) {
    throw std::invalid_argument("infeasible config: groups exceed user budget");
  }

  auto user_id = [&](int u) { return pad_id("u", u, id_width); };
  auto product_id = [&](int p) { return pad_id("p", p, prod_width); };

  GroundTruthGroups truth;
  std::vector<char> is_fraud(cfg.n_users, 0);
  {
    std::size_t cursor = 0;
    for (int g = 0; g < n_groups; ++g) {
      PlantedGroup pg;
      pg.group_id = "g" + std::to_string(g);
      if (g < cfg.n_stocking_groups) {
        pg.type = GroupType::kStocking;
      } else if (g < cfg.n_stocking_groups + cfg.n_cashback_groups) {
        pg.type = GroupType::kCashback;
      } else {
        pg.type = GroupType::kMixed;
      }
      std::vector<int> member_idx(order.begin() + cursor,
                                  order.begin() + cursor + group_sizes[g]);
      cursor += group_sizes[g];
      std::sort(member_idx.begin(), member_idx.end());
      for (int u : member_idx) {
        pg.members.push_back(user_id(u));
        is_fraud[u] = 1;
      }
      pg.retail_store = "gs" + std::to_string(g);
      if (pg.type != GroupType::kStocking) pg.header_user = pg.members.front();
      truth.groups.push_back(std::move(pg));
    }
  }

  // Exactly 82% of fraud users also behave as ordinary customers.
  std::vector<char> has_background(cfg.n_users, 0);
  {
    std::vector<int> fraud_idx;
    for (int u = 0; u < cfg.n_users; ++u) {
      if (is_fraud[u]) fraud_idx.push_back(u);
    }
    label_rng.shuffle(fraud_idx);
    const auto n_bg = static_cast<std::size_t>(
        std::llround(0.82 * static_cast<double>(fraud_idx.size())));
    for (std::size_t i = 0; i < n_bg; ++i) has_background[fraud_idx[i]] = 1;
  }

  std::vector<Transaction> txns;
  txns.reserve(static_cast<std::size_t>(cfg.n_users * cfg.n_days *
                                        cfg.normal_txn_rate * 1.2) +
               1024);

  auto emit_normal_txn = [&](int u, int day, bool allow_promo) {
    Transaction t;
    t.user_id = user_id(u);
    t.day = day;
    int prod;
    int promo_idx = -1;
    if (allow_promo && !active_by_day[day].empty() && traffic.chance(0.35)) {
      promo_idx = active_by_day[day][traffic.index(active_by_day[day].size())];
      const auto& pp = promos[promo_idx].products;
      prod = pp[traffic.index(pp.size())];
    } else {
      prod = static_cast<int>(traffic.index(cfg.n_products));
    }
    t.product_id = product_id(prod);
    t.quantity = traffic.uniform_int(1, 3);
    t.price = price[prod];
    const double revenue = t.price * static_cast<double>(t.quantity);
    if (promo_idx >= 0) {
      t.set_relation(Relation::kPromotion, promos[promo_idx].id);
      t.gross_margin = round_cents(-revenue * traffic.uniform(0.05, 0.30));
    } else {
      t.gross_margin = round_cents(revenue * traffic.uniform(0.05, 0.15));
    }
    const int store = traffic.chance(0.85)
                          ? home_store[u]
                          : static_cast<int>(traffic.index(n_stores));
    const std::string store_id = pad_id("s", store, 3);
    t.set_relation(Relation::kRetailStore, store_id);
    const int loc = traffic.chance(0.9) ? home_loc[u]
                                        : static_cast<int>(traffic.index(n_locations));
    t.set_relation(Relation::kOrderLocation, pad_id("geo", loc, 3));
    if (traffic.chance(0.15)) {
      t.set_relation(Relation::kShareLink,
                     pad_id("lnk", static_cast<int>(traffic.index(n_links)), 3));
    }
    if (traffic.chance(0.3)) {
      t.set_relation(Relation::kDelivery,
                     pad_id("drv", static_cast<int>(traffic.index(n_drivers)), 3));
    }
    if (traffic.chance(0.1)) {
      t.set_relation(Relation::kGroupId, pad_id("chat", home_chat[u], 3));
    }
    if (traffic.chance(0.25)) {
      t.set_relation(Relation::kCoupon,
                     "cpn" + std::to_string(traffic.index(n_coupons)));
    }
    if (traffic.chance(0.2)) {
      t.set_relation(Relation::kStimulation, stim_of_store(store_id));
    }
    txns.push_back(std::move(t));
  };

  // Background traffic: pure normals always, fraud users only when selected;
  // selected fraud users are guaranteed at least one legitimate transaction.
  for (int u = 0; u < cfg.n_users; ++u) {
    if (is_fraud[u] && !has_background[u]) continue;
    std::size_t before = txns.size();
    for (int d = 1; d <= cfg.n_days; ++d) {
      const int count = traffic.poisson(cfg.normal_txn_rate);
      for (int c = 0; c < count; ++c) emit_normal_txn(u, d, true);
    }
    if (is_fraud[u] && txns.size() == before) {
      emit_normal_txn(u, static_cast<int>(traffic.uniform_int(1, cfg.n_days)),
                      false);
    }
  }

  // Planted activity happens in the most recent 7 days so a trailing
  // detection window always sees it.
  const int window_start = std::max(1, cfg.n_days - 6);
  const std::array<Relation, 3> third_choices = {
      Relation::kShareLink, Relation::kOrderLocation, Relation::kGroupId};

  std::vector<int> stocking_candidates;
  for (int k = 0; k < n_promos; ++k) {
    if (promos[k].cashback) continue;
    int overlap = 0;
    for (int d = window_start; d <= cfg.n_days; ++d) {
      if (promos[k].active_on(d)) ++overlap;
    }
    if (overlap >= 3) stocking_candidates.push_back(k);
  }
  std::vector<int> cashback_promos;
  for (int k = 0; k < n_promos; ++k) {
    if (promos[k].cashback) cashback_promos.push_back(k);
  }

  int stocking_counter = 0;
  auto emit_stocking = [&](const PlantedGroup& pg, int g) {
    if (stocking_candidates.empty()) {
      throw std::invalid_argument(
          "infeasible config: no promotion overlaps the detection window");
    }
    const int gi = stocking_counter++;
    const Promo& promo =
        promos[stocking_candidates[gi % stocking_candidates.size()]];
    std::vector<int> burst_days;
    for (int d = window_start; d <= cfg.n_days && burst_days.size() < 3; ++d) {
      if (promo.active_on(d)) burst_days.push_back(d);
    }
    std::vector<int> bundle(promo.products.begin(),
                            promo.products.begin() +
                                std::min<std::size_t>(2, promo.products.size()));
    const Relation third = third_choices[gi % third_choices.size()];
    const std::string third_value = [&] {
      switch (third) {
        case Relation::kShareLink: return "glink" + std::to_string(g);
        case Relation::kOrderLocation: return "ggeo" + std::to_string(g);
        default: return "gchat" + std::to_string(g);
      }
    }();
    const std::string stim = stim_of_store(pg.retail_store);
    for (const auto& member : pg.members) {
      for (int d : burst_days) {
        for (int prod : bundle) {
          Transaction t;
          t.user_id = member;
          t.day = d;
          t.product_id = product_id(prod);
          t.quantity = group_rng.uniform_int(6, 12);
          t.price = price[prod];
          t.gross_margin = round_cents(-t.price * t.quantity *
                                       group_rng.uniform(0.05, 0.30));
          t.set_relation(Relation::kRetailStore, pg.retail_store);
          t.set_relation(Relation::kPromotion, promo.id);
          t.set_relation(third, third_value);
          if (third != Relation::kOrderLocation) {
            t.set_relation(Relation::kOrderLocation,
                           pad_id("geo", static_cast<int>(group_rng.index(n_locations)), 3));
          }
          if (group_rng.chance(0.25)) {
            t.set_relation(Relation::kCoupon,
                           "cpn" + std::to_string(group_rng.index(n_coupons)));
          }
          if (group_rng.chance(0.2)) t.set_relation(Relation::kStimulation, stim);
          txns.push_back(std::move(t));
        }
      }
    }
  };

  auto emit_cashback = [&](const PlantedGroup& pg, int g) {
    if (cashback_promos.empty()) {
      throw std::invalid_argument("infeasible config: no cashback promotions");
    }
    const Promo& promo = promos[cashback_promos[g % cashback_promos.size()]];
    const int span = std::min(8, cfg.n_days);
    const int first_day = cfg.n_days - span + 1;
    std::vector<int> goods(promo.products.begin(),
                           promo.products.begin() +
                               std::min<std::size_t>(4, promo.products.size()));
    const std::string stim = stim_of_store(pg.retail_store);
    for (const auto& member : pg.members) {
      for (int d = first_day; d <= cfg.n_days; ++d) {
        const int orders = 1 + (group_rng.chance(0.4) ? 1 : 0);
        for (int o = 0; o < orders; ++o) {
          Transaction t;
          t.user_id = member;
          t.day = d;
          const int prod = goods[group_rng.index(goods.size())];
          t.product_id = product_id(prod);
          t.quantity = 1;
          t.price = price[prod];
          t.gross_margin =
              round_cents(-t.price * group_rng.uniform(0.05, 0.25));
          t.set_relation(Relation::kRetailStore, pg.retail_store);
          t.set_relation(Relation::kPromotion, promo.id);
          t.set_relation(Relation::kStimulation, stim);
          if (group_rng.chance(0.5)) {
            t.set_relation(Relation::kCoupon,
                           "cpn" + std::to_string(group_rng.index(n_coupons)));
          }
          txns.push_back(std::move(t));
        }
      }
    }
  };

  for (int g = 0; g < n_groups; ++g) {
    const PlantedGroup& pg = truth.groups[g];
    switch (pg.type) {
      case GroupType::kStocking:
        emit_stocking(pg, g);
        break;
      case GroupType::kCashback:
        emit_cashback(pg, g);
        break;
      case GroupType::kMixed:
        emit_stocking(pg, g);
        emit_cashback(pg, g);
        break;
    }
  }

  // Chronological log with sequential ids.
  std::stable_sort(txns.begin(), txns.end(),
                   [](const Transaction& a, const Transaction& b) {
                     return a.day < b.day;
                   });
  const int txn_width = static_cast<int>(std::to_string(txns.size()).size());
  for (std::size_t i = 0; i < txns.size(); ++i) {
    txns[i].txn_id = pad_id("t", static_cast<int>(i + 1), txn_width);
  }

  LabelSet labels;
  for (int u = 0; u < cfg.n_users; ++u) {
    if (is_fraud[u]) labels.set(user_id(u), LabelSet::kFraud);
  }
  {
    std::vector<int> pure;
    for (int u = 0; u < cfg.n_users; ++u) {
      if (!is_fraud[u]) pure.push_back(u);
    }
    label_rng.shuffle(pure);
    const auto n_normal_labels = static_cast<std::size_t>(
        std::llround(0.07 * static_cast<double>(pure.size())));
    for (std::size_t i = 0; i < n_normal_labels && i < pure.size(); ++i) {
      labels.set(user_id(pure[i]), LabelSet::kNormal);
    }
  }

  SynthOutput out;
  out.txns = std::move(txns);
  out.labels = std::move(labels);
  out.truth = std::move(truth);
  out.schedule = std::move(schedule);
  return out;
}

inline constexpr std::string_view kGroupsHeader = "group_id,user_id,type,is_header";
inline constexpr std::string_view kScheduleHeader = "promotion_id,cashback_amount";

inline void write_groups(const std::string& path, const GroundTruthGroups& truth) {
  std::string out(kGroupsHeader);
  out.push_back('\n');
  for (const auto& g : truth.groups) {
    for (const auto& m : g.members) {
      out += g.group_id;
      out.push_back(',');
      out += m;
      out.push_back(',');
      out += group_type_name(g.type);
      out.push_back(',');
      out += (m == g.header_user) ? "1" : "0";
      out.push_back('\n');
    }
  }
  write_text_file(path, out);
}

inline GroundTruthGroups load_groups(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kGroupsHeader) {
    throw std::runtime_error("groups header mismatch in " + path);
  }
  GroundTruthGroups truth;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 4) throw std::runtime_error("bad groups row in " + path);
    auto it = index.find(cols[0]);
    if (it == index.end()) {
      PlantedGroup g;
      g.group_id = cols[0];
      if (cols[2] == "stocking") {
        g.type = GroupType::kStocking;
      } else if (cols[2] == "cashback") {
        g.type = GroupType::kCashback;
      } else if (cols[2] == "mixed") {
        g.type = GroupType::kMixed;
      } else {
        throw std::runtime_error("unknown group type in " + path);
      }
      index[cols[0]] = truth.groups.size();
      truth.groups.push_back(std::move(g));
      it = index.find(cols[0]);
    }
    PlantedGroup& g = truth.groups[it->second];
    g.members.push_back(cols[1]);
    if (cols[3] == "1") g.header_user = cols[1];
  }
  for (auto& g : truth.groups) std::sort(g.members.begin(), g.members.end());
  return truth;
}

inline void write_schedule(const std::string& path, const CashbackSchedule& s) {
  std::string out(kScheduleHeader);
  out.push_back('\n');
  for (const auto& [promo, amount] : s) {
    out += promo;
    out.push_back(',');
    out += format_double(amount);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

inline CashbackSchedule load_schedule(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kScheduleHeader) {
    throw std::runtime_error("schedule header mismatch in " + path);
  }
  CashbackSchedule s;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    const auto v = cols.size() == 2 ? parse_double(cols[1]) : std::nullopt;
    if (!v) throw std::runtime_error("bad schedule row in " + path);
    s[cols[0]] = *v;
  }
  return s;
}

}  // namespace promofraud
