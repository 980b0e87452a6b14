#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "promofraud/csv.hpp"
#include "promofraud/relations.hpp"
#include "promofraud/txn.hpp"

namespace promofraud {

// A relation event: users i and j purchased the same product on `day` and
// their transactions share the same value in relation `r`. Canonical form
// has user_i < user_j; each (i, r, j, day) appears once.
struct RelationEvent {
  std::string user_i;
  std::string user_j;
  Relation r = Relation::kOrderLocation;
  std::int64_t day = 0;

  friend bool operator==(const RelationEvent&, const RelationEvent&) = default;
};

inline std::vector<RelationEvent> relate(const std::vector<Transaction>& txns) {
  // Bucket transactions by (relation, day, value, product); users inside a
  // bucket are pairwise related. Pairs are deduplicated per (r, day) so that
  // multiple witnessing products yield one event.
  struct Row {
    int r;
    std::int64_t day;
    std::string value;
    std::string product;
    std::string user;
  };
  std::vector<Row> rows;
  rows.reserve(txns.size() * 2);
  for (const Transaction& t : txns) {
    for (int r = 0; r < kRelationCount; ++r) {
      if (t.relation_values[r]) {
        rows.push_back({r, t.day, *t.relation_values[r], t.product_id, t.user_id});
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.r, a.day, a.value, a.product, a.user) <
           std::tie(b.r, b.day, b.value, b.product, b.user);
  });

  std::vector<RelationEvent> events;
  std::vector<std::string> bucket_users;
  std::size_t i = 0;
  std::vector<std::tuple<int, std::int64_t, std::string, std::string>> pair_keys;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].r == rows[i].r && rows[j].day == rows[i].day &&
           rows[j].value == rows[i].value && rows[j].product == rows[i].product) {
      ++j;
    }
    bucket_users.clear();
    for (std::size_t k = i; k < j; ++k) {
      if (bucket_users.empty() || bucket_users.back() != rows[k].user) {
        bucket_users.push_back(rows[k].user);
      }
    }
    for (std::size_t a = 0; a + 1 < bucket_users.size(); ++a) {
      for (std::size_t b = a + 1; b < bucket_users.size(); ++b) {
        pair_keys.emplace_back(rows[i].r, rows[i].day, bucket_users[a],
                               bucket_users[b]);
      }
    }
    i = j;
  }
  std::sort(pair_keys.begin(), pair_keys.end());
  pair_keys.erase(std::unique(pair_keys.begin(), pair_keys.end()), pair_keys.end());
  events.reserve(pair_keys.size());
  for (auto& [r, day, a, b] : pair_keys) {
    events.push_back({std::move(a), std::move(b), static_cast<Relation>(r), day});
  }
  return events;
}

// Day-level frequency tables per relation. pair_freq counts distinct days on
// which two users co-occur in a relation; solo_freq counts distinct days on
// which a user has a transaction carrying a value for that relation.
class FreqTables {
 public:
  int pair_freq(Relation r, const std::string& i, const std::string& j) const {
    const auto& m = pair_[relation_index(r)];
    const auto it = m.find(i < j ? std::make_pair(i, j) : std::make_pair(j, i));
    return it == m.end() ? 0 : it->second;
  }

  int solo_freq(Relation r, const std::string& user) const {
    const auto& m = solo_[relation_index(r)];
    const auto it = m.find(user);
    return it == m.end() ? 0 : it->second;
  }

  const std::map<std::pair<std::string, std::string>, int>& pairs(Relation r) const {
    return pair_[relation_index(r)];
  }

  static FreqTables build(const std::vector<Transaction>& txns,
                          const std::vector<RelationEvent>& events) {
    FreqTables ft;
    for (const RelationEvent& e : events) {
      ft.pair_[relation_index(e.r)][{e.user_i, e.user_j}] += 1;
    }
    std::array<std::set<std::pair<std::string, std::int64_t>>, kRelationCount> seen;
    for (const Transaction& t : txns) {
      for (int r = 0; r < kRelationCount; ++r) {
        if (t.relation_values[r] && seen[r].insert({t.user_id, t.day}).second) {
          ft.solo_[r][t.user_id] += 1;
        }
      }
    }
    return ft;
  }

 private:
  std::array<std::map<std::pair<std::string, std::string>, int>, kRelationCount> pair_;
  std::array<std::unordered_map<std::string, int>, kRelationCount> solo_;
};

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Temporal co-occurrence weight: (pair / max(solo_i, solo_j)) scaled by a
// sigmoid of the larger solo frequency, so identical ratios with larger
// absolute frequencies score higher.
inline double cooccurrence_weight(int pair_freq, int solo_i, int solo_j,
                                  double lambda) {
  if (pair_freq < 0) throw std::invalid_argument("negative pair frequency");
  const int max_solo = std::max(solo_i, solo_j);
  if (pair_freq > max_solo) {
    throw std::invalid_argument("pair frequency exceeds solo frequency");
  }
  if (pair_freq == 0) return 0.0;
  return (static_cast<double>(pair_freq) / max_solo) *
         stable_sigmoid(lambda * max_solo);
}

// Multi-relation fused homogeneous user graph. Nodes are users with at least
// one edge; an edge carries an 8-bit relation map and 8 per-relation weights.
class FusedGraph {
 public:
  struct Edge {
    std::uint32_t a = 0;  // node indices, a < b
    std::uint32_t b = 0;
    std::uint8_t bits = 0;
    std::array<double, kRelationCount> w{};

    bool has(Relation r) const { return (bits >> relation_index(r)) & 1u; }
    double weight(Relation r) const { return w[relation_index(r)]; }
    double weight_sum() const {
      double s = 0.0;
      for (double x : w) s += x;
      return s;
    }
  };

  const std::vector<std::string>& users() const { return users_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t node_count() const { return users_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::string& user(std::uint32_t node) const { return users_[node]; }

  std::optional<std::uint32_t> index_of(const std::string& user) const {
    const auto it = index_.find(user);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // (neighbor node, edge index) pairs, sorted by neighbor.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& neighbors(
      std::uint32_t node) const {
    return adj_[node];
  }

  const Edge* find_edge(std::uint32_t a, std::uint32_t b) const {
    for (const auto& [nbr, ei] : adj_[a]) {
      if (nbr == b) return &edges_[ei];
    }
    return nullptr;
  }

  // `edge_users` must use canonical (user_i < user_j) pairs, unique.
  static FusedGraph from_edges(
      std::vector<std::tuple<std::string, std::string, std::uint8_t,
                             std::array<double, kRelationCount>>>
          edge_rows) {
    FusedGraph g;
    std::set<std::string> node_set;
    for (const auto& [a, b, bits, w] : edge_rows) {
      node_set.insert(a);
      node_set.insert(b);
    }
    g.users_.assign(node_set.begin(), node_set.end());
    for (std::uint32_t i = 0; i < g.users_.size(); ++i) g.index_[g.users_[i]] = i;
    std::sort(edge_rows.begin(), edge_rows.end(),
              [](const auto& x, const auto& y) {
                return std::tie(std::get<0>(x), std::get<1>(x)) <
                       std::tie(std::get<0>(y), std::get<1>(y));
              });
    g.edges_.reserve(edge_rows.size());
    for (const auto& [a, b, bits, w] : edge_rows) {
      Edge e;
      std::uint32_t ia = g.index_[a];
      std::uint32_t ib = g.index_[b];
      if (ia > ib) std::swap(ia, ib);
      e.a = ia;
      e.b = ib;
      e.bits = bits;
      e.w = w;
      g.edges_.push_back(e);
    }
    g.adj_.assign(g.users_.size(), {});
    for (std::uint32_t ei = 0; ei < g.edges_.size(); ++ei) {
      g.adj_[g.edges_[ei].a].emplace_back(g.edges_[ei].b, ei);
      g.adj_[g.edges_[ei].b].emplace_back(g.edges_[ei].a, ei);
    }
    for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
    return g;
  }

 private:
  std::vector<std::string> users_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj_;
};

inline FusedGraph build_fused_graph(const std::vector<Transaction>& txns,
                                    double lambda) {
  const std::vector<RelationEvent> events = relate(txns);
  const FreqTables freq = FreqTables::build(txns, events);

  std::map<std::pair<std::string, std::string>, std::uint8_t> bits;
  for (const RelationEvent& e : events) {
    bits[{e.user_i, e.user_j}] |= static_cast<std::uint8_t>(1u << relation_index(e.r));
  }
  std::vector<std::tuple<std::string, std::string, std::uint8_t,
                         std::array<double, kRelationCount>>>
      rows;
  rows.reserve(bits.size());
  for (const auto& [pair, b] : bits) {
    std::array<double, kRelationCount> w{};
    for (int r = 0; r < kRelationCount; ++r) {
      if ((b >> r) & 1u) {
        const Relation rel = static_cast<Relation>(r);
        w[r] = cooccurrence_weight(freq.pair_freq(rel, pair.first, pair.second),
                                   freq.solo_freq(rel, pair.first),
                                   freq.solo_freq(rel, pair.second), lambda);
      }
    }
    rows.emplace_back(pair.first, pair.second, b, w);
  }
  return FusedGraph::from_edges(std::move(rows));
}

// Temporal Cohesion Score of a group in relation r: intra-group weight mass
// over the group's total weight mass, both summed over ordered pairs.
// Returns nullopt when the denominator is zero (undefined).
template <typename StringSet>
inline std::optional<double> tcs(const FusedGraph& graph, const StringSet& group,
                                 Relation r) {
  std::vector<char> in_group(graph.node_count(), 0);
  std::vector<std::uint32_t> members;
  for (const auto& user : group) {
    const auto idx = graph.index_of(user);
    if (!idx) throw std::invalid_argument("group member not in graph: " + user);
    in_group[*idx] = 1;
    members.push_back(*idx);
  }
  double intra = 0.0;
  double total = 0.0;
  for (const std::uint32_t m : members) {
    for (const auto& [nbr, ei] : graph.neighbors(m)) {
      const double w = graph.edges()[ei].weight(r);
      total += w;
      if (in_group[nbr]) intra += w;
    }
  }
  if (total <= 0.0) return std::nullopt;
  return intra / total;
}

inline constexpr std::string_view kGraphHeader =
    "user_i,user_j,m_bitmap_hex,w1,w2,w3,w4,w5,w6,w7,w8";

inline std::string serialize_graph(const FusedGraph& graph,
                                   const std::string& config_hash) {
  std::string out;
  out += "# config_hash=" + config_hash + "\n";
  out += std::string(kGraphHeader) + "\n";
  char hexbuf[3];
  for (const auto& e : graph.edges()) {
    out += graph.user(e.a);
    out.push_back(',');
    out += graph.user(e.b);
    out.push_back(',');
    std::snprintf(hexbuf, sizeof(hexbuf), "%02x", e.bits);
    out += hexbuf;
    for (int r = 0; r < kRelationCount; ++r) {
      out.push_back(',');
      out += format_double(e.w[r]);
    }
    out.push_back('\n');
  }
  return out;
}

inline void save_graph(const std::string& path, const FusedGraph& graph,
                       const std::string& config_hash) {
  write_text_file(path, serialize_graph(graph, config_hash));
}

// Returns the graph plus the embedded config hash.
inline std::pair<FusedGraph, std::string> load_graph(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::string hash;
  std::size_t i = 0;
  if (i < lines.size() && lines[i].rfind("# config_hash=", 0) == 0) {
    hash = lines[i].substr(14);
    ++i;
  }
  if (i >= lines.size() || lines[i] != kGraphHeader) {
    throw std::runtime_error("graph header mismatch in " + path);
  }
  ++i;
  std::vector<std::tuple<std::string, std::string, std::uint8_t,
                         std::array<double, kRelationCount>>>
      rows;
  for (; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 3 + kRelationCount) {
      throw std::runtime_error("bad graph row in " + path);
    }
    const std::uint8_t bits =
        static_cast<std::uint8_t>(std::stoul(cols[2], nullptr, 16));
    std::array<double, kRelationCount> w{};
    for (int r = 0; r < kRelationCount; ++r) {
      const auto v = parse_double(cols[3 + r]);
      if (!v) throw std::runtime_error("bad weight in " + path);
      w[r] = *v;
    }
    rows.emplace_back(cols[0], cols[1], bits, w);
  }
  return {FusedGraph::from_edges(std::move(rows)), hash};
}

}  // namespace promofraud
