#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "promofraud/csv.hpp"
#include "promofraud/graph.hpp"
#include "promofraud/rng.hpp"
#include "promofraud/tensor.hpp"

namespace promofraud {

// The 8 learned relation vectors, in RelationKind order; the only TransR
// output consumed downstream.
struct RelationEmbeddings {
  int dim = 8;
  std::array<Vec, kRelationCount> e;
};

struct Triple {
  std::uint32_t head = 0;
  std::uint8_t rel = 0;
  std::uint32_t tail = 0;
};

struct TransRConfig {
  int entity_dim = 8;    // d
  int relation_dim = 8;  // k
  double margin = 1.0;   // gamma
  double lr = 0.01;
  int epochs = 200;
  int batch_size = 1024;
  std::uint64_t seed = 7;
};

// TransR parameters: entity vectors (d), one relation vector (k) and one
// d x k projection per relation.
struct TransRModel {
  int entity_dim = 8;
  int relation_dim = 8;
  std::vector<std::string> entities;  // sorted user ids
  std::unordered_map<std::string, std::uint32_t> entity_index;
  Mat entity;                                     // n x d
  std::array<Vec, kRelationCount> relation;       // k each
  std::array<Mat, kRelationCount> projection;     // d x k each

  std::uint32_t index_of(const std::string& user) const {
    const auto it = entity_index.find(user);
    if (it == entity_index.end()) {
      throw std::invalid_argument("unknown entity: " + user);
    }
    return it->second;
  }

  // e_u projected into relation space: e_u * W_r
  void project(std::uint32_t u, int r, double* out) const {
    vec_mat(entity.row(static_cast<int>(u)), projection[r], out);
  }

  RelationEmbeddings relation_embeddings() const {
    RelationEmbeddings out;
    out.dim = relation_dim;
    out.e = relation;
    return out;
  }
};

// f_r(i, j) = || e_i W_r + e_r - e_j W_r ||_1
inline double transr_score(const TransRModel& m, std::uint32_t head, int rel,
                           std::uint32_t tail) {
  if (rel < 0 || rel >= kRelationCount) throw std::invalid_argument("bad relation");
  const int k = m.relation_dim;
  std::vector<double> ph(k), pt(k);
  m.project(head, rel, ph.data());
  m.project(tail, rel, pt.data());
  double s = 0.0;
  for (int c = 0; c < k; ++c) {
    s += std::abs(ph[c] + m.relation[rel][c] - pt[c]);
  }
  return s;
}

inline double transr_score(const TransRModel& m, const std::string& head, Relation r,
                           const std::string& tail) {
  return transr_score(m, m.index_of(head), relation_index(r), m.index_of(tail));
}

// Margin loss over pairwise-matched positive/negative batches:
// sum max(0, f(pos) + gamma - f(neg)).
inline double margin_loss(const TransRModel& m, std::span<const Triple> positives,
                          std::span<const Triple> negatives, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("negative margin");
  if (positives.size() != negatives.size()) {
    throw std::invalid_argument("positive/negative batches must be matched");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const Triple& p = positives[i];
    const Triple& n = negatives[i];
    const double arg = transr_score(m, p.head, p.rel, p.tail) + gamma -
                       transr_score(m, n.head, n.rel, n.tail);
    if (arg > 0.0) loss += arg;
  }
  return loss;
}

struct TransRGradients {
  Mat entity;                                  // n x d
  std::array<Vec, kRelationCount> relation;    // k
  std::array<Mat, kRelationCount> projection;  // d x k

  static TransRGradients zeros_like(const TransRModel& m) {
    TransRGradients g;
    g.entity = Mat(m.entity.rows, m.entity.cols);
    for (int r = 0; r < kRelationCount; ++r) {
      g.relation[r].assign(m.relation_dim, 0.0);
      g.projection[r] = Mat(m.entity_dim, m.relation_dim);
    }
    return g;
  }
};

namespace transr_detail {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Adds d f_r(h, t) / d theta, scaled by `scale`, into `g`.
inline void accumulate_score_grad(const TransRModel& m, const Triple& t,
                                  double scale, TransRGradients& g) {
  const int d = m.entity_dim;
  const int k = m.relation_dim;
  const int r = t.rel;
  std::vector<double> ph(k), pt(k), s(k);
  m.project(t.head, r, ph.data());
  m.project(t.tail, r, pt.data());
  for (int c = 0; c < k; ++c) s[c] = sign0(ph[c] + m.relation[r][c] - pt[c]);

  for (int c = 0; c < k; ++c) g.relation[r][c] += scale * s[c];
  const Mat& w = m.projection[r];
  const double* eh = m.entity.row(static_cast<int>(t.head));
  const double* et = m.entity.row(static_cast<int>(t.tail));
  double* gh = g.entity.row(static_cast<int>(t.head));
  double* gt = g.entity.row(static_cast<int>(t.tail));
  Mat& gw = g.projection[r];
  for (int u = 0; u < d; ++u) {
    const double* wrow = w.row(u);
    double acc = 0.0;
    for (int c = 0; c < k; ++c) acc += s[c] * wrow[c];
    gh[u] += scale * acc;
    gt[u] -= scale * acc;
    double* gwrow = gw.row(u);
    const double diff = eh[u] - et[u];
    for (int c = 0; c < k; ++c) gwrow[c] += scale * diff * s[c];
  }
}

}  // namespace transr_detail

// Loss plus gradients for a matched batch; the L1 subgradient at zero is 0.
inline double margin_loss_and_grad(const TransRModel& m,
                                   std::span<const Triple> positives,
                                   std::span<const Triple> negatives, double gamma,
                                   TransRGradients& g) {
  double loss = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const Triple& p = positives[i];
    const Triple& n = negatives[i];
    const double arg = transr_score(m, p.head, p.rel, p.tail) + gamma -
                       transr_score(m, n.head, n.rel, n.tail);
    if (arg > 0.0) {
      loss += arg;
      transr_detail::accumulate_score_grad(m, p, 1.0, g);
      transr_detail::accumulate_score_grad(m, n, -1.0, g);
    }
  }
  return loss;
}

// Canonical positive triples (both orientations of every relation event) with
// membership lookup for negative-sample rejection.
struct TripleSet {
  std::vector<Triple> positives;
  std::unordered_set<std::uint64_t> keys;

  static std::uint64_t key(std::uint32_t h, int r, std::uint32_t t) {
    return (static_cast<std::uint64_t>(h) << 36) |
           (static_cast<std::uint64_t>(r) << 32) | t;
  }

  bool contains(std::uint32_t h, int r, std::uint32_t t) const {
    return keys.count(key(h, r, t)) > 0;
  }

  static TripleSet from_events(const std::vector<RelationEvent>& events,
                               const TransRModel& model) {
    TripleSet ts;
    for (const RelationEvent& e : events) {
      const std::uint32_t i = model.index_of(e.user_i);
      const std::uint32_t j = model.index_of(e.user_j);
      const int r = relation_index(e.r);
      // The relation between users is symmetric: keep both orientations.
      if (ts.keys.insert(key(i, r, j)).second) {
        ts.positives.push_back({i, static_cast<std::uint8_t>(r), j});
      }
      if (ts.keys.insert(key(j, r, i)).second) {
        ts.positives.push_back({j, static_cast<std::uint8_t>(r), i});
      }
    }
    return ts;
  }
};

inline Triple corrupt_tail(const TripleSet& ts, const Triple& pos,
                           std::uint32_t n_entities, Rng& rng) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    const auto t = static_cast<std::uint32_t>(rng.index(n_entities));
    if (t != pos.head && !ts.contains(pos.head, pos.rel, t)) {
      return {pos.head, pos.rel, t};
    }
  }
  return {pos.head, pos.rel,
          static_cast<std::uint32_t>(rng.index(n_entities))};
}

// Model with entities drawn from the events and deterministic random init;
// projections start at (rectangular) identity.
inline TransRModel init_transr_model(const std::vector<RelationEvent>& events,
                                     const TransRConfig& cfg, Rng& rng) {
  TransRModel m;
  m.entity_dim = cfg.entity_dim;
  m.relation_dim = cfg.relation_dim;
  std::set<std::string> names;
  for (const auto& e : events) {
    names.insert(e.user_i);
    names.insert(e.user_j);
  }
  m.entities.assign(names.begin(), names.end());
  for (std::uint32_t i = 0; i < m.entities.size(); ++i) {
    m.entity_index[m.entities[i]] = i;
  }
  m.entity = Mat(static_cast<int>(m.entities.size()), cfg.entity_dim);
  const double scale = 0.5 / std::sqrt(static_cast<double>(cfg.entity_dim));
  for (double& x : m.entity.v) x = rng.uniform(-scale, scale);
  for (int r = 0; r < kRelationCount; ++r) {
    m.relation[r].resize(cfg.relation_dim);
    for (double& x : m.relation[r]) x = rng.uniform(-scale, scale);
    m.projection[r] = Mat(cfg.entity_dim, cfg.relation_dim);
    for (int u = 0; u < std::min(cfg.entity_dim, cfg.relation_dim); ++u) {
      m.projection[r](u, u) = 1.0;
    }
  }
  return m;
}

struct TransRResult {
  TransRModel model;
  TripleSet triples;
  std::vector<double> epoch_loss;  // mean hinge loss per positive
};

// Minibatch SGD on the margin objective. Deterministic given the seed; both
// orientations of every event are positives; negatives corrupt the tail.
inline TransRResult train_transr(const std::vector<RelationEvent>& events,
                                 const TransRConfig& cfg) {
  if (events.empty()) throw std::invalid_argument("no relation events");
  Rng rng(cfg.seed);
  TransRResult res;
  res.model = init_transr_model(events, cfg, rng);
  res.triples = TripleSet::from_events(events, res.model);
  TransRModel& m = res.model;
  const auto n_entities = static_cast<std::uint32_t>(m.entities.size());

  std::vector<std::size_t> order(res.triples.positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Triple> pos_batch, neg_batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      pos_batch.clear();
      neg_batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const Triple& p = res.triples.positives[order[i]];
        pos_batch.push_back(p);
        neg_batch.push_back(corrupt_tail(res.triples, p, n_entities, rng));
      }
      TransRGradients g = TransRGradients::zeros_like(m);
      epoch_loss += margin_loss_and_grad(m, pos_batch, neg_batch, cfg.margin, g);
      const double step = cfg.lr / static_cast<double>(pos_batch.size());
      for (std::size_t i = 0; i < m.entity.v.size(); ++i) {
        m.entity.v[i] -= step * g.entity.v[i];
      }
      for (int r = 0; r < kRelationCount; ++r) {
        for (int c = 0; c < m.relation_dim; ++c) {
          m.relation[r][c] -= step * g.relation[r][c];
        }
        for (std::size_t i = 0; i < m.projection[r].v.size(); ++i) {
          m.projection[r].v[i] -= step * g.projection[r].v[i];
        }
      }
    }
    res.epoch_loss.push_back(epoch_loss /
                             static_cast<double>(res.triples.positives.size()));
  }
  return res;
}

inline std::string kRelationEmbeddingHeaderFor(int dim) {
  std::string h = "relation_index";
  for (int c = 0; c < dim; ++c) h += ",e" + std::to_string(c);
  return h;
}

inline void save_relation_embeddings(const std::string& path,
                                     const RelationEmbeddings& emb,
                                     const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += kRelationEmbeddingHeaderFor(emb.dim) + "\n";
  for (int r = 0; r < kRelationCount; ++r) {
    out += std::to_string(r);
    for (int c = 0; c < emb.dim; ++c) {
      out.push_back(',');
      out += format_double(emb.e[r][c]);
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

inline std::pair<RelationEmbeddings, std::string> load_relation_embeddings(
    const std::string& path) {
  const auto lines = read_lines(path);
  std::string hash;
  std::size_t i = 0;
  if (i < lines.size() && lines[i].rfind("# config_hash=", 0) == 0) {
    hash = lines[i].substr(14);
    ++i;
  }
  if (i >= lines.size()) throw std::runtime_error("empty embedding file: " + path);
  const auto header_cols = split_csv(lines[i]);
  const int dim = static_cast<int>(header_cols.size()) - 1;
  if (dim < 1 || lines[i] != kRelationEmbeddingHeaderFor(dim)) {
    throw std::runtime_error("embedding header mismatch in " + path);
  }
  ++i;
  RelationEmbeddings emb;
  emb.dim = dim;
  int seen = 0;
  for (; i < lines.size(); ++i) {
    const auto cols = split_csv(lines[i]);
    if (cols.size() != static_cast<std::size_t>(dim) + 1) {
      throw std::runtime_error("bad embedding row in " + path);
    }
    const auto idx = parse_int(cols[0]);
    if (!idx || *idx < 0 || *idx >= kRelationCount) {
      throw std::runtime_error("bad relation index in " + path);
    }
    emb.e[*idx].resize(dim);
    for (int c = 0; c < dim; ++c) {
      const auto v = parse_double(cols[1 + c]);
      if (!v) throw std::runtime_error("bad embedding value in " + path);
      emb.e[*idx][c] = *v;
    }
    ++seen;
  }
  if (seen != kRelationCount) {
    throw std::runtime_error("expected 8 relation rows in " + path);
  }
  return {emb, hash};
}

}  // namespace promofraud
