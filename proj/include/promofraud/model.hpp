#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "promofraud/csv.hpp"
#include "promofraud/graph.hpp"
#include "promofraud/rng.hpp"
#include "promofraud/tensor.hpp"
#include "promofraud/transr.hpp"

namespace promofraud {

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

// All learnable state of the detection model. The shared node base vector
// realizes the uniform node initialization (a ones vector through a linear
// projection is one learnable vector shared by every node).
struct ModelParams {
  int node_dim = 52;    // D_n
  int attn_dim = 8;     // D_a
  int heads = 3;        // l
  int rel_dim = 8;      // d; edge feature dim D_e = 8 * d
  int enc_hidden = 32;
  int latent_dim = 16;
  double leaky_slope = 0.01;

  Vec node_base;               // D_n
  std::vector<Mat> attn;       // heads matrices, D_n x D_a
  Mat edge_proj;               // D_e x D_a
  Mat enc_w1;                  // D_n x enc_hidden
  Vec enc_b1;                  // enc_hidden
  Mat enc_w2;                  // enc_hidden x latent
  Vec enc_b2;                  // latent
  Mat dec_w1;                  // latent x enc_hidden
  Vec dec_b1;                  // enc_hidden
  Mat dec_w2;                  // enc_hidden x D_n
  Vec dec_b2;                  // D_n
  Mat rel_emb;                 // 8 x rel_dim, fine-tuned relation embeddings

  int edge_dim() const { return kRelationCount * rel_dim; }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("node_base", node_base);
    for (int k = 0; k < heads; ++k) fn("attn" + std::to_string(k), attn[k].v);
    fn("edge_proj", edge_proj.v);
    fn("enc_w1", enc_w1.v);
    fn("enc_b1", enc_b1);
    fn("enc_w2", enc_w2.v);
    fn("enc_b2", enc_b2);
    fn("dec_w1", dec_w1.v);
    fn("dec_b1", dec_b1);
    fn("dec_w2", dec_w2.v);
    fn("dec_b2", dec_b2);
    fn("rel_emb", rel_emb.v);
  }
};

inline ModelParams init_model_params(const RelationEmbeddings& emb, Rng& rng,
                                     int node_dim = 52, int attn_dim = 8,
                                     int heads = 3) {
  ModelParams p;
  p.node_dim = node_dim;
  p.attn_dim = attn_dim;
  p.heads = heads;
  p.rel_dim = emb.dim;

  p.node_base.assign(node_dim, 1.0 / std::sqrt(static_cast<double>(node_dim)));
  auto xavier = [&rng](Mat& m) {
    const double a = std::sqrt(6.0 / (m.rows + m.cols));
    for (double& x : m.v) x = rng.uniform(-a, a);
  };
  p.attn.assign(heads, Mat(node_dim, attn_dim));
  for (auto& w : p.attn) xavier(w);
  p.edge_proj = Mat(p.edge_dim(), attn_dim);
  xavier(p.edge_proj);
  p.enc_w1 = Mat(node_dim, p.enc_hidden);
  xavier(p.enc_w1);
  p.enc_b1.assign(p.enc_hidden, 0.0);
  p.enc_w2 = Mat(p.enc_hidden, p.latent_dim);
  xavier(p.enc_w2);
  p.enc_b2.assign(p.latent_dim, 0.0);
  p.dec_w1 = Mat(p.latent_dim, p.enc_hidden);
  xavier(p.dec_w1);
  p.dec_b1.assign(p.enc_hidden, 0.0);
  p.dec_w2 = Mat(p.enc_hidden, node_dim);
  xavier(p.dec_w2);
  p.dec_b2.assign(node_dim, 0.0);
  p.rel_emb = Mat(kRelationCount, p.rel_dim);
  for (int r = 0; r < kRelationCount; ++r) {
    if (emb.e[r].size() != static_cast<std::size_t>(p.rel_dim)) {
      throw std::invalid_argument("relation embedding dim mismatch");
    }
    for (int c = 0; c < p.rel_dim; ++c) p.rel_emb(r, c) = emb.e[r][c];
  }
  return p;
}

// Relation embeddings for the -R ablation: every vector uniform 1/sqrt(d).
inline RelationEmbeddings uniform_relation_embeddings(int dim = 8) {
  RelationEmbeddings emb;
  emb.dim = dim;
  const double v = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int r = 0; r < kRelationCount; ++r) emb.e[r].assign(dim, v);
  return emb;
}

// Weighted concatenation of relation embeddings: block r carries w_r * e_r
// when the relation bit is set, zeros otherwise.
inline Vec edge_feature(std::uint8_t bits, const std::array<double, kRelationCount>& w,
                        const Mat& rel_emb) {
  Vec f(static_cast<std::size_t>(kRelationCount) * rel_emb.cols, 0.0);
  for (int r = 0; r < kRelationCount; ++r) {
    if ((bits >> r) & 1u) {
      const double* e = rel_emb.row(r);
      double* block = f.data() + static_cast<std::size_t>(r) * rel_emb.cols;
      for (int c = 0; c < rel_emb.cols; ++c) block[c] = w[r] * e[c];
    }
  }
  return f;
}

// Mean over heads of LeakyReLU((h W_k) . (f W)); no softmax, may be negative.
inline double attention_score(const Vec& h, const Vec& f, const ModelParams& p) {
  if (static_cast<int>(h.size()) != p.node_dim ||
      static_cast<int>(f.size()) != p.edge_dim()) {
    throw std::invalid_argument("attention_score shape mismatch");
  }
  std::vector<double> fw(p.attn_dim);
  vec_mat(f.data(), p.edge_proj, fw.data());
  std::vector<double> hw(p.attn_dim);
  double sum = 0.0;
  for (int k = 0; k < p.heads; ++k) {
    vec_mat(h.data(), p.attn[k], hw.data());
    sum += leaky_relu(dot(hw.data(), fw.data(), p.attn_dim), p.leaky_slope);
  }
  return sum / static_cast<double>(p.heads);
}

// Neighbor aggregation h'_i = sum_j alpha_ij h_j with the shared node base as
// every h_j. Returns per-edge attention scores and per-node aggregates.
struct AggregateResult {
  std::vector<double> alpha;     // per edge
  std::vector<double> node_sum;  // per node: sum of incident alphas
  std::vector<Vec> hprime;       // per node, dim D_n
};

inline AggregateResult aggregate(const FusedGraph& graph,
                                 const std::vector<Vec>& edge_features,
                                 const ModelParams& p) {
  if (edge_features.size() != graph.edge_count()) {
    throw std::invalid_argument("one edge feature per edge required");
  }
  AggregateResult out;
  out.alpha.resize(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    out.alpha[e] = attention_score(p.node_base, edge_features[e], p);
  }
  out.node_sum.assign(graph.node_count(), 0.0);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    out.node_sum[graph.edges()[e].a] += out.alpha[e];
    out.node_sum[graph.edges()[e].b] += out.alpha[e];
  }
  out.hprime.resize(graph.node_count());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    out.hprime[i].resize(p.node_dim);
    for (int c = 0; c < p.node_dim; ++c) {
      out.hprime[i][c] = out.node_sum[i] * p.node_base[c];
    }
  }
  return out;
}

// Autoencoder pass: h* = dec(enc(h')), reconstruction loss is the L2 norm of
// the residual.
struct Reconstruction {
  Vec hstar;
  double loss = 0.0;
};

inline Reconstruction reconstruct(const Vec& hprime, const ModelParams& p) {
  if (static_cast<int>(hprime.size()) != p.node_dim) {
    throw std::invalid_argument("reconstruct shape mismatch");
  }
  Vec u1(p.enc_hidden), u2(p.latent_dim), d1(p.enc_hidden);
  Reconstruction out;
  out.hstar.resize(p.node_dim);
  vec_mat(hprime.data(), p.enc_w1, u1.data());
  for (int c = 0; c < p.enc_hidden; ++c) {
    u1[c] = leaky_relu(u1[c] + p.enc_b1[c], p.leaky_slope);
  }
  vec_mat(u1.data(), p.enc_w2, u2.data());
  for (int c = 0; c < p.latent_dim; ++c) {
    u2[c] = leaky_relu(u2[c] + p.enc_b2[c], p.leaky_slope);
  }
  vec_mat(u2.data(), p.dec_w1, d1.data());
  for (int c = 0; c < p.enc_hidden; ++c) {
    d1[c] = leaky_relu(d1[c] + p.dec_b1[c], p.leaky_slope);
  }
  vec_mat(d1.data(), p.dec_w2, out.hstar.data());
  double sq = 0.0;
  for (int c = 0; c < p.node_dim; ++c) {
    out.hstar[c] += p.dec_b2[c];
    const double r = hprime[c] - out.hstar[c];
    sq += r * r;
  }
  out.loss = std::sqrt(sq);
  return out;
}

inline constexpr double kBceEps = 1e-7;

// Maps an unbounded reconstruction loss into (0,1) for the BCE term; strictly
// increasing, so rankings by s and by l coincide.
inline double score_map(double l) {
  return std::clamp(1.0 - std::exp(-l), kBceEps, 1.0 - kBceEps);
}

inline double bce(double y, double s) {
  return -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
}

// Total loss decomposition. Labels use 1/0 for labeled nodes, -1 for
// unlabeled; any other value (validation holdout) contributes nothing.
struct LossBreakdown {
  double relation = 0.0;   // L_r
  double labeled = 0.0;    // L_l
  double unlabeled = 0.0;  // L_u
  double total = 0.0;
};

inline LossBreakdown total_loss(const std::vector<double>& losses,
                                const std::vector<int>& labels,
                                double relation_loss) {
  if (losses.size() != labels.size()) {
    throw std::invalid_argument("losses/labels size mismatch");
  }
  LossBreakdown out;
  out.relation = relation_loss;
  std::int64_t n_labeled = 0, n_unlabeled = 0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (labels[i] == 0 || labels[i] == 1) {
      out.labeled += bce(labels[i], score_map(losses[i]));
      ++n_labeled;
    } else if (labels[i] == -1) {
      out.unlabeled += losses[i] * losses[i];
      ++n_unlabeled;
    }
  }
  if (n_labeled > 0) out.labeled /= static_cast<double>(n_labeled);
  if (n_unlabeled > 0) out.unlabeled /= static_cast<double>(n_unlabeled);
  out.total = out.relation + out.labeled + out.unlabeled;
  return out;
}

// ---- checkpoint io ----------------------------------------------------------

namespace model_io_detail {

inline std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline void emit_tensor(std::string& out, const std::string& name, const Vec& v,
                        int rows, int cols) {
  out += "tensor " + name + " " + std::to_string(rows) + " " +
         std::to_string(cols) + "\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += hex_double(v[i]);
  }
  out.push_back('\n');
}

}  // namespace model_io_detail

inline void save_model(const std::string& path, const ModelParams& p,
                       const std::string& config_hash) {
  using model_io_detail::emit_tensor;
  std::string out = "promofraud-checkpoint v1\n";
  out += "config_hash " + config_hash + "\n";
  out += "dims " + std::to_string(p.node_dim) + " " + std::to_string(p.attn_dim) +
         " " + std::to_string(p.heads) + " " + std::to_string(p.rel_dim) + " " +
         std::to_string(p.enc_hidden) + " " + std::to_string(p.latent_dim) + " " +
         model_io_detail::hex_double(p.leaky_slope) + "\n";
  ModelParams& mutable_p = const_cast<ModelParams&>(p);
  mutable_p.for_each_tensor([&](const std::string& name, Vec& v) {
    int rows = static_cast<int>(v.size()), cols = 1;
    emit_tensor(out, name, v, rows, cols);
  });
  out += "end\n";
  write_text_file(path, out);
}

inline std::pair<ModelParams, std::string> load_model(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 3 || lines[0] != "promofraud-checkpoint v1") {
    throw std::runtime_error("bad checkpoint header in " + path);
  }
  if (lines[1].rfind("config_hash ", 0) != 0) {
    throw std::runtime_error("missing config hash in " + path);
  }
  const std::string hash = lines[1].substr(12);
  ModelParams p;
  {
    const auto d = split_csv(lines[2]);  // space separated actually
    std::vector<std::string> parts;
    std::string cur;
    for (char c : lines[2]) {
      if (c == ' ') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    if (parts.size() != 8 || parts[0] != "dims") {
      throw std::runtime_error("bad dims line in " + path);
    }
    p.node_dim = static_cast<int>(*parse_int(parts[1]));
    p.attn_dim = static_cast<int>(*parse_int(parts[2]));
    p.heads = static_cast<int>(*parse_int(parts[3]));
    p.rel_dim = static_cast<int>(*parse_int(parts[4]));
    p.enc_hidden = static_cast<int>(*parse_int(parts[5]));
    p.latent_dim = static_cast<int>(*parse_int(parts[6]));
    p.leaky_slope = std::strtod(parts[7].c_str(), nullptr);
  }
  p.node_base.assign(p.node_dim, 0.0);
  p.attn.assign(p.heads, Mat(p.node_dim, p.attn_dim));
  p.edge_proj = Mat(p.edge_dim(), p.attn_dim);
  p.enc_w1 = Mat(p.node_dim, p.enc_hidden);
  p.enc_b1.assign(p.enc_hidden, 0.0);
  p.enc_w2 = Mat(p.enc_hidden, p.latent_dim);
  p.enc_b2.assign(p.latent_dim, 0.0);
  p.dec_w1 = Mat(p.latent_dim, p.enc_hidden);
  p.dec_b1.assign(p.enc_hidden, 0.0);
  p.dec_w2 = Mat(p.enc_hidden, p.node_dim);
  p.dec_b2.assign(p.node_dim, 0.0);
  p.rel_emb = Mat(kRelationCount, p.rel_dim);

  std::size_t line = 3;
  p.for_each_tensor([&](const std::string& name, Vec& v) {
    if (line + 1 >= lines.size()) throw std::runtime_error("truncated checkpoint");
    const std::string expect = "tensor " + name + " ";
    if (lines[line].rfind(expect, 0) != 0) {
      throw std::runtime_error("unexpected tensor order in " + path + ": " +
                               lines[line]);
    }
    ++line;
    const std::string& data = lines[line++];
    std::size_t pos = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      while (pos < data.size() && data[pos] == ' ') ++pos;
      char* endp = nullptr;
      v[i] = std::strtod(data.c_str() + pos, &endp);
      if (endp == data.c_str() + pos) {
        throw std::runtime_error("bad tensor data in " + path);
      }
      pos = static_cast<std::size_t>(endp - data.c_str());
    }
  });
  if (line >= lines.size() || lines[line] != "end") {
    throw std::runtime_error("missing end marker in " + path);
  }
  return {p, hash};
}

}  // namespace promofraud
