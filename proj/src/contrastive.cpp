#include "stsccl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stsccl/errors.hpp"

namespace stsccl::contrast {

Heads::Heads(ParamStore& store, const std::string& name, int64_t d_model, int64_t k, int64_t d_proj,
             Rng& rng) {
  for (int64_t i = 0; i < k; ++i) {
    w_k.push_back(Linear(store, name + ".w" + std::to_string(i), d_model, d_model, rng));
  }
  proj1 = Linear(store, name + ".proj1", d_model, d_model, rng);
  proj2 = Linear(store, name + ".proj2", d_model, d_proj, rng);
}

Var sts_loss(const Var& c, const Var& z_other, const std::vector<Linear>& w_k) {
  const Shape& cs = c->value.shape();
  const Shape& zs = z_other->value.shape();
  if (cs.size() != 3 || zs.size() != 4) throw ConfigError("sts_loss expects c [B,N,d], z [B,K,N,d]");
  int64_t B = cs[0], N = cs[1], d = cs[2];
  int64_t K = zs[1];
  if (K == 0) throw ConfigError("sts_loss: zero-length horizon");
  if (static_cast<size_t>(K) > w_k.size()) throw ConfigError("sts_loss: not enough horizon heads");
  int64_t M = B * N;
  Tensor eye = Tensor::eye(M);
  Var eye_c = make_const(eye);

  Var total;
  for (int64_t k = 0; k < K; ++k) {
    Var pred = w_k[static_cast<size_t>(k)](c);                       // B N d
    Var target = reshape(slice(z_other, 1, k, 1), {B, N, d});        // B N d
    Var p2 = reshape(pred, {M, d});
    Var t2 = reshape(target, {M, d});
    Var scores = matmul(p2, transpose2(t2));                         // M x M, positives on the diagonal
    Var lse = reshape(logsumexp_last(scores), {M});
    Var pos = reshape(sum(mul(scores, eye_c), {-1}, false), {M});
    Var loss_k = mean_all(sub(lse, pos));
    total = total ? add(total, loss_k) : loss_k;
  }
  return scale(total, 1.0 / static_cast<double>(K));
}

double js_similarity(const std::vector<double>& m_i, const std::vector<double>& m_j) {
  if (m_i.size() != m_j.size()) throw DomainError("js_similarity: length mismatch");
  double si = 0, sj = 0;
  for (size_t q = 0; q < m_i.size(); ++q) {
    if (m_i[q] < 0 || m_j[q] < 0) throw DomainError("js_similarity: negative entry");
    si += m_i[q];
    sj += m_j[q];
  }
  if (std::abs(si - 1.0) > 1e-9 || std::abs(sj - 1.0) > 1e-9) {
    throw DomainError("js_similarity: inputs must sum to 1");
  }
  double js = 0;
  for (size_t q = 0; q < m_i.size(); ++q) {
    double a = m_i[q], b = m_j[q];
    double m = a + b;
    if (a > 0) js += 0.5 * a * std::log2(2.0 * a / m);
    if (b > 0) js += 0.5 * b * std::log2(2.0 * b / m);
  }
  return 1.0 - js;
}

NegativeFilter build_negative_filter(const data::GraphSpec& graph, const std::vector<int64_t>& batch_nodes,
                                     int64_t u, bool use_dist, double dist_radius) {
  int64_t n = static_cast<int64_t>(batch_nodes.size());
  if (u >= n) throw ConfigError("top_u must be smaller than the batch node count");
  if (u < 0) throw ConfigError("top_u must be nonnegative");
  if (use_dist && !graph.has_dist) throw ConfigError("distance filtering requested but graph has no a_dist");

  int64_t Q = graph.semantic.dim(1);
  auto sem_row = [&](int64_t node) {
    std::vector<double> r(static_cast<size_t>(Q));
    for (int64_t q = 0; q < Q; ++q) r[static_cast<size_t>(q)] = graph.semantic.at({node, q});
    return r;
  };

  NegativeFilter f;
  f.top_u = u;
  f.allowed.resize(static_cast<size_t>(n));
  for (int64_t a = 0; a < n; ++a) {
    int64_t i = batch_nodes[static_cast<size_t>(a)];
    std::vector<bool> excluded(static_cast<size_t>(n), false);
    excluded[static_cast<size_t>(a)] = true;
    for (int64_t b = 0; b < n; ++b) {
      if (b == a) continue;
      int64_t j = batch_nodes[static_cast<size_t>(b)];
      bool neighbor = use_dist ? (graph.a_dist.at({i, j}) <= dist_radius)
                               : (graph.a_con.at({i, j}) != 0.0);
      if (neighbor) excluded[static_cast<size_t>(b)] = true;
    }
    if (u > 0) {
      auto mi = sem_row(i);
      std::vector<std::pair<double, int64_t>> sims;
      for (int64_t b = 0; b < n; ++b) {
        if (b == a) continue;
        sims.emplace_back(js_similarity(mi, sem_row(batch_nodes[static_cast<size_t>(b)])), b);
      }
      std::sort(sims.begin(), sims.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;  // tie: exclude the lower index first
      });
      for (int64_t t = 0; t < u && t < static_cast<int64_t>(sims.size()); ++t) {
        excluded[static_cast<size_t>(sims[static_cast<size_t>(t)].second)] = true;
      }
    }
    auto& allow = f.allowed[static_cast<size_t>(a)];
    for (int64_t b = 0; b < n; ++b) {
      if (!excluded[static_cast<size_t>(b)]) allow.push_back(b);
    }
    if (allow.empty()) {
      std::fprintf(stderr, "warning: negative set empty for node %lld; falling back to all-but-self\n",
                   static_cast<long long>(i));
      for (int64_t b = 0; b < n; ++b) {
        if (b != a) allow.push_back(b);
      }
    }
  }
  return f;
}

NegativeFilter build_negative_filter(const data::GraphSpec& graph, int64_t u, bool use_dist,
                                     double dist_radius) {
  std::vector<int64_t> nodes(static_cast<size_t>(graph.n_nodes));
  for (int64_t i = 0; i < graph.n_nodes; ++i) nodes[static_cast<size_t>(i)] = i;
  return build_negative_filter(graph, nodes, u, use_dist, dist_radius);
}

Var projection_head(const Var& c, const Heads& heads) { return heads.proj2(tanh_(heads.proj1(c))); }

namespace {

// cosine-similarity matrix between rows of a and rows of b
Var cosine_matrix(const Var& a, const Var& b) {
  Var na = sqrt_(sum(square(a), {-1}, true));
  Var nb = sqrt_(sum(square(b), {-1}, true));
  for (int64_t i = 0; i < na->value.numel(); ++i) {
    if (na->value[i] == 0.0 || nb->value[i] == 0.0) {
      throw DomainError("cosine similarity undefined for a zero-norm row");
    }
  }
  Var an = div(a, na);
  Var bn = div(b, nb);
  return matmul(an, transpose2(bn));
}

Var nt_xent_from_scores(const Var& scores, const Tensor& denom_mask) {
  int64_t n = scores->value.dim(0);
  Tensor neg_inf(denom_mask.shape());
  for (int64_t i = 0; i < neg_inf.numel(); ++i) neg_inf[i] = denom_mask[i] != 0.0 ? 0.0 : -1e30;
  Var masked = add(scores, make_const(neg_inf));
  Var lse = reshape(logsumexp_last(masked), {n});
  Var pos = reshape(sum(mul(scores, make_const(Tensor::eye(n))), {-1}, false), {n});
  return mean_all(sub(lse, pos));
}

}  // namespace

Var semantic_contextual_loss(const Var& h_b, const Var& h_s, const NegativeFilter& filter, double delta) {
  if (delta <= 0) throw ConfigError("semantic loss temperature must be positive");
  int64_t n = h_b->value.dim(0);
  if (static_cast<int64_t>(filter.allowed.size()) != n) {
    throw ConfigError("negative filter size does not match the batch node count");
  }
  Var scores = scale(cosine_matrix(h_b, h_s), 1.0 / delta);
  Tensor mask({n, n});
  for (int64_t i = 0; i < n; ++i) {
    mask.at({i, i}) = 1.0;  // the positive stays in the denominator
    for (int64_t j : filter.allowed[static_cast<size_t>(i)]) mask.at({i, j}) = 1.0;
  }
  return nt_xent_from_scores(scores, mask);
}

Var basic_graph_contrastive_loss(const Var& s_b, const Var& s_s, double sigma) {
  if (sigma <= 0) throw ConfigError("contrastive temperature must be positive");
  int64_t n = s_b->value.dim(0);
  Var scores = scale(cosine_matrix(s_b, s_s), 1.0 / sigma);
  return nt_xent_from_scores(scores, Tensor({n, n}, 1.0));
}

}  // namespace stsccl::contrast
