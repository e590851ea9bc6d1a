#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stsccl/graph_data.hpp"
#include "stsccl/nn.hpp"
#include "stsccl/tensor.hpp"

namespace stsccl::contrast {

// Per-node acceptable-negative index sets over a batch of nodes.
struct NegativeFilter {
  std::vector<std::vector<int64_t>> allowed;  // positions into the batch node list
  int64_t top_u = 0;
};

struct Heads {
  std::vector<Linear> w_k;  // one reshaping map per horizon step
  Linear proj1, proj2;      // two-layer nonlinear projection head
  double delta = 0.1;
  Heads() = default;
  Heads(ParamStore& store, const std::string& name, int64_t d_model, int64_t k, int64_t d_proj, Rng& rng);
};

// Mutual-view synchronous loss: c [B,N,d] predicts the other view's future
// representations z_other [B,K,N,d] through the per-horizon maps. Negatives
// at horizon k are all other (sample, node) entries of the batch at k.
Var sts_loss(const Var& c, const Var& z_other, const std::vector<Linear>& w_k);

// Sim = 1 - JS with base-2 logs; both inputs must be probability vectors.
double js_similarity(const std::vector<double>& m_i, const std::vector<double>& m_j);

// Excludes self, geographic neighbors, and the top-u most semantically
// similar nodes (ties resolved toward the lower node index). A node whose
// set comes out empty falls back to all-but-self, with a warning.
NegativeFilter build_negative_filter(const data::GraphSpec& graph, const std::vector<int64_t>& batch_nodes,
                                     int64_t u, bool use_dist = false, double dist_radius = 0.0);

// Convenience: all graph nodes in order.
NegativeFilter build_negative_filter(const data::GraphSpec& graph, int64_t u, bool use_dist = false,
                                     double dist_radius = 0.0);

Var projection_head(const Var& c, const Heads& heads);

// NT-Xent over cosine similarities with the filtered negative sets; the
// positive pair is included in the denominator, so an empty set gives 0.
Var semantic_contextual_loss(const Var& h_b, const Var& h_s, const NegativeFilter& filter, double delta);

// Unfiltered reference loss (all j != i as negatives, same denominator
// convention); the oracle the filtered loss must match when nothing but
// self is excluded.
Var basic_graph_contrastive_loss(const Var& s_b, const Var& s_s, double sigma);

}  // namespace stsccl::contrast
