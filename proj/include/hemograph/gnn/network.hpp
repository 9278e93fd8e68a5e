#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "hemograph/gnn/model.hpp"

namespace hemograph {

/// Optional per-step feature perturbation (sensitivity analysis): Gaussian
/// noise added to the listed masked-layout rows of the normalized features.
struct FeatureNoise {
  bool on_nodes = true;
  std::vector<int> masked_rows;
  double std = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rng != nullptr && std > 0.0 && !masked_rows.empty(); }
};

/// Static per-graph tensors and index structure for message passing under a
/// given model configuration (mask, boundary-edge usage, normalization).
struct GraphTensors {
  CenterlineGraph graph;  // boundary edges already dropped when disabled
  Eigen::MatrixXd edge_feat;    // masked, normalized; width_e x E
  Eigen::MatrixXd node_static;  // masked, normalized, state rows zeroed; width_v x N
  int row_p = -1, row_q = -1, row_loading = -1;
  double mu_p = 0, sigma_p = 1, mu_q = 0, sigma_q = 1, mu_l = 0, sigma_l = 1;
  double mu_dp = 0, sigma_dp = 1, mu_dq = 0, sigma_dq = 1;

  int n_nodes() const { return graph.n_nodes(); }
  int n_edges() const { return graph.n_edges(); }

  static GraphTensors build(const CenterlineGraph& g, const GnnModel& model) {
    if (!model.stats_fitted)
      throw contract_error("graph tensors: model has no fitted normalization statistics");
    GraphTensors gt;
    gt.graph = model.config.use_boundary_edges ? g : g.without_boundary_edges();
    const auto& mask = model.config.mask;
    const auto& stats = model.stats;

    Eigen::MatrixXd ef = assemble_edge_features(gt.graph);
    apply_normalization_columns(stats.edge, ef, NormDirection::forward);
    const auto edge_keep = mask.kept_edge_channels();
    gt.edge_feat.resize(edge_keep.size(), ef.cols());
    for (std::size_t r = 0; r < edge_keep.size(); ++r) gt.edge_feat.row(r) = ef.row(edge_keep[r]);

    const int n = gt.graph.n_nodes();
    NodeState zero{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), false, 0};
    Eigen::MatrixXd nf = assemble_node_features(gt.graph, zero);
    apply_normalization_columns(stats.node, nf, NormDirection::forward);
    nf.row(nodech::p).setZero();
    nf.row(nodech::q).setZero();
    nf.row(nodech::loading).setZero();
    const auto node_keep = mask.kept_node_channels();
    gt.node_static.resize(node_keep.size(), n);
    for (std::size_t r = 0; r < node_keep.size(); ++r) gt.node_static.row(r) = nf.row(node_keep[r]);

    gt.row_p = mask.masked_node_index(nodech::p);
    gt.row_q = mask.masked_node_index(nodech::q);
    gt.row_loading = mask.masked_node_index(nodech::loading);
    gt.mu_p = stats.node.mean[nodech::p];
    gt.sigma_p = stats.node.stddev[nodech::p];
    gt.mu_q = stats.node.mean[nodech::q];
    gt.sigma_q = stats.node.stddev[nodech::q];
    gt.mu_l = stats.node.mean[nodech::loading];
    gt.sigma_l = stats.node.stddev[nodech::loading];
    gt.mu_dp = stats.increment.mean[0];
    gt.sigma_dp = stats.increment.stddev[0];
    gt.mu_dq = stats.increment.mean[1];
    gt.sigma_dq = stats.increment.stddev[1];
    return gt;
  }
};

/// Latent node/edge states after `iteration` processing passes (columns may
/// hold several stacked samples).
struct LatentGraph {
  Eigen::MatrixXd v;  // latent x (B*N)
  Eigen::MatrixXd w;  // latent x (B*E)
  int iteration = 0;
};

struct GnnStepCache {
  int batch = 0;
  Eigen::MatrixXd node_in;
  MlpCache enc_n, enc_e;
  std::vector<Eigen::MatrixXd> v;  // iterations + 1 entries
  std::vector<Eigen::MatrixXd> w;
  std::vector<MlpCache> pe, pn;
  MlpCache dec;
};

namespace gnn_detail {

inline void add_noise(Eigen::MatrixXd& m, const FeatureNoise& noise) {
  for (int c = 0; c < m.cols(); ++c)
    for (int r : noise.masked_rows) m(r, c) += noise.rng->normal(0.0, noise.std);
}

}  // namespace gnn_detail

/// Normalized, masked node-feature columns for a batch of states. P and Q are
/// n_nodes x batch in physical units; `loading` holds one flag per sample.
inline Eigen::MatrixXd assemble_node_input(const GraphTensors& gt, const Eigen::MatrixXd& P,
                                           const Eigen::MatrixXd& Q,
                                           const std::vector<char>& loading,
                                           const FeatureNoise* noise = nullptr) {
  const int n = gt.n_nodes();
  const int batch = static_cast<int>(P.cols());
  require(P.rows() == n && Q.rows() == n && Q.cols() == batch &&
              static_cast<int>(loading.size()) == batch,
          "assemble_node_input: state shape mismatch");
  Eigen::MatrixXd in(gt.node_static.rows(), static_cast<Eigen::Index>(batch) * n);
  for (int b = 0; b < batch; ++b) {
    in.middleCols(static_cast<Eigen::Index>(b) * n, n) = gt.node_static;
    if (gt.row_p >= 0)
      in.row(gt.row_p).segment(static_cast<Eigen::Index>(b) * n, n) =
          (P.col(b).array() - gt.mu_p) / gt.sigma_p;
    if (gt.row_q >= 0)
      in.row(gt.row_q).segment(static_cast<Eigen::Index>(b) * n, n) =
          (Q.col(b).array() - gt.mu_q) / gt.sigma_q;
    if (gt.row_loading >= 0)
      in.row(gt.row_loading)
          .segment(static_cast<Eigen::Index>(b) * n, n)
          .setConstant(((loading[b] ? 1.0 : 0.0) - gt.mu_l) / gt.sigma_l);
  }
  if (noise && noise->active() && noise->on_nodes) gnn_detail::add_noise(in, *noise);
  return in;
}

inline Eigen::MatrixXd replicate_edge_input(const GraphTensors& gt, int batch,
                                            const FeatureNoise* noise = nullptr) {
  const int e = gt.n_edges();
  Eigen::MatrixXd in(gt.edge_feat.rows(), static_cast<Eigen::Index>(batch) * e);
  for (int b = 0; b < batch; ++b)
    in.middleCols(static_cast<Eigen::Index>(b) * e, e) = gt.edge_feat;
  if (noise && noise->active() && !noise->on_nodes) gnn_detail::add_noise(in, *noise);
  return in;
}

/// Encode stage over a prepared column batch.
inline LatentGraph encode_columns(const GnnModel& model, const Eigen::MatrixXd& node_in,
                                  const Eigen::MatrixXd& edge_in, GnnStepCache* cache = nullptr) {
  LatentGraph lat;
  lat.v = mlp_forward_columns(model.node_encoder, node_in, cache ? &cache->enc_n : nullptr);
  lat.w = mlp_forward_columns(model.edge_encoder, edge_in, cache ? &cache->enc_e : nullptr);
  lat.iteration = 0;
  return lat;
}

/// One processing pass (1-based iteration index): residual edge update from
/// (edge, source, destination) latents, then residual node update from the
/// incoming-edge sum and the inlet/outlet boundary-edge sums.
inline LatentGraph process_step_columns(const GnnModel& model, const GraphTensors& gt,
                                        const LatentGraph& latents, int iteration,
                                        GnnStepCache* cache = nullptr) {
  const int L = model.config.iterations;
  if (iteration < 1 || iteration > L)
    throw contract_error("process_step: iteration index out of range");
  if (latents.iteration != iteration - 1)
    throw contract_error("process_step: latents are not at iteration " +
                         std::to_string(iteration - 1));
  const int nl = model.config.latent_width;
  const int n = gt.n_nodes();
  const int e = gt.n_edges();
  const int batch = static_cast<int>(latents.v.cols()) / n;

  Eigen::MatrixXd edge_in(3 * nl, static_cast<Eigen::Index>(batch) * e);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index nbase = static_cast<Eigen::Index>(b) * n;
    const Eigen::Index ebase = static_cast<Eigen::Index>(b) * e;
    for (int k = 0; k < e; ++k) {
      const auto& ed = gt.graph.edges[k];
      edge_in.block(0, ebase + k, nl, 1) = latents.w.col(ebase + k);
      edge_in.block(nl, ebase + k, nl, 1) = latents.v.col(nbase + ed.src);
      edge_in.block(2 * nl, ebase + k, nl, 1) = latents.v.col(nbase + ed.dst);
    }
  }

  LatentGraph out;
  out.iteration = iteration;
  out.w = latents.w + mlp_forward_columns(model.edge_processors[iteration - 1], edge_in,
                                          cache ? &cache->pe[iteration - 1] : nullptr);

  Eigen::MatrixXd node_in(4 * nl, static_cast<Eigen::Index>(batch) * n);
  const auto& incoming = gt.graph.incoming();
  const auto& in_inlet = gt.graph.incoming_boundary_inlet();
  const auto& in_outlet = gt.graph.incoming_boundary_outlet();
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index nbase = static_cast<Eigen::Index>(b) * n;
    const Eigen::Index ebase = static_cast<Eigen::Index>(b) * e;
    for (int j = 0; j < n; ++j) {
      auto col = node_in.col(nbase + j);
      col.segment(0, nl) = latents.v.col(nbase + j);
      col.segment(nl, nl).setZero();
      for (int k : incoming[j]) col.segment(nl, nl) += out.w.col(ebase + k);
      col.segment(2 * nl, nl).setZero();
      for (int k : in_inlet[j]) col.segment(2 * nl, nl) += out.w.col(ebase + k);
      col.segment(3 * nl, nl).setZero();
      for (int k : in_outlet[j]) col.segment(3 * nl, nl) += out.w.col(ebase + k);
    }
  }
  out.v = latents.v + mlp_forward_columns(model.node_processors[iteration - 1], node_in,
                                          cache ? &cache->pn[iteration - 1] : nullptr);
  return out;
}

/// Decode stage: per-node pressure/flow increments in physical units.
/// Returns (delta_p, delta_q), each n_nodes x batch.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> decode_columns(const GnnModel& model,
                                                                  const GraphTensors& gt,
                                                                  const LatentGraph& latents,
                                                                  GnnStepCache* cache = nullptr) {
  if (latents.iteration != model.config.iterations)
    throw contract_error("decode: latents are not at the final iteration");
  const int n = gt.n_nodes();
  const int batch = static_cast<int>(latents.v.cols()) / n;
  const Eigen::MatrixXd d =
      mlp_forward_columns(model.decoder, latents.v, cache ? &cache->dec : nullptr);
  Eigen::MatrixXd dp(n, batch), dq(n, batch);
  for (int b = 0; b < batch; ++b) {
    dp.col(b) = d.row(0).segment(static_cast<Eigen::Index>(b) * n, n).transpose() * gt.sigma_dp +
                Eigen::VectorXd::Constant(n, gt.mu_dp);
    dq.col(b) = d.row(1).segment(static_cast<Eigen::Index>(b) * n, n).transpose() * gt.sigma_dq +
                Eigen::VectorXd::Constant(n, gt.mu_dq);
  }
  return {dp, dq};
}

/// Full forward pass over a batch of states: encode, L processing passes,
/// decode. Physical-unit increments are returned; `cache` enables backward.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gnn_forward_step(
    const GnnModel& model, const GraphTensors& gt, const Eigen::MatrixXd& P,
    const Eigen::MatrixXd& Q, const std::vector<char>& loading, GnnStepCache* cache = nullptr,
    const FeatureNoise* noise = nullptr) {
  const int batch = static_cast<int>(P.cols());
  if (cache) {
    cache->batch = batch;
    cache->v.assign(model.config.iterations + 1, Eigen::MatrixXd());
    cache->w.assign(model.config.iterations + 1, Eigen::MatrixXd());
    cache->pe.assign(model.config.iterations, MlpCache());
    cache->pn.assign(model.config.iterations, MlpCache());
  }
  const Eigen::MatrixXd node_in = assemble_node_input(gt, P, Q, loading, noise);
  const Eigen::MatrixXd edge_in = replicate_edge_input(gt, batch, noise);
  if (cache) cache->node_in = node_in;

  LatentGraph lat = encode_columns(model, node_in, edge_in, cache);
  if (cache) {
    cache->v[0] = lat.v;
    cache->w[0] = lat.w;
  }
  for (int l = 1; l <= model.config.iterations; ++l) {
    lat = process_step_columns(model, gt, lat, l, cache);
    if (cache) {
      cache->v[l] = lat.v;
      cache->w[l] = lat.w;
    }
  }
  return decode_columns(model, gt, lat, cache);
}

/// Reverse-mode pass matching gnn_forward_step. Takes gradients with respect
/// to the physical increments, accumulates parameter gradients, and returns
/// gradients with respect to the physical state (dP, dQ), each n_nodes x batch.
inline void gnn_backward_step(const GnnModel& model, const GraphTensors& gt,
                              const GnnStepCache& cache, const Eigen::MatrixXd& d_delta_p,
                              const Eigen::MatrixXd& d_delta_q, GnnGrads& grads,
                              Eigen::MatrixXd& dP, Eigen::MatrixXd& dQ) {
  const int n = gt.n_nodes();
  const int e = gt.n_edges();
  const int batch = cache.batch;
  const int nl = model.config.latent_width;
  const int L = model.config.iterations;

  Eigen::MatrixXd ddec(2, static_cast<Eigen::Index>(batch) * n);
  for (int b = 0; b < batch; ++b) {
    ddec.row(0).segment(static_cast<Eigen::Index>(b) * n, n) =
        d_delta_p.col(b).transpose() * gt.sigma_dp;
    ddec.row(1).segment(static_cast<Eigen::Index>(b) * n, n) =
        d_delta_q.col(b).transpose() * gt.sigma_dq;
  }

  Eigen::MatrixXd dv = mlp_backward_columns(model.decoder, cache.dec, ddec, grads.decoder);
  Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(nl, static_cast<Eigen::Index>(batch) * e);

  const auto& incoming = gt.graph.incoming();
  const auto& in_inlet = gt.graph.incoming_boundary_inlet();
  const auto& in_outlet = gt.graph.incoming_boundary_outlet();

  for (int l = L; l >= 1; --l) {
    // node update backward: v^l = v^{l-1} + pn([v^{l-1}, agg, win, wout])
    const Eigen::MatrixXd dun =
        mlp_backward_columns(model.node_processors[l - 1], cache.pn[l - 1], dv,
                             grads.node_processors[l - 1]);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index nbase = static_cast<Eigen::Index>(b) * n;
      const Eigen::Index ebase = static_cast<Eigen::Index>(b) * e;
      for (int j = 0; j < n; ++j) {
        dv.col(nbase + j) += dun.block(0, nbase + j, nl, 1);
        for (int k : incoming[j]) dw.col(ebase + k) += dun.block(nl, nbase + j, nl, 1);
        for (int k : in_inlet[j]) dw.col(ebase + k) += dun.block(2 * nl, nbase + j, nl, 1);
        for (int k : in_outlet[j]) dw.col(ebase + k) += dun.block(3 * nl, nbase + j, nl, 1);
      }
    }
    // edge update backward: w^l = w^{l-1} + pe([w^{l-1}, v_src, v_dst])
    const Eigen::MatrixXd due = mlp_backward_columns(model.edge_processors[l - 1],
                                                     cache.pe[l - 1], dw,
                                                     grads.edge_processors[l - 1]);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index nbase = static_cast<Eigen::Index>(b) * n;
      const Eigen::Index ebase = static_cast<Eigen::Index>(b) * e;
      for (int k = 0; k < e; ++k) {
        const auto& ed = gt.graph.edges[k];
        dw.col(ebase + k) += due.block(0, ebase + k, nl, 1);
        dv.col(nbase + ed.src) += due.block(nl, ebase + k, nl, 1);
        dv.col(nbase + ed.dst) += due.block(2 * nl, ebase + k, nl, 1);
      }
    }
  }

  const Eigen::MatrixXd dnode_in =
      mlp_backward_columns(model.node_encoder, cache.enc_n, dv, grads.node_encoder);
  mlp_backward_columns(model.edge_encoder, cache.enc_e, dw, grads.edge_encoder);

  dP.resize(n, batch);
  dQ.resize(n, batch);
  for (int b = 0; b < batch; ++b) {
    dP.col(b) = gt.row_p >= 0 ? (dnode_in.row(gt.row_p)
                                     .segment(static_cast<Eigen::Index>(b) * n, n)
                                     .transpose() /
                                 gt.sigma_p)
                                    .eval()
                              : Eigen::VectorXd::Zero(n).eval();
    dQ.col(b) = gt.row_q >= 0 ? (dnode_in.row(gt.row_q)
                                     .segment(static_cast<Eigen::Index>(b) * n, n)
                                     .transpose() /
                                 gt.sigma_q)
                                    .eval()
                              : Eigen::VectorXd::Zero(n).eval();
  }
}

}  // namespace hemograph
