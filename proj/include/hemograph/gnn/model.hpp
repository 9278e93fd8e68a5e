#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hemograph/features.hpp"
#include "hemograph/nn/adam.hpp"
#include "hemograph/nn/mlp.hpp"
#include "hemograph/normalization.hpp"
#include "hemograph/rng.hpp"

namespace hemograph {

struct GnnConfig {
  int latent_width = 16;
  int hidden_width = 64;
  int hidden_layers = 2;
  int iterations = 5;
  FeatureMask mask = FeatureMask::full();
  bool use_boundary_edges = true;
  std::string variant = "baseline";

  std::string canonical_string() const {
    std::ostringstream os;
    os << "latent=" << latent_width << ";hidden=" << hidden_width << "x" << hidden_layers
       << ";iters=" << iterations << ";mask=" << mask.name << ":";
    for (bool b : mask.node) os << (b ? '1' : '0');
    os << ":";
    for (bool b : mask.edge) os << (b ? '1' : '0');
    os << ";boundary_edges=" << (use_boundary_edges ? 1 : 0) << ";variant=" << variant;
    return os.str();
  }
};

/// Encoder/processor/decoder parameter sets plus the normalization statistics
/// they were trained with.
struct GnnModel {
  GnnConfig config;
  NormStats stats;
  bool stats_fitted = false;
  Mlp node_encoder;
  Mlp edge_encoder;
  std::vector<Mlp> edge_processors;  // one per iteration
  std::vector<Mlp> node_processors;
  Mlp decoder;

  static GnnModel create(const GnnConfig& config, const NormStats& stats, std::uint64_t seed) {
    GnnModel m;
    m.config = config;
    m.stats = stats;
    m.stats_fitted = true;
    int stream = 0;
    auto next = [&]() { return substream(seed, "init", stream++); };
    Rng r0 = next();
    m.node_encoder = make_mlp(config.mask.node_width(), config.latent_width, config.hidden_width,
                              config.hidden_layers, true, r0);
    Rng r1 = next();
    m.edge_encoder = make_mlp(config.mask.edge_width(), config.latent_width, config.hidden_width,
                              config.hidden_layers, true, r1);
    for (int l = 0; l < config.iterations; ++l) {
      Rng re = next();
      m.edge_processors.push_back(make_mlp(3 * config.latent_width, config.latent_width,
                                           config.hidden_width, config.hidden_layers, true, re));
      Rng rn = next();
      m.node_processors.push_back(make_mlp(4 * config.latent_width, config.latent_width,
                                           config.hidden_width, config.hidden_layers, true, rn));
    }
    Rng rd = next();
    m.decoder = make_mlp(config.latent_width, 2, config.hidden_width, config.hidden_layers,
                         false, rd);
    return m;
  }

  std::vector<Mlp*> mlps() {
    std::vector<Mlp*> out = {&node_encoder, &edge_encoder};
    for (auto& m : edge_processors) out.push_back(&m);
    for (auto& m : node_processors) out.push_back(&m);
    out.push_back(&decoder);
    return out;
  }

  std::vector<const Mlp*> mlps() const {
    std::vector<const Mlp*> out = {&node_encoder, &edge_encoder};
    for (const auto& m : edge_processors) out.push_back(&m);
    for (const auto& m : node_processors) out.push_back(&m);
    out.push_back(&decoder);
    return out;
  }

  /// Flat tensor list in a fixed order (matches GnnGrads::views).
  std::vector<TensorView> param_views() {
    std::vector<TensorView> v;
    for (Mlp* m : mlps()) {
      for (int l = 0; l < m->n_layers(); ++l) {
        v.push_back({m->W[l].data(), m->W[l].size()});
        v.push_back({m->b[l].data(), m->b[l].size()});
      }
      if (m->final_layer_norm) {
        v.push_back({m->ln_gain.data(), m->ln_gain.size()});
        v.push_back({m->ln_offset.data(), m->ln_offset.size()});
      }
    }
    return v;
  }

  std::size_t n_parameters() {
    std::size_t n = 0;
    for (const auto& t : param_views()) n += t.size;
    return n;
  }

  void bump_revision() {
    for (Mlp* m : mlps()) m->revision++;
  }

  std::uint64_t config_hash() const { return fnv1a64(config.canonical_string()); }
};

/// Gradient accumulator mirroring a GnnModel's parameters.
struct GnnGrads {
  MlpGrads node_encoder, edge_encoder, decoder;
  std::vector<MlpGrads> edge_processors, node_processors;

  static GnnGrads like(const GnnModel& m) {
    GnnGrads g;
    g.node_encoder = MlpGrads::like(m.node_encoder);
    g.edge_encoder = MlpGrads::like(m.edge_encoder);
    for (const auto& p : m.edge_processors) g.edge_processors.push_back(MlpGrads::like(p));
    for (const auto& p : m.node_processors) g.node_processors.push_back(MlpGrads::like(p));
    g.decoder = MlpGrads::like(m.decoder);
    return g;
  }

  void set_zero() {
    node_encoder.set_zero();
    edge_encoder.set_zero();
    for (auto& p : edge_processors) p.set_zero();
    for (auto& p : node_processors) p.set_zero();
    decoder.set_zero();
  }

  void add(const GnnGrads& o) {
    auto add_mlp = [](MlpGrads& a, const MlpGrads& b) {
      for (std::size_t l = 0; l < a.dW.size(); ++l) {
        a.dW[l] += b.dW[l];
        a.db[l] += b.db[l];
      }
      if (a.dgain.size()) {
        a.dgain += b.dgain;
        a.doffset += b.doffset;
      }
    };
    add_mlp(node_encoder, o.node_encoder);
    add_mlp(edge_encoder, o.edge_encoder);
    for (std::size_t l = 0; l < edge_processors.size(); ++l)
      add_mlp(edge_processors[l], o.edge_processors[l]);
    for (std::size_t l = 0; l < node_processors.size(); ++l)
      add_mlp(node_processors[l], o.node_processors[l]);
    add_mlp(decoder, o.decoder);
  }

  void scale(double a) {
    auto scale_mlp = [a](MlpGrads& g) {
      for (auto& m : g.dW) m *= a;
      for (auto& v : g.db) v *= a;
      if (g.dgain.size()) {
        g.dgain *= a;
        g.doffset *= a;
      }
    };
    scale_mlp(node_encoder);
    scale_mlp(edge_encoder);
    for (auto& p : edge_processors) scale_mlp(p);
    for (auto& p : node_processors) scale_mlp(p);
    scale_mlp(decoder);
  }

  /// Same order as GnnModel::param_views.
  std::vector<TensorView> views() {
    std::vector<MlpGrads*> order = {&node_encoder, &edge_encoder};
    for (auto& p : edge_processors) order.push_back(&p);
    for (auto& p : node_processors) order.push_back(&p);
    order.push_back(&decoder);
    std::vector<TensorView> v;
    for (MlpGrads* g : order) {
      for (std::size_t l = 0; l < g->dW.size(); ++l) {
        v.push_back({g->dW[l].data(), g->dW[l].size()});
        v.push_back({g->db[l].data(), g->db[l].size()});
      }
      if (g->dgain.size()) {
        v.push_back({g->dgain.data(), g->dgain.size()});
        v.push_back({g->doffset.data(), g->doffset.size()});
      }
    }
    return v;
  }
};

}  // namespace hemograph
