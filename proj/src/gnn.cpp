// SPDX-License-Identifier: Apache-2.0

#include "irscf/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "irscf/beamform.hpp"
#include "irscf/errors.hpp"

namespace irscf {

namespace {

Dense make_dense(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Dense d{RealTensor::matrix(fan_in, fan_out), RealTensor::matrix(1, fan_out)};
  const double bound = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& w : d.weight.data()) w = rng.uniform(-bound, bound);
  return d;
}

Mlp make_mlp(std::size_t fan_in, const std::vector<std::size_t>& widths, Rng& rng) {
  Mlp mlp;
  std::size_t in = fan_in;
  for (std::size_t w : widths) {
    mlp.layers.push_back(make_dense(in, w, rng));
    in = w;
  }
  return mlp;
}

template <typename Model, typename Fn>
void visit_parameters(Model& model, Fn&& fn) {
  for (std::size_t i = 0; i < model.bs.size(); ++i) {
    auto& net = model.bs[i];
    const std::string prefix = "bs" + std::to_string(i) + ".";
    for (std::size_t n = 0; n < net.layers.size(); ++n) {
      auto& layer = net.layers[n];
      const std::string lp = prefix + "layer" + std::to_string(n + 1) + ".";
      for (std::size_t j = 0; j < layer.message.layers.size(); ++j) {
        fn(lp + "message." + std::to_string(j) + ".weight", layer.message.layers[j].weight);
        fn(lp + "message." + std::to_string(j) + ".bias", layer.message.layers[j].bias);
      }
      for (std::size_t j = 0; j < layer.combine.layers.size(); ++j) {
        fn(lp + "combine." + std::to_string(j) + ".weight", layer.combine.layers[j].weight);
        fn(lp + "combine." + std::to_string(j) + ".bias", layer.combine.layers[j].bias);
      }
    }
    fn(prefix + "user_head.weight", net.user_head.weight);
    fn(prefix + "user_head.bias", net.user_head.bias);
    if (net.irs_head) {
      fn(prefix + "irs_head.weight", net.irs_head->weight);
      fn(prefix + "irs_head.bias", net.irs_head->bias);
    }
  }
}

ad::Var dense_forward(const Dense& d, ad::Var x, ParamBinder& bind) {
  return ad::add_row(ad::matmul(x, bind(d.weight)), bind(d.bias));
}

}  // namespace

double default_feature_scale(const SystemConfig& cfg) {
  return std::sqrt(cfg.p_max_watts() / cfg.noise_watts());
}

ModelShape model_shape_for(const SystemConfig& cfg, std::vector<std::size_t> widths,
                           std::size_t num_layers, std::size_t irs_bs) {
  ModelShape shape;
  shape.num_bs = cfg.num_bs;
  shape.num_antennas = cfg.num_antennas;
  shape.num_elements = cfg.num_elements;
  shape.widths = std::move(widths);
  shape.num_layers = num_layers;
  shape.irs_bs = irs_bs;
  shape.p_max_dbm = cfg.p_max_dbm;
  shape.feature_scale = default_feature_scale(cfg);
  return shape;
}

GnnModel init_model(const ModelShape& shape, Rng& rng) {
  if (shape.widths.empty()) throw ConfigError("gnn widths must be non-empty");
  if (std::find(shape.widths.begin(), shape.widths.end(), std::size_t{0}) != shape.widths.end()) {
    throw ConfigError("gnn widths must be positive");
  }
  if (shape.num_layers < 1) throw ConfigError("gnn needs at least one layer");
  if (shape.irs_bs >= shape.num_bs) throw ConfigError("irs_bs out of range");

  GnnModel model;
  model.shape = shape;
  const std::size_t d = shape.feature_width();
  for (std::size_t i = 0; i < shape.num_bs; ++i) {
    BsNetwork net;
    std::size_t in = shape.input_width();
    for (std::size_t n = 0; n < shape.num_layers; ++n) {
      GraphLayer layer;
      layer.message = make_mlp(in, shape.widths, rng);
      layer.combine = make_mlp(d + in, shape.widths, rng);
      net.layers.push_back(std::move(layer));
      in = d;
    }
    net.user_head = make_dense(d, 2 * shape.num_antennas, rng);
    if (i == shape.irs_bs) {
      Dense head = make_dense(d, 2 * shape.num_elements, rng);
      for (std::size_t l = 0; l < shape.num_elements; ++l) head.bias[l] = 0.1;
      net.irs_head = std::move(head);
    }
    model.bs.push_back(std::move(net));
  }
  return model;
}

std::vector<std::pair<std::string, const RealTensor*>> named_parameters(const GnnModel& model) {
  std::vector<std::pair<std::string, const RealTensor*>> out;
  visit_parameters(model, [&](std::string name, const RealTensor& t) {
    out.emplace_back(std::move(name), &t);
  });
  return out;
}

std::vector<RealTensor*> mutable_parameters(GnnModel& model) {
  std::vector<RealTensor*> out;
  visit_parameters(model, [&](const std::string&, RealTensor& t) { out.push_back(&t); });
  return out;
}

std::size_t parameter_count(const GnnModel& model) {
  std::size_t total = 0;
  for (const auto& [name, t] : named_parameters(model)) total += t->size();
  return total;
}

LocalCsi local_csi(const ChannelRealization& real, std::size_t i) {
  if (i >= real.num_bs) throw ShapeError("local_csi: BS index out of range");
  LocalCsi csi;
  csi.bs_index = i;
  for (std::size_t k = 0; k < real.num_users; ++k) {
    csi.direct.push_back(real.d(i, k));
    csi.cascaded.push_back(real.c(i, k));
  }
  return csi;
}

RealTensor input_features(const LocalCsi& csi, bool with_irs_node, double scale) {
  const std::size_t n_users = csi.num_users();
  const std::size_t m = csi.direct.front().rows();
  const std::size_t l = csi.cascaded.front().rows();
  const std::size_t width = 2 * m * (l + 1);
  const std::size_t offset = with_irs_node ? 1 : 0;
  RealTensor x = RealTensor::matrix(n_users + offset, width);
  for (std::size_t k = 0; k < n_users; ++k) {
    const std::size_t row = k + offset;
    const ComplexMatrix& d = csi.direct[k];
    const ComplexMatrix& c = csi.cascaded[k];
    for (std::size_t a = 0; a < m; ++a) {
      x(row, a) = scale * d(a, 0).real();
      x(row, m + a) = scale * d(a, 0).imag();
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t e = 0; e < l; ++e) {
        x(row, 2 * m + a * l + e) = scale * c(e, a).real();
        x(row, 2 * m + m * l + a * l + e) = scale * c(e, a).imag();
      }
    }
  }
  if (with_irs_node) {
    for (std::size_t j = 0; j < width; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_users; ++k) acc += x(k + 1, j);
      x(0, j) = acc / static_cast<double>(n_users);
    }
  }
  return x;
}

RealTensor input_features(const ChannelRealization& real, std::size_t i, bool with_irs_node,
                          double scale) {
  return input_features(local_csi(real, i), with_irs_node, scale);
}

ad::Var ParamBinder::operator()(const RealTensor& tensor) {
  ad::Var v = trainable_ ? tape_.parameter(tensor) : tape_.constant(tensor);
  if (trainable_) bound_.emplace_back(&tensor, v);
  return v;
}

std::vector<RealTensor> ParamBinder::gradients(const GnnModel& model) const {
  const auto params = named_parameters(model);
  std::unordered_map<const RealTensor*, std::size_t> index;
  std::vector<RealTensor> grads;
  grads.reserve(params.size());
  for (std::size_t n = 0; n < params.size(); ++n) {
    index.emplace(params[n].second, n);
    grads.emplace_back(params[n].second->shape(), 0.0);
  }
  for (const auto& [tensor, var] : bound_) {
    const auto it = index.find(tensor);
    if (it == index.end()) continue;
    RealTensor& g = grads[it->second];
    const RealTensor& adj = var.grad();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += adj[j];
  }
  return grads;
}

ad::Var mlp_forward(const Mlp& mlp, ad::Var x, ParamBinder& bind) {
  for (const Dense& d : mlp.layers) x = ad::lrelu(dense_forward(d, x, bind));
  return x;
}

ad::Var gnn_layer(const GraphLayer& layer, ad::Var x, ParamBinder& bind) {
  ad::Tape& tape = *x.tape();
  const std::size_t nodes = x.rows();
  const ad::Var messages = mlp_forward(layer.message, x, bind);
  const std::size_t d = messages.cols();

  std::vector<ad::Var> rows;
  rows.reserve(nodes);
  for (std::size_t k = 0; k < nodes; ++k) rows.push_back(ad::slice_rows(messages, k, k + 1));

  std::vector<ad::Var> aggregated;
  aggregated.reserve(nodes);
  std::vector<ad::Var> neighbours;
  for (std::size_t k = 0; k < nodes; ++k) {
    neighbours.clear();
    for (std::size_t j = 0; j < nodes; ++j) {
      if (j != k) neighbours.push_back(rows[j]);
    }
    if (neighbours.empty()) {
      aggregated.push_back(tape.constant(RealTensor::matrix(1, d)));
    } else {
      aggregated.push_back(ad::max_set(neighbours));
    }
  }
  const ad::Var pooled = ad::concat_rows(aggregated);
  const ad::Var joined[] = {pooled, x};
  return mlp_forward(layer.combine, ad::concat_cols(joined), bind);
}

BsOutput run_bs_network(const BsNetwork& net, const ModelShape& shape, const LocalCsi& csi,
                        ad::Tape& tape, ParamBinder& bind) {
  const bool with_irs = net.irs_head.has_value();
  const std::size_t n_users = csi.num_users();
  const std::size_t m = shape.num_antennas;
  if (n_users == 0) throw ShapeError("run_bs_network: no users");
  if (csi.direct.front().rows() != m || csi.cascaded.front().rows() != shape.num_elements) {
    throw ConfigError("run_bs_network: CSI dimensions do not match the model");
  }

  ad::Var x = tape.constant(input_features(csi, with_irs, shape.feature_scale));
  for (const GraphLayer& layer : net.layers) x = gnn_layer(layer, x, bind);

  const std::size_t first_user = with_irs ? 1 : 0;
  const ad::Var users = ad::slice_rows(x, first_user, first_user + n_users);
  const ad::Var raw = dense_forward(net.user_head, users, bind);  // K x 2M
  const ad::Var raw_re = ad::transpose(ad::slice_cols(raw, 0, m));
  const ad::Var raw_im = ad::transpose(ad::slice_cols(raw, m, 2 * m));

  BsOutput out;
  std::tie(out.w_re, out.w_im) = normalize_bs_power(raw_re, raw_im, shape.p_max_watts());
  if (with_irs) {
    const ad::Var irs = dense_forward(*net.irs_head, ad::slice_rows(x, 0, 1), bind);
    out.v = normalize_unit_modulus(irs);
  }
  return out;
}

void check_compatible(const GnnModel& model, const ChannelRealization& real) {
  if (real.num_bs != model.shape.num_bs) {
    throw ConfigError("model has " + std::to_string(model.shape.num_bs) + " BS networks, scenario has " +
                      std::to_string(real.num_bs) + " BSs");
  }
  if (real.num_antennas() != model.shape.num_antennas) {
    throw ConfigError("model expects M = " + std::to_string(model.shape.num_antennas));
  }
  if (real.num_elements() != model.shape.num_elements) {
    throw ConfigError("model expects L = " + std::to_string(model.shape.num_elements));
  }
}

TapeBeamformers forward_on_tape(const GnnModel& model, const ChannelRealization& real,
                                ad::Tape& tape, ParamBinder& bind) {
  check_compatible(model, real);
  TapeBeamformers bf;
  for (std::size_t i = 0; i < model.bs.size(); ++i) {
    BsOutput out = run_bs_network(model.bs[i], model.shape, local_csi(real, i), tape, bind);
    bf.w_re.push_back(out.w_re);
    bf.w_im.push_back(out.w_im);
    if (out.v) std::tie(bf.v_re, bf.v_im) = *out.v;
  }
  return bf;
}

BeamformingSolution forward(const GnnModel& model, const ChannelRealization& real) {
  ad::Tape tape;
  ParamBinder bind(tape, false);
  return to_solution(forward_on_tape(model, real, tape, bind));
}

}  // namespace irscf
