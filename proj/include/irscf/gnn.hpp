// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "irscf/channel.hpp"
#include "irscf/config.hpp"
#include "irscf/rate.hpp"
#include "irscf/tape.hpp"

namespace irscf {

/// Affine map x W + b on row vectors; weight is fan_in x fan_out.
struct Dense {
  RealTensor weight;
  RealTensor bias;

  std::size_t fan_in() const { return weight.rows(); }
  std::size_t fan_out() const { return weight.cols(); }
};

/// Stack of affine maps, each followed by LReLU.
struct Mlp {
  std::vector<Dense> layers;
};

/// One round of message passing: message MLP on neighbours, element-wise
/// max over the neighbourhood, then the combine MLP on [max || self].
struct GraphLayer {
  Mlp message;
  Mlp combine;
};

/// The network owned by one BS. Only the IRS-controlling BS has an IRS head.
struct BsNetwork {
  std::vector<GraphLayer> layers;
  Dense user_head;
  std::optional<Dense> irs_head;
};

struct ModelShape {
  std::size_t num_bs = 3;
  std::size_t num_antennas = 4;
  std::size_t num_elements = 64;
  std::vector<std::size_t> widths{64, 32};
  std::size_t num_layers = 2;
  std::size_t irs_bs = 0;
  double p_max_dbm = 15.0;
  /// Multiplies raw CSI before it enters the network.
  double feature_scale = 1.0;

  std::size_t input_width() const { return 2 * num_antennas * (num_elements + 1); }
  std::size_t feature_width() const { return widths.back(); }
  double p_max_watts() const { return dbm_to_watts(p_max_dbm); }

  bool operator==(const ModelShape&) const = default;
};

/// Per-BS parameter sets of the distributed GNN. The user count is not part of
/// the model: the same weights run on any K.
struct GnnModel {
  ModelShape shape;
  std::vector<BsNetwork> bs;
};

/// Default CSI scaling sqrt(p_max) / noise amplitude, which brings channel
/// entries to O(1) for the reference geometry.
double default_feature_scale(const SystemConfig& cfg);

ModelShape model_shape_for(const SystemConfig& cfg, std::vector<std::size_t> widths,
                           std::size_t num_layers = 2, std::size_t irs_bs = 0);

/// Uniform weights in +-sqrt(2 / fan_in), zero biases, IRS head bias 0.1 on
/// the first L slots.
GnnModel init_model(const ModelShape& shape, Rng& rng);

/// Parameters in a fixed order with stable names such as
/// "bs0.layer1.message.0.weight".
std::vector<std::pair<std::string, const RealTensor*>> named_parameters(const GnnModel& model);
std::vector<RealTensor*> mutable_parameters(GnnModel& model);
std::size_t parameter_count(const GnnModel& model);

/// The CSI one BS observes: its own direct and cascaded channels to every user.
struct LocalCsi {
  std::size_t bs_index = 0;
  std::vector<ComplexMatrix> direct;    // d_{i,k}
  std::vector<ComplexMatrix> cascaded;  // C_{i,k}
  std::size_t num_users() const { return direct.size(); }
};

LocalCsi local_csi(const ChannelRealization& real, std::size_t i);

/// Layer-0 node features, one row per node. Users are rows
/// [Re d^T, Im d^T, vec(Re C)^T, vec(Im C)^T] (vec stacks columns). With
/// `with_irs_node` an extra first row holds the element-wise mean of the users.
RealTensor input_features(const LocalCsi& csi, bool with_irs_node, double scale = 1.0);
RealTensor input_features(const ChannelRealization& real, std::size_t i, bool with_irs_node,
                          double scale = 1.0);

/// Creates tape leaves for model tensors. Trainable binders register
/// parameters and remember which tensor each leaf came from.
class ParamBinder {
 public:
  ParamBinder(ad::Tape& tape, bool trainable) : tape_(tape), trainable_(trainable) {}

  ad::Var operator()(const RealTensor& tensor);
  const std::vector<std::pair<const RealTensor*, ad::Var>>& bound() const { return bound_; }

  /// Gradients aligned with named_parameters(model); unbound tensors get zeros.
  std::vector<RealTensor> gradients(const GnnModel& model) const;

 private:
  ad::Tape& tape_;
  bool trainable_;
  std::vector<std::pair<const RealTensor*, ad::Var>> bound_;
};

ad::Var mlp_forward(const Mlp& mlp, ad::Var x, ParamBinder& bind);

/// One message-passing round over a complete graph on the rows of `x`.
/// A node without neighbours aggregates the zero vector.
ad::Var gnn_layer(const GraphLayer& layer, ad::Var x, ParamBinder& bind);

struct BsOutput {
  ad::Var w_re;  // M x K, already power-normalized
  ad::Var w_im;
  std::optional<std::pair<ad::Var, ad::Var>> v;  // 1 x L rows, unit modulus
};

/// Inference at one BS from its local CSI only.
BsOutput run_bs_network(const BsNetwork& net, const ModelShape& shape, const LocalCsi& csi,
                        ad::Tape& tape, ParamBinder& bind);

/// Runs every BS network and assembles the beamformers on `tape`.
TapeBeamformers forward_on_tape(const GnnModel& model, const ChannelRealization& real,
                                ad::Tape& tape, ParamBinder& bind);

BeamformingSolution forward(const GnnModel& model, const ChannelRealization& real);

/// Throws ConfigError when the model was built for other dimensions.
void check_compatible(const GnnModel& model, const ChannelRealization& real);

}  // namespace irscf
