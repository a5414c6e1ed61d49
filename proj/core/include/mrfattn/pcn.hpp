#pragma once

#include <vector>

#include "mrfattn/numerics.hpp"

namespace mrfattn {

// Predictive coding on a layered network of scalar nodes. Layer 0 is observed.
// Every node j of layer l >= 1 receives candidate edges from the nodes i of
// layer l-1; edge (i, j) predicts z_j as w_ij z_i with error
//   eps_ij = z_j - w_ij z_i
// and precision k_j of the receiver.
//
// dense_baseline energy:  E(z) = 1/2 sum_{ij} k_j eps_ij^2
// marginalized energy:    F(z) = -sum_j ln sum_i p(i) exp(-1/2 beta k_j eps_ij^2)
// where p is uniform over the allowed senders of j. With one allowed sender per
// receiver F = beta * E.
//
// Gradients are true gradients of these energies. The usual dynamics
// dz/dt = -dE/dz therefore read  sum_in k eps - sum_out k eps w  for a node.

enum class PcnMode { dense_baseline, marginalized };

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct PcnLayer {
  Mat weights;     // size_l x size_{l-1}; weights(j, i) = w_ij
  Vec precisions;  // size_l, all positive
  Mask allowed;    // same shape as weights; empty means every edge is a candidate
};

/// Per-layer node values, index 0 = observed layer.
using LayerValues = std::vector<Vec>;

class PcnNetwork {
 public:
  /// `layers[l - 1]` connects layer l - 1 to layer l.
  PcnNetwork(std::vector<int> sizes, std::vector<PcnLayer> layers, PcnMode mode, double beta = 1.0);

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size(); }
  const PcnLayer& layer(std::size_t l) const { return layers_[l - 1]; }
  PcnMode mode() const { return mode_; }
  double beta() const { return beta_; }
  bool is_candidate(std::size_t l, Eigen::Index receiver, Eigen::Index sender) const;

  void check_values(const LayerValues& z) const;

 private:
  std::vector<int> sizes_;
  std::vector<PcnLayer> layers_;
  PcnMode mode_;
  double beta_;
};

struct PredictionError {
  std::size_t layer;  // receiving layer
  Eigen::Index sender;
  Eigen::Index receiver;
  double error;
};

/// One entry per candidate edge, ordered by layer, receiver, sender.
std::vector<PredictionError> prediction_errors(const PcnNetwork& net, const LayerValues& z);

double pcn_baseline_energy(const PcnNetwork& net, const LayerValues& z);
double pcn_marginal_energy(const PcnNetwork& net, const LayerValues& z);
/// Energy of the network's own mode.
double pcn_energy(const PcnNetwork& net, const LayerValues& z);

LayerValues pcn_baseline_grad(const PcnNetwork& net, const LayerValues& z);
LayerValues pcn_marginal_grad(const PcnNetwork& net, const LayerValues& z);
LayerValues pcn_grad(const PcnNetwork& net, const LayerValues& z);

/// Posterior over senders for every receiver: entry l - 1 is size_l x size_{l-1}
/// with rows summing to one (zeros at non-candidates).
std::vector<Mat> pcn_sender_weights(const PcnNetwork& net, const LayerValues& z);

struct RelaxTrace {
  LayerValues values;
  std::vector<double> energy;  // before the first step and after every step
};

/// Euler steps z <- z - step_size * dF/dz on layers 1..N, layer 0 clamped to
/// `observations`. Throws NumericError on a non-finite energy.
RelaxTrace relax(const PcnNetwork& net, const Vec& observations, LayerValues init, int steps,
                 double step_size);

}  // namespace mrfattn
