#include "mrfattn/pcn.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mrfattn {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

LayerValues zeros_like(const PcnNetwork& net) {
  LayerValues out;
  for (int s : net.sizes()) out.push_back(Vec::Zero(s));
  return out;
}

double edge_error(const PcnNetwork& net, const LayerValues& z, std::size_t l, Eigen::Index j, Eigen::Index i) {
  return z[l][j] - net.layer(l).weights(j, i) * z[l - 1][i];
}

}  // namespace

PcnNetwork::PcnNetwork(std::vector<int> sizes, std::vector<PcnLayer> layers, PcnMode mode, double beta)
    : sizes_(std::move(sizes)), layers_(std::move(layers)), mode_(mode), beta_(beta) {
  require(sizes_.size() >= 2, "network needs an observed layer and at least one hidden layer");
  require(layers_.size() + 1 == sizes_.size(), "need one connection block per hidden layer");
  require(beta_ > 0.0 && std::isfinite(beta_), "temperature beta must be positive and finite");
  for (int s : sizes_) require(s >= 1, "layer sizes must be positive");
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const PcnLayer& L = layers_[l - 1];
    const std::string tag = "layer " + std::to_string(l);
    require(L.weights.rows() == sizes_[l] && L.weights.cols() == sizes_[l - 1],
            tag + ": weights must be size_l x size_{l-1}");
    require(L.weights.allFinite(), tag + ": weights must be finite");
    require(L.precisions.size() == sizes_[l], tag + ": need one precision per node");
    require((L.precisions.array() > 0.0).all() && L.precisions.allFinite(), tag + ": precisions must be positive");
    require(L.allowed.size() == 0 ||
                (L.allowed.rows() == L.weights.rows() && L.allowed.cols() == L.weights.cols()),
            tag + ": candidate mask must match the weight shape");
  }
}

bool PcnNetwork::is_candidate(std::size_t l, Eigen::Index receiver, Eigen::Index sender) const {
  const Mask& m = layers_[l - 1].allowed;
  return m.size() == 0 || m(receiver, sender);
}

void PcnNetwork::check_values(const LayerValues& z) const {
  require(z.size() == sizes_.size(), "need values for every layer");
  for (std::size_t l = 0; l < z.size(); ++l) {
    require(z[l].size() == sizes_[l], "layer " + std::to_string(l) + " has the wrong size");
  }
}

std::vector<PredictionError> prediction_errors(const PcnNetwork& net, const LayerValues& z) {
  net.check_values(z);
  std::vector<PredictionError> out;
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    for (Eigen::Index j = 0; j < net.sizes()[l]; ++j) {
      for (Eigen::Index i = 0; i < net.sizes()[l - 1]; ++i) {
        if (net.is_candidate(l, j, i)) out.push_back({l, i, j, edge_error(net, z, l, j, i)});
      }
    }
  }
  return out;
}

double pcn_baseline_energy(const PcnNetwork& net, const LayerValues& z) {
  double e = 0.0;
  for (const PredictionError& pe : prediction_errors(net, z)) {
    e += 0.5 * net.layer(pe.layer).precisions[pe.receiver] * pe.error * pe.error;
  }
  return e;
}

LayerValues pcn_baseline_grad(const PcnNetwork& net, const LayerValues& z) {
  LayerValues g = zeros_like(net);
  for (const PredictionError& pe : prediction_errors(net, z)) {
    const PcnLayer& L = net.layer(pe.layer);
    const double ke = L.precisions[pe.receiver] * pe.error;
    g[pe.layer][pe.receiver] += ke;
    g[pe.layer - 1][pe.sender] -= ke * L.weights(pe.receiver, pe.sender);
  }
  return g;
}

namespace {

// Logits -1/2 beta k_j eps_ij^2 + ln p(i) for the candidate senders of one
// receiver; non-candidates are -inf.
Vec receiver_logits(const PcnNetwork& net, const LayerValues& z, std::size_t l, Eigen::Index j,
                    int& num_candidates) {
  const Eigen::Index n = net.sizes()[l - 1];
  num_candidates = 0;
  for (Eigen::Index i = 0; i < n; ++i) num_candidates += net.is_candidate(l, j, i) ? 1 : 0;
  Vec logits = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  if (num_candidates == 0) return logits;
  const double log_prior = -std::log(static_cast<double>(num_candidates));
  const double k = net.layer(l).precisions[j];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!net.is_candidate(l, j, i)) continue;
    const double e = edge_error(net, z, l, j, i);
    logits[i] = log_prior - 0.5 * net.beta() * k * e * e;
  }
  return logits;
}

}  // namespace

double pcn_marginal_energy(const PcnNetwork& net, const LayerValues& z) {
  net.check_values(z);
  double f = 0.0;
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    for (Eigen::Index j = 0; j < net.sizes()[l]; ++j) {
      int nc = 0;
      const Vec logits = receiver_logits(net, z, l, j, nc);
      if (nc > 0) f -= log_sum_exp(logits);
    }
  }
  return f;
}

std::vector<Mat> pcn_sender_weights(const PcnNetwork& net, const LayerValues& z) {
  net.check_values(z);
  std::vector<Mat> out;
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    Mat w = Mat::Zero(net.sizes()[l], net.sizes()[l - 1]);
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      int nc = 0;
      const Vec logits = receiver_logits(net, z, l, j, nc);
      if (nc > 0) w.row(j) = softmax(logits).transpose();
    }
    out.push_back(std::move(w));
  }
  return out;
}

LayerValues pcn_marginal_grad(const PcnNetwork& net, const LayerValues& z) {
  const std::vector<Mat> weights = pcn_sender_weights(net, z);
  LayerValues g = zeros_like(net);
  const double beta = net.beta();
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    const PcnLayer& L = net.layer(l);
    const Mat& s = weights[l - 1];
    for (Eigen::Index j = 0; j < s.rows(); ++j) {
      for (Eigen::Index i = 0; i < s.cols(); ++i) {
        if (s(j, i) == 0.0) continue;
        const double ke = beta * L.precisions[j] * edge_error(net, z, l, j, i);
        g[l][j] += s(j, i) * ke;
        g[l - 1][i] -= s(j, i) * ke * L.weights(j, i);
      }
    }
  }
  return g;
}

double pcn_energy(const PcnNetwork& net, const LayerValues& z) {
  return net.mode() == PcnMode::marginalized ? pcn_marginal_energy(net, z) : pcn_baseline_energy(net, z);
}

LayerValues pcn_grad(const PcnNetwork& net, const LayerValues& z) {
  return net.mode() == PcnMode::marginalized ? pcn_marginal_grad(net, z) : pcn_baseline_grad(net, z);
}

RelaxTrace relax(const PcnNetwork& net, const Vec& observations, LayerValues init, int steps,
                 double step_size) {
  require(step_size > 0.0, "step_size must be positive");
  require(steps >= 0, "steps must be non-negative");
  net.check_values(init);
  require(observations.size() == net.sizes()[0], "observations must match the size of layer 0");
  RelaxTrace tr;
  tr.values = std::move(init);
  tr.values[0] = observations;
  tr.energy.push_back(pcn_energy(net, tr.values));
  for (int t = 1; t <= steps; ++t) {
    const LayerValues g = pcn_grad(net, tr.values);
    for (std::size_t l = 1; l < tr.values.size(); ++l) tr.values[l] -= step_size * g[l];
    const double e = pcn_energy(net, tr.values);
    if (!std::isfinite(e)) throw NumericError("PCN energy is not finite at step " + std::to_string(t));
    tr.energy.push_back(e);
  }
  return tr;
}

}  // namespace mrfattn
