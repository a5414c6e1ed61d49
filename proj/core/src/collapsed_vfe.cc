#include "mrfattn/collapsed_vfe.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mrfattn/csv.hpp"

namespace mrfattn {

double free_energy(const PairwiseMRF& mrf, const Means& mu) {
  mrf.nodes().check_means(mu);
  double f = 0.0;
  for (std::size_t i = 0; i < mrf.edge_vars().size(); ++i) f -= log_sum_exp(edge_logits(mrf, i, mu));
  return f - node_log_potential(mrf, mu);
}

namespace {

// Adds weight * d(x_t' W x_s)/d(latent) into acc for each latent endpoint.
void accumulate_edge_grad(const NodeSet& nodes, const Means& mu, const Edge& e, const Mat& w,
                          double weight, Means& acc) {
  if (nodes.is_latent(e.target)) acc[nodes.latent_slot(e.target)] += weight * (w * nodes.value(e.source, mu));
  if (nodes.is_latent(e.source)) {
    acc[nodes.latent_slot(e.source)] += weight * (w.transpose() * nodes.value(e.target, mu));
  }
}

Means zeros_like(const NodeSet& nodes) {
  return Means(nodes.num_latent(), Vec::Zero(static_cast<Eigen::Index>(nodes.dim())));
}

}  // namespace

Means free_energy_grad(const PairwiseMRF& mrf, const Means& mu) {
  const NodeSet& nodes = mrf.nodes();
  nodes.check_means(mu);
  const double beta = mrf.beta();
  Means grad = zeros_like(nodes);
  for (std::size_t i = 0; i < mrf.edge_vars().size(); ++i) {
    const EdgeVariable& ev = mrf.edge_vars()[i];
    const Vec post = softmax(edge_logits(mrf, i, mu));
    for (std::size_t c = 0; c < ev.size(); ++c) {
      const double p = post[static_cast<Eigen::Index>(c)];
      if (p == 0.0) continue;
      accumulate_edge_grad(nodes, mu, ev.candidates()[c], mrf.bilinear_of(ev), -beta * p, grad);
    }
  }
  if (mrf.potentials().node == NodePotential::quadratic) {
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += beta * mu[j];
  }
  return grad;
}

Means cccp_step(const PairwiseMRF& mrf, const Means& mu, FixedPointNormalization norm) {
  const NodeSet& nodes = mrf.nodes();
  nodes.check_means(mu);
  if (mrf.potentials().node != NodePotential::quadratic) {
    throw std::invalid_argument("CCCP requires quadratic node potentials");
  }
  Means next = zeros_like(nodes);
  std::vector<double> mass(nodes.num_latent(), 0.0);
  for (std::size_t i = 0; i < mrf.edge_vars().size(); ++i) {
    const EdgeVariable& ev = mrf.edge_vars()[i];
    const Vec post = softmax(edge_logits(mrf, i, mu));
    for (std::size_t c = 0; c < ev.size(); ++c) {
      const Edge& e = ev.candidates()[c];
      if (nodes.is_latent(e.source) && nodes.is_latent(e.target)) {
        throw std::invalid_argument("CCCP requires every candidate edge to have at most one latent endpoint");
      }
      const double p = post[static_cast<Eigen::Index>(c)];
      if (p == 0.0) continue;
      accumulate_edge_grad(nodes, mu, e, mrf.bilinear_of(ev), p, next);
      if (nodes.is_latent(e.target)) mass[nodes.latent_slot(e.target)] += p;
      if (nodes.is_latent(e.source)) mass[nodes.latent_slot(e.source)] += p;
    }
  }
  if (norm == FixedPointNormalization::weighted_mean) {
    for (std::size_t j = 0; j < next.size(); ++j) {
      if (mass[j] > 0.0) {
        next[j] /= mass[j];
      } else {
        next[j] = mu[j];
      }
    }
  }
  return next;
}

double max_abs(const Means& v) {
  double m = 0.0;
  for (const Vec& x : v) {
    if (x.size() > 0) m = std::max(m, x.cwiseAbs().maxCoeff());
  }
  return m;
}

CCCPState solve(const PairwiseMRF& mrf, Means mu0, FixedPointNormalization norm, double tol,
                int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  CCCPState st;
  st.tol = tol;
  st.max_iter = max_iter;
  st.mu = std::move(mu0);
  st.f_trace.push_back(free_energy(mrf, st.mu));
  st.grad_norm_trace.push_back(max_abs(free_energy_grad(mrf, st.mu)));
  if (!std::isfinite(st.f_trace.back())) throw NumericError("free energy is not finite at iteration 0");

  for (int t = 1; t <= max_iter; ++t) {
    Means next = cccp_step(mrf, st.mu, norm);
    for (const Vec& v : next) {
      if (!v.allFinite()) throw NumericError("latent means diverged at iteration " + std::to_string(t));
    }
    const double f = free_energy(mrf, next);
    if (!std::isfinite(f)) throw NumericError("free energy is not finite at iteration " + std::to_string(t));
    st.mu = std::move(next);
    st.iteration = t;
    const double prev = st.f_trace.back();
    st.f_trace.push_back(f);
    st.grad_norm_trace.push_back(max_abs(free_energy_grad(mrf, st.mu)));
    if (std::abs(f - prev) < tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

void write_trace_csv(std::ostream& os, const CCCPState& state) {
  for (std::size_t t = 0; t < state.f_trace.size(); ++t) {
    os << t << ',' << format_double(state.f_trace[t]) << ',' << format_double(state.grad_norm_trace[t])
       << '\n';
  }
}

}  // namespace mrfattn
