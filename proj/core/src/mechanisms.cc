#include "mrfattn/mechanisms.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace mrfattn {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

Mat hopfield_bilinear(const HopfieldConfig& cfg) {
  const Eigen::Index d = cfg.patterns.cols();
  require(cfg.patterns.rows() >= 1, "hopfield needs at least one stored pattern");
  require(cfg.w_q.cols() == d && cfg.w_k.cols() == d && cfg.w_q.rows() == cfg.w_k.rows(),
          "W_Q and W_K must both be d_k x d");
  return cfg.w_q.transpose() * cfg.w_k;
}

void check_slot_config(const SlotConfig& cfg, const Mat& slots) {
  const Eigen::Index d = cfg.inputs.cols();
  require(cfg.inputs.rows() >= 1, "slot attention needs at least one input");
  require(cfg.num_slots >= 1, "slot attention needs at least one slot");
  require(cfg.w.rows() == d && cfg.w.cols() == d, "slot bilinear form must be d x d");
  require(slots.rows() == cfg.num_slots && slots.cols() == d, "slots must be num_slots x d");
}

}  // namespace

std::vector<Vec> mat_to_means(const Mat& rows) { return rows_of(rows); }

Mat means_to_mat(const Means& mu) { return stack_rows(mu); }

// ---------------------------------------------------------------------------

PairwiseMRF hopfield_mrf(const HopfieldConfig& cfg, const Vec& mu) {
  const Mat w = hopfield_bilinear(cfg);
  const auto n = static_cast<std::size_t>(cfg.patterns.rows());
  std::vector<Edge> cands;
  for (std::size_t j = 0; j < n; ++j) cands.push_back({j, n});
  std::vector<EdgeVariable> evs{EdgeVariable::uniform(std::move(cands))};
  return PairwiseMRF(NodeSet(rows_of(cfg.patterns), {mu}), std::move(evs),
                     PotentialSpec{NodePotential::quadratic, {w}}, cfg.beta);
}

Vec hopfield_step(const HopfieldConfig& cfg, const Vec& mu) {
  const Mat w = hopfield_bilinear(cfg);
  require(mu.size() == cfg.patterns.cols(), "state must have dimension d");
  const Eigen::Index n = cfg.patterns.rows();
  Mat mapped(cfg.patterns.cols(), n);  // column j = W x_j
  Vec logits(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    mapped.col(j) = w * row_vec(cfg.patterns, j);
    logits[j] = mu.dot(mapped.col(j));
  }
  return mapped * softmax(logits, cfg.beta);
}

std::pair<Vec, CCCPState> hopfield_retrieve(const HopfieldConfig& cfg, double tol, int max_iter) {
  const PairwiseMRF mrf = hopfield_mrf(cfg, cfg.query);
  CCCPState st = solve(mrf, {cfg.query}, FixedPointNormalization::raw_sum, tol, max_iter);
  Vec out = st.mu.front();
  return {std::move(out), std::move(st)};
}

// ---------------------------------------------------------------------------

Mat initial_slots(const SlotConfig& cfg) {
  if (cfg.init == SlotInit::given) {
    check_slot_config(cfg, cfg.initial);
    return cfg.initial;
  }
  const Eigen::Index d = cfg.inputs.cols();
  require(cfg.num_slots >= 1, "slot attention needs at least one slot");
  require(cfg.inputs.rows() >= 1, "slot attention needs at least one input");
  double scale = cfg.inputs.rowwise().norm().mean();
  if (!(scale > 0.0)) scale = 1.0;
  SeededRng rng(cfg.seed);
  Mat slots(cfg.num_slots, d);
  for (Eigen::Index i = 0; i < slots.rows(); ++i) {
    Vec g(d);
    do {
      for (Eigen::Index a = 0; a < d; ++a) g[a] = rng.normal();
    } while (g.norm() == 0.0);
    slots.row(i) = (scale / g.norm()) * g.transpose();
  }
  return slots;
}

PairwiseMRF slot_mrf(const SlotConfig& cfg, const Mat& slots) {
  check_slot_config(cfg, slots);
  const auto n = static_cast<std::size_t>(cfg.inputs.rows());
  const auto m = static_cast<std::size_t>(cfg.num_slots);
  std::vector<EdgeVariable> evs;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Edge> cands;
    for (std::size_t i = 0; i < m; ++i) cands.push_back({j, n + i});
    evs.push_back(EdgeVariable::uniform(std::move(cands)));
  }
  return PairwiseMRF(NodeSet(rows_of(cfg.inputs), rows_of(slots)), std::move(evs),
                     PotentialSpec{NodePotential::quadratic, {cfg.w}}, cfg.beta);
}

Mat slot_weights(const SlotConfig& cfg, const Mat& slots) {
  check_slot_config(cfg, slots);
  const Mat mapped = cfg.inputs * cfg.w.transpose();  // row j = (W x_j)'
  const Mat logits = slots * mapped.transpose();      // (i, j) = mu_i' W x_j
  Mat weights(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) weights.col(j) = softmax(logits.col(j), cfg.beta);
  return weights;
}

Mat slot_step(const SlotConfig& cfg, const Mat& slots, FixedPointNormalization norm) {
  const Mat weights = slot_weights(cfg, slots);
  const Mat mapped = cfg.inputs * cfg.w.transpose();
  Mat next = weights * mapped;
  if (norm == FixedPointNormalization::weighted_mean) {
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
      const double mass = weights.row(i).sum();
      if (mass > 0.0) {
        next.row(i) /= mass;
      } else {
        next.row(i) = slots.row(i);
      }
    }
  }
  return next;
}

SlotResult run_slots(const SlotConfig& cfg, FixedPointNormalization norm, double tol, int max_iter) {
  const Mat init = initial_slots(cfg);
  const PairwiseMRF mrf = slot_mrf(cfg, init);
  SlotResult res;
  res.state = solve(mrf, mat_to_means(init), norm, tol, max_iter);
  res.slots = means_to_mat(res.state.mu);
  const Mat weights = slot_weights(cfg, res.slots);
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    Eigen::Index best = 0;
    weights.col(j).maxCoeff(&best);
    res.assignment.push_back(static_cast<int>(best));
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::Index> block_offsets(const BlockSlotConfig& cfg) {
  const Eigen::Index d = cfg.slots.inputs.cols();
  require(!cfg.block_dims.empty(), "block partition is empty");
  require(cfg.memories.size() == cfg.block_dims.size(), "need one memory matrix per block");
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < cfg.block_dims.size(); ++b) {
    require(cfg.block_dims[b] >= 1, "block dimensions must be positive");
    offsets.push_back(at);
    at += cfg.block_dims[b];
    const Mat& mem = cfg.memories[b];
    require(mem.rows() == 0 || mem.cols() == cfg.block_dims[b],
            "memories of block " + std::to_string(b) + " must have the block's dimension");
  }
  require(at == d, "block partition must cover the slot dimension exactly");
  return offsets;
}

}  // namespace

PairwiseMRF block_slot_mrf(const BlockSlotConfig& cfg, const Mat& slots) {
  const SlotConfig& sc = cfg.slots;
  check_slot_config(sc, slots);
  const auto offsets = block_offsets(cfg);
  if (cfg.memory_beta && *cfg.memory_beta != sc.beta) {
    throw std::invalid_argument("block-slot model needs a shared temperature for slots and memories");
  }
  const Eigen::Index d = sc.inputs.cols();
  const auto n = static_cast<std::size_t>(sc.inputs.rows());
  const auto m = static_cast<std::size_t>(sc.num_slots);

  std::vector<Vec> observed = rows_of(sc.inputs);
  PotentialSpec pot{NodePotential::quadratic, {sc.w}};
  std::vector<std::vector<std::size_t>> memory_nodes(cfg.block_dims.size());
  for (std::size_t b = 0; b < cfg.block_dims.size(); ++b) {
    Mat selector = Mat::Zero(d, d);
    selector.diagonal().segment(offsets[b], cfg.block_dims[b]).setOnes();
    pot.bilinears.push_back(std::move(selector));
    for (Eigen::Index k = 0; k < cfg.memories[b].rows(); ++k) {
      Vec padded = Vec::Zero(d);
      padded.segment(offsets[b], cfg.block_dims[b]) = row_vec(cfg.memories[b], k);
      memory_nodes[b].push_back(observed.size());
      observed.push_back(std::move(padded));
    }
  }
  const std::size_t first_slot = observed.size();

  std::vector<EdgeVariable> evs;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Edge> cands;
    for (std::size_t i = 0; i < m; ++i) cands.push_back({j, first_slot + i});
    evs.push_back(EdgeVariable::uniform(std::move(cands), 0));
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t b = 0; b < memory_nodes.size(); ++b) {
      if (memory_nodes[b].empty()) continue;
      std::vector<Edge> cands;
      for (std::size_t node : memory_nodes[b]) cands.push_back({node, first_slot + i});
      evs.push_back(EdgeVariable::uniform(std::move(cands), 1 + b));
    }
  }
  return PairwiseMRF(NodeSet(std::move(observed), rows_of(slots)), std::move(evs), std::move(pot),
                     sc.beta);
}

Mat block_memory_term(const BlockSlotConfig& cfg, const Mat& slots) {
  check_slot_config(cfg.slots, slots);
  const auto offsets = block_offsets(cfg);
  const double beta = cfg.memory_beta.value_or(cfg.slots.beta);
  Mat term = Mat::Zero(slots.rows(), slots.cols());
  for (Eigen::Index i = 0; i < slots.rows(); ++i) {
    for (std::size_t b = 0; b < cfg.block_dims.size(); ++b) {
      const Mat& mem = cfg.memories[b];
      if (mem.rows() == 0) continue;
      const Vec block = slots.row(i).segment(offsets[b], cfg.block_dims[b]).transpose();
      const Vec w = softmax(mem * block, beta);
      term.row(i).segment(offsets[b], cfg.block_dims[b]) = (mem.transpose() * w).transpose();
    }
  }
  return term;
}

Mat block_slot_step(const BlockSlotConfig& cfg, const Mat& slots) {
  return slot_step(cfg.slots, slots, FixedPointNormalization::raw_sum) + block_memory_term(cfg, slots);
}

}  // namespace mrfattn
