#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mrfattn/collapsed_vfe.hpp"
#include "mrfattn/mrf.hpp"

namespace mrfattn {

// Iterative attention mechanisms. Each one is a structural prior plus bilinear
// potentials handed to the collapsed free-energy engine; the *_step functions
// evaluate the resulting update directly and the *_mrf builders expose the
// equivalent model so that cccp_step can be run on it.

// ---------------------------------------------------------------------------
// Hopfield-style cross attention (associative memory)

struct HopfieldConfig {
  Mat patterns;  // n x d, one stored pattern per row
  Mat w_q;       // d_k x d
  Mat w_k;       // d_k x d
  double beta = 1.0;
  Vec query;  // initial state xi
};

/// Latent z (one node) choosing among the stored patterns, psi = z' W_Q' W_K x_j.
PairwiseMRF hopfield_mrf(const HopfieldConfig& cfg, const Vec& mu);

/// mu* = sum_j softmax_j(beta mu' W x_j) W x_j with W = W_Q' W_K.
Vec hopfield_step(const HopfieldConfig& cfg, const Vec& mu);

/// Iterates from the query until |dF| < tol. Returns the final state and trace.
std::pair<Vec, CCCPState> hopfield_retrieve(const HopfieldConfig& cfg, double tol = 1e-8,
                                            int max_iter = 100);

// ---------------------------------------------------------------------------
// Slot attention (softmax over slots)

enum class SlotInit { given, seeded };

struct SlotConfig {
  Mat inputs;  // n x d
  int num_slots = 1;
  Mat w;  // d x d bilinear form (Q'K)
  double beta = 1.0;
  SlotInit init = SlotInit::seeded;
  Mat initial;  // num_slots x d, used when init == given
  std::uint64_t seed = 0;
};

/// Given slots, or seeded Gaussian directions scaled to the mean input norm.
Mat initial_slots(const SlotConfig& cfg);

/// Input j chooses among slots, psi = z_i' W x_j.
PairwiseMRF slot_mrf(const SlotConfig& cfg, const Mat& slots);

/// num_slots x n; column j is softmax over slots of beta mu_i' W x_j.
Mat slot_weights(const SlotConfig& cfg, const Mat& slots);

Mat slot_step(const SlotConfig& cfg, const Mat& slots, FixedPointNormalization norm);

struct SlotResult {
  Mat slots;
  CCCPState state;
  std::vector<int> assignment;  // argmax slot per input
};

SlotResult run_slots(const SlotConfig& cfg, FixedPointNormalization norm, double tol = 1e-8,
                     int max_iter = 100);

// ---------------------------------------------------------------------------
// Block-slot attention (slots plus block-specific memories)

struct BlockSlotConfig {
  SlotConfig slots;
  std::vector<int> block_dims;  // sums to d
  std::vector<Mat> memories;    // per block, l_b x d_b
  /// Temperature of the memory softmax; defaults to slots.beta.
  std::optional<double> memory_beta;
};

/// Slot prior plus one edge variable per (slot, block) over that block's
/// memories. Memories enter as observed nodes zero-padded to d with a
/// block-selecting bilinear form, so psi = mu_i^(b) . m_k^(b). Only valid for
/// a shared temperature.
PairwiseMRF block_slot_mrf(const BlockSlotConfig& cfg, const Mat& slots);

/// Slot term (raw sum, softmax over slots) plus, per block, the memory term
/// sum_k softmax_k(beta_m mu_i^(b) . m_k^(b)) m_k^(b) written into block b.
Mat block_slot_step(const BlockSlotConfig& cfg, const Mat& slots);

/// Memory term only, for inspection.
Mat block_memory_term(const BlockSlotConfig& cfg, const Mat& slots);

std::vector<Vec> mat_to_means(const Mat& rows);
Mat means_to_mat(const Means& mu);

}  // namespace mrfattn
