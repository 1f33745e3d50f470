#pragma once

#include "tripscale/core.hpp"
#include "tripscale/ste.hpp"

#include <vector>

namespace tripscale {

/// Quadruplet question (a,b; c,d): is |psi_a - psi_b| larger than |psi_c - psi_d|?
struct QuadrupletResponse {
  std::size_t a = 0, b = 0, c = 0, d = 0;
  /// R_q = 1: the first pair was judged to differ more.
  bool first_larger = false;
};

/// Monotone 1-D scale with psi.front() = 0 and psi.back() = 1.
struct MldsScale {
  std::vector<double> psi;
  double sigma_hat = 0.0;
  double loglik = 0.0;
};

struct MldsFit {
  MldsScale scale;
  FitReport report;

  /// The scale as a one-dimensional embedding.
  Embedding embedding() const;
};

/// True for the MLDS-valid form (j; i, k) with i < j < k.
bool is_mlds_valid(const Triplet& t);

/// Maps a triplet response (i; j, k) onto the quadruplet (i,j; i,k). Answer
/// +1 (j closer) becomes R_q = 0.
QuadrupletResponse to_quadruplet(const TripletResponse& r);

/// Negative log-likelihood of the probit difference model at (psi, sigma).
double mlds_negloglik(const std::vector<double>& psi, double sigma,
                      const std::vector<QuadrupletResponse>& data);

/// Maximum-likelihood difference scaling from MLDS-valid triplets. Throws
/// DataError naming the first triplet that is not of the form (j; i, k), i<j<k.
MldsFit fit_mlds(const Responses& responses, const EngineConfig& config, std::size_t n = 0);

/// Generic quadruplet entry point; stimuli are assumed ordered by index.
MldsFit fit_mlds_quadruplets(const std::vector<QuadrupletResponse>& data, const EngineConfig& config,
                             std::size_t n = 0);

/// MLDS on arbitrary triplets through to_quadruplet. Used when a triplet set
/// mixes in non-valid questions (e.g. uniformly sampled general triplets).
MldsFit fit_mlds_any(const Responses& responses, const EngineConfig& config, std::size_t n = 0);

}  // namespace tripscale
