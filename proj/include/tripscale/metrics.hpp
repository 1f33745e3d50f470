#pragma once

#include "tripscale/core.hpp"

#include <span>
#include <vector>

namespace tripscale {

/// Fraction of responses the embedding contradicts; exact distance ties
/// count half. Throws DataError on an empty set or unanswered responses.
double triplet_error(const Embedding& embedding, const Responses& responses);

/// Min-max maps psi_hat onto [0,1], then keeps it or its reflection 1 - x,
/// whichever is closer (MSE) to psi_true.
std::vector<double> normalize_scale_1d(std::span<const double> psi_hat,
                                       std::span<const double> psi_true);

/// Step 1 of normalize_scale_1d only: min-max to [0,1] without reflection.
std::vector<double> minmax_scale(std::span<const double> values);

double mse_1d(std::span<const double> a, std::span<const double> b);

}  // namespace tripscale
