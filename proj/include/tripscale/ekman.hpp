#pragma once

#include "tripscale/core.hpp"
#include "tripscale/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tripscale {

struct SimilarityTable {
  std::vector<std::string> labels;  // wavelengths in nm, as written in the header
  Eigen::MatrixXd similarity;
};

/// Square similarity matrix with a header row of labels. Throws DataError on
/// ragged rows, a non-square shape, or asymmetry.
SimilarityTable read_similarity_csv(std::istream& in);

/// delta = 1 - s off the diagonal, 0 on it. Throws DataError when every
/// off-diagonal dissimilarity is equal (no order information).
DissimilarityMatrix similarity_to_dissimilarity(const SimilarityTable& table);

/// Two-dimensional ground truth: NMDS (d = 2) of the converted table, then a
/// similarity transform placing the configuration centred in [0.05, 0.95]^2.
ScalingFunctionSpec ingest_color_similarity(const SimilarityTable& table, const EngineConfig& config);

/// Path of the bundled frozen ground-truth table.
std::string default_color_ground_truth_path();
std::string default_color_similarity_path();

}  // namespace tripscale
