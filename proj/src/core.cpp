#include "tripscale/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tripscale {

StimulusSet::StimulusSet(std::vector<std::string> labels,
                         std::optional<std::vector<double>> values)
    : labels_(std::move(labels)), values_(std::move(values)) {
  if (labels_.size() < 3) throw DataError("a stimulus set needs at least 3 levels");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw DataError("stimulus labels must be unique");
  if (values_) {
    if (values_->size() != labels_.size())
      throw DataError("stimulus values and labels differ in length");
    for (std::size_t i = 1; i < values_->size(); ++i)
      if (!((*values_)[i] > (*values_)[i - 1]))
        throw DataError("stimulus values must be strictly increasing");
  }
}

StimulusSet StimulusSet::indexed(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return StimulusSet(std::move(labels));
}

std::size_t StimulusSet::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("unknown stimulus label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

void validate_triplet(const Triplet& t, std::size_t n) {
  if (t.ref >= n || t.opt1 >= n || t.opt2 >= n)
    throw DataError("triplet " + canonical_triplet_id(t) + " has an index outside [0, " +
                    std::to_string(n) + ")");
  if (t.ref == t.opt1 || t.ref == t.opt2 || t.opt1 == t.opt2)
    throw DataError("triplet " + canonical_triplet_id(t) + " repeats a stimulus");
}

Embedding::Embedding(Eigen::MatrixXd points, FitMeta meta)
    : points_(std::move(points)), meta_(std::move(meta)) {
  if (points_.cols() < 1) throw DataError("embedding dimension must be at least 1");
  if (!points_.allFinite()) throw DataError("embedding has non-finite coordinates");
}

std::vector<double> Embedding::coordinates_1d() const {
  std::vector<double> out(size());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) out[static_cast<std::size_t>(i)] = points_(i, 0);
  return out;
}

DissimilarityMatrix::DissimilarityMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw DataError("dissimilarity matrix must be square");
  if (!values_.allFinite()) throw DataError("dissimilarity matrix has non-finite entries");
  const Eigen::Index n = values_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values_(i, i) != 0.0) throw DataError("dissimilarity matrix needs a zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (values_(i, j) < 0.0) throw DataError("dissimilarities must be nonnegative");
      if (values_(i, j) != values_(j, i)) throw DataError("dissimilarity matrix is not symmetric");
    }
  }
}

void EngineConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
}

int consistency_sign(const Embedding& embedding, const TripletResponse& response) {
  if (!response.answered()) throw DataError("consistency of an unanswered response is undefined");
  validate_triplet(response.triplet, embedding.size());
  const double near = embedding.squared_distance(response.triplet.ref, response.triplet.opt1);
  const double far = embedding.squared_distance(response.triplet.ref, response.triplet.opt2);
  // Answer +1 claims opt1 is the closer option.
  const int geometry = far > near ? 1 : (far < near ? -1 : 0);
  return answer_sign(response.answer) * geometry;
}

std::string canonical_triplet_id(const Triplet& t) {
  return std::to_string(t.ref) + ":" + std::to_string(t.opt1) + ":" + std::to_string(t.opt2);
}

std::size_t max_stimulus_index(const Responses& responses) {
  std::size_t m = 0;
  for (const auto& r : responses)
    m = std::max({m, r.triplet.ref, r.triplet.opt1, r.triplet.opt2});
  return m;
}

Responses answered_only(const Responses& responses) {
  Responses out;
  std::copy_if(responses.begin(), responses.end(), std::back_inserter(out),
               [](const TripletResponse& r) { return r.answered(); });
  return out;
}

}  // namespace tripscale
