#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripscale {

/// Raised for malformed or inconsistent input data (bad files, invalid
/// triplets, degenerate matrices). The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered stimulus levels S_0..S_{n-1}, optionally with physical magnitudes.
class StimulusSet {
 public:
  explicit StimulusSet(std::vector<std::string> labels,
                       std::optional<std::vector<double>> values = std::nullopt);

  /// Labels "0".."n-1" and no physical values.
  static StimulusSet indexed(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::optional<std::vector<double>>& values() const { return values_; }

  /// Index of a label; throws DataError when unknown.
  std::size_t index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
  std::optional<std::vector<double>> values_;
};

/// Triplet question (ref; opt1, opt2): "is ref more similar to opt1 or opt2?"
struct Triplet {
  std::size_t ref = 0;
  std::size_t opt1 = 0;
  std::size_t opt2 = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

/// Throws DataError unless the indices are pairwise distinct and below n.
void validate_triplet(const Triplet& t, std::size_t n);

enum class Answer : std::int8_t { kOpt1 = 1, kOpt2 = -1, kUnanswered = 0 };

inline int answer_sign(Answer a) { return static_cast<int>(a); }

struct TripletResponse {
  Triplet triplet;
  Answer answer = Answer::kUnanswered;
  std::optional<double> rt_ms;
  std::optional<std::string> session_id;
  std::optional<int> repeat_index;

  bool answered() const { return answer != Answer::kUnanswered; }
};

using Responses = std::vector<TripletResponse>;

/// Fit provenance carried along with an embedding.
struct FitMeta {
  std::string engine;
  std::uint64_t seed = 0;
  double objective = 0.0;
  int iterations = 0;
  /// Stimuli that no response referenced; their coordinates are unconstrained.
  std::vector<std::size_t> unreferenced;
};

/// n points in R^d, one per row.
class Embedding {
 public:
  Embedding(Eigen::MatrixXd points, FitMeta meta = {});

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const FitMeta& meta() const { return meta_; }
  FitMeta& meta() { return meta_; }

  double squared_distance(std::size_t a, std::size_t b) const {
    return (points_.row(static_cast<Eigen::Index>(a)) -
            points_.row(static_cast<Eigen::Index>(b)))
        .squaredNorm();
  }

  /// First coordinate of every point (the scale values for d = 1).
  std::vector<double> coordinates_1d() const;

 private:
  Eigen::MatrixXd points_;
  FitMeta meta_;
};

/// Symmetric, zero-diagonal, nonnegative matrix of pairwise dissimilarities.
class DissimilarityMatrix {
 public:
  explicit DissimilarityMatrix(Eigen::MatrixXd values);

  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

/// Optimizer settings shared by every embedding engine.
struct EngineConfig {
  int dim = 1;
  int restarts = 10;
  int max_iters = 1000;
  double tolerance = 1e-7;
  std::uint64_t seed = 0;
  /// Student-t degrees of freedom, used by t-STE only.
  double alpha = 1.0;

  void validate() const;
};

/// R_t * sgn(|y_i - y_j|^2 - |y_i - y_k|^2) with the answer coded so that
/// +1 means the embedding agrees with the response, -1 disagrees, 0 is an
/// exact distance tie.
int consistency_sign(const Embedding& embedding, const TripletResponse& response);

/// "ref:opt1:opt2"; option order is kept since it carries meaning.
std::string canonical_triplet_id(const Triplet& t);

std::size_t max_stimulus_index(const Responses& responses);

/// Keeps answered responses only.
Responses answered_only(const Responses& responses);

}  // namespace tripscale
