#include "tripscale/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace tripscale {

double triplet_error(const Embedding& embedding, const Responses& responses) {
  if (responses.empty()) throw DataError("triplet error of an empty response set");
  double errors = 0.0;
  for (const auto& r : responses) {
    const int s = consistency_sign(embedding, r);
    if (s < 0) errors += 1.0;
    else if (s == 0) errors += 0.5;
  }
  return errors / static_cast<double>(responses.size());
}

std::vector<double> minmax_scale(std::span<const double> values) {
  if (values.size() < 2) throw DataError("scale normalization needs at least 2 values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw DataError("cannot normalize a constant scale");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

std::vector<double> normalize_scale_1d(std::span<const double> psi_hat,
                                       std::span<const double> psi_true) {
  if (psi_hat.size() != psi_true.size()) throw DataError("scale lengths differ");
  auto direct = minmax_scale(psi_hat);
  std::vector<double> reflected(direct.size());
  std::transform(direct.begin(), direct.end(), reflected.begin(), [](double v) { return 1.0 - v; });
  return mse_1d(reflected, psi_true) < mse_1d(direct, psi_true) ? reflected : direct;
}

double mse_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("mse_1d: length mismatch");
  if (a.empty()) throw DataError("mse_1d: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

}  // namespace tripscale
