#include "tripscale/ekman.hpp"

#include "tripscale/nmds.hpp"

#include <cmath>
#include <istream>
#include <sstream>

namespace tripscale {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

SimilarityTable read_similarity_csv(std::istream& in) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  if (rows.empty()) throw DataError("similarity file is empty");
  SimilarityTable table;
  table.labels = rows.front();
  const std::size_t n = table.labels.size();
  if (rows.size() - 1 != n)
    throw DataError("similarity matrix must be square: " + std::to_string(n) + " labels, " +
                    std::to_string(rows.size() - 1) + " rows");
  table.similarity.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    if (row.size() != n)
      throw DataError("similarity row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      try {
        std::size_t used = 0;
        const double v = std::stod(row[j], &used);
        if (used != row[j].size()) throw std::invalid_argument(row[j]);
        table.similarity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      } catch (const std::exception&) {
        throw DataError("similarity row " + std::to_string(i + 1) + ": bad value '" + row[j] + "'");
      }
    }
  }
  if (!table.similarity.isApprox(table.similarity.transpose(), 1e-12))
    throw DataError("similarity matrix is not symmetric");
  return table;
}

DissimilarityMatrix similarity_to_dissimilarity(const SimilarityTable& table) {
  const auto n = table.similarity.rows();
  if (n < 3) throw DataError("need at least 3 stimuli");
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        // Symmetrize exactly; the input check allows 1e-12 relative slack.
        delta(i, j) = 1.0 - 0.5 * (table.similarity(i, j) + table.similarity(j, i));
        if (delta(i, j) < 0.0) throw DataError("similarities above 1 give negative dissimilarities");
      }
  const double first = delta(0, 1);
  bool varied = false;
  for (Eigen::Index i = 0; i < n && !varied; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (delta(i, j) != first) {
        varied = true;
        break;
      }
  if (!varied) throw DataError("all dissimilarities are equal; the matrix carries no order information");
  return DissimilarityMatrix(std::move(delta));
}

ScalingFunctionSpec ingest_color_similarity(const SimilarityTable& table, const EngineConfig& config) {
  const auto delta = similarity_to_dissimilarity(table);
  EngineConfig c = config;
  c.dim = 2;
  const auto result = fit_nmds(delta, c);
  Eigen::MatrixXd pts = result.embedding.points();
  const Eigen::RowVectorXd lo = pts.colwise().minCoeff();
  const Eigen::RowVectorXd hi = pts.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw DataError("ingested configuration collapsed to a point");
  const Eigen::RowVectorXd centre = 0.5 * (lo + hi);
  pts = ((pts.rowwise() - centre) * (0.9 / extent)).array() + 0.5;

  std::vector<TableEntry> rows;
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    TableEntry e;
    e.label = table.labels[i];
    try {
      e.stimulus = wavelength_to_stimulus(std::stod(e.label));
    } catch (const std::exception&) {
      throw DataError("similarity header label '" + e.label + "' is not a wavelength");
    }
    e.point = pts.row(static_cast<Eigen::Index>(i)).transpose();
    rows.push_back(std::move(e));
  }
  return ScalingFunctionSpec::tabulated(std::move(rows));
}

std::string default_color_ground_truth_path() {
  return std::string(TRIPSCALE_DATA_DIR) + "/ekman_ground_truth.json";
}

std::string default_color_similarity_path() {
  return std::string(TRIPSCALE_DATA_DIR) + "/ekman_similarity.csv";
}

}  // namespace tripscale
