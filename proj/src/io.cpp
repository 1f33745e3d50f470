#include "tripscale/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace tripscale::io {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

bool is_na(const std::string& s) { return s.empty() || s == "NA" || s == "na"; }

double parse_number(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("line " + std::to_string(line) + ": bad " + column + " value '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line, const char* column,
                        const StimulusSet* stimuli) {
  if (stimuli) {
    try {
      return stimuli->index_of(s);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw DataError("line " + std::to_string(line) + ": bad " + column + " index '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Responses read_responses(std::istream& in, const StimulusSet* stimuli) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DataError("response file is empty");

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"ref", "opt1", "opt2", "answer"})
    if (!col.contains(required))
      throw DataError(std::string("response header lacks column '") + required + "'");
  auto optional_col = [&](const char* name) -> std::optional<std::size_t> {
    if (auto it = col.find(name); it != col.end()) return it->second;
    return std::nullopt;
  };
  const auto rt_col = optional_col("rt_ms");
  const auto session_col = optional_col("session_id");
  const auto repeat_col = optional_col("repeat_index");

  Responses out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    TripletResponse r;
    r.triplet.ref = parse_index(cells[col["ref"]], line_no, "ref", stimuli);
    r.triplet.opt1 = parse_index(cells[col["opt1"]], line_no, "opt1", stimuli);
    r.triplet.opt2 = parse_index(cells[col["opt2"]], line_no, "opt2", stimuli);
    if (r.triplet.ref == r.triplet.opt1 || r.triplet.ref == r.triplet.opt2 ||
        r.triplet.opt1 == r.triplet.opt2)
      throw DataError("line " + std::to_string(line_no) + ": triplet repeats a stimulus");
    const std::string& ans = cells[col["answer"]];
    if (ans == "1" || ans == "+1") {
      r.answer = Answer::kOpt1;
    } else if (ans == "-1") {
      r.answer = Answer::kOpt2;
    } else if (is_na(ans)) {
      r.answer = Answer::kUnanswered;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": answer must be 1, -1 or NA, got '" +
                      ans + "'");
    }
    if (rt_col && !is_na(cells[*rt_col])) {
      r.rt_ms = parse_number(cells[*rt_col], line_no, "rt_ms");
      if (*r.rt_ms < 0) throw DataError("line " + std::to_string(line_no) + ": negative rt_ms");
    }
    if (session_col && !is_na(cells[*session_col])) r.session_id = cells[*session_col];
    if (repeat_col && !is_na(cells[*repeat_col]))
      r.repeat_index = static_cast<int>(parse_number(cells[*repeat_col], line_no, "repeat_index"));
    out.push_back(std::move(r));
  }
  return out;
}

Responses read_responses_file(const std::filesystem::path& path, const StimulusSet* stimuli) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_responses(in, stimuli);
}

void write_responses(std::ostream& out, const Responses& responses) {
  out << kResponseHeader << '\n';
  for (const auto& r : responses) {
    out << r.triplet.ref << ',' << r.triplet.opt1 << ',' << r.triplet.opt2 << ',';
    switch (r.answer) {
      case Answer::kOpt1: out << "1"; break;
      case Answer::kOpt2: out << "-1"; break;
      case Answer::kUnanswered: out << "NA"; break;
    }
    out << ',' << (r.rt_ms ? format_double(*r.rt_ms) : "NA");
    out << ',' << (r.session_id ? *r.session_id : "NA");
    out << ',' << (r.repeat_index ? std::to_string(*r.repeat_index) : "NA") << '\n';
  }
}

StimulusSet slant_stimuli() {
  std::vector<std::string> labels;
  std::vector<double> degrees;
  for (int deg = 0; deg <= 70; deg += 10) {
    labels.push_back(std::to_string(deg));
    degrees.push_back(deg);
  }
  return StimulusSet(std::move(labels), std::move(degrees));
}

nlohmann::json to_json(const Embedding& e) {
  nlohmann::json points = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.points().rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < e.points().cols(); ++c) row.push_back(e.points()(i, c));
    points.push_back(std::move(row));
  }
  const auto& m = e.meta();
  return {{"n", e.size()},
          {"dim", e.dim()},
          {"points", std::move(points)},
          {"meta",
           {{"engine", m.engine},
            {"seed", m.seed},
            {"objective", m.objective},
            {"iterations", m.iterations},
            {"unreferenced", m.unreferenced}}}};
}

Embedding embedding_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto dim = j.at("dim").get<int>();
    const auto& pts = j.at("points");
    if (pts.size() != n) throw DataError("embedding JSON: points length differs from n");
    Eigen::MatrixXd points(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
      if (pts[i].size() != static_cast<std::size_t>(dim))
        throw DataError("embedding JSON: point " + std::to_string(i) + " has wrong dimension");
      for (int c = 0; c < dim; ++c) points(static_cast<Eigen::Index>(i), c) = pts[i][c].get<double>();
    }
    FitMeta meta;
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      meta.engine = m.value("engine", "");
      meta.seed = m.value("seed", std::uint64_t{0});
      meta.objective = m.value("objective", 0.0);
      meta.iterations = m.value("iterations", 0);
      meta.unreferenced = m.value("unreferenced", std::vector<std::size_t>{});
    }
    return Embedding(std::move(points), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("embedding JSON: ") + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace tripscale::io
