// Copyright 2026 The concave-ot Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "concave_ot/errors.hpp"
#include "concave_ot/measure.hpp"

namespace concave_ot {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    const std::string field =
        line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    if (end == begin || *end != '\0' || errno == ERANGE)
      throw ParseError("cannot parse number \"" + field + "\"", line_no);
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

DiscreteMeasure parse_measure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<double> coords, weights;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto row = parse_row(line, line_no);
    if (columns == 0) {
      if (row.size() < 2)
        throw ParseError("need at least one coordinate and a weight", line_no);
      columns = row.size();
    } else if (row.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(row.size()),
                       line_no);
    }
    if (row.back() < 0.0)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": negative weight");
    coords.insert(coords.end(), row.begin(), row.end() - 1);
    weights.push_back(row.back());
  }
  if (columns == 0) throw ParseError("no atoms in measure file", 0);
  return DiscreteMeasure::probability(PointSet(columns - 1, std::move(coords)),
                                      std::move(weights));
}

std::string format_measure_csv(const DiscreteMeasure& mu) {
  std::ostringstream os;
  os.precision(17);
  os << "# dim=" << mu.dim() << " columns: x0..x" << mu.dim() - 1 << ",weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.point(i)) os << c << ',';
    os << mu.weight(i) << '\n';
  }
  return os.str();
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<double> coords, weights;
    for (const auto& atom : j.at("atoms")) {
      auto x = atom.at("x").get<std::vector<double>>();
      if (x.size() != dim)
        throw ValidationError("atom coordinate count differs from dim");
      const double w = atom.at("w").get<double>();
      if (w < 0.0) throw ValidationError("negative weight");
      coords.insert(coords.end(), x.begin(), x.end());
      weights.push_back(w);
    }
    return DiscreteMeasure::probability(PointSet(dim, std::move(coords)),
                                        std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed measure JSON: ") + e.what(), 0);
  }
}

nlohmann::json measure_to_json(const DiscreteMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto p = mu.point(i);
    atoms.push_back({{"x", std::vector<double>(p.begin(), p.end())},
                     {"w", mu.weight(i)}});
  }
  return {{"dim", mu.dim()}, {"atoms", std::move(atoms)}};
}

DiscreteMeasure load_measure(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 0);
    }
    return measure_from_json(j);
  }
  return parse_measure_csv(text);
}

void save_measure(const DiscreteMeasure& mu, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (path.extension() == ".json")
    out << measure_to_json(mu).dump(1) << '\n';
  else
    out << format_measure_csv(mu);
}

}  // namespace concave_ot
