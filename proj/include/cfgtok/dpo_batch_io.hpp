#pragma once

// SceneDPO batch files: JSON Lines, one tuple per line.
//   {"lp_pos": -1.2, "lp_negans": -3.4, "lp_negscene": -2.0}
//   {"lp_pos": -1.2, "lp_negans": -3.4, "lp_negscene": -2.0,
//    "ref_pos": -1.1, "ref_negans": -3.0, "ref_negscene": -2.2}
// Blank lines and lines starting with '#' are ignored.

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgtok/error.hpp"
#include "cfgtok/scene_dpo.hpp"

namespace cfgtok {

struct DpoBatchFile {
  SceneDPOBatch samples;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each sample
};

inline DpoBatchFile read_dpo_batch(std::istream& in, const std::string& source = "batch") {
  DpoBatchFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error, where + ": " + e.what());
    }
    if (!rec.is_object()) throw Error(ErrorCode::parse_error, where + ": record must be a JSON object");
    auto number = [&](const char* key) {
      if (!rec.contains(key)) throw Error(ErrorCode::parse_error, where + ": missing field '" + key + "'");
      const auto& v = rec.at(key);
      if (!v.is_number()) throw Error(ErrorCode::parse_error, where + ": field '" + key + "' must be a number");
      return v.get<double>();
    };
    DpoSample s;
    s.lp_pos = number("lp_pos");
    s.lp_negans = number("lp_negans");
    s.lp_negscene = number("lp_negscene");
    const bool any_ref = rec.contains("ref_pos") || rec.contains("ref_negans") || rec.contains("ref_negscene");
    if (any_ref) s.ref = ReferenceLogProbs{number("ref_pos"), number("ref_negans"), number("ref_negscene")};
    out.samples.push_back(s);
    out.line_numbers.push_back(lineno);
  }
  return out;
}

inline DpoBatchFile load_dpo_batch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open batch file " + path.string());
  return read_dpo_batch(in, path.string());
}

}  // namespace cfgtok
