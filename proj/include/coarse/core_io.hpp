#pragma once

// File formats for the discrete side:
//   partition distribution JSON  {"k": int, "partitions": [{"weight": w, "cells": [[1,2],[3]]}]}
//   coarse sample lists           one cell per line, comma-separated sorted 1-based labels

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "coarse/core.hpp"
#include "json.hpp"

namespace coarse {

namespace detail {

// Line and column (1-based) of a byte offset in `text`.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses JSON text; syntax errors become ParseError with line/column.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(origin + ": " + e.what(), line, col);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json label_set_to_json(LabelSet s) {
  nlohmann::json arr = nlohmann::json::array();
  for (Label l : s.labels()) arr.push_back(l + 1);
  return arr;
}

inline LabelSet label_set_from_json(const nlohmann::json& j, std::size_t k) {
  if (!j.is_array()) throw ParseError("cell must be an array of labels");
  LabelSet s;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError("labels must be integers");
    const long long l = v.get<long long>();
    if (l < 1 || static_cast<std::size_t>(l) > k)
      throw ParseError("label " + std::to_string(l) + " outside [1, " + std::to_string(k) + "]");
    s.insert(static_cast<Label>(l - 1));
  }
  return s;
}

inline nlohmann::json to_json(const PartitionDistribution& pi) {
  nlohmann::json parts = nlohmann::json::array();
  for (std::size_t s = 0; s < pi.partitions().size(); ++s) {
    nlohmann::json cells = nlohmann::json::array();
    for (LabelSet c : pi.partitions()[s].cells()) cells.push_back(label_set_to_json(c));
    parts.push_back({{"weight", pi.weights()[s]}, {"cells", cells}});
  }
  return {{"k", pi.k()}, {"partitions", parts}};
}

inline PartitionDistribution partition_distribution_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("k") || !j.contains("partitions"))
      throw ParseError("partition distribution needs \"k\" and \"partitions\"");
    const std::size_t k = j.at("k").get<std::size_t>();
    std::vector<DiscretePartition> parts;
    std::vector<double> weights;
    for (const auto& p : j.at("partitions")) {
      std::vector<LabelSet> cells;
      for (const auto& c : p.at("cells")) cells.push_back(label_set_from_json(c, k));
      parts.emplace_back(k, std::move(cells));
      weights.push_back(p.at("weight").get<double>());
    }
    return PartitionDistribution(std::move(parts), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("partition distribution: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("partition distribution: ") + e.what());
  }
}

inline PartitionDistribution load_partition_distribution(const std::string& path) {
  return partition_distribution_from_json(parse_json_text(read_text_file(path), path));
}

/// One cell per line; blank lines and lines starting with '#' are skipped.
inline std::vector<LabelSet> read_coarse_samples(std::istream& in, std::size_t k) {
  std::vector<LabelSet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    LabelSet cell;
    std::size_t pos = 0;
    long long prev = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (...) {
        throw ParseError("expected an integer label", lineno, pos + 1);
      }
      if (tok.find_first_not_of(" \t", used) != std::string::npos)
        throw ParseError("trailing characters after label", lineno, pos + used + 1);
      if (v < 1 || static_cast<std::size_t>(v) > k)
        throw ParseError("label " + std::to_string(v) + " outside [1, " + std::to_string(k) + "]", lineno, pos + 1);
      if (v <= prev) throw ParseError("labels must be strictly increasing", lineno, pos + 1);
      prev = v;
      cell.insert(static_cast<Label>(v - 1));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    out.push_back(cell);
  }
  return out;
}

inline void write_coarse_samples(std::ostream& out, std::span<const LabelSet> cells) {
  for (LabelSet c : cells) {
    bool first = true;
    for (Label l : c.labels()) {
      out << (first ? "" : ",") << (l + 1);
      first = false;
    }
    out << '\n';
  }
}

}  // namespace coarse
