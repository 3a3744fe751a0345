#pragma once

// Gaussian partition JSON:
//   {"d": 2, "partitions": [{"weight": 0.5, "cells": [{"kind": "halfspace", "w": [1, 0], "c": 0}, ...]},
//                           {"weight": 0.5, "generator": "voronoi", "sites": [[0, 0], [1, 1]]}]}
// Cell kinds: halfspace(w, c), box(lo, hi; null = unbounded), ball(center, radius),
// ellipsoid(precision, center, q), intersection(sets), affine(matrix, offset, inner),
// whole, complement(inner). Every written cell carries "convex". Generators: voronoi, relu, halfline.

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "coarse/core_io.hpp"
#include "coarse/gaussian.hpp"
#include "json.hpp"

namespace coarse {

namespace detail {

inline nlohmann::json bound_to_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

inline Vector vector_from_json(const nlohmann::json& j, std::size_t d, const char* what) {
  if (!j.is_array() || j.size() != d)
    throw ParseError(std::string(what) + ": expected an array of length " + std::to_string(d));
  Vector v(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline Vector bounds_from_json(const nlohmann::json& j, std::size_t d, double unbounded) {
  if (!j.is_array() || j.size() != d) throw ParseError("box: bound arrays must have length d");
  Vector v(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) v[static_cast<Eigen::Index>(i)] = j[i].is_null() ? unbounded : j[i].get<double>();
  return v;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw ParseError(std::string(what) + ": wrong row count");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r], cols, what);
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const ConvexSet& s) {
  nlohmann::json j = std::visit(
      [](const auto& n) -> nlohmann::json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ConvexSet::Halfspace>) {
          return {{"kind", "halfspace"}, {"w", detail::vector_to_json(n.w)}, {"c", n.c}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Box>) {
          nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
          for (Eigen::Index i = 0; i < n.lo.size(); ++i) {
            lo.push_back(detail::bound_to_json(n.lo[i]));
            hi.push_back(detail::bound_to_json(n.hi[i]));
          }
          return {{"kind", "box"}, {"lo", lo}, {"hi", hi}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Ball>) {
          return {{"kind", "ball"}, {"center", detail::vector_to_json(n.center)}, {"radius", n.radius}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Ellipsoid>) {
          return {{"kind", "ellipsoid"},
                  {"precision", detail::matrix_to_json(n.precision)},
                  {"center", detail::vector_to_json(n.center)},
                  {"q", n.q}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Intersection>) {
          nlohmann::json parts = nlohmann::json::array();
          for (const auto& p : n.parts) parts.push_back(to_json(p));
          return {{"kind", "intersection"}, {"sets", parts}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Affine>) {
          return {{"kind", "affine"},
                  {"matrix", detail::matrix_to_json(n.a)},
                  {"offset", detail::vector_to_json(n.b)},
                  {"inner", to_json(n.inner.front())}};
        } else if constexpr (std::is_same_v<T, ConvexSet::Whole>) {
          return {{"kind", "whole"}};
        } else {
          return {{"kind", "complement"}, {"inner", to_json(n.inner.front())}};
        }
      },
      s.node());
  j["convex"] = s.is_convex();
  return j;
}

inline ConvexSet convex_set_from_json(const nlohmann::json& j, std::size_t d) {
  if (!j.is_object() || !j.contains("kind")) throw ParseError("cell needs a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const double inf = std::numeric_limits<double>::infinity();
  ConvexSet s;
  if (kind == "halfspace") {
    s = ConvexSet::halfspace(detail::vector_from_json(j.at("w"), d, "halfspace.w"), j.at("c").get<double>());
  } else if (kind == "box") {
    s = ConvexSet::box(detail::bounds_from_json(j.at("lo"), d, -inf), detail::bounds_from_json(j.at("hi"), d, inf));
  } else if (kind == "ball") {
    s = ConvexSet::ball(detail::vector_from_json(j.at("center"), d, "ball.center"), j.at("radius").get<double>());
  } else if (kind == "ellipsoid") {
    s = ConvexSet::ellipsoid(detail::matrix_from_json(j.at("precision"), d, d, "ellipsoid.precision"),
                             detail::vector_from_json(j.at("center"), d, "ellipsoid.center"), j.at("q").get<double>());
  } else if (kind == "intersection") {
    std::vector<ConvexSet> parts;
    for (const auto& p : j.at("sets")) parts.push_back(convex_set_from_json(p, d));
    s = ConvexSet::intersection(std::move(parts));
  } else if (kind == "affine") {
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.empty()) throw ParseError("affine.matrix must be a non-empty array of rows");
    const std::size_t rows = m.size();
    s = ConvexSet::affine(detail::matrix_from_json(m, rows, d, "affine.matrix"),
                          detail::vector_from_json(j.at("offset"), rows, "affine.offset"),
                          convex_set_from_json(j.at("inner"), rows));
  } else if (kind == "whole") {
    s = ConvexSet::whole();
  } else if (kind == "complement") {
    s = ConvexSet::complement(convex_set_from_json(j.at("inner"), d));
  } else {
    throw ParseError("unknown cell kind \"" + kind + "\"");
  }
  if (j.contains("convex") && j.at("convex").get<bool>() && !s.is_convex())
    throw ParseError("cell of kind \"" + kind + "\" is flagged convex but is not");
  return s;
}

inline GaussianPartitionDistribution gaussian_partitions_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("d") || !j.contains("partitions"))
      throw ParseError("Gaussian partition file needs \"d\" and \"partitions\"");
    const std::size_t d = j.at("d").get<std::size_t>();
    std::vector<ConvexPartition> parts;
    std::vector<double> weights;
    for (const auto& p : j.at("partitions")) {
      weights.push_back(p.at("weight").get<double>());
      if (p.contains("generator")) {
        const std::string g = p.at("generator").get<std::string>();
        if (g == "voronoi") {
          std::vector<Vector> sites;
          for (const auto& s : p.at("sites")) sites.push_back(detail::vector_from_json(s, d, "voronoi.sites"));
          parts.push_back(voronoi_partition(sites));
        } else if (g == "relu") {
          if (d != 2) throw ParseError("relu generator requires d = 2");
          parts.push_back(relu_partition());
        } else if (g == "halfline") {
          if (d != 1) throw ParseError("halfline generator requires d = 1");
          parts.push_back(halfline_partition(p.value("threshold", 0.0)));
        } else {
          throw ParseError("unknown partition generator \"" + g + "\"");
        }
      } else {
        std::vector<ConvexSet> cells;
        for (const auto& c : p.at("cells")) cells.push_back(convex_set_from_json(c, d));
        parts.emplace_back(std::move(cells));
      }
    }
    return GaussianPartitionDistribution(d, std::move(parts), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("Gaussian partition file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("Gaussian partition file: ") + e.what());
  }
}

/// Finite partitions only; generated partitions have no cell list to write.
inline nlohmann::json to_json(const GaussianPartitionDistribution& pi) {
  nlohmann::json parts = nlohmann::json::array();
  for (std::size_t s = 0; s < pi.partitions().size(); ++s) {
    const auto& p = pi.partitions()[s];
    if (p.is_generated()) throw InvalidArgument("to_json: generated partitions cannot be listed");
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : p.cells()) cells.push_back(to_json(c));
    parts.push_back({{"weight", pi.weights()[s]}, {"cells", cells}});
  }
  return {{"d", pi.d()}, {"partitions", parts}};
}

inline GaussianPartitionDistribution load_gaussian_partitions(const std::string& path) {
  return gaussian_partitions_from_json(parse_json_text(read_text_file(path), path));
}

/// One row per iterate: iter,mu_1,...,mu_d.
inline void write_trace_csv(std::ostream& out, const std::vector<Vector>& trace) {
  if (trace.empty()) return;
  out << "iter";
  for (Eigen::Index i = 0; i < trace.front().size(); ++i) out << ",mu_" << (i + 1);
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < trace[t].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", trace[t][i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace coarse
