#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coarse/maxcut.hpp"

namespace testutil {

struct NamedGraph {
  std::string name;
  coarse::Graph graph;
};

// Connected graphs on at most 10 vertices.
inline std::vector<NamedGraph> graph_corpus() {
  using coarse::Graph;
  std::vector<NamedGraph> c;
  c.push_back({"edge", Graph(2, {{0, 1}})});
  c.push_back({"path3", Graph(3, {{0, 1}, {1, 2}})});
  c.push_back({"triangle", Graph::cycle(3)});
  c.push_back({"cycle4", Graph::cycle(4)});
  c.push_back({"cycle5", Graph::cycle(5)});
  c.push_back({"star5", Graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})});
  c.push_back({"complete4", Graph::complete(4)});
  c.push_back({"complete5", Graph::complete(5)});
  c.push_back({"wheel6", Graph(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}})});
  c.push_back({"cube8", Graph(8, {{0, 1}, {1, 3}, {3, 2}, {2, 0}, {4, 5}, {5, 7}, {7, 6}, {6, 4},
                                  {0, 4}, {1, 5}, {2, 6}, {3, 7}})});
  c.push_back({"petersen", Graph(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 5}, {1, 6}, {2, 7}, {3, 8},
                                      {4, 9}, {5, 7}, {7, 9}, {9, 6}, {6, 8}, {8, 5}})});
  return c;
}

}  // namespace testutil
