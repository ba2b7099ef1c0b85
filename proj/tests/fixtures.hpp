#pragma once

// Small graphs shared by the unit tests and the acceptance binary.

#include <vector>

#include "netspill/graph.hpp"

namespace fixture {

/// Eight nodes: a triangle, a four-cycle through 3-4-5-6 and a pendant 7.
inline const std::vector<netspill::Edge> kEight{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4},
                                                {4, 5}, {5, 6}, {3, 6}, {1, 5}, {6, 7}};

/// Unit 0 with friends 1, 2, 3, 4, 7; 1-3 closes a triangle.
inline const std::vector<netspill::Edge> kFigure{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 5}, {1, 6},
                                                 {5, 6}, {1, 3}, {0, 7}, {1, 8}, {3, 9}};

}  // namespace fixture
