#pragma once

// Population network: an undirected simple graph over units 0..n-1 stored as
// sorted neighbor lists, plus truncated-BFS distance shells and the sparsity
// measures used to judge whether a network is sparse enough for the
// network-HAC variance estimator.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netspill/error.hpp"

namespace netspill {

using Edge = std::pair<std::size_t, std::size_t>;

class PopulationGraph {
 public:
  PopulationGraph() = default;

  /// Builds a graph from an edge list. Edges are symmetrized and
  /// deduplicated; self-loops and out-of-range endpoints are rejected.
  PopulationGraph(std::size_t n, std::span<const Edge> edges) : adj_(n) {
    for (const auto& [a, b] : edges) {
      if (a >= n || b >= n) {
        throw InputError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                         ") has an endpoint outside [0, " + std::to_string(n) + ")");
      }
      if (a == b) throw InputError("self-loop on node " + std::to_string(a));
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    finalize();
  }

  /// Keeps the edges (i, j), i < j, of `g` for which `keep(i, j)` is true.
  template <class Pred>
  static PopulationGraph filtered(const PopulationGraph& g, Pred keep) {
    PopulationGraph out;
    out.adj_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j : g.neighbors(i)) {
        if (i < j && keep(i, j)) {
          out.adj_[i].push_back(j);
          out.adj_[j].push_back(i);
        }
      }
    }
    out.finalize();
    return out;
  }

  std::size_t size() const noexcept { return adj_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }
  std::size_t degree(std::size_t i) const { return adj_[i].size(); }

  std::span<const std::size_t> neighbors(std::size_t i) const { return adj_[i]; }

  bool adjacent(std::size_t i, std::size_t j) const {
    return std::binary_search(adj_[i].begin(), adj_[i].end(), j);
  }

  /// Edge list with i < j, in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_);
    for (std::size_t i = 0; i < adj_.size(); ++i)
      for (std::size_t j : adj_[i])
        if (i < j) out.emplace_back(i, j);
    return out;
  }

  /// Dense 0/1 adjacency. Refuses graphs larger than `cap` nodes.
  Eigen::MatrixXd dense(std::size_t cap = 5000) const {
    if (size() > cap) {
      throw InputError("dense adjacency requested for " + std::to_string(size()) +
                       " nodes, above the cap of " + std::to_string(cap));
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size(), size());
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j : adj_[i]) a(i, j) = 1.0;
    return a;
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::string> labels) {
    if (!labels.empty() && labels.size() != size())
      throw InputError("label count does not match node count");
    labels_ = std::move(labels);
  }

 private:
  void finalize() {
    edges_ = 0;
    for (auto& row : adj_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      edges_ += row.size();
    }
    edges_ /= 2;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::size_t edges_ = 0;
  std::vector<std::string> labels_;
};

enum class IndexBase { Zero = 0, One = 1 };

namespace detail {

inline std::optional<long long> parse_integer(const std::string& token) {
  if (token.empty()) return std::nullopt;
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(token, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (pos != token.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string> split_record(const std::string& line) {
  std::string cleaned = line;
  for (char& c : cleaned)
    if (c == ',' || c == '(' || c == ')' || c == '\t' || c == ';' || c == '\r') c = ' ';
  std::istringstream in(cleaned);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(t);
  return tokens;
}

}  // namespace detail

/// Reads whitespace- or comma-separated node pairs, one per line. Blank lines
/// and lines starting with '#' are ignored; the first record may be a header.
/// With n == 0 the node count is inferred from the largest index.
inline PopulationGraph load_edge_list(std::istream& in, std::size_t n, IndexBase base) {
  const long long offset = base == IndexBase::One ? 1 : 0;
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  bool seen_record = false;
  long long max_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tokens = detail::split_record(line);
    if (tokens.empty()) continue;
    const bool header_candidate = !seen_record;
    seen_record = true;
    if (tokens.size() != 2) {
      throw InputError("malformed edge record at line " + std::to_string(line_no) +
                       ": expected two node indices");
    }
    const auto a = detail::parse_integer(tokens[0]);
    const auto b = detail::parse_integer(tokens[1]);
    if (!a || !b) {
      if (header_candidate && !a && !b) continue;
      throw InputError("malformed edge record at line " + std::to_string(line_no));
    }
    const long long i = *a - offset;
    const long long j = *b - offset;
    if (i < 0 || j < 0 || (n > 0 && (i >= static_cast<long long>(n) ||
                                     j >= static_cast<long long>(n)))) {
      throw InputError("node index out of range at line " + std::to_string(line_no));
    }
    if (i == j) throw InputError("self-loop at line " + std::to_string(line_no));
    max_index = std::max({max_index, i, j});
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  const std::size_t count = n > 0 ? n : static_cast<std::size_t>(max_index + 1);
  return PopulationGraph(count, edges);
}

/// Exact-distance shells up to `smax` for every node. Nodes farther than
/// `smax` (or unreachable) are simply absent.
class NeighborhoodIndex {
 public:
  NeighborhoodIndex() = default;
  NeighborhoodIndex(std::size_t smax, std::vector<std::vector<std::vector<std::size_t>>> shells)
      : smax_(smax), shells_(std::move(shells)) {}

  std::size_t smax() const noexcept { return smax_; }
  std::size_t size() const noexcept { return shells_.size(); }

  /// Nodes at exact distance s from i, sorted.
  std::span<const std::size_t> shell(std::size_t i, std::size_t s) const {
    if (s > smax_) throw InputError("shell radius exceeds the index cap");
    return shells_[i][s];
  }

  std::size_t ball_size(std::size_t i, std::size_t s) const {
    std::size_t total = 0;
    for (std::size_t t = 0; t <= std::min(s, smax_); ++t) total += shells_[i][t].size();
    return total;
  }

  /// Nodes within distance s of i (including i), sorted.
  std::vector<std::size_t> ball(std::size_t i, std::size_t s) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t <= std::min(s, smax_); ++t)
      out.insert(out.end(), shells_[i][t].begin(), shells_[i][t].end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<std::size_t> distance(std::size_t i, std::size_t j) const {
    for (std::size_t s = 0; s <= smax_; ++s) {
      const auto& sh = shells_[i][s];
      if (std::binary_search(sh.begin(), sh.end(), j)) return s;
    }
    return std::nullopt;
  }

 private:
  std::size_t smax_ = 0;
  std::vector<std::vector<std::vector<std::size_t>>> shells_;
};

inline NeighborhoodIndex build_index(const PopulationGraph& g, std::size_t smax) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::vector<std::size_t>>> shells(n);
  std::vector<std::size_t> stamp(n, SIZE_MAX);
  for (std::size_t src = 0; src < n; ++src) {
    auto& mine = shells[src];
    mine.assign(smax + 1, {});
    mine[0].push_back(src);
    stamp[src] = src;
    for (std::size_t s = 1; s <= smax; ++s) {
      for (std::size_t u : mine[s - 1]) {
        for (std::size_t v : g.neighbors(u)) {
          if (stamp[v] != src) {
            stamp[v] = src;
            mine[s].push_back(v);
          }
        }
      }
      if (mine[s].empty()) break;
      std::sort(mine[s].begin(), mine[s].end());
    }
  }
  return NeighborhoodIndex(smax, std::move(shells));
}

struct NetworkSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double mean_degree = 0.0;
  /// Mean count of friends-of-friends that are neither i nor i's friends.
  double mean_second_order_degree = 0.0;
};

inline NetworkSummary network_summary(const PopulationGraph& g) {
  NetworkSummary s;
  s.nodes = g.size();
  s.edges = g.edge_count();
  if (s.nodes == 0) return s;
  s.mean_degree = 2.0 * static_cast<double>(s.edges) / static_cast<double>(s.nodes);
  const auto index = build_index(g, 2);
  double second = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) second += static_cast<double>(index.shell(i, 2).size());
  s.mean_second_order_degree = second / static_cast<double>(s.nodes);
  return s;
}

/// Plausibility numbers for the sparsity conditions behind consistency of the
/// HAC estimator, at dependence radius K. Neighborhoods N(i; s) include i.
/// On an empty graph the boundary sum is 0 while the other two equal 1/n
/// (every node is its own 0-neighborhood).
struct SparsityDiagnostics {
  /// sum over 1 <= s <= 2K of n^-1 sum_i |{j : d(i,j) = s}|
  double boundary_sum = 0.0;
  /// n^-1 sum_i |N(i; 2K)|^2, divided by n
  double second_moment_ratio = 0.0;
  /// sum over 0 <= s <= 2K of |{(i,j,i',j') : d(i,j) = s, i' in N(i;2K), j' in N(j;2K)}|, over n^2
  double quadruple_ratio = 0.0;
};

inline SparsityDiagnostics sparsity_diagnostics(const PopulationGraph& g, std::size_t K) {
  SparsityDiagnostics out;
  const std::size_t n = g.size();
  if (n == 0) return out;
  const std::size_t radius = 2 * K;
  const auto index = build_index(g, radius);
  const double nd = static_cast<double>(n);
  std::vector<double> ball(n);
  for (std::size_t i = 0; i < n; ++i) ball[i] = static_cast<double>(index.ball_size(i, radius));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 1; s <= radius; ++s)
      out.boundary_sum += static_cast<double>(index.shell(i, s).size());
    out.second_moment_ratio += ball[i] * ball[i];
    for (std::size_t s = 0; s <= radius; ++s)
      for (std::size_t j : index.shell(i, s)) out.quadruple_ratio += ball[i] * ball[j];
  }
  out.boundary_sum /= nd;
  out.second_moment_ratio /= nd * nd;
  out.quadruple_ratio /= nd * nd;
  return out;
}

}  // namespace netspill
