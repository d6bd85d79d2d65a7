#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lorprod {

/** Thrown when scenario/JSON input violates the expected schema. */
struct schema_error : std::runtime_error {
  std::string pointer;  // JSON-pointer-ish location of the offending field
  schema_error(std::string ptr, const std::string& what)
      : std::runtime_error(what + " (at " + ptr + ")"), pointer(std::move(ptr)) {}
};

/** Thrown when a pair of nodes has no connecting path. */
struct unreachable_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * Finite connected graph with positive edge lengths; the spatial side of a
 * product model. Immutable after construction; all queries are pure and safe
 * for concurrent read-only use.
 */
class BaseSpace {
 public:
  struct Edge {
    int u = 0, v = 0;
    double len = 0.0;
  };

  // Builds from node names and undirected edges. Throws std::invalid_argument
  // on empty node sets, self-loops, duplicate edges, non-positive lengths, or
  // a disconnected graph.
  BaseSpace(std::vector<std::string> names, const std::vector<Edge>& edges);

  int node_count() const { return static_cast<int>(names_.size()); }
  const std::string& node_name(int x) const { return names_.at(x); }
  // Index of a named node; throws std::invalid_argument if absent.
  int node_id(const std::string& name) const;
  bool has_node(const std::string& name) const;

  const std::vector<Edge>& edges() const { return edges_; }
  // Neighbors of x as (node, edge length) pairs, sorted by node id.
  const std::vector<std::pair<int, double>>& neighbors(int x) const { return adj_.at(x); }

  // Base shortest-path distance (Dijkstra with early exit). Nodes are always
  // connected by construction; throws unreachable_error defensively otherwise.
  double shortest_distance(int x, int y) const;

  // All nodes within `hops` edges of x (x included), sorted by node id.
  std::vector<int> hop_ball(int x, int hops) const;

  // Optional per-node coordinate (set for generated path graphs); used by
  // scenario weight profiles. NaN when the graph carries no embedding.
  double position(int x) const { return positions_.at(x); }
  void set_positions(std::vector<double> pos);
  bool has_positions() const { return has_positions_; }

 private:
  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::vector<double> positions_;
  bool has_positions_ = false;
};

/**
 * Walk through the graph: consecutive nodes joined by edges (repeats and
 * backtracking allowed). Optional per-segment parameter speeds turn the walk
 * into a parametrized curve (space units per parameter unit).
 */
struct SpacePath {
  std::vector<int> nodes;
  std::vector<double> segment_speeds;  // empty, or one entry per segment

  bool parametrized() const { return !segment_speeds.empty(); }
};

// Sum of traversed edge lengths; 0 for a single node. Throws
// std::invalid_argument when consecutive nodes are not adjacent.
double path_length(const BaseSpace& g, const SpacePath& path);

// Shortest-path distance after reweighting each edge by the mean of the
// conformal weight at its endpoints: cost(u,v) = len * (w(u)+w(v))/2.
// Throws std::domain_error when the weight is non-positive on a visited node.
double conformal_distance(const BaseSpace& g, const std::function<double(int)>& weight,
                          int x, int y);

// Node sequence [x, ..., y] of a shortest path under the same reweighting as
// conformal_distance. Ties are broken toward the smaller predecessor id so the
// witness path is deterministic.
std::vector<int> conformal_shortest_path(const BaseSpace& g,
                                         const std::function<double(int)>& weight, int x, int y);

// Path graph with n >= 2 nodes spread over [0, total_len]; nodes are named
// "0".."n-1" and carry positions i*total_len/(n-1).
BaseSpace make_path_graph(int n, double total_len);

// Splits every edge into k equal pieces, inserting k-1 fresh nodes per edge.
// Positions (when present) are interpolated linearly.
BaseSpace subdivide(const BaseSpace& g, int k);

}  // namespace lorprod
