#include "lorprod/base_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <unordered_map>

namespace lorprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (distance, node) min-heap entry.
using HeapItem = std::pair<double, int>;

}  // namespace

BaseSpace::BaseSpace(std::vector<std::string> names, const std::vector<Edge>& edges)
    : names_(std::move(names)) {
  const int n = static_cast<int>(names_.size());
  if (n == 0) throw std::invalid_argument("BaseSpace: empty node set");
  {
    std::set<std::string> uniq(names_.begin(), names_.end());
    if (static_cast<int>(uniq.size()) != n)
      throw std::invalid_argument("BaseSpace: duplicate node names");
  }
  adj_.resize(n);
  std::set<std::pair<int, int>> seen;
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
      throw std::invalid_argument("BaseSpace: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("BaseSpace: self-loop rejected");
    if (!(e.len > 0.0) || !std::isfinite(e.len))
      throw std::invalid_argument("BaseSpace: edge length must be positive and finite");
    auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second)
      throw std::invalid_argument("BaseSpace: duplicate edge rejected");
    edges_.push_back(e);
    adj_[e.u].emplace_back(e.v, e.len);
    adj_[e.v].emplace_back(e.u, e.len);
  }
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());

  // Connectivity check (BFS); disconnected inputs are rejected outright so
  // that every later distance query is well defined.
  std::vector<char> seen_node(n, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen_node[0] = 1;
  int reached = 1;
  while (!bfs.empty()) {
    int x = bfs.front();
    bfs.pop();
    for (auto [y, len] : adj_[x]) {
      (void)len;
      if (!seen_node[y]) {
        seen_node[y] = 1;
        ++reached;
        bfs.push(y);
      }
    }
  }
  if (reached != n) throw std::invalid_argument("BaseSpace: graph is disconnected");

  positions_.assign(n, std::numeric_limits<double>::quiet_NaN());
}

int BaseSpace::node_id(const std::string& name) const {
  for (int i = 0; i < node_count(); ++i)
    if (names_[i] == name) return i;
  throw std::invalid_argument("BaseSpace: unknown node name '" + name + "'");
}

bool BaseSpace::has_node(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void BaseSpace::set_positions(std::vector<double> pos) {
  if (static_cast<int>(pos.size()) != node_count())
    throw std::invalid_argument("BaseSpace: position count mismatch");
  positions_ = std::move(pos);
  has_positions_ = true;
}

double BaseSpace::shortest_distance(int x, int y) const {
  const int n = node_count();
  if (x < 0 || x >= n || y < 0 || y >= n)
    throw std::invalid_argument("BaseSpace: node id out of range");
  if (x == y) return 0.0;
  std::vector<double> dist(n, kInf);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[x] = 0.0;
  heap.emplace(0.0, x);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == y) return d;
    for (auto [v, len] : adj_[u]) {
      double nd = d + len;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  throw unreachable_error("BaseSpace: nodes unreachable (graph invariant violated)");
}

std::vector<int> BaseSpace::hop_ball(int x, int hops) const {
  const int n = node_count();
  if (x < 0 || x >= n) throw std::invalid_argument("BaseSpace: node id out of range");
  if (hops < 0) throw std::invalid_argument("BaseSpace: negative hop radius");
  std::vector<int> depth(n, -1);
  std::queue<int> bfs;
  depth[x] = 0;
  bfs.push(x);
  std::vector<int> ball{x};
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    if (depth[u] == hops) continue;
    for (auto [v, len] : adj_[u]) {
      (void)len;
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        ball.push_back(v);
        bfs.push(v);
      }
    }
  }
  std::sort(ball.begin(), ball.end());
  return ball;
}

double path_length(const BaseSpace& g, const SpacePath& path) {
  if (path.nodes.empty()) throw std::invalid_argument("path_length: empty path");
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    int u = path.nodes[i], v = path.nodes[i + 1];
    const auto& nbrs = g.neighbors(u);
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), std::make_pair(v, -kInf));
    if (it == nbrs.end() || it->first != v)
      throw std::invalid_argument("path_length: consecutive nodes not adjacent (invalid path)");
    total += it->second;
  }
  return total;
}

double conformal_distance(const BaseSpace& g, const std::function<double(int)>& weight,
                          int x, int y) {
  const int n = g.node_count();
  if (x < 0 || x >= n || y < 0 || y >= n)
    throw std::invalid_argument("conformal_distance: node id out of range");
  std::vector<double> w(n, std::numeric_limits<double>::quiet_NaN());
  auto node_weight = [&](int u) {
    if (std::isnan(w[u])) {
      w[u] = weight(u);
      if (!(w[u] > 0.0) || !std::isfinite(w[u]))
        throw std::domain_error("conformal_distance: weight must be positive and finite");
    }
    return w[u];
  };
  if (x == y) {
    node_weight(x);  // still validate at the queried node
    return 0.0;
  }
  std::vector<double> dist(n, kInf);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[x] = 0.0;
  heap.emplace(0.0, x);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == y) return d;
    double wu = node_weight(u);
    for (auto [v, len] : g.neighbors(u)) {
      double cost = len * 0.5 * (wu + node_weight(v));
      double nd = d + cost;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  throw unreachable_error("conformal_distance: nodes unreachable");
}

std::vector<int> conformal_shortest_path(const BaseSpace& g,
                                         const std::function<double(int)>& weight, int x, int y) {
  const int n = g.node_count();
  if (x < 0 || x >= n || y < 0 || y >= n)
    throw std::invalid_argument("conformal_shortest_path: node id out of range");
  std::vector<double> w(n, std::numeric_limits<double>::quiet_NaN());
  auto node_weight = [&](int u) {
    if (std::isnan(w[u])) {
      w[u] = weight(u);
      if (!(w[u] > 0.0) || !std::isfinite(w[u]))
        throw std::domain_error("conformal_shortest_path: weight must be positive and finite");
    }
    return w[u];
  };
  if (x == y) {
    node_weight(x);
    return {x};
  }
  std::vector<double> dist(n, kInf);
  std::vector<int> pred(n, -1);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[x] = 0.0;
  heap.emplace(0.0, x);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == y) break;
    double wu = node_weight(u);
    for (auto [v, len] : g.neighbors(u)) {
      double nd = d + len * 0.5 * (wu + node_weight(v));
      if (nd < dist[v] || (nd == dist[v] && u < pred[v])) {
        dist[v] = nd;
        pred[v] = u;
        heap.emplace(nd, v);
      }
    }
  }
  if (pred[y] < 0) throw unreachable_error("conformal_shortest_path: nodes unreachable");
  std::vector<int> path{y};
  for (int u = pred[y]; u >= 0; u = pred[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

BaseSpace make_path_graph(int n, double total_len) {
  if (n < 2) throw std::invalid_argument("make_path_graph: need at least 2 nodes");
  if (!(total_len > 0.0)) throw std::invalid_argument("make_path_graph: length must be positive");
  std::vector<std::string> names(n);
  for (int i = 0; i < n; ++i) names[i] = std::to_string(i);
  std::vector<BaseSpace::Edge> edges(n - 1);
  const double step = total_len / (n - 1);
  for (int i = 0; i + 1 < n; ++i) edges[i] = {i, i + 1, step};
  BaseSpace g(std::move(names), edges);
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = i * step;
  g.set_positions(std::move(pos));
  return g;
}

BaseSpace subdivide(const BaseSpace& g, int k) {
  if (k < 1) throw std::invalid_argument("subdivide: k must be >= 1");
  const int n = g.node_count();
  std::vector<std::string> names;
  names.reserve(n + g.edges().size() * (k - 1));
  for (int i = 0; i < n; ++i) names.push_back(g.node_name(i));
  std::vector<double> pos;
  if (g.has_positions()) {
    pos.reserve(names.capacity());
    for (int i = 0; i < n; ++i) pos.push_back(g.position(i));
  }
  std::vector<BaseSpace::Edge> edges;
  int next = n;
  for (size_t ei = 0; ei < g.edges().size(); ++ei) {
    const auto& e = g.edges()[ei];
    double piece = e.len / k;
    int prev = e.u;
    for (int j = 1; j < k; ++j) {
      names.push_back(g.node_name(e.u) + "_" + g.node_name(e.v) + "_" + std::to_string(j));
      if (g.has_positions()) {
        double t = static_cast<double>(j) / k;
        pos.push_back((1.0 - t) * g.position(e.u) + t * g.position(e.v));
      }
      edges.push_back({prev, next, piece});
      prev = next++;
    }
    edges.push_back({prev, e.v, piece});
  }
  BaseSpace out(std::move(names), edges);
  if (g.has_positions()) out.set_positions(std::move(pos));
  return out;
}

}  // namespace lorprod
