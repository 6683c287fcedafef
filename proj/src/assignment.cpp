#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "rearrange/errors.hpp"
#include "rearrange/transport.hpp"

namespace rearrange {

namespace {

// Successive shortest paths with Johnson potentials on a transportation network.
class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : adj_(nodes), potential_(nodes, 0.0) {}

  void add_edge(int from, int to, double cap, double cost) {
    adj_[from].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, cap, cost});
    adj_[to].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0.0, -cost});
  }

  // Pushes up to `demand` from s to t; returns {flow, cost}.
  std::pair<double, double> run(int s, int t, double demand) {
    constexpr double kCapEps = 1e-15;
    const auto n = static_cast<int>(adj_.size());
    const double inf = std::numeric_limits<double>::infinity();
    double flow = 0.0;
    double cost = 0.0;
    std::vector<double> dist(n);
    std::vector<int> via(n);
    using Item = std::pair<double, int>;
    while (flow < demand - 1e-13) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[s] = 0.0;
      heap.emplace(0.0, s);
      while (!heap.empty()) {
        const auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[u]) continue;
        for (int id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap <= kCapEps) continue;
          // reduced costs are >= 0 up to rounding
          const double nd = du + std::max(0.0, e.cost + potential_[u] - potential_[e.to]);
          if (nd < dist[e.to] - 1e-15) {
            dist[e.to] = nd;
            via[e.to] = id;
            heap.emplace(nd, e.to);
          }
        }
      }
      if (dist[t] == inf) break;
      // min(dist, dist[t]) keeps every residual reduced cost nonnegative,
      // including edges out of nodes this search did not reach.
      for (int v = 0; v < n; ++v) potential_[v] += std::min(dist[v], dist[t]);
      double push = demand - flow;
      for (int v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
      for (int v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
        cost += push * edges_[via[v]].cost;
      }
      flow += push;
    }
    return {flow, cost};
  }

 private:
  struct Edge {
    int to;
    double cap;
    double cost;
  };
  std::vector<std::vector<int>> adj_;
  std::vector<Edge> edges_;
  std::vector<double> potential_;
};

}  // namespace

double assignment_oracle(const Mat& source, const GradientAtomCloud& cloud) {
  const auto m = static_cast<int>(source.cols());
  const auto k = static_cast<int>(cloud.size());
  if (m == 0 || k == 0) throw InputError("assignment_oracle: empty input");
  if (m > 2000 || k > 50) {
    throw ResourceError("assignment_oracle: limited to 2000 source points and 50 atoms");
  }
  if (source.rows() != cloud.dim) throw ValidationError("assignment_oracle: dimension mismatch");
  double total = 0.0;
  for (double w : cloud.weights) total += w;

  // node 0 source, 1..m points, m+1..m+k atoms, m+k+1 sink
  const int s = 0;
  const int t = m + k + 1;
  MinCostFlow net(m + k + 2);
  const double supply = 1.0 / m;
  for (int i = 0; i < m; ++i) net.add_edge(s, 1 + i, supply, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      const double c = (source.col(i) - cloud.atoms.col(j)).squaredNorm();
      net.add_edge(1 + i, 1 + m + j, 1.0, c);
    }
  }
  for (int j = 0; j < k; ++j) {
    net.add_edge(1 + m + j, t, cloud.weights[static_cast<std::size_t>(j)] / total, 0.0);
  }
  const auto [flow, cost] = net.run(s, t, 1.0);
  if (flow < 1.0 - 1e-9) throw ConvergenceError("assignment_oracle: flow incomplete", 1.0 - flow, 0);
  return cost;
}

}  // namespace rearrange
