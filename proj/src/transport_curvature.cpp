#include "lorprod/transport_curvature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lorprod {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassEps = 1e-15;  // remaining-mass threshold in couplings

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}
std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

// Composite Simpson with K panels, written as width * (S / (6K)) so a
// constant integrand integrates exactly (S is then an exact small-integer
// multiple of the constant).
template <class F>
double simpson(F&& f, double a, double b, int panels) {
  if (a == b) return 0.0;
  const double width = b - a;
  const double dx = width / panels;
  double s = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double x0 = a + k * dx;
    const double x1 = (k + 1 == panels) ? b : a + (k + 1) * dx;
    s += f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1);
  }
  return width * (s / (6.0 * panels));
}

constexpr int kPanels = 64;

}  // namespace

// ---------------------------------------------------------------------------
// Measures and entropy
// ---------------------------------------------------------------------------

void validate_measure(const DiscreteMeasure& mu) {
  if (mu.atom.size() != mu.weight.size())
    throw std::invalid_argument("measure: atom/weight size mismatch");
  if (mu.atom.empty()) throw std::invalid_argument("measure: empty support");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.atom.size(); ++i) {
    require_finite(mu.atom[i], "measure atom");
    require_finite(mu.weight[i], "measure weight");
    if (mu.weight[i] < 0.0) throw std::invalid_argument("measure: negative weight");
    total += mu.weight[i];
    for (std::size_t j = i + 1; j < mu.atom.size(); ++j)
      if (mu.atom[i] == mu.atom[j]) throw std::invalid_argument("measure: atoms must be distinct");
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument(fmt("measure: weights sum to %.17g, not 1", total));
}

double entropy(const DiscreteMeasure& mu, const DiscreteMeasure& reference) {
  validate_measure(mu);
  validate_measure(reference);
  double ent = 0.0;
  for (std::size_t i = 0; i < mu.atom.size(); ++i) {
    const double w = mu.weight[i];
    if (w == 0.0) continue;  // 0 log 0 = 0
    double r = 0.0;
    for (std::size_t j = 0; j < reference.atom.size(); ++j)
      if (reference.atom[j] == mu.atom[i]) {
        r = reference.weight[j];
        break;
      }
    if (r == 0.0) return kInf;  // mass outside the reference support
    ent += w * std::log(w / r);
  }
  return ent;
}

// ---------------------------------------------------------------------------
// Distortion coefficients
// ---------------------------------------------------------------------------

SigmaValue sigma(const SigmaParams& p) {
  require_finite(p.kappa, "sigma kappa");
  require_finite(p.theta, "sigma theta");
  if (!(p.t >= 0.0 && p.t <= 1.0))
    throw std::invalid_argument(fmt("sigma: t = %.17g outside [0, 1]", p.t));
  if (p.theta < 0.0) throw std::invalid_argument("sigma: theta must be nonnegative");
  const double q = p.kappa * p.theta * p.theta;
  if (q == 0.0) return {p.t, false};
  if (q >= kPi * kPi) return {kInf, true};
  if (p.kappa > 0.0) {
    const double rk = std::sqrt(p.kappa);
    return {std::sin(p.t * p.theta * rk) / std::sin(p.theta * rk), false};
  }
  const double rk = std::sqrt(-p.kappa);
  return {std::sinh(p.t * p.theta * rk) / std::sinh(p.theta * rk), false};
}

// ---------------------------------------------------------------------------
// Lapse line
// ---------------------------------------------------------------------------

LapseLine::LapseLine(std::function<double(double)> h, TimeInterval interval)
    : h_(std::move(h)), interval_(interval) {
  if (!h_) throw std::invalid_argument("lapse line: missing lapse function");
  if (!(interval_.lo < interval_.hi))
    throw std::invalid_argument("lapse line: interval must have positive length");
  for (int k = 0; k <= 64; ++k) {
    const double s = interval_.lo + (interval_.hi - interval_.lo) * (k / 64.0);
    const double v = h_(s);
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(fmt("lapse line: lapse is %.17g at s = %.17g", v, s));
  }
}

double LapseLine::H(double t) const {
  const double slack = 1e-9 * (interval_.length() + 1.0);
  if (t < interval_.lo - slack || t > interval_.hi + slack)
    throw std::domain_error(fmt("lapse line: t = %.17g outside the interval", t));
  const double tc = std::clamp(t, interval_.lo, interval_.hi);
  return simpson(h_, interval_.lo, tc, kPanels);
}

double LapseLine::H_inv(double u) const {
  const double total = H(interval_.hi);
  const double slack = 1e-9 * (total + 1.0);
  if (u < -slack || u > total + slack)
    throw std::domain_error(fmt("lapse line: H-coordinate %.17g outside [0, %.17g]", u, total));
  const double uc = std::clamp(u, 0.0, total);
  if (uc == 0.0) return interval_.lo;
  if (uc == total) return interval_.hi;
  double lo = interval_.lo, hi = interval_.hi;
  for (int it = 0; it < 120 && lo < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (H(mid) < uc)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Quadratic transport on the lapse line
// ---------------------------------------------------------------------------

namespace {

struct SortedAtoms {
  std::vector<int> order;  // original indices sorted by atom value
  std::vector<double> hval;
};

SortedAtoms push_sorted(const DiscreteMeasure& nu, const LapseLine& h) {
  SortedAtoms out;
  out.order.resize(nu.atom.size());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::sort(out.order.begin(), out.order.end(),
            [&](int a, int b) { return nu.atom[a] < nu.atom[b]; });
  out.hval.resize(nu.atom.size());
  for (std::size_t i = 0; i < nu.atom.size(); ++i) out.hval[i] = h.H(nu.atom[i]);
  return out;
}

}  // namespace

WassersteinResult wasserstein_h(const DiscreteMeasure& nu0, const DiscreteMeasure& nu1,
                                const LapseLine& h) {
  validate_measure(nu0);
  validate_measure(nu1);
  const SortedAtoms s0 = push_sorted(nu0, h);
  const SortedAtoms s1 = push_sorted(nu1, h);
  WassersteinResult res;
  double cost2 = 0.0;
  std::size_t a = 0, b = 0;
  double ra = nu0.weight[static_cast<std::size_t>(s0.order[0])];
  double rb = nu1.weight[static_cast<std::size_t>(s1.order[0])];
  while (a < s0.order.size() && b < s1.order.size()) {
    if (ra <= kMassEps) {
      if (++a < s0.order.size()) ra = nu0.weight[static_cast<std::size_t>(s0.order[a])];
      continue;
    }
    if (rb <= kMassEps) {
      if (++b < s1.order.size()) rb = nu1.weight[static_cast<std::size_t>(s1.order[b])];
      continue;
    }
    const double w = std::min(ra, rb);
    const int i = s0.order[a], j = s1.order[b];
    const double d = s1.hval[static_cast<std::size_t>(j)] - s0.hval[static_cast<std::size_t>(i)];
    cost2 += w * 0.5 * d * d;
    res.plan.rows.push_back({i, j, w});
    ra -= w;
    rb -= w;
  }
  res.value = std::sqrt(cost2);
  return res;
}

DiscreteMeasure displacement_interpolate(const DiscreteMeasure& nu0, const DiscreteMeasure& nu1,
                                         const LapseLine& h, const TransportPlan& plan,
                                         double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("displacement interpolation: t outside [0, 1]");
  std::vector<std::pair<double, double>> atoms;  // (position, weight)
  for (const auto& row : plan.rows) {
    const double u0 = h.H(nu0.atom[static_cast<std::size_t>(row.i)]);
    const double u1 = h.H(nu1.atom[static_cast<std::size_t>(row.j)]);
    atoms.emplace_back(h.H_inv((1.0 - t) * u0 + t * u1), row.w);
  }
  std::sort(atoms.begin(), atoms.end());
  DiscreteMeasure out;
  for (const auto& [pos, w] : atoms) {
    if (!out.atom.empty() && out.atom.back() == pos)
      out.weight.back() += w;
    else {
      out.atom.push_back(pos);
      out.weight.push_back(w);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lorentzian p-transport cost
// ---------------------------------------------------------------------------

namespace {

void validate_event_measure(const CausalDag& dag, const EventMeasure& mu, const char* name) {
  if (mu.atom.size() != mu.weight.size())
    throw std::invalid_argument(std::string(name) + ": atom/weight size mismatch");
  if (mu.atom.empty()) throw std::invalid_argument(std::string(name) + ": empty support");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.atom.size(); ++i) {
    const Event e = mu.atom[i];
    if (e.layer < 0 || e.layer > dag.layer_count() || e.node < 0 || e.node >= dag.node_count())
      throw std::invalid_argument(std::string(name) + ": atom outside the mesh");
    require_finite(mu.weight[i], "event measure weight");
    if (mu.weight[i] < 0.0) throw std::invalid_argument(std::string(name) + ": negative weight");
    total += mu.weight[i];
    for (std::size_t j = i + 1; j < mu.atom.size(); ++j)
      if (mu.atom[i] == mu.atom[j])
        throw std::invalid_argument(std::string(name) + ": atoms must be distinct");
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument(fmt("event measure weights sum to %.17g, not 1", total));
}

// Prefix sums of the stay-step time reach at one node: vertical tau between
// layers i <= j is stay[j] - stay[i].
std::vector<double> stay_prefix(const CausalDag& dag, int node) {
  std::vector<double> pre(static_cast<std::size_t>(dag.layer_count()) + 1, 0.0);
  const int self = dag.ball_index(node, node);
  for (int l = 0; l < dag.layer_count(); ++l)
    pre[static_cast<std::size_t>(l) + 1] = pre[static_cast<std::size_t>(l)] +
                                           dag.step(l, node, self).hdt;
  return pre;
}

struct NodeProfile {
  int node = 0;
  std::vector<int> idx;        // atom indices, sorted by layer
  std::vector<double> weight;  // normalized within the node
  double mass = 0.0;
};

std::vector<NodeProfile> group_by_node(const EventMeasure& mu) {
  std::vector<NodeProfile> groups;
  for (std::size_t i = 0; i < mu.atom.size(); ++i) {
    const int x = mu.atom[i].node;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const NodeProfile& g) { return g.node == x; });
    if (it == groups.end()) {
      groups.push_back({x, {}, {}, 0.0});
      it = std::prev(groups.end());
    }
    it->idx.push_back(static_cast<int>(i));
    it->mass += mu.weight[i];
  }
  std::sort(groups.begin(), groups.end(),
            [](const NodeProfile& a, const NodeProfile& b) { return a.node < b.node; });
  for (auto& g : groups) {
    std::sort(g.idx.begin(), g.idx.end(),
              [&](int a, int b) { return mu.atom[static_cast<std::size_t>(a)].layer <
                                         mu.atom[static_cast<std::size_t>(b)].layer; });
    g.weight.reserve(g.idx.size());
    for (int i : g.idx) g.weight.push_back(g.mass > 0.0 ? mu.weight[static_cast<std::size_t>(i)] / g.mass : 0.0);
  }
  return groups;
}

// True when every node carries the same normalized time profile as the first
// (same layers in order, weights within 1e-12): the product-vertical shape.
bool profiles_match(const EventMeasure& mu, const std::vector<NodeProfile>& groups) {
  const NodeProfile& ref = groups.front();
  for (const auto& g : groups) {
    if (g.idx.size() != ref.idx.size()) return false;
    for (std::size_t k = 0; k < g.idx.size(); ++k) {
      if (mu.atom[static_cast<std::size_t>(g.idx[k])].layer !=
          mu.atom[static_cast<std::size_t>(ref.idx[k])].layer)
        return false;
      if (std::abs(g.weight[k] - ref.weight[k]) > 1e-12) return false;
    }
  }
  return true;
}

struct Enumeration {
  double best = -1.0;
  TransportPlan best_plan;
  double max_tau_p = 0.0;
  const std::vector<std::vector<double>>* tau_p = nullptr;
  const std::vector<std::vector<char>>* feasible = nullptr;
  std::vector<double> rem_r, rem_c;
  TransportPlan current;
};

void enumerate(Enumeration& e, double acc) {
  int i = -1;
  double remaining = 0.0;
  for (std::size_t k = 0; k < e.rem_r.size(); ++k) {
    remaining += e.rem_r[k];
    if (i < 0 && e.rem_r[k] > kMassEps) i = static_cast<int>(k);
  }
  if (i < 0) {
    if (acc > e.best) {
      e.best = acc;
      e.best_plan = e.current;
    }
    return;
  }
  if (acc + remaining * e.max_tau_p < e.best) return;  // cannot improve
  const auto& row_ok = (*e.feasible)[static_cast<std::size_t>(i)];
  const auto& row_tp = (*e.tau_p)[static_cast<std::size_t>(i)];
  for (std::size_t j = 0; j < e.rem_c.size(); ++j) {
    if (!row_ok[j] || e.rem_c[j] <= kMassEps) continue;
    const double w = std::min(e.rem_r[static_cast<std::size_t>(i)], e.rem_c[j]);
    e.rem_r[static_cast<std::size_t>(i)] -= w;
    e.rem_c[j] -= w;
    e.current.rows.push_back({i, static_cast<int>(j), w});
    enumerate(e, acc + w * row_tp[j]);
    e.current.rows.pop_back();
    e.rem_r[static_cast<std::size_t>(i)] += w;
    e.rem_c[j] += w;
  }
}

}  // namespace

EllPResult ell_p(const CausalDag& dag, const EventMeasure& mu, const EventMeasure& nu, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument(fmt("ell_p: exponent p = %.17g outside (0, 1)", p));
  validate_event_measure(dag, mu, "ell_p first measure");
  validate_event_measure(dag, nu, "ell_p second measure");
  const std::size_t m = mu.atom.size(), n = nu.atom.size();
  if (m > 8 || n > 8)
    throw std::length_error("ell_p: exhaustive search supports at most 8x8 atoms");

  // tau / feasibility matrices from the mesh dynamic program.
  std::vector<std::vector<double>> tau_p(m, std::vector<double>(n, 0.0));
  std::vector<std::vector<char>> feasible(m, std::vector<char>(n, 0));
  EllPResult res;
  for (std::size_t i = 0; i < m; ++i) {
    const TimeSeparationTable table = time_separation_table(dag, mu.atom[i]);
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      const TimeSepResult r = time_separation(table, nu.atom[j]);
      if (r.reachable) {
        feasible[i][j] = 1;
        tau_p[i][j] = std::pow(r.tau, p);
        any = true;
      }
    }
    if (!any && mu.weight[i] > kMassEps)
      res.infeasible.push_back(fmt("atom (layer %.17g, node %.17g) has no causal partner",
                                   double(mu.atom[i].layer), double(mu.atom[i].node)));
  }

  // Product-vertical fast path: same spatial marginal, identical normalized
  // time profiles on every node, node-independent vertical time reach, and a
  // forward-running quantile pairing.
  const std::vector<NodeProfile> gm = group_by_node(mu);
  const std::vector<NodeProfile> gn = group_by_node(nu);
  bool vertical = gm.size() == gn.size();
  if (vertical)
    for (std::size_t k = 0; k < gm.size(); ++k)
      if (gm[k].node != gn[k].node || std::abs(gm[k].mass - gn[k].mass) > 1e-12) vertical = false;
  if (vertical) vertical = profiles_match(mu, gm) && profiles_match(nu, gn);
  if (vertical && gm.size() > 1) {
    const std::vector<double> ref = stay_prefix(dag, gm.front().node);
    for (std::size_t k = 1; k < gm.size() && vertical; ++k)
      if (stay_prefix(dag, gm[k].node) != ref) vertical = false;
  }
  if (vertical) {
    // Monotone pairing of the shared time profile, priced per node.
    const NodeProfile& A0 = gm.front();
    const NodeProfile& B0 = gn.front();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // positions in the profiles
    std::vector<double> pair_w;                              // normalized mass
    {
      std::size_t a = 0, b = 0;
      double ra = A0.weight[0], rb = B0.weight[0];
      while (a < A0.idx.size() && b < B0.idx.size()) {
        if (ra <= kMassEps) {
          if (++a < A0.idx.size()) ra = A0.weight[a];
          continue;
        }
        if (rb <= kMassEps) {
          if (++b < B0.idx.size()) rb = B0.weight[b];
          continue;
        }
        const int li = mu.atom[static_cast<std::size_t>(A0.idx[a])].layer;
        const int lj = nu.atom[static_cast<std::size_t>(B0.idx[b])].layer;
        if (lj < li) {
          vertical = false;  // pairing would run backward in time
          break;
        }
        const double w = std::min(ra, rb);
        pairs.emplace_back(a, b);
        pair_w.push_back(w);
        ra -= w;
        rb -= w;
      }
    }
    if (vertical) {
      const std::vector<double> pre = stay_prefix(dag, gm.front().node);
      double sum_p = 0.0;
      for (std::size_t gi = 0; gi < gm.size(); ++gi) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          const int i = gm[gi].idx[pairs[k].first];
          const int j = gn[gi].idx[pairs[k].second];
          const int li = mu.atom[static_cast<std::size_t>(i)].layer;
          const int lj = nu.atom[static_cast<std::size_t>(j)].layer;
          const double tau = pre[static_cast<std::size_t>(lj)] - pre[static_cast<std::size_t>(li)];
          const double w = pair_w[k] * gm[gi].mass;
          if (w <= kMassEps) continue;
          sum_p += w * std::pow(tau, p);
          res.coupling.rows.push_back({i, j, w});
        }
      }
      res.value = sum_p > 0.0 ? std::pow(sum_p, 1.0 / p) : 0.0;
      res.causal = true;
      std::sort(res.coupling.rows.begin(), res.coupling.rows.end(),
                [](const TransportPlan::Row& a, const TransportPlan::Row& b) {
                  return a.i != b.i ? a.i < b.i : a.j < b.j;
                });
      return res;
    }
  }

  // Exhaustive search over the coupling polytope's vertices.
  Enumeration e;
  e.tau_p = &tau_p;
  e.feasible = &feasible;
  e.rem_r = mu.weight;
  e.rem_c = nu.weight;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (feasible[i][j]) e.max_tau_p = std::max(e.max_tau_p, tau_p[i][j]);
  enumerate(e, 0.0);
  if (e.best < 0.0) {
    res.value = 0.0;  // sup over the empty set
    res.causal = false;
    return res;
  }
  res.value = e.best > 0.0 ? std::pow(e.best, 1.0 / p) : 0.0;
  res.coupling = e.best_plan;
  res.causal = true;
  return res;
}

// ---------------------------------------------------------------------------
// Cyclic monotonicity
// ---------------------------------------------------------------------------

CyclicReport check_cyclic(const std::vector<std::pair<double, double>>& support, double p,
                          const LapseLine& h) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("check_cyclic: p outside (0, 1)");
  if (support.empty()) throw std::invalid_argument("check_cyclic: empty support");
  if (support.size() > 8)
    throw std::length_error("check_cyclic: support size capped at 8 (factorial search)");
  const std::size_t n = support.size();
  std::vector<double> hs(n), ht(n);
  for (std::size_t i = 0; i < n; ++i) {
    hs[i] = h.H(support[i].first);
    ht[i] = h.H(support[i].second);
    if (ht[i] < hs[i])
      throw std::invalid_argument(fmt("check_cyclic: pair (%.17g, %.17g) is not causal",
                                      support[i].first, support[i].second));
  }
  CyclicReport rep;
  for (std::size_t i = 0; i < n; ++i) rep.diagonal_value += std::pow(ht[i] - hs[i], p);
  rep.worst_value = rep.diagonal_value;
  rep.worst_permutation.resize(n);
  std::iota(rep.worst_permutation.begin(), rep.worst_permutation.end(), 0);
  std::vector<int> perm(rep.worst_permutation);
  do {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ht[i] - hs[static_cast<std::size_t>(perm[i])];
      if (d < 0.0) {
        ok = false;
        break;
      }
      sum += std::pow(d, p);
    }
    if (ok && sum > rep.worst_value) {
      rep.worst_value = sum;
      rep.worst_permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  rep.pass = rep.worst_value <= rep.diagonal_value + 1e-12 * std::max(1.0, rep.diagonal_value);
  return rep;
}

// ---------------------------------------------------------------------------
// Distortion convexity
// ---------------------------------------------------------------------------

namespace {

ConvexityVerdict kn_convexity_impl(const EntropyCurve& u, double K, double N, double T,
                                   double tol, std::vector<double>* slacks) {
  if (u.t.size() != u.u.size() || u.t.size() < 2)
    throw std::invalid_argument("kn_convexity: need matching t/u samples (at least 2)");
  if (!(N > 0.0)) throw std::invalid_argument("kn_convexity: N must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("kn_convexity: spread T must be nonnegative");
  if (u.t.front() != 0.0 || u.t.back() != 1.0)
    throw std::invalid_argument("kn_convexity: the t-grid must span [0, 1]");
  for (std::size_t j = 1; j < u.t.size(); ++j)
    if (!(u.t[j] > u.t[j - 1]))
      throw std::invalid_argument("kn_convexity: the t-grid must be increasing");

  const auto uexp = [&](double v) { return v == kInf ? 0.0 : std::exp(-v / N); };
  const double e0 = uexp(u.u.front());
  const double e1 = uexp(u.u.back());
  ConvexityVerdict v;
  v.pass = true;
  v.worst_slack = kInf;
  if (slacks) slacks->assign(u.t.size(), 0.0);
  for (std::size_t j = 0; j < u.t.size(); ++j) {
    const double t = u.t[j];
    const SigmaValue s0 = sigma({K / N, 1.0 - t, T});
    const SigmaValue s1 = sigma({K / N, t, T});
    double slack;
    if ((s0.infinite && e1 != 0.0) || (s1.infinite && e0 != 0.0)) {
      // An infinite coefficient multiplies a positive endpoint value: the
      // inequality can only hold when the endpoint entropy is infinite.
      slack = -kInf;
      v.note = "infinite distortion coefficient demands infinite endpoint entropy";
    } else {
      // sigma^{1-t} weights the t=0 endpoint, sigma^{t} the t=1 endpoint; an
      // infinite coefficient only reaches this branch with a vanishing factor.
      const double lhs = uexp(u.u[j]);
      slack = lhs - (s0.infinite ? 0.0 : s0.value) * e0 - (s1.infinite ? 0.0 : s1.value) * e1;
    }
    if (slacks) (*slacks)[j] = slack;
    if (slack < v.worst_slack) {
      v.worst_slack = slack;
      v.worst_t = t;
    }
  }
  v.pass = v.worst_slack >= -tol;
  return v;
}

}  // namespace

ConvexityVerdict kn_convexity(const EntropyCurve& u, double K, double N, double T, double tol) {
  return kn_convexity_impl(u, K, N, T, tol, nullptr);
}

// ---------------------------------------------------------------------------
// Density fields
// ---------------------------------------------------------------------------

DensityField::DensityField(std::vector<double> times, std::vector<std::vector<double>> g,
                           std::vector<double> node_mass, std::function<double(double)> lapse)
    : times_(std::move(times)),
      g_(std::move(g)),
      node_mass_(std::move(node_mass)),
      lapse_([&] {
        if (times_.size() < 2) throw std::invalid_argument("density field: need >= 2 time samples");
        for (std::size_t i = 1; i < times_.size(); ++i)
          if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("density field: time samples must be increasing");
        return LapseLine(std::move(lapse), {times_.front(), times_.back()});
      }()) {
  if (node_mass_.empty()) throw std::invalid_argument("density field: no nodes");
  if (g_.size() != times_.size())
    throw std::invalid_argument("density field: one density row per time sample required");
  for (const auto& row : g_) {
    if (row.size() != node_mass_.size())
      throw std::invalid_argument("density field: density row width != node count");
    for (double v : row)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(fmt("density field: density %.17g is not positive", v));
  }
  normalizer_ = 0.0;
  for (double w : node_mass_) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("density field: node masses must be positive");
    normalizer_ += w;
  }
  for (double& w : node_mass_) w /= normalizer_;
}

double DensityField::g_at(double s, int x) const {
  if (x < 0 || x >= node_count()) throw std::invalid_argument("density field: node out of range");
  const double span = times_.back() - times_.front();
  if (s < times_.front() - 1e-12 * (span + 1.0) || s > times_.back() + 1e-12 * (span + 1.0))
    throw std::domain_error(fmt("density field: s = %.17g outside the sampled window", s));
  const double sc = std::clamp(s, times_.front(), times_.back());
  const auto it = std::upper_bound(times_.begin(), times_.end(), sc);
  const std::size_t k1 = std::min<std::size_t>(
      static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - times_.begin())),
      times_.size() - 1);
  const std::size_t k0 = k1 - 1;
  const double t0 = times_[k0], t1 = times_[k1];
  const double w = (sc - t0) / (t1 - t0);
  const std::size_t xi = static_cast<std::size_t>(x);
  return (1.0 - w) * g_[k0][xi] + w * g_[k1][xi];
}

double DensityField::density_bound(double a, double b) const {
  if (!(a < b)) throw std::invalid_argument("density bound: window must have positive length");
  std::vector<double> pts{a, b};
  for (double t : times_)
    if (t > a && t < b) pts.push_back(t);
  double C = 1.0;
  for (double s : pts)
    for (int x = 0; x < node_count(); ++x) {
      const double v = g_at(s, x);
      C = std::max({C, v, 1.0 / v});
    }
  return C;
}

double DensityField::region_mass(const std::vector<int>& region) const {
  if (region.empty()) throw std::invalid_argument("region must be non-empty");
  double mass = 0.0;
  std::vector<char> seen(static_cast<std::size_t>(node_count()), 0);
  for (int x : region) {
    if (x < 0 || x >= node_count()) throw std::invalid_argument("region node out of range");
    if (seen[static_cast<std::size_t>(x)]) throw std::invalid_argument("region nodes must be distinct");
    seen[static_cast<std::size_t>(x)] = 1;
    mass += node_mass_[static_cast<std::size_t>(x)];
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Vertical probe
// ---------------------------------------------------------------------------

namespace {

void validate_case(const DensityField& field, const VerticalCase& c) {
  const TimeInterval J = field.interval();
  const auto check_window = [&](double a, double b, const char* which) {
    if (!(a < b))
      throw std::invalid_argument(std::string("probe case: ") + which +
                                  " window must have positive length");
    if (a < J.lo || b > J.hi)
      throw std::invalid_argument(std::string("probe case: ") + which +
                                  " window leaves the sampled time interval");
  };
  check_window(c.a0, c.b0, "first");
  check_window(c.a1, c.b1, "second");
  field.region_mass(c.region);  // validates the region
}

// Mean entropy of the uniform window measure over the region, against the
// density field's product reference.
double window_entropy(const DensityField& field, const VerticalCase& c, double mB, double ha,
                      double hb) {
  const LapseLine& line = field.lapse();
  const double sa = line.H_inv(ha);
  const double sb = line.H_inv(hb);
  const double len = hb - ha;
  const auto integrand = [&](double s) {
    double acc = 0.0;
    for (int x : c.region)
      acc += field.node_mass(x) * std::log(field.g_at(s, x));
    return (acc / mB) * line.h_at(s);
  };
  const double avg_log_g = simpson(integrand, sa, sb, kPanels) / len;
  return -std::log(len) - std::log(mB) - avg_log_g;
}

}  // namespace

ProbeReport wtcd_probe(const DensityField& field, double p, double K, double N,
                       const std::vector<VerticalCase>& cases, int t_samples, Exec exec) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("wtcd probe: p outside (0, 1)");
  if (!(N > 0.0)) throw std::invalid_argument("wtcd probe: N must be positive");
  if (t_samples < 3) throw std::invalid_argument("wtcd probe: need at least 3 time samples");
  if (cases.empty()) throw std::invalid_argument("wtcd probe: no cases");
  for (const auto& c : cases) validate_case(field, c);

  ProbeReport rep;
  rep.cases.resize(cases.size());
  const bool par = exec == Exec::parallel;
  const int count = static_cast<int>(cases.size());
#pragma omp parallel for schedule(static) if (par)
  for (int ci = 0; ci < count; ++ci) {
    const VerticalCase& c = cases[static_cast<std::size_t>(ci)];
    const LapseLine& line = field.lapse();
    const double mB = field.region_mass(c.region);
    const double ha0 = line.H(c.a0), hb0 = line.H(c.b0);
    const double ha1 = line.H(c.a1), hb1 = line.H(c.b1);
    // Quadratic cost between two uniform windows in the H coordinate:
    // the quantile map is affine, so the integral is exact.
    const double d0 = ha1 - ha0;
    const double dl = (hb1 - ha1) - (hb0 - ha0);
    const double D = std::sqrt(0.5 * (d0 * d0 + d0 * dl + dl * dl / 3.0));

    ProbeCaseReport& out = rep.cases[static_cast<std::size_t>(ci)];
    out.displacement = D;
    out.curve.t.resize(static_cast<std::size_t>(t_samples));
    out.curve.u.resize(static_cast<std::size_t>(t_samples));
    for (int j = 0; j < t_samples; ++j) {
      const double t = static_cast<double>(j) / (t_samples - 1);
      const double ha = (1.0 - t) * ha0 + t * ha1;
      const double hb = (1.0 - t) * hb0 + t * hb1;
      out.curve.t[static_cast<std::size_t>(j)] = t;
      out.curve.u[static_cast<std::size_t>(j)] = window_entropy(field, c, mB, ha, hb);
    }
    out.verdict = kn_convexity_impl(out.curve, K, N, D, 1e-9, &out.slack);
  }
  rep.all_pass = true;
  for (const auto& c : rep.cases) rep.all_pass = rep.all_pass && c.verdict.pass;
  return rep;
}

double entropy_decomposition(const DensityField& field, const VerticalCase& c, int t_samples) {
  if (t_samples < 2) throw std::invalid_argument("entropy decomposition: need >= 2 samples");
  validate_case(field, c);
  const LapseLine& line = field.lapse();
  const double mB = field.region_mass(c.region);
  const double ha0 = line.H(c.a0), hb0 = line.H(c.b0);
  const double ha1 = line.H(c.a1), hb1 = line.H(c.b1);
  double residual = 0.0;
  for (int j = 0; j < t_samples; ++j) {
    const double t = static_cast<double>(j) / (t_samples - 1);
    const double ha = (1.0 - t) * ha0 + t * ha1;
    const double hb = (1.0 - t) * hb0 + t * hb1;
    const double lhs = window_entropy(field, c, mB, ha, hb);
    // Right-hand side: per-node entropies, averaged, minus log m(B); the
    // association order differs, so agreement is a real identity check.
    const double sa = line.H_inv(ha), sb = line.H_inv(hb);
    const double len = hb - ha;
    double avg = 0.0;
    for (int x : c.region) {
      const auto integrand = [&](double s) { return std::log(field.g_at(s, x)) * line.h_at(s); };
      const double ex = -std::log(len) - simpson(integrand, sa, sb, kPanels) / len;
      avg += field.node_mass(x) * ex;
    }
    const double rhs = avg / mB - std::log(mB);
    residual = std::max(residual, std::abs(lhs - rhs));
  }
  return residual;
}

double delta_smooth(const DensityField& field, int x, double delta, double N, double a) {
  if (x < 0 || x >= field.node_count())
    throw std::invalid_argument("delta smoothing: node out of range");
  if (!(delta > 0.0)) throw std::invalid_argument("delta smoothing: delta must be positive");
  if (!(N > 0.0)) throw std::invalid_argument("delta smoothing: N must be positive");
  const LapseLine& line = field.lapse();
  const double total = line.H(field.interval().hi);
  const double ua = line.H(a);
  if (ua - delta < -1e-12 || ua + delta > total + 1e-12)
    throw std::domain_error(
        fmt("delta smoothing: window of h-radius %.17g around %.17g leaves the sampled "
            "time interval",
            delta, a));
  const double s_lo = line.H_inv(ua - delta);
  const double s_hi = line.H_inv(ua + delta);
  const auto integrand = [&](double s) { return std::log(field.g_at(s, x)) * line.h_at(s); };
  const double len = line.H(s_hi) - line.H(s_lo);
  const double avg = simpson(integrand, s_lo, s_hi, kPanels) / len;
  return std::exp(avg / N);
}

// ---------------------------------------------------------------------------
// Concavity rigidity
// ---------------------------------------------------------------------------

RigidityReport concavity_rigidity(const DensityField& field, double K, double N,
                                  const std::vector<std::pair<double, double>>& windows) {
  if (!(N > 0.0)) throw std::invalid_argument("rigidity: N must be positive");
  if (windows.empty()) throw std::invalid_argument("rigidity: no windows");
  const TimeInterval J = field.interval();
  for (const auto& [a, b] : windows) {
    if (!(a < b)) throw std::invalid_argument("rigidity: window must have positive length");
    if (a < J.lo || b > J.hi)
      throw std::invalid_argument("rigidity: window leaves the sampled time interval");
  }
  const LapseLine& line = field.lapse();
  constexpr int kGrid = 9;
  const double t_list[3] = {0.25, 0.5, 0.75};

  RigidityReport rep;
  rep.nodes.resize(static_cast<std::size_t>(field.node_count()));
  double fmax_all = 0.0;
  double slope_measured = 0.0;
  rep.slope_bound = kInf;

  for (const auto& [A, B] : windows) {
    double grid_s[kGrid];
    double grid_H[kGrid];
    for (int q = 0; q < kGrid; ++q) {
      grid_s[q] = A + (B - A) * (static_cast<double>(q) / (kGrid - 1));
      grid_H[q] = line.H(grid_s[q]);
    }
    const double window_len_h = grid_H[kGrid - 1] - grid_H[0];
    double fmax_window = 0.0;

    for (int x = 0; x < field.node_count(); ++x) {
      RigidityReport::NodeVerdict& nv = rep.nodes[static_cast<std::size_t>(x)];
      nv.node = x;
      double f[kGrid];
      for (int q = 0; q < kGrid; ++q) {
        f[q] = std::pow(field.g_at(grid_s[q], x), 1.0 / N);
        fmax_window = std::max(fmax_window, f[q]);
        fmax_all = std::max(fmax_all, f[q]);
      }
      for (int q = 0; q + 1 < kGrid; ++q)
        slope_measured =
            std::max(slope_measured, std::abs(f[q + 1] - f[q]) / (grid_H[q + 1] - grid_H[q]));
      const double tol = 1e-9 * (1.0 + fmax_window);
      for (int qa = 0; qa < kGrid; ++qa)
        for (int qb = qa + 1; qb < kGrid; ++qb) {
          const double theta = grid_H[qb] - grid_H[qa];
          for (double t : t_list) {
            const SigmaValue s0 = sigma({K / N, 1.0 - t, theta});
            const SigmaValue s1 = sigma({K / N, t, theta});
            double slack;
            if (s0.infinite || s1.infinite) {
              // g > 0 everywhere, so an infinite coefficient cannot be
              // compensated: the triple fails outright.
              slack = -kInf;
            } else {
              const double smid = line.H_inv((1.0 - t) * grid_H[qa] + t * grid_H[qb]);
              const double fmid = std::pow(field.g_at(smid, x), 1.0 / N);
              slack = fmid - s0.value * f[qa] - s1.value * f[qb];
            }
            if (slack < -tol) {
              nv.concave_pass = false;
              nv.max_violation = std::max(nv.max_violation, -slack);
            }
          }
        }
    }
    rep.slope_bound = std::min(rep.slope_bound, fmax_window / window_len_h);
  }

  rep.all_pass = true;
  rep.exceptional_mass = 0.0;
  for (const auto& nv : rep.nodes) {
    if (!nv.concave_pass) {
      rep.all_pass = false;
      rep.exceptional_mass += field.node_mass(nv.node);
    }
  }
  if (K != 0.0) {
    rep.constancy = "not applicable (K != 0)";
    rep.slope_bound = 0.0;
  } else if (slope_measured <= 1e-12 * (1.0 + fmax_all)) {
    rep.constancy = "constant";
  } else {
    rep.constancy = fmt("undetermined at this window, slope bound %.3g", rep.slope_bound);
  }
  return rep;
}

}  // namespace lorprod
