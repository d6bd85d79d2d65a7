#include "lorprod/metric_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lorprod/rng.hpp"

namespace lorprod {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ConformalFamily::ConformalFamily(std::shared_ptr<const BaseSpace> space, TimeInterval interval,
                                 Field rho, Field lapse, double declared_log_lip_rho,
                                 double declared_lip_lapse, bool time_continuous)
    : space_(std::move(space)),
      interval_(interval),
      rho_(std::move(rho)),
      lapse_(std::move(lapse)),
      log_lip_rho_(declared_log_lip_rho),
      lip_lapse_(declared_lip_lapse),
      time_continuous_(time_continuous) {
  if (!space_) throw std::invalid_argument("ConformalFamily: null base space");
  if (!(interval_.lo < interval_.hi))
    throw std::invalid_argument("ConformalFamily: empty time interval");
  if (!rho_ || !lapse_) throw std::invalid_argument("ConformalFamily: missing field");
  if (log_lip_rho_ < 0.0 || lip_lapse_ < 0.0)
    throw std::invalid_argument("ConformalFamily: negative Lipschitz constant");
}

double ConformalFamily::rho(double s, int x) const {
  if (!interval_.contains(s))
    throw std::domain_error("ConformalFamily: time parameter outside the interval");
  double v = rho_(s, x);
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::domain_error("ConformalFamily: conformal factor must be positive");
  return v;
}

double ConformalFamily::lapse(double s, int x) const {
  if (!interval_.contains(s))
    throw std::domain_error("ConformalFamily: time parameter outside the interval");
  double v = lapse_(s, x);
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::domain_error("ConformalFamily: lapse must be positive");
  return v;
}

double ConformalFamily::distance_at(double s, int x, int y) const {
  if (!interval_.contains(s))
    throw std::domain_error("ConformalFamily: time parameter outside the interval");
  return conformal_distance(*space_, [&](int u) { return rho(s, u); }, x, y);
}

double path_duration(const BaseSpace& g, const SpacePath& beta) {
  if (!beta.parametrized())
    throw std::invalid_argument("path_duration: path carries no segment speeds");
  if (beta.segment_speeds.size() + 1 != beta.nodes.size())
    throw std::invalid_argument("path_duration: speed count must match segment count");
  double total = 0.0;
  for (size_t j = 0; j + 1 < beta.nodes.size(); ++j) {
    double v = beta.segment_speeds[j];
    if (!(v > 0.0)) throw std::invalid_argument("path_duration: segment speed must be positive");
    SpacePath seg{{beta.nodes[j], beta.nodes[j + 1]}, {}};
    total += path_length(g, seg) / v;
  }
  return total;
}

SpeedValue generalized_speed(const ConformalFamily& fam, const SpacePath& beta, double s,
                             double t) {
  const BaseSpace& g = fam.space();
  if (!beta.parametrized())
    throw std::invalid_argument("generalized_speed: path carries no segment speeds");
  if (beta.segment_speeds.size() + 1 != beta.nodes.size())
    throw std::invalid_argument("generalized_speed: speed count must match segment count");
  if (beta.nodes.size() < 2)
    throw std::invalid_argument("generalized_speed: need at least one segment");

  // Segment boundaries in parameter time.
  std::vector<double> breaks{0.0};
  std::vector<double> seg_len(beta.segment_speeds.size());
  for (size_t j = 0; j + 1 < beta.nodes.size(); ++j) {
    double v = beta.segment_speeds[j];
    if (!(v > 0.0))
      throw std::invalid_argument("generalized_speed: segment speed must be positive");
    SpacePath seg{{beta.nodes[j], beta.nodes[j + 1]}, {}};
    seg_len[j] = path_length(g, seg);
    breaks.push_back(breaks.back() + seg_len[j] / v);
  }
  const double T = breaks.back();
  const double tol = 1e-12 * std::max(1.0, T);
  if (t < -tol || t > T + tol)
    throw std::invalid_argument("generalized_speed: parameter outside the path range");
  t = std::clamp(t, 0.0, T);

  // Segment containing t; at an interior breakpoint both sides exist and we
  // return the right-hand value, flagging the jump.
  size_t j = std::upper_bound(breaks.begin(), breaks.end(), t) - breaks.begin();
  if (j > 0) --j;
  if (j >= beta.segment_speeds.size()) j = beta.segment_speeds.size() - 1;

  bool one_sided = false;
  for (size_t b = 1; b + 1 < breaks.size(); ++b) {
    if (std::fabs(t - breaks[b]) <= tol) {
      double left = beta.segment_speeds[b - 1], right = beta.segment_speeds[b];
      if (left != right || beta.nodes[b - 1] != beta.nodes[b + 1]) one_sided = true;
      j = b;  // right-hand segment
      break;
    }
  }

  double lambda = seg_len[j] > 0.0
                      ? std::clamp((t - breaks[j]) * beta.segment_speeds[j] / seg_len[j], 0.0, 1.0)
                      : 0.0;
  double r = fam.rho_along_edge(s, beta.nodes[j], beta.nodes[j + 1], lambda);
  return SpeedValue{r * beta.segment_speeds[j], one_sided};
}

namespace {

struct ConformalOracle : MetricOracle {
  const ConformalFamily* fam;
  double distance(double s, int x, int y) const override { return fam->distance_at(s, x, y); }
};

}  // namespace

RegularityReport verify_regularity(const MetricOracle& oracle, const BaseSpace& g,
                                   TimeInterval J, const std::vector<int>& K,
                                   std::uint64_t seed, const RegularityOptions& opts) {
  RegularityReport rep;
  rep.seed = seed;
  rep.gamma = kNaN;
  rep.C = kNaN;
  if (opts.scales < 20) {
    rep.note = "fewer than 20 gap scales requested";
    rep.verdict = RegularityReport::Verdict::inconclusive;
    return rep;
  }
  if (!(J.lo < J.hi)) throw std::invalid_argument("verify_regularity: empty time window");

  Rng rng(seed);

  // Gating radius: half the K-diameter in the base metric unless overridden.
  double diam = 0.0;
  for (size_t a = 0; a < K.size(); ++a)
    for (size_t b = a + 1; b < K.size(); ++b)
      diam = std::max(diam, g.shortest_distance(K[a], K[b]));
  rep.r = opts.r > 0.0 ? opts.r : 0.5 * diam;

  // Admissible pairs: inf over sampled s of d_s(x,y) below the radius.
  std::vector<std::pair<int, int>> pairs;
  for (size_t a = 0; a < K.size(); ++a)
    for (size_t b = a + 1; b < K.size(); ++b) {
      double inf_d = std::numeric_limits<double>::infinity();
      for (int p = 0; p < opts.s_probes; ++p) {
        double s = J.lo + (J.hi - J.lo) * p / std::max(1, opts.s_probes - 1);
        inf_d = std::min(inf_d, oracle.distance(s, K[a], K[b]));
      }
      if (inf_d < rep.r) pairs.emplace_back(K[a], K[b]);
    }
  rep.admissible_pairs = static_cast<int>(pairs.size());
  if (pairs.empty()) {
    rep.note = "no admissible close pairs in K";
    rep.verdict = RegularityReport::Verdict::inconclusive;
    return rep;
  }

  // Log-spaced gap scales across the window.
  const double gap_max = 0.5 * J.length();
  const double gap_min = std::max(opts.gap_min_frac * J.length(), 1e-12);
  rep.gaps.resize(opts.scales);
  for (int k = 0; k < opts.scales; ++k) {
    double f = static_cast<double>(k) / (opts.scales - 1);
    rep.gaps[k] = gap_max * std::pow(gap_min / gap_max, f);
  }

  rep.omega.assign(opts.scales, 0.0);
  for (int k = 0; k < opts.scales; ++k) {
    double gap = rep.gaps[k];
    for (int trial = 0; trial < opts.pairs_per_scale; ++trial) {
      auto [x, y] = pairs[rng.index(static_cast<int>(pairs.size()))];
      // Force the window corner on the first trial: worst moduli often sit at
      // the boundary (e.g. square-root behavior at s = 0).
      double s0 = trial == 0 ? J.lo : rng.uniform(J.lo, J.hi - gap);
      double d0 = oracle.distance(s0, x, y);
      double d1 = oracle.distance(s0 + gap, x, y);
      if (d0 > 0.0 && d1 > 0.0)
        rep.omega[k] = std::max(rep.omega[k], std::fabs(std::log(d1 / d0)));
    }
  }

  // Least-squares fit of log omega = log C + gamma log gap over usable scales.
  std::vector<double> lx, ly;
  for (int k = 0; k < opts.scales; ++k)
    if (rep.omega[k] > 1e-300) {
      lx.push_back(std::log(rep.gaps[k]));
      ly.push_back(std::log(rep.omega[k]));
    }
  if (lx.empty()) {
    // Distances do not move with s at all: 0-Lipschitz, trivially fine.
    rep.gamma = kNaN;
    rep.C = 0.0;
    rep.note = "distance ratios constant in s (flat family)";
    rep.verdict = RegularityReport::Verdict::pass;
    return rep;
  }
  if (static_cast<int>(lx.size()) < 20) {
    rep.note = "fewer than 20 usable gap scales";
    rep.verdict = RegularityReport::Verdict::inconclusive;
    return rep;
  }
  double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  rep.gamma = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.C = std::exp((sy - rep.gamma * sx) / n);
  rep.verdict = rep.gamma >= 1.0 - opts.gamma_tol ? RegularityReport::Verdict::pass
                                                  : RegularityReport::Verdict::fail;
  return rep;
}

RegularityReport verify_regularity(const ConformalFamily& fam, TimeInterval J,
                                   const std::vector<int>& K, std::uint64_t seed,
                                   const RegularityOptions& opts) {
  ConformalOracle oracle;
  oracle.fam = &fam;
  RegularityReport rep = verify_regularity(oracle, fam.space(), J, K, seed, opts);

  // Sampled Lipschitz estimate for the lapse in the time direction.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int x = rng.index(fam.space().node_count());
    double s0 = rng.uniform(J.lo, J.hi), s1 = rng.uniform(J.lo, J.hi);
    if (std::fabs(s1 - s0) < 1e-9 * J.length()) continue;
    worst = std::max(worst,
                     std::fabs(fam.lapse(s1, x) - fam.lapse(s0, x)) / std::fabs(s1 - s0));
  }
  rep.lapse_lip = worst;
  return rep;
}

RegularityReport verify_regularity(const ConformalFamily& fam, std::uint64_t seed,
                                   const RegularityOptions& opts) {
  std::vector<int> K(fam.space().node_count());
  for (int i = 0; i < fam.space().node_count(); ++i) K[i] = i;
  return verify_regularity(fam, fam.interval(), K, seed, opts);
}

}  // namespace lorprod
