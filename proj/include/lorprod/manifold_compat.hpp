#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lorprod/causal_core.hpp"

namespace lorprod {

/**
 * Lorentzian metric -F ds^2 + G dt^2 sampled on a rectangle: `s` carries the
 * time coordinate (F is a squared lapse), `t` the transverse parameter (G a
 * squared conformal speed). Values between samples come from bilinear
 * interpolation, so the continuum object the samples describe is piecewise
 * smooth with the reported grid Lipschitz constants.
 */
struct GridLorentzMetric {
  std::vector<double> s;               // strictly increasing, >= 2 samples
  std::vector<double> t;               // strictly increasing, >= 2 samples
  std::vector<std::vector<double>> F;  // [s-index][t-index], > 0
  std::vector<std::vector<double>> G;  // [s-index][t-index], >= 0
  double lip_F = 0.0;                  // max sampled difference quotient of F
  double lip_G = 0.0;                  // same for G

  // Bilinear value at (sv, tv); throws std::domain_error outside the
  // rectangle (beyond a small relative slack).
  double F_at(double sv, double tv) const;
  double G_at(double sv, double tv) const;
};

// Validates the grids (monotone axes, matching shapes, F positive, G
// nonnegative, everything finite) and fills in the sampled Lipschitz
// constants. Throws std::invalid_argument naming the offending entry.
// G is allowed to vanish so purely temporal metrics (zero transverse speed)
// stay representable.
GridLorentzMetric make_grid_metric(std::vector<double> s, std::vector<double> t,
                                   std::vector<std::vector<double>> F,
                                   std::vector<std::vector<double>> G);

/** Polyline in the metric rectangle: one (s, t) vertex per sample. */
struct QCurve {
  std::vector<double> s;
  std::vector<double> t;
};

// Length of a future-directed causal polyline: sum over steps of
// sqrt(F ds^2 - G dt^2) with both coefficients interpolated at the step
// midpoint. Purely temporal steps (G dt^2 == 0) are summed as sqrt(F)*ds so
// they reproduce the product-side arithmetic bit for bit. Throws
// std::domain_error on a past-directed (ds < 0) or non-causal
// (F ds^2 < G dt^2) step, naming the step.
double gq_length(const GridLorentzMetric& m, const QCurve& y);

/**
 * Rectangle reduction of a constant-base-speed product curve: the metric
 * -h^2 ds^2 + (c*rho)^2 dt^2 sampled over the product's time grid (refined by
 * step midpoints) and the curve's parameter grid, plus the graph curve
 * lambda -> (s(lambda), lambda) and the defect between its rectangle length
 * and the curve's Lorentzian length in the product.
 */
struct QReduction {
  GridLorentzMetric metric;
  QCurve graph;             // the curve's graph in the rectangle
  double base_speed = 0.0;  // c: base length per parameter unit
  double gq = 0.0;          // gq_length(metric, graph)
  double lorentz = 0.0;     // lorentz_length(st, curve)
  double residual = 0.0;    // |gq - lorentz|
};

// Builds the reduction. Preconditions: the curve is future-directed causal,
// its parameter samples are uniformly spaced, and its base speed (plain base
// length per parameter unit) is constant across steps; violations throw with
// a message naming the offending step and asking for reparametrization
// first. The residual is pure quadrature defect and vanishes exactly for
// vertical curves on commensurate grids.
QReduction q_reduce(const ProductSpacetime& st, const ProductCurve& curve);

/** One (grid width, residual) row of a refinement study. */
struct ResidualRow {
  double delta = 0.0;
  double residual = 0.0;
};

// CSV rendering of a refinement study: header "delta,residual" then one
// %.17g row per entry. Deterministic; callers own file placement.
std::string residual_csv(const std::vector<ResidualRow>& rows);

/** A single step whose causal margin is not strictly positive. */
struct StepFinding {
  int step = 0;
  double margin2 = 0.0;  // (lapse*ds)^2 - dd^2 at the step
};

/**
 * Per-curve regularity audit: every step's cone margin, with the
 * non-timelike steps reported as findings rather than failures.
 */
struct CurveAudit {
  int steps = 0;
  int null_steps = 0;      // margin exactly zero
  int negative_steps = 0;  // cone violated
  double min_margin2 = 0.0;
  double tau = 0.0;  // Lorentzian length; 0 when the curve is not causal
  bool causal = false;
  bool all_timelike = false;  // causal with every margin strictly positive
  std::vector<StepFinding> findings;  // steps with margin2 <= 0, in order
};

CurveAudit regularity_audit(const ProductSpacetime& st, const ProductCurve& curve);

/**
 * Batch audit over maximizers of event pairs. Pairs whose target is
 * unreachable or at zero time separation are skipped (there is no positive
 * maximizer to audit); the rest contribute their step counts and margins.
 */
struct BatchAudit {
  int audited = 0;
  int skipped = 0;  // unreachable or tau == 0
  std::int64_t steps = 0;
  std::int64_t null_steps = 0;
  std::int64_t negative_steps = 0;
  double min_margin2 = 0.0;  // over audited curves; +inf when none audited
  bool all_timelike = false;  // every audited maximizer strictly timelike
  std::vector<int> flagged;   // indices into `pairs` with findings, ascending
};

// Audits the maximizer of each pair; OpenMP across pairs under
// Exec::parallel, bitwise identical to the serial path.
BatchAudit audit_maximizers(const CausalDag& dag,
                            const std::vector<std::pair<Event, Event>>& pairs,
                            Exec exec = Exec::parallel);

}  // namespace lorprod
