#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lorprod/metric_family.hpp"

namespace lorprod {

/** Execution policy for the kernels that have an OpenMP fast path. */
enum class Exec { serial, parallel };

/** Event on the discrete product mesh: (time-layer index, node). */
struct Event {
  int layer = 0;
  int node = 0;
  friend bool operator==(const Event&, const Event&) = default;
  friend auto operator<=>(const Event&, const Event&) = default;
};

/**
 * Discretized product of a time grid with the base graph. The grid lives
 * inside the family interval; hop radius R bounds how many edges a single
 * time step may traverse.
 */
class ProductSpacetime {
 public:
  // Explicit strictly-increasing time samples.
  ProductSpacetime(std::shared_ptr<const ConformalFamily> fam, std::vector<double> times,
                   int hop_radius = 1);

  // Uniform grid with `layers` steps over [lo, hi]. The step width is stored
  // once and reused for every step so flat models stay exactly commensurate.
  static ProductSpacetime uniform(std::shared_ptr<const ConformalFamily> fam, double lo,
                                  double hi, int layers, int hop_radius = 1);

  const ConformalFamily& family() const { return *fam_; }
  std::shared_ptr<const ConformalFamily> family_ptr() const { return fam_; }
  const BaseSpace& space() const { return fam_->space(); }

  int layer_count() const { return static_cast<int>(times_.size()); }  // events per column
  int hop_radius() const { return hop_radius_; }
  double time(int layer) const { return times_.at(layer); }
  const std::vector<double>& times() const { return times_; }
  // Width and midpoint of step `layer` -> `layer+1`.
  double step_dt(int layer) const;
  double step_mid(int layer) const;
  bool uniform_grid() const { return uniform_dt_.has_value(); }

  // Nearest grid layer to time s.
  int nearest_layer(double s) const;

  // Time span s1 - s0; when both values are bitwise grid times of a uniform
  // grid the span is rebuilt from the stored step width, so commensurate flat
  // models keep their exact null steps.
  double span(double s0, double s1) const;

 private:
  std::shared_ptr<const ConformalFamily> fam_;
  std::vector<double> times_;
  std::optional<double> uniform_dt_;
  int hop_radius_;
};

/**
 * Sampled curve in the product: parameter t strictly increasing, time
 * coordinate s in the family interval, spatial position a node. Consecutive
 * nodes must be equal, adjacent, or joined by a declared via path.
 */
struct ProductCurve {
  struct Sample {
    double t = 0.0;  // curve parameter
    double s = 0.0;  // time coordinate
    int node = 0;
  };
  std::vector<Sample> samples;
  // Optional declared base paths, one per step (empty inner vector = direct).
  std::vector<std::vector<int>> vias;

  int steps() const { return static_cast<int>(samples.size()) - 1; }
  // Node sequence of step k: [x_k, ..., x_{k+1}] through any declared via.
  std::vector<int> step_nodes(int k) const;
};

// Validates parameter monotonicity, interval membership, and step adjacency
// (or declared vias). Throws std::invalid_argument with a reason.
void validate_curve(const ProductSpacetime& st, const ProductCurve& curve);

// Riemannian product length: sum of sqrt((lapse*ds)^2 + dd^2) over steps,
// with midpoint-time step coefficients.
double product_length(const ProductSpacetime& st, const ProductCurve& curve);

// Same sum with each term divided by the step lapse; this is the length in
// the lapse-normalized product metric. Causal curves satisfy
// weighted_length <= sqrt(2) * |time extent|.
double weighted_length(const ProductSpacetime& st, const ProductCurve& curve);

// Snaps every sample's time coordinate onto the nearest grid time of `st`,
// dropping consecutive duplicates. Spatial positions are untouched.
ProductCurve resample_to_grid(const ProductSpacetime& st, const ProductCurve& curve);

// Curve samples as on-grid events; throws when a sample is off-grid by more
// than a relative 1e-9.
std::vector<Event> to_events(const ProductSpacetime& st, const ProductCurve& curve);

// Event chain as a curve (parameter = grid time); consecutive events joined
// by conformal-shortest base paths evaluated at the step midpoint time.
ProductCurve curve_from_events(const ProductSpacetime& st, const std::vector<Event>& events);

/** Escaping ray: a simple node sequence plus its time coordinate samples. */
struct RayDescriptor {
  std::vector<int> nodes;
  std::vector<double> times;  // time coordinate at each node, inside I
};

/** Divergence audit of the lapse-weighted length along an escaping ray. */
struct DivergenceReport {
  enum class Verdict { divergent, bounded, inconclusive };
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> partial_sums;
  double extrapolated_bound = 0.0;  // meaningful for `bounded`
  std::string rate;                 // textual growth/decay description
  // Diagnostics cover only rays the caller declared; they never prove
  // completeness by themselves.
  bool user_declared_rays_only = true;
};

// Partial sums of the conformal edge lengths divided by the step lapse along
// the ray, with a tail-extrapolation verdict. Throws std::invalid_argument
// when the ray revisits a node (not escaping) or is too short to classify.
DivergenceReport properness_diagnostic(const ConformalFamily& fam, const RayDescriptor& ray);

}  // namespace lorprod
