#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lorprod/product_geometry.hpp"

namespace lorprod {

/** Per-step cone audit underlying classify / lorentz_length.  The
 * admissibility verdict is the exact comparison dd <= lapse*|ds|; margin2 =
 * (lapse*ds)^2 - dd^2 is then nonnegative automatically (squaring is monotone
 * under rounding).  Exposed so higher layers (curve straightening, connector
 * margins) measure elements with the same arithmetic as the classifier. */
struct StepAudit {
  double margin2 = 0.0;
  bool admissible = false;
  double ds = 0.0;
};
std::vector<StepAudit> audit_steps(const ProductSpacetime& st, const ProductCurve& curve);

/** Causal classification of a sampled curve. */
struct CausalClass {
  enum class Kind { timelike, causal, null, non_causal };
  Kind kind = Kind::non_causal;
  bool future = true;        // orientation; meaningful unless non_causal
  double min_margin2 = 0.0;  // min over steps of (lapse*ds)^2 - dd^2
  int null_steps = 0;        // steps whose margin vanishes exactly
  std::string reason;        // populated for non_causal
};

// Step-by-step cone test with midpoint-time coefficients. The admissibility
// comparison dd <= lapse*|ds| is exact (no tolerance) so commensurate flat
// grids classify null steps bitwise.
CausalClass classify(const ProductSpacetime& st, const ProductCurve& curve);

// Sum over steps of sqrt((lapse*ds)^2 - dd^2). Throws std::domain_error when
// the curve is not causal (the length is undefined there).
double lorentz_length(const ProductSpacetime& st, const ProductCurve& curve);

/**
 * Layered step mesh: all candidate steps (i, x) -> (i+1, y) with y inside the
 * hop ball of x, each carrying its conformal displacement dd, its time reach
 * lapse*dt, and the step's proper-time contribution when admissible.
 */
class CausalDag {
 public:
  struct Step {
    double dd = 0.0;    // conformal distance at the step midpoint time
    double hdt = 0.0;   // trapezoidal lapse times the step width
    double dtau = 0.0;  // sqrt(hdt^2 - dd^2) when admissible, else 0
    bool admissible = false;
  };

  struct Stats {
    std::int64_t candidate_steps = 0;
    std::int64_t admissible_steps = 0;
  };

  const ProductSpacetime& spacetime() const { return st_; }
  int layer_count() const { return st_.layer_count(); }
  int node_count() const { return st_.space().node_count(); }

  // Hop ball of a node (sorted, includes the node itself); shared by every
  // layer. ball(y)[b] is simultaneously the incoming source of step record
  // (layer, y, b) and the outgoing target of the mirrored record.
  const std::vector<int>& ball(int node) const { return balls_.at(node); }
  // Position of `other` in ball(node), or -1 when outside the hop radius.
  int ball_index(int node, int other) const;

  // Record for the unordered pair {node, ball(node)[b]} across step `layer`;
  // the step geometry is symmetric so one record serves both directions.
  const Step& step(int layer, int node, int b) const {
    return steps_[static_cast<std::size_t>(layer) * stride_ + offsets_[node] + b];
  }

  Stats stats() const { return stats_; }

  friend CausalDag build_causal_dag(const ProductSpacetime&, Exec, std::int64_t);

 private:
  explicit CausalDag(ProductSpacetime st) : st_(std::move(st)) {}

  ProductSpacetime st_;
  std::vector<std::vector<int>> balls_;
  std::vector<std::size_t> offsets_;  // per-node start inside a layer block
  std::size_t stride_ = 0;            // step records per layer
  std::vector<Step> steps_;
  Stats stats_;
};

// Builds every step record (truncated conformal Dijkstra per source node per
// layer; OpenMP across sources under Exec::parallel, bitwise identical to the
// serial path). Throws std::length_error when the candidate-step count
// exceeds `max_candidate_steps` (default 50M, tightened to 2M when the hop
// radius exceeds 2), with a message suggesting how to coarsen.
CausalDag build_causal_dag(const ProductSpacetime& st, Exec exec = Exec::parallel,
                           std::int64_t max_candidate_steps = 50'000'000);

/**
 * Longest-path table from a fixed source event: time separation to every
 * event in later layers, with predecessor links and a strict-chain flag
 * (existence of an all-positive-step chain, the discrete surrogate of
 * chronological reachability).
 */
struct TimeSeparationTable {
  Event source;
  int first_layer = 0;  // == source.layer
  // Row r covers layer first_layer + r; entries indexed by node.
  std::vector<std::vector<double>> tau;   // -inf where unreachable
  std::vector<std::vector<int>> pred;     // predecessor node id, -1 at source/unreached
  std::vector<std::vector<char>> strict;  // 1 when a strict chain arrives here

  bool covers(Event q) const;
  bool reachable_at(Event q) const;
  double tau_at(Event q) const;     // 0 when unreachable
  bool strict_at(Event q) const;
};

// Forward dynamic program over the mesh; ties between predecessors break
// toward the smallest node id. OpenMP across nodes within a layer under
// Exec::parallel, bitwise identical to serial.
TimeSeparationTable time_separation_table(const CausalDag& dag, Event source,
                                          Exec exec = Exec::parallel);

/** Point query result, keeping the order and value notions separate. */
struct TimeSepResult {
  bool reachable = false;     // q inside the causal future of p (mesh order)
  bool strict_chain = false;  // chain of strictly positive steps exists
  double tau = 0.0;           // longest-path value; 0 when unreachable
  bool tau_positive = false;
};

TimeSepResult time_separation(const TimeSeparationTable& table, Event q);
TimeSepResult time_separation(const CausalDag& dag, Event p, Event q,
                              Exec exec = Exec::parallel);

// Event chain of a maximizing causal path p -> q (predecessor backtracking).
// Throws unreachable_error when q is outside the causal future of p.
std::vector<Event> maximizer_events(const CausalDag& dag, Event p, Event q,
                                    Exec exec = Exec::parallel);

// Same maximizer as a curve; multi-hop steps carry conformal-shortest via
// paths evaluated at the step midpoint time.
ProductCurve maximizer(const CausalDag& dag, Event p, Event q, Exec exec = Exec::parallel);

/** Time-separation sums over dyadic partitions of an event chain. */
struct VariationalResult {
  std::vector<double> per_depth;  // partition sums, coarse to fine
  double value = 0.0;             // deepest-level sum
};

// Sum of tau over dyadic partitions of the chain at depths 0..depth. The sums
// are non-increasing under refinement (reverse triangle inequality); the
// deepest level is the variational length estimate. Throws unreachable_error
// when some partition pair is not causally connected in the mesh.
VariationalResult variational_length(const CausalDag& dag, const std::vector<Event>& events,
                                     int depth, Exec exec = Exec::parallel);

/** Causal diamond between two events plus its lapse-weighted size audit. */
struct DiamondResult {
  std::vector<Event> events;  // sorted by (layer, node)
  // max over members of (weighted witness length) - sqrt(2)*(time reach);
  // nonpositive up to round-off when the cone bound holds.
  double max_weighted_slack = 0.0;
};

DiamondResult causal_diamond(const CausalDag& dag, Event p, Event q);

}  // namespace lorprod
