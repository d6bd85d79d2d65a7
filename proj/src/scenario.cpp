#include "lorprod/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "lorprod/causal_core.hpp"
#include "lorprod/manifold_compat.hpp"
#include "lorprod/ode_engine.hpp"
#include "lorprod/rng.hpp"
#include "lorprod/transport_curvature.hpp"

namespace lorprod {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw schema_error(ptr.empty() ? "(root)" : ptr, what);
}

const json& need(const json& obj, const char* key, const std::string& ptr) {
  if (!obj.is_object()) fail(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(ptr + "/" + key, "missing required field");
  return *it;
}

double need_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

double opt_number(const json& obj, const char* key, double fallback, const std::string& ptr) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return need_number(obj.at(key), ptr + "/" + key);
}

int need_int(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "expected an integer");
  return j.get<int>();
}

int opt_int(const json& obj, const char* key, int fallback, const std::string& ptr) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return need_int(obj.at(key), ptr + "/" + key);
}

bool opt_bool(const json& obj, const char* key, bool fallback, const std::string& ptr) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const json& j = obj.at(key);
  if (!j.is_boolean()) fail(ptr + "/" + key, "expected a boolean");
  return j.get<bool>();
}

std::string need_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

// ---------------------------------------------------------------------------
// Scenario ingredients
// ---------------------------------------------------------------------------

std::shared_ptr<BaseSpace> build_space(const json& j, const std::string& ptr) {
  const std::string kind = need_string(need(j, "kind", ptr), ptr + "/kind");
  if (kind == "path") {
    const int nodes = need_int(need(j, "nodes", ptr), ptr + "/nodes");
    const double length = need_number(need(j, "length", ptr), ptr + "/length");
    if (nodes < 2) fail(ptr + "/nodes", "a path needs at least two nodes");
    if (!(length > 0.0)) fail(ptr + "/length", "path length must be positive");
    return std::make_shared<BaseSpace>(make_path_graph(nodes, length));
  }
  if (kind == "graph") {
    const json& names_j = need(j, "names", ptr);
    if (!names_j.is_array() || names_j.empty()) fail(ptr + "/names", "expected a non-empty array");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < names_j.size(); ++i)
      names.push_back(need_string(names_j[i], ptr + "/names/" + std::to_string(i)));
    const json& edges_j = need(j, "edges", ptr);
    if (!edges_j.is_array()) fail(ptr + "/edges", "expected an array");
    std::vector<BaseSpace::Edge> edges;
    for (std::size_t i = 0; i < edges_j.size(); ++i) {
      const std::string eptr = ptr + "/edges/" + std::to_string(i);
      const json& e = edges_j[i];
      if (!e.is_array() || e.size() != 3) fail(eptr, "expected [u, v, length]");
      BaseSpace::Edge edge;
      edge.u = need_int(e[0], eptr + "/0");
      edge.v = need_int(e[1], eptr + "/1");
      edge.len = need_number(e[2], eptr + "/2");
      const int n = static_cast<int>(names.size());
      if (edge.u < 0 || edge.u >= n) fail(eptr + "/0", "unknown node index");
      if (edge.v < 0 || edge.v >= n) fail(eptr + "/1", "unknown node index");
      edges.push_back(edge);
    }
    std::shared_ptr<BaseSpace> g;
    try {
      g = std::make_shared<BaseSpace>(names, edges);
    } catch (const std::invalid_argument& e) {
      fail(ptr, e.what());
    }
    if (j.contains("positions")) {
      const json& pos_j = j.at("positions");
      if (!pos_j.is_array() || pos_j.size() != names.size())
        fail(ptr + "/positions", "expected one position per node");
      std::vector<double> pos;
      for (std::size_t i = 0; i < pos_j.size(); ++i)
        pos.push_back(need_number(pos_j[i], ptr + "/positions/" + std::to_string(i)));
      g->set_positions(pos);
    }
    return g;
  }
  fail(ptr + "/kind", "unknown space kind '" + kind + "' (expected 'path' or 'graph')");
}

/** One coefficient form: the field plus its declared regularity. */
struct Form {
  ConformalFamily::Field field;
  double log_lip = 0.0;   // Lipschitz constant of s -> log value (for rho)
  double abs_lip = 0.0;   // Lipschitz constant of s -> value (for the lapse)
  bool time_continuous = true;
};

Form parse_form(const json& j, const std::shared_ptr<const BaseSpace>& g, const TimeInterval& iv,
                const std::string& ptr) {
  const std::string form = need_string(need(j, "form", ptr), ptr + "/form");
  Form out;
  if (form == "const") {
    const double value = need_number(need(j, "value", ptr), ptr + "/value");
    if (!(value > 0.0)) fail(ptr + "/value", "coefficient must be positive");
    out.field = [value](double, int) { return value; };
    return out;
  }
  if (form == "exp_time") {
    const double rate = opt_number(j, "rate", 1.0, ptr);
    const double scale = opt_number(j, "scale", 1.0, ptr);
    if (!(scale > 0.0)) fail(ptr + "/scale", "scale must be positive");
    out.field = [rate, scale](double s, int) { return scale * std::exp(rate * s); };
    out.log_lip = std::fabs(rate);
    const double peak = std::max(std::exp(rate * iv.lo), std::exp(rate * iv.hi));
    out.abs_lip = scale * std::fabs(rate) * peak;
    return out;
  }
  if (form == "exp_profile") {
    if (!g->has_positions())
      fail(ptr + "/form", "form 'exp_profile' needs node positions (path spaces have them)");
    const double rate = opt_number(j, "rate", 1.0, ptr);
    auto gp = g;
    out.field = [gp, rate](double s, int x) {
      return std::exp(rate * s * (0.5 + 0.5 * gp->position(x)));
    };
    double wmax = 0.0;
    for (int x = 0; x < g->node_count(); ++x)
      wmax = std::max(wmax, 0.5 + 0.5 * g->position(x));
    out.log_lip = std::fabs(rate) * wmax;
    const double smax = std::max(std::fabs(iv.lo), std::fabs(iv.hi));
    out.abs_lip = out.log_lip * std::exp(out.log_lip * smax);
    return out;
  }
  if (form == "holder_sqrt") {
    if (!g->has_positions())
      fail(ptr + "/form", "form 'holder_sqrt' needs node positions (path spaces have them)");
    auto gp = g;
    out.field = [gp](double s, int x) {
      return std::exp(std::sqrt(std::fabs(s)) * (0.4 + 0.6 * gp->position(x)));
    };
    // The declared constant is a deliberately hollow promise: the family is
    // only 1/2-Hoelder at s = 0, which is what the verifier must detect.
    out.log_lip = 1e6;
    out.abs_lip = 1e6;
    out.time_continuous = false;
    return out;
  }
  fail(ptr + "/form", "unknown form '" + form +
                          "' (expected const, exp_time, exp_profile, or holder_sqrt)");
}

std::shared_ptr<ConformalFamily> build_family(const json& j, std::shared_ptr<BaseSpace> g,
                                              const std::string& ptr) {
  const json& iv_j = need(j, "interval", ptr);
  if (!iv_j.is_array() || iv_j.size() != 2) fail(ptr + "/interval", "expected [lo, hi]");
  TimeInterval iv{need_number(iv_j[0], ptr + "/interval/0"),
                  need_number(iv_j[1], ptr + "/interval/1")};
  if (!(iv.hi > iv.lo)) fail(ptr + "/interval", "interval must have positive length");
  const Form rho = parse_form(need(j, "rho", ptr), g, iv, ptr + "/rho");
  const Form lapse = parse_form(need(j, "lapse", ptr), g, iv, ptr + "/lapse");
  const bool continuous =
      opt_bool(j, "time_continuous", rho.time_continuous && lapse.time_continuous, ptr);
  return std::make_shared<ConformalFamily>(std::move(g), iv, rho.field, lapse.field, rho.log_lip,
                                           lapse.abs_lip, continuous);
}

// ---------------------------------------------------------------------------
// Parsed scenario
// ---------------------------------------------------------------------------

struct TaskEntry {
  std::string type;
  std::string name;   // explicit name, or "" when the task is unnamed
  std::string label;  // name, or the task index when unnamed (reports, case ids)
  bool gating = false;
  json params;
  std::string ptr;
};

struct ParsedScenario {
  std::shared_ptr<BaseSpace> space;
  std::shared_ptr<ConformalFamily> family;
  std::optional<ProductSpacetime> st;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::string out_dir;
  std::vector<TaskEntry> tasks;
};

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> names = {
      "tau",        "maximizer",  "pushup",   "regularity", "hyperbolicity",
      "verify-lip", "tcd",        "rigidity", "demo-bubble"};
  return names;
}

// Unnamed tasks keep the plain file name; named ones get a "_<name>" suffix.
// Entropy curves are always per-case, so they use the label even when unnamed.
std::string artifact_file(const std::string& base, const TaskEntry& t, const std::string& ext) {
  return t.name.empty() ? base + ext : base + "_" + t.name + ext;
}

std::vector<std::string> planned_artifacts(const TaskEntry& t) {
  if (t.type == "tau") return {artifact_file("tau_table", t, ".csv")};
  if (t.type == "hyperbolicity") return {artifact_file("divergence_sums", t, ".csv")};
  if (t.type == "tcd") return {"entropy_curve_" + t.label + ".csv"};
  if (t.type == "rigidity") return {artifact_file("rigidity_report", t, ".json")};
  if (t.type == "demo-bubble") return {artifact_file("diamond", t, ".csv")};
  return {};
}

Event parse_event(const json& j, const ProductSpacetime& st, const std::string& ptr) {
  if (!j.is_array() || j.size() != 2) fail(ptr, "expected [layer, node]");
  Event e{need_int(j[0], ptr + "/0"), need_int(j[1], ptr + "/1")};
  if (e.layer < 0 || e.layer >= st.layer_count()) fail(ptr + "/0", "layer outside the grid");
  if (e.node < 0 || e.node >= st.space().node_count()) fail(ptr + "/1", "unknown node");
  return e;
}

std::pair<double, double> parse_window(const json& j, const TimeInterval& iv,
                                       const std::string& ptr) {
  if (!j.is_array() || j.size() != 2) fail(ptr, "expected [start, end]");
  const double a = need_number(j[0], ptr + "/0");
  const double b = need_number(j[1], ptr + "/1");
  if (!(b > a)) fail(ptr, "window must have positive length");
  if (a < iv.lo || b > iv.hi) fail(ptr, "window leaves the family interval");
  return {a, b};
}

ParsedScenario parse_scenario(const json& doc, const RunOverrides& ov) {
  if (!doc.is_object()) fail("", "scenario must be a JSON object");
  ParsedScenario sc;
  sc.space = build_space(need(doc, "space", ""), "/space");
  sc.family = build_family(need(doc, "family", ""), sc.space, "/family");

  const json& grid = need(doc, "grid", "");
  const int layers = need_int(need(grid, "layers", "/grid"), "/grid/layers");
  const int hop = opt_int(grid, "hop_radius", 1, "/grid");
  if (layers < 1) fail("/grid/layers", "need at least one time step");
  if (hop < 1) fail("/grid/hop_radius", "hop radius must be >= 1");
  const TimeInterval iv = sc.family->interval();
  sc.st.emplace(ProductSpacetime::uniform(sc.family, iv.lo, iv.hi, layers, hop));

  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0)
      fail("/seed", "expected a non-negative integer");
    sc.seed = s.get<std::uint64_t>();
  }
  if (ov.seed) sc.seed = *ov.seed;
  sc.tol = opt_number(doc, "tol", 1e-9, "");
  if (ov.tol) sc.tol = *ov.tol;
  if (!(sc.tol > 0.0)) fail("/tol", "tolerance must be positive");

  if (ov.out_dir) {
    sc.out_dir = *ov.out_dir;
  } else if (doc.contains("out")) {
    sc.out_dir = need_string(doc.at("out"), "/out");
  } else if (const char* env = std::getenv("LORPROD_OUT_DIR")) {
    sc.out_dir = env;
  } else {
    sc.out_dir = "out";
  }

  const json& tasks = need(doc, "tasks", "");
  if (!tasks.is_array()) fail("/tasks", "expected an array");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string ptr = "/tasks/" + std::to_string(i);
    const json& t = tasks[i];
    TaskEntry entry;
    entry.type = need_string(need(t, "task", ptr), ptr + "/task");
    if (std::find(known_tasks().begin(), known_tasks().end(), entry.type) == known_tasks().end())
      fail(ptr + "/task", "unknown task '" + entry.type + "'");
    if (t.contains("name")) {
      entry.name = need_string(t.at("name"), ptr + "/name");
      if (entry.name.empty()) fail(ptr + "/name", "task name must not be empty");
      for (char c : entry.name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
          fail(ptr + "/name", "task names may use letters, digits, '_' and '-' only");
    }
    entry.label = entry.name.empty() ? std::to_string(i) : entry.name;
    entry.gating = opt_bool(t, "gating", false, ptr);
    entry.params = t;
    entry.ptr = ptr;
    sc.tasks.push_back(std::move(entry));
  }

  // Artifact names must be distinct across the whole scenario (checked before
  // any filtering so a scenario is valid or invalid regardless of which
  // subcommand runs it).
  std::map<std::string, std::string> claimed;  // file -> pointer of the claimant
  for (const TaskEntry& t : sc.tasks) {
    for (const std::string& f : planned_artifacts(t)) {
      auto [it, fresh] = claimed.emplace(f, t.ptr);
      if (!fresh)
        fail(t.ptr, "artifact '" + f + "' collides with the task at " + it->second +
                        "; give the tasks distinct names");
    }
  }

  if (ov.only_tasks) {
    std::vector<TaskEntry> kept;
    for (TaskEntry& t : sc.tasks)
      if (std::find(ov.only_tasks->begin(), ov.only_tasks->end(), t.type) !=
          ov.only_tasks->end())
        kept.push_back(std::move(t));
    sc.tasks = std::move(kept);
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Task execution
// ---------------------------------------------------------------------------

struct TaskOutcome {
  bool pass = true;
  json values = json::object();
  std::vector<std::pair<std::string, std::string>> files;
  std::string note;
};

json event_json(Event e) { return json::array({e.layer, e.node}); }

// The dag is shared across causal tasks; built once on first use.
struct RunState {
  const ParsedScenario& sc;
  std::optional<CausalDag> dag;

  const CausalDag& causal_dag() {
    if (!dag) dag = build_causal_dag(*sc.st);
    return *dag;
  }
};

TaskOutcome run_tau(RunState& rs, const TaskEntry& t) {
  const ProductSpacetime& st = *rs.sc.st;
  TaskOutcome out;
  const Event source = parse_event(need(t.params, "source", t.ptr), st, t.ptr + "/source");
  const auto table = time_separation_table(rs.causal_dag(), source);

  std::string csv = "layer,node,tau\n";
  int reachable = 0;
  double max_tau = 0.0;
  for (std::size_t r = 0; r < table.tau.size(); ++r) {
    const int layer = table.first_layer + static_cast<int>(r);
    for (std::size_t x = 0; x < table.tau[r].size(); ++x) {
      const Event q{layer, static_cast<int>(x)};
      if (!table.reachable_at(q)) continue;
      ++reachable;
      const double tau = table.tau_at(q);
      max_tau = std::max(max_tau, tau);
      csv += std::to_string(layer) + "," + std::to_string(x) + "," + num(tau) + "\n";
    }
  }
  out.files.emplace_back(artifact_file("tau_table", t, ".csv"), std::move(csv));
  out.values["source"] = event_json(source);
  out.values["reachable_events"] = reachable;
  out.values["max_tau"] = max_tau;

  if (t.params.contains("expect")) {
    const std::string eptr = t.ptr + "/expect";
    const json& ex = t.params.at("expect");
    const Event target = parse_event(need(ex, "target", eptr), st, eptr + "/target");
    const double value = need_number(need(ex, "value", eptr), eptr + "/value");
    const double tol = opt_number(ex, "tol", rs.sc.tol, eptr);
    const TimeSepResult res = time_separation(table, target);
    const double err = std::fabs(res.tau - value);
    out.values["measured"] = res.tau;
    out.values["expected"] = value;
    out.values["error"] = err;
    out.pass = res.reachable && err <= tol;
    if (!out.pass) out.note = "tau mismatch: measured " + num(res.tau) + ", expected " + num(value);
  }
  return out;
}

TaskOutcome run_maximizer(RunState& rs, const TaskEntry& t) {
  const ProductSpacetime& st = *rs.sc.st;
  TaskOutcome out;
  const Event p = parse_event(need(t.params, "source", t.ptr), st, t.ptr + "/source");
  const Event q = parse_event(need(t.params, "target", t.ptr), st, t.ptr + "/target");
  const TimeSepResult sep = time_separation(rs.causal_dag(), p, q);
  out.values["source"] = event_json(p);
  out.values["target"] = event_json(q);
  out.values["reachable"] = sep.reachable;
  out.values["tau"] = sep.tau;
  out.values["strict_chain"] = sep.strict_chain;
  if (!sep.reachable) {
    out.pass = false;
    out.note = "target is outside the causal future of the source";
    return out;
  }
  const auto events = maximizer_events(rs.causal_dag(), p, q);
  json chain = json::array();
  for (const Event& e : events) chain.push_back(event_json(e));
  out.values["chain"] = std::move(chain);
  if (events.size() >= 2) {
    const CurveAudit audit = regularity_audit(st, maximizer(rs.causal_dag(), p, q));
    out.values["null_steps"] = audit.null_steps;
    out.values["min_margin2"] = audit.min_margin2;
  }
  return out;
}

TaskOutcome run_pushup(RunState& rs, const TaskEntry& t) {
  const ProductSpacetime& st = *rs.sc.st;
  TaskOutcome out;
  const Event q = parse_event(need(t.params, "q", t.ptr), st, t.ptr + "/q");
  const Event p = parse_event(need(t.params, "p", t.ptr), st, t.ptr + "/p");
  const Event r = parse_event(need(t.params, "r", t.ptr), st, t.ptr + "/r");
  out.values["q"] = event_json(q);
  out.values["p"] = event_json(p);
  out.values["r"] = event_json(r);

  const TimeSepResult sep_pr = time_separation(rs.causal_dag(), p, r);
  if (!sep_pr.tau_positive) {
    out.pass = false;
    out.note = "p does not strictly precede r (no positive time separation)";
    return out;
  }
  std::optional<ProductCurve> causal_leg;
  if (!(q == p)) {
    const TimeSepResult sep_qp = time_separation(rs.causal_dag(), q, p);
    if (!sep_qp.reachable) {
      out.pass = false;
      out.note = "q does not causally precede p";
      return out;
    }
    causal_leg = maximizer(rs.causal_dag(), q, p);
  }
  const ProductCurve timelike_leg = maximizer(rs.causal_dag(), p, r);

  PushUpOptions opts;
  opts.force = opt_bool(t.params, "force", false, t.ptr);
  try {
    const PushUpResult res = push_up(st, causal_leg, timelike_leg, opts);
    const CausalClass cls = classify(st, res.curve);
    out.values["eps_b"] = res.eps_b;
    out.values["tau_total"] = res.tau_total;
    out.values["certified"] = res.certified;
    out.values["timelike"] = cls.kind == CausalClass::Kind::timelike;
    out.values["min_margin2"] = cls.min_margin2;
    out.pass = cls.kind == CausalClass::Kind::timelike;
    if (!out.pass) out.note = "push-up result is not strictly timelike";
  } catch (const std::exception& e) {
    out.pass = false;
    out.note = e.what();
  }
  return out;
}

TaskOutcome run_regularity(RunState& rs, const TaskEntry& t) {
  const ProductSpacetime& st = *rs.sc.st;
  TaskOutcome out;
  const int want = opt_int(t.params, "pairs", 50, t.ptr);
  if (want < 1) fail(t.ptr + "/pairs", "need at least one pair");
  const int layers = st.layer_count();
  const int nodes = st.space().node_count();
  Rng rng(rs.sc.seed);
  std::vector<std::pair<Event, Event>> pairs;
  for (int k = 0; k < want; ++k) {
    const int l1 = rng.index(layers - 1);
    const int l2 = l1 + 1 + rng.index(layers - 1 - l1);
    pairs.push_back({{l1, rng.index(nodes)}, {l2, rng.index(nodes)}});
  }
  const BatchAudit audit = audit_maximizers(rs.causal_dag(), pairs);
  out.values["requested"] = want;
  out.values["audited"] = audit.audited;
  out.values["skipped"] = audit.skipped;
  out.values["null_steps"] = audit.null_steps;
  out.values["negative_steps"] = audit.negative_steps;
  if (audit.audited > 0) out.values["min_margin2"] = audit.min_margin2;
  if (audit.audited == 0) {
    out.pass = false;
    out.note = "no positive-separation pairs sampled";
  } else {
    out.pass = audit.null_steps == 0 && audit.negative_steps == 0;
    if (!out.pass)
      out.note = "maximizers touch the cone (" + std::to_string(audit.null_steps) +
                 " null steps)";
  }
  return out;
}

TaskOutcome run_hyperbolicity(RunState& rs, const TaskEntry& t) {
  TaskOutcome out;
  const json& rays_j = need(t.params, "rays", t.ptr);
  if (!rays_j.is_array() || rays_j.empty())
    fail(t.ptr + "/rays", "expected a non-empty array of rays");
  std::optional<std::string> require;
  if (t.params.contains("require"))
    require = need_string(t.params.at("require"), t.ptr + "/require");

  const int nodes = rs.sc.space->node_count();
  std::string csv = "ray,k,partial_sum\n";
  json rays = json::array();
  bool all_match = true;
  for (std::size_t i = 0; i < rays_j.size(); ++i) {
    const std::string rptr = t.ptr + "/rays/" + std::to_string(i);
    const json& rj = rays_j[i];
    RayDescriptor ray;
    const json& nodes_j = need(rj, "nodes", rptr);
    if (!nodes_j.is_array()) fail(rptr + "/nodes", "expected an array");
    for (std::size_t k = 0; k < nodes_j.size(); ++k) {
      const int x = need_int(nodes_j[k], rptr + "/nodes/" + std::to_string(k));
      if (x < 0 || x >= nodes) fail(rptr + "/nodes/" + std::to_string(k), "unknown node");
      ray.nodes.push_back(x);
    }
    const json& times_j = need(rj, "times", rptr);
    if (!times_j.is_array()) fail(rptr + "/times", "expected an array");
    for (std::size_t k = 0; k < times_j.size(); ++k)
      ray.times.push_back(need_number(times_j[k], rptr + "/times/" + std::to_string(k)));

    json entry;
    try {
      const DivergenceReport rep = properness_diagnostic(*rs.sc.family, ray);
      const char* verdict = rep.verdict == DivergenceReport::Verdict::divergent ? "divergent"
                            : rep.verdict == DivergenceReport::Verdict::bounded ? "bounded"
                                                                                : "inconclusive";
      entry["verdict"] = verdict;
      entry["rate"] = rep.rate;
      if (rep.verdict == DivergenceReport::Verdict::bounded)
        entry["extrapolated_bound"] = rep.extrapolated_bound;
      for (std::size_t k = 0; k < rep.partial_sums.size(); ++k)
        csv += std::to_string(i) + "," + std::to_string(k) + "," + num(rep.partial_sums[k]) +
               "\n";
      if (require && *require != verdict) all_match = false;
    } catch (const std::invalid_argument& e) {
      entry["verdict"] = "invalid";
      entry["note"] = e.what();
      all_match = false;
    }
    rays.push_back(std::move(entry));
  }
  out.files.emplace_back(artifact_file("divergence_sums", t, ".csv"), std::move(csv));
  out.values["rays"] = std::move(rays);
  out.values["declared_rays_only"] = true;
  out.pass = all_match;
  if (!out.pass) out.note = "a declared ray missed the required verdict";
  return out;
}

TaskOutcome run_verify_lip(RunState& rs, const TaskEntry& t) {
  TaskOutcome out;
  RegularityOptions opts;
  opts.scales = opt_int(t.params, "scales", opts.scales, t.ptr);
  opts.pairs_per_scale = opt_int(t.params, "pairs_per_scale", opts.pairs_per_scale, t.ptr);
  opts.gamma_tol = opt_number(t.params, "gamma_tol", opts.gamma_tol, t.ptr);
  const RegularityReport rep = verify_regularity(*rs.sc.family, rs.sc.seed, opts);
  const char* verdict = rep.verdict == RegularityReport::Verdict::pass   ? "pass"
                        : rep.verdict == RegularityReport::Verdict::fail ? "fail"
                                                                         : "inconclusive";
  out.values["verdict"] = verdict;
  if (std::isfinite(rep.gamma)) out.values["gamma"] = rep.gamma;
  if (std::isfinite(rep.C)) out.values["C"] = rep.C;
  out.values["lapse_lip"] = rep.lapse_lip;
  out.values["admissible_pairs"] = rep.admissible_pairs;
  if (!rep.note.empty()) out.values["note"] = rep.note;
  out.pass = rep.verdict == RegularityReport::Verdict::pass;
  if (!out.pass)
    out.note = std::string("regularity verdict: ") + verdict +
               (std::isfinite(rep.gamma) ? " (gamma = " + num(rep.gamma) + ")" : "");
  return out;
}

// Density grid shared by the tcd and rigidity tasks.
DensityField build_density(RunState& rs, const TaskEntry& t) {
  const TimeInterval iv = rs.sc.family->interval();
  const int samples = opt_int(t.params, "samples", 65, t.ptr);
  if (samples < 2) fail(t.ptr + "/samples", "need at least two density samples");
  const json& dj = need(t.params, "density", t.ptr);
  const std::string dptr = t.ptr + "/density";
  const std::string form = need_string(need(dj, "form", dptr), dptr + "/form");
  std::function<double(double)> base;
  if (form == "const") {
    const double value = opt_number(dj, "value", 1.0, dptr);
    if (!(value > 0.0)) fail(dptr + "/value", "density must be positive");
    base = [value](double) { return value; };
  } else if (form == "affine") {
    const double a = opt_number(dj, "a", 1.0, dptr);
    const double b = opt_number(dj, "b", 0.0, dptr);
    base = [a, b](double s) { return a + b * s; };
    if (!(base(iv.lo) > 0.0) || !(base(iv.hi) > 0.0))
      fail(dptr, "affine density must stay positive on the interval");
  } else if (form == "exp_time") {
    const double rate = opt_number(dj, "rate", 1.0, dptr);
    base = [rate](double s) { return std::exp(rate * s); };
  } else if (form == "exp_s2") {
    base = [](double s) { return std::exp(s * s); };
  } else {
    fail(dptr + "/form", "unknown density form '" + form +
                             "' (expected const, affine, exp_time, or exp_s2)");
  }

  const int nodes = rs.sc.space->node_count();
  std::vector<double> weights(static_cast<std::size_t>(nodes), 1.0);
  if (t.params.contains("node_weights")) {
    const json& wj = t.params.at("node_weights");
    if (!wj.is_array() || static_cast<int>(wj.size()) != nodes)
      fail(t.ptr + "/node_weights", "expected one weight per node");
    for (std::size_t i = 0; i < wj.size(); ++i) {
      weights[i] = need_number(wj[i], t.ptr + "/node_weights/" + std::to_string(i));
      if (!(weights[i] > 0.0))
        fail(t.ptr + "/node_weights/" + std::to_string(i), "weights must be positive");
    }
  }

  std::vector<double> times(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i)
    times[static_cast<std::size_t>(i)] = iv.lo + (iv.hi - iv.lo) * i / (samples - 1);
  std::vector<std::vector<double>> grid(times.size(),
                                        std::vector<double>(static_cast<std::size_t>(nodes)));
  for (std::size_t i = 0; i < times.size(); ++i)
    for (int x = 0; x < nodes; ++x)
      grid[i][static_cast<std::size_t>(x)] = base(times[i]) * weights[static_cast<std::size_t>(x)];
  std::vector<double> mass(static_cast<std::size_t>(nodes), 1.0);
  return DensityField(std::move(times), std::move(grid), std::move(mass));
}

std::vector<int> parse_region(const json& params, int nodes, const std::string& ptr) {
  std::vector<int> region;
  if (!params.contains("region")) {
    for (int x = 0; x < nodes; ++x) region.push_back(x);
    return region;
  }
  const json& rj = params.at("region");
  if (!rj.is_array() || rj.empty()) fail(ptr + "/region", "expected a non-empty array of nodes");
  for (std::size_t i = 0; i < rj.size(); ++i) {
    const int x = need_int(rj[i], ptr + "/region/" + std::to_string(i));
    if (x < 0 || x >= nodes) fail(ptr + "/region/" + std::to_string(i), "unknown node");
    region.push_back(x);
  }
  return region;
}

TaskOutcome run_tcd(RunState& rs, const TaskEntry& t) {
  TaskOutcome out;
  const DensityField field = build_density(rs, t);
  const TimeInterval iv = rs.sc.family->interval();
  const json& wj = need(t.params, "windows", t.ptr);
  if (!wj.is_array() || wj.size() != 2)
    fail(t.ptr + "/windows", "expected exactly two windows [[a0,b0],[a1,b1]]");
  const auto w0 = parse_window(wj[0], iv, t.ptr + "/windows/0");
  const auto w1 = parse_window(wj[1], iv, t.ptr + "/windows/1");
  VerticalCase vc{w0.first, w0.second, w1.first, w1.second,
                  parse_region(t.params, rs.sc.space->node_count(), t.ptr)};
  const double p = opt_number(t.params, "p", 0.5, t.ptr);
  const double K = opt_number(t.params, "K", 0.0, t.ptr);
  const double N = opt_number(t.params, "N", 2.0, t.ptr);
  const int t_samples = opt_int(t.params, "t_samples", 21, t.ptr);

  const ProbeReport rep = wtcd_probe(field, p, K, N, {vc}, t_samples);
  const ProbeCaseReport& pc = rep.cases.at(0);
  std::string csv = "t,u\n";
  for (std::size_t i = 0; i < pc.curve.t.size(); ++i)
    csv += num(pc.curve.t[i]) + "," + num(pc.curve.u[i]) + "\n";
  out.files.emplace_back("entropy_curve_" + t.label + ".csv", std::move(csv));
  out.values["K"] = K;
  out.values["N"] = N;
  out.values["p"] = p;
  out.values["displacement"] = pc.displacement;
  if (std::isfinite(pc.verdict.worst_slack)) out.values["worst_slack"] = pc.verdict.worst_slack;
  out.values["worst_t"] = pc.verdict.worst_t;
  if (!pc.verdict.note.empty()) out.values["note"] = pc.verdict.note;
  out.pass = rep.all_pass;
  if (!out.pass)
    out.note = "distortion inequality fails (worst slack " + num(pc.verdict.worst_slack) +
               " at t = " + num(pc.verdict.worst_t) + ")";
  return out;
}

TaskOutcome run_rigidity(RunState& rs, const TaskEntry& t) {
  TaskOutcome out;
  const DensityField field = build_density(rs, t);
  const TimeInterval iv = rs.sc.family->interval();
  const json& wj = need(t.params, "windows", t.ptr);
  if (!wj.is_array() || wj.empty()) fail(t.ptr + "/windows", "expected at least one window");
  std::vector<std::pair<double, double>> windows;
  for (std::size_t i = 0; i < wj.size(); ++i)
    windows.push_back(parse_window(wj[i], iv, t.ptr + "/windows/" + std::to_string(i)));
  const double K = opt_number(t.params, "K", 0.0, t.ptr);
  const double N = opt_number(t.params, "N", 2.0, t.ptr);

  const RigidityReport rep = concavity_rigidity(field, K, N, windows);
  json nodes = json::array();
  for (const auto& nv : rep.nodes) {
    json e;
    e["node"] = nv.node;
    e["concave_pass"] = nv.concave_pass;
    if (std::isfinite(nv.max_violation))
      e["max_violation"] = nv.max_violation;
    else
      e["max_violation"] = "unbounded";
    nodes.push_back(std::move(e));
  }
  json doc;
  doc["all_pass"] = rep.all_pass;
  doc["constancy"] = rep.constancy;
  doc["exceptional_mass"] = rep.exceptional_mass;
  doc["slope_bound"] = rep.slope_bound;
  doc["nodes"] = nodes;
  out.files.emplace_back(artifact_file("rigidity_report", t, ".json"), doc.dump(2) + "\n");
  out.values["all_pass"] = rep.all_pass;
  out.values["constancy"] = rep.constancy;
  out.values["exceptional_mass"] = rep.exceptional_mass;
  out.values["slope_bound"] = rep.slope_bound;
  out.pass = rep.all_pass;
  if (!out.pass)
    out.note = "concavity fails on nodes carrying mass " + num(rep.exceptional_mass);
  return out;
}

TaskOutcome run_demo_bubble(RunState& rs, const TaskEntry& t) {
  const ProductSpacetime& st = *rs.sc.st;
  TaskOutcome out;
  const Event p = parse_event(need(t.params, "p", t.ptr), st, t.ptr + "/p");
  const Event q = parse_event(need(t.params, "q", t.ptr), st, t.ptr + "/q");
  out.values["p"] = event_json(p);
  out.values["q"] = event_json(q);
  const TimeSepResult sep = time_separation(rs.causal_dag(), p, q);
  if (!sep.reachable) {
    out.values["note"] = "q is outside the causal future of p; empty diamond";
    return out;  // demos never fail
  }
  const DiamondResult diamond = causal_diamond(rs.causal_dag(), p, q);
  std::string csv = "layer,node\n";
  for (const Event& e : diamond.events)
    csv += std::to_string(e.layer) + "," + std::to_string(e.node) + "\n";
  out.files.emplace_back(artifact_file("diamond", t, ".csv"), std::move(csv));
  out.values["events"] = static_cast<int>(diamond.events.size());
  out.values["max_weighted_slack"] = diamond.max_weighted_slack;
  out.values["tau"] = sep.tau;
  return out;
}

TaskOutcome run_task(RunState& rs, const TaskEntry& t, const RunOverrides& ov) {
  if (t.type == "tau") return run_tau(rs, t);
  if (t.type == "maximizer") return run_maximizer(rs, t);
  if (t.type == "pushup") {
    TaskEntry forced = t;
    if (ov.force) forced.params["force"] = true;
    return run_pushup(rs, forced);
  }
  if (t.type == "regularity") return run_regularity(rs, t);
  if (t.type == "hyperbolicity") return run_hyperbolicity(rs, t);
  if (t.type == "verify-lip") return run_verify_lip(rs, t);
  if (t.type == "tcd") return run_tcd(rs, t);
  if (t.type == "rigidity") return run_rigidity(rs, t);
  if (t.type == "demo-bubble") return run_demo_bubble(rs, t);
  fail(t.ptr + "/task", "unknown task '" + t.type + "'");
}

}  // namespace

const std::vector<std::string>& task_names() { return known_tasks(); }

RunResult run_scenario_text(const std::string& json_text, const RunOverrides& ov) {
  RunResult out;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    out.exit_code = 2;
    out.message = std::string("scenario is not valid JSON: ") + e.what();
    return out;
  }

  std::optional<ParsedScenario> sc;
  try {
    sc = parse_scenario(doc, ov);
  } catch (const schema_error& e) {
    out.exit_code = 2;
    out.message = e.what();
    return out;
  }
  out.out_dir = sc->out_dir;

  RunState rs{*sc, std::nullopt};
  json report;
  report["seed"] = sc->seed;
  json task_reports = json::array();
  bool all_gating = true;
  std::string first_failure;

  for (const TaskEntry& t : sc->tasks) {
    TaskOutcome oc;
    try {
      oc = run_task(rs, t, ov);
    } catch (const schema_error& e) {
      out.exit_code = 2;
      out.message = e.what();
      return out;
    } catch (const std::exception& e) {
      oc.pass = false;
      oc.note = e.what();
    }
    json entry;
    entry["task"] = t.type;
    entry["name"] = t.label;
    entry["gating"] = t.gating;
    entry["pass"] = oc.pass;
    entry["values"] = oc.values;
    if (!oc.note.empty()) entry["note"] = oc.note;
    json files = json::array();
    for (auto& [fname, content] : oc.files) {
      files.push_back(fname);
      out.artifacts[fname] = std::move(content);
    }
    if (!files.empty()) entry["artifacts"] = std::move(files);
    task_reports.push_back(std::move(entry));
    if (t.gating && !oc.pass) {
      all_gating = false;
      if (first_failure.empty()) first_failure = t.type + " '" + t.label + "'";
    }
  }

  report["tasks"] = std::move(task_reports);
  report["all_gating_pass"] = all_gating;
  out.artifacts["report.json"] = report.dump(2) + "\n";
  if (!all_gating) {
    out.exit_code = 1;
    out.message = "gating task " + first_failure + " failed";
  }
  return out;
}

RunResult run_scenario_file(const std::string& path, const RunOverrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    RunResult out;
    out.exit_code = 2;
    out.message = "cannot read scenario file '" + path + "'";
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_scenario_text(buf.str(), ov);
}

int write_bundle(const RunResult& result, std::string* error) {
  namespace fs = std::filesystem;
  const fs::path dir = result.out_dir.empty() ? fs::path(".") : fs::path(result.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    if (error) *error = "cannot create output directory '" + dir.string() + "': " + ec.message();
    return 3;
  }
  for (const auto& [name, content] : result.artifacts) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
      if (error) *error = "cannot write '" + (dir / name).string() + "'";
      return 3;
    }
  }
  return 0;
}

}  // namespace lorprod
