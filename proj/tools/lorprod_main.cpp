// Command-line front end: runs scenario files and writes their report bundles.
//
// `lorprod run scenario.json` executes every task in the scenario; each task
// type is also available as its own subcommand (`lorprod tau scenario.json`)
// which runs only the tasks of that type.  Exit codes: 0 all gating tasks
// pass, 1 a gating task failed numerically, 2 the scenario violates the
// schema, 3 the output directory cannot be written.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lorprod/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lorentzian product-space toolkit: causal grids, time separation, "
               "push-up, regularity and curvature diagnostics"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tol = 0.0;
  bool force = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", out_dir,
                    "output directory (overrides the scenario and LORPROD_OUT_DIR)");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--tol", tol, "tolerance override");
    sub->add_flag("--force", force, "run push-up tasks even when certification fails");
  };

  add_common(app.add_subcommand("run", "run every task in a scenario"));
  for (const std::string& name : lorprod::task_names())
    add_common(app.add_subcommand(name, "run only the '" + name + "' tasks of a scenario"));

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  lorprod::RunOverrides ov;
  if (sub->count("--out") > 0) ov.out_dir = out_dir;
  if (sub->count("--seed") > 0) ov.seed = seed;
  if (sub->count("--tol") > 0) ov.tol = tol;
  ov.force = force;
  if (sub->get_name() != "run") ov.only_tasks = std::vector<std::string>{sub->get_name()};

  const lorprod::RunResult res = lorprod::run_scenario_file(scenario_path, ov);
  if (res.exit_code == 2) {
    std::cerr << "error: " << res.message << "\n";
    return 2;
  }

  std::string write_error;
  if (lorprod::write_bundle(res, &write_error) != 0) {
    std::cerr << "error: " << write_error << "\n";
    return 3;
  }

  const auto it = res.artifacts.find("report.json");
  if (it != res.artifacts.end()) {
    const nlohmann::json report = nlohmann::json::parse(it->second);
    for (const auto& t : report.at("tasks")) {
      std::cout << (t.at("pass").get<bool>() ? "pass" : "FAIL") << "  "
                << t.at("task").get<std::string>() << " '" << t.at("name").get<std::string>()
                << "'";
      if (t.contains("note")) std::cout << "  (" << t.at("note").get<std::string>() << ")";
      std::cout << "\n";
    }
  }
  std::cout << "report: " << (std::filesystem::path(res.out_dir) / "report.json").string()
            << "\n";
  if (res.exit_code != 0) std::cerr << "error: " << res.message << "\n";
  return res.exit_code;
}
