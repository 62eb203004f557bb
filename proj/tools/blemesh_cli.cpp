/*
 * blemesh - command-line front end for the Bluetooth Mesh broadcast
 * simulator.
 *
 * Subcommands:
 *   run       execute a preset (all grid cells) or a scenario file
 *   sweep     cross-product parameter sweep over a base scenario
 *   preset    list presets or emit one as a scenario file
 *   validate  schema-check a scenario file
 *   synth-map generate a synthetic interference map file
 *
 * Every experiment writes summary.json, replications.csv, links.csv and
 * config_echo.json (the fully resolved scenario, reproducing the run).
 */
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "blemesh/blemesh.hpp"

namespace fs = std::filesystem;
using namespace blemesh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitSchema = 2;
constexpr int kExitInternal = 3;

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<double> horizon_ms;
  std::optional<double> warmup_ms;
  int workers = 0;
  std::string output_dir;
};

std::string default_output_dir() {
  if (const char* env = std::getenv("BLEMESH_OUTPUT_DIR")) return env;
  return "out";
}

ReplicationPlan resolve_plan(const Scenario& s, const RunFlags& flags) {
  ReplicationPlan plan;
  if (s.plan) plan = ReplicationPlan::from_defaults(*s.plan);
  if (flags.seed) plan.seed = *flags.seed;
  if (flags.replications) plan.replications = *flags.replications;
  if (flags.horizon_ms) plan.horizon = millis_to_micros(*flags.horizon_ms);
  if (flags.warmup_ms) plan.warmup = millis_to_micros(*flags.warmup_ms);
  plan.workers = flags.workers > 0
                     ? flags.workers
                     : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return plan;
}

bool same_run(const RunMetrics& a, const RunMetrics& b) {
  return a.traced_delivered == b.traced_delivered && a.delivery_delay == b.delivery_delay &&
         a.outcome_counts == b.outcome_counts && a.channel_attempts == b.channel_attempts &&
         a.potential_reception_count == b.potential_reception_count &&
         a.busy_miss_count == b.busy_miss_count;
}

/// Replays replication 0 before the real run; identical seeds must give
/// identical results, otherwise the determinism contract is broken and the
/// run aborts.
void determinism_self_check(const Scenario& s, const ReplicationPlan& plan) {
  const auto first = run_replication(s, 0, plan.seed, plan.warmup, plan.horizon);
  const auto second = run_replication(s, 0, plan.seed, plan.warmup, plan.horizon);
  if (!same_run(first, second))
    throw std::logic_error("internal error: identical seeds produced different results");
}

std::string sanitize(std::string v) {
  for (auto& c : v)
    if (c == ':' || c == '/' || c == ' ') c = '-';
  return v;
}

struct CellSpec {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> params;

  std::string label() const {
    std::string out;
    for (const auto& [k, v] : params) {
      if (!out.empty()) out += ",";
      out += k + "=" + v;
    }
    return out;
  }
};

std::vector<CellSpec> expand_cells(const std::vector<SweepAxis>& axes) {
  std::vector<CellSpec> cells{{0, {}}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw std::invalid_argument("sweep axis '" + axis.param + "' is empty");
    std::vector<CellSpec> next;
    for (const auto& cell : cells) {
      for (const auto& value : axis.values) {
        CellSpec c = cell;
        c.params.emplace_back(axis.param, value);
        next.push_back(c);
      }
    }
    cells = std::move(next);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].index = i;
  return cells;
}

void write_outputs(const fs::path& dir, const Scenario& resolved, const ReplicationPlan& plan,
                   const ExperimentResult& result) {
  fs::create_directories(dir);
  Scenario echo = resolved;
  echo.plan = PlanDefaults{plan.seed, plan.replications, plan.horizon, plan.warmup};
  save_scenario(echo, (dir / "config_echo.json").string());
  std::ofstream summary(dir / "summary.json");
  summary << summary_to_json(result.aggregate).dump(2) << '\n';
  write_replications_csv(result.runs, (dir / "replications.csv").string());
  write_links_csv(result.aggregate, (dir / "links.csv").string());
}

void print_headline(const std::string& label, const AggregateMetrics& a) {
  std::cout << label << ": loss " << format_double(a.loss_rate) << " [" << format_double(a.loss_ci_low)
            << ", " << format_double(a.loss_ci_high) << "]";
  if (a.delivered > 0)
    std::cout << "  avg_delay " << format_double(a.avg_delay_ms) << " ms  max_delay "
              << format_double(a.max_delay_ms) << " ms";
  if (a.congestion_probability)
    std::cout << "  congestion " << format_double(*a.congestion_probability);
  std::cout << "  (delivered " << a.delivered << "/" << a.replications << ")\n";
}

int execute_cells(const Scenario& base, const std::vector<SweepAxis>& axes, const RunFlags& flags,
                  const std::string& experiment_name) {
  const fs::path out_root = flags.output_dir.empty() ? default_output_dir() : flags.output_dir;
  const auto cells = expand_cells(axes);
  if (cells.size() == 1 && cells[0].params.empty()) {
    const ReplicationPlan plan = resolve_plan(base, flags);
    determinism_self_check(base, plan);
    const auto result = run_experiment(base, plan);
    write_outputs(out_root, base, plan, result);
    print_headline(base.label, result.aggregate);
    std::cout << "outputs: " << out_root.string() << "\n";
    return kExitOk;
  }

  fs::create_directories(out_root);
  std::ofstream index(out_root / "sweep_index.csv");
  index << "cell,directory";
  for (const auto& axis : axes) index << ',' << axis.param;
  index << '\n';

  const ReplicationPlan base_plan = resolve_plan(base, flags);
  for (const auto& cell : cells) {
    Scenario s = base;
    for (const auto& [param, value] : cell.params) apply_parameter(s, param, value);
    s.label = experiment_name + (cell.params.empty() ? "" : (" " + cell.label()));
    s.validate();
    ReplicationPlan plan = base_plan;
    plan.seed = derive_seed(base_plan.seed, cell.index);
    if (cell.index == 0) determinism_self_check(s, plan);
    const auto result = run_experiment(s, plan);

    char cell_name[32];
    std::snprintf(cell_name, sizeof cell_name, "cell_%03zu", cell.index);
    const fs::path dir = out_root / (std::string(cell_name) +
                                     (cell.params.empty() ? "" : "_" + sanitize(cell.label())));
    write_outputs(dir, s, plan, result);
    index << cell.index << ',' << dir.filename().string();
    for (const auto& [_, value] : cell.params) index << ',' << value;
    index << '\n';
    print_headline(s.label, result.aggregate);
  }
  std::cout << "outputs: " << out_root.string() << "\n";
  return kExitOk;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, sep)) out.push_back(token);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bluetooth Mesh connection-less broadcast simulator"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "Run a preset experiment or a scenario file");
  std::string run_preset, run_scenario;
  RunFlags run_flags;
  run->add_option("--preset", run_preset, "Preset name (see `blemesh preset`)");
  run->add_option("--scenario", run_scenario, "Scenario file (JSON)");
  run->add_option("--seed", run_flags.seed, "Master seed");
  run->add_option("--replications", run_flags.replications, "Replications per cell");
  run->add_option("--horizon-ms", run_flags.horizon_ms, "Per-replication horizon");
  run->add_option("--warmup-ms", run_flags.warmup_ms, "Traced-message generation instant");
  run->add_option("--workers", run_flags.workers, "Worker threads (default: hardware)");
  run->add_option("--output-dir", run_flags.output_dir,
                  "Output directory (default $BLEMESH_OUTPUT_DIR or ./out)");

  // --- sweep ---
  auto* sweep = app.add_subcommand("sweep", "Cross-product parameter sweep");
  std::string sweep_preset, sweep_scenario;
  std::vector<std::string> sweep_params;
  RunFlags sweep_flags;
  sweep->add_option("--preset", sweep_preset, "Preset supplying the base scenario");
  sweep->add_option("--scenario", sweep_scenario, "Scenario file supplying the base");
  sweep->add_option("--param", sweep_params,
                    "Axis as name=v1,v2,... or name=lo:hi:step (repeatable)");
  sweep->add_option("--seed", sweep_flags.seed, "Master seed");
  sweep->add_option("--replications", sweep_flags.replications, "Replications per cell");
  sweep->add_option("--horizon-ms", sweep_flags.horizon_ms, "Per-replication horizon");
  sweep->add_option("--warmup-ms", sweep_flags.warmup_ms, "Traced-message generation instant");
  sweep->add_option("--workers", sweep_flags.workers, "Worker threads");
  sweep->add_option("--output-dir", sweep_flags.output_dir, "Output directory");

  // --- preset ---
  auto* preset_cmd = app.add_subcommand("preset", "List presets or emit one as a scenario file");
  std::string preset_name, preset_out;
  preset_cmd->add_option("name", preset_name, "Preset to emit");
  preset_cmd->add_option("-o,--output", preset_out, "Write scenario JSON here");

  // --- validate ---
  auto* validate = app.add_subcommand("validate", "Schema-check a scenario file");
  std::string validate_path;
  validate->add_option("file", validate_path, "Scenario file")->required();

  // --- synth-map ---
  auto* synth = app.add_subcommand("synth-map", "Generate a synthetic interference map");
  std::vector<std::string> synth_hotspots, synth_windows;
  std::string synth_out;
  double synth_ratio = kDefaultBandwidthRatioDb;
  synth->add_option("--hotspot", synth_hotspots,
                    "x_m:y_m:peak_dbm:decay_db_per_m:channel_154 (repeatable)");
  synth->add_option("--window", synth_windows, "start_s:end_s[:offset_db] (repeatable)");
  synth->add_option("--bandwidth-ratio-db", synth_ratio, "Adaptation shift (default -6.02)");
  synth->add_option("-o,--output", synth_out, "Output map file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (run_preset.empty() == run_scenario.empty()) {
        std::cerr << "run: exactly one of --preset / --scenario is required\n";
        return kExitSchema;
      }
      if (!run_preset.empty()) {
        const auto p = preset(run_preset);
        return execute_cells(p.base, p.axes, run_flags, p.name);
      }
      const Scenario s = load_scenario(run_scenario);
      return execute_cells(s, {}, run_flags, s.label);
    }

    if (*sweep) {
      if (sweep_preset.empty() == sweep_scenario.empty()) {
        std::cerr << "sweep: exactly one of --preset / --scenario is required\n";
        return kExitSchema;
      }
      if (sweep_params.empty()) {
        std::cerr << "sweep: at least one --param axis is required\n";
        return kExitSchema;
      }
      Scenario base = sweep_preset.empty() ? load_scenario(sweep_scenario) : preset(sweep_preset).base;
      std::vector<SweepAxis> axes;
      for (const auto& spec : sweep_params) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("sweep: expected name=values, got '" + spec + "'");
        SweepAxis axis;
        axis.param = spec.substr(0, eq);
        const std::string values = spec.substr(eq + 1);
        const auto steps = split(values, ':');
        if (steps.size() == 3 && values.find(',') == std::string::npos &&
            axis.param != "inter_pdu_ms" && axis.param != "backoff_ms") {
          const double lo = std::stod(steps[0]), hi = std::stod(steps[1]), step = std::stod(steps[2]);
          if (step <= 0) throw std::invalid_argument("sweep: step must be > 0");
          for (double v = lo; v <= hi + 1e-9; v += step) axis.values.push_back(format_double(v));
        } else {
          axis.values = split(values, ',');
        }
        // Reject unknown names and malformed values before any cell runs.
        for (const auto& v : axis.values) {
          Scenario probe = base;
          apply_parameter(probe, axis.param, v);
        }
        axes.push_back(axis);
      }
      return execute_cells(base, axes, sweep_flags, "sweep");
    }

    if (*preset_cmd) {
      if (preset_name.empty()) {
        for (const auto& name : preset_names()) {
          const auto p = preset(name);
          std::cout << name << "  (" << p.cell_count() << " cells, "
                    << p.base.topology.nodes.size() << " nodes)\n";
        }
        return kExitOk;
      }
      const auto p = preset(preset_name);
      if (preset_out.empty()) {
        std::cout << scenario_to_json(p.base).dump(2) << '\n';
      } else {
        save_scenario(p.base, preset_out);
        std::cout << "wrote " << preset_out << "\n";
      }
      return kExitOk;
    }

    if (*validate) {
      try {
        const Scenario s = load_scenario(validate_path);
        std::cout << "OK: " << s.label << " (" << s.topology.nodes.size() << " nodes)\n";
        return kExitOk;
      } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
      }
    }

    if (*synth) {
      std::vector<InterferenceHotspot> hotspots;
      for (const auto& spec : synth_hotspots) {
        const auto f = split(spec, ':');
        if (f.size() != 5)
          throw std::invalid_argument("synth-map: hotspot needs x:y:peak:decay:channel");
        hotspots.push_back(InterferenceHotspot{std::stod(f[0]), std::stod(f[1]), std::stod(f[2]),
                                               std::stod(f[3]), std::stoi(f[4])});
      }
      std::vector<TimeWindow> windows;
      std::vector<double> offsets;
      for (const auto& spec : synth_windows) {
        const auto f = split(spec, ':');
        if (f.size() != 2 && f.size() != 3)
          throw std::invalid_argument("synth-map: window needs start_s:end_s[:offset_db]");
        windows.push_back(TimeWindow{std::stod(f[0]), std::stod(f[1]), 1.0});
        offsets.push_back(f.size() == 3 ? std::stod(f[2]) : 0.0);
      }
      const auto map = InterferenceMap::synthetic(hotspots, windows, offsets, synth_ratio);
      save_interference_map(map, synth_out);
      std::cout << "wrote " << synth_out << " (" << map.window_count() << " windows, "
                << hotspots.size() << " hotspots)\n";
      return kExitOk;
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::logic_error& e) {
    std::cerr << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
