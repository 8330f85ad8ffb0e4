#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "usac/checkpoint.hpp"
#include "usac/config.hpp"
#include "usac/errors.hpp"
#include "usac/harness.hpp"
#include "usac/metrics_io.hpp"
#include "usac/presets.hpp"
#include "usac/verify/criteria.hpp"

namespace {

namespace fs = std::filesystem;
using namespace usac;

// Exit statuses.
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kBadConfig = 2;
constexpr int kDiverged = 3;

std::optional<std::string> env_var(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

fs::path output_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (auto v = env_var("USAC_OUTPUT_DIR")) return *v;
  return fallback;
}

std::optional<int> env_workers() {
  const auto v = env_var("USAC_WORKERS");
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    const int n = std::stoi(*v, &used);
    if (used != v->size() || n < 1) throw std::invalid_argument(*v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("USAC_WORKERS must be a positive integer, got '" + *v + "'");
  }
}

void apply_overrides(const std::vector<std::string>& sets, const std::function<void(const std::string&, const std::string&)>& set) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set(s.substr(0, eq), s.substr(eq + 1));
  }
}

struct SourceFlags {
  std::string config;
  std::string preset;
  std::vector<std::string> sets;
  std::string out;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
  auto* c = cmd->add_option("-c,--config", f.config, "Configuration file");
  auto* p = cmd->add_option("-p,--preset", f.preset, "Shipped preset name (see `usac presets`)");
  c->excludes(p);
  cmd->add_option("-s,--set", f.sets, "Override one key: key=value (repeatable)");
  cmd->add_option("-o,--out", f.out, "Output directory (default: $USAC_OUTPUT_DIR or ./runs/...)");
}

int cmd_train(const SourceFlags& f, const std::string& resume, std::int64_t snapshot_every) {
  std::optional<harness::TrainingSession> session;
  harness::RunConfig config;
  if (!resume.empty()) {
    if (!f.config.empty() || !f.preset.empty() || !f.sets.empty())
      throw ConfigError("--resume takes its configuration from the snapshot");
    session.emplace(harness::TrainingSession::resume(Checkpoint::load(resume)));
    config = session->config();
  } else {
    if (!f.preset.empty()) config = harness::preset_run(f.preset);
    else if (!f.config.empty()) config = harness::RunConfig::load(f.config);
    apply_overrides(f.sets, [&config](const std::string& k, const std::string& v) { config.set(k, v); });
    config.validate();
    session.emplace(config);
  }
  const fs::path dir = output_dir(f.out, "runs/" + config.env + "-seed" + std::to_string(config.seed));
  fs::create_directories(dir);
  std::cerr << "train " << config.env << " seed " << config.seed << " (" << config.total_steps << " steps, config "
            << config.hash() << ") -> " << dir.string() << "\n";
  const std::int64_t chunk = snapshot_every > 0 ? snapshot_every : config.total_steps;
  while (!session->finished()) {
    session->advance_to(session->step() + std::max<std::int64_t>(chunk, 1));
    if (snapshot_every > 0) session->snapshot().save(dir / "snapshot.ckpt");
    const auto& recs = session->result().records;
    if (!recs.empty())
      std::cerr << "  step " << recs.back().step << " mean_return " << recs.back().mean_return << "\n";
  }
  const auto result = session->result();
  harness::emit_run(dir, result, config);
  std::cout << harness::run_report(result, config);
  return result.diverged ? kDiverged : kOk;
}

int cmd_grid(const SourceFlags& f, int workers_flag) {
  harness::GridSpec spec;
  if (!f.preset.empty()) spec = harness::preset_grid(f.preset);
  else if (!f.config.empty()) spec = harness::GridSpec::load(f.config);
  else throw ConfigError("grid needs --config or --preset");
  apply_overrides(f.sets, [&spec](const std::string& k, const std::string& v) {
    auto text = spec.serialize() + k + " = " + v + "\n";
    spec = harness::GridSpec::parse(text);
  });
  if (auto w = env_workers()) spec.workers = *w;
  if (workers_flag > 0) spec.workers = workers_flag;
  spec.validate();
  const fs::path dir = output_dir(f.out, "runs/grid-" + spec.base.env);
  std::cerr << "grid " << spec.cell_count() << " cells x " << spec.seeds.size() << " seeds on " << spec.workers
            << " workers -> " << dir.string() << "\n";
  const auto summary = harness::run_grid(spec);
  harness::emit_grid(dir, summary, spec);
  std::cout << harness::grid_report(summary, spec);
  for (const auto& c : summary.cells)
    if (c.diverged_runs > 0) return kDiverged;
  return kOk;
}

int cmd_verify(const std::vector<int>& ids_flag, bool learning, const std::string& out, int workers_flag) {
  verify::CriteriaOptions opts;
  opts.output_dir = output_dir(out, "runs/acceptance");
  opts.workers = workers_flag > 0 ? workers_flag : env_workers().value_or(1);
  opts.log = &std::cerr;
  std::vector<int> ids = ids_flag;
  if (ids.empty())
    for (int id : verify::CriteriaRunner::all_ids())
      if (learning || !verify::CriteriaRunner::is_learning(id)) ids.push_back(id);
  verify::CriteriaRunner runner(opts);
  bool all = true;
  for (int id : ids) {
    const auto r = runner.run(id);
    std::cout << verify::format_result(r) << std::endl;
    all = all && r.passed;
  }
  return all ? kOk : kFailure;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    std::cout << harness::find_preset(show).text;
    return kOk;
  }
  for (const auto& p : harness::presets())
    std::cout << (p.is_grid() ? "grid   " : "train  ") << p.name << "\n       " << p.description() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-critic soft actor-critic with utility-steered pessimism"};
  app.require_subcommand(1);

  SourceFlags train_flags;
  std::string resume;
  std::int64_t snapshot_every = 0;
  auto* train = app.add_subcommand("train", "Run one training run and write its metrics");
  add_source_flags(train, train_flags);
  train->add_option("--resume", resume, "Continue from a snapshot written by --snapshot-every");
  train->add_option("--snapshot-every", snapshot_every, "Write <out>/snapshot.ckpt every N steps")
      ->check(CLI::NonNegativeNumber);

  SourceFlags grid_flags;
  int grid_workers = 0;
  auto* grid = app.add_subcommand("grid", "Sweep kappa_critic x kappa_actor x seeds");
  add_source_flags(grid, grid_flags);
  grid->add_option("-w,--workers", grid_workers, "Concurrent runs (overrides USAC_WORKERS and the config)")
      ->check(CLI::PositiveNumber);

  std::vector<int> ids;
  bool learning = false;
  std::string verify_out;
  int verify_workers = 0;
  auto* ver = app.add_subcommand("verify", "Run the oracle and property checks");
  ver->add_option("--criteria", ids, "Criteria to run (default: all but the learning runs)")
      ->delimiter(',')
      ->check(CLI::Range(1, 10));
  ver->add_flag("--learning", learning, "Include the pendulum learning criteria (tens of minutes)");
  ver->add_option("-o,--out", verify_out, "Directory for learning-run outputs");
  ver->add_option("-w,--workers", verify_workers, "Concurrent learning runs")->check(CLI::PositiveNumber);

  std::string show;
  auto* pre = app.add_subcommand("presets", "List shipped configurations");
  pre->add_option("--show", show, "Print one preset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_flags, resume, snapshot_every);
    if (*grid) return cmd_grid(grid_flags, grid_workers);
    if (*ver) return cmd_verify(ids, learning, verify_out, verify_workers);
    if (*pre) return cmd_presets(show);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
