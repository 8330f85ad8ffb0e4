#include "usac/metrics_io.hpp"

#include <charconv>
#include <iomanip>
#include <sstream>

#include "usac/checkpoint.hpp"
#include "usac/errors.hpp"

namespace usac::harness {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename Int>
Int parse_integer(const std::string& text, const char* what) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ContractError(std::string("csv: bad ") + what + " '" + text + "'");
  return v;
}

// Splits off the provenance line and the header; returns the data lines.
std::vector<std::string> body_lines(const std::string& text, const char* header, std::string* provenance) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ContractError("csv: missing provenance line");
  *provenance = line;
  if (!std::getline(in, line) || line != header) throw ContractError("csv: unexpected header '" + line + "'");
  std::vector<std::string> lines;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::string cell_name(const GridCell& cell) {
  return "kc" + format_real(cell.kappa_critic) + "_ka" + format_real(cell.kappa_actor);
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string provenance_line(const std::string& config_hash, const std::string& seed) {
  return "# config_hash=" + config_hash + " seed=" + seed;
}

std::string run_csv(const std::vector<MetricsRecord>& records, const std::string& config_hash, std::uint64_t seed) {
  std::string out = provenance_line(config_hash, std::to_string(seed)) + "\n" + kRunCsvHeader + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.step) + ',' + format_real(r.mean_return) + ',' + format_real(r.std_return) + ',' +
           format_real(r.estimation_error) + ',' + format_real(r.alpha) + ',' + format_real(r.wall_clock_s) + '\n';
  }
  return out;
}

std::string episodes_csv(const std::vector<MetricsRecord>& records, const std::string& config_hash,
                         std::uint64_t seed) {
  std::string out = provenance_line(config_hash, std::to_string(seed)) + "\n" + kEpisodeCsvHeader + "\n";
  for (const auto& r : records)
    for (std::size_t e = 0; e < r.episode_returns.size(); ++e)
      out += std::to_string(r.step) + ',' + std::to_string(e) + ',' + format_real(r.episode_returns[e]) + '\n';
  return out;
}

ParsedRunCsv parse_run_csv(const std::string& text) {
  ParsedRunCsv parsed;
  std::string provenance;
  const auto lines = body_lines(text, kRunCsvHeader, &provenance);
  const auto hash_at = provenance.find("config_hash=");
  const auto seed_at = provenance.find(" seed=");
  if (hash_at == std::string::npos || seed_at == std::string::npos) throw ContractError("csv: malformed provenance");
  parsed.config_hash = provenance.substr(hash_at + 12, seed_at - hash_at - 12);
  parsed.seed = parse_integer<std::uint64_t>(provenance.substr(seed_at + 6), "seed");
  for (const auto& line : lines) {
    const auto f = split_fields(line);
    if (f.size() != 6) throw ContractError("csv: expected 6 fields in '" + line + "'");
    MetricsRecord r;
    r.step = parse_integer<std::int64_t>(f[0], "step");
    r.mean_return = parse_real(f[1]);
    r.std_return = parse_real(f[2]);
    r.estimation_error = parse_real(f[3]);
    r.alpha = parse_real(f[4]);
    r.wall_clock_s = parse_real(f[5]);
    parsed.records.push_back(std::move(r));
  }
  return parsed;
}

void attach_episodes(std::vector<MetricsRecord>& records, const std::string& episodes_text) {
  std::string provenance;
  const auto lines = body_lines(episodes_text, kEpisodeCsvHeader, &provenance);
  for (auto& r : records) r.episode_returns.clear();
  std::size_t at = 0;
  for (const auto& line : lines) {
    const auto f = split_fields(line);
    if (f.size() != 3) throw ContractError("csv: expected 3 fields in '" + line + "'");
    const auto step = parse_integer<std::int64_t>(f[0], "step");
    while (at < records.size() && records[at].step != step) ++at;
    if (at == records.size()) throw ContractError("csv: episode row for unknown step " + f[0]);
    records[at].episode_returns.push_back(parse_real(f[2]));
  }
}

std::string grid_csv(const GridSummary& summary, const std::vector<std::uint64_t>& seeds) {
  std::string out = provenance_line(summary.config_hash, join_seeds(seeds)) + "\n" + kGridCsvHeader + "\n";
  for (const auto& c : summary.cells) {
    out += format_real(c.kappa_critic) + ',' + format_real(c.kappa_actor) + ',' + std::to_string(c.runs.size()) +
           ',' + std::to_string(c.diverged_runs) + ',' + format_real(c.final_return.mean) + ',' +
           format_real(c.final_return.std) + ',' + format_real(c.estimation_error.mean) + ',' +
           format_real(c.estimation_error.std) + ',' + format_real(c.auc.mean) + ',' + format_real(c.auc.std) +
           '\n';
  }
  return out;
}

std::string grid_report(const GridSummary& summary, const GridSpec& spec) {
  std::ostringstream out;
  out << provenance_line(summary.config_hash, join_seeds(spec.seeds)) << '\n';
  out << "env " << spec.base.env << ", " << spec.base.total_steps << " steps, " << summary.cells.size()
      << " cells x " << spec.seeds.size() << " seeds\n";
  if (summary.best) {
    const auto& b = summary.cells[*summary.best];
    out << "best cell: kappa_critic=" << format_real(b.kappa_critic) << " kappa_actor=" << format_real(b.kappa_actor)
        << " final_return=" << fixed(b.final_return.mean) << " +- " << fixed(b.final_return.std) << '\n';
  } else {
    out << "best cell: none\n";
  }
  out << "\nkappa_critic kappa_actor  final_return        estimation_error    auc                 diverged\n";
  for (const auto& c : summary.cells) {
    out << std::setw(12) << format_real(c.kappa_critic) << ' ' << std::setw(11) << format_real(c.kappa_actor) << "  "
        << std::setw(18) << (fixed(c.final_return.mean) + " +- " + fixed(c.final_return.std)) << "  " << std::setw(18)
        << (fixed(c.estimation_error.mean) + " +- " + fixed(c.estimation_error.std)) << "  " << std::setw(18)
        << (fixed(c.auc.mean) + " +- " + fixed(c.auc.std)) << "  " << c.diverged_runs << '/' << c.runs.size()
        << '\n';
  }
  return out.str();
}

std::string run_report(const RunResult& result, const RunConfig& config) {
  std::ostringstream out;
  out << provenance_line(config.hash(), std::to_string(config.seed)) << '\n';
  out << "env " << config.env << ", rule_critic " << config.rule_critic.to_string() << ", rule_actor "
      << config.rule_actor.to_string() << '\n';
  out << "records " << result.records.size() << '\n';
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    out << "final step " << last.step << ": mean_return " << fixed(last.mean_return) << " +- "
        << fixed(last.std_return) << ", estimation_error " << fixed(last.estimation_error) << ", alpha "
        << format_real(last.alpha) << '\n';
  }
  if (result.records.size() >= 2) out << "auc " << fixed(area_under_curve(result.records)) << '\n';
  out << "status " << (result.diverged ? "diverged (" + result.divergence_message + ")" : std::string("ok")) << '\n';
  return out.str();
}

void emit_run(const std::filesystem::path& dir, const RunResult& result, const RunConfig& config) {
  ensure_dir(dir);
  const auto hash = config.hash();
  write_file((dir / "run.csv").string(), run_csv(result.records, hash, config.seed));
  write_file((dir / "episodes.csv").string(), episodes_csv(result.records, hash, config.seed));
  write_file((dir / "config.conf").string(), config.serialize());
  write_file((dir / "summary.txt").string(), run_report(result, config));
}

void emit_grid(const std::filesystem::path& dir, const GridSummary& summary, const GridSpec& spec) {
  ensure_dir(dir);
  write_file((dir / "grid.csv").string(), grid_csv(summary, spec.seeds));
  write_file((dir / "grid.conf").string(), spec.serialize());
  write_file((dir / "summary.txt").string(), grid_report(summary, spec));
  if (summary.cells.empty()) return;
  ensure_dir(dir / "runs");
  for (const auto& cell : summary.cells) {
    for (const auto& run : cell.runs) {
      const auto config = cell_config(spec, cell.kappa_critic, cell.kappa_actor, run.seed);
      const auto stem = cell_name(cell) + "_seed" + std::to_string(run.seed);
      write_file((dir / "runs" / (stem + ".csv")).string(), run_csv(run.result.records, config.hash(), run.seed));
    }
  }
}

}  // namespace usac::harness
