#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mmot/config.hpp"
#include "mmot/presets.hpp"
#include "mmot/run.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<double> zero_tol;
  std::optional<std::uint64_t> seed;
  bool assert_mode = false;
  int threads = 0;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool needs_config) {
  auto* opt = cmd->add_option("--config", f.config, "Configuration file (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--out", f.out, "Report path (default: output.path from the config, else stdout)");
  cmd->add_option("--format", f.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--zero-tol", f.zero_tol, "Eigenvalue cutoff for signatures")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "Seed for sampled sign checks");
  cmd->add_flag("--assert", f.assert_mode, "Exit with code 2 when a check fails");
  cmd->add_option("--threads", f.threads, "Worker threads for point sweeps (0 = all cores)");
}

nlohmann::json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mmot::InputError("cannot read config '" + path + "'");
  std::stringstream text;
  text << in.rdbuf();
  try {
    return nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw mmot::ConfigError({std::string("/: ") + e.what()});
  }
}

int execute(nlohmann::json document, const Flags& f, unsigned sections) {
  if (f.zero_tol) document["zero_tol"] = *f.zero_tol;
  if (f.seed) document["checks"]["seed"] = *f.seed;
  if (f.assert_mode) document["assert"] = true;
  const auto cfg = mmot::parse_config(document);

  mmot::RunOptions options;
  options.sections = sections;
  options.threads = f.threads;
  const auto result = mmot::run(cfg, options);

  const std::string format = f.format.empty() ? cfg.output_format : f.format;
  const std::string path = f.out.empty() ? cfg.output_path : f.out;
  if (path.empty() || path == "-") {
    mmot::write_report(std::cout, result, format, sections);
  } else {
    mmot::write_report_file(path, result, format, sections);
  }
  for (const auto& c : result.checks) {
    if (!c.passed) std::cerr << "check failed: " << c.name << '\n';
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signatures, dimension bounds and discrete solves for multi-marginal transport costs"};
  app.require_subcommand(1);
  Flags f;

  auto* analyze = app.add_subcommand("analyze", "Metric signatures, dimension bounds and structural checks per point");
  add_run_flags(analyze, f, true);
  auto* solve = app.add_subcommand("solve", "Discrete Kantorovich solve with certificate and support diagnostics");
  add_run_flags(solve, f, true);
  auto* check = app.add_subcommand("check", "c-monotonicity, sign compatibility and projection checks");
  add_run_flags(check, f, true);

  auto* presets = app.add_subcommand("presets", "Shipped worked examples");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "List preset names");
  std::string name;
  auto* show = presets->add_subcommand("show", "Print a preset's configuration");
  show->add_option("name", name, "Preset name")->required();
  auto* run_preset = presets->add_subcommand("run", "Run a preset (all sections)");
  run_preset->add_option("name", name, "Preset name")->required();
  add_run_flags(run_preset, f, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return execute(load_document(f.config), f, mmot::analyze);
    if (solve->parsed()) return execute(load_document(f.config), f, mmot::solve);
    if (check->parsed()) return execute(load_document(f.config), f, mmot::check);
    if (list->parsed()) {
      for (const auto& p : mmot::presets()) std::cout << p.name << "  " << p.description << '\n';
      return 0;
    }
    if (show->parsed()) {
      std::cout << mmot::find_preset(name).config.dump(2) << '\n';
      return 0;
    }
    if (run_preset->parsed()) return execute(mmot::find_preset(name).config, f, mmot::all_sections);
  } catch (const mmot::ConfigError& e) {
    for (const auto& err : e.errors()) std::cerr << "config error: " << err << '\n';
    return 1;
  } catch (const mmot::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    for (const auto& line : e.trace()) std::cerr << "  " << line << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
