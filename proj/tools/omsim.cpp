// Scenario runner: budget / cool / scan / fit / synth over a config file.
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "optomech/optomech.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string grid;
};

std::optional<optomech::FrequencyGrid> parse_grid_arg(const std::string& text) {
  if (text.empty()) return {};
  auto parts = optomech::detail::split_list(text);
  if (parts.size() != 4)
    throw optomech::ConfigError("--grid wants f_min,f_max,n,log|lin, got '" + text + "'");
  optomech::FrequencyGrid g;
  g.f_min_hz = std::stod(parts[0]);
  g.f_max_hz = std::stod(parts[1]);
  g.n_points = static_cast<std::size_t>(std::stoull(parts[2]));
  if (parts[3] == "log")
    g.spacing = optomech::FrequencyGrid::Spacing::logarithmic;
  else if (parts[3] == "lin")
    g.spacing = optomech::FrequencyGrid::Spacing::linear;
  else
    throw optomech::ConfigError("--grid spacing must be 'log' or 'lin', got '" + parts[3] + "'");
  g.validate();
  return g;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "scenario config file")->required();
  cmd->add_option("--out", args.out, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the scenario seed");
  cmd->add_option("--grid", args.grid, "override the frequency grid: f_min,f_max,n,log|lin");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optomechanical displacement sensor toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* names[] = {"budget", "cool", "scan", "fit", "synth"};
  const char* briefs[] = {"compose the displacement noise budget",
                          "sweep cold-damping feedback gains",
                          "scan spot position across the mode shape",
                          "synthesize a record and fit the fundamental peak",
                          "synthesize a time record and its Welch spectrum"};
  for (int i = 0; i < 5; ++i) add_common(app.add_subcommand(names[i], briefs[i]), args);

  CLI11_PARSE(app, argc, argv);

  try {
    auto* sub = app.get_subcommands().front();
    auto command = optomech::parse_command(sub->get_name());
    auto scenario = optomech::load_scenario(args.config);
    auto grid = parse_grid_arg(args.grid);
    auto result = optomech::run_command(scenario, command, args.out, grid, args.seed);
    for (const auto& name : result.files) std::printf("%s/%s\n", result.out_dir.c_str(), name.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
