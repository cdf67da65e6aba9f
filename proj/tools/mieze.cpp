#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mieze/commands.hpp"
#include "mieze/run_config.hpp"

namespace {

void add_common(CLI::App* cmd, mieze::CommandOptions& o, std::string& format) {
  cmd->add_option("--out", o.out, "Output directory (default: config output_dir)");
  cmd->add_option("--format", format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIEZE spin-energy entanglement: simulation, analysis and CHSH witness"};
  app.set_version_flag("--version", std::string(mieze::kToolVersion));
  app.require_subcommand(1);

  mieze::CommandOptions o;
  std::string format = "csv";
  std::string model;

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic Poisson counts for a scan");
  simulate->add_option("--config", o.config, "Run config (JSON)")->required();
  simulate->add_option("--seed", o.seed, "Override scan.seed");
  simulate->add_option("--model", model, "Intensity model")->check(CLI::IsMember({"ideal", "wavepacket"}));
  add_common(simulate, o, format);

  auto* witness = app.add_subcommand("witness", "Fit counts and evaluate the CHSH witness");
  witness->add_option("--counts", o.counts, "Counts file (CSV or JSON)")->required();
  witness->add_option("--config", o.config, "Run config (default: the counts metadata sidecar)");
  witness->add_option("--seed", o.seed, "Seed recorded in the report");
  add_common(witness, o, format);

  auto* envelope = app.add_subcommand("envelope", "Wave-packet contrast versus detector offset");
  envelope->add_option("--config", o.config, "Run config (JSON)")->required();
  add_common(envelope, o, format);

  auto* focus = app.add_subcommand("focus", "Focusing distance and sensitivities");
  focus->add_option("--config", o.config, "Run config (JSON)")->required();
  focus->add_option("--field-integral-mT-mm", o.field_integral_mT_mm,
                    "Coil field integral (default: beamline guide field integral)");
  focus->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mieze::kExitOk : mieze::kExitInput;
  }

  o.format = format == "json" ? mieze::OutputFormat::json : mieze::OutputFormat::csv;
  if (!model.empty()) o.model = mieze::parse_model(model);
  const std::string name = app.get_subcommands().front()->get_name();
  return mieze::run_command(name, o, std::cout, std::cerr);
}
