#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "mieze/synth.hpp"

namespace mieze {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitInfeasible = 3,
  kExitFit = 4,
};

enum class OutputFormat { csv, json };

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path counts;  // witness input
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<IntensityModel> model;
  OutputFormat format = OutputFormat::csv;
  std::optional<double> field_integral_mT_mm;  // focus
};

// Each command writes its files and prints a short summary to `out`. Errors
// propagate as exceptions; run_command maps them to exit codes.
void cmd_simulate(const CommandOptions& options, std::ostream& out);
void cmd_witness(const CommandOptions& options, std::ostream& out);
void cmd_envelope(const CommandOptions& options, std::ostream& out);
void cmd_focus(const CommandOptions& options, std::ostream& out);

int exit_code(const std::exception& e) noexcept;

// Dispatch by name, printing "error: ..." to `err` on failure.
int run_command(std::string_view name, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace mieze
