#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mieze/synth.hpp"

namespace mieze {

// Scan counts with the axis needed to interpret energy_value (m or rad/s).
struct CountsTable {
  EnergyAxis axis = EnergyAxis::offset;
  int channels = 0;
  std::vector<CountsRecord> records;
};

// printf %.17g.
std::string format_double(double x);

// Columns: current_A, delta_mm | detuning_rad_per_s, channel, counts.
void write_counts_csv(std::ostream& out, const CountsTable& table);

// Rows of one scan point must be consecutive with channels 0..n-1. Throws
// InvalidInput with "<source>:<line>: ..." on schema errors or when there is
// no data.
CountsTable read_counts_csv(std::istream& in, std::string_view source = "<counts>");

nlohmann::ordered_json counts_json(const CountsTable& table);
CountsTable counts_from_json(const nlohmann::json& j);

}  // namespace mieze
