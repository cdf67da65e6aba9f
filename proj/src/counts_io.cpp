#include "mieze/counts_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "mieze/errors.hpp"

namespace mieze {

namespace {

constexpr std::string_view kOffsetHeader = "current_A,delta_mm,channel,counts";
constexpr std::string_view kDetuningHeader = "current_A,detuning_rad_per_s,channel,counts";

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double to_energy(EnergyAxis axis, double file_value) {
  return axis == EnergyAxis::offset ? file_value * 1e-3 : file_value;
}

double from_energy(EnergyAxis axis, double value) { return axis == EnergyAxis::offset ? value * 1e3 : value; }

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_counts_csv(std::ostream& out, const CountsTable& table) {
  out << (table.axis == EnergyAxis::offset ? kOffsetHeader : kDetuningHeader) << '\n';
  for (const auto& r : table.records) {
    const std::string current = format_double(r.current);
    const std::string energy = format_double(from_energy(table.axis, r.energy_value));
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      out << current << ',' << energy << ',' << i << ',' << r.counts[i] << '\n';
    }
  }
}

CountsTable read_counts_csv(std::istream& in, std::string_view source) {
  const std::string src(source);
  auto fail = [&](int line, const std::string& message) -> void {
    throw InvalidInput(src + ":" + std::to_string(line) + ": " + message);
  };

  CountsTable table;
  std::string raw;
  int line_no = 0;
  bool header = false;
  double cur_current = 0.0;
  double cur_energy = 0.0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!header) {
      if (line == kOffsetHeader) {
        table.axis = EnergyAxis::offset;
      } else if (line == kDetuningHeader) {
        table.axis = EnergyAxis::detuning;
      } else {
        fail(line_no, "expected header '" + std::string(kOffsetHeader) + "' or '" + std::string(kDetuningHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != 4) fail(line_no, "expected 4 columns, found " + std::to_string(fields.size()));
    double current = 0.0;
    double energy = 0.0;
    long channel = 0;
    unsigned long long counts = 0;
    auto parse_double = [&](std::string_view f, double& out, const char* name) {
      const std::string s(trim(f));
      char* end = nullptr;
      out = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
        fail(line_no, std::string("column '") + name + "' is not a finite number");
      }
    };
    parse_double(fields[0], current, "current_A");
    parse_double(fields[1], energy, table.axis == EnergyAxis::offset ? "delta_mm" : "detuning_rad_per_s");
    const std::string_view ch = trim(fields[2]);
    if (auto [p, ec] = std::from_chars(ch.data(), ch.data() + ch.size(), channel);
        ec != std::errc() || p != ch.data() + ch.size() || channel < 0) {
      fail(line_no, "column 'channel' must be a non-negative integer");
    }
    const std::string_view cn = trim(fields[3]);
    if (auto [p, ec] = std::from_chars(cn.data(), cn.data() + cn.size(), counts);
        ec != std::errc() || p != cn.data() + cn.size()) {
      fail(line_no, "column 'counts' must be a non-negative integer");
    }

    const bool same_point = !table.records.empty() && current == cur_current && energy == cur_energy &&
                            static_cast<std::size_t>(channel) == table.records.back().counts.size();
    if (!same_point) {
      if (channel != 0) fail(line_no, "scan point must start at channel 0");
      if (!table.records.empty()) {
        const int n = static_cast<int>(table.records.back().counts.size());
        if (table.channels == 0) table.channels = n;
        if (n != table.channels) fail(line_no, "scan points have different channel counts");
      }
      table.records.push_back({current, to_energy(table.axis, energy), {}});
      cur_current = current;
      cur_energy = energy;
    }
    table.records.back().counts.push_back(counts);
  }
  if (!header) throw InvalidInput(src + ": empty counts file");
  if (table.records.empty()) throw InvalidInput(src + ": counts file has no data rows");
  const int n = static_cast<int>(table.records.back().counts.size());
  if (table.channels == 0) table.channels = n;
  if (n != table.channels) fail(line_no, "scan points have different channel counts");
  return table;
}

nlohmann::ordered_json counts_json(const CountsTable& table) {
  nlohmann::ordered_json j;
  j["axis"] = table.axis == EnergyAxis::offset ? "offset" : "detuning";
  j["channels"] = table.channels;
  auto& points = j["points"] = nlohmann::ordered_json::array();
  const char* key = table.axis == EnergyAxis::offset ? "delta_mm" : "detuning_rad_per_s";
  for (const auto& r : table.records) {
    nlohmann::ordered_json p;
    p["current_A"] = r.current;
    p[key] = from_energy(table.axis, r.energy_value);
    p["counts"] = r.counts;
    points.push_back(std::move(p));
  }
  return j;
}

CountsTable counts_from_json(const nlohmann::json& j) {
  try {
    CountsTable t;
    const std::string axis = j.at("axis").get<std::string>();
    if (axis == "offset") {
      t.axis = EnergyAxis::offset;
    } else if (axis == "detuning") {
      t.axis = EnergyAxis::detuning;
    } else {
      throw InvalidInput("counts axis must be 'offset' or 'detuning'");
    }
    t.channels = j.at("channels").get<int>();
    const char* key = t.axis == EnergyAxis::offset ? "delta_mm" : "detuning_rad_per_s";
    for (const auto& p : j.at("points")) {
      CountsRecord r{p.at("current_A").get<double>(), to_energy(t.axis, p.at(key).get<double>()),
                     p.at("counts").get<std::vector<std::uint64_t>>()};
      if (static_cast<int>(r.counts.size()) != t.channels) throw InvalidInput("scan point channel count mismatch");
      t.records.push_back(std::move(r));
    }
    if (t.records.empty()) throw InvalidInput("counts file has no data points");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed counts JSON: ") + e.what());
  }
}

}  // namespace mieze
