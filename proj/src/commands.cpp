#include "mieze/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "mieze/constants.hpp"
#include "mieze/counts_io.hpp"
#include "mieze/errors.hpp"
#include "mieze/random.hpp"
#include "mieze/run_config.hpp"
#include "mieze/wavepacket.hpp"
#include "mieze/witness.hpp"

namespace mieze {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

RunConfig load(const CommandOptions& o) {
  if (o.config.empty()) throw InvalidInput("--config is required");
  return load_run_config(o.config);
}

fs::path output_dir(const CommandOptions& o, const RunConfig& c) {
  fs::path dir = o.out ? *o.out : fs::path(c.output_dir);
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
  return f;
}

void write_json(const fs::path& path, const OJson& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

OJson grid_json(const Grid2& g) { return OJson{{g[0][0], g[0][1]}, {g[1][0], g[1][1]}}; }

OJson witness_json(const WitnessResult& w) {
  OJson j;
  j["S"] = w.S;
  j["sigma_S"] = w.sigma_S;
  j["classification"] = to_string(w.classification);
  j["E_matrix"] = grid_json(w.E);
  j["sigma_E"] = grid_json(w.sigma_E);
  return j;
}

OJson matrix_json(const Eigen::Matrix3d& m) {
  OJson j = OJson::array();
  for (int i = 0; i < 3; ++i) j.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return j;
}

CountsTable read_counts(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open counts file '" + path.string() + "'");
  if (path.extension() == ".json") {
    try {
      return counts_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(path.string() + ": JSON syntax error: " + e.what());
    }
  }
  return read_counts_csv(in, path.string());
}

fs::path sidecar_for(const fs::path& counts) {
  fs::path p = counts;
  p.replace_extension(".meta.json");
  return p;
}

// Config for a counts file: --config, else the echo in the metadata sidecar.
RunConfig config_for_counts(const CommandOptions& o) {
  if (!o.config.empty()) return load(o);
  const fs::path meta = sidecar_for(o.counts);
  std::ifstream in(meta);
  if (!in) throw InvalidInput("no --config given and no metadata sidecar '" + meta.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(meta.string() + ": JSON syntax error: " + e.what());
  }
  if (!j.contains("config")) throw InvalidInput(meta.string() + ": missing 'config' echo");
  return parse_run_config(j["config"].dump(2), meta.string() + "#config");
}

std::vector<double> default_envelope_offsets_mm() { return inclusive_range(-35.0, 35.0, 5.0); }

}  // namespace

void cmd_simulate(const CommandOptions& o, std::ostream& out) {
  RunConfig c = load(o);
  if (!c.scan) throw ConfigurationError(o.config.string() + ": missing required field 'scan'");
  if (o.seed) c.scan->seed = *o.seed;
  if (o.model) c.model = *o.model;
  const BeamlineConfig cfg = c.beamline.to_config();
  const ScanPlan plan = c.scan->to_plan();
  std::optional<WavePacketSpec> packet;
  if (c.model == IntensityModel::wavepacket) {
    if (!c.packet) throw ConfigurationError(o.config.string() + ": wavepacket model needs a 'packet' section");
    packet = c.packet->to_spec(cfg);
  }
  const CountsTable table{plan.axis, plan.channels, simulate_scan(cfg, plan, c.model, packet)};

  const fs::path dir = output_dir(o, c);
  const fs::path data = dir / (o.format == OutputFormat::json ? "counts.json" : "counts.csv");
  {
    auto f = open_out(data);
    if (o.format == OutputFormat::json) {
      f << counts_json(table).dump(2) << '\n';
    } else {
      write_counts_csv(f, table);
    }
  }
  OJson meta;
  meta["tool"] = "mieze";
  meta["tool_version"] = kToolVersion;
  meta["generator"] = "philox4x64-10 v" + std::to_string(Philox4x64::kVersion) + ", poisson numpy-compatible";
  meta["seed"] = plan.seed;
  meta["channels"] = plan.channels;
  meta["points"] = table.records.size();
  meta["model"] = to_string(c.model);
  meta["axis"] = to_string(plan.axis);
  meta["mieze_frequency_rad_per_s"] = mieze_frequency(cfg);
  meta["config"] = to_json(c);
  write_json(sidecar_for(data), meta);

  out << "wrote " << table.records.size() << " scan points x " << plan.channels << " channels to "
      << data.string() << " (seed " << plan.seed << ", model " << to_string(c.model) << ")\n";
}

void cmd_witness(const CommandOptions& o, std::ostream& out) {
  if (o.counts.empty()) throw InvalidInput("--counts is required");
  const CountsTable table = read_counts(o.counts);
  RunConfig c = config_for_counts(o);
  ScanSection scan = c.scan ? *c.scan : ScanSection{};
  if (o.seed) scan.seed = *o.seed;
  const BeamlineConfig cfg = c.beamline.to_config();
  ScanPlan plan;
  plan.axis = table.axis;
  plan.channels = table.channels;
  plan.counts_scale = scan.counts_scale;
  plan.detuning_time = scan.detuning_time_s;
  if (plan.axis == EnergyAxis::detuning && !(plan.detuning_time > 0.0)) {
    throw ConfigurationError("detuning counts need scan.detuning_time_s in the config");
  }
  const AnalysisOptions options = c.witness.to_options();
  if (options.reference_channel >= plan.channels) {
    throw InvalidInput("reference channel " + std::to_string(options.reference_channel) + " exceeds the " +
                       std::to_string(plan.channels) + " channels in the counts file");
  }
  const WitnessAnalysis a = analyze_scan(cfg, plan, table.records, options);

  OJson report = witness_json(a.witness);
  report["contrast"] = a.global_fit.contrast;
  report["sigma_contrast"] = a.global_fit.contrast_sigma();
  report["expected_S_from_contrast"] = kTsirelson * a.global_fit.contrast;
  auto& diag = report["fit_diagnostics"];
  diag["A"] = a.global_fit.A;
  diag["B"] = a.global_fit.B;
  diag["phi0_rad"] = a.global_fit.phi;
  diag["chi_square"] = a.global_fit.chi_square;
  diag["dof"] = a.global_fit.dof;
  diag["iterations"] = a.global_fit.iterations;
  diag["covariance_A_B_phi"] = matrix_json(a.global_fit.covariance);
  diag["covariance_a_b_c"] = matrix_json(a.global_fit.linear_covariance);
  diag["phase_coverage_rad"] = phase_coverage(a.points);
  diag["points"] = a.points.size();
  diag["path"] = to_string(options.path);
  diag["reference_channel"] = options.reference_channel;
  diag["phase_reference"] = to_string(options.reference);
  report["count_witness"] = witness_json(a.count_witness.result);
  if (c.witness.bootstrap_resamples > 0) {
    const BootstrapResult b = bootstrap_uncertainty(cfg, plan, table.records, options, c.witness.bootstrap_resamples,
                                                    c.witness.bootstrap_seed);
    report["bootstrap"] = {{"sigma_S", b.sigma_S}, {"mean_S", b.mean_S}, {"resamples", b.resamples},
                           {"failures", b.failures}, {"seed", c.witness.bootstrap_seed}};
  }
  report["settings_rad"] = {{"alpha1", options.settings.alpha1}, {"alpha2", options.settings.alpha2},
                            {"gamma1", options.settings.gamma1}, {"gamma2", options.settings.gamma2}};
  report["tool_version"] = kToolVersion;
  report["seed"] = scan.seed;
  report["counts_file"] = o.counts.string();
  report["config"] = to_json(c);

  const fs::path dir = output_dir(o, c);
  write_json(dir / "witness.json", report);
  if (o.format == OutputFormat::json) {
    OJson pts = OJson::array();
    for (const auto& p : a.points) {
      pts.push_back({{"phase_rad", p.x}, {"intensity", p.y}, {"intensity_err", p.sigma}, {"model", a.global_fit(p.x)}});
    }
    write_json(dir / "fitted_points.json", pts);
  } else {
    auto f = open_out(dir / "fitted_points.csv");
    f << "phase_rad,intensity,intensity_err,model\n";
    for (const auto& p : a.points) {
      f << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.sigma) << ','
        << format_double(a.global_fit(p.x)) << '\n';
    }
  }
  out << "S = " << format_double(a.witness.S) << " +- " << format_double(a.witness.sigma_S) << " ("
      << to_string(a.witness.classification) << "), contrast " << format_double(a.global_fit.contrast) << '\n';
}

void cmd_envelope(const CommandOptions& o, std::ostream& out) {
  const RunConfig c = load(o);
  if (!c.packet) throw ConfigurationError(o.config.string() + ": missing required field 'packet'");
  const BeamlineConfig cfg = c.beamline.to_config();
  const WavePacketSpec spec = c.packet->to_spec(cfg);
  const std::vector<double> mm = c.envelope ? c.envelope->offsets_mm.expand() : default_envelope_offsets_mm();
  std::vector<double> deltas;
  deltas.reserve(mm.size());
  for (double d : mm) deltas.push_back(d * 1e-3);
  const auto env = contrast_envelope(cfg, spec, deltas);

  const fs::path dir = output_dir(o, c);
  if (o.format == OutputFormat::json) {
    OJson j = OJson::array();
    for (const auto& p : env) j.push_back({{"delta_m", p.delta}, {"contrast", p.contrast}});
    write_json(dir / "envelope.json", j);
  } else {
    auto f = open_out(dir / "envelope.csv");
    f << "delta_m,contrast\n";
    for (const auto& p : env) f << format_double(p.delta) << ',' << format_double(p.contrast) << '\n';
  }
  double lo = 1.0;
  for (const auto& p : env) lo = std::min(lo, p.contrast);
  out << "envelope: " << env.size() << " offsets, minimum contrast " << format_double(lo) << '\n';
}

void cmd_focus(const CommandOptions& o, std::ostream& out) {
  const RunConfig c = load(o);
  BeamlineSection b = c.beamline;
  b.L2_mm = 1.0;
  const BeamlineConfig cfg = b.to_config();
  const double bl_mT_mm = o.field_integral_mT_mm ? *o.field_integral_mT_mm : b.guide_field_integral_mT_mm;
  const double bl = bl_mT_mm * 1e-6;
  const double l2 = focusing_distance(cfg, bl);
  const double l2_zero = focusing_distance(cfg, 0.0);
  const double dw = cfg.omega2() - cfg.omega1();
  const double gamma = cfg.constants.gyromagnetic;

  OJson j;
  j["L2_mm"] = l2 * 1e3;
  j["detector_from_rf1_mm"] = (cfg.L1 + l2) * 1e3;
  j["field_integral_mT_mm"] = bl_mT_mm;
  j["shift_from_zero_field_mm"] = (l2 - l2_zero) * 1e3;
  j["mieze_frequency_Hz"] = mieze_frequency(cfg) / kTwoPi;
  j["dL2_dL1"] = cfg.omega1() / dw;
  j["dL2_df1_mm_per_Hz"] = kTwoPi * (cfg.L1 + l2) / dw * 1e3;
  j["dL2_df2_mm_per_Hz"] = -kTwoPi * l2 / dw * 1e3;
  j["dL2_dBL_mm_per_mT_mm"] = -gamma / (2.0 * dw) * 1e-6 * 1e3;
  j["dL2_dwavelength"] = 0.0;
  if (c.beamline.L2_mm) j["configured_L2_mm"] = *c.beamline.L2_mm;

  if (o.format == OutputFormat::json) {
    out << j.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : j.items()) out << key << " = " << format_double(value.get<double>()) << '\n';
}

int exit_code(const std::exception& e) noexcept {
  if (dynamic_cast<const InfeasibleGeometry*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const FitError*>(&e) || dynamic_cast<const DegenerateData*>(&e)) return kExitFit;
  if (dynamic_cast<const ConfigurationError*>(&e) || dynamic_cast<const InvalidInput*>(&e) ||
      dynamic_cast<const ResolutionError*>(&e)) {
    return kExitInput;
  }
  return kExitInternal;
}

int run_command(std::string_view name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (name == "simulate") {
      cmd_simulate(options, out);
    } else if (name == "witness") {
      cmd_witness(options, out);
    } else if (name == "envelope") {
      cmd_envelope(options, out);
    } else if (name == "focus") {
      cmd_focus(options, out);
    } else {
      err << "error: unknown command '" << name << "'\n";
      return kExitInput;
    }
  } catch (const FitError& e) {
    err << "error: " << e.what();
    if (!e.diagnostics().empty()) err << " [" << e.diagnostics() << "]";
    err << '\n';
    return kExitFit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kExitOk;
}

}  // namespace mieze
