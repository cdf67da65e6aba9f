#include "mieze/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mieze/errors.hpp"

namespace mieze {

namespace {

using Json = nlohmann::json;

// Line of every object key and array element, keyed by JSON pointer.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : text_(text) {
    skip_ws();
    lines_[""] = line_;
    value("");
  }

  // Line of `pointer` or of its nearest recorded ancestor.
  int line_of(std::string pointer) const {
    while (true) {
      auto it = lines_.find(pointer);
      if (it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  void value(const std::string& pointer) {
    skip_ws();
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const int key_line = line_;
        const std::string child = pointer + "/" + string();
        lines_[child] = key_line;
        skip_ws();
        ++pos_;  // ':'
        value(child);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
        const std::string child = pointer + "/" + std::to_string(i);
        skip_ws();
        lines_[child] = line_;
        value(child);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && !std::strchr(",]} \t\r\n", text_[pos_])) ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

std::string dotted(const std::string& pointer) {
  std::string out = pointer.substr(pointer.empty() ? 0 : 1);
  for (char& c : out) {
    if (c == '/') c = '.';
  }
  return out;
}

class Reader {
 public:
  Reader(const LineIndex& lines, std::string source) : lines_(lines), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ConfigurationError(source_ + ":" + std::to_string(lines_.line_of(pointer)) + ": " + message);
  }

  void allow(const Json& obj, const std::string& pointer, std::initializer_list<std::string_view> keys) const {
    if (!obj.is_object()) fail(pointer, "'" + dotted(pointer) + "' must be an object");
    std::set<std::string_view> allowed(keys);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) fail(pointer + "/" + it.key(), "unknown key '" + dotted(pointer + "/" + it.key()) + "'");
    }
  }

  const Json* find(const Json& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  const Json& require(const Json& obj, const std::string& pointer, const std::string& key) const {
    const Json* v = find(obj, key);
    if (!v) fail(pointer, "missing required field '" + dotted(pointer + "/" + key) + "'");
    return *v;
  }

  double number(const Json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "field '" + dotted(pointer) + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(pointer, "field '" + dotted(pointer) + "' must be finite");
    return x;
  }

  void number(const Json& obj, const std::string& pointer, const std::string& key, double& out,
              bool required = false) const {
    const Json* v = required ? &require(obj, pointer, key) : find(obj, key);
    if (v) out = number(*v, pointer + "/" + key);
  }

  void integer(const Json& obj, const std::string& pointer, const std::string& key, int& out) const {
    if (const Json* v = find(obj, key)) {
      if (!v->is_number_integer()) fail(pointer + "/" + key, "field '" + dotted(pointer + "/" + key) + "' must be an integer");
      out = v->get<int>();
    }
  }

  void unsigned_integer(const Json& obj, const std::string& pointer, const std::string& key,
                        std::uint64_t& out) const {
    if (const Json* v = find(obj, key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        fail(pointer + "/" + key, "field '" + dotted(pointer + "/" + key) + "' must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  std::string text(const Json& v, const std::string& pointer) const {
    if (!v.is_string()) fail(pointer, "field '" + dotted(pointer) + "' must be a string");
    return v.get<std::string>();
  }

  ValueList values(const Json& v, const std::string& pointer) const {
    ValueList out;
    if (v.is_array()) {
      if (v.empty()) fail(pointer, "field '" + dotted(pointer) + "' must not be empty");
      for (std::size_t i = 0; i < v.size(); ++i) out.values.push_back(number(v[i], pointer + "/" + std::to_string(i)));
      return out;
    }
    allow(v, pointer, {"start", "stop", "step"});
    std::array<double, 3> r{};
    r[0] = number(require(v, pointer, "start"), pointer + "/start");
    r[1] = number(require(v, pointer, "stop"), pointer + "/stop");
    r[2] = number(require(v, pointer, "step"), pointer + "/step");
    out.range = r;
    try {
      out.values = out.expand();
    } catch (const Error& e) {
      fail(pointer, "field '" + dotted(pointer) + "': " + e.what());
    }
    out.values.clear();
    return out;
  }

 private:
  const LineIndex& lines_;
  std::string source_;
};

template <typename E>
E parse_enum(const Reader& r, const Json& v, const std::string& pointer,
             std::initializer_list<std::pair<std::string_view, E>> options) {
  const std::string s = r.text(v, pointer);
  std::string names;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    names += names.empty() ? std::string(name) : ", " + std::string(name);
  }
  r.fail(pointer, "field '" + dotted(pointer) + "' must be one of: " + names);
}

BeamlineSection read_beamline(const Reader& r, const Json& obj) {
  const std::string p = "/beamline";
  r.allow(obj, p,
          {"wavelength_nm", "bandwidth_fraction", "f1_kHz", "f2_kHz", "L1_mm", "L2_mm",
           "coil_calibration_mT_mm_per_A", "guide_field_integral_mT_mm", "polarizer_efficiency", "contrast",
           "mean_level"});
  BeamlineSection b;
  r.number(obj, p, "wavelength_nm", b.wavelength_nm, true);
  r.number(obj, p, "bandwidth_fraction", b.bandwidth_fraction, true);
  r.number(obj, p, "f1_kHz", b.f1_kHz, true);
  r.number(obj, p, "f2_kHz", b.f2_kHz, true);
  r.number(obj, p, "L1_mm", b.L1_mm, true);
  if (r.find(obj, "L2_mm")) {
    double l2 = 0.0;
    r.number(obj, p, "L2_mm", l2);
    b.L2_mm = l2;
  }
  r.number(obj, p, "coil_calibration_mT_mm_per_A", b.coil_calibration_mT_mm_per_A, true);
  r.number(obj, p, "guide_field_integral_mT_mm", b.guide_field_integral_mT_mm);
  r.number(obj, p, "polarizer_efficiency", b.polarizer_efficiency);
  r.number(obj, p, "contrast", b.contrast);
  r.number(obj, p, "mean_level", b.mean_level);

  // Range checks only; infeasible focusing surfaces when the geometry is used.
  BeamlineSection probe = b;
  if (!probe.L2_mm) probe.L2_mm = 1.0;
  try {
    probe.to_config().validate();
  } catch (const Error& e) {
    r.fail(p, e.what());
  }
  return b;
}

PacketSection read_packet(const Reader& r, const Json& obj) {
  const std::string p = "/packet";
  r.allow(obj, p, {"shape", "kappa", "samples", "span_delta_k"});
  PacketSection s;
  if (const Json* v = r.find(obj, "shape")) {
    s.shape = parse_enum<PacketShape>(r, *v, p + "/shape",
                                      {{"gaussian", PacketShape::gaussian},
                                       {"triangular", PacketShape::triangular},
                                       {"rectangular", PacketShape::rectangular}});
  }
  r.number(obj, p, "kappa", s.kappa);
  int samples = static_cast<int>(s.samples);
  r.integer(obj, p, "samples", samples);
  if (samples < 0) r.fail(p + "/samples", "field 'packet.samples' must be positive");
  s.samples = static_cast<std::size_t>(samples);
  r.number(obj, p, "span_delta_k", s.span_delta_k);
  return s;
}

ScanSection read_scan(const Reader& r, const Json& obj) {
  const std::string p = "/scan";
  r.allow(obj, p,
          {"currents_A", "offsets_mm", "detunings_rad_per_s", "detuning_time_s", "channels", "counts_scale",
           "background_per_channel", "global_phase_rad", "seed"});
  ScanSection s;
  s.currents_A = r.values(r.require(obj, p, "currents_A"), p + "/currents_A");
  const Json* offsets = r.find(obj, "offsets_mm");
  const Json* detunings = r.find(obj, "detunings_rad_per_s");
  if (offsets && detunings) r.fail(p, "give either 'scan.offsets_mm' or 'scan.detunings_rad_per_s', not both");
  if (!offsets && !detunings) r.fail(p, "missing required field 'scan.offsets_mm' (or 'scan.detunings_rad_per_s')");
  if (offsets) {
    s.axis = EnergyAxis::offset;
    s.offsets_mm = r.values(*offsets, p + "/offsets_mm");
  } else {
    s.axis = EnergyAxis::detuning;
    s.detunings_rad_per_s = r.values(*detunings, p + "/detunings_rad_per_s");
    r.number(obj, p, "detuning_time_s", s.detuning_time_s, true);
  }
  if (offsets && r.find(obj, "detuning_time_s")) r.number(obj, p, "detuning_time_s", s.detuning_time_s);
  r.integer(obj, p, "channels", s.channels);
  r.number(obj, p, "counts_scale", s.counts_scale);
  r.number(obj, p, "background_per_channel", s.background_per_channel);
  r.number(obj, p, "global_phase_rad", s.global_phase_rad);
  r.unsigned_integer(obj, p, "seed", s.seed);
  try {
    s.to_plan().validate();
  } catch (const Error& e) {
    r.fail(p, e.what());
  }
  return s;
}

WitnessSection read_witness(const Reader& r, const Json& obj) {
  const std::string p = "/witness";
  r.allow(obj, p,
          {"alpha1_rad", "alpha2_rad", "gamma1_rad", "gamma2_rad", "path", "reference_channel", "phase_reference",
           "bootstrap_resamples", "bootstrap_seed"});
  WitnessSection w;
  r.number(obj, p, "alpha1_rad", w.alpha1_rad);
  r.number(obj, p, "alpha2_rad", w.alpha2_rad);
  r.number(obj, p, "gamma1_rad", w.gamma1_rad);
  r.number(obj, p, "gamma2_rad", w.gamma2_rad);
  if (const Json* v = r.find(obj, "path")) {
    w.path = parse_enum<AnalysisPath>(
        r, *v, p + "/path",
        {{"single_channel", AnalysisPath::single_channel}, {"cosine_fits", AnalysisPath::cosine_fits}});
  }
  r.integer(obj, p, "reference_channel", w.reference_channel);
  if (w.reference_channel < 0) r.fail(p + "/reference_channel", "field 'witness.reference_channel' must be >= 0");
  if (const Json* v = r.find(obj, "phase_reference")) {
    w.phase_reference = parse_enum<PhaseReference>(
        r, *v, p + "/phase_reference",
        {{"fitted", PhaseReference::fitted}, {"absolute", PhaseReference::absolute}});
  }
  r.integer(obj, p, "bootstrap_resamples", w.bootstrap_resamples);
  if (w.bootstrap_resamples != 0 && w.bootstrap_resamples < 100) {
    r.fail(p + "/bootstrap_resamples", "field 'witness.bootstrap_resamples' must be 0 or at least 100");
  }
  r.unsigned_integer(obj, p, "bootstrap_seed", w.bootstrap_seed);
  return w;
}

Json values_json(const ValueList& v) {
  if (v.range) return Json{{"start", (*v.range)[0]}, {"stop", (*v.range)[1]}, {"step", (*v.range)[2]}};
  return Json(v.values);
}

}  // namespace

std::vector<double> ValueList::expand() const {
  if (range) return inclusive_range((*range)[0], (*range)[1], (*range)[2]);
  return values;
}

BeamlineConfig BeamlineSection::to_config() const {
  BeamlineConfig c;
  c.wavelength = wavelength_nm * 1e-9;
  c.bandwidth = bandwidth_fraction;
  c.f1 = f1_kHz * 1e3;
  c.f2 = f2_kHz * 1e3;
  c.L1 = L1_mm * 1e-3;
  c.coil_cal = coil_calibration_mT_mm_per_A * 1e-6;
  c.guide_field_integral = guide_field_integral_mT_mm * 1e-6;
  c.polarizer_efficiency = polarizer_efficiency;
  c.contrast = contrast;
  c.mean_level = mean_level;
  c.L2 = L2_mm ? *L2_mm * 1e-3 : focusing_distance(c, 0.0);
  return c;
}

WavePacketSpec PacketSection::to_spec(const BeamlineConfig& cfg) const {
  WavePacketSpec s = packet_spec(cfg, shape, kappa);
  s.samples = samples;
  s.span = span_delta_k;
  return s;
}

ScanPlan ScanSection::to_plan() const {
  ScanPlan plan;
  plan.currents = currents_A.expand();
  plan.axis = axis;
  if (axis == EnergyAxis::offset) {
    for (double mm : offsets_mm.expand()) plan.energy_values.push_back(mm * 1e-3);
  } else {
    plan.energy_values = detunings_rad_per_s.expand();
  }
  plan.detuning_time = detuning_time_s;
  plan.channels = channels;
  plan.counts_scale = counts_scale;
  plan.background = background_per_channel;
  plan.global_phase = global_phase_rad;
  plan.seed = seed;
  return plan;
}

AnalysisOptions WitnessSection::to_options() const {
  AnalysisOptions o;
  o.settings = {alpha1_rad, alpha2_rad, gamma1_rad, gamma2_rad};
  o.path = path;
  o.reference_channel = reference_channel;
  o.reference = phase_reference;
  return o;
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  const std::string src(source);
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
    throw ConfigurationError(src + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  const LineIndex lines(text);
  const Reader r(lines, src);
  r.allow(root, "", {"name", "beamline", "packet", "scan", "witness", "envelope", "model", "output_dir"});

  RunConfig c;
  if (const Json* v = r.find(root, "name")) c.name = r.text(*v, "/name");
  c.beamline = read_beamline(r, r.require(root, "", "beamline"));
  if (const Json* v = r.find(root, "packet")) c.packet = read_packet(r, *v);
  if (const Json* v = r.find(root, "scan")) c.scan = read_scan(r, *v);
  if (const Json* v = r.find(root, "witness")) c.witness = read_witness(r, *v);
  if (const Json* v = r.find(root, "envelope")) {
    r.allow(*v, "/envelope", {"offsets_mm"});
    c.envelope = EnvelopeSection{r.values(r.require(*v, "/envelope", "offsets_mm"), "/envelope/offsets_mm")};
  }
  if (const Json* v = r.find(root, "model")) {
    c.model = parse_enum<IntensityModel>(
        r, *v, "/model", {{"ideal", IntensityModel::ideal}, {"wavepacket", IntensityModel::wavepacket}});
  }
  if (const Json* v = r.find(root, "output_dir")) c.output_dir = r.text(*v, "/output_dir");

  if (c.packet) {
    BeamlineSection probe = c.beamline;
    if (!probe.L2_mm) probe.L2_mm = 1.0;
    try {
      c.packet->to_spec(probe.to_config()).validate();
    } catch (const Error& e) {
      r.fail("/packet", e.what());
    }
  }
  if (c.scan && c.witness.reference_channel >= c.scan->channels) {
    r.fail("/witness/reference_channel", "field 'witness.reference_channel' must be below scan.channels");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  if (!c.name.empty()) j["name"] = c.name;
  const auto& b = c.beamline;
  auto& bj = j["beamline"];
  bj["wavelength_nm"] = b.wavelength_nm;
  bj["bandwidth_fraction"] = b.bandwidth_fraction;
  bj["f1_kHz"] = b.f1_kHz;
  bj["f2_kHz"] = b.f2_kHz;
  bj["L1_mm"] = b.L1_mm;
  if (b.L2_mm) bj["L2_mm"] = *b.L2_mm;
  bj["coil_calibration_mT_mm_per_A"] = b.coil_calibration_mT_mm_per_A;
  bj["guide_field_integral_mT_mm"] = b.guide_field_integral_mT_mm;
  bj["polarizer_efficiency"] = b.polarizer_efficiency;
  bj["contrast"] = b.contrast;
  bj["mean_level"] = b.mean_level;
  if (c.packet) {
    auto& pj = j["packet"];
    pj["shape"] = to_string(c.packet->shape);
    pj["kappa"] = c.packet->kappa;
    pj["samples"] = c.packet->samples;
    pj["span_delta_k"] = c.packet->span_delta_k;
  }
  if (c.scan) {
    const auto& s = *c.scan;
    auto& sj = j["scan"];
    sj["currents_A"] = values_json(s.currents_A);
    if (s.axis == EnergyAxis::offset) {
      sj["offsets_mm"] = values_json(s.offsets_mm);
    } else {
      sj["detunings_rad_per_s"] = values_json(s.detunings_rad_per_s);
    }
    sj["detuning_time_s"] = s.detuning_time_s;
    sj["channels"] = s.channels;
    sj["counts_scale"] = s.counts_scale;
    sj["background_per_channel"] = s.background_per_channel;
    sj["global_phase_rad"] = s.global_phase_rad;
    sj["seed"] = s.seed;
  }
  const auto& w = c.witness;
  auto& wj = j["witness"];
  wj["alpha1_rad"] = w.alpha1_rad;
  wj["alpha2_rad"] = w.alpha2_rad;
  wj["gamma1_rad"] = w.gamma1_rad;
  wj["gamma2_rad"] = w.gamma2_rad;
  wj["path"] = to_string(w.path);
  wj["reference_channel"] = w.reference_channel;
  wj["phase_reference"] = to_string(w.phase_reference);
  wj["bootstrap_resamples"] = w.bootstrap_resamples;
  wj["bootstrap_seed"] = w.bootstrap_seed;
  if (c.envelope) j["envelope"]["offsets_mm"] = values_json(c.envelope->offsets_mm);
  j["model"] = to_string(c.model);
  j["output_dir"] = c.output_dir;
  return j;
}

std::string_view to_string(PacketShape shape) {
  switch (shape) {
    case PacketShape::gaussian:
      return "gaussian";
    case PacketShape::triangular:
      return "triangular";
    case PacketShape::rectangular:
      return "rectangular";
  }
  return "gaussian";
}

std::string_view to_string(IntensityModel model) {
  return model == IntensityModel::ideal ? "ideal" : "wavepacket";
}

std::string_view to_string(EnergyAxis axis) { return axis == EnergyAxis::offset ? "offset" : "detuning"; }

std::string_view to_string(AnalysisPath path) {
  return path == AnalysisPath::single_channel ? "single_channel" : "cosine_fits";
}

std::string_view to_string(PhaseReference reference) {
  return reference == PhaseReference::fitted ? "fitted" : "absolute";
}

IntensityModel parse_model(std::string_view text) {
  if (text == "ideal") return IntensityModel::ideal;
  if (text == "wavepacket") return IntensityModel::wavepacket;
  throw InvalidInput("model must be 'ideal' or 'wavepacket'");
}

}  // namespace mieze
