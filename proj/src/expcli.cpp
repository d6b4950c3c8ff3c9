#include "nvsim/expcli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "nvsim/effective.hpp"
#include "nvsim/error.hpp"
#include "nvsim/sequence.hpp"

namespace nvsim::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"xx-gate", "zz-echo", "bell", "fid", "rwa-check", "noise-sweep"};
  return names;
}

namespace {

bool is_preset(const std::string& s) {
  const auto& n = preset_names();
  return std::find(n.begin(), n.end(), s) != n.end();
}

// ---------------------------------------------------------------- strict reader

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& dst) {
    if (!take(key)) return;
    dst = as_number(j_.at(key), key);
  }

  void optional_number(const std::string& key, std::optional<double>& dst) {
    if (!take(key)) return;
    if (j_.at(key).is_null()) {
      dst.reset();
    } else {
      dst = as_number(j_.at(key), key);
    }
  }

  void count(const std::string& key, std::size_t& dst) {
    if (!take(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(at(key) + " must be a non-negative integer");
    }
    dst = v.get<std::size_t>();
  }

  void integer(const std::string& key, int& dst) {
    if (!take(key)) return;
    if (!j_.at(key).is_number_integer()) throw ConfigError(at(key) + " must be an integer");
    dst = j_.at(key).get<int>();
  }

  void seed(const std::string& key, std::optional<std::uint64_t>& dst) {
    if (!take(key)) return;
    const Json& v = j_.at(key);
    if (v.is_null()) {
      dst.reset();
      return;
    }
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(at(key) + " must be a non-negative integer");
    }
    dst = v.get<std::uint64_t>();
  }

  void boolean(const std::string& key, bool& dst) {
    if (!take(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(at(key) + " must be true or false");
    dst = j_.at(key).get<bool>();
  }

  void string(const std::string& key, std::string& dst) {
    if (!take(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(at(key) + " must be a string");
    dst = j_.at(key).get<std::string>();
  }

  void strings(const std::string& key, std::vector<std::string>& dst) {
    if (!take(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key) + " must be an array of strings");
    dst.clear();
    for (const Json& e : v) {
      if (!e.is_string()) throw ConfigError(at(key) + " must be an array of strings");
      dst.push_back(e.get<std::string>());
    }
  }

  void numbers(const std::string& key, std::vector<double>& dst) {
    if (!take(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key) + " must be an array of numbers");
    dst.clear();
    for (const Json& e : v) dst.push_back(as_number(e, key));
  }

  Reader child(const std::string& key) {
    take(key);
    return Reader(j_.at(key), at(key));
  }

  // Rejects every key that was not consumed.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + at(it.key()));
    }
  }

 private:
  bool take(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }
  std::string where() const { return path_.empty() ? "configuration" : path_; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  double as_number(const Json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(at(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key) + " must be finite");
    return x;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void check_options(const ExperimentConfig& c) {
  if (!is_preset(c.experiment)) throw ConfigError("unknown experiment \"" + c.experiment + "\"");
  for (const std::string& f : c.options.frames) {
    const Frame fr = frame_from_string(f);
    bool ok = false;
    if (c.experiment == "xx-gate") ok = fr == Frame::full_static || fr == Frame::effective_xx9;
    if (c.experiment == "zz-echo" || c.experiment == "bell") ok = fr == Frame::two_level16 || fr == Frame::effective_zz4;
    if (c.experiment == "fid") ok = fr == Frame::single2;
    if (c.experiment == "rwa-check") ok = fr == Frame::interaction_picture || fr == Frame::rwa81;
    if (c.experiment == "noise-sweep") ok = fr == Frame::two_level16;
    if (!ok) throw ConfigError("options.frames: frame \"" + f + "\" is not available for " + c.experiment);
  }
  pulse_axis_from_string(c.options.echo_axis);
  if (c.noise.b < 0.0) throw ConfigError("noise.b must be non-negative");
  if (!(c.noise.tau > 0.0)) throw ConfigError("noise.tau must be positive");
  if (c.noise.nuclear_ratio < 0.0) throw ConfigError("noise.nuclear_ratio must be non-negative");
  if (c.noise.noise_dt < 0.0) throw ConfigError("noise.noise_dt must be non-negative");
  if (c.options.t_final < 0.0) throw ConfigError("options.t_final must be non-negative");
  if (c.options.dt < 0.0) throw ConfigError("options.dt must be non-negative");
  for (double b : c.options.b_list)
    if (b < 0.0) throw ConfigError("options.b_list entries must be non-negative");
  if (c.workers < 0) throw ConfigError("workers must be non-negative");
  validate(c.model);
  validate(c.drive);
}

}  // namespace

ExperimentConfig default_config(const std::string& preset) {
  if (!is_preset(preset)) throw ConfigError("unknown experiment \"" + preset + "\"");
  ExperimentConfig c;
  c.experiment = preset;
  PresetOptions& o = c.options;
  if (preset == "xx-gate") {
    c.model.b_field = 0.0;
    o.frames = {"full-static", "effective-xx-9"};
    o.samples = 400;
  } else if (preset == "zz-echo") {
    o.frames = {"two-level-16", "effective-zz-4"};
    o.points = 200;
    o.n_traj = 200;
  } else if (preset == "bell") {
    o.frames = {"two-level-16", "effective-zz-4"};
    o.points = 200;
    o.echo_axis = "y";
  } else if (preset == "fid") {
    o.frames = {"single-2"};
    c.noise.b = 1e3;
    o.n_traj = 5000;
    o.t_final = 4e-3;
    o.samples = 400;
  } else if (preset == "rwa-check") {
    o.frames = {"interaction-picture-exact", "rwa-81"};
    o.dt = 1e-10;
    o.samples = 200;
  } else if (preset == "noise-sweep") {
    o.frames = {"two-level-16"};
    o.b_list = {5e3, 15e3, 25e3, 35e3, 50e3, 55e3};
    o.n_traj = 200;
  }
  c.drive = DriveParams::resonant(c.model);
  return c;
}

ExperimentConfig parse_config(const Json& root) {
  const Json* src = &root;
  if (root.is_object() && root.contains("artifact") && root.contains("config")) src = &root.at("config");
  Reader top(*src, "");
  std::string experiment = "zz-echo";
  top.string("experiment", experiment);
  ExperimentConfig c = default_config(experiment);

  top.seed("seed", c.seed);
  top.integer("workers", c.workers);
  top.string("output_dir", c.output_dir);
  top.boolean("two_pi", c.two_pi);

  if (top.has("model")) {
    Reader m = top.child("model");
    NVPairParams& p = c.model;
    m.number("d1", p.d1);
    m.number("d2", p.d2);
    m.number("p1", p.p1);
    m.number("p2", p.p2);
    m.number("a_par1", p.a_par1);
    m.number("a_par2", p.a_par2);
    m.number("a_perp1", p.a_perp1);
    m.number("a_perp2", p.a_perp2);
    m.optional_number("j12", p.j12);
    m.optional_number("r12", p.r12);
    m.optional_number("theta12", p.theta12);
    m.number("ge_mub", p.ge_mub);
    m.number("gn_mun", p.gn_mun);
    m.number("b_field", p.b_field);
    m.number("theta1", p.theta1);
    m.number("theta2", p.theta2);
    m.number("phi1", p.phi1);
    m.number("phi2", p.phi2);
    m.finish();
  }

  // Carriers default to resonance with the (possibly overridden) model.
  const DriveParams resonant = DriveParams::resonant(c.model);
  c.drive.carrier_e1 = resonant.carrier_e1;
  c.drive.carrier_e2 = resonant.carrier_e2;
  c.drive.carrier_n1 = resonant.carrier_n1;
  c.drive.carrier_n2 = resonant.carrier_n2;
  if (top.has("drive")) {
    Reader d = top.child("drive");
    d.number("omega_rabi_e", c.drive.omega_rabi_e);
    d.number("omega_rabi_n", c.drive.omega_rabi_n);
    d.number("carrier_e1", c.drive.carrier_e1);
    d.number("carrier_e2", c.drive.carrier_e2);
    d.number("carrier_n1", c.drive.carrier_n1);
    d.number("carrier_n2", c.drive.carrier_n2);
    d.finish();
  }

  if (top.has("noise")) {
    Reader n = top.child("noise");
    n.number("b", c.noise.b);
    n.number("tau", c.noise.tau);
    n.number("nuclear_ratio", c.noise.nuclear_ratio);
    n.number("noise_dt", c.noise.noise_dt);
    n.finish();
  }

  if (top.has("options")) {
    Reader o = top.child("options");
    PresetOptions& po = c.options;
    o.strings("frames", po.frames);
    o.number("t_final", po.t_final);
    o.number("dt", po.dt);
    o.count("n_traj", po.n_traj);
    o.numbers("b_list", po.b_list);
    o.string("echo_axis", po.echo_axis);
    o.count("points", po.points);
    o.count("samples", po.samples);
    o.boolean("order_check", po.order_check);
    o.finish();
  }
  top.finish();
  check_options(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open configuration file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  j["two_pi"] = c.two_pi;
  const NVPairParams& p = c.model;
  j["model"] = {{"d1", p.d1},
                {"d2", p.d2},
                {"p1", p.p1},
                {"p2", p.p2},
                {"a_par1", p.a_par1},
                {"a_par2", p.a_par2},
                {"a_perp1", p.a_perp1},
                {"a_perp2", p.a_perp2},
                {"j12", optional_json(p.j12)},
                {"r12", optional_json(p.r12)},
                {"theta12", optional_json(p.theta12)},
                {"ge_mub", p.ge_mub},
                {"gn_mun", p.gn_mun},
                {"b_field", p.b_field},
                {"theta1", p.theta1},
                {"theta2", p.theta2},
                {"phi1", p.phi1},
                {"phi2", p.phi2}};
  const DriveParams& d = c.drive;
  j["drive"] = {{"omega_rabi_e", d.omega_rabi_e}, {"omega_rabi_n", d.omega_rabi_n},
                {"carrier_e1", d.carrier_e1},     {"carrier_e2", d.carrier_e2},
                {"carrier_n1", d.carrier_n1},     {"carrier_n2", d.carrier_n2}};
  j["noise"] = {{"b", c.noise.b}, {"tau", c.noise.tau}, {"nuclear_ratio", c.noise.nuclear_ratio},
                {"noise_dt", c.noise.noise_dt}};
  const PresetOptions& o = c.options;
  j["options"] = {{"frames", o.frames},   {"t_final", o.t_final},     {"dt", o.dt},
                  {"n_traj", o.n_traj},   {"b_list", o.b_list},       {"echo_axis", o.echo_axis},
                  {"points", o.points},   {"samples", o.samples},     {"order_check", o.order_check}};
  return j;
}

NVPairParams effective_model(const ExperimentConfig& c) {
  return c.two_pi ? scale_frequencies(c.model, 2.0 * std::numbers::pi) : c.model;
}

DriveParams effective_drive(const ExperimentConfig& c) {
  return c.two_pi ? scale_frequencies(c.drive, 2.0 * std::numbers::pi) : c.drive;
}

namespace {

double frequency_scale(const ExperimentConfig& c) { return c.two_pi ? 2.0 * std::numbers::pi : 1.0; }

std::vector<double> sweep_b_values(const ExperimentConfig& c) {
  std::vector<double> b = c.options.b_list;
  for (double& x : b) x *= frequency_scale(c);
  return b;
}

}  // namespace

Json derived_quantities(const ExperimentConfig& c) {
  const NVPairParams p = effective_model(c);
  const DriveParams d = effective_drive(c);
  Json out;
  Json notes = Json::array();
  std::optional<double> jxx;
  try {
    jxx = jeff_xx(p);
    out["jeff_xx"] = *jxx;
    out["t_xx_transfer"] = xx_transfer_time(p);
    out["t_xx_period"] = xx_exchange_period(p);
  } catch (const NumericalError& e) {
    out["jeff_xx"] = nullptr;
    notes.push_back(e.what());
  }
  try {
    const IsingCoupling z = jeff_zz(p, d);
    out["jeff_zz"] = z.value;
    out["xi"] = z.structure.xi;
    out["j_xi"] = z.structure.j_xi;
    out["omega_es"] = z.structure.omega_es;
    out["omega_ea"] = z.structure.omega_ea;
    out["t_f"] = zz_gate_time(p, d);
    out["t_zz"] = zz_half_time(p, d);
    if (jxx && *jxx != 0.0) out["zz_over_xx"] = std::abs(z.value / *jxx);
    for (const std::string& w : z.warnings) notes.push_back(w);
  } catch (const NumericalError& e) {
    out["jeff_zz"] = nullptr;
    notes.push_back(e.what());
  }
  Json t2e = Json::array();
  std::vector<double> bs = c.experiment == "noise-sweep" ? sweep_b_values(c) : std::vector<double>{};
  if (bs.empty() && c.noise.b > 0.0) bs.push_back(c.noise.b * frequency_scale(c));
  for (double b : bs) t2e.push_back(b > 0.0 ? Json(1.0 / b) : Json(nullptr));
  out["t2e"] = t2e;
  Json ratios;
  for (const RwaRatio& r : rwa_ratios(p, d)) ratios[r.name] = r.value;
  out["rwa_ratios"] = ratios;
  out["rwa_ratio_limit"] = kRwaRatioLimit;
  for (const std::string& w : validate(p)) notes.push_back(w);
  for (const std::string& w : validate(d)) notes.push_back(w);
  out["notes"] = notes;
  return out;
}

// ---------------------------------------------------------------- tables and files

void SeriesTable::append(const ObservableSeries& s, const std::string& tag) {
  if (names.empty() && times.empty()) times = s.times;
  if (s.times.size() != times.size()) throw DimensionError("series table: time grids differ");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(s.times[k] - times[k]) > 1e-12 * std::max(1.0, std::abs(times[k]))) {
      throw DimensionError("series table: time grids differ");
    }
  }
  for (std::size_t j = 0; j < s.names.size(); ++j) {
    names.push_back(tag.empty() ? s.names[j] : s.names[j] + "@" + tag);
    mean.push_back(s.mean[j]);
    stderr_.push_back(s.stderr_[j]);
  }
}

namespace {

std::ostream& prepare_stream(std::ostream& out) {
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_series_csv(const SeriesTable& t, std::ostream& out) {
  prepare_stream(out);
  out << "t_s";
  for (const std::string& n : t.names) out << ',' << n << "_mean," << n << "_stderr";
  out << '\n';
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    out << t.times[k];
    for (std::size_t j = 0; j < t.names.size(); ++j) out << ',' << t.mean[j][k] << ',' << t.stderr_[j][k];
    out << '\n';
  }
}

void write_sweep_csv(const std::vector<double>& b, const std::vector<double>& t2e, const std::vector<double>& c_mean,
                     const std::vector<double>& c_se, std::ostream& out) {
  prepare_stream(out);
  out << "b_rad_s,T2e_s,contrast_mean,contrast_stderr\n";
  for (std::size_t i = 0; i < b.size(); ++i) out << b[i] << ',' << t2e[i] << ',' << c_mean[i] << ',' << c_se[i] << '\n';
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoError("sha256: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("sha256: digest computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << bytes;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  const fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + p.string());
  return p;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct OutputFile {
  std::string name;
  std::string bytes;
};

void write_outputs(const ExperimentConfig& c, const std::string& command, const Json& results,
                   const std::vector<OutputFile>& files, std::ostream& log) {
  const fs::path dir = ensure_dir(c.output_dir);
  Json listing = Json::array();
  for (const OutputFile& f : files) {
    write_file(dir / f.name, f.bytes);
    listing.push_back({{"name", f.name}, {"sha256", sha256_hex(f.bytes)}, {"bytes", f.bytes.size()}});
    log << "wrote " << (dir / f.name).string() << '\n';
  }
  Json m;
  m["artifact"] = kArtifactName;
  m["version"] = kArtifactVersion;
  m["timestamp"] = utc_timestamp();
  m["command"] = command;
  m["experiment"] = c.experiment;
  m["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  m["workers"] = c.workers;
  m["two_pi_convention"] = c.two_pi;
  m["units"] = {{"time", "s"}, {"frequency", "rad/s"}};
  m["config"] = to_json(c);
  m["derived"] = derived_quantities(c);
  m["results"] = results;
  m["files"] = listing;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  log << "wrote " << (dir / "manifest.json").string() << '\n';
}

std::string table_csv(const SeriesTable& t) {
  std::ostringstream s;
  write_series_csv(t, s);
  return s.str();
}

std::uint64_t require_seed(const ExperimentConfig& c) {
  if (!c.seed) throw ConfigError("a seed is required for noisy runs (set \"seed\" or pass --seed)");
  return *c.seed;
}

std::vector<Frame> frames_of(const ExperimentConfig& c) {
  std::vector<Frame> f;
  for (const std::string& s : c.options.frames) f.push_back(frame_from_string(s));
  if (f.empty()) throw ConfigError("options.frames is empty");
  return f;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Json run_xx(const ExperimentConfig& c, SeriesTable& table) {
  const NVPairParams p = effective_model(c);
  Json r;
  std::vector<ObservableSeries> runs;
  for (Frame f : frames_of(c)) {
    XxOptions o;
    o.frame = f;
    o.t_final = c.options.t_final;
    if (c.options.samples > 0) o.samples = c.options.samples;
    runs.push_back(run_xx_gate(p, o));
    table.append(runs.back(), to_string(f));
    const ObservableSeries& s = runs.back();
    Json fr;
    fr["final_I1z"] = s.values("I1z").back();
    fr["final_I2z"] = s.values("I2z").back();
    double cons = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k)
      cons = std::max(cons, std::abs(s.values("I1z")[k] + s.values("I2z")[k] - 1.0));
    fr["max_population_drift"] = cons;
    if (f == Frame::full_static) {
      double sz = 0.0;
      for (double v : s.values("Sz_tot")) sz = std::max(sz, std::abs(v));
      fr["max_abs_Sz_tot"] = sz;
    }
    r[to_string(f)] = fr;
  }
  if (runs.size() == 2) {
    r["max_deviation_I1z"] = max_abs_diff(runs[0].values("I1z"), runs[1].values("I1z"));
    r["max_deviation_I2z"] = max_abs_diff(runs[0].values("I2z"), runs[1].values("I2z"));
  }
  r["t_final"] = table.times.back();
  return r;
}

Json run_zz(const ExperimentConfig& c, SeriesTable& table, bool bell) {
  const NVPairParams p = effective_model(c);
  const DriveParams d = effective_drive(c);
  const double scale = frequency_scale(c);
  Json r;
  std::vector<ObservableSeries> runs;
  for (Frame f : frames_of(c)) {
    ZzOptions o;
    o.frame = f;
    o.echo_axis = pulse_axis_from_string(c.options.echo_axis);
    if (c.options.points > 0) o.points = c.options.points;
    if (bell) {
      o.initial = "bell-start";
      o.t_final = c.options.t_final > 0.0 ? c.options.t_final : zz_half_time(p, d);
    } else {
      o.t_final = c.options.t_final;
    }
    const bool noisy = !bell && c.noise.b > 0.0 && f == Frame::two_level16;
    if (noisy) {
      NoiseSetup ns = echo_noise(c.noise.b * scale, c.noise.tau, c.noise.nuclear_ratio);
      ns.noise_dt = c.noise.noise_dt;
      o.noise = EchoNoise{ns, c.options.n_traj, require_seed(c), c.workers};
    }
    runs.push_back(run_zz_echo(p, d, o));
    table.append(runs.back(), to_string(f));
    const ObservableSeries& s = runs.back();
    Json fr;
    fr["final_dtau1x"] = s.values("dtau1x").back();
    fr["final_dtau2x"] = s.values("dtau2x").back();
    fr["final_contrast"] = s.values("contrast").back();
    fr["final_contrast_stderr"] = s.stderr_[s.index_of("contrast")].back();
    fr["noisy"] = noisy;
    if (noisy) fr["n_traj"] = s.n_traj;
    if (bell) {
      const BellResult b = run_bell(p, d, f);
      fr["bell_fidelity"] = b.fidelity;
      fr["bell_literal_fidelity"] = b.literal_fidelity;
      fr["bell_relative_phase"] = b.relative_phase;
      fr["bell_fidelity_t0"] = b.fidelity_t0;
      fr["electron_overlap"] = b.electron_overlap;
      fr["electron_overlap_ok"] = b.electron_ok;
      fr["t_gate"] = b.t_gate;
    }
    r[to_string(f)] = fr;
  }
  if (runs.size() == 2) {
    r["max_deviation_dtau1x"] = max_abs_diff(runs[0].values("dtau1x"), runs[1].values("dtau1x"));
    r["max_deviation_dtau2x"] = max_abs_diff(runs[0].values("dtau2x"), runs[1].values("dtau2x"));
  }
  r["t_final"] = table.times.back();
  r["echo_axis"] = c.options.echo_axis;
  return r;
}

Json run_fid_preset(const ExperimentConfig& c, SeriesTable& table) {
  FidOptions o;
  o.ou = OUParams{c.noise.b * frequency_scale(c), c.noise.tau};
  if (c.options.n_traj > 0) o.n_traj = c.options.n_traj;
  if (c.options.t_final > 0.0) o.t_max = c.options.t_final;
  if (c.options.samples > 0) o.steps = c.options.samples;
  o.seed = require_seed(c);
  o.workers = c.workers;
  const FidResult f = run_fid(o);
  table.append(f.series);
  Json r;
  r["b"] = o.ou.sigma;
  r["tau"] = o.ou.tau;
  r["n_traj"] = o.n_traj;
  r["b_fit"] = f.b_fit;
  r["log_amplitude"] = f.log_amplitude;
  r["fit_points"] = f.fit_points;
  r["t_half"] = f.t_half ? Json(*f.t_half) : Json(nullptr);
  r["T2"] = o.ou.sigma > 0.0 ? Json(1.0 / o.ou.sigma) : Json(nullptr);
  return r;
}

Json run_rwa_preset(const ExperimentConfig& c, SeriesTable& table) {
  RwaCheckOptions o;
  if (c.options.dt > 0.0) o.dt = c.options.dt;
  o.t_max = c.options.t_final;
  if (c.options.samples > 0) o.samples = c.options.samples;
  o.order_check = c.options.order_check;
  const RwaCheckResult res = run_rwa_check(effective_model(c), effective_drive(c), o);
  table.append(res.exact, "exact");
  table.append(res.rwa, "rwa");
  Json r;
  r["dt"] = o.dt;
  r["t_max"] = table.times.back();
  r["max_deviation"] = res.max_deviation;
  r["max_bohr_frequency"] = res.max_bohr_frequency;
  r["rk4_max_dt"] = rk4_max_dt(res.max_bohr_frequency);
  r["renormalizations"] = res.exact.renormalizations;
  r["max_norm_drift"] = res.exact.max_norm_drift;
  if (res.order) {
    r["richardson_ratio"] = res.order->ratio;
    r["richardson_diff_coarse"] = res.order->diff_coarse;
    r["richardson_diff_fine"] = res.order->diff_fine;
  } else {
    r["richardson_ratio"] = nullptr;
  }
  return r;
}

struct SweepOutput {
  std::string csv;
  Json results;
};

SweepOutput run_sweep(const ExperimentConfig& c) {
  SweepOptions o;
  o.b_list = sweep_b_values(c);
  if (o.b_list.empty()) throw ConfigError("options.b_list must be nonempty for a sweep");
  o.tau = c.noise.tau;
  o.nuclear_ratio = c.noise.nuclear_ratio;
  if (c.options.n_traj > 0) o.n_traj = c.options.n_traj;
  o.seed = require_seed(c);
  o.workers = c.workers;
  if (c.noise.noise_dt > 0.0) {
    const double t_f = zz_gate_time(effective_model(c), effective_drive(c));
    o.half_steps = static_cast<std::size_t>(std::ceil(t_f / (2.0 * c.noise.noise_dt) - 1e-9));
  }
  const std::vector<SweepRow> rows = run_noise_sweep(effective_model(c), effective_drive(c), o);
  std::vector<double> b, t2e, cm, cs;
  Json jr = Json::array();
  for (const SweepRow& row : rows) {
    b.push_back(row.b);
    t2e.push_back(row.t2e);
    cm.push_back(row.contrast_mean);
    cs.push_back(row.contrast_stderr);
    jr.push_back({{"b", row.b},
                  {"T2e", std::isfinite(row.t2e) ? Json(row.t2e) : Json(nullptr)},
                  {"contrast_mean", row.contrast_mean},
                  {"contrast_stderr", row.contrast_stderr}});
  }
  std::ostringstream s;
  write_sweep_csv(b, t2e, cm, cs, s);
  Json r;
  r["n_traj"] = o.n_traj;
  r["tau"] = o.tau;
  r["nuclear_ratio"] = o.nuclear_ratio;
  r["rows"] = jr;
  return {s.str(), r};
}

}  // namespace

int cmd_params(const ExperimentConfig& c, std::ostream& out) {
  const Json d = derived_quantities(c);
  prepare_stream(out);
  auto show = [&](const char* label, const char* key, const char* unit) {
    out << std::left << std::setw(14) << label << "= ";
    if (d.contains(key) && !d.at(key).is_null()) {
      out << d.at(key).get<double>() << ' ' << unit << '\n';
    } else {
      out << "n/a\n";
    }
  };
  show("J_eff^xx", "jeff_xx", "rad/s");
  show("J_eff^zz", "jeff_zz", "rad/s");
  show("|J_zz/J_xx|", "zz_over_xx", "");
  show("xi", "xi", "");
  show("J(xi)", "j_xi", "rad/s");
  show("Omega_eS", "omega_es", "rad/s");
  show("Omega_eA", "omega_ea", "rad/s");
  show("t_zz", "t_zz", "s");
  show("t_f", "t_f", "s");
  show("t_xx", "t_xx_transfer", "s");
  out << "RWA ratios (limit " << kRwaRatioLimit << "):\n";
  for (auto it = d.at("rwa_ratios").begin(); it != d.at("rwa_ratios").end(); ++it) {
    const double v = it.value().get<double>();
    out << "  " << std::left << std::setw(28) << it.key() << v << (v > kRwaRatioLimit ? "  EXCEEDS LIMIT" : "") << '\n';
  }
  for (const Json& n : d.at("notes")) out << "note: " << n.get<std::string>() << '\n';
  write_outputs(c, "params", Json::object(), {}, out);
  return 0;
}

int cmd_run(const ExperimentConfig& c, std::ostream& out) {
  if (c.experiment == "noise-sweep") return cmd_sweep(c, out);
  SeriesTable table;
  Json results;
  if (c.experiment == "xx-gate") {
    results = run_xx(c, table);
  } else if (c.experiment == "zz-echo") {
    results = run_zz(c, table, false);
  } else if (c.experiment == "bell") {
    results = run_zz(c, table, true);
  } else if (c.experiment == "fid") {
    results = run_fid_preset(c, table);
  } else if (c.experiment == "rwa-check") {
    results = run_rwa_preset(c, table);
  } else {
    throw ConfigError("unknown experiment \"" + c.experiment + "\"");
  }
  write_outputs(c, "run", results, {{"series.csv", table_csv(table)}}, out);
  return 0;
}

int cmd_sweep(const ExperimentConfig& c, std::ostream& out) {
  ExperimentConfig s = c;
  if (s.experiment != "noise-sweep") {
    const ExperimentConfig def = default_config("noise-sweep");
    s.experiment = "noise-sweep";
    s.options.frames = def.options.frames;
    if (s.options.b_list.empty()) s.options.b_list = def.options.b_list;
    if (s.options.n_traj == 0) s.options.n_traj = def.options.n_traj;
  }
  const SweepOutput r = run_sweep(s);
  write_outputs(s, "sweep", r.results, {{"sweep.csv", r.csv}}, out);
  return 0;
}

int cmd_verify(const fs::path& dir, std::ostream& out) {
  const fs::path mpath = dir / "manifest.json";
  Json m;
  try {
    m = Json::parse(read_file(mpath));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(mpath.string() + " is not valid JSON: " + e.what());
  }
  if (!m.contains("files") || !m.at("files").is_array()) throw IoError(mpath.string() + " has no file list");
  int bad = 0;
  for (const Json& f : m.at("files")) {
    const std::string name = f.at("name").get<std::string>();
    const std::string want = f.at("sha256").get<std::string>();
    std::string got;
    try {
      got = sha256_hex(read_file(dir / name));
    } catch (const IoError&) {
      got = "missing";
    }
    const bool ok = got == want;
    if (!ok) ++bad;
    out << (ok ? "OK       " : "MISMATCH ") << name << '\n';
  }
  // Re-parse the embedded configuration so a corrupted manifest is caught too.
  parse_config(m);
  return bad == 0 ? 0 : 4;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nvsim: nuclear-spin gates between two NV centers"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir, experiment;
  std::uint64_t seed = 0;
  int workers = -1;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the configuration)");
  app.add_option("--config", config_path, "Configuration JSON (a manifest is also accepted)");
  app.add_option("--workers", workers, "Monte-Carlo worker threads (0 = OpenMP default)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--experiment", experiment, "Preset used when no configuration file is given");
  auto* params = app.add_subcommand("params", "Print derived couplings and gate times");
  auto* run = app.add_subcommand("run", "Run the configured experiment");
  auto* sweep = app.add_subcommand("sweep", "Run the noise sweep");
  auto* verify = app.add_subcommand("verify", "Re-check output digests against manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (verify->parsed()) return cmd_verify(out_dir.empty() ? fs::path(".") : fs::path(out_dir), out);
    ExperimentConfig c;
    if (!config_path.empty()) {
      c = load_config(config_path);
      if (!experiment.empty() && experiment != c.experiment) {
        throw ConfigError("--experiment conflicts with the configuration file");
      }
    } else {
      c = default_config(experiment.empty() ? "zz-echo" : experiment);
    }
    if (*seed_opt) c.seed = seed;
    if (workers >= 0) c.workers = workers;
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (params->parsed()) return cmd_params(c, out);
    if (run->parsed()) return cmd_run(c, out);
    if (sweep->parsed()) return cmd_sweep(c, out);
    return 2;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace nvsim::cli
