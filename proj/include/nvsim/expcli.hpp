#pragma once

// Command-line front end: JSON configuration, experiment dispatch, CSV/JSON
// outputs and reproducibility manifests.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical-precondition
// error, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvsim/evolve.hpp"
#include "nvsim/model.hpp"

namespace nvsim::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kArtifactName = "nvsim";
inline constexpr const char* kArtifactVersion = "1.0.0";

const std::vector<std::string>& preset_names();

struct NoiseConfig {
  double b = 0.0;               // electron field standard deviation, rad/s
  double tau = 10e-3;           // correlation time, s
  double nuclear_ratio = 0.1;   // nuclear field = nuclear_ratio * b
  double noise_dt = 0.0;        // 0 selects the automatic segment

  bool operator==(const NoiseConfig&) const = default;
};

struct PresetOptions {
  std::vector<std::string> frames;
  double t_final = 0.0;  // 0 selects the preset's natural horizon
  double dt = 0.0;
  std::size_t n_traj = 0;
  std::vector<double> b_list;
  std::string echo_axis = "x";
  std::size_t points = 0;
  std::size_t samples = 0;
  bool order_check = true;

  bool operator==(const PresetOptions&) const = default;
};

struct ExperimentConfig {
  std::string experiment = "zz-echo";
  NVPairParams model;
  DriveParams drive;
  NoiseConfig noise;
  PresetOptions options;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string output_dir = "out";
  // When set, every frequency in the file is read as a cyclic frequency and
  // multiplied by 2 pi before use.
  bool two_pi = false;

  bool operator==(const ExperimentConfig&) const = default;
};

// Preset defaults (the xx-gate preset runs at zero field).
ExperimentConfig default_config(const std::string& preset);

// Strict parsing: unknown keys, wrong types and non-finite numbers raise
// ConfigError naming the key path. A manifest is accepted in place of a
// config and its "config" member is used.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);

// Model and drive after the optional 2 pi scaling.
NVPairParams effective_model(const ExperimentConfig& c);
DriveParams effective_drive(const ExperimentConfig& c);

// Derived couplings, gate times and RWA ratios; entries that cannot be
// evaluated are null with a note in "notes".
Json derived_quantities(const ExperimentConfig& c);

// Columns sharing one time grid.
struct SeriesTable {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stderr_;

  // Appends every observable of `s`, renamed "<name>@<tag>" when tag is
  // nonempty. Throws DimensionError when the time grids differ.
  void append(const ObservableSeries& s, const std::string& tag = "");
};

// Header t_s,<obs>_mean,<obs>_stderr,...; 17 significant digits; LF endings.
void write_series_csv(const SeriesTable& t, std::ostream& out);
void write_sweep_csv(const std::vector<double>& b, const std::vector<double>& t2e,
                     const std::vector<double>& c_mean, const std::vector<double>& c_se, std::ostream& out);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Subcommands; each writes only inside the configured output directory and
// returns the process exit code on success (errors are thrown).
int cmd_params(const ExperimentConfig& c, std::ostream& out);
int cmd_run(const ExperimentConfig& c, std::ostream& out);
int cmd_sweep(const ExperimentConfig& c, std::ostream& out);
// Re-hashes every file listed in <dir>/manifest.json; returns 0 when all
// digests match and 4 otherwise.
int cmd_verify(const std::filesystem::path& dir, std::ostream& out);

// Full command-line entry point (subcommands params, run, sweep, verify and
// the flags --config, --seed, --workers, --out). Returns the exit code.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace nvsim::cli
