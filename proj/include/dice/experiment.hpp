#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dice/baselines.hpp"
#include "dice/diffusion.hpp"
#include "dice/geometry.hpp"
#include "dice/image.hpp"
#include "dice/metrics.hpp"
#include "dice/sampler.hpp"

namespace dice {

enum class Method { fbp, pnp_fista, dice };

std::string to_string(Method m);
Method parse_method(const std::string& text);

/// Everything a run needs. Lists (views, patterns, methods) span a grid; every
/// combination is run for every input image.
struct ExperimentConfig {
  // [input]
  std::string phantom = "shepp_logan";  // shepp_logan | ellipses | disk
  int phantom_count = 1;                // ellipses only
  std::filesystem::path input_dir;      // overrides phantom when set
  int image_side = 64;

  // [geometry]
  std::vector<PatternKind> patterns{PatternKind::uniform};
  std::vector<int> views{15};
  double noise_sigma = 0.0;

  // [method]
  std::vector<Method> methods{Method::dice};

  // [dice]
  double rho = 0.9;
  double tau1 = 0.5;
  int K = 5;
  int P = 5;
  int T_steps = 100;
  int T = 1000;
  ScheduleKind schedule = ScheduleKind::linear;
  double beta1 = 1e-4;
  double betaT = 0.02;
  std::string denoiser = "tv";
  double lambda_tv = 0.4;
  int tv_iters = 30;
  double prior_mean = 0.0;
  double prior_var = 1.0;
  bool warm_start_ce = false;
  bool warm_start_cg = false;

  // [fista]
  double fista_lambda = 0.05;
  int fista_iters = 1000;
  int fista_tv_iters = 50;
  std::optional<double> fista_step;  // "auto" when empty

  // [fbp]
  FilterWindow fbp_window = FilterWindow::ram_lak;

  // [run]
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir = "out";
  bool record_timing = false;
  bool write_images = true;

  // [sweep]
  std::string sweep_axis = "K";
  std::vector<double> sweep_values;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// INI text with sections input, geometry, method, dice, fista, fbp, run and
/// sweep. Keys not listed above are rejected.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "section.key=value"; same validation as a file key.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Full config as INI. parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& cfg);

/// "0.1.0+<git describe>" at build time.
std::string version_string();

struct NamedImage {
  std::string id;
  Image image;
};

/// Phantoms or the PGM files of input_dir, in a fixed order.
std::vector<NamedImage> load_inputs(const ExperimentConfig& cfg);

/// Geometry for one grid cell. Nonuniform angle sets come from the "geometry"
/// stream of the root seed so every image shares them.
ScanGeometry experiment_geometry(const ExperimentConfig& cfg, PatternKind pattern, int views);

/// Full 180-view sinogram of `img` with the image's noise stream applied.
Sinogram simulate_full(const ExperimentConfig& cfg, const Image& img, std::size_t image_index);

struct Reconstruction {
  Image image;
  std::optional<RunLog> log;  // dice only
};

/// One reconstruction of `sino` (already subsampled to `geometry`).
Reconstruction reconstruct(const ExperimentConfig& cfg, Method method, const Sinogram& sino,
                           const ScanGeometry& geometry, std::size_t image_index);

struct ExperimentResult {
  std::vector<MetricRow> rows;
  double simulate_seconds = 0.0;
  double reconstruct_seconds = 0.0;
  double evaluate_seconds = 0.0;
};

/// Simulate, reconstruct and score every grid cell. Writes into out_dir:
/// metrics.csv, run.ini (config echo), metadata.ini, and per-cell PGM + .f64
/// reconstructions (plus DICE residual CSVs). On any error the files written
/// so far are removed and the error is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  std::string axis;
  double axis_value = 0.0;
  std::string image_id;
  double psnr = 0.0;
  double ssim = 0.0;
  double seconds = 0.0;
};

/// One DICE run per value of `axis` (rho, tau1, K, P, T_steps) with everything
/// else, including the seed, held fixed. Uses the first pattern and view
/// count of the grid. Writes sweep.csv with columns
/// axis,axis_value,image_id,psnr,ssim,seconds.
std::vector<SweepRow> ablation_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                      const std::vector<double>& values);

}  // namespace dice
