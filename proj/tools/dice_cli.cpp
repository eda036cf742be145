// dice: simulate / reconstruct / evaluate / sweep / all
//
// Exit codes: 0 ok, 2 config or usage error, 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "dice/errors.hpp"
#include "dice/experiment.hpp"
#include "dice/io.hpp"
#include "dice/metrics.hpp"

namespace fs = std::filesystem;
using namespace dice;

namespace {

struct Common {
  std::string config;
  std::string method;
  std::string views;
  std::string pattern;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI experiment config")->check(CLI::ExistingFile);
  app->add_option("--method", c.method, "fbp, pnp_fista, dice (comma list)");
  app->add_option("--views", c.views, "view counts (comma list)");
  app->add_option("--pattern", c.pattern, "uniform, nonuniform (comma list)");
  app->add_option("--seed", c.seed, "root seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "worker threads");
  app->add_option("--override", c.overrides, "section.key=value (repeatable)");
}

// file < flags < --override, all through the same validation
ExperimentConfig effective_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.method.empty()) apply_override(cfg, "method.name=" + c.method);
  if (!c.views.empty()) apply_override(cfg, "geometry.views=" + c.views);
  if (!c.pattern.empty()) apply_override(cfg, "geometry.pattern=" + c.pattern);
  if (c.seed) apply_override(cfg, "run.seed=" + std::to_string(*c.seed));
  if (!c.out.empty()) apply_override(cfg, "run.out=" + c.out);
  if (c.workers) apply_override(cfg, "run.workers=" + std::to_string(*c.workers));
  for (const auto& o : c.overrides) apply_override(cfg, o);
  return cfg;
}

Image load_any_image(const fs::path& path) {
  if (path.extension() == ".f64") {
    Vec v = read_raw_f64(path);
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.size()))));
    if (static_cast<std::size_t>(side) * side != v.size())
      throw IoError(path.string() + ": " + std::to_string(v.size()) + " values is not a square image");
    return Image(side, std::move(v));
  }
  return read_pgm(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

int cmd_simulate(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir / "sino");
  fs::create_directories(cfg.out_dir / "truth");
  write_text(cfg.out_dir / "run.ini", to_ini(cfg));
  const auto inputs = load_inputs(cfg);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    write_pgm(cfg.out_dir / "truth" / (inputs[i].id + ".pgm"), inputs[i].image);
    write_raw_f64(cfg.out_dir / "truth" / (inputs[i].id + ".f64"), inputs[i].image.pixels());
    const Sinogram full = simulate_full(cfg, inputs[i].image, i);
    for (auto pattern : cfg.patterns)
      for (int views : cfg.views) {
        const auto g = experiment_geometry(cfg, pattern, views);
        const auto name = inputs[i].id + "_" + to_string(pattern) + "_" + std::to_string(views) + ".sino";
        write_sinogram(cfg.out_dir / "sino" / name, select_views(full, g.angles_deg));
        std::cout << (cfg.out_dir / "sino" / name).string() << '\n';
      }
  }
  return 0;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const fs::path& sino_path, std::size_t index) {
  const Sinogram sino = read_sinogram(sino_path);
  if (cfg.patterns.size() != 1 || cfg.views.size() != 1 || cfg.methods.size() != 1)
    throw ConfigError("reconstruct: give exactly one pattern, view count and method");
  const auto g = experiment_geometry(cfg, cfg.patterns.front(), cfg.views.front());
  const auto rec = reconstruct(cfg, cfg.methods.front(), sino, g, index);
  fs::create_directories(cfg.out_dir);
  const auto stem = sino_path.stem().string() + "_" + to_string(cfg.methods.front());
  write_pgm(cfg.out_dir / (stem + ".pgm"), rec.image);
  write_raw_f64(cfg.out_dir / (stem + ".f64"), rec.image.pixels());
  if (rec.log) {
    std::ofstream log(cfg.out_dir / (stem + "_residuals.csv"));
    rec.log->write_residual_csv(log);
  }
  std::cout << (cfg.out_dir / (stem + ".pgm")).string() << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& ref_path, const std::vector<std::string>& tests, double data_range) {
  const Image ref = load_any_image(ref_path);
  write_metrics_header(std::cout);
  for (const auto& t : tests) {
    const Image img = load_any_image(t);
    const auto m = evaluate(ref, img, data_range);
    write_metrics_row(std::cout, {fs::path(t).stem().string(), "-", 0, "-", m.psnr, m.ssim, 0.0});
  }
  return 0;
}

int cmd_sweep(ExperimentConfig cfg, const std::string& axis, const std::string& values) {
  if (!axis.empty()) apply_override(cfg, "sweep.axis=" + axis);
  if (!values.empty()) apply_override(cfg, "sweep.values=" + values);
  const auto rows = ablation_sweep(cfg, cfg.sweep_axis, cfg.sweep_values);
  std::map<double, std::pair<double, int>> mean;
  for (const auto& r : rows) {
    mean[r.axis_value].first += r.psnr;
    mean[r.axis_value].second += 1;
  }
  for (const auto& [v, acc] : mean) std::printf("%s=%g  mean psnr %.3f dB\n", cfg.sweep_axis.c_str(), v, acc.first / acc.second);
  std::cout << (cfg.out_dir / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_all(const ExperimentConfig& cfg) {
  const auto res = run_experiment(cfg);
  std::printf("%-16s %-10s %5s %-10s %8s %7s\n", "image", "method", "views", "pattern", "psnr", "ssim");
  for (const auto& r : res.rows)
    std::printf("%-16s %-10s %5d %-10s %8.3f %7.4f\n", r.image_id.c_str(), r.method.c_str(), r.views,
                r.pattern.c_str(), r.psnr, r.ssim);
  std::cout << (cfg.out_dir / "metrics.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion consensus equilibrium for sparse-view CT"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Common sim_c, rec_c, sweep_c, all_c;
  auto* sim = app.add_subcommand("simulate", "phantoms -> sinogram files");
  add_common(sim, sim_c);

  auto* rec = app.add_subcommand("reconstruct", "sinogram file -> image");
  add_common(rec, rec_c);
  std::string sino_path;
  std::size_t index = 0;
  rec->add_option("--sino", sino_path, "sinogram file")->required()->check(CLI::ExistingFile);
  rec->add_option("--index", index, "image index for the RNG streams");

  auto* ev = app.add_subcommand("evaluate", "PSNR / SSIM of images against a reference");
  std::string ref_path;
  std::vector<std::string> tests;
  double data_range = 1.0;
  ev->add_option("--ref", ref_path, "reference image (.pgm or .f64)")->required()->check(CLI::ExistingFile);
  ev->add_option("--test", tests, "images to score")->required()->check(CLI::ExistingFile);
  ev->add_option("--data-range", data_range, "intensity range");

  auto* sw = app.add_subcommand("sweep", "ablation over one sampler parameter");
  add_common(sw, sweep_c);
  std::string axis, values;
  sw->add_option("--axis", axis, "rho, tau1, K, P or T_steps");
  sw->add_option("--values", values, "comma list");

  auto* all = app.add_subcommand("all", "simulate, reconstruct and score the full grid");
  add_common(all, all_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(effective_config(sim_c));
    if (*rec) return cmd_reconstruct(effective_config(rec_c), sino_path, index);
    if (*ev) return cmd_evaluate(ref_path, tests, data_range);
    if (*sw) return cmd_sweep(effective_config(sweep_c), axis, values);
    if (*all) return cmd_all(effective_config(all_c));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
