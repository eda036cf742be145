#include "dice/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "dice/errors.hpp"
#include "dice/io.hpp"
#include "dice/phantom.hpp"
#include "dice/rng.hpp"

namespace fs = std::filesystem;

namespace dice {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Files created by a run; removed again if the run aborts.
class OutputLedger {
 public:
  explicit OutputLedger(fs::path root) : root_(std::move(root)) {}

  void make_dirs(const fs::path& dir) {
    std::vector<fs::path> created;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) created.push_back(p);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    std::lock_guard lock(mu_);
    dirs_.insert(dirs_.end(), created.begin(), created.end());
  }

  fs::path add(const fs::path& rel) {
    const fs::path p = root_ / rel;
    std::lock_guard lock(mu_);
    files_.push_back(p);
    return p;
  }

  void rollback() noexcept {
    std::lock_guard lock(mu_);
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    // innermost first; only directories this run created and left empty
    auto dirs = dirs_;
    std::sort(dirs.begin(), dirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.string().size() > b.string().size(); });
    for (const auto& d : dirs)
      if (fs::is_directory(d, ec) && fs::is_empty(d, ec)) fs::remove(d, ec);
  }

 private:
  fs::path root_;
  std::mutex mu_;
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
};

// Computes tasks on `workers` threads and hands results to `emit` strictly in
// task order on the calling thread, so output does not depend on scheduling.
template <class R, class Compute, class Emit>
void run_ordered(std::size_t n, int workers, Compute compute, Emit emit) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      R r = compute(i);
      emit(i, r);
    }
    return;
  }
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        R r = compute(i);
        std::lock_guard lock(mu);
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mu);
        errors[i] = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::jthread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(work);

  try {
    for (std::size_t i = 0; i < n; ++i) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return slots[i].has_value() || errors[i] != nullptr; });
      if (errors[i]) std::rethrow_exception(errors[i]);
      R r = std::move(*slots[i]);
      slots[i].reset();
      lock.unlock();
      emit(i, r);
    }
  } catch (...) {
    stop = true;
    pool.clear();  // joins
    throw;
  }
}

struct Cell {
  PatternKind pattern;
  int views;
  ScanGeometry geometry;
  std::unique_ptr<ParallelBeamProjector> projector;
};

std::vector<Cell> build_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (auto pattern : cfg.patterns)
    for (int views : cfg.views) {
      Cell c{pattern, views, experiment_geometry(cfg, pattern, views), nullptr};
      c.projector = std::make_unique<ParallelBeamProjector>(c.geometry);
      cells.push_back(std::move(c));
    }
  return cells;
}

Reconstruction reconstruct_with(const ExperimentConfig& cfg, Method method, const Sinogram& sino,
                                const ParallelBeamProjector& a, std::size_t image_index) {
  const int side = a.geometry().image_side;
  switch (method) {
    case Method::fbp:
      return {fbp_reconstruct(sino, a.geometry(), cfg.fbp_window), std::nullopt};
    case Method::pnp_fista: {
      FistaConfig fc;
      fc.lambda = cfg.fista_lambda;
      fc.iters = cfg.fista_iters;
      fc.step = cfg.fista_step;
      auto res = pnp_fista(sino.values(), a, tv_denoiser(side, cfg.fista_tv_iters), fc);
      return {Image(side, std::move(res.x)), std::nullopt};
    }
    case Method::dice: {
      const auto sched = NoiseSchedule::make(cfg.T, cfg.schedule, cfg.beta1, cfg.betaT);
      TvProxDenoiser den(sched, side, cfg.lambda_tv, cfg.tv_iters, cfg.prior_mean, cfg.prior_var);
      SamplerConfig sc;
      sc.T_steps = cfg.T_steps;
      sc.rho = cfg.rho;
      sc.K = cfg.K;
      sc.P = cfg.P;
      sc.tau1 = cfg.tau1;
      sc.seed = derive_seed(cfg.seed, "dice", image_index);
      sc.warm_start_ce = cfg.warm_start_ce;
      sc.warm_start_cg = cfg.warm_start_cg;
      auto [x, log] = dice_reconstruct(sino.values(), a, den, sched, sc);
      return {Image(side, std::move(x)), std::move(log)};
    }
  }
  throw ContractError("reconstruct: unknown method");
}

std::string cell_tag(const std::string& id, Method m, PatternKind p, int views) {
  return id + "_" + to_string(m) + "_" + to_string(p) + "_" + std::to_string(views);
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Sinogram> simulate_all(const ExperimentConfig& cfg, const std::vector<NamedImage>& inputs) {
  std::vector<Sinogram> full(inputs.size());
  run_ordered<Sinogram>(
      inputs.size(), cfg.workers, [&](std::size_t i) { return simulate_full(cfg, inputs[i].image, i); },
      [&](std::size_t i, Sinogram& s) { full[i] = std::move(s); });
  return full;
}

}  // namespace

std::vector<NamedImage> load_inputs(const ExperimentConfig& cfg) {
  std::vector<NamedImage> out;
  if (!cfg.input_dir.empty()) {
    for (const auto& f : list_pgm_files(cfg.input_dir)) {
      Image img = read_pgm(f);
      if (img.side() != cfg.image_side)
        throw IoError(f.string() + ": side " + std::to_string(img.side()) + " does not match input.image_side = " +
                      std::to_string(cfg.image_side));
      out.push_back({f.stem().string(), std::move(img)});
    }
    return out;
  }
  if (cfg.phantom == "shepp_logan") {
    out.push_back({"shepp_logan", shepp_logan(cfg.image_side)});
  } else if (cfg.phantom == "disk") {
    out.push_back({"disk", disk_phantom(cfg.image_side)});
  } else {
    for (int i = 0; i < cfg.phantom_count; ++i)
      out.push_back({"ellipses_" + std::to_string(i),
                     random_ellipse_phantom(cfg.image_side, derive_seed(cfg.seed, "phantom", i))});
  }
  return out;
}

ScanGeometry experiment_geometry(const ExperimentConfig& cfg, PatternKind pattern, int views) {
  SamplingPattern sp{pattern, views, derive_seed(cfg.seed, "geometry", static_cast<std::uint64_t>(views))};
  return build_geometry(cfg.image_side, sp);
}

Sinogram simulate_full(const ExperimentConfig& cfg, const Image& img, std::size_t image_index) {
  const ScanGeometry full = build_geometry(cfg.image_side, {PatternKind::uniform, kFullViewCount, 0});
  const Sinogram clean = radon_forward(img, full);
  return add_noise(clean, cfg.noise_sigma, derive_seed(cfg.seed, "noise", image_index));
}

Reconstruction reconstruct(const ExperimentConfig& cfg, Method method, const Sinogram& sino,
                           const ScanGeometry& geometry, std::size_t image_index) {
  if (sino.n_angles() != static_cast<int>(geometry.n_views()) || sino.n_detectors() != geometry.n_detectors)
    throw DimensionError("reconstruct: sinogram is " + std::to_string(sino.n_angles()) + "x" +
                         std::to_string(sino.n_detectors()) + " but the geometry expects " +
                         std::to_string(geometry.n_views()) + "x" + std::to_string(geometry.n_detectors));
  ParallelBeamProjector a(geometry);
  return reconstruct_with(cfg, method, sino, a, image_index);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  OutputLedger ledger(cfg.out_dir);
  ExperimentResult result;
  try {
    ledger.make_dirs(cfg.out_dir);
    if (cfg.write_images) {
      ledger.make_dirs(cfg.out_dir / "recon");
      ledger.make_dirs(cfg.out_dir / "logs");
    }
    const auto run_ini = ledger.add("run.ini");
    {
      auto out = open_text(run_ini);
      out << to_ini(cfg);
      check_written(out, run_ini);
    }

    auto t0 = Clock::now();
    const auto inputs = load_inputs(cfg);
    const auto full = simulate_all(cfg, inputs);
    const auto cells = build_cells(cfg);
    result.simulate_seconds = seconds_since(t0);

    struct Task {
      std::size_t image;
      std::size_t cell;
      Method method;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      for (std::size_t c = 0; c < cells.size(); ++c)
        for (auto m : cfg.methods) tasks.push_back({i, c, m});

    struct Done {
      Reconstruction rec;
      MetricReport metrics;
      double recon_seconds;
      double eval_seconds;
    };

    const auto csv_path = ledger.add("metrics.csv");
    auto csv = open_text(csv_path);
    write_metrics_header(csv);

    run_ordered<Done>(
        tasks.size(), cfg.workers,
        [&](std::size_t k) {
          const Task& task = tasks[k];
          const Cell& cell = cells[task.cell];
          const Sinogram y = select_views(full[task.image], cell.geometry.angles_deg);
          auto start = Clock::now();
          Reconstruction rec = reconstruct_with(cfg, task.method, y, *cell.projector, task.image);
          const double rs = seconds_since(start);
          start = Clock::now();
          const MetricReport m = evaluate(inputs[task.image].image, rec.image);
          return Done{std::move(rec), m, rs, seconds_since(start)};
        },
        [&](std::size_t k, Done& done) {
          const Task& task = tasks[k];
          const Cell& cell = cells[task.cell];
          MetricRow row{inputs[task.image].id,
                        to_string(task.method),
                        cell.views,
                        to_string(cell.pattern),
                        done.metrics.psnr,
                        done.metrics.ssim,
                        cfg.record_timing ? done.recon_seconds : 0.0};
          write_metrics_row(csv, row);
          result.rows.push_back(row);
          result.reconstruct_seconds += done.recon_seconds;
          result.evaluate_seconds += done.eval_seconds;
          if (cfg.write_images) {
            const std::string tag = cell_tag(row.image_id, task.method, cell.pattern, cell.views);
            write_pgm(ledger.add(fs::path("recon") / (tag + ".pgm")), done.rec.image);
            write_raw_f64(ledger.add(fs::path("recon") / (tag + ".f64")), done.rec.image.pixels());
            if (done.rec.log) {
              const auto log_path = ledger.add(fs::path("logs") / (tag + "_residuals.csv"));
              auto out = open_text(log_path);
              done.rec.log->write_residual_csv(out);
              check_written(out, log_path);
            }
          }
        });
    check_written(csv, csv_path);

    const auto meta_path = ledger.add("metadata.ini");
    auto meta = open_text(meta_path);
    meta.precision(17);
    meta << "[run]\nversion = " << version_string() << "\nimages = " << inputs.size()
         << "\ntasks = " << tasks.size() << "\nworkers = " << cfg.workers << "\n\n[timing]\nsimulate_seconds = "
         << result.simulate_seconds << "\nreconstruct_seconds = " << result.reconstruct_seconds
         << "\nevaluate_seconds = " << result.evaluate_seconds << "\n\n[angles]\n";
    for (const auto& cell : cells) {
      meta << to_string(cell.pattern) << '_' << cell.views << " = ";
      for (std::size_t i = 0; i < cell.geometry.angles_deg.size(); ++i)
        meta << (i ? "," : "") << cell.geometry.angles_deg[i];
      meta << '\n';
    }
    check_written(meta, meta_path);
  } catch (...) {
    ledger.rollback();
    throw;
  }
  return result;
}

std::vector<SweepRow> ablation_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                     const std::vector<double>& values) {
  ExperimentConfig base = cfg;
  base.sweep_axis = axis;
  base.sweep_values = values;
  base.validate();
  if (values.empty()) throw ConfigError("sweep.values: empty list");

  std::vector<ExperimentConfig> variants;
  for (double v : values) {
    ExperimentConfig c = base;
    const bool integral = axis == "K" || axis == "P" || axis == "T_steps";
    if (integral && v != static_cast<double>(static_cast<long long>(v)))
      throw ConfigError("sweep.values: " + axis + " takes integers");
    if (axis == "rho") c.rho = v;
    else if (axis == "tau1") c.tau1 = v;
    else if (axis == "K") c.K = static_cast<int>(v);
    else if (axis == "P") c.P = static_cast<int>(v);
    else c.T_steps = static_cast<int>(v);
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("sweep value: ") + e.what());
    }
    variants.push_back(std::move(c));
  }

  OutputLedger ledger(base.out_dir);
  std::vector<SweepRow> rows;
  try {
    ledger.make_dirs(base.out_dir);
    const auto run_ini = ledger.add("run.ini");
    {
      auto out = open_text(run_ini);
      out << to_ini(base);
      check_written(out, run_ini);
    }
    const auto inputs = load_inputs(base);
    const auto full = simulate_all(base, inputs);
    const ScanGeometry geometry = experiment_geometry(base, base.patterns.front(), base.views.front());
    const ParallelBeamProjector a(geometry);
    std::vector<Sinogram> measured;
    for (const auto& s : full) measured.push_back(select_views(s, geometry.angles_deg));

    const std::size_t n = variants.size() * inputs.size();
    const auto csv_path = ledger.add("sweep.csv");
    auto csv = open_text(csv_path);
    csv << "axis,axis_value,image_id,psnr,ssim,seconds\n";
    csv.precision(10);
    run_ordered<SweepRow>(
        n, base.workers,
        [&](std::size_t k) {
          const std::size_t vi = k / inputs.size();
          const std::size_t ii = k % inputs.size();
          const auto start = Clock::now();
          const auto rec = reconstruct_with(variants[vi], Method::dice, measured[ii], a, ii);
          const double secs = seconds_since(start);
          const auto m = evaluate(inputs[ii].image, rec.image);
          return SweepRow{axis, values[vi], inputs[ii].id, m.psnr, m.ssim, base.record_timing ? secs : 0.0};
        },
        [&](std::size_t, SweepRow& row) {
          csv << row.axis << ',' << row.axis_value << ',' << row.image_id << ',' << row.psnr << ',' << row.ssim
              << ',' << row.seconds << '\n';
          rows.push_back(row);
        });
    check_written(csv, csv_path);
  } catch (...) {
    ledger.rollback();
    throw;
  }
  return rows;
}

}  // namespace dice
