#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "vstitch/config.hpp"
#include "vstitch/error.hpp"
#include "vstitch/io.hpp"
#include "vstitch/metrics.hpp"
#include "vstitch/pipeline.hpp"
#include "vstitch/plot.hpp"
#include "vstitch/synth.hpp"

namespace fs = std::filesystem;
using namespace vstitch;

namespace {

AppConfig config_from(const std::string& path) {
  if (path.empty()) {
    std::istringstream none;
    return parse_config(none);
  }
  return load_config(path);
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  fn(out);
}

std::ifstream open_input(const fs::path& path, const std::string& hint) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("missing " + path.string() + "; " + hint);
  return in;
}

std::vector<ControlGrid> load_meshes(const fs::path& path, const std::string& hint) {
  auto in = open_input(path, hint);
  return read_meshes_csv(in);
}

Trajectory load_trajectory(const fs::path& path, const std::string& hint) {
  auto in = open_input(path, hint);
  return read_trajectory_csv(in);
}

void write_canvas(const fs::path& path, const CanvasSpec& c, int node_step) {
  write_file(path, [&](std::ostream& out) {
    out.precision(17);
    out << "height=" << c.height << "\nwidth=" << c.width << "\noffset_x=" << c.offset.x()
        << "\noffset_y=" << c.offset.y() << "\nnode_step=" << node_step << '\n';
  });
}

std::pair<CanvasSpec, int> read_canvas(const fs::path& path) {
  auto in = open_input(path, "re-run `vstitch stitch` to regenerate it");
  CanvasSpec c;
  int node_step = 1;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const double v = std::stod(line.substr(eq + 1));
    if (key == "height") c.height = static_cast<int>(v);
    if (key == "width") c.width = static_cast<int>(v);
    if (key == "offset_x") c.offset.x() = v;
    if (key == "offset_y") c.offset.y() = v;
    if (key == "node_step") node_step = static_cast<int>(v);
  }
  if (c.height <= 0 || c.width <= 0) throw InvalidArgument("malformed canvas file " + path.string());
  return {c, node_step};
}

std::unique_ptr<MotionProvider> oracle_from(const fs::path& truth_dir, double width, double height) {
  const std::string hint = "run `vstitch simulate` to produce ground truth";
  const auto spatial = load_meshes(truth_dir / "spatial.csv", hint);
  const auto temporal = load_meshes(truth_dir / "temporal.csv", hint);
  const ControlGrid rigid = rigid_mesh(spatial.front().shape(), width, height);
  std::vector<MotionField> ms, mt;
  for (const auto& m : spatial) ms.push_back(m - rigid);
  for (const auto& m : temporal) mt.push_back(m - rigid);
  return std::make_unique<OracleProvider>(std::move(ms), std::move(mt));
}

// Positions from the first online emission on, as the stability score expects.
Trajectory emitted(const Trajectory& traj, int window) {
  const int skip = std::min(window - 1, traj.length());
  return traj.slice(skip, traj.length() - skip);
}

struct StitchArgs {
  std::string ref, tgt, out, config, mode = "online", provider = "direct", truth;
  bool dump = false;
};

int cmd_stitch(const StitchArgs& a) {
  const AppConfig cfg = config_from(a.config);
  const auto ref = read_frames(a.ref);
  const auto tgt = read_frames(a.tgt);
  if (ref.size() != tgt.size()) {
    throw InvalidArgument("streams differ in length: " + std::to_string(ref.size()) + " reference frames, " +
                          std::to_string(tgt.size()) + " target frames");
  }
  const double w = ref.front().width(), h = ref.front().height();
  std::unique_ptr<MotionProvider> provider;
  if (a.provider == "oracle") {
    if (a.truth.empty()) throw InvalidArgument("--provider oracle needs --truth DIR");
    provider = oracle_from(a.truth, w, h);
  } else {
    provider = std::make_unique<DirectProvider>(cfg.grid, cfg.warp, cfg.estimator);
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<StitchedFrame> frames;
  CanvasSpec canvas;
  if (a.mode == "offline") {
    frames = stitch_offline(ref, tgt, *provider, cfg.pipeline);
    std::vector<ControlGrid> raw;
    for (const auto& f : frames) raw.push_back(f.raw_mesh);
    canvas = cfg.pipeline.canvas ? *cfg.pipeline.canvas : compute_canvas(raw, w, h, cfg.pipeline.canvas_padding);
  } else {
    OnlineStitcher st(*provider, cfg.pipeline);
    for (std::size_t t = 0; t < ref.size(); ++t) {
      if (auto f = st.push(ref[t], tgt[t])) frames.push_back(std::move(*f));
    }
    if (auto f = st.flush()) frames.push_back(std::move(*f));
    canvas = *st.canvas();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out(a.out);
  std::vector<Frame> images;
  std::vector<ControlGrid> meshes, raw_meshes;
  Trajectory raw(provider->shape()), smoothed(provider->shape());
  int warmup = 0, degraded = 0;
  for (auto& f : frames) {
    images.push_back(std::move(f.image));
    meshes.push_back(f.mesh);
    raw_meshes.push_back(f.raw_mesh);
    raw.push_back(f.raw_path);
    smoothed.push_back(f.path);
    warmup += f.warmup;
    degraded += f.degraded;
  }
  write_frames(out / "frames", images);
  write_file(out / "metadata.csv", [&](std::ostream& o) { write_metadata_csv(o, frames); });
  write_file(out / "meshes.csv", [&](std::ostream& o) { write_meshes_csv(o, meshes); });
  write_file(out / "raw_meshes.csv", [&](std::ostream& o) { write_meshes_csv(o, raw_meshes); });
  write_canvas(out / "canvas.txt", canvas, cfg.pipeline.render_node_step);
  if (a.dump) {
    write_file(out / "trajectory_raw.csv", [&](std::ostream& o) { write_trajectory_csv(o, raw); });
    write_file(out / "trajectory_smoothed.csv", [&](std::ostream& o) { write_trajectory_csv(o, smoothed); });
  }
  std::cout << "frames=" << frames.size() << "\nwarmup=" << warmup << "\ndegraded=" << degraded
            << "\nseconds=" << elapsed << '\n';
  return 0;
}

double measured_overlap(const GroundTruth& gt, double w, double h) {
  double total = 0.0;
  for (std::size_t t = 0; t < gt.ref_poses.size(); ++t) {
    std::size_t inside = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Point p = gt.ref_poses[t].from_latent(gt.tgt_poses[t].to_latent(Point(x, y), w, h), w, h);
        inside += p.x() >= 0 && p.y() >= 0 && p.x() <= w - 1 && p.y() <= h - 1;
      }
    total += inside / (w * h);
  }
  return total / gt.ref_poses.size();
}

int cmd_simulate(const std::string& config, std::uint64_t seed, const std::string& out_dir) {
  const AppConfig cfg = config_from(config);
  const Scene scene = generate_scene(cfg.scene, cfg.grid, seed);
  const fs::path out(out_dir);
  write_frames(out / "ref", scene.ref);
  write_frames(out / "tgt", scene.tgt);
  fs::create_directories(out / "truth");
  write_file(out / "truth" / "spatial.csv", [&](std::ostream& o) { write_meshes_csv(o, scene.truth.spatial); });
  write_file(out / "truth" / "temporal.csv", [&](std::ostream& o) { write_meshes_csv(o, scene.truth.temporal); });
  write_file(out / "truth" / "stitch.csv", [&](std::ostream& o) { write_trajectory_csv(o, scene.truth.stitch); });
  write_file(out / "scene.ini", [&](std::ostream& o) { write_config(o, cfg); });
  std::cout << "frames=" << scene.ref.size() << "\noverlap_spec=" << cfg.scene.overlap << "\noverlap_measured="
            << measured_overlap(scene.truth, cfg.scene.frame_width, cfg.scene.frame_height) << '\n';
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& ref_dir, const std::string& tgt_dir,
             const std::string& config) {
  const AppConfig cfg = config_from(config);
  const fs::path run(run_dir);
  const std::string stitch_hint = "re-run `vstitch stitch` to regenerate it";
  MetricsReport report;
  std::optional<double> raw_stability;

  const auto meshes = load_meshes(run / "meshes.csv", stitch_hint);
  const auto ref = read_frames(ref_dir);
  const auto tgt = read_frames(tgt_dir);
  if (ref.size() != tgt.size() || ref.size() != meshes.size()) {
    throw InvalidArgument("frame and mesh counts disagree; were the originals used for this run?");
  }
  const double w = ref.front().width(), h = ref.front().height();
  const auto [canvas, node_step] = read_canvas(run / "canvas.txt");
  const ControlGrid rigid = rigid_mesh(meshes.front().shape(), w, h);
  std::vector<Frame> ref_layers, tgt_layers;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    ref_layers.push_back(place_on_canvas(ref[t], canvas));
    tgt_layers.push_back(warp_frame(rigid, meshes[t], tgt[t], canvas, kernels::Exec::parallel, node_step));
  }
  report.alignment = alignment_score(ref_layers, tgt_layers);
  const std::vector<std::vector<ControlGrid>> videos{meshes};
  report.distortion = distortion_score(videos, w, h);

  const std::string dump_hint = "re-run `vstitch stitch` with --dump-trajectories";
  const int window = cfg.pipeline.smoothing.window;
  const auto& betas = cfg.pipeline.smoothing.betas;
  const fs::path raw_path = run / "trajectory_raw.csv", smoothed_path = run / "trajectory_smoothed.csv";
  if (!fs::exists(raw_path) || !fs::exists(smoothed_path)) {
    spdlog::warn("stability not reported: {} has no trajectory dumps; {}", run.string(), dump_hint);
  } else {
    const std::vector<Trajectory> smoothed{emitted(load_trajectory(smoothed_path, dump_hint), window)};
    const std::vector<Trajectory> raw{emitted(load_trajectory(raw_path, dump_hint), window)};
    try {
      report.stability = stability_score(smoothed, betas);
      raw_stability = stability_score(raw, betas);
    } catch (const UndefinedMetric& e) {
      spdlog::warn("stability not reported: {}", e.what());
    }
  }

  const auto emit_text = [&](std::ostream& o) {
    write_metrics_text(o, report);
    if (raw_stability) o << "stability_raw=" << *raw_stability << '\n';
  };
  emit_text(std::cout);
  write_file(run / "metrics.txt", emit_text);
  write_file(run / "metrics.csv", [&](std::ostream& o) {
    write_metrics_csv(o, report);
    if (raw_stability) o << "stability_raw," << *raw_stability << '\n';
  });
  return 0;
}

int cmd_plot(const std::string& raw_path, const std::string& smoothed_path, const std::string& out_dir,
             const std::vector<std::string>& points) {
  const Trajectory raw = load_trajectory(raw_path, "pass a trajectory CSV written by `vstitch stitch`");
  std::optional<Trajectory> smoothed;
  if (!smoothed_path.empty()) {
    smoothed = load_trajectory(smoothed_path, "pass a trajectory CSV written by `vstitch stitch`");
  }
  std::vector<std::pair<int, int>> which;
  for (const auto& p : points) {
    const auto comma = p.find(',');
    if (comma == std::string::npos) throw InvalidArgument("--point expects u,v");
    which.emplace_back(std::stoi(p.substr(0, comma)), std::stoi(p.substr(comma + 1)));
  }
  if (which.empty()) {
    for (int u = 0; u <= raw.shape().rows_u; ++u)
      for (int v = 0; v <= raw.shape().cols_v; ++v) which.emplace_back(u, v);
  }
  fs::create_directories(out_dir);
  for (const auto& [u, v] : which) {
    const std::string svg = control_point_svg(raw, smoothed ? &*smoothed : nullptr, u, v);
    write_file(fs::path(out_dir) / ("point_" + std::to_string(u) + "_" + std::to_string(v) + ".svg"),
               [&](std::ostream& o) { o << svg; });
  }
  std::cout << "plots=" << which.size() << '\n';
  return 0;
}

void set_log_level() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("VSTITCH_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"Two-stream video stitching with trajectory smoothing"};
  app.require_subcommand(1);

  StitchArgs sa;
  auto* stitch = app.add_subcommand("stitch", "Stitch two frame directories");
  stitch->add_option("--ref", sa.ref, "Reference frame directory")->required();
  stitch->add_option("--tgt", sa.tgt, "Target frame directory")->required();
  stitch->add_option("--out", sa.out, "Output directory")->required();
  stitch->add_option("--config", sa.config, "INI configuration");
  stitch->add_option("--mode", sa.mode, "online or offline")->check(CLI::IsMember({"online", "offline"}));
  stitch->add_option("--provider", sa.provider, "direct or oracle")->check(CLI::IsMember({"direct", "oracle"}));
  stitch->add_option("--truth", sa.truth, "Ground-truth directory for the oracle provider");
  stitch->add_flag("--dump-trajectories", sa.dump, "Write raw and smoothed trajectory CSVs");

  std::string sim_config, sim_out;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic video pair with ground truth");
  simulate->add_option("--config", sim_config, "INI configuration");
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--out", sim_out, "Output directory")->required();

  std::string ev_run, ev_ref, ev_tgt, ev_config;
  auto* eval = app.add_subcommand("eval", "Score a stitched run");
  eval->add_option("--run", ev_run, "Directory written by `stitch`")->required();
  eval->add_option("--ref", ev_ref, "Reference frame directory")->required();
  eval->add_option("--tgt", ev_tgt, "Target frame directory")->required();
  eval->add_option("--config", ev_config, "INI configuration used for the run");

  std::string pl_raw, pl_smoothed, pl_out;
  std::vector<std::string> pl_points;
  auto* plot = app.add_subcommand("plot", "Plot control-point trajectories as SVG");
  plot->add_option("--raw", pl_raw, "Raw trajectory CSV")->required();
  plot->add_option("--smoothed", pl_smoothed, "Smoothed trajectory CSV");
  plot->add_option("--out", pl_out, "Output directory")->required();
  plot->add_option("--point", pl_points, "Control point u,v (repeatable; default all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*stitch) return cmd_stitch(sa);
    if (*simulate) return cmd_simulate(sim_config, seed, sim_out);
    if (*eval) return cmd_eval(ev_run, ev_ref, ev_tgt, ev_config);
    if (*plot) return cmd_plot(pl_raw, pl_smoothed, pl_out, pl_points);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
