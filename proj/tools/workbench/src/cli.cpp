#include "defgrid/workbench/cli.hpp"

#include "defgrid/errors.hpp"
#include "defgrid/metrics.hpp"
#include "defgrid/workbench/logging.hpp"
#include "defgrid/workbench/pipeline.hpp"
#include "defgrid/workbench/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <optional>
#include <string>

namespace defgrid::workbench {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string image;
  std::string quads = "20x20";
  std::string variant = "alternating";
  std::size_t iters = 500;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::optional<double> step;
  double decay = 0.997;
  double max_offset = kDefaultMaxOffset;
  std::string flip_guard = "backtrack";
  double lambda_recons = LossWeights{}.lambda_recons;
  double lambda_area = LossWeights{}.lambda_area;
  double lambda_lap = LossWeights{}.lambda_lap;
  double delta = LossWeights{}.delta;
  int window = LossWeights{}.window_radius;
  std::string mean_mode = "soft-grad";
  std::string trace_energy;

  GridSpec grid() const {
    GridSpec spec = parse_quads(quads);
    spec.variant = parse_topology_variant(variant);
    return spec;
  }

  OptimizerConfig optimizer() const {
    OptimizerConfig c;
    c.iterations = iters;
    c.step_size = step;
    c.step_decay = decay;
    c.max_offset = max_offset;
    c.flip_guard = parse_flip_guard(flip_guard);
    c.seed = seed;
    c.weights.lambda_recons = lambda_recons;
    c.weights.lambda_area = lambda_area;
    c.weights.lambda_lap = lambda_lap;
    c.weights.delta = delta;
    c.weights.window_radius = window;
    c.weights.mean_mode = parse_mean_mode(mean_mode);
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_image = true) {
  if (needs_image) {
    cmd->add_option("--image", f.image, "Input image (PNG, PPM or PGM)")->required();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  }
  cmd->add_option("--quads", f.quads, "Grid size as RxC quads")->capture_default_str();
  cmd->add_option("--variant", f.variant, "alternating or center-fan")->capture_default_str();
  cmd->add_option("--iters", f.iters, "Optimizer iterations (0: uniform grid)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Run seed, recorded with the trace")->capture_default_str();
  cmd->add_option("--step", f.step, "First step size in px (default 0.1 x pitch)");
  cmd->add_option("--decay", f.decay, "Per-iteration step decay")->capture_default_str();
  cmd->add_option("--max-offset", f.max_offset, "Offset bound as a fraction of pitch")
      ->capture_default_str();
  cmd->add_option("--flip-guard", f.flip_guard, "backtrack or reject")->capture_default_str();
  cmd->add_option("--lambda-recons", f.lambda_recons)->capture_default_str();
  cmd->add_option("--lambda-area", f.lambda_area)->capture_default_str();
  cmd->add_option("--lambda-lap", f.lambda_lap)->capture_default_str();
  cmd->add_option("--delta", f.delta, "Soft-assignment temperature in px")->capture_default_str();
  cmd->add_option("--window", f.window, "Soft-assignment window radius in quads (-1: all)")
      ->capture_default_str();
  cmd->add_option("--mean-mode", f.mean_mode, "soft-grad or stop-grad")->capture_default_str();
  cmd->add_option("--trace-energy", f.trace_energy, "Write per-iteration energies (JSON lines)");
}

OptimizationTrace fit(const FeatureMap& features, const CommonFlags& f) {
  OptimizationTrace trace = fit_grid(features, f.grid(), f.optimizer());
  if (!f.trace_energy.empty()) write_text(f.trace_energy, trace_to_jsonl(trace.records));
  const auto& last = trace.records.back();
  spdlog::info("optimized {} iterations: l_total {} -> {}", f.iters, trace.records.front().l_total,
               last.l_total);
  return trace;
}

Image load_image(const std::string& path) {
  Image img = read_image(path);
  check_image_limits(img);
  return img;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument(fmt::format("cannot create '{}': {}", out, ec.message()));
  return dir;
}

struct PartitionFlags {
  std::size_t superpixels = 36;
  std::optional<double> threshold;
  std::string averaging = "arithmetic";
  double sigma = kDefaultAffinitySigma;
  std::string gt;
  bool overlay = false;
};

int cmd_partition(const CommonFlags& f, const PartitionFlags& p, std::ostream& out) {
  const Image image = load_image(f.image);
  PartitionRequest request;
  request.grid = f.grid();
  request.optimizer = f.optimizer();
  request.superpixels = p.superpixels;
  request.threshold = p.threshold;
  request.averaging = parse_affinity_averaging(p.averaging);
  request.sigma = p.sigma;
  std::optional<Image> gt;
  if (!p.gt.empty()) gt = read_image(p.gt);
  const auto dir = prepare_out(f.out);
  const PartitionOutput result =
      run_partition(image, request, gt, fs::path(f.image).filename().string());
  if (!f.trace_energy.empty()) write_text(f.trace_energy, trace_to_jsonl(result.trace.records));
  if (result.target_exceeded) {
    spdlog::warn("target {} exceeds the {} grid cells; returning one cluster per cell",
                 p.superpixels, result.partition.cell_cluster.size());
  }
  write_text(dir / "grid.json", result.grid_json);
  write_bytes(dir / "labels.pgm", result.labels_pgm);
  if (result.metrics) {
    const MetricsRow row = *result.metrics;
    write_text(dir / "metrics.csv", metrics_to_csv(std::span(&row, 1)));
    out << fmt::format("asa={:.6f} bp={:.6f} br={:.6f} f={:.6f}\n", row.asa, row.bp, row.br,
                       row.f);
  }
  if (p.overlay) {
    write_bytes(dir / "overlay.png",
                encode_png(boundary_overlay(image, result.partition.segmentation)));
  }
  out << fmt::format("{} superpixels -> {}\n", result.partition.cluster_count, dir.string());
  return 0;
}

struct TraceFlags {
  std::string mask;
  std::string seeds;
  std::string gt;
  std::size_t snap_k = kDefaultSnapK;
  std::size_t seed_count = kDefaultSeedCount;
  double edge_threshold = 0.1;
  std::size_t tolerance = 1;
};

int cmd_trace(const CommonFlags& f, const TraceFlags& t, std::ostream& out) {
  if (t.mask.empty() && t.seeds.empty()) {
    throw InvalidArgument("trace needs --mask, --seeds or both");
  }
  const Image image = load_image(f.image);
  const FeatureMap features = image_to_features(image);
  const std::size_t w = image.width;
  const std::size_t h = image.height;

  std::optional<std::vector<std::uint8_t>> mask;
  if (!t.mask.empty()) {
    const Image m = read_image(t.mask);
    if (m.width != w || m.height != h) throw DimensionMismatch("mask does not match image");
    mask = image_to_mask(m);
  }
  const EnergyMap energy =
      mask ? distance_transform(*mask, w, h) : image_edge_energy(features, t.edge_threshold);
  const std::vector<Vec2> seeds = !t.seeds.empty()
                                      ? seeds_from_json(read_text(t.seeds))
                                      : sample_seed_points(*mask, w, h, t.seed_count);

  const auto dir = prepare_out(f.out);
  const OptimizationTrace trace = fit(features, f);
  const TraceOutput traced = trace_on_grid(trace.final_grid, energy, seeds, t.snap_k);
  write_text(dir / "grid.json", grid_to_json(trace.final_grid));
  write_text(dir / "polygon.json", traced.polygon_json);
  write_bytes(dir / "mask.png", traced.mask_png);
  if (!t.gt.empty()) {
    const Image g = read_image(t.gt);
    if (g.width != w || g.height != h) throw DimensionMismatch("ground truth does not match image");
    const auto gt = image_to_mask(g);
    const auto score = mask_boundary_f(traced.polygon.mask, gt, w, h, t.tolerance);
    out << fmt::format("miou={:.6f} f={:.6f}\n", metric_miou(traced.polygon.mask, gt), score.f);
  }
  out << fmt::format("polygon with {} vertices, energy {:.6f} -> {}\n",
                     traced.polygon.vertices.size(), traced.polygon.energy, dir.string());
  return 0;
}

int cmd_pool(const CommonFlags& f, const std::string& mode, std::ostream& out) {
  const Image image = load_image(f.image);
  const FeatureMap features = image_to_features(image);
  const PoolMode pool_mode = parse_pool_mode(mode);
  const auto dir = prepare_out(f.out);
  const OptimizationTrace trace = fit(features, f);
  const PoolOutput pooled = run_pool(trace.final_grid, features, pool_mode);
  write_text(dir / "grid.json", grid_to_json(trace.final_grid));
  write_bytes(dir / "cells.bin", pooled.cells_bin);
  write_bytes(dir / "reconstruction.png", pooled.reconstruction_png);
  out << fmt::format("{} cells x {} channels ({}), psnr {:.3f} dB -> {}\n",
                     pooled.cells.cell_count(), pooled.cells.channels, mode,
                     psnr(features_to_image(features), pooled.reconstruction), dir.string());
  return 0;
}

int cmd_serve(const CommonFlags& f, const std::string& host, int port, std::ostream& out) {
  ServiceOptions options;
  options.grid = f.grid();
  options.optimizer = f.optimizer();
  Service service(options);
  if (port == 0) {
    port = service.bind_any(host);
    if (port < 0) throw InvalidArgument(fmt::format("cannot bind {}", host));
    out << fmt::format("listening on http://{}:{}\n", host, port) << std::flush;
    return service.serve() ? 0 : 2;
  }
  out << fmt::format("listening on http://{}:{}\n", host, port) << std::flush;
  if (!service.listen(host, port)) throw InvalidArgument(fmt::format("cannot listen on {}:{}", host, port));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"Deformable triangular grids: superpixels, pooling and boundary tracing"};
  app.require_subcommand(1);

  CommonFlags partition_flags;
  PartitionFlags partition;
  auto* partition_cmd = app.add_subcommand("partition", "Grid-based superpixel partition");
  add_common(partition_cmd, partition_flags);
  partition_cmd->add_option("--superpixels", partition.superpixels, "Target cluster count")
      ->capture_default_str();
  partition_cmd->add_option("--threshold", partition.threshold,
                            "Stop merging below this affinity");
  partition_cmd->add_option("--averaging", partition.averaging, "arithmetic or pixel-weighted")
      ->capture_default_str();
  partition_cmd->add_option("--sigma", partition.sigma, "Affinity kernel width (RGB in [0,1])")
      ->capture_default_str();
  partition_cmd->add_option("--gt", partition.gt, "Ground-truth label map; writes metrics.csv");
  partition_cmd->add_flag("--overlay", partition.overlay, "Also write overlay.png");

  CommonFlags trace_flags;
  TraceFlags trace;
  auto* trace_cmd = app.add_subcommand("trace", "Minimal-energy object boundary on the grid");
  add_common(trace_cmd, trace_flags);
  trace_cmd->add_option("--mask", trace.mask, "Object mask: energy source and automatic seeds");
  trace_cmd->add_option("--seeds", trace.seeds, "Seed points JSON [[x,y],...]");
  trace_cmd->add_option("--gt", trace.gt, "Ground-truth mask; prints mIoU and boundary F");
  trace_cmd->add_option("--snap-k", trace.snap_k, "Candidate vertices per seed")
      ->capture_default_str();
  trace_cmd->add_option("--seed-count", trace.seed_count, "Seeds sampled from --mask")
      ->capture_default_str();
  trace_cmd->add_option("--edge-threshold", trace.edge_threshold,
                        "Colour step marking image edges when no mask is given")
      ->capture_default_str();
  trace_cmd->add_option("--tolerance", trace.tolerance, "Boundary F tolerance in px")
      ->capture_default_str();

  CommonFlags pool_flags;
  std::string pool_mode = "mean";
  auto* pool_cmd = app.add_subcommand("pool", "Pool pixels into grid cells and paste back");
  add_common(pool_cmd, pool_flags);
  pool_cmd->add_option("--mode", pool_mode, "mean or max")->capture_default_str();

  CommonFlags serve_flags;
  serve_flags.iters = 0;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP backend for the annotator");
  add_common(serve_cmd, serve_flags, false);
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port, "0 picks a free port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*partition_cmd) return cmd_partition(partition_flags, partition, out);
    if (*trace_cmd) return cmd_trace(trace_flags, trace, out);
    if (*pool_cmd) return cmd_pool(pool_flags, pool_mode, out);
    if (*serve_cmd) return cmd_serve(serve_flags, host, port, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return is_user_error(e) ? 1 : 2;
  }
  return 2;
}

}  // namespace defgrid::workbench
