// SPDX-License-Identifier: Apache-2.0
//
// defly: detects and corrects flying pixels in ToF RGB-D captures.
// Subcommands: detect, correct, inject, compare. Exit codes: 0 success,
// 2 I/O error, 3 validation error, 4 internal error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "defly/baselines.hpp"
#include "defly/correct.hpp"
#include "defly/detect.hpp"
#include "defly/eval.hpp"
#include "defly/geometry.hpp"
#include "defly/io.hpp"
#include "defly/synth.hpp"

namespace {

using defly::IoError;
using defly::ValidationError;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

class Manifest {
 public:
  explicit Manifest(const std::string& subcommand)
      : start_(std::chrono::steady_clock::now()) {
    j_["tool"] = "defly";
    j_["tool_version"] = kVersion;
    j_["subcommand"] = subcommand;
  }

  json& parameters() { return j_["parameters"]; }
  json& inputs() { return j_["inputs"]; }
  json& outputs() { return j_["outputs"]; }
  void set_seed(uint64_t seed) { j_["seed"] = seed; }

  /// Writes `anchor + ".manifest.json"` next to the run's primary output.
  void write(const std::string& anchor) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    j_["duration_seconds"] =
        std::chrono::duration<double>(elapsed).count();
    const std::string path = anchor + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j_.dump(2) << "\n";
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

// PNG files carry integers scaled by the intrinsics' depth_scale; PFM files
// store depths directly in depth units.
double scale_for(const std::string& path, double png_scale) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".pfm") == 0
             ? 1.0
             : png_scale;
}

std::string path_stem(const std::string& path) {
  const size_t slash = path.find_last_of("/\\");
  const size_t start = slash == std::string::npos ? 0 : slash + 1;
  const size_t dot = path.find_last_of('.');
  const size_t end = (dot == std::string::npos || dot < start) ? path.size() : dot;
  return path.substr(start, end - start);
}

struct CommonParams {
  int ws = 5;
  double tau = 5.0;
  double sigma_c = 0.1;
  double sigma_s = 0.3;
  double epsilon = 5.0;
  int iterations = 3;
  uint64_t seed = 0;

  void add_flags(CLI::App* cmd, bool with_correction) {
    cmd->add_option("--ws", ws, "SAD / filter window size (odd)")
        ->capture_default_str();
    cmd->add_option("--tau", tau, "outlier percentile in (0, 100)")
        ->capture_default_str();
    if (with_correction) {
      cmd->add_option("--sigma-c", sigma_c, "color standard deviation")
          ->capture_default_str();
      cmd->add_option("--sigma-s", sigma_s,
                      "spatial standard deviation (bilateral)")
          ->capture_default_str();
      cmd->add_option("--epsilon", epsilon, "pixel-FoV scale factor (>= 1)")
          ->capture_default_str();
      cmd->add_option("--iterations", iterations,
                      "correction passes (proposed method)")
          ->capture_default_str();
      cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    }
  }

  defly::CorrectionConfig config(defly::Method method) const {
    return defly::CorrectionConfig(ws, tau, sigma_c, sigma_s, epsilon,
                                   iterations, method, seed);
  }

  json to_json() const {
    return json{{"ws", ws},          {"tau", tau},
                {"sigma_c", sigma_c}, {"sigma_s", sigma_s},
                {"epsilon", epsilon}, {"iterations", iterations},
                {"seed", seed}};
  }
};

void print_iteration(const defly::IterationReport& r) {
  std::printf("iteration %d: candidates=%d corrected=%d skipped=%d "
              "mean|t*|=%.6g\n",
              r.iteration, r.candidate_count, r.corrected_count,
              r.skipped_count, r.mean_abs_t);
}

int run_detect(const std::string& depth_path, const std::string& intr_path,
               const CommonParams& params, const std::string& out_scores,
               const std::string& out_mask) {
  Manifest manifest("detect");
  const defly::IntrinsicsFile intr = defly::load_intrinsics(intr_path);
  const defly::DepthImage depth = defly::load_depth(
      depth_path, scale_for(depth_path, intr.depth_scale), intr.depth_unit);
  if (depth.width() != intr.intrinsics.width() ||
      depth.height() != intr.intrinsics.height()) {
    throw ValidationError("depth dimensions do not match intrinsics");
  }

  const defly::CandidateSet candidates =
      defly::detect_candidates(depth, params.ws, params.tau);
  std::printf("candidates: %d\n", candidates.count());

  if (!out_scores.empty()) {
    defly::save_pfm(candidates.scores(), depth.width(), depth.height(),
                    out_scores);
  }
  defly::save_mask_png(candidates.mask(), depth.width(), depth.height(),
                       out_mask);

  manifest.parameters() = {{"ws", params.ws}, {"tau", params.tau}};
  manifest.inputs() = {{"depth", depth_path}, {"intrinsics", intr_path}};
  manifest.outputs() = {{"mask", out_mask}};
  if (!out_scores.empty()) manifest.outputs()["scores"] = out_scores;
  manifest.write(out_mask);
  return 0;
}

int run_correct(const std::string& depth_path, const std::string& rgb_path,
                const std::string& intr_path, const std::string& method_name,
                const CommonParams& params, const std::string& out_depth,
                const std::string& out_ply, bool ply_ascii) {
  Manifest manifest("correct");
  const defly::Method method = defly::method_from_name(method_name);
  const defly::IntrinsicsFile intr = defly::load_intrinsics(intr_path);
  const defly::DepthImage depth = defly::load_depth(
      depth_path, scale_for(depth_path, intr.depth_scale), intr.depth_unit);
  const defly::ColorImage rgb = defly::load_rgb(rgb_path);
  const int scale = defly::validate_pair(depth, rgb, intr.intrinsics);
  const defly::CorrectionConfig config = params.config(method);

  defly::DepthImage corrected = depth;
  if (method == defly::Method::kProposed) {
    auto [result, reports] =
        defly::run_pipeline(depth, rgb, intr.intrinsics, config);
    corrected = std::move(result);
    for (const auto& r : reports) print_iteration(r);
  } else {
    // Baselines are single-pass filters over one shared candidate set.
    const defly::CandidateSet candidates =
        defly::detect_candidates(depth, config.ws(), config.tau_percent());
    std::printf("candidates: %d\n", candidates.count());
    corrected = method == defly::Method::kNeighborDistance
                    ? defly::neighbor_distance_correct(depth, candidates,
                                                       config.ws())
                    : defly::joint_bilateral_correct(
                          depth, rgb, scale, candidates, config.ws(),
                          config.sigma_spatial(), config.sigma_color());
  }

  defly::save_depth_png(corrected, out_depth, intr.depth_scale);
  if (!out_ply.empty()) {
    const defly::OrganizedCloud cloud =
        defly::build_cloud(corrected, intr.intrinsics);
    defly::export_ply(cloud, rgb, out_ply,
                      ply_ascii ? defly::PlyFormat::kAscii
                                : defly::PlyFormat::kBinaryLittleEndian);
  }

  manifest.parameters() = params.to_json();
  manifest.parameters()["method"] = method_name;
  manifest.inputs() = {{"depth", depth_path},
                       {"rgb", rgb_path},
                       {"intrinsics", intr_path}};
  manifest.outputs() = {{"depth", out_depth}};
  if (!out_ply.empty()) manifest.outputs()["ply"] = out_ply;
  manifest.set_seed(params.seed);
  manifest.write(out_depth);
  return 0;
}

int run_inject(const std::string& depth_path, const std::string& edges_path,
               double fraction, int ws, uint64_t seed, double depth_scale,
               const std::string& out_prefix) {
  Manifest manifest("inject");
  const defly::DepthImage depth = defly::load_depth(
      depth_path, scale_for(depth_path, depth_scale));
  const std::vector<uint8_t> edges =
      defly::load_mask_png(edges_path, depth.width(), depth.height());

  auto [corrupted, record] =
      defly::inject_flying_pixels(depth, edges, fraction, ws, seed);
  std::printf("injected %d flying pixels\n", record.count());

  const std::string depth_out = out_prefix + "_depth.png";
  const std::string mask_out = out_prefix + "_mask.png";
  const std::string record_out = out_prefix + "_record.json";
  defly::save_depth_png(corrupted, depth_out, depth_scale);
  defly::save_mask_png(record.fp_mask, record.width, record.height, mask_out);
  defly::save_injection_record(record, record_out);

  manifest.parameters() = {{"fraction", fraction},
                           {"ws", ws},
                           {"depth_scale", depth_scale}};
  manifest.inputs() = {{"depth", depth_path}, {"edges", edges_path}};
  manifest.outputs() = {{"depth", depth_out},
                        {"mask", mask_out},
                        {"record", record_out}};
  manifest.set_seed(seed);
  manifest.write(out_prefix);
  return 0;
}

int run_compare(const std::string& gt_path, const std::string& rgb_path,
                const std::string& intr_path, const std::string& corrupted_path,
                const std::string& fp_mask_path, const std::string& edges_path,
                double fraction, int inject_ws, const CommonParams& params,
                const std::string& methods_csv, const std::string& out_report,
                const std::string& out_dir, bool ply, std::string scene) {
  Manifest manifest("compare");
  const defly::IntrinsicsFile intr = defly::load_intrinsics(intr_path);
  const defly::DepthImage gt = defly::load_depth(
      gt_path, scale_for(gt_path, intr.depth_scale), intr.depth_unit);
  const defly::ColorImage rgb = defly::load_rgb(rgb_path);
  defly::validate_pair(gt, rgb, intr.intrinsics);

  const bool have_corrupted = !corrupted_path.empty();
  const bool have_edges = !edges_path.empty();
  if (have_corrupted == have_edges) {
    throw ValidationError(
        "pass exactly one corruption source: --corrupted/--fp-mask or --edges");
  }

  std::optional<defly::DepthImage> corrupted;
  std::vector<uint8_t> fp_mask;
  if (have_corrupted) {
    if (fp_mask_path.empty()) {
      throw ValidationError("--corrupted requires --fp-mask");
    }
    corrupted = defly::load_depth(
        corrupted_path, scale_for(corrupted_path, intr.depth_scale),
        intr.depth_unit);
    fp_mask = defly::load_mask_png(fp_mask_path, gt.width(), gt.height());
  } else {
    const std::vector<uint8_t> edges =
        defly::load_mask_png(edges_path, gt.width(), gt.height());
    auto [img, record] = defly::inject_flying_pixels(
        gt, edges, fraction, inject_ws > 0 ? inject_ws : params.ws,
        params.seed);
    corrupted = std::move(img);
    fp_mask = record.fp_mask;
    std::printf("injected %d flying pixels\n", record.count());
  }

  std::vector<defly::Method> methods;
  {
    std::string token;
    std::stringstream ss(methods_csv);
    while (std::getline(ss, token, ',')) {
      if (!token.empty() && token != "native") {
        methods.push_back(defly::method_from_name(token));
      }
    }
  }

  if (scene.empty()) scene = path_stem(gt_path);
  const defly::CorrectionConfig config = params.config(defly::Method::kProposed);
  const defly::EvalReport report = defly::evaluate_methods(
      gt, *corrupted, rgb, intr.intrinsics, fp_mask, config, scene, methods);
  defly::write_report(report, out_report);

  std::printf("%-18s %12s %12s %12s %12s\n", "method", "rmse_all", "mae_all",
              "rmse_fp", "mae_fp");
  for (const defly::MethodResult& m : report.methods) {
    std::printf("%-18s %12.6g %12.6g %12.6g %12.6g\n", m.method.c_str(),
                m.rmse_all, m.mae_all, m.rmse_fp.value_or(std::nan("")),
                m.mae_fp.value_or(std::nan("")));
  }
  for (const auto& r : report.proposed_iterations) print_iteration(r);

  json artifact_paths = json::object();
  if (!out_dir.empty()) {
    const std::string dir = out_dir + "/";
    defly::save_depth_png(*corrupted, dir + "corrupted.png", intr.depth_scale);
    defly::save_mask_png(fp_mask, gt.width(), gt.height(),
                         dir + "fp_mask.png");
    artifact_paths["corrupted"] = dir + "corrupted.png";
    artifact_paths["fp_mask"] = dir + "fp_mask.png";
    for (size_t i = 0; i < report.methods.size(); ++i) {
      const std::string name = report.methods[i].method;
      const std::string depth_out = dir + name + ".png";
      defly::save_depth_png(report.corrected_maps[i], depth_out,
                            intr.depth_scale);
      artifact_paths[name] = depth_out;
      if (ply) {
        const defly::OrganizedCloud cloud =
            defly::build_cloud(report.corrected_maps[i], intr.intrinsics);
        defly::export_ply(cloud, rgb, dir + name + ".ply");
      }
    }
  }

  const std::string base =
      out_report.size() > 4 &&
              (out_report.ends_with(".csv") || out_report.ends_with(".json"))
          ? out_report.substr(0, out_report.find_last_of('.'))
          : out_report;
  manifest.parameters() = params.to_json();
  manifest.parameters()["methods"] = methods_csv;
  manifest.parameters()["fraction"] = fraction;
  manifest.inputs() = {{"gt", gt_path},
                       {"rgb", rgb_path},
                       {"intrinsics", intr_path}};
  if (have_corrupted) {
    manifest.inputs()["corrupted"] = corrupted_path;
    manifest.inputs()["fp_mask"] = fp_mask_path;
  } else {
    manifest.inputs()["edges"] = edges_path;
  }
  manifest.outputs() = {{"report_csv", base + ".csv"},
                        {"report_json", base + ".json"}};
  if (!out_dir.empty()) manifest.outputs()["artifacts"] = artifact_paths;
  manifest.set_seed(params.seed);
  manifest.write(base);
  return 0;
}

int run_app(int argc, char** argv) {
  CLI::App app{"defly: flying-pixel correction for ToF RGB-D depth maps"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand(
      "detect", "score depth pixels and flag flying-pixel candidates");
  std::string d_depth, d_intr, d_scores, d_mask;
  CommonParams d_params;
  detect->add_option("--depth", d_depth, "depth map (.png or .pfm)")
      ->required();
  detect->add_option("--intrinsics", d_intr, "intrinsics JSON")->required();
  d_params.add_flags(detect, false);
  detect->add_option("--out-scores", d_scores, "score map output (.pfm)");
  detect->add_option("--out-mask", d_mask, "candidate mask output (.png)")
      ->required();

  // correct
  auto* correct = app.add_subcommand(
      "correct", "correct flying pixels with the selected method");
  std::string c_depth, c_rgb, c_intr, c_method = "proposed", c_out, c_ply;
  bool c_ply_ascii = false;
  CommonParams c_params;
  correct->add_option("--depth", c_depth, "depth map (.png or .pfm)")
      ->required();
  correct->add_option("--rgb", c_rgb, "aligned RGB image (.png)")->required();
  correct->add_option("--intrinsics", c_intr, "intrinsics JSON")->required();
  correct
      ->add_option("--method", c_method,
                   "proposed | neighbor-distance | bilateral")
      ->capture_default_str();
  c_params.add_flags(correct, true);
  correct->add_option("--out-depth", c_out, "corrected depth output (.png)")
      ->required();
  correct->add_option("--out-ply", c_ply, "corrected point cloud (.ply)");
  correct->add_flag("--ply-ascii", c_ply_ascii, "write ASCII PLY");

  // inject
  auto* inject = app.add_subcommand(
      "inject", "corrupt a clean depth map with synthetic flying pixels");
  std::string i_depth, i_edges, i_out;
  double i_fraction = 0.3, i_scale = 0.001;
  int i_ws = 5;
  uint64_t i_seed = 0;
  inject->add_option("--depth", i_depth, "clean depth map (.png or .pfm)")
      ->required();
  inject->add_option("--edges", i_edges, "edge map (.png)")->required();
  inject->add_option("--fraction", i_fraction, "fraction of edge pixels")
      ->capture_default_str();
  inject->add_option("--ws", i_ws, "min/max window size")->capture_default_str();
  inject->add_option("--seed", i_seed, "RNG seed")->capture_default_str();
  inject
      ->add_option("--depth-scale", i_scale,
                   "integer-to-unit factor for PNG depth files")
      ->capture_default_str();
  inject->add_option("--out", i_out, "output prefix")->required();

  // compare
  auto* compare = app.add_subcommand(
      "compare", "run all correction methods and report metrics");
  std::string m_gt, m_rgb, m_intr, m_corrupted, m_fp_mask, m_edges;
  std::string m_methods = "neighbor-distance,bilateral,proposed";
  std::string m_report, m_dir, m_scene;
  double m_fraction = 0.3;
  int m_inject_ws = 0;
  bool m_ply = false;
  CommonParams m_params;
  compare->add_option("--gt", m_gt, "ground-truth depth (.png or .pfm)")
      ->required();
  compare->add_option("--rgb", m_rgb, "aligned RGB image (.png)")->required();
  compare->add_option("--intrinsics", m_intr, "intrinsics JSON")->required();
  compare->add_option("--corrupted", m_corrupted,
                      "corrupted depth map (.png or .pfm)");
  compare->add_option("--fp-mask", m_fp_mask, "flying-pixel mask (.png)");
  compare->add_option("--edges", m_edges,
                      "edge map; inject synthetic FPs in-process");
  compare->add_option("--fraction", m_fraction, "injected fraction")
      ->capture_default_str();
  compare->add_option("--inject-ws", m_inject_ws,
                      "injection window (defaults to --ws)");
  m_params.add_flags(compare, true);
  compare->add_option("--methods", m_methods, "comma list of methods to run")
      ->capture_default_str();
  compare->add_option("--out-report", m_report, "report base path")
      ->required();
  compare->add_option("--out-dir", m_dir, "directory for corrected maps");
  compare->add_flag("--ply", m_ply, "also export per-method PLY clouds");
  compare->add_option("--scene", m_scene, "scene label in the report");

  try {
    app.parse(argc, argv);
    if (detect->parsed()) {
      return run_detect(d_depth, d_intr, d_params, d_scores, d_mask);
    }
    if (correct->parsed()) {
      return run_correct(c_depth, c_rgb, c_intr, c_method, c_params, c_out,
                         c_ply, c_ply_ascii);
    }
    if (inject->parsed()) {
      return run_inject(i_depth, i_edges, i_fraction, i_ws, i_seed, i_scale,
                        i_out);
    }
    if (compare->parsed()) {
      return run_compare(m_gt, m_rgb, m_intr, m_corrupted, m_fp_mask, m_edges,
                         m_fraction, m_inject_ws, m_params, m_methods,
                         m_report, m_dir, m_ply, m_scene);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;  // help/version exit 0; bad usage exits 3
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (...) {
    std::fprintf(stderr, "internal error\n");
    return 4;
  }
}
