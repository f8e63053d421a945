#include "commands.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "maskval/ply_io.h"
#include "maskval/renderer.h"
#include "maskval/scene_io.h"

namespace maskval::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. If any call throws, the
// exception of the lowest failing index is rethrown after all workers finish.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string FormatDouble(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : "nan";
}

json OptionalJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError(kExitData, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (out) out << content;
  if (!out) throw CommandError(kExitUsage, "cannot write " + path.string());
}

std::string Sha256Hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

void EnsureOutputDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw CommandError(kExitUsage,
                       "cannot create output directory " + dir.string());
  }
}

std::vector<fs::path> ListScenes(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw CommandError(kExitUsage, "input directory " + dir.string() +
                                       " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    const std::string name = p.filename().string();
    if (name == kManifestFile || name == kSummaryFile) continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<SceneRecord> LoadScenes(const std::vector<fs::path>& files,
                                    int jobs) {
  std::vector<SceneRecord> scenes(files.size());
  try {
    ParallelFor(files.size(), jobs,
                [&](std::size_t i) { scenes[i] = ParseScene(ReadFile(files[i])); });
  } catch (const SceneFormatError& e) {
    throw CommandError(kExitData, e.what());
  }
  return scenes;
}

fs::path ResolveModelDir(const std::optional<fs::path>& flag,
                         const fs::path& input) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kModelDirEnv); env && *env) return env;
  return input / "models";
}

std::map<std::string, TriangleMesh> LoadModels(
    const fs::path& dir, const std::set<std::string>& classes) {
  std::map<std::string, TriangleMesh> models;
  for (const auto& cls : classes) {
    const fs::path path = dir / (cls + ".ply");
    if (!fs::is_regular_file(path)) {
      throw CommandError(kExitUsage, "no model for class '" + cls +
                                         "' (expected " + path.string() + ")");
    }
    try {
      models[cls] = LoadMesh(path);
    } catch (const PlyParseError& e) {
      throw CommandError(kExitData, e.what());
    }
  }
  return models;
}

std::set<std::string> ClassesOf(const std::vector<SceneRecord>& scenes) {
  std::set<std::string> classes;
  for (const auto& s : scenes) {
    for (const auto& g : s.ground_truth) classes.insert(g.class_name);
    for (const auto& [name, list] : s.estimates) {
      for (const auto& e : list) classes.insert(e.class_name);
    }
  }
  return classes;
}

json CameraJson(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

json SpecJson(const PerturbationSpec& s) {
  return {{"translation_sigma", s.translation_sigma},
          {"rotation_sigma", s.rotation_sigma_deg},
          {"outlier_probability", s.outlier_probability},
          {"outlier_translation", s.outlier_translation},
          {"mask_radius", s.mask_radius},
          {"mask_dropout", s.mask_dropout},
          {"noise_scale_spread", s.noise_scale_spread}};
}

// Writes `files` (name -> content) into `dir` plus a manifest listing their
// checksums alongside `header`.
void WriteWithManifest(const fs::path& dir,
                       const std::vector<std::pair<std::string, std::string>>& files,
                       json header) {
  json listing = json::array();
  for (const auto& [name, content] : files) {
    const fs::path path = dir / name;
    if (path.has_parent_path()) EnsureOutputDir(path.parent_path());
    WriteFile(path, content);
    listing.push_back({{"name", name}, {"sha256", Sha256Hex(content)}});
  }
  header["files"] = listing;
  WriteFile(dir / kManifestFile, header.dump(2) + "\n");
}

// Copies every .ply of `models_dir` into `dir`/models unless they coincide.
std::vector<std::pair<std::string, std::string>> ModelFiles(
    const fs::path& models_dir, const std::set<std::string>& classes) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& cls : classes) {
    files.emplace_back("models/" + cls + ".ply",
                       ReadFile(models_dir / (cls + ".ply")));
  }
  return files;
}

std::optional<double> MethodUncertainty(const PoseEstimate& e,
                                        const std::string& method) {
  if (method == kMaskValMethod) {
    if (e.maskval) return e.maskval->uncertainty;
  } else if (e.ensemble_add) {
    return e.ensemble_add->uncertainty;
  }
  return std::nullopt;
}

void CheckMethod(const std::string& method) {
  if (method != kMaskValMethod && method != kEnsembleMethod) {
    throw CommandError(kExitUsage, "unknown method '" + method +
                                       "' (expected maskval or ensemble-add)");
  }
}

struct LoadedSet {
  std::vector<SceneRecord> scenes;
  std::vector<AssociatedImage> images;
  std::size_t estimates = 0;
  std::size_t ground_truth = 0;
};

LoadedSet LoadEvaluationSet(const fs::path& input,
                            const std::optional<fs::path>& model_flag,
                            const std::string& method, int jobs) {
  CheckMethod(method);
  LoadedSet set;
  set.scenes = LoadScenes(ListScenes(input), jobs);
  if (set.scenes.empty()) {
    throw CommandError(kExitUsage, "no scene files in " + input.string());
  }
  const auto meshes =
      LoadModels(ResolveModelDir(model_flag, input), ClassesOf(set.scenes));
  std::map<std::string, ModelPoints> models;
  for (const auto& [cls, mesh] : meshes) models[cls] = VertexPoints(mesh);

  set.images.resize(set.scenes.size());
  for (std::size_t n = 0; n < set.scenes.size(); ++n) {
    const SceneRecord& scene = set.scenes[n];
    std::vector<ScoredEstimate> scored;
    if (const auto* stream = scene.Stream(kPrimaryStream)) {
      for (std::size_t i = 0; i < stream->size(); ++i) {
        const PoseEstimate& e = (*stream)[i];
        const auto u = MethodUncertainty(e, method);
        if (!u) {
          throw CommandError(kExitUsage,
                             "scene " + scene.image_id + " estimate " +
                                 std::to_string(i) + " has no '" + method +
                                 "' uncertainty; run quantify first");
        }
        scored.push_back({e.pose, e.class_name, *u, e.instance_id});
      }
    }
    set.estimates += scored.size();
    set.ground_truth += scene.ground_truth.size();
    set.images[n] = AssociateImage(scored, scene.ground_truth, models);
  }
  if (set.estimates == 0) {
    throw CommandError(kExitUsage, "no pose estimates to evaluate");
  }
  return set;
}

void ValidateEvalParams(double ap_target, double theta_v) {
  if (!(ap_target > 0.0 && ap_target <= 1.0)) {
    throw CommandError(kExitUsage, "ap_target must lie in (0, 1]");
  }
  if (!(theta_v >= 0.0 && theta_v <= 1.0)) {
    throw CommandError(kExitUsage, "theta_v must lie in [0, 1]");
  }
}

template <typename Fn>
int Guarded(std::ostream& err, Fn fn) {
  try {
    return fn();
  } catch (const CommandError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

int RunGenerate(const GenerateOptions& options, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    GeneratorConfig config = options.generator;
    if (!(options.secondary_scale >= 0.0)) {
      throw CommandError(kExitUsage, "secondary_scale must be >= 0");
    }
    if (options.secondary_scale > 0.0) {
      config.secondary = config.primary.Scaled(options.secondary_scale);
    } else {
      config.secondary.reset();
    }
    try {
      config.Validate();
      options.camera.Validate();
    } catch (const std::invalid_argument& e) {
      throw CommandError(kExitUsage, e.what());
    }

    std::map<std::string, TriangleMesh> models;
    if (options.models) {
      if (!fs::is_directory(*options.models)) {
        throw CommandError(kExitUsage, "model directory " +
                                           options.models->string() +
                                           " does not exist");
      }
      std::set<std::string> classes;
      for (const auto& entry : fs::directory_iterator(*options.models)) {
        if (entry.path().extension() == ".ply") {
          classes.insert(entry.path().stem().string());
        }
      }
      models = LoadModels(*options.models, classes);
      if (models.empty()) {
        throw CommandError(kExitUsage, "no .ply models in " +
                                           options.models->string());
      }
    } else {
      models = BuiltinModels();
    }

    EnsureOutputDir(options.output);
    std::vector<std::string> scene_text(config.n_images);
    ParallelFor(config.n_images, options.jobs, [&](std::size_t i) {
      scene_text[i] =
          FormatScene(GenerateScene(models, options.camera, config, i));
    });

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& [cls, mesh] : models) {
      files.emplace_back("models/" + cls + ".ply", FormatPly(mesh));
    }
    for (int i = 0; i < config.n_images; ++i) {
      char name[40];
      std::snprintf(name, sizeof(name), "scene_%06d.json", i);
      files.emplace_back(name, std::move(scene_text[i]));
    }
    json header{{"command", "generate"},
                {"seed", config.seed},
                {"n_images", config.n_images},
                {"min_objects", config.min_objects},
                {"max_objects", config.max_objects},
                {"min_depth", config.min_depth},
                {"max_depth", config.max_depth},
                {"camera", CameraJson(options.camera)},
                {"primary", SpecJson(config.primary)},
                {"secondary_scale", options.secondary_scale}};
    header["secondary"] =
        config.secondary ? SpecJson(*config.secondary) : json(nullptr);
    WriteWithManifest(options.output, files, header);
    out << "wrote " << config.n_images << " scenes to "
        << options.output.string() << "\n";
    return kExitOk;
  });
}

int RunQuantify(const QuantifyOptions& options, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    CheckMethod(options.method);
    try {
      options.maskval.Validate();
      options.normalization.Validate();
    } catch (const std::invalid_argument& e) {
      throw CommandError(kExitUsage, e.what());
    }
    std::error_code ec;
    if (fs::exists(options.output) &&
        fs::equivalent(options.input, options.output, ec)) {
      throw CommandError(kExitUsage,
                         "output directory must differ from the input");
    }
    const auto files = ListScenes(options.input);
    std::vector<SceneRecord> scenes = LoadScenes(files, options.jobs);
    const fs::path model_dir = ResolveModelDir(options.models, options.input);
    const std::set<std::string> classes = ClassesOf(scenes);
    const auto meshes = LoadModels(model_dir, classes);

    json header{{"command", "quantify"},
                {"method", options.method},
                {"input", options.input.filename().string()}};

    if (options.method == kMaskValMethod) {
      ParallelFor(scenes.size(), options.jobs, [&](std::size_t n) {
        thread_local Renderer renderer(options.maskval.pad_factor);
        SceneRecord& scene = scenes[n];
        auto it = scene.estimates.find(kPrimaryStream);
        if (it == scene.estimates.end()) return;
        std::vector<EstimateInput> inputs;
        for (const auto& e : it->second) {
          inputs.push_back({e.pose, e.class_name, e.instance_id});
        }
        std::vector<SegmentationInput> segs;
        for (const auto& s : scene.segmentation) {
          segs.push_back({s.mask, s.class_name, s.instance_id});
        }
        const UncertaintyReport report = QuantifyScene(
            inputs, segs, meshes, scene.camera, options.maskval, &renderer);
        for (std::size_t i = 0; i < it->second.size(); ++i) {
          it->second[i].maskval = report.estimates[i];
        }
      });
      header["alpha"] = options.maskval.alpha;
      header["pad_factor"] = options.maskval.pad_factor;
      header["min_match_iou"] = options.maskval.min_match_iou;
      header["association_mode"] = ToString(options.maskval.association_mode);
    } else {
      for (const auto& scene : scenes) {
        if (!scene.Stream(kSecondaryStream)) {
          throw CommandError(kExitUsage, "scene " + scene.image_id +
                                             " has no secondary estimate "
                                             "stream for ensemble-add");
        }
      }
      std::map<std::string, ModelPoints> points;
      for (const auto& [cls, mesh] : meshes) {
        points[cls] = SampleModelPoints(mesh, kAddSamplePoints, 0);
      }
      auto to_stream = [](const std::vector<PoseEstimate>* list) {
        std::vector<StreamPose> poses;
        if (list) {
          for (const auto& e : *list) {
            poses.push_back({e.pose, e.class_name, e.instance_id});
          }
        }
        return poses;
      };
      AddNormalization norm = options.normalization;
      if (options.calibrate_d_min) {
        std::vector<std::pair<std::vector<StreamPose>, std::vector<StreamPose>>>
            pairs;
        for (const auto& s : scenes) {
          pairs.emplace_back(to_stream(s.Stream(kPrimaryStream)),
                             to_stream(s.Stream(kSecondaryStream)));
        }
        if (const auto d_min = CalibrateMinDisagreement(pairs, points)) {
          norm.d_min = *d_min;
        }
        try {
          norm.Validate();
        } catch (const std::invalid_argument& e) {
          throw CommandError(kExitUsage, std::string("calibrated ") + e.what());
        }
      }
      ParallelFor(scenes.size(), options.jobs, [&](std::size_t n) {
        SceneRecord& scene = scenes[n];
        auto it = scene.estimates.find(kPrimaryStream);
        if (it == scene.estimates.end()) return;
        const auto results =
            EnsembleQuantifyStreams(to_stream(&it->second),
                                    to_stream(scene.Stream(kSecondaryStream)),
                                    points, norm);
        for (std::size_t i = 0; i < it->second.size(); ++i) {
          it->second[i].ensemble_add = results[i];
        }
      });
      header["d_min"] = norm.d_min;
      header["d_max"] = norm.d_max;
    }

    EnsureOutputDir(options.output);
    std::vector<std::pair<std::string, std::string>> outputs =
        ModelFiles(model_dir, classes);
    for (std::size_t n = 0; n < scenes.size(); ++n) {
      outputs.emplace_back(files[n].filename().string(), FormatScene(scenes[n]));
    }
    WriteWithManifest(options.output, outputs, header);
    out << "quantified " << scenes.size() << " scenes with " << options.method
        << "\n";
    return kExitOk;
  });
}

int RunEvaluate(const EvaluateOptions& options, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    ValidateEvalParams(options.ap_target, options.theta_v);
    std::vector<double> grid;
    try {
      grid = UniformGrid(options.et_min, options.et_max, options.et_steps);
    } catch (const std::invalid_argument& e) {
      throw CommandError(kExitUsage, e.what());
    }
    const LoadedSet set = LoadEvaluationSet(options.input, options.models,
                                            options.method, options.jobs);
    const EvalCurves curves =
        SweepCurves(set.images, grid, options.ap_target, options.theta_v);

    std::ostringstream csv;
    csv << "e_t_m,u_T,AP,AR,ARU,AR_star\n";
    for (const auto& p : curves.points) {
      csv << FormatDouble(p.e_t) << "," << FormatOptional(p.u_t) << ","
          << FormatOptional(p.scores.ap) << "," << FormatOptional(p.scores.ar)
          << "," << FormatOptional(p.scores.aru) << ","
          << FormatOptional(p.ar_star) << "\n";
    }

    const ThresholdResult op = ThresholdForTarget(
        set.images, options.report_et, options.ap_target, options.theta_v);
    ImageCounts filtered, unfiltered;
    for (const auto& img : set.images) {
      const double u_t = op.feasible ? op.u_t : -INFINITY;
      const ImageCounts f =
          ClassifyAssociated(img, options.report_et, options.theta_v, u_t);
      const ImageCounts a =
          ClassifyAssociated(img, options.report_et, options.theta_v, 1.0);
      filtered.tp_filtered += f.tp_filtered;
      filtered.fp_filtered += f.fp_filtered;
      filtered.fn += f.fn;
      unfiltered.tp_filtered += a.tp_filtered;
      unfiltered.fp_filtered += a.fp_filtered;
      unfiltered.fn += a.fn;
    }
    std::size_t unassociated = 0;
    for (const auto& img : set.images) {
      for (const auto& e : img.estimates) unassociated += e.error ? 0 : 1;
    }

    json summary;
    summary["method"] = options.method;
    summary["ap_target"] = options.ap_target;
    summary["theta_v"] = options.theta_v;
    summary["e_t_grid"] = {{"min", options.et_min},
                           {"max", options.et_max},
                           {"points", options.et_steps}};
    summary["AUC_AR"] = OptionalJson(curves.auc_ar);
    summary["AUC_AR_star"] = OptionalJson(curves.auc_ar_star);
    summary["spearman_rho"] = OptionalJson(curves.spearman_rho);
    summary["spearman_pairs"] = curves.spearman_pairs;
    summary["infeasible_grid_points"] = curves.infeasible_points;
    summary["counts"] = {{"images", set.images.size()},
                         {"estimates", set.estimates},
                         {"ground_truth", set.ground_truth},
                         {"unassociated_estimates", unassociated}};
    json opj{{"e_t", options.report_et},
             {"feasible", op.feasible},
             {"u_T", op.feasible ? json(op.u_t) : json(nullptr)},
             {"AP", OptionalJson(op.scores.ap)},
             {"AR", OptionalJson(op.scores.ar)},
             {"ARU", OptionalJson(op.scores.aru)},
             {"TP", filtered.tp_filtered},
             {"FP", filtered.fp_filtered},
             {"FN", filtered.fn},
             {"TP_unfiltered", unfiltered.tp_filtered},
             {"FP_unfiltered", unfiltered.fp_filtered},
             {"FN_unfiltered", unfiltered.fn}};
    summary["operating_point"] = opj;

    EnsureOutputDir(options.output);
    WriteFile(options.output / kCurvesFile, csv.str());
    WriteFile(options.output / kSummaryFile, summary.dump(2) + "\n");
    out << options.method << ": AUC_AR=" << FormatOptional(curves.auc_ar)
        << " spearman_rho="
        << (curves.spearman_rho ? FormatDouble(*curves.spearman_rho)
                                : std::string("undefined"))
        << " infeasible_grid_points=" << curves.infeasible_points << "\n";
    return kExitOk;
  });
}

int RunThreshold(const ThresholdOptions& options, std::ostream& out,
                 std::ostream& err) {
  return Guarded(err, [&] {
    ValidateEvalParams(options.ap_target, options.theta_v);
    if (!(options.e_t >= 0.0)) throw CommandError(kExitUsage, "e_t must be >= 0");
    const LoadedSet set = LoadEvaluationSet(options.input, options.models,
                                            options.method, options.jobs);
    const ThresholdResult r = ThresholdForTarget(set.images, options.e_t,
                                                 options.ap_target,
                                                 options.theta_v);
    if (!r.feasible) {
      out << "u_T: INFEASIBLE\n";
      return kExitOk;
    }
    out << "u_T: " << FormatDouble(r.u_t) << "\n"
        << "AP: " << FormatOptional(r.scores.ap) << "\n"
        << "AR: " << FormatOptional(r.scores.ar) << "\n"
        << "ARU: " << FormatOptional(r.scores.aru) << "\n";
    return kExitOk;
  });
}

int Main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Render-and-compare uncertainty for 6D pose estimates"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_models;
  auto* g = app.add_subcommand("generate", "Generate a synthetic benchmark");
  g->add_option("--output", gen.output, "Output directory")->required();
  g->add_option("--models", gen_models,
                "Directory of <class>.ply models (default: built-in parts)");
  g->add_option("--n-images", gen.generator.n_images)->capture_default_str();
  g->add_option("--min-objects", gen.generator.min_objects)
      ->capture_default_str();
  g->add_option("--max-objects", gen.generator.max_objects)
      ->capture_default_str();
  g->add_option("--min-depth", gen.generator.min_depth)->capture_default_str();
  g->add_option("--max-depth", gen.generator.max_depth)->capture_default_str();
  g->add_option("--translation-sigma", gen.generator.primary.translation_sigma)
      ->capture_default_str();
  g->add_option("--rotation-sigma", gen.generator.primary.rotation_sigma_deg,
                "Degrees")
      ->capture_default_str();
  g->add_option("--outlier-probability",
                gen.generator.primary.outlier_probability)
      ->capture_default_str();
  g->add_option("--outlier-translation",
                gen.generator.primary.outlier_translation)
      ->capture_default_str();
  g->add_option("--mask-radius", gen.generator.primary.mask_radius)
      ->capture_default_str();
  g->add_option("--mask-dropout", gen.generator.primary.mask_dropout)
      ->capture_default_str();
  g->add_option("--noise-scale-spread",
                gen.generator.primary.noise_scale_spread)
      ->capture_default_str();
  g->add_option("--secondary-scale", gen.secondary_scale,
                "Noise multiplier of the secondary stream, 0 disables it")
      ->capture_default_str();
  g->add_option("--fx", gen.camera.fx)->capture_default_str();
  g->add_option("--fy", gen.camera.fy)->capture_default_str();
  g->add_option("--cx", gen.camera.cx)->capture_default_str();
  g->add_option("--cy", gen.camera.cy)->capture_default_str();
  g->add_option("--width", gen.camera.width)->capture_default_str();
  g->add_option("--height", gen.camera.height)->capture_default_str();
  g->add_option("--seed", gen.generator.seed)->capture_default_str();
  g->add_option("--jobs", gen.jobs)->capture_default_str();

  QuantifyOptions quant;
  std::string quant_models, association = "greedy";
  auto* q = app.add_subcommand("quantify", "Attach uncertainties to scenes");
  q->add_option("--input", quant.input)->required();
  q->add_option("--output", quant.output)->required();
  q->add_option("--models", quant_models)->envname(kModelDirEnv);
  q->add_option("--method", quant.method, "maskval or ensemble-add")
      ->capture_default_str();
  q->add_option("--alpha", quant.maskval.alpha)->capture_default_str();
  q->add_option("--pad-factor", quant.maskval.pad_factor)
      ->capture_default_str();
  q->add_option("--min-match-iou", quant.maskval.min_match_iou)
      ->capture_default_str();
  q->add_option("--association-mode", association, "greedy or two_stage")
      ->capture_default_str();
  q->add_option("--d-min", quant.normalization.d_min)->capture_default_str();
  q->add_option("--d-max", quant.normalization.d_max)->capture_default_str();
  q->add_flag("--calibrate-d-min", quant.calibrate_d_min);
  q->add_option("--jobs", quant.jobs)->capture_default_str();

  EvaluateOptions eval;
  std::string eval_models;
  auto* e = app.add_subcommand("evaluate", "Write AR/ARU curves and summary");
  e->add_option("--input", eval.input)->required();
  e->add_option("--output", eval.output)->required();
  e->add_option("--models", eval_models)->envname(kModelDirEnv);
  e->add_option("--method", eval.method)->capture_default_str();
  e->add_option("--et-min", eval.et_min)->capture_default_str();
  e->add_option("--et-max", eval.et_max)->capture_default_str();
  e->add_option("--et-steps", eval.et_steps)->capture_default_str();
  e->add_option("--ap-target", eval.ap_target)->capture_default_str();
  e->add_option("--theta-v", eval.theta_v)->capture_default_str();
  e->add_option("--report-et", eval.report_et)->capture_default_str();
  e->add_option("--jobs", eval.jobs)->capture_default_str();

  ThresholdOptions thr;
  std::string thr_models;
  auto* t = app.add_subcommand("threshold",
                               "Largest uncertainty threshold meeting an AP");
  t->add_option("--input", thr.input)->required();
  t->add_option("--models", thr_models)->envname(kModelDirEnv);
  t->add_option("--method", thr.method)->capture_default_str();
  t->add_option("--et", thr.e_t)->capture_default_str();
  t->add_option("--ap-target", thr.ap_target)->capture_default_str();
  t->add_option("--theta-v", thr.theta_v)->capture_default_str();
  t->add_option("--jobs", thr.jobs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }

  auto optional_path = [](const std::string& s) -> std::optional<fs::path> {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
  };
  if (*g) {
    gen.models = optional_path(gen_models);
    return RunGenerate(gen, out, err);
  }
  if (*q) {
    quant.models = optional_path(quant_models);
    try {
      quant.maskval.association_mode = ParseAssociationMode(association);
    } catch (const std::invalid_argument& ex) {
      err << "error: " << ex.what() << "\n";
      return kExitUsage;
    }
    return RunQuantify(quant, out, err);
  }
  if (*e) {
    eval.models = optional_path(eval_models);
    return RunEvaluate(eval, out, err);
  }
  thr.models = optional_path(thr_models);
  return RunThreshold(thr, out, err);
}

}  // namespace maskval::cli
