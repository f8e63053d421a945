#pragma once

// Subcommands of the maskval command-line tool. Each returns a process exit
// code: 0 success, 2 usage or validation error, 3 data error.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "maskval/ensemble.h"
#include "maskval/generator.h"
#include "maskval/mask_val.h"
#include "maskval/metrics.h"

namespace maskval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

inline constexpr char kModelDirEnv[] = "MASKVAL_MODEL_DIR";
inline constexpr char kManifestFile[] = "manifest.json";
inline constexpr char kCurvesFile[] = "curves.csv";
inline constexpr char kSummaryFile[] = "summary.json";
inline constexpr char kMaskValMethod[] = "maskval";
inline constexpr char kEnsembleMethod[] = "ensemble-add";
// Surface samples per model for the ADD disagreement.
inline constexpr std::size_t kAddSamplePoints = 1000;

struct GenerateOptions {
  std::filesystem::path output;
  // Directory of <class>.ply files; the built-in parts are used when unset.
  std::optional<std::filesystem::path> models;
  CameraIntrinsics camera = DefaultCamera();
  GeneratorConfig generator;
  // Noise multiplier of the secondary stream relative to the primary one;
  // 0 disables the secondary stream.
  double secondary_scale = 2.0;
  int jobs = 1;
};

struct QuantifyOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> models;
  std::string method = kMaskValMethod;
  MaskValConfig maskval;
  AddNormalization normalization;
  // Replace d_min by the smallest disagreement found in the input scenes.
  bool calibrate_d_min = false;
  int jobs = 1;
};

struct EvaluateOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> models;
  std::string method = kMaskValMethod;
  double et_min = 0.0;
  double et_max = kDefaultMaxErrorThreshold;
  int et_steps = kDefaultGridPoints;
  double ap_target = kDefaultApTarget;
  double theta_v = kDefaultVisibilityThreshold;
  // Error threshold of the operating point reported in the summary.
  double report_et = 0.015;
  int jobs = 1;
};

struct ThresholdOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> models;
  std::string method = kMaskValMethod;
  double e_t = 0.015;
  double ap_target = kDefaultApTarget;
  double theta_v = kDefaultVisibilityThreshold;
  int jobs = 1;
};

int RunGenerate(const GenerateOptions& options, std::ostream& out,
                std::ostream& err);
int RunQuantify(const QuantifyOptions& options, std::ostream& out,
                std::ostream& err);
int RunEvaluate(const EvaluateOptions& options, std::ostream& out,
                std::ostream& err);
int RunThreshold(const ThresholdOptions& options, std::ostream& out,
                 std::ostream& err);

// Parses argv and dispatches; used by main().
int Main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace maskval::cli
