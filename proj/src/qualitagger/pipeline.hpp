#pragma once

// File-based pipeline stages. Each stage reads and writes the formats of the
// module it wraps; an output path of "-" means standard output. Stages
// return a small JSON summary for logging.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qualitagger/binary_model.hpp"
#include "qualitagger/compare.hpp"
#include "qualitagger/corpus.hpp"
#include "qualitagger/ensemble.hpp"
#include "qualitagger/quality.hpp"
#include "qualitagger/reports.hpp"

namespace qtag::pipeline {

using Path = std::filesystem::path;

inline constexpr std::string_view kBackendUrlEnv = "QUALITAGGER_BACKEND_URL";

// Writes to the file, or to standard output for "-".
void emit(const Path& out, std::string_view content);

// The seed of a randomized stage; throws UsageError naming the stage when absent.
std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, std::string_view stage);

struct MineOptions {
  std::vector<Path> inputs;  // event archives (gzip or plain) or issues JSONL
  Path out;
};
nlohmann::json mine(const MineOptions& o);

struct CleanOptions {
  Path input;
  Path out;
  std::size_t min_len = corpus::kDefaultMinLen;
};
nlohmann::json clean(const CleanOptions& o);

struct BuildDatasetOptions {
  Path input;
  Path out;
  Quality quality = Quality::Maintainability;
  std::optional<std::uint64_t> seed;
  std::size_t min_len = 0;
};
nlohmann::json build_dataset(const BuildDatasetOptions& o);

struct SplitOptions {
  Path input;  // dataset JSONL
  Path out;    // manifest JSON
  std::optional<std::uint64_t> seed;
  int k = 5;  // 0 skips fold assignment
  double test_fraction = 0.2;
  bool leave_one_out = false;
};
nlohmann::json split(const SplitOptions& o);

struct TrainOptions {
  Path input;  // dataset JSONL, or cleaned issues JSONL with multiclass
  Path out;    // model file
  std::optional<std::uint64_t> seed;
  std::optional<Path> manifest;  // restrict training to its train_ids
  bool multiclass = false;
  bool cross_validate = false;
  int k = 5;
  std::optional<Path> cv_report;  // CV metrics JSON; default <out>.cv.json
  double threshold = classify::kDefaultThreshold;
  classify::TrainConfig config;  // seed field is overwritten
  std::uint32_t feature_dim = classify::kDefaultFeatureDim;
};
nlohmann::json train(const TrainOptions& o);

struct TagOptions {
  Path input;  // issues JSONL
  Path out;    // TagSet JSONL
  std::optional<Path> model_dir;
  std::optional<std::string> backend_url;
  std::optional<Path> rules;
  double threshold = classify::kDefaultThreshold;
};
nlohmann::json tag(const TagOptions& o);

struct EvaluateOptions {
  Path preds;
  std::optional<Path> truth;
  Path out;
  std::optional<Quality> quality;
  double threshold = classify::kDefaultThreshold;
  evalstat::ReportFormat format = evalstat::ReportFormat::Json;
};
nlohmann::json evaluate(const EvaluateOptions& o);

struct CompareOptions {
  Path preds_a;
  Path preds_b;
  std::optional<Path> truth;
  Path out;
  std::optional<Quality> quality;
  double threshold = classify::kDefaultThreshold;
  std::size_t iterations = evalstat::kDefaultBootstrapIterations;
  std::optional<std::uint64_t> seed;
  evalstat::ReportFormat format = evalstat::ReportFormat::Json;
};
nlohmann::json compare(const CompareOptions& o);

struct AnalyzeOptions {
  Path input;  // tagged issues JSONL
  Path out;    // with csv: a directory of <table>.csv files, or "-"
  std::optional<std::size_t> total_issues;
  std::optional<std::string> repo;
  evalstat::ReportFormat format = evalstat::ReportFormat::Json;
};
nlohmann::json analyze(const AnalyzeOptions& o);

struct ServeOptions {
  Path model_dir;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  bool stdio = false;
  std::optional<Path> port_file;  // receives the bound port once listening
};
// Blocks until the server stops (HTTP) or input ends (stdio).
void serve_stub(const ServeOptions& o);

}  // namespace qtag::pipeline
