#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynak/config.hpp"
#include "dynak/metrics.hpp"
#include "dynak/recommender.hpp"
#include "dynak/trainer.hpp"

namespace dynak::cli {

/// Artifact locations under `io.workdir`.
struct Workspace {
  std::filesystem::path root;

  explicit Workspace(const Config& config);

  std::filesystem::path log() const { return root / "log.tsv"; }
  std::filesystem::path split_dir() const { return root / "split"; }
  std::filesystem::path model() const { return root / "model.txt"; }
  std::filesystem::path trace() const { return root / "trace.tsv"; }
  std::filesystem::path report() const { return root / "report.txt"; }
  std::filesystem::path per_user() const { return root / "per_user.tsv"; }
  std::filesystem::path recommendations() const { return root / "recommendations.tsv"; }
  std::filesystem::path sweep(std::string_view param) const;
};

struct PrepSummary {
  std::size_t raw_users = 0;
  std::size_t raw_items = 0;
  std::size_t raw_interactions = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  std::size_t train_interactions = 0;
  std::size_t test_users = 0;
  std::size_t test_items = 0;
  std::size_t dropped_users = 0;
};

/// parse -> filter -> temporal split; writes the canonical log and the split.
PrepSummary cmd_prep(const Config& config, std::ostream& out);

/// Trains on the prepared split; writes the model and loss trace.
TrainResult cmd_train(const Config& config, std::ostream& out);

struct EvalRequest {
  ListMode mode = ListMode::kDynamicK;
  std::size_t n = 10;  ///< fixed-N list length
  /// Inclusive fixed-N range; one report per N.
  std::optional<std::pair<std::size_t, std::size_t>> range;
  std::filesystem::path model;     ///< empty: the workspace model
  std::vector<std::string> users;  ///< raw user ids; empty: all test users
};

/// Parses "A..B" (or "A-B") into an inclusive range.
std::pair<std::size_t, std::size_t> parse_range(std::string_view text);

std::vector<EvalReport> cmd_eval(const Config& config, const EvalRequest& request,
                                 std::ostream& out);

/// Per-user lists in the recommendation dump format.
std::vector<RecommendationList> cmd_recommend(const Config& config, const EvalRequest& request,
                                              std::ostream& out);

struct SweepRow {
  double value = 0.0;
  EvalReport report;
};

/// Retrains from scratch for each value of `param` (one of train.t,
/// train.lambda_t, train.alpha) and evaluates every model.
std::vector<SweepRow> cmd_sweep(const Config& config, std::string_view param,
                                std::span<const double> values, const EvalRequest& request,
                                std::ostream& out);

/// Resolves rec.exclude_seen ("auto" excludes train items unless the data
/// is transactional Ta-Feng, where repurchase is legitimate).
bool exclude_seen(const Config& config);

/// Entry point used by the `dynak` binary. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dynak::cli
