#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "dynak/dataset.hpp"
#include "dynak/metrics.hpp"
#include "dynak/model.hpp"
#include "dynak/recommender.hpp"
#include "dynak/trainer.hpp"

// Text artifacts. Every file opens with a `#dynak-<kind> v<N> key=value...`
// header; readers reject other kinds and versions.

namespace dynak {

/// Shortest text that parses back to exactly `value`.
std::string format_real(double value);

/// Writes `content` to a temporary file beside `path`, fsyncs it and renames
/// it over `path`. On failure nothing is left behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Model: header `#dynak-model v1 kind=<MF|HRM> f=<f> users=<n> items=<m> t=<t>`,
// then n user-factor rows, m item-factor rows and one row of n boundaries.
// Reals use 17 significant digits.
void write_model(std::ostream& out, const FactorModel& model);
FactorModel read_model(std::istream& in);
void save_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_model(const std::filesystem::path& path);

// Log: header `#dynak-log v1 users=<n> items=<m>`, then
// `user<TAB>item<TAB>time<TAB>basket` per interaction (dense indices, '-'
// for no basket). The vocabulary lives in a `.vocab` sidecar.
void write_log(std::ostream& out, const InteractionLog& log);
InteractionLog read_log(std::istream& in);
void write_vocab(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocab(std::istream& in);

/// Writes `path` and `path + ".vocab"`.
void save_log(const InteractionLog& log, const std::filesystem::path& path);
InteractionLog load_log(const std::filesystem::path& path);

// Test sets: header `#dynak-test v1 users=<n> items=<m> dropped=<k>`, then
// `user<TAB>item` lines.
void write_test_sets(std::ostream& out, const SplitDataset& split);

/// Writes `train.tsv`, `train.tsv.vocab` and `test.tsv` into `dir`.
void save_split(const SplitDataset& split, const std::filesystem::path& dir);
SplitDataset load_split(const std::filesystem::path& dir);

/// `f1=... precision=... recall=... ndcg=... cover_ratio=... users=... covered=...`
std::string format_report(const EvalReport& report);
/// Per-user TSV for downstream significance tests.
std::string format_per_user(const EvalReport& report, const Vocabulary& vocab);

/// `iter<TAB>cf_loss<TAB>rk_loss`, '-' where a branch did not run.
std::string format_trace(const TrainReport& report);

/// `user<TAB>item<TAB>rank<TAB>score`; empty lists give `user<TAB>-<TAB>0<TAB>-`.
std::string format_recommendations(std::span<const RecommendationList> lists,
                                   const Vocabulary& vocab);

}  // namespace dynak
