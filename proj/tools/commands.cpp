#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "dynak/dataset.hpp"
#include "dynak/errors.hpp"
#include "dynak/persistence.hpp"

namespace dynak::cli {

namespace {

InteractionLog load_raw(const Config& config) {
  const auto kind = config.get_string("dataset.kind");
  const std::filesystem::path path = config.get_string("dataset.path");
  if (path.empty()) throw ConfigError("dataset.path is not set");
  if (kind == "log") return load_log(path);
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open dataset");
  try {
    if (kind == "movielens") return parse_movielens(in);
    if (kind == "tafeng") return parse_tafeng(in, tafeng_columns(config));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
  throw ConfigError("unknown dataset.kind '" + kind + "' (movielens, tafeng or log)");
}

SplitMode split_mode(const Config& config, const InteractionLog& log) {
  const auto kind = config.get_string("dataset.kind");
  if (kind == "movielens") return SplitMode::kLastItem;
  if (kind == "tafeng") return SplitMode::kBasket;
  return log.has_baskets() ? SplitMode::kBasket : SplitMode::kLastItem;
}

EvalOptions eval_options(const Config& config, const EvalRequest& request) {
  EvalOptions options;
  options.mode = request.mode;
  options.cutoff = request.mode == ListMode::kDynamicK ? config.get_size("rec.cap") : request.n;
  options.k = config.get_size("eval.k");
  options.exclude_seen = exclude_seen(config);
  if (options.cutoff == 0) throw ConfigError("list length must be >= 1");
  if (options.k == 0) throw ConfigError("eval.k must be >= 1");
  return options;
}

std::string describe(const EvalOptions& options) {
  return std::string("mode=") + std::string(to_string(options.mode)) +
         (options.mode == ListMode::kDynamicK ? " cap=" : " n=") + std::to_string(options.cutoff);
}

std::vector<UserId> resolve_users(const std::vector<std::string>& raw, const Vocabulary& vocab) {
  std::unordered_map<std::string_view, UserId> index;
  for (UserId u = 0; u < vocab.users.size(); ++u) index.emplace(vocab.users[u], u);
  std::vector<UserId> out;
  for (const auto& name : raw) {
    const auto it = index.find(name);
    if (it == index.end()) throw LookupError("unknown user '" + name + "'");
    out.push_back(it->second);
  }
  return out;
}

struct Loaded {
  SplitDataset split;
  FactorModel model;
};

Loaded load_for_eval(const Config& config, const EvalRequest& request) {
  const Workspace ws(config);
  Loaded loaded{load_split(ws.split_dir()),
                load_model(request.model.empty() ? ws.model() : request.model)};
  check_compatible(loaded.model, loaded.split.train);
  return loaded;
}

}  // namespace

Workspace::Workspace(const Config& config) : root(config.get_string("io.workdir")) {}

std::filesystem::path Workspace::sweep(std::string_view param) const {
  std::string name(param);
  std::replace(name.begin(), name.end(), '.', '_');
  return root / ("sweep_" + name + ".tsv");
}

bool exclude_seen(const Config& config) {
  const auto v = config.get_string("rec.exclude_seen");
  if (v == "auto") return config.get_string("dataset.kind") != "tafeng";
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("rec.exclude_seen must be auto, true or false");
}

std::pair<std::size_t, std::size_t> parse_range(std::string_view text) {
  auto sep = text.find("..");
  std::size_t skip = 2;
  if (sep == std::string_view::npos) {
    sep = text.find('-');
    skip = 1;
  }
  std::size_t lo = 0;
  std::size_t hi = 0;
  const auto a = text.substr(0, sep);
  const auto b = sep == std::string_view::npos ? std::string_view{} : text.substr(sep + skip);
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), lo);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), hi);
  if (sep == std::string_view::npos || ra.ec != std::errc{} || rb.ec != std::errc{} ||
      ra.ptr != a.data() + a.size() || rb.ptr != b.data() + b.size() || lo == 0 || hi < lo) {
    throw ConfigError("range '" + std::string(text) + "' must look like 1..20");
  }
  return {lo, hi};
}

PrepSummary cmd_prep(const Config& config, std::ostream& out) {
  const Workspace ws(config);
  const auto raw = load_raw(config);
  PrepSummary s;
  s.raw_users = raw.active_users();
  s.raw_items = raw.active_items();
  s.raw_interactions = raw.interactions.size();
  out << "raw: users=" << s.raw_users << " items=" << s.raw_items
      << " interactions=" << s.raw_interactions << '\n';

  const auto log = filter_min_counts(raw, config.get_size("dataset.min_item_users"),
                                     config.get_size("dataset.min_user_items"));
  if (log.empty()) throw ContractError("count filters removed every interaction");
  s.users = log.num_users();
  s.items = log.num_items();
  s.interactions = log.interactions.size();
  out << "filtered: users=" << s.users << " items=" << s.items
      << " interactions=" << s.interactions << '\n';

  const auto split = temporal_split(log, split_mode(config, log));
  s.train_interactions = split.train.interactions.size();
  s.test_users = split.test.size();
  for (const auto& [u, items] : split.test) s.test_items += items.size();
  s.dropped_users = split.dropped_users;
  out << "split: train=" << s.train_interactions << " test_users=" << s.test_users
      << " test_items=" << s.test_items << " dropped_users=" << s.dropped_users << '\n';

  std::filesystem::create_directories(ws.root);
  save_log(log, ws.log());
  save_split(split, ws.split_dir());
  return s;
}

TrainResult cmd_train(const Config& config, std::ostream& out) {
  const Workspace ws(config);
  const auto tc = train_config(config);
  const auto split = load_split(ws.split_dir());
  auto result = joint_train(tc, split.train);
  const auto& r = result.report;
  save_model(result.model, ws.model());
  write_file_atomic(ws.trace(), format_trace(r));
  out << "trained " << to_string(tc.kind) << " f=" << tc.dim << ": iterations=" << r.iterations
      << " cf_steps=" << r.classification_steps << " rk_steps=" << r.ranking_steps
      << " skipped=" << r.skipped_samples << '\n';
  if (!r.checkpoints.empty()) {
    const auto& last = r.checkpoints.back();
    out << "final window: cf_loss=" << (last.cf_steps ? format_real(last.cf_loss) : "-")
        << " rk_loss=" << (last.rk_steps ? format_real(last.rk_loss) : "-") << '\n';
  }
  out << "model: " << ws.model().string() << '\n';
  return result;
}

std::vector<EvalReport> cmd_eval(const Config& config, const EvalRequest& request,
                                 std::ostream& out) {
  const Workspace ws(config);
  const auto loaded = load_for_eval(config, request);

  std::vector<EvalOptions> runs;
  if (request.range) {
    for (std::size_t n = request.range->first; n <= request.range->second; ++n) {
      EvalRequest r = request;
      r.mode = ListMode::kFixedN;
      r.n = n;
      runs.push_back(eval_options(config, r));
    }
  } else {
    runs.push_back(eval_options(config, request));
  }
  const auto users = resolve_users(request.users, loaded.split.train.vocab);

  std::vector<EvalReport> reports;
  std::string lines;
  for (auto& options : runs) {
    options.users = users;
    reports.push_back(evaluate_run(loaded.model, loaded.split, options));
    lines += describe(options) + " " + format_report(reports.back()) + "\n";
  }
  write_file_atomic(ws.report(), lines);
  if (reports.size() == 1) {
    write_file_atomic(ws.per_user(), format_per_user(reports.front(), loaded.split.train.vocab));
  }
  out << lines;
  return reports;
}

std::vector<RecommendationList> cmd_recommend(const Config& config, const EvalRequest& request,
                                              std::ostream& out) {
  const Workspace ws(config);
  const auto loaded = load_for_eval(config, request);
  auto options = eval_options(config, request);
  options.users = resolve_users(request.users, loaded.split.train.vocab);
  auto lists = recommend_for_split(loaded.model, loaded.split, options);
  const auto dump = format_recommendations(lists, loaded.split.train.vocab);
  write_file_atomic(ws.recommendations(), dump);
  out << dump;
  return lists;
}

std::vector<SweepRow> cmd_sweep(const Config& config, std::string_view param,
                                std::span<const double> values, const EvalRequest& request,
                                std::ostream& out) {
  if (param != "train.t" && param != "train.lambda_t" && param != "train.alpha") {
    throw ConfigError("sweep parameter must be train.t, train.lambda_t or train.alpha");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const Workspace ws(config);
  const auto split = load_split(ws.split_dir());
  const auto options = eval_options(config, request);

  std::vector<std::future<SweepRow>> jobs;
  for (const double value : values) {
    Config point = config;
    point.set(param, format_real(value));
    const auto tc = train_config(point);
    jobs.push_back(std::async(std::launch::async, [tc, value, &split, &options] {
      const auto result = joint_train(tc, split.train);
      return SweepRow{value, evaluate_run(result.model, split, options)};
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& job : jobs) rows.push_back(job.get());

  std::ostringstream table;
  table << "#dynak-sweep v1 param=" << param << ' ' << describe(options) << '\n';
  table << "value\tf1\tndcg\tcover_ratio\tprecision\trecall\tcovered\tusers\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    table << format_real(row.value) << '\t' << format_real(r.f1) << '\t' << format_real(r.ndcg)
          << '\t' << format_real(r.cover_ratio) << '\t' << format_real(r.precision) << '\t'
          << format_real(r.recall) << '\t' << r.users_covered << '\t' << r.users_total << '\n';
  }
  write_file_atomic(ws.sweep(param), table.str());
  out << table.str();
  return rows;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dynak: dynamic-K recommendation with personalized decision boundaries"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string mode = "dynamic";
  std::size_t n = 10;
  std::string range;
  std::string model_path;
  std::vector<std::string> users;
  std::string param;
  std::vector<double> values;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("overrides", overrides, "key=value overrides");
  };
  auto listing = [&](CLI::App* sub) {
    sub->add_option("--mode", mode, "dynamic | topn")
        ->check(CLI::IsMember({"dynamic", "topn"}));
    sub->add_option("--n", n, "list length for --mode topn")->check(CLI::PositiveNumber);
    sub->add_option("--model", model_path, "model file (default: <workdir>/model.txt)");
  };

  auto* prep = app.add_subcommand("prep", "parse, filter and split the raw dataset");
  common(prep);
  auto* train = app.add_subcommand("train", "train a model on the prepared split");
  common(train);
  auto* eval = app.add_subcommand("eval", "evaluate a model on the held-out split");
  common(eval);
  listing(eval);
  eval->add_option("--range", range, "fixed-N range, e.g. 1..20 (one report per N)");
  auto* recommend = app.add_subcommand("recommend", "dump recommendation lists");
  common(recommend);
  listing(recommend);
  recommend->add_option("--user", users, "restrict to these raw user ids");
  auto* sweep = app.add_subcommand("sweep", "retrain and evaluate over a parameter grid");
  common(sweep);
  listing(sweep);
  sweep->add_option("--param", param, "train.t | train.lambda_t | train.alpha")->required();
  sweep->add_option("--values", values, "comma-separated values")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto config = Config::load(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    EvalRequest request;
    request.mode = mode == "topn" ? ListMode::kFixedN : ListMode::kDynamicK;
    request.n = n;
    request.model = model_path;
    request.users = users;
    if (!range.empty()) request.range = parse_range(range);

    if (*prep) cmd_prep(config, out);
    if (*train) cmd_train(config, out);
    if (*eval) cmd_eval(config, request, out);
    if (*recommend) cmd_recommend(config, request, out);
    if (*sweep) cmd_sweep(config, param, values, request, out);
  } catch (const TrainingDivergedError& e) {
    err << "dynak: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "dynak: error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "dynak: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dynak::cli
