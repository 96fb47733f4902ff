#include "dynak/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

using T = Config::Type;

constexpr std::array kKeys = {
    Config::Key{"dataset.kind", T::kString, "movielens", "movielens | tafeng | log"},
    Config::Key{"dataset.path", T::kString, "", "raw dataset file"},
    Config::Key{"dataset.min_item_users", T::kInt, "0", "drop items with fewer users"},
    Config::Key{"dataset.min_user_items", T::kInt, "0", "then drop users with fewer items"},
    Config::Key{"dataset.date_column", T::kString, "TRANSACTION_DT", "ta-feng date column"},
    Config::Key{"dataset.user_column", T::kString, "CUSTOMER_ID", "ta-feng customer column"},
    Config::Key{"dataset.item_column", T::kString, "PRODUCT_ID", "ta-feng product column"},
    Config::Key{"dataset.delimiter", T::kString, ",", "ta-feng field separator"},
    Config::Key{"model.kind", T::kString, "MF", "MF | HRM"},
    Config::Key{"model.f", T::kInt, "50", "latent dimension"},
    Config::Key{"train.alpha", T::kDouble, "0.5", "classification step probability"},
    Config::Key{"train.lambda_t", T::kDouble, "1.0", "boundary regularization"},
    Config::Key{"train.t", T::kDouble, "1.0", "global boundary anchor"},
    Config::Key{"train.eta", T::kDouble, "0.05", "learning rate"},
    Config::Key{"train.lambda_theta", T::kDouble, "0.01", "factor regularization"},
    Config::Key{"train.epochs", T::kInt, "30", "passes over the train interactions"},
    Config::Key{"train.negative_ratio", T::kDouble, "1.0", "negatives per positive"},
    Config::Key{"train.seed", T::kInt, "42", "random seed"},
    Config::Key{"train.loss", T::kString, "logistic", "logistic | hinge"},
    Config::Key{"rec.cap", T::kInt, "20", "maximum dynamic-K list length"},
    Config::Key{"rec.exclude_seen", T::kString, "auto",
                "auto | true | false; auto excludes train items except for tafeng"},
    Config::Key{"eval.k", T::kInt, "20", "NDCG depth"},
    Config::Key{"io.workdir", T::kString, "work", "directory for every artifact"},
};

const Config::Key& find_key(std::string_view name) {
  const auto it = std::find_if(kKeys.begin(), kKeys.end(),
                               [name](const Config::Key& k) { return k.name == name; });
  if (it == kKeys.end()) throw ConfigError("unrecognized config key '" + std::string(name) + "'");
  return *it;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Number>
bool parses_as(std::string_view text, Number& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size();
}

std::optional<bool> parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  return std::nullopt;
}

void check_type(const Config::Key& key, std::string_view value) {
  bool ok = true;
  switch (key.type) {
    case T::kString:
      break;
    case T::kInt: {
      std::int64_t v = 0;
      ok = parses_as(value, v);
      break;
    }
    case T::kDouble: {
      double v = 0.0;
      ok = parses_as(value, v);
      break;
    }
    case T::kBool:
      ok = parse_bool(value).has_value();
      break;
  }
  if (!ok) {
    throw ConfigError("value '" + std::string(value) + "' for '" + std::string(key.name) +
                      "' has the wrong type");
  }
}

}  // namespace

std::span<const Config::Key> Config::keys() { return kKeys; }

Config Config::parse(std::istream& in, std::string_view origin) {
  Config config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    try {
      config.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config file");
  return parse(in, path.string());
}

void Config::set(std::string_view key, std::string_view value) {
  const auto& spec = find_key(key);
  check_type(spec, value);
  values_.insert_or_assign(std::string(key), std::string(value));
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool Config::is_set(std::string_view key) const { return values_.contains(key); }

std::string Config::raw(std::string_view key) const {
  const auto& spec = find_key(key);
  const auto it = values_.find(key);
  return it != values_.end() ? it->second : std::string(spec.default_value);
}

std::string Config::get_string(std::string_view key) const { return raw(key); }

std::int64_t Config::get_int(std::string_view key) const {
  std::int64_t v = 0;
  const auto text = raw(key);
  if (!parses_as(std::string_view(text), v)) {
    throw ConfigError("'" + std::string(key) + "' is not an integer");
  }
  return v;
}

std::size_t Config::get_size(std::string_view key) const {
  const auto v = get_int(key);
  if (v < 0) throw ConfigError("'" + std::string(key) + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

double Config::get_double(std::string_view key) const {
  double v = 0.0;
  const auto text = raw(key);
  if (!parses_as(std::string_view(text), v)) {
    throw ConfigError("'" + std::string(key) + "' is not a number");
  }
  return v;
}

bool Config::get_bool(std::string_view key) const {
  const auto v = parse_bool(raw(key));
  if (!v) throw ConfigError("'" + std::string(key) + "' is not a boolean");
  return *v;
}

std::string Config::dump() const {
  std::ostringstream out;
  for (const auto& key : kKeys) out << key.name << " = " << raw(key.name) << '\n';
  return out.str();
}

TrainConfig train_config(const Config& config) {
  TrainConfig tc;
  tc.kind = parse_model_kind(config.get_string("model.kind"));
  tc.dim = config.get_size("model.f");
  tc.alpha = config.get_double("train.alpha");
  tc.lambda_t = config.get_double("train.lambda_t");
  tc.anchor = config.get_double("train.t");
  tc.eta = config.get_double("train.eta");
  tc.lambda_theta = config.get_double("train.lambda_theta");
  tc.epochs = config.get_size("train.epochs");
  tc.negative_ratio = config.get_double("train.negative_ratio");
  tc.seed = static_cast<std::uint64_t>(config.get_int("train.seed"));
  tc.loss = parse_classification_loss(config.get_string("train.loss"));
  tc.validate();
  return tc;
}

TafengColumns tafeng_columns(const Config& config) {
  TafengColumns columns;
  columns.date = config.get_string("dataset.date_column");
  columns.user = config.get_string("dataset.user_column");
  columns.item = config.get_string("dataset.item_column");
  const auto delim = config.get_string("dataset.delimiter");
  if (delim == "\\t" || delim == "tab") {
    columns.delimiter = '\t';
  } else if (delim.size() == 1) {
    columns.delimiter = delim[0];
  } else {
    throw ConfigError("dataset.delimiter must be a single character");
  }
  return columns;
}

}  // namespace dynak
