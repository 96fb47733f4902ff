#include "dynak/persistence.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

constexpr int kFormatVersion = 1;

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == '\r')) ++k;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ' && line[k] != '\t' && line[k] != '\r') ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename Number>
std::optional<Number> parse_number(std::string_view text) {
  Number v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

struct Header {
  std::map<std::string, std::string, std::less<>> fields;

  std::string_view get(std::string_view key) const {
    const auto it = fields.find(key);
    if (it == fields.end()) throw CorruptionError("header lacks '" + std::string(key) + "'");
    return it->second;
  }
  std::size_t count(std::string_view key) const {
    const auto v = parse_number<std::size_t>(get(key));
    if (!v) throw CorruptionError("header field '" + std::string(key) + "' is not a count");
    return *v;
  }
  double real(std::string_view key) const {
    const auto v = parse_number<double>(get(key));
    if (!v) throw CorruptionError("header field '" + std::string(key) + "' is not a number");
    return *v;
  }
};

Header read_header(std::istream& in, std::string_view kind) {
  std::string line;
  if (!std::getline(in, line)) throw CorruptionError("missing #dynak-" + std::string(kind) + " header");
  const auto tokens = split_ws(line);
  const std::string magic = "#dynak-" + std::string(kind);
  if (tokens.size() < 2 || !tokens[0].starts_with("#dynak-")) {
    throw CorruptionError("missing #dynak-" + std::string(kind) + " header");
  }
  if (tokens[0] != magic) {
    throw UnsupportedVersionError("expected a " + magic + " file, found " + std::string(tokens[0]));
  }
  if (tokens[1] != "v" + std::to_string(kFormatVersion)) {
    throw UnsupportedVersionError("unsupported " + magic + " version '" + std::string(tokens[1]) +
                                  "' (this build reads v" + std::to_string(kFormatVersion) + ")");
  }
  Header header;
  for (std::size_t k = 2; k < tokens.size(); ++k) {
    const auto eq = tokens[k].find('=');
    if (eq == std::string_view::npos) {
      throw CorruptionError("malformed header field '" + std::string(tokens[k]) + "'");
    }
    header.fields.emplace(std::string(tokens[k].substr(0, eq)),
                          std::string(tokens[k].substr(eq + 1)));
  }
  return header;
}

std::vector<std::string> body_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

void read_reals(std::string_view line, std::span<double> out, std::string_view what) {
  const auto tokens = split_ws(line);
  if (tokens.size() != out.size()) {
    throw CorruptionError(std::string(what) + " has " + std::to_string(tokens.size()) +
                          " values, expected " + std::to_string(out.size()));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto v = parse_number<double>(tokens[k]);
    if (!v || !std::isfinite(*v)) {
      throw CorruptionError(std::string(what) + " holds a bad value '" + std::string(tokens[k]) + "'");
    }
    out[k] = *v;
  }
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k > 0) out << ' ';
    out << format_exact(row[k]);
  }
  out << '\n';
}

std::string to_text(auto&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

std::filesystem::path vocab_path(const std::filesystem::path& log_path) {
  auto p = log_path;
  p += ".vocab";
  return p;
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError(path.string(), std::strerror(errno));
  auto fail = [&](int err) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw IoError(path.string(), std::strerror(err));
  };
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(errno);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) fail(errno);
  if (::close(fd) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw IoError(path.string(), std::strerror(err));
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw IoError(path.string(), std::strerror(err));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --- model -----------------------------------------------------------------

void write_model(std::ostream& out, const FactorModel& model) {
  out << "#dynak-model v" << kFormatVersion << " kind=" << to_string(model.kind)
      << " f=" << model.dim() << " users=" << model.num_users()
      << " items=" << model.num_items() << " t=" << format_exact(model.anchor) << '\n';
  for (std::size_t u = 0; u < model.num_users(); ++u) write_row(out, model.user_factors.row(u));
  for (std::size_t i = 0; i < model.num_items(); ++i) write_row(out, model.item_factors.row(i));
  write_row(out, model.boundaries);
}

FactorModel read_model(std::istream& in) {
  const auto header = read_header(in, "model");
  FactorModel model;
  try {
    model.kind = parse_model_kind(header.get("kind"));
  } catch (const ConfigError&) {
    throw CorruptionError("model header has unknown kind '" + std::string(header.get("kind")) + "'");
  }
  const std::size_t f = header.count("f");
  const std::size_t users = header.count("users");
  const std::size_t items = header.count("items");
  model.anchor = header.real("t");
  if (f == 0) throw CorruptionError("model header declares f=0");

  const auto lines = body_lines(in);
  const std::size_t expected = users + items + 1;
  if (lines.size() != expected) {
    throw CorruptionError("model header declares users=" + std::to_string(users) +
                          " items=" + std::to_string(items) + " (" + std::to_string(expected) +
                          " body rows) but the body has " + std::to_string(lines.size()) +
                          " rows");
  }
  model.user_factors = Matrix(users, f);
  model.item_factors = Matrix(items, f);
  model.boundaries.assign(users, 0.0);
  for (std::size_t u = 0; u < users; ++u) {
    read_reals(lines[u], model.user_factors.row(u), "user row " + std::to_string(u));
  }
  for (std::size_t i = 0; i < items; ++i) {
    read_reals(lines[users + i], model.item_factors.row(i), "item row " + std::to_string(i));
  }
  read_reals(lines.back(), model.boundaries, "boundary row");
  return model;
}

void save_model(const FactorModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, to_text([&](std::ostream& out) { write_model(out, model); }));
}

FactorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open model file");
  try {
    return read_model(in);
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

// --- logs and splits -------------------------------------------------------

void write_log(std::ostream& out, const InteractionLog& log) {
  out << "#dynak-log v" << kFormatVersion << " users=" << log.num_users()
      << " items=" << log.num_items() << '\n';
  for (const auto& x : log.interactions) {
    out << x.user << '\t' << x.item << '\t' << x.time << '\t';
    if (x.basket) {
      out << *x.basket;
    } else {
      out << '-';
    }
    out << '\n';
  }
}

InteractionLog read_log(std::istream& in) {
  const auto header = read_header(in, "log");
  const std::size_t users = header.count("users");
  const std::size_t items = header.count("items");
  InteractionLog log;
  for (std::size_t u = 0; u < users; ++u) log.vocab.users.push_back(std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) log.vocab.items.push_back(std::to_string(i));
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) throw ParseError(lineno, "log record needs 4 tab-separated fields");
    const auto u = parse_number<std::uint32_t>(f[0]);
    const auto i = parse_number<std::uint32_t>(f[1]);
    const auto t = parse_number<std::int64_t>(f[2]);
    if (!u || !i || !t || *t < 0) throw ParseError(lineno, "bad log record");
    if (*u >= users || *i >= items) {
      throw CorruptionError("line " + std::to_string(lineno) + ": index outside the declared vocabulary");
    }
    Interaction x{*u, *i, *t, std::nullopt};
    if (f[3] != "-") {
      const auto b = parse_number<std::int32_t>(f[3]);
      if (!b || *b < 0) throw ParseError(lineno, "bad basket index");
      x.basket = *b;
    }
    log.interactions.push_back(x);
  }
  return log;
}

void write_vocab(std::ostream& out, const Vocabulary& vocab) {
  out << "#dynak-vocab v" << kFormatVersion << " users=" << vocab.users.size()
      << " items=" << vocab.items.size() << '\n';
  for (std::size_t u = 0; u < vocab.users.size(); ++u) out << "user\t" << u << '\t' << vocab.users[u] << '\n';
  for (std::size_t i = 0; i < vocab.items.size(); ++i) out << "item\t" << i << '\t' << vocab.items[i] << '\n';
}

Vocabulary read_vocab(std::istream& in) {
  const auto header = read_header(in, "vocab");
  Vocabulary vocab;
  vocab.users.resize(header.count("users"));
  vocab.items.resize(header.count("items"));
  std::vector<bool> user_seen(vocab.users.size(), false);
  std::vector<bool> item_seen(vocab.items.size(), false);
  for (const auto& line : body_lines(in)) {
    const auto f = split_tabs(line);
    const auto idx = f.size() == 3 ? parse_number<std::size_t>(f[1]) : std::nullopt;
    if (!idx || f[2].empty()) throw CorruptionError("bad vocabulary line '" + line + "'");
    auto& names = f[0] == "user" ? vocab.users : vocab.items;
    auto& seen = f[0] == "user" ? user_seen : item_seen;
    if ((f[0] != "user" && f[0] != "item") || *idx >= names.size() || seen[*idx]) {
      throw CorruptionError("bad vocabulary line '" + line + "'");
    }
    names[*idx] = std::string(f[2]);
    seen[*idx] = true;
  }
  const auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  if (!all(user_seen) || !all(item_seen)) throw CorruptionError("vocabulary file is incomplete");
  return vocab;
}

void save_log(const InteractionLog& log, const std::filesystem::path& path) {
  const auto body = to_text([&](std::ostream& out) { write_log(out, log); });
  const auto vocab = to_text([&](std::ostream& out) { write_vocab(out, log.vocab); });
  write_file_atomic(vocab_path(path), vocab);
  write_file_atomic(path, body);
}

InteractionLog load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open log file");
  auto log = read_log(in);
  const auto vp = vocab_path(path);
  if (std::filesystem::exists(vp)) {
    std::ifstream vin(vp);
    auto vocab = read_vocab(vin);
    if (vocab.users.size() != log.num_users() || vocab.items.size() != log.num_items()) {
      throw CorruptionError(vp.string() + ": vocabulary sizes disagree with " + path.string());
    }
    log.vocab = std::move(vocab);
  }
  return log;
}

void write_test_sets(std::ostream& out, const SplitDataset& split) {
  out << "#dynak-test v" << kFormatVersion << " users=" << split.train.num_users()
      << " items=" << split.train.num_items() << " dropped=" << split.dropped_users << '\n';
  for (const auto& [user, items] : split.test) {
    for (const ItemId i : items) out << user << '\t' << i << '\n';
  }
}

void save_split(const SplitDataset& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto test = to_text([&](std::ostream& out) { write_test_sets(out, split); });
  save_log(split.train, dir / "train.tsv");
  write_file_atomic(dir / "test.tsv", test);
}

SplitDataset load_split(const std::filesystem::path& dir) {
  SplitDataset split;
  split.train = load_log(dir / "train.tsv");
  const auto path = dir / "test.tsv";
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open test file");
  const auto header = read_header(in, "test");
  if (header.count("users") != split.train.num_users() ||
      header.count("items") != split.train.num_items()) {
    throw CorruptionError(path.string() + ": vocabulary sizes disagree with train.tsv");
  }
  split.dropped_users = header.count("dropped");
  for (const auto& line : body_lines(in)) {
    const auto f = split_tabs(line);
    const auto u = f.size() == 2 ? parse_number<std::uint32_t>(f[0]) : std::nullopt;
    const auto i = f.size() == 2 ? parse_number<std::uint32_t>(f[1]) : std::nullopt;
    if (!u || !i || *u >= split.train.num_users() || *i >= split.train.num_items()) {
      throw CorruptionError(path.string() + ": bad test record '" + line + "'");
    }
    split.test[*u].push_back(*i);
  }
  for (auto& [u, items] : split.test) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return split;
}

// --- reports ---------------------------------------------------------------

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "f1=" << format_real(r.f1) << " precision=" << format_real(r.precision)
      << " recall=" << format_real(r.recall) << " ndcg=" << format_real(r.ndcg)
      << " cover_ratio=" << format_real(r.cover_ratio) << " users=" << r.users_total
      << " covered=" << r.users_covered;
  if (r.users_skipped > 0) out << " skipped=" << r.users_skipped;
  return out.str();
}

std::string format_per_user(const EvalReport& report, const Vocabulary& vocab) {
  std::ostringstream out;
  out << "#dynak-peruser v" << kFormatVersion << " users=" << report.per_user.size() << '\n';
  out << "user\tcovered\tlist_size\thits\tprecision\trecall\tf1\tndcg\n";
  for (const auto& m : report.per_user) {
    out << (m.user < vocab.users.size() ? vocab.users[m.user] : std::to_string(m.user)) << '\t'
        << (m.covered ? 1 : 0) << '\t' << m.list_size << '\t' << m.hits << '\t'
        << format_real(m.precision) << '\t' << format_real(m.recall) << '\t'
        << format_real(m.f1) << '\t' << format_real(m.ndcg) << '\n';
  }
  return out.str();
}

std::string format_trace(const TrainReport& report) {
  std::ostringstream out;
  out << "#dynak-trace v" << kFormatVersion << '\n';
  for (const auto& c : report.checkpoints) {
    out << c.iteration << '\t' << (c.cf_steps > 0 ? format_real(c.cf_loss) : "-") << '\t'
        << (c.rk_steps > 0 ? format_real(c.rk_loss) : "-") << '\n';
  }
  return out.str();
}

std::string format_recommendations(std::span<const RecommendationList> lists,
                                   const Vocabulary& vocab) {
  std::ostringstream out;
  out << "#dynak-recs v" << kFormatVersion << " users=" << lists.size() << '\n';
  for (const auto& list : lists) {
    const auto& user =
        list.user < vocab.users.size() ? vocab.users[list.user] : std::to_string(list.user);
    if (list.empty()) {
      out << user << "\t-\t0\t-\n";
      continue;
    }
    for (std::size_t r = 0; r < list.size(); ++r) {
      const auto& e = list.entries[r];
      out << user << '\t'
          << (e.item < vocab.items.size() ? vocab.items[e.item] : std::to_string(e.item)) << '\t'
          << r + 1 << '\t' << format_real(e.score) << '\n';
    }
  }
  return out.str();
}

}  // namespace dynak
