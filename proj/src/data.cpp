#include "panelkit/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "panelkit/csv.hpp"
#include "panelkit/errors.hpp"

namespace panelkit::data {

namespace {

constexpr std::string_view kLevelNames[] = {"VeryToxic", "Toxic", "Neither",
                                            "Healthy", "VeryHealthy"};

// Maps header names to column indices, insisting every required column is
// present exactly once. Extra columns are rejected: a typoed header would
// otherwise silently drop data.
std::vector<std::size_t> resolve_columns(
    const csv::Table& t, const std::vector<std::string>& required) {
  std::vector<std::size_t> idx(required.size());
  std::vector<bool> seen(t.header.size(), false);
  for (std::size_t i = 0; i < required.size(); ++i) {
    auto it = std::find(t.header.begin(), t.header.end(), required[i]);
    if (it == t.header.end())
      throw ValidationError(t.source + ": missing column '" + required[i] +
                            "'");
    idx[i] = static_cast<std::size_t>(it - t.header.begin());
    seen[idx[i]] = true;
  }
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (!seen[i])
      throw ValidationError(t.source + ": unknown column '" + t.header[i] +
                            "'");
  }
  return idx;
}

[[noreturn]] void fail_row(const csv::Table& t, std::size_t row,
                           const std::string& msg) {
  throw ValidationError(t.source + ": record " +
                        std::to_string(t.records[row]) + ": " + msg);
}

std::string row_context(const csv::Table& t, std::size_t row) {
  return t.source + ": record " + std::to_string(t.records[row]);
}

double parse_decimal(std::string_view text, const std::string& context) {
  if (text.empty()) throw ValidationError(context + ": empty value");
  std::string buf(text);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE)
    throw ValidationError(context + ": cannot parse number '" + buf + "'");
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& context) {
  if (text.empty()) throw ValidationError(context + ": empty value");
  std::string buf(text);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(buf.c_str(), &end, 10);
  if (end != buf.c_str() + buf.size() || errno == ERANGE)
    throw ValidationError(context + ": cannot parse integer '" + buf + "'");
  return v;
}

}  // namespace

bool BinarizeRule::positive(Level level) const {
  switch (level) {
    case Level::very_toxic: return very_toxic;
    case Level::toxic: return toxic;
    case Level::neither: return neither;
    case Level::healthy: return healthy;
    case Level::very_healthy: return very_healthy;
  }
  throw ValidationError("invalid ordinal level");
}

int BinarizeRule::binarize(const DirectValue& v) const {
  if (const int* b = std::get_if<int>(&v)) return *b;
  return positive(std::get<Level>(v)) ? 1 : 0;
}

std::string_view level_name(Level level) {
  return kLevelNames[static_cast<int>(level)];
}

std::optional<Level> parse_level(std::string_view token) {
  for (int i = 0; i < 5; ++i) {
    if (token == kLevelNames[i]) return static_cast<Level>(i);
  }
  return std::nullopt;
}

double parse_fraction(std::string_view text, const std::string& context) {
  double v;
  if (!text.empty() && text.back() == '%') {
    v = parse_decimal(text.substr(0, text.size() - 1), context) / 100.0;
  } else {
    v = parse_decimal(text, context);
  }
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(context + ": value '" + std::string(text) +
                          "' outside [0,1]");
  return v;
}

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

AnnotationTable read_annotations(std::istream& in, const std::string& source) {
  csv::Table t = csv::read(in, source);
  auto cols = resolve_columns(
      t, {"item_id", "group_id", "annotator_id", "kind", "value"});

  AnnotationTable table;
  table.rows.reserve(t.rows.size());
  std::set<std::tuple<std::string, std::string, std::string, Kind>> keys;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Annotation a;
    a.item_id = row[cols[0]];
    a.group_id = row[cols[1]];
    a.annotator_id = row[cols[2]];
    if (a.item_id.empty() || a.group_id.empty() || a.annotator_id.empty())
      fail_row(t, r, "empty id field");

    const std::string& kind = row[cols[3]];
    const std::string& value = row[cols[4]];
    if (kind == "direct") {
      a.kind = Kind::direct;
      if (auto level = parse_level(value)) {
        a.direct = *level;
      } else if (value == "0" || value == "1") {
        a.direct = value == "1" ? 1 : 0;
      } else {
        fail_row(t, r,
                 "direct value must be an ordinal level or 0/1, got '" +
                     value + "'");
      }
    } else if (kind == "perspective") {
      a.kind = Kind::perspective;
      a.fraction = parse_fraction(value, row_context(t, r));
    } else {
      fail_row(t, r, "kind must be 'direct' or 'perspective', got '" + kind +
                         "'");
    }

    if (!keys.emplace(a.item_id, a.group_id, a.annotator_id, a.kind).second)
      fail_row(t, r, "duplicate annotation for (item='" + a.item_id +
                         "', group='" + a.group_id + "', annotator='" +
                         a.annotator_id + "', kind=" + kind + ")");
    table.rows.push_back(std::move(a));
  }
  return table;
}

AnnotationTable load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_annotations(in, path.string());
}

PredictionTable read_predictions(std::istream& in, const std::string& source) {
  csv::Table t = csv::read(in, source);
  auto cols = resolve_columns(
      t, {"item_id", "group_id", "estimator_id", "sample_idx", "value"});

  PredictionTable table;
  table.rows.reserve(t.rows.size());
  std::set<std::tuple<std::string, std::string, std::string, std::int64_t>>
      keys;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Prediction p;
    p.item_id = row[cols[0]];
    p.group_id = row[cols[1]];
    p.estimator_id = row[cols[2]];
    if (p.item_id.empty() || p.group_id.empty() || p.estimator_id.empty())
      fail_row(t, r, "empty id field");
    p.sample_idx = parse_int(row[cols[3]], row_context(t, r));
    if (p.sample_idx < 0) fail_row(t, r, "sample_idx must be non-negative");
    p.value = parse_fraction(row[cols[4]], row_context(t, r));

    if (!keys.emplace(p.item_id, p.group_id, p.estimator_id, p.sample_idx)
             .second)
      fail_row(t, r, "duplicate prediction for (item='" + p.item_id +
                         "', group='" + p.group_id + "', estimator='" +
                         p.estimator_id +
                         "', sample_idx=" + std::to_string(p.sample_idx) +
                         ")");
    table.rows.push_back(std::move(p));
  }
  return table;
}

PredictionTable load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_predictions(in, path.string());
}

void write_annotations(std::ostream& out, const AnnotationTable& table) {
  csv::Table t;
  t.header = {"item_id", "group_id", "annotator_id", "kind", "value"};
  for (const auto& a : table.rows) {
    std::string value;
    if (a.kind == Kind::direct) {
      if (const int* b = std::get_if<int>(&a.direct)) {
        value = *b ? "1" : "0";
      } else {
        value = std::string(level_name(std::get<Level>(a.direct)));
      }
    } else {
      value = format_fraction(a.fraction);
    }
    t.rows.push_back({a.item_id, a.group_id, a.annotator_id,
                      a.kind == Kind::direct ? "direct" : "perspective",
                      value});
  }
  csv::write(out, t);
}

void write_annotations(const std::filesystem::path& path,
                       const AnnotationTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string());
  write_annotations(out, table);
}

void write_predictions(std::ostream& out, const PredictionTable& table) {
  csv::Table t;
  t.header = {"item_id", "group_id", "estimator_id", "sample_idx", "value"};
  for (const auto& p : table.rows) {
    t.rows.push_back({p.item_id, p.group_id, p.estimator_id,
                      std::to_string(p.sample_idx),
                      format_fraction(p.value)});
  }
  csv::write(out, t);
}

void write_predictions(const std::filesystem::path& path,
                       const PredictionTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string());
  write_predictions(out, table);
}

GroundTruth derive_ground_truth(const AnnotationTable& table,
                                const BinarizeRule& rule) {
  std::map<Key, std::pair<std::size_t, std::size_t>> counts;  // positive, total
  for (const auto& a : table.rows) {
    if (a.kind != Kind::direct) continue;
    auto& [pos, total] = counts[Key{a.item_id, a.group_id}];
    pos += static_cast<std::size_t>(rule.binarize(a.direct));
    ++total;
  }
  if (counts.empty())
    throw ValidationError("no direct annotations, cannot derive ground truth");

  GroundTruth truth;
  for (const auto& [key, pt] : counts) {
    truth[key] = Truth{static_cast<double>(pt.first) /
                           static_cast<double>(pt.second),
                       pt.second};
  }
  return truth;
}

GroundTruth derive_ground_truth(const AnnotationTable& table,
                                const std::vector<Key>& required,
                                const BinarizeRule& rule) {
  GroundTruth truth = derive_ground_truth(table, rule);
  for (const auto& key : required) {
    if (!truth.contains(key))
      throw ValidationError("no direct annotations for (item='" +
                            key.item_id + "', group='" + key.group_id + "')");
  }
  return truth;
}

Pools pools_from_predictions(const PredictionTable& preds) {
  std::map<PoolKey, std::vector<std::pair<std::int64_t, double>>> staged;
  for (const auto& p : preds.rows) {
    staged[PoolKey{p.group_id, p.estimator_id, p.item_id}].emplace_back(
        p.sample_idx, p.value);
  }
  Pools pools;
  for (auto& [key, samples] : staged) {
    std::sort(samples.begin(), samples.end());
    auto& pool = pools[key];
    pool.reserve(samples.size());
    for (const auto& [idx, value] : samples) pool.push_back(value);
  }
  return pools;
}

PredictionTable merge_predictions(const std::vector<PredictionTable>& tables) {
  PredictionTable merged;
  std::set<std::tuple<std::string, std::string, std::string, std::int64_t>>
      keys;
  for (const auto& table : tables) {
    for (const auto& p : table.rows) {
      if (!keys.emplace(p.item_id, p.group_id, p.estimator_id, p.sample_idx)
               .second)
        throw ValidationError(
            "duplicate prediction across inputs for (item='" + p.item_id +
            "', group='" + p.group_id + "', estimator='" + p.estimator_id +
            "', sample_idx=" + std::to_string(p.sample_idx) + ")");
      merged.rows.push_back(p);
    }
  }
  return merged;
}

Pools merge_pools(Pools a, Pools b) {
  for (auto& [key, pool] : b) {
    if (a.contains(key))
      throw ValidationError("estimator id collision: (item='" + key.item_id +
                            "', group='" + key.group_id + "', estimator='" +
                            key.estimator_id +
                            "') appears in more than one source");
    a[key] = std::move(pool);
  }
  return a;
}

Pools pools_from_perspective(const AnnotationTable& table,
                             std::string_view estimator_id) {
  std::map<PoolKey, std::vector<std::pair<std::string, double>>> staged;
  for (const auto& a : table.rows) {
    if (a.kind != Kind::perspective) continue;
    staged[PoolKey{a.group_id, std::string(estimator_id), a.item_id}]
        .emplace_back(a.annotator_id, a.fraction);
  }
  Pools pools;
  for (auto& [key, samples] : staged) {
    std::sort(samples.begin(), samples.end());
    auto& pool = pools[key];
    pool.reserve(samples.size());
    for (const auto& [id, value] : samples) pool.push_back(value);
  }
  return pools;
}

}  // namespace panelkit::data
