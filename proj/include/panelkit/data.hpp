#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace panelkit::data {

// Annotation tables: item_id,group_id,annotator_id,kind,value
// Prediction tables: item_id,group_id,estimator_id,sample_idx,value
//
// kind=direct rows carry one of the five ordinal levels (or an already
// binarized 0/1 label); kind=perspective rows carry a fraction in [0,1],
// written either as a decimal or as a percent string like "75%".

enum class Kind { direct, perspective };

enum class Level { very_toxic, toxic, neither, healthy, very_healthy };

// A direct judgment: ordinal level, or 0/1 if the source was pre-binarized.
using DirectValue = std::variant<Level, int>;

struct Annotation {
  std::string item_id;
  std::string group_id;
  std::string annotator_id;
  Kind kind = Kind::direct;
  DirectValue direct{};    // meaningful when kind == direct
  double fraction = 0.0;   // meaningful when kind == perspective
};

struct AnnotationTable {
  std::vector<Annotation> rows;
};

struct Prediction {
  std::string item_id;
  std::string group_id;
  std::string estimator_id;
  std::int64_t sample_idx = 0;
  double value = 0.0;
};

struct PredictionTable {
  std::vector<Prediction> rows;
};

struct Key {
  std::string item_id;
  std::string group_id;
  auto operator<=>(const Key&) const = default;
};

struct Truth {
  double f_star = 0.0;
  std::size_t support_count = 0;  // number of direct labels behind f_star
};

using GroundTruth = std::map<Key, Truth>;

// Which ordinal levels count as a positive label when binarizing.
// The default treats the two toxic levels as positive.
struct BinarizeRule {
  bool very_toxic = true;
  bool toxic = true;
  bool neither = false;
  bool healthy = false;
  bool very_healthy = false;

  bool positive(Level level) const;
  int binarize(const DirectValue& v) const;
};

std::string_view level_name(Level level);
std::optional<Level> parse_level(std::string_view token);

// Accepts "0.75" or "75%", rejects anything outside [0,1].
// `context` prefixes error messages (file/record of the offending value).
double parse_fraction(std::string_view text, const std::string& context);

// Canonical fraction formatting: fixed, six digits after the point.
std::string format_fraction(double v);

AnnotationTable load_annotations(const std::filesystem::path& path);
AnnotationTable read_annotations(std::istream& in, const std::string& source);
PredictionTable load_predictions(const std::filesystem::path& path);
PredictionTable read_predictions(std::istream& in, const std::string& source);

void write_annotations(std::ostream& out, const AnnotationTable& table);
void write_annotations(const std::filesystem::path& path,
                       const AnnotationTable& table);
void write_predictions(std::ostream& out, const PredictionTable& table);
void write_predictions(const std::filesystem::path& path,
                       const PredictionTable& table);

// f_star(item, group) = mean binarized direct label, over every (item, group)
// that has at least one direct annotation.
GroundTruth derive_ground_truth(const AnnotationTable& table,
                                const BinarizeRule& rule = {});

// Same, but demands coverage of `required` keys and errors on gaps.
GroundTruth derive_ground_truth(const AnnotationTable& table,
                                const std::vector<Key>& required,
                                const BinarizeRule& rule = {});

// Prediction pools keyed by (group, estimator, item). Pool order follows
// sample_idx for predictions and annotator_id for perspective annotations,
// so pools are independent of input row order.
struct PoolKey {
  std::string group_id;
  std::string estimator_id;
  std::string item_id;
  auto operator<=>(const PoolKey&) const = default;
};

using Pools = std::map<PoolKey, std::vector<double>>;

Pools pools_from_predictions(const PredictionTable& preds);
Pools pools_from_perspective(const AnnotationTable& table,
                             std::string_view estimator_id = "human_pt");

// Concatenates prediction tables, rejecting duplicate
// (item, group, estimator, sample_idx) keys across inputs.
PredictionTable merge_predictions(const std::vector<PredictionTable>& tables);

// Union of two pool maps; a pool key present in both is an error.
Pools merge_pools(Pools a, Pools b);

}  // namespace panelkit::data
