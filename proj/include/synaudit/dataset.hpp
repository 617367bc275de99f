#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace synaudit {

// Input/contract violations map to CLI exit code 2; everything else is 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { Numeric, Categorical };
enum class MissingPolicy { Reject, DropRow };
enum class Provenance { Real, Synthetic, Unlabeled };

// Reserved categorical cell for labels outside the schema's category list.
inline constexpr double kUnknownCategory = -1.0;
inline constexpr const char* kUnknownLabel = "unknown";

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<std::string> categories;  // categorical only, ordered
  MissingPolicy missing_policy = MissingPolicy::DropRow;

  // Index of a trimmed label, or kUnknownCategory when unlisted.
  double category_index(std::string_view label) const;
  const std::string& category_label(double cell) const;
};

using Schema = std::vector<ColumnSchema>;

void validate_schema(const Schema& schema);
bool same_columns(const Schema& a, const Schema& b);  // names and kinds
std::string schema_fingerprint(const Schema& schema);

Schema schema_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json schema_to_json(const Schema& schema);
Schema load_schema_file(const std::string& path);

// Column-typed table. Cells are doubles: numeric columns store the value,
// categorical columns store the category index (kUnknownCategory for the
// reserved "unknown" label). Immutable in spirit: operations return copies.
class TabularDataset {
 public:
  TabularDataset() = default;
  TabularDataset(Schema schema, Provenance provenance = Provenance::Unlabeled);
  TabularDataset(Schema schema, std::vector<double> cells, Provenance provenance);

  std::size_t n_rows() const { return schema_.empty() ? 0 : cells_.size() / schema_.size(); }
  std::size_t n_cols() const { return schema_.size(); }
  const Schema& schema() const { return schema_; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  double cell(std::size_t row, std::size_t col) const { return cells_[row * n_cols() + col]; }
  void set_cell(std::size_t row, std::size_t col, double v) { cells_[row * n_cols() + col] = v; }
  std::span<const double> row(std::size_t i) const {
    return {cells_.data() + i * n_cols(), n_cols()};
  }
  const std::vector<double>& cells() const { return cells_; }

  void append_row(std::span<const double> row);
  TabularDataset select_rows(const std::vector<std::size_t>& indices) const;
  std::size_t column_index(std::string_view name) const;  // throws ValidationError

  // Canonical text of a cell: shortest round-trip for numerics, label text
  // for categoricals.
  std::string cell_text(std::size_t row, std::size_t col) const;

 private:
  Schema schema_;
  std::vector<double> cells_;  // row-major n x p
  Provenance provenance_ = Provenance::Unlabeled;
};

// Labeled real-vs-synthetic pool. label 1 = real, 0 = synthetic.
struct DetectionDataset {
  TabularDataset data;
  std::vector<int> labels;
  std::vector<std::uint8_t> split;  // 0 = train, 1 = test; empty before splitting
  std::uint64_t seed = 0;

  bool has_split() const { return !split.empty(); }
  std::vector<std::size_t> rows_in_split(bool test) const;
  TabularDataset subset(bool test, std::vector<int>* labels_out = nullptr) const;
};

// --- schema inference and CSV ingestion -----------------------------------

inline constexpr int kIntegerCategoryThreshold = 20;

// Raw text table used for inference before typing.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable parse_csv(const std::string& path);

// A column is numeric when every non-missing cell parses as a finite number
// and either some value is non-integral or the distinct count exceeds
// integer_category_threshold; otherwise categorical with the observed
// categories in sorted order.
Schema infer_schema(const RawTable& sample,
                    int integer_category_threshold = kIntegerCategoryThreshold);

TabularDataset load_csv(const std::string& path, const std::optional<Schema>& schema = {},
                        Provenance provenance = Provenance::Unlabeled);
void save_csv(const TabularDataset& d, const std::string& path);

// --- detection-dataset construction ----------------------------------------

// Concatenates real and synthetic rows under a merged category union,
// downsampling the larger side at random so class counts are equal.
DetectionDataset build_detection_dataset(const TabularDataset& real,
                                         const TabularDataset& synthetic, std::uint64_t seed);

// Stratified-by-label assignment of |test| = round(test_fraction * n) rows.
void train_test_split(DetectionDataset& d, double test_fraction, std::uint64_t seed);

// --- summary statistics -----------------------------------------------------

struct Predicate {
  enum class Op { Eq, Le, Ge, Lt, Gt };
  std::string column;
  Op op = Op::Eq;
  double number = 0.0;     // numeric comparisons
  std::string label;       // categorical equality (op must be Eq)
  bool is_label = false;

  std::string text() const;
};

struct ConditionalQuery {
  enum class Kind { Mean, Fraction, Correlation };
  Kind kind = Kind::Mean;
  std::string target;        // column summarized
  double target_value = 0;   // Fraction on numeric target: equality value
  std::string target_label;  // Fraction on categorical target
  std::string second;        // Correlation partner column
  Predicate where;
};

struct ConditionalResult {
  std::string description;
  bool defined = false;
  double value = 0.0;
  std::size_t support = 0;
};

struct NumericMarginal {
  double mean = 0, sd = 0, min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

struct ColumnMarginal {
  std::string column;
  ColumnKind kind;
  NumericMarginal numeric;                                   // numeric columns
  std::vector<std::pair<std::string, double>> frequencies;   // categorical columns
};

struct StatsReport {
  std::size_t n_rows = 0;
  std::vector<ColumnMarginal> marginals;
  std::vector<std::string> numeric_columns;
  std::vector<std::vector<double>> correlations;  // symmetric, unit diagonal
  std::vector<ConditionalResult> conditionals;
};

StatsReport column_statistics(const TabularDataset& d,
                              const std::vector<ConditionalQuery>& conditionals = {});
nlohmann::ordered_json stats_to_json(const StatsReport& report);

// Shared helpers.
std::string format_double(double v);  // shortest round-trip text
double quantile(std::vector<double> sorted_values, double p);  // type-7 interpolation

}  // namespace synaudit
