#include "synaudit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
    --e;
  return std::string(s.substr(b, e - b));
}

bool is_missing(const std::string& trimmed) { return trimmed.empty(); }

bool parse_number(const std::string& trimmed, double& out) {
  if (trimmed.empty()) return false;
  const char* begin = trimmed.data();
  const char* end = begin + trimmed.size();
  if (*begin == '+') ++begin;  // from_chars rejects a leading plus
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) return false;
  return std::isfinite(out);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double quantile(std::vector<double> sorted_values, double p) {
  if (sorted_values.empty()) throw ValidationError("quantile of empty column");
  if (p <= 0) return sorted_values.front();
  if (p >= 1) return sorted_values.back();
  double h = p * static_cast<double>(sorted_values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted_values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

// --- ColumnSchema -----------------------------------------------------------

double ColumnSchema::category_index(std::string_view label) const {
  std::string t = trim(label);
  if (t == kUnknownLabel) return kUnknownCategory;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == t) return static_cast<double>(i);
  }
  return kUnknownCategory;
}

const std::string& ColumnSchema::category_label(double cell) const {
  static const std::string unknown = kUnknownLabel;
  if (cell < 0) return unknown;
  auto idx = static_cast<std::size_t>(cell);
  if (idx >= categories.size()) return unknown;
  return categories[idx];
}

void validate_schema(const Schema& schema) {
  std::set<std::string> names;
  for (const auto& col : schema) {
    if (col.name.empty()) throw ValidationError("schema: empty column name");
    if (!names.insert(col.name).second) {
      throw ValidationError("schema: duplicate column name '" + col.name + "'");
    }
    if (col.kind == ColumnKind::Categorical) {
      if (col.categories.empty()) {
        throw ValidationError("schema: categorical column '" + col.name + "' has no categories");
      }
      std::set<std::string> cats(col.categories.begin(), col.categories.end());
      if (cats.size() != col.categories.size()) {
        throw ValidationError("schema: duplicate category in column '" + col.name + "'");
      }
      if (cats.count(kUnknownLabel)) {
        throw ValidationError("schema: category list of '" + col.name +
                              "' uses the reserved label 'unknown'");
      }
    }
  }
}

bool same_columns(const Schema& a, const Schema& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].kind != b[i].kind) return false;
  }
  return true;
}

std::string schema_fingerprint(const Schema& schema) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  for (const auto& col : schema) {
    mix(col.name);
    mix(col.kind == ColumnKind::Numeric ? "num" : "cat");
    for (const auto& c : col.categories) mix(c);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Schema schema_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_array()) throw ValidationError("schema JSON must be an array");
  Schema schema;
  for (const auto& item : j) {
    ColumnSchema col;
    col.name = item.at("name").get<std::string>();
    std::string kind = item.at("kind").get<std::string>();
    if (kind == "numeric") {
      col.kind = ColumnKind::Numeric;
    } else if (kind == "categorical") {
      col.kind = ColumnKind::Categorical;
      for (const auto& c : item.at("categories")) col.categories.push_back(c.get<std::string>());
    } else {
      throw ValidationError("schema: unknown kind '" + kind + "'");
    }
    if (item.contains("missing_policy")) {
      std::string mp = item["missing_policy"].get<std::string>();
      if (mp == "reject") {
        col.missing_policy = MissingPolicy::Reject;
      } else if (mp == "drop_row") {
        col.missing_policy = MissingPolicy::DropRow;
      } else {
        throw ValidationError("schema: unknown missing_policy '" + mp + "'");
      }
    }
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

nlohmann::ordered_json schema_to_json(const Schema& schema) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& col : schema) {
    nlohmann::ordered_json item;
    item["name"] = col.name;
    item["kind"] = col.kind == ColumnKind::Numeric ? "numeric" : "categorical";
    if (col.kind == ColumnKind::Categorical) item["categories"] = col.categories;
    item["missing_policy"] = col.missing_policy == MissingPolicy::Reject ? "reject" : "drop_row";
    arr.push_back(std::move(item));
  }
  return arr;
}

Schema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file: " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema file " + path + ": " + e.what());
  }
  return schema_from_json(j);
}

// --- TabularDataset ---------------------------------------------------------

TabularDataset::TabularDataset(Schema schema, Provenance provenance)
    : schema_(std::move(schema)), provenance_(provenance) {
  validate_schema(schema_);
}

TabularDataset::TabularDataset(Schema schema, std::vector<double> cells, Provenance provenance)
    : schema_(std::move(schema)), cells_(std::move(cells)), provenance_(provenance) {
  validate_schema(schema_);
  if (schema_.empty() || cells_.size() % schema_.size() != 0) {
    throw ValidationError("dataset: cell count is not a multiple of the column count");
  }
}

void TabularDataset::append_row(std::span<const double> row) {
  if (row.size() != n_cols()) throw ValidationError("append_row: wrong width");
  cells_.insert(cells_.end(), row.begin(), row.end());
}

TabularDataset TabularDataset::select_rows(const std::vector<std::size_t>& indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * n_cols());
  for (std::size_t i : indices) {
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return TabularDataset(schema_, std::move(out), provenance_);
}

std::size_t TabularDataset::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  throw ValidationError("no such column: " + std::string(name));
}

std::string TabularDataset::cell_text(std::size_t row, std::size_t col) const {
  double v = cell(row, col);
  if (schema_[col].kind == ColumnKind::Numeric) return format_double(v);
  return schema_[col].category_label(v);
}

std::vector<std::size_t> DetectionDataset::rows_in_split(bool test) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if ((split[i] == 1) == test) idx.push_back(i);
  }
  return idx;
}

TabularDataset DetectionDataset::subset(bool test, std::vector<int>* labels_out) const {
  auto idx = rows_in_split(test);
  if (labels_out) {
    labels_out->clear();
    for (std::size_t i : idx) labels_out->push_back(labels[i]);
  }
  return data.select_rows(idx);
}

// --- CSV --------------------------------------------------------------------

RawTable parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  RawTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_started = false;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
  };
  auto end_record = [&]() {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
    record_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_started = true;
        break;
      case ',':
        end_field();
        record_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (record_started || !field.empty() || !record.empty()) end_record();
        break;
      default:
        field.push_back(c);
        record_started = true;
        break;
    }
  }
  if (in_quotes) throw ValidationError(path + ": unterminated quoted field");
  if (record_started || !field.empty() || !record.empty()) end_record();

  if (table.header.empty()) throw ValidationError(path + ": missing header row");
  for (auto& h : table.header) h = trim(h);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw ValidationError(path + ": ragged row " + std::to_string(r + 2) + " has " +
                            std::to_string(table.rows[r].size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
  }
  return table;
}

Schema infer_schema(const RawTable& sample, int integer_category_threshold) {
  if (sample.rows.empty()) throw ValidationError("schema inference needs at least one row");
  Schema schema;
  for (std::size_t c = 0; c < sample.header.size(); ++c) {
    ColumnSchema col;
    col.name = sample.header[c];
    bool all_numeric = true;
    bool any_fractional = false;
    std::set<std::string> distinct;
    std::size_t non_missing = 0;
    for (const auto& row : sample.rows) {
      std::string t = trim(row[c]);
      if (is_missing(t)) continue;
      ++non_missing;
      double v;
      if (all_numeric && parse_number(t, v)) {
        if (v != std::floor(v)) any_fractional = true;
      } else {
        all_numeric = false;
      }
      distinct.insert(t);
    }
    if (non_missing == 0) {
      throw ValidationError("column '" + col.name + "' has no non-missing values");
    }
    bool numeric = all_numeric &&
                   (any_fractional ||
                    distinct.size() > static_cast<std::size_t>(integer_category_threshold));
    if (numeric) {
      col.kind = ColumnKind::Numeric;
    } else {
      col.kind = ColumnKind::Categorical;
      for (const auto& v : distinct) {
        if (v != kUnknownLabel) col.categories.push_back(v);
      }
      if (col.categories.empty()) col.categories.push_back(*distinct.begin());
    }
    schema.push_back(std::move(col));
  }
  validate_schema(schema);
  return schema;
}

TabularDataset load_csv(const std::string& path, const std::optional<Schema>& schema,
                        Provenance provenance) {
  RawTable table = parse_csv(path);
  Schema resolved;
  if (schema) {
    resolved = *schema;
    validate_schema(resolved);
    if (resolved.size() != table.header.size()) {
      throw ValidationError(path + ": header has " + std::to_string(table.header.size()) +
                            " columns, schema has " + std::to_string(resolved.size()));
    }
    for (std::size_t c = 0; c < resolved.size(); ++c) {
      if (resolved[c].name != table.header[c]) {
        throw ValidationError(path + ": header column '" + table.header[c] +
                              "' does not match schema column '" + resolved[c].name + "'");
      }
    }
  } else {
    if (table.rows.empty()) throw ValidationError(path + ": no data rows");
    resolved = infer_schema(table);
  }

  TabularDataset out(resolved, provenance);
  std::vector<double> row_cells(resolved.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool drop = false;
    for (std::size_t c = 0; c < resolved.size() && !drop; ++c) {
      const auto& col = resolved[c];
      std::string t = trim(table.rows[r][c]);
      if (is_missing(t)) {
        if (col.missing_policy == MissingPolicy::Reject) {
          throw ValidationError(path + ": missing value at row " + std::to_string(r + 2) +
                                ", column '" + col.name + "'");
        }
        drop = true;
        break;
      }
      if (col.kind == ColumnKind::Numeric) {
        double v;
        if (!parse_number(t, v)) {
          if (col.missing_policy == MissingPolicy::Reject) {
            throw ValidationError(path + ": cell '" + t + "' at row " + std::to_string(r + 2) +
                                  " is not numeric (column '" + col.name + "')");
          }
          drop = true;
          break;
        }
        row_cells[c] = v;
      } else {
        row_cells[c] = col.category_index(t);
      }
    }
    if (!drop) out.append_row(row_cells);
  }
  if (out.n_rows() == 0) throw ValidationError(path + ": zero data rows after ingestion");
  return out;
}

void save_csv(const TabularDataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  auto write_field = [&out](const std::string& s) {
    bool quote = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!quote) {
      out << s;
      return;
    }
    out << '"';
    for (char c : s) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  };
  for (std::size_t c = 0; c < d.n_cols(); ++c) {
    if (c) out << ',';
    write_field(d.schema()[c].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    for (std::size_t c = 0; c < d.n_cols(); ++c) {
      if (c) out << ',';
      write_field(d.cell_text(r, c));
    }
    out << '\n';
  }
}

// --- detection dataset ------------------------------------------------------

namespace {

// Remaps categorical cells of `d` onto the merged schema.
TabularDataset reindex_categories(const TabularDataset& d, const Schema& merged) {
  std::vector<double> cells;
  cells.reserve(d.n_rows() * d.n_cols());
  std::vector<std::vector<double>> remap(d.n_cols());
  for (std::size_t c = 0; c < d.n_cols(); ++c) {
    if (d.schema()[c].kind != ColumnKind::Categorical) continue;
    remap[c].resize(d.schema()[c].categories.size());
    for (std::size_t k = 0; k < d.schema()[c].categories.size(); ++k) {
      remap[c][k] = merged[c].category_index(d.schema()[c].categories[k]);
    }
  }
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    for (std::size_t c = 0; c < d.n_cols(); ++c) {
      double v = d.cell(r, c);
      if (d.schema()[c].kind == ColumnKind::Categorical && v >= 0) {
        v = remap[c][static_cast<std::size_t>(v)];
      }
      cells.push_back(v);
    }
  }
  return TabularDataset(merged, std::move(cells), d.provenance());
}

}  // namespace

DetectionDataset build_detection_dataset(const TabularDataset& real,
                                         const TabularDataset& synthetic, std::uint64_t seed) {
  if (real.n_rows() == 0 || synthetic.n_rows() == 0) {
    throw ValidationError("build_detection_dataset: empty input");
  }
  if (!same_columns(real.schema(), synthetic.schema())) {
    throw ValidationError("build_detection_dataset: schema mismatch (names/kinds)");
  }

  // Category union: real's listing first, synthetic-only labels appended.
  Schema merged = real.schema();
  for (std::size_t c = 0; c < merged.size(); ++c) {
    if (merged[c].kind != ColumnKind::Categorical) continue;
    for (const auto& cat : synthetic.schema()[c].categories) {
      if (merged[c].category_index(cat) < 0 && cat != kUnknownLabel) {
        merged[c].categories.push_back(cat);
      }
    }
  }

  TabularDataset real_m = reindex_categories(real, merged);
  TabularDataset synth_m = reindex_categories(synthetic, merged);

  std::size_t keep = std::min(real_m.n_rows(), synth_m.n_rows());
  Rng rng(seed);
  auto pick = [&](const TabularDataset& d, std::uint64_t tag) {
    if (d.n_rows() == keep) {
      std::vector<std::size_t> all(keep);
      for (std::size_t i = 0; i < keep; ++i) all[i] = i;
      return all;
    }
    Rng fork = rng.fork(tag);
    auto idx = fork.sample_indices(d.n_rows(), keep);
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  DetectionDataset out;
  out.seed = seed;
  out.data = TabularDataset(merged, Provenance::Unlabeled);
  for (std::size_t i : pick(real_m, 1)) {
    out.data.append_row(real_m.row(i));
    out.labels.push_back(1);
  }
  for (std::size_t i : pick(synth_m, 2)) {
    out.data.append_row(synth_m.row(i));
    out.labels.push_back(0);
  }
  return out;
}

void train_test_split(DetectionDataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("train_test_split: test_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    by_class[d.labels[i] == 1 ? 1 : 0].push_back(i);
  }
  for (const auto& cls : by_class) {
    if (cls.size() < 2) throw ValidationError("train_test_split: a class has fewer than 2 rows");
  }
  // Largest-remainder allocation: |test| = round(fraction * n) overall while
  // each class stays proportional within one row.
  auto target = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(d.labels.size())));
  target = std::clamp<std::size_t>(target, 2, d.labels.size() - 2);
  std::size_t n_test[2];
  double remainder[2];
  std::size_t assigned = 0;
  for (int cls = 0; cls < 2; ++cls) {
    double ideal = test_fraction * static_cast<double>(by_class[cls].size());
    n_test[cls] = static_cast<std::size_t>(std::floor(ideal));
    remainder[cls] = ideal - static_cast<double>(n_test[cls]);
    assigned += n_test[cls];
  }
  while (assigned < target) {
    int cls = remainder[0] >= remainder[1] ? 0 : 1;
    ++n_test[cls];
    remainder[cls] = -1;
    ++assigned;
  }
  for (int cls = 0; cls < 2; ++cls) {
    n_test[cls] = std::clamp<std::size_t>(n_test[cls], 1, by_class[cls].size() - 1);
  }

  d.split.assign(d.labels.size(), 0);
  Rng rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    auto idx = by_class[cls];
    Rng fork = rng.fork(static_cast<std::uint64_t>(cls));
    fork.shuffle(idx);
    for (std::size_t k = 0; k < n_test[cls]; ++k) d.split[idx[k]] = 1;
  }
}

// --- statistics -------------------------------------------------------------

namespace {

std::vector<char> predicate_mask(const TabularDataset& d, const Predicate& p) {
  std::size_t col = d.column_index(p.column);
  const auto& cs = d.schema()[col];
  double target = p.number;
  if (p.is_label) {
    if (cs.kind != ColumnKind::Categorical) {
      throw ValidationError("predicate: label comparison on numeric column '" + p.column + "'");
    }
    if (p.op != Predicate::Op::Eq) {
      throw ValidationError("predicate: categorical columns support only equality");
    }
    target = cs.category_index(p.label);
  }
  std::vector<char> mask(d.n_rows(), 0);
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    double v = d.cell(r, col);
    bool hit = false;
    switch (p.op) {
      case Predicate::Op::Eq: hit = v == target; break;
      case Predicate::Op::Le: hit = v <= target; break;
      case Predicate::Op::Ge: hit = v >= target; break;
      case Predicate::Op::Lt: hit = v < target; break;
      case Predicate::Op::Gt: hit = v > target; break;
    }
    mask[r] = hit ? 1 : 0;
  }
  return mask;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::string Predicate::text() const {
  const char* ops[] = {"==", "<=", ">=", "<", ">"};
  std::string rhs = is_label ? label : format_double(number);
  return column + " " + ops[static_cast<int>(op)] + " " + rhs;
}

StatsReport column_statistics(const TabularDataset& d,
                              const std::vector<ConditionalQuery>& conditionals) {
  StatsReport report;
  report.n_rows = d.n_rows();

  for (std::size_t c = 0; c < d.n_cols(); ++c) {
    const auto& cs = d.schema()[c];
    ColumnMarginal m;
    m.column = cs.name;
    m.kind = cs.kind;
    if (cs.kind == ColumnKind::Numeric) {
      std::vector<double> vals;
      vals.reserve(d.n_rows());
      for (std::size_t r = 0; r < d.n_rows(); ++r) vals.push_back(d.cell(r, c));
      std::sort(vals.begin(), vals.end());
      double mean = 0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double ss = 0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      m.numeric.mean = mean;
      m.numeric.sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
      m.numeric.min = vals.front();
      m.numeric.q25 = quantile(vals, 0.25);
      m.numeric.median = quantile(vals, 0.5);
      m.numeric.q75 = quantile(vals, 0.75);
      m.numeric.max = vals.back();
      report.numeric_columns.push_back(cs.name);
    } else {
      std::vector<double> counts(cs.categories.size() + 1, 0.0);
      for (std::size_t r = 0; r < d.n_rows(); ++r) {
        double v = d.cell(r, c);
        if (v < 0) {
          counts.back() += 1;
        } else {
          counts[static_cast<std::size_t>(v)] += 1;
        }
      }
      auto n = static_cast<double>(d.n_rows());
      for (std::size_t k = 0; k < cs.categories.size(); ++k) {
        m.frequencies.emplace_back(cs.categories[k], counts[k] / n);
      }
      if (counts.back() > 0) m.frequencies.emplace_back(kUnknownLabel, counts.back() / n);
    }
    report.marginals.push_back(std::move(m));
  }

  // Pearson correlations over numeric column pairs.
  std::vector<std::size_t> num_idx;
  for (std::size_t c = 0; c < d.n_cols(); ++c) {
    if (d.schema()[c].kind == ColumnKind::Numeric) num_idx.push_back(c);
  }
  report.correlations.assign(num_idx.size(), std::vector<double>(num_idx.size(), 0.0));
  std::vector<std::vector<double>> cols(num_idx.size());
  for (std::size_t a = 0; a < num_idx.size(); ++a) {
    cols[a].reserve(d.n_rows());
    for (std::size_t r = 0; r < d.n_rows(); ++r) cols[a].push_back(d.cell(r, num_idx[a]));
  }
  for (std::size_t a = 0; a < num_idx.size(); ++a) {
    report.correlations[a][a] = 1.0;
    for (std::size_t b = a + 1; b < num_idx.size(); ++b) {
      double rho = pearson(cols[a], cols[b]);
      report.correlations[a][b] = rho;
      report.correlations[b][a] = rho;
    }
  }

  for (const auto& q : conditionals) {
    ConditionalResult res;
    auto mask = predicate_mask(d, q.where);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask[r]) rows.push_back(r);
    }
    res.support = rows.size();
    std::size_t tcol = d.column_index(q.target);
    const auto& tcs = d.schema()[tcol];
    switch (q.kind) {
      case ConditionalQuery::Kind::Mean: {
        res.description = "mean(" + q.target + " | " + q.where.text() + ")";
        if (tcs.kind != ColumnKind::Numeric) {
          throw ValidationError("conditional mean on categorical column '" + q.target + "'");
        }
        if (!rows.empty()) {
          double s = 0;
          for (std::size_t r : rows) s += d.cell(r, tcol);
          res.value = s / static_cast<double>(rows.size());
          res.defined = true;
        }
        break;
      }
      case ConditionalQuery::Kind::Fraction: {
        double target = tcs.kind == ColumnKind::Numeric ? q.target_value
                                                        : tcs.category_index(q.target_label);
        std::string shown = tcs.kind == ColumnKind::Numeric ? format_double(q.target_value)
                                                            : q.target_label;
        res.description =
            "fraction(" + q.target + " == " + shown + " | " + q.where.text() + ")";
        if (!rows.empty()) {
          double hits = 0;
          for (std::size_t r : rows) {
            if (d.cell(r, tcol) == target) hits += 1;
          }
          res.value = hits / static_cast<double>(rows.size());
          res.defined = true;
        }
        break;
      }
      case ConditionalQuery::Kind::Correlation: {
        std::size_t scol = d.column_index(q.second);
        res.description = "corr(" + q.target + ", " + q.second + " | " + q.where.text() + ")";
        if (tcs.kind != ColumnKind::Numeric ||
            d.schema()[scol].kind != ColumnKind::Numeric) {
          throw ValidationError("conditional correlation needs numeric columns");
        }
        if (rows.size() >= 2) {
          std::vector<double> x, y;
          x.reserve(rows.size());
          y.reserve(rows.size());
          for (std::size_t r : rows) {
            x.push_back(d.cell(r, tcol));
            y.push_back(d.cell(r, scol));
          }
          res.value = pearson(x, y);
          res.defined = true;
        }
        break;
      }
    }
    report.conditionals.push_back(std::move(res));
  }
  return report;
}

nlohmann::ordered_json stats_to_json(const StatsReport& report) {
  nlohmann::ordered_json j;
  j["n_rows"] = report.n_rows;
  nlohmann::ordered_json marginals = nlohmann::ordered_json::array();
  for (const auto& m : report.marginals) {
    nlohmann::ordered_json jm;
    jm["column"] = m.column;
    jm["kind"] = m.kind == ColumnKind::Numeric ? "numeric" : "categorical";
    if (m.kind == ColumnKind::Numeric) {
      jm["mean"] = m.numeric.mean;
      jm["sd"] = m.numeric.sd;
      jm["min"] = m.numeric.min;
      jm["q25"] = m.numeric.q25;
      jm["median"] = m.numeric.median;
      jm["q75"] = m.numeric.q75;
      jm["max"] = m.numeric.max;
    } else {
      nlohmann::ordered_json freq = nlohmann::ordered_json::object();
      for (const auto& [label, f] : m.frequencies) freq[label] = f;
      jm["frequencies"] = std::move(freq);
    }
    marginals.push_back(std::move(jm));
  }
  j["marginals"] = std::move(marginals);
  j["numeric_columns"] = report.numeric_columns;
  j["correlations"] = report.correlations;
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  for (const auto& c : report.conditionals) {
    nlohmann::ordered_json jc;
    jc["description"] = c.description;
    jc["defined"] = c.defined;
    if (c.defined) jc["value"] = c.value;
    jc["support"] = c.support;
    conds.push_back(std::move(jc));
  }
  j["conditionals"] = std::move(conds);
  return j;
}

}  // namespace synaudit
