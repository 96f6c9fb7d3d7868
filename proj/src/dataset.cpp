#include "transport/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "transport/error.hpp"
#include "transport/glm.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "data_model";

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty() || cell == "NA" || cell == "na" || cell == "nan" || cell == "NaN")
    return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    fail_data(kComponent, "cannot parse numeric cell '" + cell + "'");
  return value;
}

// complete-case filtering + structural checks shared by both constructors
StudyDataset finalize(std::vector<Row> rows, Design design,
                      std::vector<std::string> covariate_names,
                      std::vector<std::string> warnings) {
  StudyDataset ds;
  ds.design = design;
  ds.covariate_names = std::move(covariate_names);
  ds.warnings = std::move(warnings);

  std::size_t ignored_ay = 0;
  for (auto& row : rows) {
    if (row.s != 0 && row.s != 1)
      fail_data(kComponent, "non-binary participation indicator (s=" +
                                std::to_string(row.s) + ")");
    bool complete = row.x.size() == ds.covariate_names.size();
    for (double v : row.x)
      if (!std::isfinite(v)) complete = false;
    if (row.s == 1) {
      if (!row.a || !row.y) complete = false;
      if (row.a && *row.a != 0 && *row.a != 1)
        fail_data(kComponent,
                  "non-binary treatment indicator (a=" + std::to_string(*row.a) + ")");
    } else {
      if (row.a || row.y) {
        ++ignored_ay;
        row.a.reset();
        row.y.reset();
      }
    }
    if (complete) {
      ds.rows.push_back(std::move(row));
    } else {
      ++ds.dropped_rows;
    }
  }
  if (ignored_ay > 0)
    ds.warnings.push_back("ignored a/y values on " + std::to_string(ignored_ay) +
                          " non-randomized (s=0) rows");
  if (ds.rows.empty()) fail_data(kComponent, "empty dataset after complete-case filtering");
  return ds;
}

}  // namespace

std::size_t StudyDataset::n0() const {
  std::size_t count = 0;
  for (const auto& r : rows) count += (r.s == 0);
  return count;
}

std::size_t StudyDataset::n1() const { return rows.size() - n0(); }

std::size_t StudyDataset::arm_count(int arm) const {
  std::size_t count = 0;
  for (const auto& r : rows) count += (r.s == 1 && r.a && *r.a == arm);
  return count;
}

int StudyDataset::covariate_index(const std::string& name) const {
  for (std::size_t i = 0; i < covariate_names.size(); ++i)
    if (covariate_names[i] == name) return static_cast<int>(i);
  return -1;
}

StudyDataset load_dataset(const std::string& path, const CsvSchema& schema, Design design) {
  std::ifstream in(path);
  if (!in) fail_data(kComponent, "cannot open file '" + path + "'");

  std::string header_line;
  if (!std::getline(in, header_line)) fail_data(kComponent, "file '" + path + "' is empty");
  auto header = split_line(header_line, schema.delimiter);
  if (header.empty()) fail_data(kComponent, "header row has no columns");

  auto find_column = [&](const std::string& wanted) -> int {
    const std::string w = to_lower(wanted);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (to_lower(header[i]) == w) return static_cast<int>(i);
    return -1;
  };

  const int s_col = find_column(schema.s_column);
  const int a_col = find_column(schema.a_column);
  const int y_col = find_column(schema.y_column);
  if (s_col < 0) fail_data(kComponent, "missing schema column '" + schema.s_column + "'");
  if (a_col < 0) fail_data(kComponent, "missing schema column '" + schema.a_column + "'");
  if (y_col < 0) fail_data(kComponent, "missing schema column '" + schema.y_column + "'");

  std::set<int> special{s_col, a_col, y_col};
  std::set<std::string> excluded;
  for (const auto& name : schema.exclude) excluded.insert(to_lower(name));
  std::set<std::string> one_hot;
  for (const auto& name : schema.one_hot) {
    if (find_column(name) < 0)
      fail_data(kComponent, "one_hot column '" + name + "' not found");
    one_hot.insert(to_lower(name));
  }

  // covariate columns in header order (or the schema's explicit list)
  std::vector<int> covariate_cols;
  if (schema.covariates.empty()) {
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
      if (special.count(i) || excluded.count(to_lower(header[i]))) continue;
      covariate_cols.push_back(i);
    }
  } else {
    for (const auto& name : schema.covariates) {
      int col = find_column(name);
      if (col < 0) fail_data(kComponent, "missing schema column '" + name + "'");
      covariate_cols.push_back(col);
    }
  }

  // raw cells; one-hot expansion happens after all levels are known
  std::vector<std::vector<std::string>> raw;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, schema.delimiter);
    if (cells.size() != header.size())
      fail_data(kComponent, "row " + std::to_string(line_no) + " has " +
                                std::to_string(cells.size()) + " fields, expected " +
                                std::to_string(header.size()));
    raw.push_back(std::move(cells));
  }

  std::map<int, std::vector<std::string>> levels;  // one-hot column -> sorted levels
  for (int col : covariate_cols) {
    if (!one_hot.count(to_lower(header[col]))) continue;
    std::set<std::string> seen;
    for (const auto& cells : raw)
      if (!cells[col].empty()) seen.insert(cells[col]);
    if (seen.size() < 2)
      fail_data(kComponent, "one_hot column '" + header[col] + "' has fewer than 2 levels");
    levels[col] = std::vector<std::string>(seen.begin(), seen.end());
  }

  std::vector<std::string> covariate_names;
  for (int col : covariate_cols) {
    auto it = levels.find(col);
    if (it == levels.end()) {
      covariate_names.push_back(header[col]);
    } else {
      // first (sorted) level is the reference
      for (std::size_t l = 1; l < it->second.size(); ++l)
        covariate_names.push_back(header[col] + "_" + it->second[l]);
    }
  }

  std::vector<Row> rows;
  rows.reserve(raw.size());
  for (const auto& cells : raw) {
    Row row;
    auto s_val = parse_cell(cells[s_col]);
    if (!s_val) fail_data(kComponent, "missing participation indicator");
    if (*s_val != 0.0 && *s_val != 1.0)
      fail_data(kComponent, "non-binary participation indicator (s=" + cells[s_col] + ")");
    row.s = static_cast<int>(*s_val);

    auto a_val = parse_cell(cells[a_col]);
    if (a_val) {
      if (*a_val != 0.0 && *a_val != 1.0)
        fail_data(kComponent, "non-binary treatment indicator (a=" + cells[a_col] + ")");
      row.a = static_cast<int>(*a_val);
    }
    row.y = parse_cell(cells[y_col]);

    for (int col : covariate_cols) {
      auto it = levels.find(col);
      if (it == levels.end()) {
        auto v = parse_cell(cells[col]);
        row.x.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
      } else {
        const bool missing = cells[col].empty();
        for (std::size_t l = 1; l < it->second.size(); ++l)
          row.x.push_back(missing ? std::numeric_limits<double>::quiet_NaN()
                                  : (cells[col] == it->second[l] ? 1.0 : 0.0));
      }
    }
    rows.push_back(std::move(row));
  }

  return finalize(std::move(rows), design, std::move(covariate_names), {});
}

StudyDataset dataset_from_rows(std::vector<Row> rows, Design design,
                               std::vector<std::string> covariate_names) {
  return finalize(std::move(rows), design, std::move(covariate_names), {});
}

StructureReport validate_structure(const StudyDataset& ds) {
  StructureReport report;
  report.n = ds.n();
  for (const auto& row : ds.rows) {
    if (row.s == 0) {
      ++report.n0;
    } else if (row.a && *row.a == 1) {
      ++report.n_treated;
    } else if (row.a && *row.a == 0) {
      ++report.n_control;
    }
  }

  auto violation = [&](const std::string& code, const std::string& message) {
    report.violations.push_back({code, message});
  };

  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& row = ds.rows[i];
    if (row.s == 0 && (row.a || row.y))
      violation("s0_has_trial_data", "row " + std::to_string(i) + " has s=0 but a/y present");
    if (row.s == 1 && (!row.a || !row.y))
      violation("s1_missing_trial_data",
                "row " + std::to_string(i) + " has s=1 but a/y absent");
    if (row.x.size() != ds.covariate_names.size())
      violation("covariate_length",
                "row " + std::to_string(i) + " has " + std::to_string(row.x.size()) +
                    " covariates, expected " + std::to_string(ds.covariate_names.size()));
  }
  if (report.n0 == 0) violation("no_target_sample", "no s=0 rows: target estimand undefined");
  if (report.n_treated == 0) violation("empty_treated_arm", "no s=1, a=1 rows");
  if (report.n_control == 0) violation("empty_control_arm", "no s=1, a=0 rows");

  for (std::size_t j = 0; j < ds.covariate_names.size(); ++j) {
    CovariateSummary s;
    s.name = ds.covariate_names[j];
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0, sum2 = 0;
    std::size_t count = 0;
    for (const auto& row : ds.rows) {
      if (j >= row.x.size()) continue;
      double v = row.x[j];
      sum += v;
      sum2 += v * v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      ++count;
    }
    if (count > 0) {
      s.mean = sum / static_cast<double>(count);
      double var = sum2 / static_cast<double>(count) - s.mean * s.mean;
      s.sd = std::sqrt(std::max(0.0, var));
    }
    report.covariates.push_back(s);
  }
  return report;
}

PositivityReport positivity_diagnostics(const StudyDataset& ds, const NuisanceModels& nm,
                                        double threshold) {
  if (!(threshold > 0.0 && threshold < 0.5))
    fail_config(kComponent, "positivity threshold must lie in (0, 0.5)");

  PositivityReport report;
  report.threshold = threshold;
  std::set<std::size_t> flagged;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& row = ds.rows[i];
    double p = nm.participation_prob(row);
    report.participation_min = std::min(report.participation_min, p);
    report.participation_max = std::max(report.participation_max, p);
    if (p < threshold || p > 1.0 - threshold) {
      ++report.participation_out_of_range;
      flagged.insert(i);
    }
    if (row.s == 1) {
      for (int arm : {0, 1}) {
        double e = nm.treatment_prob(row, arm);
        report.treatment_min[arm] = std::min(report.treatment_min[arm], e);
        if (e < threshold) flagged.insert(i);
      }
    }
  }
  report.flagged_rows.assign(flagged.begin(), flagged.end());
  return report;
}

}  // namespace transport
