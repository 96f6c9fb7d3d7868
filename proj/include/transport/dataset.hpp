#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace transport {

class NuisanceModels;

// Non-nested: trial sample plus a separately obtained sample of
// non-randomized individuals; identifies effects among S=0 only.
// Nested: trial embedded in a cohort from the target population;
// additionally identifies whole-population effects.
enum class Design { NonNested, Nested };

// One observation. Treatment and outcome exist only for trial rows (s=1);
// they are kept as optionals rather than sentinel values so that arithmetic
// on missing data cannot happen silently.
struct Row {
  int s = 0;
  std::optional<int> a;
  std::optional<double> y;
  std::vector<double> x;
};

struct StudyDataset {
  std::vector<Row> rows;
  Design design = Design::NonNested;
  std::vector<std::string> covariate_names;

  // populated by load_dataset
  std::size_t dropped_rows = 0;
  std::vector<std::string> warnings;

  std::size_t n() const { return rows.size(); }
  std::size_t n0() const;
  std::size_t n1() const;
  std::size_t arm_count(int arm) const;
  int covariate_index(const std::string& name) const;  // -1 when absent
};

struct CsvSchema {
  std::string s_column = "s";
  std::string a_column = "a";
  std::string y_column = "y";
  // Covariate columns to keep; empty means every remaining numeric column.
  std::vector<std::string> covariates;
  std::vector<std::string> exclude;
  // Categorical columns expanded into first-level-dropped indicator columns.
  std::vector<std::string> one_hot;
  char delimiter = ',';
};

// Reads a CSV with a header row and applies complete-case filtering: rows
// with any missing covariate are dropped, s=1 rows missing a or y are
// dropped, and a/y values found on s=0 rows are ignored with a warning.
StudyDataset load_dataset(const std::string& path, const CsvSchema& schema, Design design);

// Builds a dataset from in-memory rows, applying the same filtering and
// structural checks as load_dataset.
StudyDataset dataset_from_rows(std::vector<Row> rows, Design design,
                               std::vector<std::string> covariate_names);

struct Diagnostic {
  std::string code;
  std::string message;
};

struct CovariateSummary {
  std::string name;
  double mean = 0, sd = 0, min = 0, max = 0;
};

struct StructureReport {
  std::size_t n = 0;
  std::size_t n0 = 0;
  std::size_t n_treated = 0;  // s=1, a=1
  std::size_t n_control = 0;  // s=1, a=0
  std::vector<CovariateSummary> covariates;
  std::vector<Diagnostic> violations;  // empty iff all invariants hold
};

StructureReport validate_structure(const StudyDataset& ds);

struct PositivityReport {
  double threshold = 0.01;
  double participation_min = 1.0;
  double participation_max = 0.0;
  std::size_t participation_out_of_range = 0;
  // min of e_a(X) among s=1 rows, indexed by arm
  double treatment_min[2] = {1.0, 1.0};
  std::vector<std::size_t> flagged_rows;  // sorted, unique
};

// Flags rows with p(X) outside [threshold, 1-threshold] and s=1 rows whose
// treatment probability for either arm falls below threshold. Diagnostics
// only; nothing is mutated or aborted.
PositivityReport positivity_diagnostics(const StudyDataset& ds, const NuisanceModels& nm,
                                        double threshold = 0.01);

}  // namespace transport
