#pragma once

// Shared test fixtures: the 6-row micro dataset whose intercept-only fits
// have pencil-and-paper values (p = 2/3, e1 = 1/2, g1 = 12, g0 = 7), plus a
// small random-dataset generator for property-style checks.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "transport/dataset.hpp"
#include "transport/glm.hpp"

namespace testutil {

// rows: (s=1,a=1,y=10), (s=1,a=1,y=14), (s=1,a=0,y=6), (s=1,a=0,y=8), (s=0), (s=0)
inline transport::StudyDataset d6(transport::Design design = transport::Design::NonNested) {
  using transport::Row;
  std::vector<Row> rows;
  auto trial = [](int a, double y) {
    Row r;
    r.s = 1;
    r.a = a;
    r.y = y;
    return r;
  };
  rows.push_back(trial(1, 10.0));
  rows.push_back(trial(1, 14.0));
  rows.push_back(trial(0, 6.0));
  rows.push_back(trial(0, 8.0));
  rows.push_back(Row{});
  rows.push_back(Row{});
  return transport::dataset_from_rows(std::move(rows), design, {});
}

inline transport::NuisanceModels d6_models(const transport::StudyDataset& ds) {
  return transport::fit_nuisance(ds, transport::ModelSpec::intercept_only());
}

// Random small dataset with two covariates and guaranteed occupancy of all
// three (s, a) cells; outcomes depend on the covariates so that nothing is
// degenerate.
inline transport::StudyDataset random_dataset(std::uint64_t seed, std::size_t n = 40,
                                              transport::Design design =
                                                  transport::Design::NonNested) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<transport::Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    transport::Row r;
    r.x = {normal(rng), uniform(rng) < 0.5 ? 1.0 : 0.0};
    // forced occupancy for the first three rows
    if (i < 3) {
      r.s = i < 2 ? 1 : 0;
      if (r.s == 1) r.a = static_cast<int>(i);
    } else {
      r.s = uniform(rng) < transport::expit(0.3 + 0.5 * r.x[0]) ? 1 : 0;
      if (r.s == 1) r.a = uniform(rng) < 0.5 ? 1 : 0;
    }
    if (r.s == 1)
      r.y = 5.0 + 2.0 * r.x[0] + 1.5 * r.x[1] + (*r.a == 1 ? 3.0 + r.x[0] : 0.0) +
            normal(rng);
    rows.push_back(std::move(r));
  }
  return transport::dataset_from_rows(std::move(rows), design, {"x1", "x2"});
}

}  // namespace testutil
