#include "transport/results_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "transport/error.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "cli";

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

std::string results_csv(const std::vector<EstimateRecord>& records) {
  std::ostringstream out;
  out << "estimator,target,estimand,u0,delta,estimate,se,ci_lo,ci_hi,method\n";
  for (const auto& rec : records) {
    out << to_string(rec.estimator) << ',' << to_string(rec.target) << ','
        << to_string(rec.estimand) << ',';
    if (rec.bias_cell) out << fmt(rec.bias_cell->first) << ',' << fmt(rec.bias_cell->second);
    else out << ',';
    out << ',' << fmt(rec.point) << ',';
    if (rec.se) out << fmt(*rec.se);
    out << ',';
    if (rec.ci) out << fmt(rec.ci->first);
    out << ',';
    if (rec.ci) out << fmt(rec.ci->second);
    out << ',' << rec.method << '\n';
  }
  return out.str();
}

nlohmann::json record_to_json(const EstimateRecord& rec) {
  nlohmann::json j;
  j["estimator"] = to_string(rec.estimator);
  j["target"] = to_string(rec.target);
  j["estimand"] = to_string(rec.estimand);
  if (rec.bias_cell) {
    j["u0"] = rec.bias_cell->first;
    j["delta"] = rec.bias_cell->second;
  } else {
    j["u0"] = nullptr;
    j["delta"] = nullptr;
  }
  j["estimate"] = rec.point;
  j["se"] = rec.se ? nlohmann::json(*rec.se) : nlohmann::json(nullptr);
  if (rec.ci) {
    j["ci_lo"] = rec.ci->first;
    j["ci_hi"] = rec.ci->second;
  } else {
    j["ci_lo"] = nullptr;
    j["ci_hi"] = nullptr;
  }
  j["method"] = rec.method;
  return j;
}

std::vector<EstimateRecord> flatten_records(const SensitivityGridResult& result) {
  std::vector<EstimateRecord> flat;
  for (const auto& cell : result.cells)
    for (const auto& rec : cell.records) flat.push_back(rec);
  return flat;
}

nlohmann::json grid_to_json(const SensitivityGridResult& result) {
  nlohmann::json j;
  j["meta"] = {
      {"n", result.meta.n},
      {"n0", result.meta.n0},
      {"design", result.meta.design == Design::NonNested ? "non_nested" : "nested"},
      {"target", to_string(result.meta.target)},
      {"inference", to_string(result.meta.method)},
      {"level", result.meta.level},
      {"seed", result.meta.seed},
      {"cells", result.cells.size()},
  };
  std::vector<std::string> names;
  for (EstimatorId id : result.meta.estimators) names.push_back(to_string(id));
  j["meta"]["estimators"] = names;
  if (!result.meta.modulation_id.empty())
    j["meta"]["modulation"] = result.meta.modulation_id;

  j["records"] = nlohmann::json::array();
  for (const auto& rec : flatten_records(result)) j["records"].push_back(record_to_json(rec));
  return j;
}

nlohmann::json crossings_to_json(const std::vector<CrossingResult>& crossings) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cr : crossings) {
    nlohmann::json j;
    j["u0"] = cr.u0;
    j["delta_star"] = cr.delta_star ? nlohmann::json(*cr.delta_star) : nlohmann::json(nullptr);
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [lo, hi] : cr.ci_excludes_zero) ranges.push_back({lo, hi});
    j["ci_excludes_zero"] = ranges;
    arr.push_back(j);
  }
  return arr;
}

nlohmann::json positivity_to_json(const PositivityReport& report) {
  nlohmann::json j;
  j["threshold"] = report.threshold;
  j["participation_min"] = report.participation_min;
  j["participation_max"] = report.participation_max;
  j["participation_out_of_range"] = report.participation_out_of_range;
  j["treatment_min_a0"] = report.treatment_min[0];
  j["treatment_min_a1"] = report.treatment_min[1];
  j["flagged_rows"] = report.flagged_rows;
  j["flagged_count"] = report.flagged_rows.size();
  return j;
}

nlohmann::json truths_to_json(const TrueValues& truth) {
  nlohmann::json j;
  j["mean_s0_a1"] = truth.mean_s0[1];
  j["mean_s0_a0"] = truth.mean_s0[0];
  j["mean_pop_a1"] = truth.mean_pop[1];
  j["mean_pop_a0"] = truth.mean_pop[0];
  j["ate_s0"] = truth.ate_s0;
  j["ate_pop"] = truth.ate_pop;
  j["mc_se_s0_a1"] = truth.mc_se_s0[1];
  j["mc_se_s0_a0"] = truth.mc_se_s0[0];
  j["mc_se_pop_a1"] = truth.mc_se_pop[1];
  j["mc_se_pop_a0"] = truth.mc_se_pop[0];
  j["bias_gap_s0_a1"] = truth.bias_gap_s0[1];
  j["bias_gap_s0_a0"] = truth.bias_gap_s0[0];
  j["bias_gap_pop_a1"] = truth.bias_gap_pop[1];
  j["bias_gap_pop_a0"] = truth.bias_gap_pop[0];
  j["draws"] = truth.draws;
  return j;
}

std::string dataset_csv(const StudyDataset& ds) {
  std::ostringstream out;
  out << "s,a,y";
  for (const auto& name : ds.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& row : ds.rows) {
    out << row.s << ',';
    if (row.a) out << *row.a;
    out << ',';
    if (row.y) out << fmt(*row.y);
    for (double v : row.x) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) fail_data(kComponent, "cannot write to '" + temp.string() + "'");
    out << content;
    if (!out.flush()) fail_data(kComponent, "failed writing '" + temp.string() + "'");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) fail_data(kComponent, "cannot rename '" + temp.string() + "' to '" + path + "'");
}

}  // namespace transport
