#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "transport/commands.hpp"
#include "transport/error.hpp"
#include "transport/estimators.hpp"
#include "transport/results_io.hpp"
#include "transport/run_config.hpp"
#include "transport/svg_plot.hpp"

#include "fixtures.hpp"

using namespace transport;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

const char* kD6Csv =
    "s,a,y,x1\n"
    "1,1,10,0.5\n"
    "1,1,14,-0.25\n"
    "1,0,6,1.5\n"
    "1,0,8,0\n"
    "0,,,2\n"
    "0,,,-1\n";

int run_cli(const std::string& args) {
  std::string command = std::string(CLI_BINARY_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

SensitivityGridResult small_grid_result() {
  StudyDataset ds = testutil::d6();
  NuisanceModels nm = testutil::d6_models(ds);
  InferenceConfig inf;
  inf.method = InferenceMethod::Sandwich;
  return run_grid(ds, nm, make_grid({-40, 0, 40}, {-60, -20, 20, 60}),
                  {EstimatorId::AIOW2}, inf);
}

}  // namespace

TEST_CASE("results CSV has the fixed column order and blank missing fields") {
  EstimateRecord with_inference;
  with_inference.estimator = EstimatorId::AIOW2;
  with_inference.estimand = Estimand::Ate;
  with_inference.target = TargetPopulation::NonRandomized;
  with_inference.point = 5.0;
  with_inference.se = 1.25;
  with_inference.ci = {2.5, 7.5};
  with_inference.bias_cell = {{-40.0, 20.0}};
  with_inference.method = "sandwich";

  EstimateRecord bare;
  bare.estimator = EstimatorId::OM;
  bare.estimand = Estimand::MeanA1;
  bare.point = 12.0;
  bare.bias_cell = {{0.0, 0.0}};

  std::string csv = results_csv({with_inference, bare});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "estimator,target,estimand,u0,delta,estimate,se,ci_lo,ci_hi,method");
  std::getline(in, line);
  CHECK(line == "AIOW2,non_randomized,ate,-40,20,5,1.25,2.5,7.5,sandwich");
  std::getline(in, line);
  CHECK(line == "OM,non_randomized,mean_a1,0,0,12,,,,");
}

TEST_CASE("CSV and JSON encode identical values") {
  SensitivityGridResult result = small_grid_result();
  auto records = flatten_records(result);
  std::string csv = results_csv(records);
  nlohmann::json j = grid_to_json(result);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::size_t idx = 0;
  while (std::getline(in, line)) {
    REQUIRE(idx < j["records"].size());
    const auto& jr = j["records"][idx];
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    CHECK(fields[0] == jr["estimator"].get<std::string>());
    CHECK(std::abs(std::stod(fields[3]) - jr["u0"].get<double>()) < 1e-9);
    CHECK(std::abs(std::stod(fields[4]) - jr["delta"].get<double>()) < 1e-9);
    CHECK(std::abs(std::stod(fields[5]) - jr["estimate"].get<double>()) < 1e-9);
    CHECK(std::abs(std::stod(fields[6]) - jr["se"].get<double>()) < 1e-9);
    CHECK(std::abs(std::stod(fields[7]) - jr["ci_lo"].get<double>()) < 1e-9);
    CHECK(std::abs(std::stod(fields[8]) - jr["ci_hi"].get<double>()) < 1e-9);
    ++idx;
  }
  CHECK(idx == j["records"].size());
}

TEST_CASE("dataset CSV round-trips through the loader") {
  StudyDataset ds = testutil::random_dataset(17, 30);
  auto path = temp_dir("tt_io") / "roundtrip.csv";
  write_file(path, dataset_csv(ds));
  StudyDataset reload = load_dataset(path.string(), {}, ds.design);
  REQUIRE(reload.n() == ds.n());
  CHECK(reload.covariate_names == ds.covariate_names);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(reload.rows[i].s == ds.rows[i].s);
    CHECK(reload.rows[i].a == ds.rows[i].a);
    if (ds.rows[i].y)
      CHECK(*reload.rows[i].y == doctest::Approx(*ds.rows[i].y).epsilon(1e-12));
    for (std::size_t k = 0; k < ds.covariate_names.size(); ++k)
      CHECK(reload.rows[i].x[k] == doctest::Approx(ds.rows[i].x[k]).epsilon(1e-12));
  }
}

TEST_CASE("atomic writes leave no temp file behind") {
  auto dir = temp_dir("tt_atomic");
  auto path = dir / "f.txt";
  write_file_atomic(path.string(), "hello\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "hello\n");
  CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
}

TEST_CASE("the sensitivity SVG is well-formed and carries the expected series") {
  SensitivityGridResult result = small_grid_result();
  std::string svg = sensitivity_curves_svg(result, EstimatorId::AIOW2);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<script") == std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos;
       at = svg.find("<polyline", at + 1))
    ++polylines;
  // 3 panels x 2 arms x (point line + 2 CI bounds)
  CHECK(polylines == 18);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("config JSON parses into a full RunConfig") {
  nlohmann::json j = {
      {"design", "nested"},
      {"target", "whole_population"},
      {"data",
       {{"path", "data.csv"},
        {"schema", {{"s", "trial"}, {"a", "arm"}, {"y", "out"}}},
        {"covariates", {"x1", "x2"}},
        {"delimiter", ";"}}},
      {"models",
       {{"participation", {"x1"}},
        {"treatment_probability", 0.5},
        {"outcome", {"x1", "x2"}},
        {"interactions", {{"outcome", {{"x1", "x2"}}}}}}},
      {"estimators", {"OM_pop", "AIPW2"}},
      {"bias",
       {{"u0", {-40, 0, 40}},
        {"delta", {-60, 0, 60}},
        {"modulation",
         {{"covariate", "x2"}, {"multipliers", {{1, 1.0}, {0, 0.8}}}, {"default", 1.0}}}}},
      {"inference",
       {{"method", "bootstrap"},
        {"level", 0.9},
        {"replicates", 321},
        {"seed", 99},
        {"stratify_by_s", false}}},
      {"options", {{"positivity_threshold", 0.02}, {"threads", 2}}},
      {"output", {{"dir", "outdir"}, {"basename", "run1"}, {"plot", true}}},
  };
  RunConfig cfg = parse_config_json(j);
  CHECK(cfg.design == Design::Nested);
  CHECK(cfg.target == TargetPopulation::WholePopulation);
  CHECK(cfg.data_path == "data.csv");
  CHECK(cfg.schema.s_column == "trial");
  CHECK(cfg.schema.delimiter == ';');
  CHECK(cfg.participation_covariates == std::vector<std::string>{"x1"});
  CHECK(cfg.fixed_treatment_probability == 0.5);
  REQUIRE(cfg.outcome_interactions.size() == 1);
  CHECK(cfg.outcome_interactions[0].first == "x1");
  REQUIRE(cfg.estimators.size() == 2);
  CHECK(cfg.estimators[1] == EstimatorId::AIPW2);
  CHECK(cfg.u0_values.size() == 3);
  REQUIRE(cfg.modulation.has_value());
  CHECK(cfg.modulation->covariate == "x2");
  CHECK(cfg.inference.method == InferenceMethod::Bootstrap);
  CHECK(cfg.inference.level == 0.9);
  CHECK(cfg.inference.replicates == 321);
  CHECK(cfg.inference.stratify_by_s == false);
  CHECK(cfg.positivity_threshold == 0.02);
  CHECK(cfg.threads == 2);
  CHECK(cfg.output.dir == "outdir");
  CHECK(cfg.output.plot);

  auto ids = resolve_estimators(cfg);
  CHECK(ids.size() == 2);
}

TEST_CASE("invalid configs are rejected") {
  // whole-population target on a non-nested design
  nlohmann::json bad = {{"design", "non_nested"}, {"target", "whole_population"}};
  CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("nested design"), Error);

  CHECK_THROWS_AS(parse_config_json(nlohmann::json{{"estimators", {"NOPE"}}}), Error);

  // estimator family incompatible with the target
  nlohmann::json mixed = {{"design", "nested"},
                          {"target", "whole_population"},
                          {"estimators", {"AIOW2"}}};
  RunConfig cfg = parse_config_json(mixed);
  CHECK_THROWS_AS(resolve_estimators(cfg), Error);
}

TEST_CASE("default estimator families per target") {
  RunConfig cfg;
  auto s0 = resolve_estimators(cfg);
  REQUIRE(s0.size() == 5);
  CHECK(s0[0] == EstimatorId::OM);
  CHECK(s0[4] == EstimatorId::AIOW2);

  cfg.design = Design::Nested;
  cfg.target = TargetPopulation::WholePopulation;
  auto pop = resolve_estimators(cfg);
  REQUIRE(pop.size() == 5);
  CHECK(pop[0] == EstimatorId::OMPop);
  CHECK(pop[4] == EstimatorId::AIPW2);
}

TEST_CASE("cmd_estimate writes CSV and JSON for the micro dataset") {
  auto dir = temp_dir("tt_cmd_estimate");
  write_file(dir / "d6.csv", kD6Csv);

  RunConfig cfg;
  cfg.data_path = (dir / "d6.csv").string();
  cfg.participation_covariates = std::vector<std::string>{};  // intercept-only
  cfg.treatment_covariates = std::vector<std::string>{};
  cfg.outcome_covariates = std::vector<std::string>{};
  cfg.estimators = {EstimatorId::OM, EstimatorId::IOW2, EstimatorId::AIOW2};
  cfg.inference.method = InferenceMethod::None;
  cfg.output.dir = (dir / "out").string();

  cmd_estimate(cfg);
  std::ifstream csv(dir / "out" / "results.csv");
  REQUIRE(csv.good());
  std::string line;
  std::getline(csv, line);
  int ate_rows = 0;
  while (std::getline(csv, line)) {
    if (line.find(",ate,") != std::string::npos) {
      ++ate_rows;
      auto pos = line.rfind(",,,,");
      CHECK(pos != std::string::npos);
      // estimate field: 6th column
      std::istringstream ls(line);
      std::string field;
      for (int k = 0; k < 6; ++k) std::getline(ls, field, ',');
      CHECK(std::stod(field) == doctest::Approx(5.0).epsilon(1e-9));
    }
  }
  CHECK(ate_rows == 3);
  CHECK(fs::exists(dir / "out" / "results.json"));
}

TEST_CASE("cmd_estimate rejects multi-cell grids") {
  RunConfig cfg;
  cfg.u0_values = {0.0, 1.0};
  CHECK_THROWS_WITH_AS(cmd_estimate(cfg), doctest::Contains("single bias cell"), Error);
}

TEST_CASE("cli binary: estimate and sensitivity end to end") {
  auto dir = temp_dir("tt_cli_e2e");
  write_file(dir / "d6.csv", kD6Csv);
  nlohmann::json config = {
      {"data", {{"path", (dir / "d6.csv").string()}}},
      {"models",
       {{"participation", nlohmann::json::array()},
        {"treatment", nlohmann::json::array()},
        {"outcome", nlohmann::json::array()}}},
      {"estimators", {"OM", "IOW2", "AIOW2"}},
      {"inference", {{"method", "none"}}},
      {"output", {{"dir", (dir / "out").string()}}},
  };
  write_file(dir / "config.json", config.dump(2));

  CHECK(run_cli("estimate --config " + (dir / "config.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));

  config["bias"] = {{"u0", {-40, 0, 40}}, {"delta", {-60, -20, 20, 60}}};
  config["output"]["plot"] = true;
  write_file(dir / "config_grid.json", config.dump(2));
  CHECK(run_cli("sensitivity --config " + (dir / "config_grid.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results_AIOW2.svg"));

  // single-cell sensitivity equals estimate output
  CHECK(run_cli("check-positivity --config " + (dir / "config.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results_positivity.json"));
}

TEST_CASE("cli binary: exit codes distinguish config errors") {
  CHECK(run_cli("estimate --config /nonexistent.json") == 1);
  auto dir = temp_dir("tt_cli_err");
  // whole-population target with non-nested design
  nlohmann::json config = {{"design", "non_nested"}, {"target", "whole_population"}};
  write_file(dir / "bad.json", config.dump());
  CHECK(run_cli("estimate --config " + (dir / "bad.json").string()) == 1);
}
