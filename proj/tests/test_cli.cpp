#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "rsub/cli.hpp"
#include "rsub/covmodel.hpp"
#include "rsub/dataset.hpp"
#include "rsub/harness.hpp"
#include "rsub/sidecar.hpp"
#include "test_util.hpp"

using namespace rsub;

namespace {

int run_cli(const std::vector<std::string>& args, std::string* stdout_text) {
  std::vector<const char*> argv;
  argv.push_back("rsub");
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  const int rc = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  if (stdout_text) *stdout_text = captured.str();
  return rc;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli generate matches the library sample bit for bit") {
  test::TempDir dir("cli_gen");
  const std::string cli_path = dir.file("cli.rsub");
  std::string out;
  REQUIRE(run_cli({"generate", "--model", "spiked", "--n", "16", "--r", "1",
                   "--theta", "1", "--kappa", "2", "--m", "100", "--seed", "7",
                   "--out", cli_path, "--json"},
                  &out) == 0);
  const nlohmann::json summary = nlohmann::json::parse(out);
  CHECK(summary["kappa_measured"].get<double>() == doctest::Approx(2.0));

  const CovarianceModel model = spiked_model(16, 1, 1.0, 2.0);
  const Dataset ds = sample(model, 100, 7);
  const std::string lib_path = dir.file("lib.rsub");
  store_dataset(lib_path, ds, dataset_sidecar(ds, &model));

  CHECK(slurp(cli_path) == slurp(lib_path));
  CHECK(slurp(cli_path + ".json") == slurp(lib_path + ".json"));
}

TEST_CASE("cli pipeline: generate -> attack -> estimate") {
  test::TempDir dir("cli_pipe");
  const std::string clean = dir.file("clean.rsub");
  const std::string pert = dir.file("pert.rsub");
  REQUIRE(run_cli({"generate", "--model", "spiked", "--n", "32", "--r", "1",
                   "--theta", "1", "--kappa", "2.83", "--m", "2000", "--seed",
                   "11", "--out", clean},
                  nullptr) == 0);

  std::string attack_out;
  REQUIRE(run_cli({"attack", "--attack", "instance-optimal", "--in", clean,
                   "--delta", "0.3", "--seed", "5", "--out", pert, "--json"},
                  &attack_out) == 0);
  const nlohmann::json aj = nlohmann::json::parse(attack_out);
  CHECK(aj["epsilon"].get<double>() > 0.0);
  CHECK(aj["k_prime"].get<long>() > 0);

  std::string est_out;
  REQUIRE(run_cli({"estimate", "--algo", "robust-projection", "--in", pert,
                   "--r", "1", "--out", dir.file("proj.rsub"), "--json"},
                  &est_out) == 0);
  const nlohmann::json ej = nlohmann::json::parse(est_out);
  CHECK(ej.contains("sin_theta_sq"));
  CHECK(ej["sin_theta_sq"].get<double>() < 0.5);

  // the projector container holds an orthonormal basis
  const Dataset proj = read_dataset(dir.file("proj.rsub"));
  CHECK(proj.samples.cols() == 1);
  CHECK(proj.samples.col(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("cli mean on a shifted isotropic dataset") {
  test::TempDir dir("cli_mean");
  const std::string data = dir.file("mean.rsub");
  REQUIRE(run_cli({"generate", "--model", "isotropic", "--n", "16", "--sigma",
                   "0.1", "--mu-support", "2", "--mu-value", "1.0", "--m",
                   "500", "--seed", "3", "--out", data},
                  nullptr) == 0);
  std::string out;
  REQUIRE(run_cli({"mean", "--in", data, "--q", "inf", "--delta", "0.05",
                   "--sigma", "0.1", "--json"},
                  &out) == 0);
  const nlohmann::json j = nlohmann::json::parse(out);
  CHECK(j.contains("error_sq"));
  CHECK(j["error_sq"].get<double>() < 0.5);
}

TEST_CASE("cli sweep cross-checks the library harness") {
  test::TempDir dir("cli_sweep");
  SweepSpec spec;
  spec.n_grid = {12};
  spec.m_grid = {800};
  spec.kappa_grid = {2.0};
  spec.delta_grid = {0.0};
  spec.seeds_per_cell = 1;
  spec.master_seed = 9;
  spec.output_path = dir.file("lib.csv");
  run_sweep(spec);

  const std::string spec_path = dir.file("spec.json");
  {
    std::ofstream out(spec_path);
    out << spec.to_json_text();
  }
  std::string cli_out;
  REQUIRE(run_cli({"sweep", "--spec", spec_path, "--out", dir.file("cli.csv"),
                   "--json"},
                  &cli_out) == 0);
  CHECK(determinism_hash(dir.file("cli.csv")) ==
        determinism_hash(dir.file("lib.csv")));
}

TEST_CASE("cli plot: empty CSV gives axes only; series add polylines") {
  test::TempDir dir("cli_plot");
  const std::string empty_csv = dir.file("empty.csv");
  {
    std::ofstream out(empty_csv);
    out << "delta,sin_theta_sq\n";
  }
  const std::string empty_svg = dir.file("empty.svg");
  REQUIRE(run_cli({"plot", "--in", empty_csv, "--x", "delta", "--y",
                   "sin_theta_sq", "--out", empty_svg},
                  nullptr) == 0);
  const std::string svg = slurp(empty_svg);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") == std::string::npos);

  const std::string series_csv = dir.file("series.csv");
  {
    std::ofstream out(series_csv);
    out << "delta,sin_theta_sq\n";
    out << "0.1,0.01\n0.2,0.02\n0.4,0.04\n0.8,0.08\n";
  }
  const std::string series_svg = dir.file("series.svg");
  REQUIRE(run_cli({"plot", "--in", series_csv, "--x", "delta", "--y",
                   "sin_theta_sq", "--logx", "--logy", "--out", series_svg},
                  nullptr) == 0);
  const std::string svg2 = slurp(series_svg);
  CHECK(svg2.find("<polyline") != std::string::npos);
  CHECK(svg2.find("slope") != std::string::npos);

  // deterministic output: re-render gives identical bytes
  const std::string series_svg2 = dir.file("series2.svg");
  REQUIRE(run_cli({"plot", "--in", series_csv, "--x", "delta", "--y",
                   "sin_theta_sq", "--logx", "--logy", "--out", series_svg2},
                  nullptr) == 0);
  CHECK(slurp(series_svg2) == svg2);

  // missing column is an error
  CHECK(run_cli({"plot", "--in", series_csv, "--x", "nope", "--y",
                 "sin_theta_sq", "--out", dir.file("x.svg")},
                nullptr) != 0);
}

TEST_CASE("cli: invalid flags produce nonzero exit") {
  CHECK(run_cli({"generate", "--n", "8"}, nullptr) != 0);  // missing required
  CHECK(run_cli({"frobnicate"}, nullptr) != 0);
}
