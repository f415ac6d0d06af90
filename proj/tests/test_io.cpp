#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssb/errors.hpp"
#include "ssb/io.hpp"

using namespace ssb;

namespace {

std::string parse_error_message(const std::string& text, int mass = 300) {
  std::istringstream in(text);
  try {
    parse_dataset_csv(in, mass);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("dataset CSV with units, comments and a missing cell") {
  std::istringstream in("# two hosts\n2hrs,4hrs,48hr\n0,12,290\n5,.,281\n");
  const auto d = parse_dataset_csv(in, 300);
  CHECK(d.schedule().size() == 3u);
  CHECK(d.schedule()[2] == 48.0);
  CHECK(d.counts_at(1).size() == 1u);
  CHECK(d.n_obs() == 5u);

  std::ostringstream out;
  write_dataset_csv(out, d);
  std::istringstream back(out.str());
  const auto again = parse_dataset_csv(back, 300);
  CHECK(again == d);
}

TEST_CASE("tab-separated dataset") {
  std::istringstream in("2\t6\n1\t7\n0\t\n");
  const auto d = parse_dataset_csv(in, 10);
  CHECK(d.counts_at(0).size() == 2u);
  CHECK(d.counts_at(1).size() == 1u);
}

TEST_CASE("parse errors name the line and column") {
  CHECK(parse_error_message("") != "");
  CHECK(parse_error_message("# nothing\n") != "");
  const auto bad = parse_error_message("2,4\n1,2\n3,x\n");
  CHECK(bad.find("line 3") != std::string::npos);
  CHECK(bad.find("column 2") != std::string::npos);
  CHECK(parse_error_message("2,4\n1,301\n").find("line 2") != std::string::npos);
  CHECK(parse_error_message("2,4\n1,2,3\n") != "");
  CHECK(parse_error_message("4,2\n1,2\n") != "");
  CHECK_THROWS_AS(read_dataset_csv("/nonexistent/file.csv", 300), ParseError);
}

TEST_CASE("shipped datasets") {
  const std::filesystem::path dir = SSB_DATA_DIR;
  const auto t1 = read_dataset_csv(dir / "table1_sfeltiae_gmellonella.csv", 300);
  CHECK(t1.n_times() == 9u);
  CHECK(t1.n_obs() == 89u);
  CHECK(t1.counts_at(0)[0] == 22);
  const auto t2 = read_dataset_csv(dir / "table2_simulated.csv", 300);
  CHECK(t2.n_obs() == 100u);
}

TEST_CASE("parameter JSON round trip") {
  const AnyParams p = SsbParams(-3, 0.15, 4, 1.5, 0.8);
  CHECK(params_from_json(params_to_json(p), ModelKind::SsbPlus) == p);
  const AnyParams re = ReParams(-3.5, 0.25, -0.4, 1.0, 0.06);
  CHECK(params_from_json(params_to_json(re), ModelKind::LrmRe) == re);
  CHECK_THROWS_AS(params_from_json(nlohmann::json::array(), ModelKind::Lrm), ParseError);
}

TEST_CASE("fit JSON round trip keeps NaN standard errors as null") {
  FitResult f;
  f.model = ModelKind::SsbPlus;
  f.names = {"alpha", "beta", "lambda", "gamma", "eta"};
  f.estimates = {-3.1, 0.151, 4.2, 1.55, 1.0};
  f.loglik = -1234.5678901234;
  f.n_params = 5;
  f.converged = true;
  f.iterations = 42;
  f.at_boundary = {false, false, false, false, true};
  f.std_errors = std::vector<double>{0.1, 0.01, 0.5, 0.2, std::nan("")};
  f.info = Eigen::MatrixXd::Identity(5, 5);
  f.trace = {{"logistic[0]", -1300.0}, {"weibull[1]", -1234.5678901234}};
  const auto j = fit_to_json(f);
  CHECK(j["std_errors"]["eta"].is_null());
  CHECK(j["std_errors"]["alpha"] == 0.1);
  const auto g = fit_from_json(j);
  CHECK(g.estimates == f.estimates);
  CHECK(g.loglik == f.loglik);
  CHECK(g.at_boundary == f.at_boundary);
  CHECK(std::isnan((*g.std_errors)[4]));
  CHECK((*g.info - *f.info).norm() == 0.0);
  CHECK(g.trace.size() == 2u);
  CHECK(g.model == ModelKind::SsbPlus);
}

TEST_CASE("trajectory CSV round trip") {
  const std::vector<Trajectory> ens{Trajectory({0, 3, 9}, 10, 1.25), Trajectory({1, 1, 2}, 10, 0.0)};
  std::ostringstream out;
  write_trajectories_csv(out, ens);
  CHECK(out.str().rfind("trajectory,lead_time,tau0", 0) == 0);
  std::istringstream in(out.str());
  const auto back = parse_trajectories_csv(in, 10);
  REQUIRE(back.size() == 2u);
  for (std::size_t h = 0; h < 2; ++h) {
    CHECK(std::vector<int>(back[h].counts().begin(), back[h].counts().end()) ==
          std::vector<int>(ens[h].counts().begin(), ens[h].counts().end()));
    CHECK(back[h].lead_time() == ens[h].lead_time());
  }
}

TEST_CASE("shortest round-trip number format") {
  for (double v : {0.1, -3.0, 1e-300, 123456.789, 0.15}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}
