#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mhe/examples.hpp"
#include "mhe/io.hpp"

using namespace mhe;

namespace {

std::string error_pointer(const Json& j) {
  try {
    scenario_from_json(j);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<none>";
}

}  // namespace

TEST(Json, ScenarioRoundTrip) {
  for (const Scenario& s : {scenario_fig1(true, true), scenario_fig1(false, false),
                            scenario_fig2(4, true)}) {
    const Json j = scenario_to_json(s);
    const Json back = scenario_to_json(scenario_from_json(j));
    EXPECT_EQ(j.dump(), back.dump()) << s.name;
    EXPECT_EQ(config_hash(j), config_hash(back));
  }
}

TEST(Json, UnknownKeyNamesItsPointer) {
  Json j = scenario_to_json(scenario_fig1(true, false));
  j["estimator"]["epsilonn"] = 0.1;
  EXPECT_EQ(error_pointer(j), "/estimator/epsilonn");
}

TEST(Json, MissingKeyAndTypeErrors) {
  Json j = scenario_to_json(scenario_fig1(true, false));
  j.erase("T");
  EXPECT_EQ(error_pointer(j), "/T");
  j = scenario_to_json(scenario_fig1(true, false));
  j["x0"][1] = "one";
  EXPECT_EQ(error_pointer(j), "/x0/1");
  j = scenario_to_json(scenario_fig1(true, false));
  j["T"] = -1;
  EXPECT_EQ(error_pointer(j), "/T");
  j = scenario_to_json(scenario_fig1(true, false));
  j["model"] = "nosuch";
  EXPECT_EQ(error_pointer(j), "/model");
}

TEST(Json, DimensionMismatchIsAConfigError) {
  Json j = scenario_to_json(scenario_fig1(true, false));
  j["x0"] = Json::array({1.0, 2.0});
  EXPECT_NE(error_pointer(j), "<none>");
}

TEST(Json, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 2357.0 / 48.0, 1e-300, -7.5e12}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Csv, ZeroHorizonGivesSingleRow) {
  Scenario s = scenario_fig1(true, false);
  s.T = 0;
  std::ostringstream os;
  write_run_csv(os, run_scenario(s, 0));
  const std::string out = os.str();
  int lines = 0;
  for (char c : out) lines += c == '\n';
  EXPECT_EQ(lines, 2);  // header plus t = 0
  EXPECT_NE(out.find("\n0,"), std::string::npos);
}

TEST(Csv, RepeatRunsAreByteIdentical) {
  Scenario s = scenario_fig1(true, true);
  s.T = 10;
  std::ostringstream a, b;
  write_run_csv(a, run_scenario(s, 2));
  write_run_csv(b, run_scenario(s, 2));
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_run_csv(c, run_scenario(s, 3));
  EXPECT_NE(a.str(), c.str());
}

TEST(Noise, GaussianMoments) {
  const auto v = noise_gen(NoiseLaw::gaussian(0.5), 17, NoiseChannel::kMeasurement, 0,
                           100000, 1);
  double m = 0, q = 0;
  for (const VectorXd& x : v) {
    m += x[0];
    q += x[0] * x[0];
  }
  m /= v.size();
  q /= v.size();
  EXPECT_NEAR(m, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(q - m * m), 0.5, 0.01);
}

TEST(Noise, UniformStaysInRangeAndChannelsDiffer) {
  const auto w = noise_gen(NoiseLaw::uniform(-0.2, 0.3), 5, NoiseChannel::kProcess, 1, 2000, 3);
  const auto v = noise_gen(NoiseLaw::uniform(-0.2, 0.3), 5, NoiseChannel::kMeasurement, 1,
                           2000, 3);
  double m = 0;
  for (const VectorXd& x : w) {
    EXPECT_GE(x.minCoeff(), -0.2);
    EXPECT_LE(x.maxCoeff(), 0.3);
    m += x.sum();
  }
  EXPECT_NEAR(m / 6000, 0.05, 0.01);
  EXPECT_NE(w[0], v[0]);
}

TEST(Noise, ZeroLawIsZero) {
  const auto z = noise_gen(NoiseLaw::zero(), 1, NoiseChannel::kProcess, 0, 5, 2);
  for (const VectorXd& x : z) EXPECT_EQ(x.norm(), 0.0);
}

TEST(Hash, SensitiveToContent) {
  Json a = scenario_to_json(scenario_fig1(true, false));
  Json b = a;
  b["seed"] = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(0x1f).size(), 16u);
}
