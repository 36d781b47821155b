#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lbo/lbo.hpp"

using namespace lbo;

namespace {

ReturnSet random_set(std::uint64_t seed, std::size_t H) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution B(0.3);
  return ReturnSet::where(H, [&](std::size_t) { return B(rng); });
}

std::string config_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "config accepted:\n" << text;
  return {};
}

const char* kSmall = R"(
[space]
kind = omega
[operator]
kind = backward_shift
[vector]
values = 1 2
length = 300
[run]
horizon = 200
k0_grid = 1 2
eps_grid = 0.5 0.25
J = 8
tasks = classify lbo densities
)";

}  // namespace

TEST(ReturnSetIO, TextRoundTrip) {
  for (std::size_t H : {1u, 63u, 64u, 65u, 1000u}) {
    const ReturnSet R = random_set(H, H);
    std::stringstream s;
    write_return_set_text(s, R);
    EXPECT_EQ(read_return_set_text(s), R);
  }
  std::istringstream bare("3\n5\n");
  EXPECT_EQ(read_return_set_text(bare), ReturnSet({3, 5}, 5));
  std::istringstream bad("3\nx\n");
  EXPECT_THROW(read_return_set_text(bad), Error);
}

TEST(ReturnSetIO, BitsRoundTripAndLayout) {
  for (std::size_t H : {1u, 63u, 64u, 65u, 1000u}) {
    const ReturnSet R = random_set(H + 7, H);
    std::stringstream s;
    write_return_set_bits(s, R);
    EXPECT_EQ(s.str().size(), 8 * ((H + 63) / 64));
    EXPECT_EQ(read_return_set_bits(s, H), R);
  }
  std::stringstream s;
  write_return_set_bits(s, ReturnSet({1, 9, 64, 65}, 70));
  const std::string b = s.str();
  EXPECT_EQ(static_cast<unsigned char>(b[0]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(b[1]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(b[7]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 0x01);
  std::stringstream shorter(b.substr(0, 8));
  EXPECT_THROW(read_return_set_bits(shorter, 70), Error);
}

TEST(FormatDouble, RoundTrips) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int t = 0; t < 1000; ++t) {
    const double v = U(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Config, ParsesAndRoundTrips) {
  std::istringstream in(kSmall);
  const ExperimentConfig c = parse_config(in);
  EXPECT_EQ(c.horizon, 200u);
  EXPECT_EQ(c.k0_grid, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(c.vector.values.size(), 2u);
  const std::string text = to_config_text(c);
  std::istringstream again(text);
  const ExperimentConfig c2 = parse_config(again);
  EXPECT_EQ(to_config_text(c2), text);
  EXPECT_EQ(config_hash(c2), config_hash(c));
  EXPECT_EQ(config_hash(c).rfind("fnv1a64:", 0), 0u);
  EXPECT_EQ(config_hash(c).size(), 8u + 16u);
}

TEST(Config, RoundTripsOtherSpacesAndOperators) {
  const char* text = R"(
[space]
kind = entire
circle_samples = 512
description = entire functions
[operator]
kind = diffop
phi = 0 1:0.5 rot:0.25
[vector]
values = 1 0.5 0.25
zero_tail = true
[run]
horizon = 10
growth = linear:3
)";
  std::istringstream in(text);
  const ExperimentConfig c = parse_config(in);
  EXPECT_EQ(c.space.circle_samples, 512u);
  EXPECT_EQ(c.space.description, "entire functions");
  ASSERT_EQ(c.op.phi.size(), 3u);
  EXPECT_NEAR(c.op.phi[2].imag(), 1.0, 1e-15);
  std::istringstream again(to_config_text(c));
  EXPECT_EQ(to_config_text(parse_config(again)), to_config_text(c));
}

TEST(Config, DiagnosticsNameLineAndField) {
  std::string m = config_error("[run]\nhorizon = 10\neps_grid = 0.5 -1\n");
  EXPECT_NE(m.find("line 3"), std::string::npos) << m;
  EXPECT_NE(m.find("run.eps_grid"), std::string::npos) << m;
  m = config_error("[run]\nhorizon = 10\n[run]\nhorizon = 11\n");
  EXPECT_NE(m.find("duplicate"), std::string::npos) << m;
  m = config_error("[bogus]\n");
  EXPECT_NE(m.find("unknown section"), std::string::npos) << m;
  m = config_error("[operator]\ncolour = red\n");
  EXPECT_NE(m.find("operator.colour"), std::string::npos) << m;
  m = config_error("[run]\ntasks = classify dance\n");
  EXPECT_NE(m.find("dance"), std::string::npos) << m;
  m = config_error("[space]\nkind = hilbert\n[vector]\nvalues = 1\n");
  EXPECT_NE(m.find("space.kind"), std::string::npos) << m;
  m = config_error("[vector]\nsource = inline\n");
  EXPECT_NE(m.find("vector.values"), std::string::npos) << m;
  m = config_error("[run]\nhorizon = ten\n");
  EXPECT_NE(m.find("run.horizon"), std::string::npos) << m;
}

TEST(Runner, ReportIsDeterministic) {
  std::istringstream in(kSmall);
  const ExperimentConfig c = parse_config(in);
  const RunResult a = run_experiment(c);
  const RunResult b = run_experiment(c);
  EXPECT_EQ(a.exit_code, 0) << a.summary;
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.files, b.files);
  EXPECT_EQ(a.report["schema"], kReportSchema);
  EXPECT_EQ(a.report["tasks"]["classify"]["status"], "ok");
  EXPECT_TRUE(a.report["tasks"]["classify"]["result"].is_object());
}

TEST(Runner, TaskFailureIsReported) {
  std::istringstream in(R"(
[vector]
values = 1
zero_tail = true
[run]
horizon = 64
tasks = measure
)");
  const RunResult r = run_experiment(parse_config(in));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.report["tasks"]["measure"]["status"], "error");
}
