#include <gtest/gtest.h>

#include "criteria.hpp"
#include "test_support.hpp"

namespace mlc::testing {
namespace {

TEST(ShapeProperty, RandomArchitecturesMatchTheOracle) {
  auto report = run_shape_suite(1, 100);
  EXPECT_EQ(report.cases, 100);
  EXPECT_EQ(report.accepted, report.cases);
  EXPECT_EQ(report.round_trips, report.cases);
  EXPECT_EQ(report.broken_rejected, report.broken);
  EXPECT_EQ(report.absorbed_accepted, report.absorbed);
  EXPECT_GT(report.broken, 0);
  for (const auto& f : report.failures) ADD_FAILURE() << f;
}

TEST(ShapeProperty, SeedDeterminesTheSuite) {
  EXPECT_EQ(run_shape_suite(5, 30).fingerprint, run_shape_suite(5, 30).fingerprint);
  EXPECT_NE(run_shape_suite(5, 30).fingerprint, run_shape_suite(6, 30).fingerprint);
}

TEST(FuzzProperty, ParsersSurviveArbitraryInput) {
  auto report = run_fuzz(99, 10000);
  EXPECT_TRUE(report.ok());
  EXPECT_GE(report.parsers.size(), 9u);
  for (const auto& e : report.parsers) {
    EXPECT_EQ(e.inputs, 10000) << e.parser;
    EXPECT_EQ(e.failures, 0) << e.parser << ": " << e.first_failure;
    EXPECT_GT(e.diagnosed, 0) << e.parser;
  }
}

TEST(StalenessProperty, EditsTriggerTheExpectedDecisions) {
  TempDir dir("staleness");
  auto report = run_staleness(dir / "project");
  for (const auto& s : report.steps) EXPECT_TRUE(s.ok) << s.name << ": expected " << s.expected << ", got " << s.observed;
  EXPECT_EQ(report.steps.size(), 6u);
}

}  // namespace
}  // namespace mlc::testing
