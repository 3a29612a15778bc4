#include <gtest/gtest.h>

#include <cmath>

#include "pdelab/complexity.hpp"
#include "pdelab/errors.hpp"

namespace pdelab {
namespace {

TEST(Complexity, FitRecoversPowerLaw) {
  std::vector<TimingPoint> pts;
  for (long l : {100L, 200L, 400L, 800L, 1600L}) {
    TimingPoint p;
    p.length = l;
    p.median_seconds = 3e-9 * std::pow(static_cast<double>(l), 1.5);
    pts.push_back(p);
  }
  const auto fit = fit_scaling(pts);
  EXPECT_NEAR(fit.slope, 1.5, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(Complexity, TimeCallResolvesShortCalls) {
  volatile double sink = 0;
  const auto p = time_call([&] { sink = sink + 1.0; }, 7, 1e-4);
  EXPECT_EQ(p.reps, 7);
  EXPECT_GT(p.inner, 1);
  EXPECT_GT(p.median_seconds, 0.0);
  EXPECT_THROW(time_call([] {}, 0, 1e-4), InvalidArgument);
}

TEST(Complexity, GridPreconditions) {
  ComplexityOptions o;
  o.diffusion_grid = {256, 512, 1024, 2048};
  EXPECT_THROW(bench_complexity(o), InvalidArgument);
  o = {};
  o.attention_grid = {256, 300, 350, 400, 500};
  EXPECT_THROW(bench_complexity(o), InvalidArgument);
  o = {};
  o.reps = 6;
  EXPECT_THROW(bench_complexity(o), InvalidArgument);
}

}  // namespace
}  // namespace pdelab
