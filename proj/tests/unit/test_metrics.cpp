// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "thermoloop/error.hpp"
#include "thermoloop/metrics.hpp"
#include "thermoloop/units.hpp"

using namespace thermoloop;
using namespace thermoloop::metrics;

namespace {

// Block means of length k, then the two-sample deviation, all by hand.
double brute_allan(const std::vector<double>& x, std::size_t k) {
  const std::size_t N = x.size() / k;
  std::vector<double> mean(N, 0.0);
  for (std::size_t b = 0; b < N; ++b) {
    for (std::size_t i = 0; i < k; ++i) mean[b] += x[b * k + i];
    mean[b] /= static_cast<double>(k);
  }
  double s = 0;
  for (std::size_t b = 0; b + 1 < N; ++b) s += (mean[b + 1] - mean[b]) * (mean[b + 1] - mean[b]);
  return std::sqrt(s / (2.0 * static_cast<double>(N - 1)));
}

std::vector<double> gaussian(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("stepwise errors") {
    const std::vector<double> t{300, 301, 302, 303, 304};
    const auto zero = stepwise_errors(t, t, 1, 5);
    CHECK(zero.overall.mae == 0.0);
    CHECK(zero.overall.rmse == 0.0);
    CHECK(zero.overall.mape == 0.0);

    std::vector<double> p = t;
    const double e[] = {1, -1, 2, -2, 0};
    for (int i = 0; i < 5; ++i) p[i] += e[i];
    const auto r = stepwise_errors(p, t, 1, 5);
    CHECK(r.per_step[0].mae == 1.0);
    CHECK(r.per_step[2].mae == 2.0);
    CHECK(r.per_step[4].mae == 0.0);
    CHECK(r.overall.mae == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(r.overall.rmse == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(r.per_step[0].mape == doctest::Approx(100.0 / kelvin_to_celsius(300)).epsilon(1e-12));
    CHECK(r.samples == 1);

    // Targets at exactly 0 degC are excluded from MAPE only.
    const std::vector<double> freezing{kZeroCelsiusK, kZeroCelsiusK + 10};
    const std::vector<double> off{kZeroCelsiusK + 1, kZeroCelsiusK + 11};
    const auto f = stepwise_errors(off, freezing, 2, 1);
    CHECK(f.mape_excluded == 1);
    CHECK(f.overall.mae == 1.0);
    CHECK(f.overall.mape == doctest::Approx(10.0));
    CHECK_THROWS_AS(stepwise_errors({}, {}, 0, 5), InvalidInputError);
  }

  TEST_CASE("range and std") {
    CHECK(range_stat(std::vector<double>(7, 3.3)) == 0.0);
    CHECK(range_stat(std::vector<double>{1, 3, 2}) == 2.0);
    CHECK(std_stat(std::vector<double>{0, 2}) == 1.0);
    CHECK(std_stat(std::vector<double>(4, -1.0)) == 0.0);
    const auto v = gaussian(10000, 3.0, 1);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(range_stat(v) == *hi - *lo);
    CHECK_THROWS_AS(range_stat({}), InvalidInputError);
    CHECK_THROWS_AS(std_stat({}), InvalidInputError);
  }

  TEST_CASE("allan deviation") {
    const std::vector<double> taus{0.2, 1.0, 2.0};
    for (const auto& a : allan_deviation(std::vector<double>(100, 5.0), 0.2, taus)) CHECK(a.sigma == 0.0);

    // Alternating +-a, block of one sample: a * sqrt(2).
    std::vector<double> alt(1001);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -0.7 : 0.7;
    const std::vector<double> one{0.2};
    CHECK(allan_deviation(alt, 0.2, one).at(0).sigma == doctest::Approx(0.7 * std::sqrt(2.0)).epsilon(1e-14));

    const auto x = gaussian(10000, 1.0, 2);
    const std::vector<double> std_taus{1, 10, 100};
    const auto got = allan_deviation(x, 0.2, std_taus);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto k = static_cast<std::size_t>(std::llround(std_taus[i] / 0.2));
      CHECK(got[i].sigma == brute_allan(x, k));
      CHECK(got[i].blocks == 10000 / k);
    }

    std::vector<double> skipped;
    const std::vector<double> long_tau{1, 1200};  // 2000 s of data: one block
    CHECK(allan_deviation(x, 0.2, long_tau, &skipped).size() == 1);
    CHECK(skipped == std::vector<double>{1200});
    const std::vector<double> bad{0.3};
    CHECK_THROWS_AS(allan_deviation(x, 0.2, bad), InvalidInputError);
  }

  TEST_CASE("stability report") {
    CHECK_THROWS_AS(stability_report(std::vector<double>(4999, 1.0), 0.2), InvalidInputError);
    const auto flat = stability_report(std::vector<double>(5000, 298.15), 0.2);
    CHECK(flat.range == 0.0);
    CHECK(flat.std == 0.0);
    REQUIRE(flat.allan.size() == 3);
    for (const auto& a : flat.allan) CHECK(a.sigma == 0.0);

    // Drift plus noise against the direct formulas.
    auto x = gaussian(6000, 0.002, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 298.0 + 1e-5 * static_cast<double>(i);
    const auto r = stability_report(x, 0.2);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    CHECK(r.std == doctest::Approx(std::sqrt(ss / x.size())).epsilon(1e-9));
    CHECK(r.range == *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end()));
    CHECK(r.allan[1].sigma == doctest::Approx(brute_allan(x, 50)).epsilon(1e-9));
  }

  TEST_CASE("report layouts") {
    const std::vector<double> t{300, 301}, p{300.5, 300};
    const auto rep = stepwise_errors(p, t, 1, 2);
    const auto csv = prediction_report_csv("pigru", rep);
    CHECK(csv.rfind("model,step,mae,rmse,mape_pct\npigru,1,", 0) == 0);
    CHECK(csv.find("pigru,overall,") != std::string::npos);
    const auto st = stability_report(std::vector<double>(5000, 1.0), 0.2);
    CHECK(stability_header(st.allan) == "label,range,std,allan_1s,allan_10s,allan_100s\n");
    CHECK(stability_row("x", st) == "x,0,0,0,0,0\n");
    CHECK(prediction_summary("m.", rep).find("m.overall.mae = ") != std::string::npos);
  }
}
