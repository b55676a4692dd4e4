#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sica/rng.hpp"
#include "support.hpp"

using Catch::Approx;
using namespace sica;
using testsupport::single_mark;

TEST_CASE("identical (seed, stream) replays the identical sequence") {
    RngStream a(42, 7), b(42, 7);
    for (int k = 0; k < 1000; ++k) {
        REQUIRE(a.uniform01() == b.uniform01());
    }
    RngStream c(42, 7), d(42, 7);
    for (int k = 0; k < 100; ++k) {
        REQUIRE(gaussian_increment(c, 0.01) == gaussian_increment(d, 0.01));
        REQUIRE(poisson_count(c, 0.7) == poisson_count(d, 0.7));
    }
}

TEST_CASE("distinct stream ids decorrelate") {
    RngStream a(42, 0), b(42, 1);
    const int n = 20000;
    double sum_ab = 0, sum_a = 0, sum_b = 0, sum_aa = 0, sum_bb = 0;
    bool any_diff = false;
    for (int k = 0; k < n; ++k) {
        const double x = gaussian_increment(a, 1.0);
        const double y = gaussian_increment(b, 1.0);
        any_diff = any_diff || x != y;
        sum_a += x;
        sum_b += y;
        sum_ab += x * y;
        sum_aa += x * x;
        sum_bb += y * y;
    }
    REQUIRE(any_diff);
    const double cov = sum_ab / n - (sum_a / n) * (sum_b / n);
    const double corr = cov / std::sqrt((sum_aa / n - (sum_a / n) * (sum_a / n)) *
                                        (sum_bb / n - (sum_b / n) * (sum_b / n)));
    CHECK(std::fabs(corr) < 0.05);
}

TEST_CASE("gaussian increments have Normal(0, dt) moments") {
    RngStream rng(12345, 0);
    const std::size_t n = 1'000'000;
    const double dt = 0.01;
    double sum = 0, sum_sq = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = gaussian_increment(rng, dt);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean) <= 4e-4);            // 4 sigma CLT bound
    CHECK(std::fabs(var / dt - 1.0) <= 0.01);  // chi-square concentration
}

TEST_CASE("gaussian increment rejects dt <= 0") {
    RngStream rng(1, 0);
    REQUIRE_THROWS_AS(gaussian_increment(rng, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(gaussian_increment(rng, -1.0), std::domain_error);
    REQUIRE_THROWS_AS(gaussian_increment(rng, std::nan("")), std::domain_error);
}

TEST_CASE("poisson count at rate 0 is always 0") {
    RngStream rng(3, 0);
    for (int k = 0; k < 100; ++k) REQUIRE(poisson_count(rng, 0.0) == 0);
}

TEST_CASE("poisson count rejects bad rates") {
    RngStream rng(3, 0);
    REQUIRE_THROWS_AS(poisson_count(rng, -0.1), std::domain_error);
    REQUIRE_THROWS_AS(poisson_count(rng, std::numeric_limits<double>::infinity()),
                      std::domain_error);
    REQUIRE_THROWS_AS(poisson_count(rng, std::nan("")), std::domain_error);
}

TEST_CASE("poisson counts match mean and variance at rate 0.5") {
    RngStream rng(2718, 0);
    const std::size_t n = 1'000'000;
    const double rate = 0.5;
    double sum = 0, sum_sq = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto x = static_cast<double>(poisson_count(rng, rate));
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean / rate - 1.0) <= 0.01);
    CHECK(std::fabs(var / rate - 1.0) <= 0.02);
}

TEST_CASE("poisson counts match moments in the rejection-sampler range") {
    RngStream rng(1618, 0);
    const std::size_t n = 200'000;
    const double rate = 30.0;
    double sum = 0, sum_sq = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto x = static_cast<double>(poisson_count(rng, rate));
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean / rate - 1.0) <= 0.01);
    CHECK(std::fabs(var / rate - 1.0) <= 0.05);
}

TEST_CASE("mark sampling follows the rate proportions") {
    auto levy = single_mark(0.001, 1.0);
    levy.marks.push_back({0.0005, 3.0});
    RngStream rng(31337, 0);
    const std::size_t n = 1'000'000;
    const auto batch = sample_marks(rng, levy, n);
    REQUIRE(batch.count() == n);
    std::size_t ones = 0;
    for (auto idx : batch.mark_indices) {
        REQUIRE(idx < levy.marks.size());
        ones += idx == 1 ? 1 : 0;
    }
    const double freq = static_cast<double>(ones) / static_cast<double>(n);
    CHECK(std::fabs(freq - 0.75) <= 0.0075);  // within 1% of 3/4
}

TEST_CASE("mark sampling edge cases") {
    const auto levy = single_mark(0.001, 1.0);
    RngStream rng(5, 0);
    const auto batch = sample_marks(rng, levy, 5);
    REQUIRE(batch.count() == 5);
    for (auto idx : batch.mark_indices) CHECK(idx == 0);

    CHECK(sample_marks(rng, levy, 0).count() == 0);
    CHECK(sample_marks(rng, {}, 0).count() == 0);
    REQUIRE_THROWS_AS(sample_marks(rng, {}, 3), std::domain_error);
}
