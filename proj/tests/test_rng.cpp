#include <doctest.h>

#include <cstdint>
#include <vector>

#include "iqlearn/rng.hpp"

using iqlearn::Rng;

TEST_SUITE("rng") {
    TEST_CASE("same seed reproduces the stream exactly") {
        Rng a(42), b(42);
        for (int i = 0; i < 1000; ++i) {
            CHECK(a.raw() == b.raw());
            CHECK(a.uniform() == b.uniform());
            CHECK(a.uniform_int(17) == b.uniform_int(17));
        }
    }

    TEST_CASE("uniform stays in [0, 1) and covers the range") {
        Rng rng(7);
        double lo = 1.0, hi = 0.0;
        for (int i = 0; i < 20000; ++i) {
            const double u = rng.uniform();
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
            lo = std::min(lo, u);
            hi = std::max(hi, u);
        }
        CHECK(lo < 0.01);
        CHECK(hi > 0.99);
    }

    TEST_CASE("uniform_int bounds and rough uniformity") {
        Rng rng(11);
        std::vector<int> counts(5, 0);
        for (int i = 0; i < 50000; ++i) {
            const int k = rng.uniform_int(5);
            REQUIRE(k >= 0);
            REQUIRE(k < 5);
            ++counts[static_cast<std::size_t>(k)];
        }
        for (const int c : counts) {
            CHECK(c > 9300);  // expected 10000, generous slack
            CHECK(c < 10700);
        }
        CHECK_THROWS_AS((void)rng.uniform_int(0), iqlearn::ModelError);
    }

    TEST_CASE("sample_discrete respects the distribution") {
        Rng rng(3);
        Eigen::VectorXd probs(3);
        probs << 0.2, 0.5, 0.3;
        std::vector<long> counts(3, 0);
        const int n = 100000;
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.sample_discrete(probs))];
        CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.01);
        CHECK(std::abs(counts[1] / double(n) - 0.5) < 0.01);
        CHECK(std::abs(counts[2] / double(n) - 0.3) < 0.01);
    }

    TEST_CASE("degenerate distribution always yields its support point") {
        Rng rng(9);
        Eigen::VectorXd probs(4);
        probs << 0.0, 0.0, 1.0, 0.0;
        for (int i = 0; i < 200; ++i) CHECK(rng.sample_discrete(probs) == 2);
    }

    TEST_CASE("state save and load resumes the identical stream") {
        Rng a(123);
        for (int i = 0; i < 57; ++i) (void)a.raw();
        const std::string snapshot = a.save_state();

        Rng b(0);
        b.load_state(snapshot);
        for (int i = 0; i < 100; ++i) CHECK(a.raw() == b.raw());
    }
}
