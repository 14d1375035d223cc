#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "rrc/rng.hpp"

using rrc::Rng;

TEST_CASE("same seed reproduces the full stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.uniform() == b.uniform());
        CHECK(a.gaussian() == b.gaussian());
    }
}

TEST_CASE("uniform stays in [0,1) with plausible mean") {
    Rng rng(7);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("gaussian has the requested moments empirically") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian(2.0, 3.0);
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
    CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("poisson mean tracks lambda") {
    Rng rng(13);
    for (double lambda : {0.5, 2.0, 8.0}) {
        double sum = 0;
        const int n = 50000;
        for (int i = 0; i < n; ++i) sum += rng.poisson(lambda);
        CHECK(sum / n == doctest::Approx(lambda).epsilon(0.05));
    }
    CHECK(rng.poisson(0.0) == 0);
    CHECK(rng.poisson(-1.0) == 0);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    auto a = v, b = v;
    Rng r1(3), r2(3);
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
}

TEST_CASE("mix decorrelates nearby inputs") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
        for (std::uint64_t b = 0; b < 50; ++b) seen.insert(Rng::mix(a, b));
    CHECK(seen.size() == 2500);
}
