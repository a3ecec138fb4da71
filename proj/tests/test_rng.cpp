#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "twics/rng.hpp"

using namespace twics;

TEST_CASE("derive_seed is deterministic and stream-separating", "[rng]") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    CHECK(derive_seed(42, 0) != derive_seed(42, 1));
    CHECK(derive_seed(42, 0) != derive_seed(43, 0));

    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(123456789, s));
    CHECK(seen.size() == 1000);
}

TEST_CASE("uniform01 stays in [0,1) and reproduces", "[rng]") {
    Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform01());
    }
}

TEST_CASE("normal draws have roughly standard moments", "[rng]") {
    Rng rng(11);
    const int n = 100000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        ss += x * x;
    }
    const double m = s / n;
    const double v = ss / n - m * m;
    CHECK_THAT(m, Catch::Matchers::WithinAbs(0.0, 3.0 / std::sqrt(double(n))));
    CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("below is bounded and shuffle permutes", "[rng]") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);

    std::vector<int> v = {1, 2, 3, 4, 5, 6, 7, 8};
    auto w = v;
    rng.shuffle(w);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("sample_without_replacement keeps order and uniqueness", "[rng]") {
    Rng rng(5);
    std::vector<int> pool;
    for (int i = 0; i < 50; ++i) pool.push_back(i);
    const auto sub = rng.sample_without_replacement(pool, 20);
    REQUIRE(sub.size() == 20);
    CHECK(std::is_sorted(sub.begin(), sub.end()));
    CHECK(std::set<int>(sub.begin(), sub.end()).size() == 20);
}
