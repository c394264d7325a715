#include <doctest.h>

#include "brw/exact.hpp"
#include "brw/fk.hpp"
#include "brw/model.hpp"

#include <algorithm>
#include <vector>

using namespace brw;

namespace {

BrwParamsQ binary_params_q(int theta_num, long long n) {
    const Rational theta(theta_num);
    return make_params<Rational>(
        n, theta, near_critical_family_exact("binary", theta, n),
        simple_step<Rational>());
}

}  // namespace

TEST_CASE("path enumeration is exhaustive and normalized") {
    const auto paths = enumerate_paths(simple_step<Rational>(), 0, 2);
    REQUIRE(paths.size() == 4);
    Rational total(0);
    for (const auto& p : paths) {
        REQUIRE(p.sites.size() == 3);
        CHECK(p.sites[0] == 0);
        CHECK(p.prob == Rational(1, 4));
        total += p.prob;
    }
    CHECK(total == Rational(1));

    CHECK(enumerate_paths(simple_step<Rational>(), 5, 0).size() == 1);
    CHECK_THROWS_AS(enumerate_paths(simple_step<Rational>(), 0, 40, 100),
                    ResourceError);
}

TEST_CASE("weighted trace along a hand-checked path") {
    const auto params = binary_params_q(0, 10);
    const auto w = w_table(params, 2, 3);
    // start at 1, step to 0 (absorbed), then to -1
    const auto trace = y_trace(params, w, {1, 0, -1}, 2);
    REQUIRE(trace.size() == 3);
    CHECK(trace[0] == Rational(1, 4));  // w_2(1)
    CHECK(trace[1] == Rational(1, 2));  // frozen at (1 - p0) on absorption
    CHECK(trace[2] == Rational(1, 2));
}

TEST_CASE("trace starts at the table value and stays constant in expectation") {
    for (const int tnum : {0, 1, -1}) {
        const auto params = binary_params_q(tnum, 10);
        for (int m = 1; m <= 3; ++m)
            for (int x0 = 1; x0 <= 3; ++x0) {
                const auto res = check_martingale(params, x0, m);
                CHECK(res.exact);
                CHECK(res.max_error == Rational(0));
                REQUIRE(res.expectations.size() ==
                        static_cast<std::size_t>(m) + 1);
                CHECK(res.expectations.front() == res.reference);
            }
    }
}

TEST_CASE("stopped-path identity, all stopping configurations") {
    for (const int tnum : {0, 1, -1}) {
        const auto params = binary_params_q(tnum, 10);
        const int R = params.step.range;
        for (int m = 1; m <= 3; ++m)
            for (int x = 1; x <= std::min(R * m, 3); ++x)
                for (int y = 0; y < x; ++y) {
                    std::vector<long long> walls;
                    for (long long z = x + 1; z <= R * m + 1; ++z)
                        walls.push_back(z);
                    walls.push_back(-1);  // no upper barrier
                    for (long long z : walls)
                        for (int horizon = 0; horizon <= m; ++horizon) {
                            const auto res =
                                fk_identity(params, x, m, y, z, horizon);
                            CHECK(res.exact);
                            CHECK(res.value == res.reference);
                        }
                }
    }
}

TEST_CASE("horizon zero collapses to the table entry") {
    const auto params = binary_params_q(1, 10);
    const auto w = w_table(params, 3, 3);
    const auto res = fk_identity(params, 2, 3, 0, -1, 0);
    CHECK(res.exact);
    CHECK(res.reference == w.at(3, 2));
}

TEST_CASE("stopped-path argument validation") {
    const auto params = binary_params_q(0, 10);
    CHECK_THROWS_AS(fk_identity(params, 2, 2, 3, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(fk_identity(params, 2, 2, 0, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(fk_identity(params, 2, 2, 0, -1, 5), std::invalid_argument);
    CHECK_THROWS_AS(check_martingale(params, 0, 2), std::invalid_argument);
}
