#include <doctest.h>

#include <cmath>
#include <string>

#include "hsl/config.hpp"
#include "hsl/stats.hpp"

using namespace hsl;

TEST_CASE("empty config yields the documented defaults") {
    const ExperimentConfig c = parse_config("");
    CHECK(c.problem.d == 8);
    CHECK(c.problem.prior_law == "polynomial");
    CHECK(c.sde.steps == 1000);
    CHECK(c.sde.t_floor == doctest::Approx(1e-3));
    CHECK(c.dsm.n_samples == 1000000);
    CHECK(c.train.schedule_steps == 500);
    CHECK(c.output.directory == "out");
}

TEST_CASE("values parse with comments and whitespace") {
    const ExperimentConfig c = parse_config(
        "# experiment\n"
        "[problem]\n"
        "d = 4   ; modes\n"
        "observed = 1, 2\n"
        "y_observed = 0.5, -0.25\n"
        "sigma_b = 0\n"
        "q_target = 0\n"
        "\n[sde]\n"
        "n_paths = 5000\n");
    CHECK(c.problem.d == 4);
    CHECK(c.problem.observed == std::vector<std::size_t>{1, 2});
    CHECK(c.problem.y_observed == std::vector<double>{0.5, -0.25});
    CHECK(c.problem.sigma_b == 0.0);
    CHECK(c.sde.n_paths == 5000);
}

TEST_CASE("unknown keys and sections are rejected with the line number") {
    CHECK_THROWS_WITH_AS(parse_config("[problem]\nd = 4\ntypo_key = 1\n"),
                         doctest::Contains("line 3"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("[nosuch]\n"), doctest::Contains("line 1"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("d = 4\n"), doctest::Contains("outside"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("[problem]\nd = abc\n"), doctest::Contains("number"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("[problem]\nd 4\n"), doctest::Contains("key = value"),
                         std::invalid_argument);
}

TEST_CASE("serialize/parse round trip is the identity on the canonical form") {
    ExperimentConfig c = parse_config("[train]\nsteps = 77\n[output]\ndirectory = results\n");
    const std::string first = serialize_config(c);
    const ExperimentConfig back = parse_config(first);
    const std::string second = serialize_config(back);
    CHECK(first == second);
    CHECK(fnv1a64(first) == fnv1a64(second));
    CHECK(back.train.steps == 77);
    CHECK(back.output.directory == "results");
}

TEST_CASE("make_problem honors q_target with per-mode noise levels") {
    ExperimentConfig c = parse_config("");
    c.problem.q_target = 1.0;
    const ProblemSpec spec = make_problem(c.problem);
    for (std::size_t j = 0; j < 3; ++j) CHECK(spec.q(j) == doctest::Approx(1.0));
    CHECK(spec.q(3) == 0.0);

    c.problem.q_target = 0.0;
    c.problem.sigma_b = 0.5;
    const ProblemSpec scalar = make_problem(c.problem);
    CHECK(scalar.q(0) == doctest::Approx(1.0 / 0.25));
    CHECK(scalar.q(1) == doctest::Approx(0.25 / 0.25));

    c.problem.sigma_b = 0.0;
    const ProblemSpec noiseless = make_problem(c.problem);
    CHECK(std::isinf(noiseless.q(0)));
}
