#include <doctest.h>

#include <random>

#include "builders.hpp"
#include "dforge/costing.hpp"
#include "dforge/errors.hpp"

using namespace dforge;
using namespace testing_support;

TEST_CASE("closed form equals the call-by-call sum") {
    CHECK(estimate_dual_tokens(100, 10, 1) == 100);
    CHECK(estimate_dual_tokens(100, 10, 4) == 4 * 100 + 6 * 10);
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t p = rng() % 5000, a = rng() % 500, n = 1 + rng() % 60;
        CHECK(estimate_dual_tokens(p, a, n) == simulate_dual_tokens(p, a, n));
        const CostParameters c{static_cast<double>(p), static_cast<double>(a), static_cast<double>(n)};
        CHECK(estimate_dual_tokens(c) == simulate_dual_tokens(c));
    }
}

TEST_CASE("cost grows quadratically in utterances") {
    const CostParameters base{500, 40, 10};
    const CostParameters doubled{500, 40, 20};
    // Second difference in n is constant and equal to a.
    auto at = [](double n) { return estimate_dual_tokens(CostParameters{500, 40, n}); };
    for (double n = 3; n < 30; ++n) CHECK(at(n + 1) - 2 * at(n) + at(n - 1) == doctest::Approx(40));
    CHECK(estimate_dual_tokens(doubled) > 2 * estimate_dual_tokens(base));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(CostParameters({-1, 1, 2}).validate(), ValidationError);
    CHECK_THROWS_AS(CostParameters({1, 1, 0}).validate(), ValidationError);
    CHECK_THROWS_AS(simulate_dual_tokens(CostParameters{1, 1, 2.5}), ValidationError);
}

TEST_CASE("reference token means give the expected dual/single ratios") {
    // Mean prompt and completion tokens per dialogue: dual then single.
    auto ratio = [](double dp, double dc, double sp, double sc) { return (dp + dc) / (sp + sc); };
    CHECK(ratio(6092, 294, 361, 626) == doctest::Approx(6.47).epsilon(0.01 / 6.47));
    CHECK(ratio(7583, 635, 356, 1143) == doctest::Approx(5.48).epsilon(0.01 / 5.48));
}

TEST_CASE("cost summary from usage records") {
    std::vector<Dialogue> ds;
    for (int s = 0; s < 3; ++s) {
        auto d = make_dialogue("s" + std::to_string(s), dual("m"), {"a", "b", "c", "d"});
        d.usage = {{100, 10}, {110, 10}, {120, 10}, {130, 10}};
        ds.push_back(d);
        auto one = make_dialogue("s" + std::to_string(s), single("m"));
        one.usage = {{50, 30}};
        ds.push_back(one);
    }
    const auto summary = summarize_costs(ds);
    REQUIRE(summary.methods.size() == 2);
    CHECK(summary.methods[0].method == dual("m"));
    CHECK(summary.methods[0].mean_prompt_tokens == 460);
    CHECK(summary.methods[0].mean_completion_tokens == 40);
    REQUIRE(summary.ratios.size() == 1);
    CHECK(summary.ratios[0].total == doctest::Approx(500.0 / 80.0));
    CHECK(summary.ratios[0].prompt == doctest::Approx(460.0 / 50.0));
    CHECK(summary.warnings.empty());

    // Scaling every count scales nothing in the ratio.
    auto scaled = ds;
    for (auto& d : scaled)
        for (auto& u : d.usage) {
            u.prompt_tokens *= 3;
            u.completion_tokens *= 3;
        }
    CHECK(summarize_costs(scaled).ratios[0].total == doctest::Approx(summary.ratios[0].total));

    ds.push_back(make_dialogue("s0", dual("lonely")));
    CHECK(summarize_costs(ds).warnings.size() == 1);
}

TEST_CASE("observed parameters of a dual dialogue") {
    auto d = make_dialogue("s", dual("m"), {"a", "b", "c"});
    d.usage = {{100, 20}, {115, 10}, {140, 30}};
    const auto p = observed_cost_parameters(d);
    REQUIRE(p);
    CHECK(p->a == doctest::Approx(20));
    CHECK(p->p == doctest::Approx((100 + 95) / 2.0));
    CHECK(p->n == 3);
    CHECK_FALSE(observed_cost_parameters(make_dialogue("s", single("m"))));

    const auto rows = cost_model(std::vector<Dialogue>{d});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].measured_prompt_tokens == 355);
    CHECK(rows[0].predicted_prompt_tokens == doctest::Approx(estimate_dual_tokens(*p)));
}

TEST_CASE("judge usage is tallied per judge") {
    auto a = make_judgment("s", "A", dual("x"), single("x"), Choice::first);
    a.usage = {{300, 10}, {310, 12}};
    a.attempts = 2;
    auto b = make_judgment("s", "A", single("x"), dual("x"), Choice::tie);
    b.usage = {{300, 8}};
    const auto u = summarize_judge_costs(std::vector<Judgment>{a, b});
    REQUIRE(u.size() == 1);
    CHECK(u[0].judgments == 2);
    CHECK(u[0].calls == 3);
    CHECK(u[0].mean_prompt_tokens == 455);
}
