#include <doctest.h>

#include <random>

#include "builders.hpp"
#include "dforge/errors.hpp"
#include "dforge/metrics.hpp"
#include "win_rate_oracle.hpp"

using namespace dforge;
using namespace testing_support;

namespace {

const std::vector<GenerationMethod> kMethods{dual("gpt"), dual("llama"), single("gpt"), single("llama")};

std::vector<Judgment> random_judgments(std::mt19937& rng, const std::string& judge, int seeds,
                                       double invalid_rate = 0.1) {
    std::vector<Judgment> out;
    std::uniform_real_distribution<double> u(0, 1);
    for (int s = 0; s < seeds; ++s)
        for (std::size_t i = 0; i < kMethods.size(); ++i)
            for (std::size_t k = 0; k < kMethods.size(); ++k) {
                if (i == k) continue;
                std::optional<Choice> c;
                if (u(rng) >= invalid_rate) c = Choice(rng() % 3);
                out.push_back(make_judgment("s" + std::to_string(s), judge, kMethods[i], kMethods[k], c));
            }
    return out;
}

}  // namespace

TEST_CASE("tally basics") {
    const std::vector<Judgment> one{make_judgment("s", "j", dual("a"), single("a"), Choice::second)};
    auto t = tally(one);
    CHECK(t.at(dual("a")).losses == 0);
    CHECK(t.at(dual("a")).wins == 1);
    CHECK(t.at(single("a")).losses == 1);

    const std::vector<Judgment> tie{make_judgment("s", "j", dual("a"), single("a"), Choice::tie)};
    t = tally(tie);
    CHECK(t.at(dual("a")).ties == 1);
    CHECK(t.at(single("a")).ties == 1);

    const std::vector<Judgment> invalid{make_judgment("s", "j", dual("a"), single("a"), std::nullopt)};
    CHECK(tally(invalid).empty());

    t = tally(one, [](const GenerationMethod& m) { return m.strategy == Strategy::dual; });
    CHECK(t.size() == 1);
}

TEST_CASE("win rate includes ties in the denominator") {
    MethodTally t{dual("a"), 3, 1, 1};
    CHECK(win_rate(t) == doctest::Approx(0.6));
    CHECK(win_rate(MethodTally{dual("a"), 0, 0, 4}) == 0.0);
    CHECK_THROWS_AS(win_rate(MethodTally{dual("a")}), EmptyDenominatorError);
}

TEST_CASE("conservation over random verdict sets") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto js = random_judgments(rng, "j", 1 + static_cast<int>(rng() % 4));
        long non_tie = 0, ties = 0;
        for (const auto& j : js)
            if (j.valid()) (*j.choice == Choice::tie ? ties : non_tie)++;
        long w = 0, l = 0, t = 0;
        for (const auto& [_, m] : tally(js)) {
            w += m.wins;
            l += m.losses;
            t += m.ties;
        }
        CHECK(w == non_tie);
        CHECK(l == non_tie);
        CHECK(t == 2 * ties);
    }
}

TEST_CASE("matrix cells equal brute-force enumeration") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto js = random_judgments(rng, "j", 3);
        for (auto mode : {IntraGroup::include, IntraGroup::exclude}) {
            const auto m = win_rate_matrix(js, "j", mode);
            REQUIRE(m.models == std::vector<std::string>{"gpt", "llama"});
            REQUIRE(m.rows() == 3);
            const bool excl = mode == IntraGroup::exclude;
            for (std::size_t r = 0; r < 3; ++r)
                for (std::size_t c = 0; c < 3; ++c) {
                    if (r == 2 && c == 2) {
                        CHECK_FALSE(m.at(r, c).defined);
                        continue;
                    }
                    const std::string model = r < 2 ? m.models[r] : "";
                    const std::optional<Strategy> strat =
                        c == 0 ? std::optional(Strategy::dual) : c == 1 ? std::optional(Strategy::single) : std::nullopt;
                    const auto expected = oracle_cell(js, model, strat, excl);
                    CHECK(m.at(r, c).rate == expected.rate());
                    CHECK(m.at(r, c).tally.wins == expected.wins);
                    CHECK(m.at(r, c).tally.losses == expected.losses);
                    CHECK(m.at(r, c).tally.ties == expected.ties);
                }
        }
    }
}

TEST_CASE("empty cells and judge mismatch") {
    const std::vector<Judgment> js{make_judgment("s", "j", dual("a"), dual("b"), Choice::first)};
    const auto m = win_rate_matrix(js, "j");
    CHECK_FALSE(m.at(0, 1).rate);
    CHECK_THROWS_AS(m.rate(0, 1), EmptyDenominatorError);
    CHECK_THROWS_AS(m.rate(2, 2), std::out_of_range);
    CHECK(m.rate(0, 0) == 0.0);
    CHECK(m.rate(1, 0) == 1.0);
    CHECK_THROWS_AS(win_rate_matrix(js, "other"), ValidationError);
}

TEST_CASE("agreement relaxation") {
    CHECK(agrees(Choice::first, Choice::first, false));
    CHECK_FALSE(agrees(Choice::first, Choice::tie, false));
    CHECK(agrees(Choice::first, Choice::tie, true));
    CHECK_FALSE(agrees(Choice::first, Choice::second, true));
    CHECK(agrees(Choice::tie, Choice::tie, false));

    std::mt19937 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_judgments(rng, "A", 2, 0.05);
        auto b = random_judgments(rng, "B", 2, 0.05);
        const auto rep = agreement(a, b);
        CHECK(rep.categories.size() == 6);
        for (const auto& c : rep.categories) {
            CHECK(c.a < c.b);
            CHECK(c.relaxed_agree >= c.unrelaxed_agree);
            if (c.compared) CHECK(*c.relaxed() >= *c.unrelaxed());
        }
    }
}

TEST_CASE("agreement needs matching coverage and skips invalid verdicts") {
    std::vector<Judgment> a{make_judgment("s", "A", dual("x"), single("x"), Choice::first),
                            make_judgment("s", "A", single("x"), dual("x"), Choice::tie)};
    std::vector<Judgment> b{make_judgment("s", "B", dual("x"), single("x"), Choice::first),
                            make_judgment("s", "B", single("x"), dual("x"), std::nullopt)};
    const auto rep = agreement(a, b);
    REQUIRE(rep.categories.size() == 1);
    CHECK(rep.categories[0].compared == 1);
    CHECK(rep.categories[0].unrelaxed() == 1.0);
    CHECK(rep.tie_rate_a.ties == 1);
    CHECK(rep.tie_rate_b.valid == 1);

    b.pop_back();
    CHECK_THROWS_AS(agreement(a, b), CoverageError);
}

TEST_CASE("tie rate") {
    std::vector<Judgment> js{make_judgment("s", "A", dual("x"), single("x"), Choice::tie),
                             make_judgment("s", "A", single("x"), dual("x"), Choice::first),
                             make_judgment("t", "A", single("x"), dual("x"), std::nullopt)};
    const auto t = tie_rate(js, "A");
    CHECK(t.ties == 1);
    CHECK(t.valid == 2);
    CHECK(t.rate() == 0.5);
    CHECK_THROWS_AS(tie_rate({}, "A").rate(), EmptyDenominatorError);
}
