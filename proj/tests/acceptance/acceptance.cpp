// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "builders.hpp"
#include "dforge/costing.hpp"
#include "dforge/errors.hpp"
#include "dforge/experiment.hpp"
#include "dforge/generation.hpp"
#include "dforge/judging.hpp"
#include "dforge/metrics.hpp"
#include "dforge/stats.hpp"
#include "e2e.hpp"
#include "stats_fixtures.hpp"
#include "win_rate_oracle.hpp"

using namespace dforge;
using namespace testing_support;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
    bool ok = true;
    std::vector<std::string> problems;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (problems.size() < 5) problems.push_back(what);
        }
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const std::vector<GenerationMethod> kMethods{{Strategy::dual, "gpt"}, {Strategy::dual, "llama"},
                                             {Strategy::single, "gpt"}, {Strategy::single, "llama"}};

std::vector<Judgment> random_round(std::mt19937& rng, const std::string& judge, int seeds,
                                   const std::vector<GenerationMethod>& methods, double invalid = 0.0) {
    std::vector<Judgment> out;
    std::uniform_real_distribution<double> u(0, 1);
    for (int s = 0; s < seeds; ++s)
        for (std::size_t i = 0; i < methods.size(); ++i)
            for (std::size_t k = 0; k < methods.size(); ++k) {
                if (i == k) continue;
                std::optional<Choice> c;
                if (u(rng) >= invalid) c = Choice(rng() % 3);
                out.push_back(make_judgment("s" + std::to_string(s), judge, methods[i], methods[k], c));
            }
    return out;
}

// 1. Win-rate matrix on a scripted two-seed experiment vs brute-force enumeration.
Check win_rate_exactness() {
    Check c;
    const auto start = Clock::now();
    const auto dir = fresh_dir("acc_winrate");
    std::ofstream(dir / "seeds.jsonl") << R"({"id": "s1", "summary": "Pharmacist, 6 years."})" << '\n'
                                       << R"({"id": "s2", "summary": "Bus driver, 12 years."})" << '\n';
    // 2 seeds x 12 ordered pairs; verdicts written out by hand.
    const std::vector<std::string> verdicts{"1", "2", "Tie", "1", "1", "2", "2", "2", "Tie", "1", "2", "1",
                                            "2", "2", "1", "Tie", "1", "1", "2", "Tie", "2", "1", "1", "2"};
    json judge_replies = json::array();
    for (const auto& v : verdicts) judge_replies.push_back(json{{"Reason", "scripted"}, {"Choice", v}}.dump());
    const json scenario{{"replies",
                         {{"interviewer", {"Good morning.", "I got what I needed, thank you for your time.",
                                           "Good morning.", "I got what I needed, thank you for your time.",
                                           "Good morning.", "I got what I needed, thank you for your time.",
                                           "Good morning.", "I got what I needed, thank you for your time."}},
                          {"candidate", {"Morning!", "Hi.", "Hello.", "Hey."}},
                          {"single", {"interviewer: Hi\ncandidate: Hello", "interviewer: Hi\ncandidate: Hey",
                                      "interviewer: Hi\ncandidate: Yo", "interviewer: Hi\ncandidate: Sup"}},
                          {"judge", judge_replies}}}};
    auto config = parse_config(json{{"seed_source", (dir / "seeds.jsonl").string()},
                                    {"generation_models", {"gpt", "llama"}},
                                    {"judge_models", {"judge"}}},
                               dir);
    ExperimentStore store(dir / "exp");
    auto mock = MockProvider::from_json(scenario);
    c.expect(cmd_generate(config, store, *mock, {}).created == 8, "expected 8 dialogues");
    c.expect(cmd_judge(config, store, *mock, {}).created == 24, "expected 24 judgments");
    const auto data = store.load();

    // Verdicts map onto the schedule one to one.
    for (std::size_t i = 0; i < data.judgments.size(); ++i)
        c.expect(to_string(*data.judgments[i].choice) == verdicts[i], "verdict order differs from the schedule");

    const auto m = win_rate_matrix(data.judgments, "judge");
    std::size_t cells = 0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t col = 0; col < WinRateMatrix::kColumns; ++col) {
            if (r == m.both_row() && col == WinRateMatrix::both_column()) continue;
            const std::string model = r < m.models.size() ? m.models[r] : "";
            const std::optional<Strategy> s = col == 0   ? std::optional(Strategy::dual)
                                              : col == 1 ? std::optional(Strategy::single)
                                                         : std::nullopt;
            const auto expected = oracle_cell(data.judgments, model, s);
            c.expect(m.at(r, col).rate == expected.rate(), fmt::format("cell ({}, {}) differs", r, col));
            ++cells;
        }
    c.expect(cells == 8, "matrix shape");
    const double t = seconds_since(start);
    c.expect(t < 1.0, fmt::format("took {:.3f}s", t));
    return c;
}

// 2. Conservation and the two-method identity.
Check conservation() {
    Check c;
    std::mt19937 rng(20240601);
    const std::vector<GenerationMethod> two{{Strategy::dual, "gpt"}, {Strategy::single, "gpt"}};
    for (int trial = 0; trial < 1000; ++trial) {
        const bool pair_only = trial % 2 == 0;
        const auto js = random_round(rng, "j", 1 + static_cast<int>(rng() % 5), pair_only ? two : kMethods);
        long non_tie = 0, ties = 0;
        for (const auto& j : js) (*j.choice == Choice::tie ? ties : non_tie)++;
        const auto t = tally(js);
        long w = 0, l = 0, tt = 0;
        for (const auto& [_, m] : t) {
            w += m.wins;
            l += m.losses;
            tt += m.ties;
        }
        c.expect(w == non_tie && l == non_tie, "wins/losses do not match non-tie count");
        c.expect(tt == 2 * ties, "ties are not double-counted");
        if (pair_only) {
            const double lhs = win_rate(t.at(two[0])) + win_rate(t.at(two[1]));
            const double rhs = 1.0 - static_cast<double>(ties) / static_cast<double>(js.size());
            c.expect(std::abs(lhs - rhs) <= 1e-12, fmt::format("WR_A + WR_B = {} vs {}", lhs, rhs));
        }
    }
    return c;
}

// 3. Every unordered pair exactly twice, once per order.
Check schedule_completeness() {
    Check c;
    const auto start = Clock::now();
    std::mt19937 rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 7);
        std::vector<Dialogue> ds;
        for (int i = 0; i < k; ++i)
            ds.push_back(make_dialogue("s", {rng() % 2 ? Strategy::single : Strategy::dual,
                                             "m" + std::to_string(i)}));
        std::shuffle(ds.begin(), ds.end(), rng);
        const auto tasks = schedule_pairs(ds, {"judge"});
        std::map<std::pair<GenerationMethod, GenerationMethod>, int> unordered, ordered;
        for (const auto& t : tasks) {
            const auto a = t.first.get().method, b = t.second.get().method;
            ++ordered[{a, b}];
            ++unordered[{std::min(a, b), std::max(a, b)}];
        }
        c.expect(unordered.size() == static_cast<std::size_t>(k * (k - 1) / 2), "missing pairs");
        for (const auto& [p, n] : unordered) {
            c.expect(n == 2, "pair not scheduled twice");
            c.expect(ordered[{p.first, p.second}] == 1 && ordered[{p.second, p.first}] == 1, "order missing");
        }
    }
    const double t = seconds_since(start);
    c.expect(t < 1.0, fmt::format("took {:.3f}s", t));
    return c;
}

// 4. Relaxed agreement dominates and the canonical cases classify correctly.
Check agreement_relaxation() {
    Check c;
    c.expect(agrees(Choice::first, Choice::first, false) && agrees(Choice::first, Choice::first, true),
             "\"1\"/\"1\" must agree");
    c.expect(!agrees(Choice::first, Choice::tie, false) && agrees(Choice::first, Choice::tie, true),
             "\"1\"/\"Tie\" agrees only when relaxed");
    c.expect(!agrees(Choice::first, Choice::second, false) && !agrees(Choice::first, Choice::second, true),
             "\"1\"/\"2\" never agrees");
    std::mt19937 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const int seeds = 1 + static_cast<int>(rng() % 4);
        const auto a = random_round(rng, "A", seeds, kMethods, 0.05);
        const auto b = random_round(rng, "B", seeds, kMethods, 0.05);
        for (const auto& cat : agreement(a, b).categories) {
            c.expect(cat.relaxed_agree >= cat.unrelaxed_agree, "relaxed < unrelaxed");
            if (cat.compared) c.expect(*cat.unrelaxed() <= *cat.relaxed() && *cat.relaxed() <= 1.0, "rates out of order");
        }
    }
    return c;
}

// 5. Kruskal-Wallis against the reference and under monotone transforms.
Check kruskal() {
    Check c;
    const auto basic = kruskal_wallis({{1, 2, 3}, {4, 5, 6}});
    c.expect(std::abs(basic.H - 3.857142857) <= 1e-9, fmt::format("H = {:.12f}", basic.H));
    for (const auto& f : fixtures::kKruskal) {
        const auto r = kruskal_wallis(f.groups);
        c.expect(std::abs(r.H - f.H) <= 1e-9, fmt::format("H {} vs {}", r.H, f.H));
        c.expect(std::abs(r.p_value - f.p) <= 1e-9, fmt::format("p {} vs {}", r.p_value, f.p));
    }
    std::mt19937 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<double>> g(3), t(3);
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 2 + static_cast<int>(rng() % 6); ++i) {
                const double x = static_cast<double>(rng() % 15);
                g[k].push_back(x);
                t[k].push_back(x * x * x + 2.0 * x + 100.0);
            }
        const auto a = kruskal_wallis(g), b = kruskal_wallis(t);
        c.expect(a.H == b.H && a.p_value == b.p_value, "monotone transform changed the result");
    }
    return c;
}

// 6. Chi-square upper tail.
Check chi_square() {
    Check c;
    const double sf = chi_square_sf(3.841, 1);
    c.expect(std::abs(sf - 0.05) <= 5e-4, fmt::format("sf(3.841, 1) = {}", sf));
    double worst = 0;
    for (std::size_t d = 0; d < fixtures::kChiDf.size(); ++d)
        for (std::size_t i = 0; i < fixtures::kChiX.size(); ++i)
            worst = std::max(worst, std::abs(chi_square_sf(fixtures::kChiX[i], fixtures::kChiDf[d]) -
                                             fixtures::kChiSf[d][i]));
    c.expect(worst <= 1e-8, fmt::format("max deviation {:.3g}", worst));
    return c;
}

// 7. Ordinal regression.
Check ordinal_regression() {
    Check c;
    const auto f = fit_ordinal(fixtures::kOrdinalX, fixtures::kOrdinalY);
    c.expect(std::abs(f.beta - fixtures::kOrdinalBeta) <= 1e-6 * std::abs(fixtures::kOrdinalBeta),
             fmt::format("beta {} vs {}", f.beta, fixtures::kOrdinalBeta));
    c.expect(f.thresholds.size() == 2, "expected two thresholds");
    if (f.thresholds.size() == 2) {
        c.expect(std::abs(f.thresholds[0] - fixtures::kOrdinalTheta1) <= 1e-6, "theta1 differs");
        c.expect(std::abs(f.thresholds[1] - fixtures::kOrdinalTheta2) <= 1e-6, "theta2 differs");
    }

    // Gradient on standardized x at perturbed parameters.
    std::vector<double> xs(fixtures::kOrdinalX);
    double mean = 0, var = 0;
    for (double v : xs) mean += v;
    mean /= xs.size();
    for (double v : xs) var += (v - mean) * (v - mean);
    for (double& v : xs) v = (v - mean) / std::sqrt(var / fixtures::kOrdinalX.size());
    std::mt19937 rng(12);
    std::normal_distribution<double> n(0, 0.4);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> p{-0.8 + n(rng), 0.9 + n(rng), n(rng)};
        const auto g = ordinal::gradient(p, xs, fixtures::kOrdinalY, 3);
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double h = 1e-6;
            auto up = p, down = p;
            up[k] += h;
            down[k] -= h;
            const double fd = (ordinal::log_likelihood(up, xs, fixtures::kOrdinalY, 3) -
                               ordinal::log_likelihood(down, xs, fixtures::kOrdinalY, 3)) /
                              (2 * h);
            c.expect(std::abs(g[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)),
                     fmt::format("gradient[{}] {} vs fd {}", k, g[k], fd));
        }
    }

    // y(a*x + b): beta scales by 1/a, thresholds shift by beta*b/a.
    for (auto [a, b] : {std::pair{0.001, 0.0}, std::pair{1.0, 1e4}, std::pair{3.5, -250.0}}) {
        std::vector<double> moved;
        for (double v : fixtures::kOrdinalX) moved.push_back(a * v + b);
        const auto g = fit_ordinal(moved, fixtures::kOrdinalY);
        const double beta = f.beta / a;
        c.expect(std::abs(g.beta - beta) <= 1e-6 * std::abs(beta), fmt::format("scaled beta {} vs {}", g.beta, beta));
        for (std::size_t k = 0; k < 2; ++k) {
            const double theta = f.thresholds[k] + beta * b;
            c.expect(std::abs(g.thresholds[k] - theta) <= 1e-6 * std::max(1.0, std::abs(theta)),
                     fmt::format("shifted theta{} {} vs {}", k + 1, g.thresholds[k], theta));
        }
        c.expect(std::abs(g.log_likelihood - f.log_likelihood) <= 1e-8, "likelihood not invariant");
    }

    // Longer transcripts sit in lower buckets: the slope must be negative.
    const std::vector<double> len{210, 260, 300, 340, 380, 420, 470, 520, 560, 610, 650, 700, 760, 820, 880};
    const std::vector<int> bucket{2, 2, 1, 2, 2, 1, 1, 2, 1, 0, 1, 0, 1, 0, 0};
    const auto mono = fit_ordinal(len, bucket);
    c.expect(mono.beta < 0, fmt::format("monotone beta = {}", mono.beta));
    return c;
}

// 8. Cost model.
Check cost_model_check() {
    Check c;
    std::mt19937_64 rng(31337);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t p = rng() % 20000, a = rng() % 2000, n = 1 + rng() % 100;
        c.expect(estimate_dual_tokens(p, a, n) == simulate_dual_tokens(p, a, n),
                 fmt::format("mismatch at p={} a={} n={}", p, a, n));
    }
    // Mean prompt + completion tokens per dialogue, dual vs single.
    const double gpt = (6092.0 + 294.0) / (361.0 + 626.0);
    const double llama = (7583.0 + 635.0) / (356.0 + 1143.0);
    c.expect(std::abs(gpt - 6.47) <= 0.01, fmt::format("GPT-4 ratio {:.4f}", gpt));
    c.expect(std::abs(llama - 5.48) <= 0.01, fmt::format("Llama ratio {:.4f}", llama));
    const double avg = (gpt + llama) / 2.0;
    c.expect(std::round(avg) == 6.0, fmt::format("average ratio {:.3f} is not about six", avg));

    // The same ratios come out of summarize_costs on synthetic usage.
    std::vector<Dialogue> ds;
    auto add = [&](const GenerationMethod& m, std::int64_t p, std::int64_t comp) {
        auto d = make_dialogue("s-" + m.model, m);
        d.usage = {{p, comp}};
        ds.push_back(d);
    };
    add({Strategy::dual, "gpt-4"}, 6092, 294);
    add({Strategy::single, "gpt-4"}, 361, 626);
    add({Strategy::dual, "llama"}, 7583, 635);
    add({Strategy::single, "llama"}, 356, 1143);
    const auto summary = summarize_costs(ds);
    c.expect(summary.ratios.size() == 2, "expected two ratios");
    for (const auto& r : summary.ratios)
        c.expect(std::abs(r.total - (r.model == "gpt-4" ? gpt : llama)) < 1e-12, "summary ratio differs");
    return c;
}

// 9. Prompt fidelity.
Check prompt_fidelity() {
    Check c;
    const PromptSet prompts;
    const std::filesystem::path dir = DFORGE_PROMPT_DIR;
    const std::vector<std::pair<std::string, const std::string*>> files{
        {"interviewer_system.txt", &prompts.interviewer_system}, {"candidate_system.txt", &prompts.candidate_system},
        {"single_system.txt", &prompts.single_system},           {"single_user.txt", &prompts.single_user},
        {"judge.txt", &prompts.judge}};
    for (const auto& [name, embedded] : files)
        c.expect(slurp(dir / name) == *embedded, "embedded prompt differs from " + name);

    const auto req = build_judge_prompt("interviewer: one", "interviewer: two", "judge");
    const auto& body = req.messages.at(0).content;
    for (const char* sentence :
         {"You will be provided with two conversations, and there can be AI-generated utterances in each "
          "conversation. You need to read both conversations and judge if AI generation was used for any of them. "
          "Do not consider conversation length as a factor.",
          "If you think Conversation 1 is more likely to have AI generation involved, include \"Choice\": \"1\" in "
          "your response.",
          "Respond **only in JSON format** with two keys:",
          "Don't put additional quotes or backticks around the JSON output."})
        c.expect(body.find(sentence) != std::string::npos, std::string("judge prompt lacks: ") + sentence);
    auto expected = prompts.judge;
    expected.replace(expected.find("{dialog1}"), 9, "interviewer: one");
    expected.replace(expected.find("{dialog2}"), 9, "interviewer: two");
    c.expect(body == expected, "assembled judge prompt is not the template with both transcripts substituted");

    const Seed seed{"s", "Chef, 8 years."};
    const auto interviewer = interviewer_agent(prompts).system_prompt(seed);
    c.expect(interviewer.find("just say 'I got what I needed, thank you for your time.' Use those exact words.") !=
                 std::string::npos,
             "interviewer prompt lacks the termination instruction");
    c.expect(candidate_agent(prompts).system_prompt(seed).find(seed.summary) != std::string::npos,
             "candidate prompt lacks the seed");
    return c;
}

// 10. End-to-end mock run.
Check end_to_end() {
    Check c;
    const auto start = Clock::now();
    const auto first = fresh_dir("acc_e2e_1");
    const auto counts = run_demo_pipeline(first);
    const double t = seconds_since(start);
    c.expect(counts.dialogues == 40, fmt::format("{} dialogues", counts.dialogues));
    c.expect(counts.judgments == 240, fmt::format("{} judgments", counts.judgments));
    c.expect(t < 10.0, fmt::format("took {:.2f}s", t));
    const auto second = fresh_dir("acc_e2e_2");
    run_demo_pipeline(second);
    c.expect(tree_hash(first) == tree_hash(second), "repeat run differs");
    return c;
}

// 11. Verdict triage; invalid judgments stay out of every tally.
Check verdict_parsing() {
    Check c;
    const auto clean = parse_verdict(R"({"Reason": "Too smooth.", "Choice": "1"})");
    c.expect(clean.status == ParseStatus::ok && clean.verdict && clean.verdict->choice == Choice::first, "clean JSON");
    const auto fenced = parse_verdict("```json\n{\"Reason\": \"Both odd.\", \"Choice\": \"Tie\"}\n```");
    c.expect(fenced.status == ParseStatus::recovered && fenced.verdict && fenced.verdict->choice == Choice::tie,
             "fenced JSON");
    const auto garbage = parse_verdict("Conversation 2, obviously. Choice: 2!!");
    c.expect(garbage.status == ParseStatus::invalid && !garbage.verdict, "garbage");

    std::mt19937 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto js = random_round(rng, "j", 2, kMethods, 0.3);
        std::vector<Judgment> valid;
        for (const auto& j : js)
            if (j.valid()) valid.push_back(j);
        c.expect(tally(js) == tally(valid), "invalid judgment changed a tally");
        const auto m1 = win_rate_matrix(js, "j"), m2 = win_rate_matrix(valid, "j");
        for (std::size_t r = 0; r < m1.rows(); ++r)
            for (std::size_t col = 0; col < 3; ++col)
                c.expect(m1.at(r, col).rate == m2.at(r, col).rate, "invalid judgment changed a win rate");
    }
    return c;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"win-rate matrix equals brute-force enumeration", win_rate_exactness},
        {"tally conservation and two-method identity", conservation},
        {"order-swapped schedule completeness", schedule_completeness},
        {"agreement relaxation", agreement_relaxation},
        {"Kruskal-Wallis H and p", kruskal},
        {"chi-square upper tail", chi_square},
        {"ordinal regression fit, gradient, equivariance, sign", ordinal_regression},
        {"dual-prompt cost model and token ratios", cost_model_check},
        {"prompt fidelity", prompt_fidelity},
        {"end-to-end mock run", end_to_end},
        {"verdict parsing triage", verdict_parsing},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, fn] = criteria[i];
        const auto start = Clock::now();
        Check result;
        try {
            result = fn();
        } catch (const std::exception& e) {
            result.ok = false;
            result.problems.push_back(std::string("exception: ") + e.what());
        }
        const double ms = seconds_since(start) * 1000.0;
        fmt::print("[{}] AC{:<2} {} ({:.1f} ms)\n", result.ok ? "PASS" : "FAIL", i + 1, name, ms);
        for (const auto& p : result.problems) fmt::print("         - {}\n", p);
        if (!result.ok) ++failed;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
