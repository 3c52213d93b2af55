#include "dforge/costing.hpp"

#include <cmath>

#include "dforge/errors.hpp"

namespace dforge {

void CostParameters::validate() const {
    if (!(p >= 0.0)) throw ValidationError("p", "must be >= 0");
    if (!(a >= 0.0)) throw ValidationError("a", "must be >= 0");
    if (!(n >= 1.0)) throw ValidationError("n", "must be >= 1");
}

double estimate_dual_tokens(const CostParameters& params) {
    params.validate();
    return params.n * params.p + (params.n - 1.0) * params.n / 2.0 * params.a;
}

std::uint64_t estimate_dual_tokens(std::uint64_t p, std::uint64_t a, std::uint64_t n) {
    if (n < 1) throw ValidationError("n", "must be >= 1");
    // (n-1)*n is always even.
    return n * p + (n - 1) * n / 2 * a;
}

double simulate_dual_tokens(const CostParameters& params) {
    params.validate();
    if (params.n != std::floor(params.n))
        throw ValidationError("n", "the call-by-call sum needs a whole number of utterances");
    double total = 0.0;
    const auto calls = static_cast<std::uint64_t>(params.n);
    for (std::uint64_t i = 1; i <= calls; ++i)
        total += params.p + static_cast<double>(i - 1) * params.a;
    return total;
}

std::uint64_t simulate_dual_tokens(std::uint64_t p, std::uint64_t a, std::uint64_t n) {
    if (n < 1) throw ValidationError("n", "must be >= 1");
    std::uint64_t total = 0;
    for (std::uint64_t i = 1; i <= n; ++i) total += p + (i - 1) * a;
    return total;
}

CostSummary summarize_costs(std::span<const Dialogue> dialogues) {
    struct Sums {
        std::size_t count = 0;
        double prompt = 0.0;
        double completion = 0.0;
    };
    std::map<GenerationMethod, Sums> sums;
    for (const auto& d : dialogues) {
        auto& s = sums[d.method];
        ++s.count;
        for (const auto& u : d.usage) {
            s.prompt += static_cast<double>(u.prompt_tokens);
            s.completion += static_cast<double>(u.completion_tokens);
        }
    }

    CostSummary out;
    std::map<std::string, std::map<Strategy, const MethodCost*>> by_model;
    out.methods.reserve(sums.size());
    for (const auto& [method, s] : sums) {
        const double n = static_cast<double>(s.count);
        out.methods.push_back({method, s.count, s.prompt / n, s.completion / n});
    }
    for (const auto& m : out.methods) by_model[m.method.model][m.method.strategy] = &m;

    for (const auto& [model, strategies] : by_model) {
        auto dual = strategies.find(Strategy::dual);
        auto single = strategies.find(Strategy::single);
        if (dual == strategies.end() || single == strategies.end()) {
            out.warnings.push_back("model " + model + " lacks " +
                                   (dual == strategies.end() ? "dual" : "single") +
                                   " dialogues; no cost ratio");
            continue;
        }
        const auto& d = *dual->second;
        const auto& s = *single->second;
        if (s.mean_total_tokens() == 0.0) {
            out.warnings.push_back("model " + model + " has zero single-prompt tokens; no cost ratio");
            continue;
        }
        auto ratio = [](double num, double den) { return den == 0.0 ? std::nan("") : num / den; };
        out.ratios.push_back({model, d.mean_total_tokens() / s.mean_total_tokens(),
                              ratio(d.mean_prompt_tokens, s.mean_prompt_tokens),
                              ratio(d.mean_completion_tokens, s.mean_completion_tokens)});
    }
    return out;
}

std::vector<JudgeUsage> summarize_judge_costs(std::span<const Judgment> judgments) {
    std::map<std::string, JudgeUsage> by_judge;
    for (const auto& j : judgments) {
        auto& u = by_judge[j.judge_model];
        u.judge_model = j.judge_model;
        ++u.judgments;
        u.calls += j.usage.size();
        for (const auto& r : j.usage) {
            u.mean_prompt_tokens += static_cast<double>(r.prompt_tokens);
            u.mean_completion_tokens += static_cast<double>(r.completion_tokens);
        }
    }
    std::vector<JudgeUsage> out;
    for (auto& [_, u] : by_judge) {
        u.mean_prompt_tokens /= static_cast<double>(u.judgments);
        u.mean_completion_tokens /= static_cast<double>(u.judgments);
        out.push_back(std::move(u));
    }
    return out;
}

std::optional<CostParameters> observed_cost_parameters(const Dialogue& dialogue) {
    if (dialogue.method.strategy != Strategy::dual || dialogue.usage.empty() ||
        dialogue.usage.size() != dialogue.utterances.size())
        return std::nullopt;
    const auto& usage = dialogue.usage;
    double completion = 0.0;
    for (const auto& u : usage) completion += static_cast<double>(u.completion_tokens);
    CostParameters params;
    params.n = static_cast<double>(usage.size());
    params.a = completion / params.n;
    params.p = static_cast<double>(usage[0].prompt_tokens);
    if (usage.size() >= 2) {
        const double candidate_system =
            static_cast<double>(usage[1].prompt_tokens - usage[0].completion_tokens);
        params.p = std::max(0.0, (params.p + candidate_system) / 2.0);
    }
    return params;
}

std::vector<CostModelRow> cost_model(std::span<const Dialogue> dialogues) {
    struct Acc {
        std::size_t count = 0;
        double p = 0.0, a = 0.0, n = 0.0, measured = 0.0, predicted = 0.0;
    };
    std::map<GenerationMethod, Acc> acc;
    for (const auto& d : dialogues) {
        auto params = observed_cost_parameters(d);
        if (!params) continue;
        auto& s = acc[d.method];
        ++s.count;
        s.p += params->p;
        s.a += params->a;
        s.n += params->n;
        for (const auto& u : d.usage) s.measured += static_cast<double>(u.prompt_tokens);
        s.predicted += estimate_dual_tokens(*params);
    }
    std::vector<CostModelRow> out;
    for (const auto& [method, s] : acc) {
        const double k = static_cast<double>(s.count);
        out.push_back({method, s.count, {s.p / k, s.a / k, s.n / k}, s.measured / k, s.predicted / k});
    }
    return out;
}

}  // namespace dforge
