#pragma once

// Token accounting and the closed-form cost of two-agent generation.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dforge/model.hpp"

namespace dforge {

// p: mean system-prompt tokens, a: mean utterance tokens, n: utterances.
struct CostParameters {
    double p = 0.0;
    double a = 0.0;
    double n = 1.0;

    void validate() const;
};

// Every call re-sends the system prompt plus all earlier utterances:
// n*p + (n-1)*n/2 * a.
double estimate_dual_tokens(const CostParameters& params);
std::uint64_t estimate_dual_tokens(std::uint64_t p, std::uint64_t a, std::uint64_t n);

// The same quantity accumulated call by call: sum over i=1..n of p + (i-1)*a.
// The real-valued form needs an integral n.
double simulate_dual_tokens(const CostParameters& params);
std::uint64_t simulate_dual_tokens(std::uint64_t p, std::uint64_t a, std::uint64_t n);

struct MethodCost {
    GenerationMethod method;
    std::size_t dialogues = 0;
    double mean_prompt_tokens = 0.0;
    double mean_completion_tokens = 0.0;

    double mean_total_tokens() const { return mean_prompt_tokens + mean_completion_tokens; }
};

struct CostRatio {
    std::string model;
    double total = 0.0;       // dual / single, prompt + completion
    double prompt = 0.0;      // dual / single, prompt only
    double completion = 0.0;  // dual / single, completion only
};

struct CostSummary {
    std::vector<MethodCost> methods;  // sorted by method
    std::vector<CostRatio> ratios;    // one per model having both strategies
    std::vector<std::string> warnings;
};

// Per-method means of per-dialogue usage sums, and dual/single ratios of
// those means per model.
CostSummary summarize_costs(std::span<const Dialogue> dialogues);

// Cost parameters read off one dual dialogue's usage: a is the mean
// completion size; p averages the first interviewer call's prompt and the
// first candidate call's prompt minus the utterance it was shown.
std::optional<CostParameters> observed_cost_parameters(const Dialogue& dialogue);

// Judge calls are accounted separately from generation.
struct JudgeUsage {
    std::string judge_model;
    std::size_t judgments = 0;
    std::size_t calls = 0;
    double mean_prompt_tokens = 0.0;      // per judgment, re-asks included
    double mean_completion_tokens = 0.0;
};

std::vector<JudgeUsage> summarize_judge_costs(std::span<const Judgment> judgments);

struct CostModelRow {
    GenerationMethod method;
    std::size_t dialogues = 0;
    CostParameters mean_params;
    double measured_prompt_tokens = 0.0;   // mean per dialogue
    double predicted_prompt_tokens = 0.0;  // mean of the closed form per dialogue
};

std::vector<CostModelRow> cost_model(std::span<const Dialogue> dialogues);

}  // namespace dforge
