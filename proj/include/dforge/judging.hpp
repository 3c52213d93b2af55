#pragma once

// Order-swapped pairwise AI-detection judging.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dforge/model.hpp"
#include "dforge/prompts.hpp"
#include "dforge/provider.hpp"

namespace dforge {

struct PairTask {
    std::string seed_id;
    std::reference_wrapper<const Dialogue> first;
    std::reference_wrapper<const Dialogue> second;
    std::string judge_model;

    std::string judgment_id() const;
};

// For each judge (in the given order): methods sorted by (strategy, model),
// every unordered pair i < j presented as (i, j) then (j, i).
// `dialogues` must share one seed and have pairwise distinct methods. When
// `expected` is non-empty the methods must be exactly that set; a missing
// one is reported by name.
std::vector<PairTask> schedule_pairs(std::span<const Dialogue> dialogues,
                                     const std::vector<std::string>& judge_models,
                                     const std::vector<GenerationMethod>& expected = {});

ChatRequest build_judge_prompt(std::string_view first_text, std::string_view second_text,
                               const std::string& judge_model, double temperature = 0.0,
                               const PromptSet& prompts = {});

struct Verdict {
    Choice choice = Choice::tie;
    std::string reason;
};

struct ParsedVerdict {
    std::optional<Verdict> verdict;  // empty iff status == invalid
    ParseStatus status = ParseStatus::invalid;
};

// Strict parse of {"Reason": ..., "Choice": ...}; on a syntax error, one
// retry after stripping code fences, backticks and quotes (-> recovered).
// Choice matches "1", "2" or "tie" ignoring case.
ParsedVerdict parse_verdict(std::string_view raw);

struct JudgePolicy {
    double temperature = 0.0;
    int max_reasks = 2;  // extra calls after an unparseable verdict
};

// Prompt, call, parse. An invalid verdict is re-asked up to
// policy.max_reasks times; a verdict that only parsed on a later attempt is
// marked recovered. Provider errors propagate.
Judgment judge_pair(Provider& provider, const PairTask& task, const JudgePolicy& policy = {},
                    const PromptSet& prompts = {});

enum class Outcome { win, loss, tie };

struct PairOutcome {
    GenerationMethod first;
    GenerationMethod second;
    Outcome first_outcome = Outcome::tie;
    Outcome second_outcome = Outcome::tie;
};

// The judge names the conversation it thinks is AI-generated, so that one
// loses. Invalid judgments have no outcome.
std::optional<PairOutcome> outcome_of(const Judgment& judgment);

}  // namespace dforge
