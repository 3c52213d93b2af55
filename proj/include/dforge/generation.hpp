#pragma once

// Dialogue generation: the two-agent (dual-prompt) loop, the one-shot
// (single-prompt) transcript, transcript parsing and normalization.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dforge/model.hpp"
#include "dforge/prompts.hpp"
#include "dforge/provider.hpp"

namespace dforge {

struct AgentConfig {
    Speaker role = Speaker::interviewer;
    std::string system_prompt_template;
    std::size_t expected_turns = 8;

    // Candidate templates need {seed}; interviewer templates must spell out
    // the termination phrase.
    void validate(std::string_view termination_phrase) const;
    std::string system_prompt(const Seed& seed) const;
};

AgentConfig interviewer_agent(const PromptSet& prompts);
AgentConfig candidate_agent(const PromptSet& prompts);

struct GenerationPolicy {
    double temperature = 1.0;
    std::size_t max_utterances = 30;
    std::string termination_phrase{kTerminationPhrase};

    void validate() const;
};

// Interviewer and candidate take turns, interviewer first. Each call sends
// the agent's system prompt followed by the whole history, with the agent's
// own turns as assistant messages and the other side's as user messages.
// Stops once an interviewer utterance contains the termination phrase, or at
// policy.max_utterances. Throws GenerationError (1-based turn) when a call
// fails or returns nothing; nothing partial is returned.
Dialogue generate_dual(Provider& provider, const Seed& seed, const std::string& interviewer_model,
                       const std::string& candidate_model, const GenerationPolicy& policy,
                       const PromptSet& prompts = {});

// One call producing a whole labeled transcript.
Dialogue generate_single(Provider& provider, const Seed& seed, const std::string& model,
                         const GenerationPolicy& policy, const PromptSet& prompts = {});

// Splits on lines that start with "interviewer:" or "candidate:" (any case,
// optional leading whitespace and markdown emphasis). Other lines continue
// the current utterance; text before the first label is dropped.
// Throws TranscriptParseError on no labels, an unknown label, or an empty turn.
std::vector<Utterance> parse_transcript(std::string_view text);

// Collapses blank-line runs to a single newline and trims each utterance.
Dialogue normalize(Dialogue dialogue);
std::string normalize_text(std::string_view text);

Seed summarize_seed(Provider& provider, const std::string& seed_id, std::string_view raw_history,
                    const std::string& model, const GenerationPolicy& policy,
                    const PromptSet& prompts = {});

}  // namespace dforge
