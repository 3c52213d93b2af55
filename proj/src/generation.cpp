#include "dforge/generation.hpp"

#include <cctype>

#include "dforge/errors.hpp"
#include "dforge/text.hpp"

namespace dforge {

void AgentConfig::validate(std::string_view termination_phrase) const {
    if (role == Speaker::candidate &&
        system_prompt_template.find("{seed}") == std::string::npos)
        throw ValidationError("candidate_system", "template lacks the {seed} placeholder");
    if (role == Speaker::interviewer &&
        system_prompt_template.find(termination_phrase) == std::string::npos)
        throw ValidationError("interviewer_system", "template does not state the termination phrase");
}

std::string AgentConfig::system_prompt(const Seed& seed) const {
    return text::interpolate(system_prompt_template, {{"seed", seed.summary}});
}

AgentConfig interviewer_agent(const PromptSet& prompts) {
    return {Speaker::interviewer, prompts.interviewer_system, 8};
}

AgentConfig candidate_agent(const PromptSet& prompts) {
    return {Speaker::candidate, prompts.candidate_system, 8};
}

void GenerationPolicy::validate() const {
    if (max_utterances < 4) throw ValidationError("max_utterances", "must be at least 4");
    if (termination_phrase.empty()) throw ValidationError("termination_phrase", "empty");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ValidationError("temperature", "must lie in [0, 2]");
}

Dialogue generate_dual(Provider& provider, const Seed& seed, const std::string& interviewer_model,
                       const std::string& candidate_model, const GenerationPolicy& policy,
                       const PromptSet& prompts) {
    dforge::validate(seed);
    policy.validate();
    const auto interviewer = interviewer_agent(prompts);
    const auto candidate = candidate_agent(prompts);
    interviewer.validate(policy.termination_phrase);
    candidate.validate(policy.termination_phrase);

    Dialogue d;
    d.seed_id = seed.id;
    d.method = {Strategy::dual, interviewer_model == candidate_model
                                    ? interviewer_model
                                    : interviewer_model + "+" + candidate_model};
    d.id = dialogue_id(seed.id, d.method);

    const std::string system_prompts[2] = {interviewer.system_prompt(seed),
                                           candidate.system_prompt(seed)};
    while (d.utterances.size() < policy.max_utterances) {
        const std::size_t turn = d.utterances.size() + 1;
        const auto speaker = turn % 2 == 1 ? Speaker::interviewer : Speaker::candidate;
        const int agent = speaker == Speaker::interviewer ? 0 : 1;

        ChatRequest request;
        request.model = agent == 0 ? interviewer_model : candidate_model;
        request.temperature = policy.temperature;
        request.tag = std::string(to_string(speaker));
        request.messages.push_back({Role::system, system_prompts[agent]});
        for (const auto& u : d.utterances)
            request.messages.push_back({u.speaker == speaker ? Role::assistant : Role::user, u.text});

        ChatResponse response;
        try {
            response = provider.complete(request);
        } catch (const Error& e) {
            throw GenerationError(turn, std::string("provider failure: ") + e.what());
        }
        auto utterance = std::string(text::trim(response.text));
        if (utterance.empty()) throw GenerationError(turn, "empty model output");

        const bool done = speaker == Speaker::interviewer &&
                          utterance.find(policy.termination_phrase) != std::string::npos;
        d.utterances.push_back({speaker, std::move(utterance)});
        d.usage.push_back(response.usage);
        if (done) {
            d.termination = Termination::phrase;
            return d;
        }
    }
    d.termination = Termination::cap;
    return d;
}

Dialogue generate_single(Provider& provider, const Seed& seed, const std::string& model,
                         const GenerationPolicy& policy, const PromptSet& prompts) {
    dforge::validate(seed);
    policy.validate();
    ChatRequest request;
    request.model = model;
    request.temperature = policy.temperature;
    request.tag = "single";
    request.messages.push_back({Role::system, prompts.single_system});
    request.messages.push_back({Role::user, text::interpolate(prompts.single_user, {{"seed", seed.summary}})});

    ChatResponse response;
    try {
        response = provider.complete(request);
    } catch (const Error& e) {
        throw GenerationError(1, std::string("provider failure: ") + e.what());
    }

    Dialogue d;
    d.seed_id = seed.id;
    d.method = {Strategy::single, model};
    d.id = dialogue_id(seed.id, d.method);
    d.utterances = parse_transcript(response.text);
    d.usage.push_back(response.usage);
    return d;
}

namespace {

bool is_emphasis(char c) { return c == '*' || c == '_'; }

struct LabelMatch {
    std::string label;  // lowercased
    std::string_view rest;
};

// A label line looks like `[ws][*_]word[*_]:[*_] rest`, with `word` a single
// alphabetic token.
std::optional<LabelMatch> match_label(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    while (i < line.size() && is_emphasis(line[i])) ++i;
    const std::size_t word_start = i;
    while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i]))) ++i;
    if (i == word_start) return std::nullopt;
    const auto word = line.substr(word_start, i - word_start);
    while (i < line.size() && is_emphasis(line[i])) ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    ++i;
    while (i < line.size() && is_emphasis(line[i])) ++i;
    return LabelMatch{text::to_lower(word), line.substr(i)};
}

}  // namespace

std::vector<Utterance> parse_transcript(std::string_view input) {
    std::vector<Utterance> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    const std::string raw(input);
    while (start <= input.size()) {
        auto end = input.find('\n', start);
        if (end == std::string_view::npos) end = input.size();
        auto line = input.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        start = end + 1;

        if (auto m = match_label(line)) {
            Speaker speaker;
            if (m->label == "interviewer") {
                speaker = Speaker::interviewer;
            } else if (m->label == "candidate") {
                speaker = Speaker::candidate;
            } else {
                throw TranscriptParseError("unknown speaker label '" + m->label + "' on line " +
                                               std::to_string(line_no),
                                           raw);
            }
            if (!out.empty() && text::trim(out.back().text).empty())
                throw TranscriptParseError("empty utterance before line " + std::to_string(line_no), raw);
            out.push_back({speaker, std::string(text::trim(m->rest))});
        } else if (!out.empty()) {
            out.back().text += '\n';
            out.back().text += line;
        }
        if (end == input.size()) break;
    }
    if (out.empty()) throw TranscriptParseError("transcript has no speaker labels", raw);
    for (auto& u : out) {
        u.text = std::string(text::trim(u.text));
        if (u.text.empty()) throw TranscriptParseError("transcript ends with an empty utterance", raw);
    }
    return out;
}

std::string normalize_text(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    std::size_t i = 0;
    while (i < input.size()) {
        if (input[i] != '\n') {
            out += input[i++];
            continue;
        }
        while (!out.empty() && out.back() == '\r') out.pop_back();
        // Swallow any following whitespace-only lines.
        std::size_t j = i + 1;
        std::size_t resume = j;
        while (j < input.size() &&
               std::isspace(static_cast<unsigned char>(input[j]))) {
            if (input[j] == '\n') resume = j + 1;
            ++j;
        }
        out += '\n';
        i = resume;
    }
    return std::string(text::trim(out));
}

Dialogue normalize(Dialogue dialogue) {
    for (auto& u : dialogue.utterances) u.text = normalize_text(u.text);
    dialogue.normalized = true;
    return dialogue;
}

Seed summarize_seed(Provider& provider, const std::string& seed_id, std::string_view raw_history,
                    const std::string& model, const GenerationPolicy& policy,
                    const PromptSet& prompts) {
    if (text::trim(raw_history).empty())
        throw ValidationError("raw_history", "raw job history is empty");
    ChatRequest request;
    request.model = model;
    request.temperature = policy.temperature;
    request.tag = "summarize";
    request.messages.push_back(
        {Role::user, text::interpolate(prompts.summarize, {{"history", std::string(raw_history)}})});
    auto response = provider.complete(request);
    Seed seed{seed_id, std::string(text::trim(response.text))};
    dforge::validate(seed);
    return seed;
}

}  // namespace dforge
