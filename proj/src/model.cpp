#include "dforge/model.hpp"

#include <algorithm>

#include "dforge/errors.hpp"

namespace dforge {

using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
               std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw ValidationError(std::string(what), "unknown value '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Speaker>, 2> kSpeakers{{
    {"interviewer", Speaker::interviewer},
    {"candidate", Speaker::candidate},
}};
constexpr std::array<std::pair<std::string_view, Strategy>, 2> kStrategies{{
    {"dual", Strategy::dual},
    {"single", Strategy::single},
}};
constexpr std::array<std::pair<std::string_view, Choice>, 3> kChoices{{
    {"1", Choice::first},
    {"2", Choice::second},
    {"Tie", Choice::tie},
}};
constexpr std::array<std::pair<std::string_view, ParseStatus>, 3> kStatuses{{
    {"ok", ParseStatus::ok},
    {"recovered", ParseStatus::recovered},
    {"invalid", ParseStatus::invalid},
}};
constexpr std::array<std::pair<std::string_view, Termination>, 3> kTerminations{{
    {"none", Termination::none},
    {"phrase", Termination::phrase},
    {"cap", Termination::cap},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum e, const std::array<std::pair<std::string_view, Enum>, N>& table) {
    for (const auto& [name, value] : table) {
        if (value == e) return name;
    }
    return "?";
}

bool has_blank_line(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
            return true;
        start = end + 1;
    }
    return false;
}

}  // namespace

std::string_view to_string(Speaker s) { return name_of(s, kSpeakers); }
std::string_view to_string(Strategy s) { return name_of(s, kStrategies); }
std::string_view to_string(Choice c) { return name_of(c, kChoices); }
std::string_view to_string(ParseStatus s) { return name_of(s, kStatuses); }
std::string_view to_string(Termination t) { return name_of(t, kTerminations); }

Speaker speaker_from_string(std::string_view s) { return enum_from(s, kSpeakers, "speaker"); }
Strategy strategy_from_string(std::string_view s) { return enum_from(s, kStrategies, "strategy"); }
Choice choice_from_string(std::string_view s) { return enum_from(s, kChoices, "choice"); }
ParseStatus parse_status_from_string(std::string_view s) {
    return enum_from(s, kStatuses, "parse_status");
}
Termination termination_from_string(std::string_view s) {
    return enum_from(s, kTerminations, "termination");
}

std::string GenerationMethod::key() const { return std::string(to_string(strategy)) + "/" + model; }

std::string dialogue_id(const std::string& seed_id, const GenerationMethod& method) {
    return seed_id + "/" + method.key();
}

std::string judgment_id(const std::string& seed_id, const std::string& judge_model,
                        const GenerationMethod& first, const GenerationMethod& second) {
    return seed_id + "/" + judge_model + "/" + first.key() + "|" + second.key();
}

void validate(const Seed& seed) {
    if (seed.id.empty()) throw ValidationError("id", "seed id is empty");
    if (seed.summary.empty()) throw ValidationError("summary", "seed summary is empty");
}

void validate(const Utterance& utterance) {
    if (utterance.text.empty()) throw ValidationError("text", "utterance text is empty");
}

void validate(const UsageRecord& usage) {
    if (usage.prompt_tokens < 0) throw ValidationError("prompt_tokens", "negative count");
    if (usage.completion_tokens < 0) throw ValidationError("completion_tokens", "negative count");
}

void validate(const Dialogue& d) {
    if (d.id.empty()) throw ValidationError("id", "dialogue id is empty");
    if (d.seed_id.empty()) throw ValidationError("seed_id", "dialogue seed_id is empty");
    if (d.method.model.empty()) throw ValidationError("method.model", "model is empty");
    if (d.utterances.size() < 2)
        throw ValidationError("utterances", "a dialogue needs at least 2 utterances, got " +
                                                std::to_string(d.utterances.size()));
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        const auto& u = d.utterances[i];
        if (u.text.empty())
            throw ValidationError("utterances[" + std::to_string(i) + "].text", "empty text");
        if (d.method.strategy == Strategy::dual) {
            auto expected = i % 2 == 0 ? Speaker::interviewer : Speaker::candidate;
            if (u.speaker != expected)
                throw ValidationError("utterances[" + std::to_string(i) + "].speaker",
                                      "dual dialogues alternate starting with the interviewer");
        }
        if (d.normalized && has_blank_line(u.text))
            throw ValidationError("utterances[" + std::to_string(i) + "].text",
                                  "normalized text contains a blank line");
    }
    for (const auto& u : d.usage) validate(u);
}

void validate(const Judgment& j) {
    if (j.id.empty()) throw ValidationError("id", "judgment id is empty");
    if (j.seed_id.empty()) throw ValidationError("seed_id", "judgment seed_id is empty");
    if (j.judge_model.empty()) throw ValidationError("judge_model", "judge model is empty");
    if (j.first == j.second) throw ValidationError("second", "first and second methods are equal");
    if (j.choice.has_value() != j.valid())
        throw ValidationError("choice", "choice must be present exactly when parse_status is not invalid");
    if (j.attempts < 1) throw ValidationError("attempts", "at least one attempt");
    for (const auto& u : j.usage) validate(u);
}

std::string render_transcript(const Dialogue& dialogue) {
    std::string out;
    for (const auto& u : dialogue.utterances) {
        if (!out.empty()) out += '\n';
        out += to_string(u.speaker);
        out += ": ";
        out += u.text;
    }
    return out;
}

void to_json(json& j, const Seed& v) { j = json{{"id", v.id}, {"summary", v.summary}}; }

void from_json(const json& j, Seed& v) {
    j.at("id").get_to(v.id);
    j.at("summary").get_to(v.summary);
}

void to_json(json& j, const Utterance& v) {
    j = json{{"speaker", to_string(v.speaker)}, {"text", v.text}};
}

void from_json(const json& j, Utterance& v) {
    v.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    j.at("text").get_to(v.text);
}

void to_json(json& j, const UsageRecord& v) {
    j = json{{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}};
}

void from_json(const json& j, UsageRecord& v) {
    j.at("prompt_tokens").get_to(v.prompt_tokens);
    j.at("completion_tokens").get_to(v.completion_tokens);
}

void to_json(json& j, const GenerationMethod& v) {
    j = json{{"strategy", to_string(v.strategy)}, {"model", v.model}};
}

void from_json(const json& j, GenerationMethod& v) {
    v.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    j.at("model").get_to(v.model);
}

void to_json(json& j, const Dialogue& v) {
    j = json{{"id", v.id},
             {"seed_id", v.seed_id},
             {"method", v.method},
             {"utterances", v.utterances},
             {"usage", v.usage},
             {"normalized", v.normalized},
             {"termination", to_string(v.termination)}};
}

void from_json(const json& j, Dialogue& v) {
    j.at("id").get_to(v.id);
    j.at("seed_id").get_to(v.seed_id);
    j.at("method").get_to(v.method);
    j.at("utterances").get_to(v.utterances);
    j.at("usage").get_to(v.usage);
    j.at("normalized").get_to(v.normalized);
    v.termination = termination_from_string(j.value("termination", std::string("none")));
}

void to_json(json& j, const Judgment& v) {
    j = json{{"id", v.id},
             {"seed_id", v.seed_id},
             {"judge_model", v.judge_model},
             {"first", v.first},
             {"second", v.second},
             {"choice", v.choice ? json(to_string(*v.choice)) : json(nullptr)},
             {"reason", v.reason},
             {"raw_response", v.raw_response},
             {"parse_status", to_string(v.parse_status)},
             {"attempts", v.attempts},
             {"usage", v.usage}};
}

void from_json(const json& j, Judgment& v) {
    j.at("id").get_to(v.id);
    j.at("seed_id").get_to(v.seed_id);
    j.at("judge_model").get_to(v.judge_model);
    j.at("first").get_to(v.first);
    j.at("second").get_to(v.second);
    const auto& c = j.at("choice");
    v.choice = c.is_null() ? std::nullopt : std::optional(choice_from_string(c.get<std::string>()));
    j.at("reason").get_to(v.reason);
    j.at("raw_response").get_to(v.raw_response);
    v.parse_status = parse_status_from_string(j.at("parse_status").get<std::string>());
    v.attempts = j.value("attempts", 1);
    v.usage = j.value("usage", std::vector<UsageRecord>{});
}

}  // namespace dforge
