#pragma once

// Domain records shared by every pipeline stage, plus their JSON mapping.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dforge {

enum class Speaker { interviewer, candidate };
enum class Strategy { dual, single };
enum class Choice { first, second, tie };
enum class ParseStatus { ok, recovered, invalid };
enum class Termination { none, phrase, cap };

std::string_view to_string(Speaker s);
std::string_view to_string(Strategy s);
std::string_view to_string(Choice c);
std::string_view to_string(ParseStatus s);
std::string_view to_string(Termination t);

Speaker speaker_from_string(std::string_view s);
Strategy strategy_from_string(std::string_view s);
Choice choice_from_string(std::string_view s);
ParseStatus parse_status_from_string(std::string_view s);
Termination termination_from_string(std::string_view s);

struct Seed {
    std::string id;
    std::string summary;

    bool operator==(const Seed&) const = default;
};

struct Utterance {
    Speaker speaker = Speaker::interviewer;
    std::string text;

    bool operator==(const Utterance&) const = default;
};

struct UsageRecord {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total() const { return prompt_tokens + completion_tokens; }
    bool operator==(const UsageRecord&) const = default;
};

// A (strategy, model) pair; the unit a win rate is computed for.
// Ordering is (strategy, model), which fixes the canonical judging schedule.
struct GenerationMethod {
    Strategy strategy = Strategy::dual;
    std::string model;

    auto operator<=>(const GenerationMethod&) const = default;
    bool operator==(const GenerationMethod&) const = default;

    // "dual/gpt-4o"
    std::string key() const;
};

struct Dialogue {
    std::string id;
    std::string seed_id;
    GenerationMethod method;
    std::vector<Utterance> utterances;
    std::vector<UsageRecord> usage;
    bool normalized = false;
    Termination termination = Termination::none;

    bool operator==(const Dialogue&) const = default;
};

struct Judgment {
    std::string id;
    std::string seed_id;
    std::string judge_model;
    GenerationMethod first;
    GenerationMethod second;
    std::optional<Choice> choice;
    std::string reason;
    std::string raw_response;
    ParseStatus parse_status = ParseStatus::invalid;
    int attempts = 1;
    std::vector<UsageRecord> usage;

    bool valid() const { return parse_status != ParseStatus::invalid; }
    bool operator==(const Judgment&) const = default;
};

// Stable record keys; one dialogue per (seed, method), one judgment per
// (seed, judge, ordered method pair).
std::string dialogue_id(const std::string& seed_id, const GenerationMethod& method);
std::string judgment_id(const std::string& seed_id, const std::string& judge_model,
                        const GenerationMethod& first, const GenerationMethod& second);

// Throw ValidationError naming the offending field.
void validate(const Seed& seed);
void validate(const Utterance& utterance);
void validate(const UsageRecord& usage);
void validate(const Dialogue& dialogue);
void validate(const Judgment& judgment);

// "interviewer: ...\ncandidate: ..." with lowercase labels, one line per
// utterance start. This is the text a judge sees and lengths are measured on.
std::string render_transcript(const Dialogue& dialogue);

void to_json(nlohmann::json& j, const Seed& v);
void from_json(const nlohmann::json& j, Seed& v);
void to_json(nlohmann::json& j, const Utterance& v);
void from_json(const nlohmann::json& j, Utterance& v);
void to_json(nlohmann::json& j, const UsageRecord& v);
void from_json(const nlohmann::json& j, UsageRecord& v);
void to_json(nlohmann::json& j, const GenerationMethod& v);
void from_json(const nlohmann::json& j, GenerationMethod& v);
void to_json(nlohmann::json& j, const Dialogue& v);
void from_json(const nlohmann::json& j, Dialogue& v);
void to_json(nlohmann::json& j, const Judgment& v);
void from_json(const nlohmann::json& j, Judgment& v);

}  // namespace dforge
