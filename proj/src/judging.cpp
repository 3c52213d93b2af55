#include "dforge/judging.hpp"

#include <algorithm>
#include <set>

#include "dforge/errors.hpp"
#include "dforge/text.hpp"

namespace dforge {

using nlohmann::json;

std::string PairTask::judgment_id() const {
    return dforge::judgment_id(seed_id, judge_model, first.get().method, second.get().method);
}

std::vector<PairTask> schedule_pairs(std::span<const Dialogue> dialogues,
                                     const std::vector<std::string>& judge_models,
                                     const std::vector<GenerationMethod>& expected) {
    if (dialogues.size() < 2) throw SchedulingError("need at least two dialogues to compare");
    std::vector<const Dialogue*> sorted;
    for (const auto& d : dialogues) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(),
              [](const Dialogue* a, const Dialogue* b) { return a->method < b->method; });

    const auto& seed_id = sorted.front()->seed_id;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i]->seed_id != seed_id)
            throw SchedulingError("dialogues from different seeds: " + seed_id + " and " +
                                  sorted[i]->seed_id);
        if (i > 0 && sorted[i]->method == sorted[i - 1]->method)
            throw SchedulingError("seed " + seed_id + " has two dialogues for " +
                                  sorted[i]->method.key());
    }
    if (!expected.empty()) {
        std::set<GenerationMethod> have;
        for (const auto* d : sorted) have.insert(d->method);
        for (const auto& m : expected)
            if (!have.contains(m))
                throw SchedulingError("seed " + seed_id + " is missing a dialogue for " + m.key());
        if (have.size() != std::set<GenerationMethod>(expected.begin(), expected.end()).size())
            throw SchedulingError("seed " + seed_id + " has dialogues for unexpected methods");
    }

    std::vector<PairTask> tasks;
    tasks.reserve(judge_models.size() * sorted.size() * (sorted.size() - 1));
    for (const auto& judge : judge_models) {
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            for (std::size_t j = i + 1; j < sorted.size(); ++j) {
                tasks.push_back({seed_id, std::cref(*sorted[i]), std::cref(*sorted[j]), judge});
                tasks.push_back({seed_id, std::cref(*sorted[j]), std::cref(*sorted[i]), judge});
            }
        }
    }
    return tasks;
}

ChatRequest build_judge_prompt(std::string_view first_text, std::string_view second_text,
                               const std::string& judge_model, double temperature,
                               const PromptSet& prompts) {
    if (text::trim(first_text).empty()) throw ValidationError("dialog1", "empty conversation");
    if (text::trim(second_text).empty()) throw ValidationError("dialog2", "empty conversation");
    ChatRequest request;
    request.model = judge_model;
    request.temperature = temperature;
    request.tag = "judge";
    request.messages.push_back(
        {Role::user, text::interpolate(prompts.judge, {{"dialog1", std::string(first_text)},
                                                       {"dialog2", std::string(second_text)}})});
    return request;
}

namespace {

std::optional<Verdict> verdict_from(const json& j) {
    if (!j.is_object() || !j.contains("Reason") || !j.contains("Choice")) return std::nullopt;
    const auto& reason = j.at("Reason");
    const auto& choice = j.at("Choice");
    if (!reason.is_string()) return std::nullopt;
    std::string value;
    if (choice.is_string()) {
        value = text::to_lower(text::trim(choice.get<std::string>()));
    } else if (choice.is_number_integer()) {
        value = std::to_string(choice.get<long long>());
    } else {
        return std::nullopt;
    }
    Verdict v{Choice::tie, reason.get<std::string>()};
    if (value == "1") {
        v.choice = Choice::first;
    } else if (value == "2") {
        v.choice = Choice::second;
    } else if (value != "tie") {
        return std::nullopt;
    }
    return v;
}

std::string_view strip_wrapping(std::string_view s) {
    s = text::trim(s);
    if (s.starts_with("```")) {
        auto newline = s.find('\n');
        s = newline == std::string_view::npos ? s.substr(3) : s.substr(newline + 1);
        auto fence = s.rfind("```");
        if (fence != std::string_view::npos) s = s.substr(0, fence);
        s = text::trim(s);
    }
    auto wrapper = [](char c) { return c == '`' || c == '"' || c == '\''; };
    while (s.size() >= 2 && wrapper(s.front()) && wrapper(s.back())) {
        s.remove_prefix(1);
        s.remove_suffix(1);
        s = text::trim(s);
    }
    return s;
}

}  // namespace

ParsedVerdict parse_verdict(std::string_view raw) {
    json j = json::parse(raw, nullptr, false);
    ParseStatus status = ParseStatus::ok;
    if (j.is_discarded()) {
        j = json::parse(strip_wrapping(raw), nullptr, false);
        if (j.is_discarded()) return {};
        status = ParseStatus::recovered;
    }
    auto v = verdict_from(j);
    if (!v) return {};
    return {std::move(v), status};
}

Judgment judge_pair(Provider& provider, const PairTask& task, const JudgePolicy& policy,
                    const PromptSet& prompts) {
    const auto& first = task.first.get();
    const auto& second = task.second.get();
    if (first.seed_id != second.seed_id || first.seed_id != task.seed_id)
        throw ValidationError("seed_id", "pair dialogues come from different seeds");
    if (first.method == second.method) throw ValidationError("second", "pair uses one method twice");

    const auto request = build_judge_prompt(render_transcript(first), render_transcript(second),
                                            task.judge_model, policy.temperature, prompts);
    Judgment j;
    j.id = task.judgment_id();
    j.seed_id = task.seed_id;
    j.judge_model = task.judge_model;
    j.first = first.method;
    j.second = second.method;

    const int max_attempts = 1 + std::max(0, policy.max_reasks);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto response = provider.complete(request);
        j.usage.push_back(response.usage);
        j.raw_response = std::move(response.text);
        j.attempts = attempt;
        auto parsed = parse_verdict(j.raw_response);
        if (parsed.verdict) {
            j.choice = parsed.verdict->choice;
            j.reason = std::move(parsed.verdict->reason);
            j.parse_status = attempt > 1 ? ParseStatus::recovered : parsed.status;
            return j;
        }
    }
    j.choice.reset();
    j.reason.clear();
    j.parse_status = ParseStatus::invalid;
    return j;
}

std::optional<PairOutcome> outcome_of(const Judgment& judgment) {
    if (!judgment.valid() || !judgment.choice) return std::nullopt;
    PairOutcome out{judgment.first, judgment.second, Outcome::tie, Outcome::tie};
    switch (*judgment.choice) {
        case Choice::first:
            out.first_outcome = Outcome::loss;
            out.second_outcome = Outcome::win;
            break;
        case Choice::second:
            out.first_outcome = Outcome::win;
            out.second_outcome = Outcome::loss;
            break;
        case Choice::tie:
            break;
    }
    return out;
}

}  // namespace dforge
