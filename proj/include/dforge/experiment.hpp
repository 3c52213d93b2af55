#pragma once

// Experiment configuration and the pipeline stages behind the CLI.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dforge/errors.hpp"
#include "dforge/metrics.hpp"
#include "dforge/prompts.hpp"
#include "dforge/provider.hpp"
#include "dforge/store.hpp"

namespace dforge {

inline constexpr const char* kApiKeyEnv = "DIALOGUE_FORGE_API_KEY";

struct ProviderConfig {
    Endpoint endpoint{"https://api.openai.com/v1", ""};
    std::map<std::string, Endpoint> model_endpoints;
    RetryPolicy retry;
    std::size_t concurrency = 4;
    std::chrono::seconds timeout{120};
};

struct ExperimentConfig {
    std::filesystem::path seed_source;
    std::vector<std::string> generation_models;
    std::vector<std::string> judge_models;
    double generation_temperature = 1.0;
    double judge_temperature = 0.0;
    std::size_t max_utterances = 30;
    int judge_reasks = 2;
    std::string summarization_model;
    ProviderConfig provider;
    PromptSet prompts;
    std::filesystem::path report_dir = "reports";  // relative to the experiment dir
    IntraGroup intra_group = IntraGroup::include;

    // Throws ConfigError.
    void validate() const;

    // Settings that shape stored dialogues and judgments. Judge models,
    // endpoints, retries and concurrency are left out so new judges can be
    // run over frozen dialogues.
    nlohmann::json manifest_snapshot() const;
};

// Replaces ${NAME} with the environment variable NAME (empty if unset).
std::string expand_env(std::string_view value);

// Relative paths inside the config resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

std::unique_ptr<Provider> make_http_provider(const ExperimentConfig& config);

struct RunOptions {
    bool resume = false;
};

struct CommandResult {
    std::size_t created = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failures;

    int exit_code() const { return failures.empty() ? 0 : 1; }
};

// Reads seeds from config.seed_source (JSONL or a JSON array of
// {"id", "summary"} or {"id", "history"} objects; histories are summarized
// with config.summarization_model) and writes the manifest.
CommandResult cmd_seeds(const ExperimentConfig& config, ExperimentStore& store, Provider* provider,
                        const RunOptions& options);

// One normalized dialogue per seed x strategy x generation model. Existing
// dialogues are skipped under --resume.
CommandResult cmd_generate(const ExperimentConfig& config, ExperimentStore& store, Provider& provider,
                           const RunOptions& options);

// The full order-swapped schedule for every seed and judge.
CommandResult cmd_judge(const ExperimentConfig& config, ExperimentStore& store, Provider& provider,
                        const RunOptions& options);

struct ReportResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

enum class ReportPart { all, cost, stats };

// Throws NothingToReportError when there are no judgments (for `all` and
// `stats`) or no dialogues (for `cost`).
ReportResult cmd_report(const ExperimentConfig& config, const std::filesystem::path& experiment_dir,
                        ReportPart part = ReportPart::all);

class NothingToReportError : public Error {
public:
    using Error::Error;
};

}  // namespace dforge
