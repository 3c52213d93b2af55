#pragma once

// Append-only JSONL persistence for one experiment directory:
//   manifest.json, seeds.jsonl, dialogues.jsonl, judgments.jsonl

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dforge/model.hpp"

namespace dforge {

struct ExperimentManifest {
    nlohmann::json config;  // snapshot of the settings that shape generated data
    std::vector<std::string> seed_ids;
    std::string hash;

    bool operator==(const ExperimentManifest&) const = default;
};

std::string sha256_hex(std::string_view data);

// Hash of the canonical JSON {config, seed_ids}; key order is fixed by the
// JSON object's sorted map so the result is deterministic.
std::string compute_manifest_hash(const nlohmann::json& config,
                                  const std::vector<std::string>& seed_ids);
ExperimentManifest make_manifest(nlohmann::json config, std::vector<std::string> seed_ids);

struct ExperimentData {
    std::optional<ExperimentManifest> manifest;
    std::vector<Seed> seeds;
    std::vector<Dialogue> dialogues;
    std::vector<Judgment> judgments;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSeedsFile = "seeds.jsonl";
inline constexpr const char* kDialoguesFile = "dialogues.jsonl";
inline constexpr const char* kJudgmentsFile = "judgments.jsonl";

// Reads every record file under `dir`. Missing files read as empty.
// Throws StoreParseError (with line number) on a malformed line and
// StaleConfigError when the manifest hash does not match its contents.
ExperimentData load_experiment(const std::filesystem::path& dir);

class ExperimentStore {
public:
    // Creates `dir` if needed and indexes existing record ids.
    explicit ExperimentStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    std::string append(const Seed& seed);
    std::string append(const Dialogue& dialogue);
    std::string append(const Judgment& judgment);

    void write_manifest(const ExperimentManifest& manifest);

    bool has_seed(const std::string& id) const;
    bool has_dialogue(const std::string& id) const;
    bool has_judgment(const std::string& id) const;

    ExperimentData load() const { return load_experiment(dir_); }

private:
    void append_line(const char* file, std::unordered_set<std::string>& ids,
                     const std::string& id, const nlohmann::json& record);

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::unordered_set<std::string> seed_ids_;
    std::unordered_set<std::string> dialogue_ids_;
    std::unordered_set<std::string> judgment_ids_;
};

}  // namespace dforge
