#include "dforge/store.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "dforge/errors.hpp"

namespace dforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string compute_manifest_hash(const json& config, const std::vector<std::string>& seed_ids) {
    json canonical{{"config", config}, {"seed_ids", seed_ids}};
    return sha256_hex(canonical.dump());
}

ExperimentManifest make_manifest(json config, std::vector<std::string> seed_ids) {
    ExperimentManifest m;
    m.hash = compute_manifest_hash(config, seed_ids);
    m.config = std::move(config);
    m.seed_ids = std::move(seed_ids);
    return m;
}

namespace {

template <typename Record>
std::vector<Record> read_jsonl(const fs::path& path) {
    std::vector<Record> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    const auto name = path.filename().string();
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Record record;
        try {
            json::parse(line).get_to(record);
            validate(record);
        } catch (const json::exception& e) {
            throw StoreParseError(name, line_no, e.what());
        } catch (const ValidationError& e) {
            throw StoreParseError(name, line_no, e.what());
        }
        if (!seen.insert(record.id).second)
            throw StoreParseError(name, line_no, "duplicate record id: " + record.id);
        out.push_back(std::move(record));
    }
    return out;
}

void index_ids(const fs::path& path, std::unordered_set<std::string>& ids) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            ids.insert(json::parse(line).at("id").get<std::string>());
        } catch (const json::exception& e) {
            throw StoreParseError(path.filename().string(), line_no, e.what());
        }
    }
}

}  // namespace

ExperimentData load_experiment(const fs::path& dir) {
    ExperimentData data;
    const auto manifest_path = dir / kManifestFile;
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path, std::ios::binary);
        ExperimentManifest m;
        try {
            auto j = json::parse(in);
            m.config = j.at("config");
            j.at("seed_ids").get_to(m.seed_ids);
            j.at("hash").get_to(m.hash);
        } catch (const json::exception& e) {
            throw StoreParseError(kManifestFile, 0, e.what());
        }
        if (compute_manifest_hash(m.config, m.seed_ids) != m.hash)
            throw StaleConfigError("manifest hash does not match its config and seed list");
        data.manifest = std::move(m);
    }
    data.seeds = read_jsonl<Seed>(dir / kSeedsFile);
    data.dialogues = read_jsonl<Dialogue>(dir / kDialoguesFile);
    data.judgments = read_jsonl<Judgment>(dir / kJudgmentsFile);
    return data;
}

ExperimentStore::ExperimentStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    index_ids(dir_ / kSeedsFile, seed_ids_);
    index_ids(dir_ / kDialoguesFile, dialogue_ids_);
    index_ids(dir_ / kJudgmentsFile, judgment_ids_);
}

void ExperimentStore::append_line(const char* file, std::unordered_set<std::string>& ids,
                                  const std::string& id, const json& record) {
    std::lock_guard lock(mutex_);
    if (ids.contains(id)) throw DuplicateIdError(id);
    const auto path = dir_ / file;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open " + path.string() + " for appending");
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
    ids.insert(id);
}

std::string ExperimentStore::append(const Seed& seed) {
    validate(seed);
    append_line(kSeedsFile, seed_ids_, seed.id, seed);
    return seed.id;
}

std::string ExperimentStore::append(const Dialogue& dialogue) {
    validate(dialogue);
    append_line(kDialoguesFile, dialogue_ids_, dialogue.id, dialogue);
    return dialogue.id;
}

std::string ExperimentStore::append(const Judgment& judgment) {
    validate(judgment);
    append_line(kJudgmentsFile, judgment_ids_, judgment.id, judgment);
    return judgment.id;
}

void ExperimentStore::write_manifest(const ExperimentManifest& manifest) {
    std::lock_guard lock(mutex_);
    json j{{"config", manifest.config}, {"seed_ids", manifest.seed_ids}, {"hash", manifest.hash}};
    const auto path = dir_ / kManifestFile;
    const auto tmp = dir_ / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
        if (!out) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

bool ExperimentStore::has_seed(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return seed_ids_.contains(id);
}

bool ExperimentStore::has_dialogue(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return dialogue_ids_.contains(id);
}

bool ExperimentStore::has_judgment(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return judgment_ids_.contains(id);
}

}  // namespace dforge
