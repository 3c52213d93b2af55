#include "dforge/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <thread>

#include "dforge/costing.hpp"
#include "dforge/generation.hpp"
#include "dforge/judging.hpp"
#include "dforge/report.hpp"
#include "dforge/stats.hpp"

namespace dforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string expand_env(std::string_view value) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        auto open = value.find("${", pos);
        if (open == std::string_view::npos) break;
        auto close = value.find('}', open + 2);
        if (close == std::string_view::npos) break;
        out.append(value.substr(pos, open - pos));
        const std::string name(value.substr(open + 2, close - open - 2));
        if (const char* env = std::getenv(name.c_str())) {
            out += env;
        } else {
            spdlog::debug("environment variable {} is not set", name);
        }
        pos = close + 1;
    }
    out.append(value.substr(pos));
    return out;
}

void ExperimentConfig::validate() const {
    if (generation_models.empty()) throw ConfigError("config lists no generation models");
    if (judge_models.empty()) throw ConfigError("config lists no judge models");
    if (std::set(generation_models.begin(), generation_models.end()).size() != generation_models.size())
        throw ConfigError("generation models are listed twice");
    if (std::set(judge_models.begin(), judge_models.end()).size() != judge_models.size())
        throw ConfigError("judge models are listed twice");
    for (const auto& m : generation_models)
        if (m.empty() || m.find('/') != std::string::npos)
            throw ConfigError("generation model names must be non-empty and free of '/': '" + m + "'");
    if (!(generation_temperature >= 0.0 && generation_temperature <= 2.0))
        throw ConfigError("generation_temperature must lie in [0, 2]");
    if (!(judge_temperature >= 0.0 && judge_temperature <= 2.0))
        throw ConfigError("judge_temperature must lie in [0, 2]");
    if (max_utterances < 4) throw ConfigError("max_utterances must be at least 4");
    if (judge_reasks < 0) throw ConfigError("judge_reasks must be >= 0");
    if (provider.concurrency < 1) throw ConfigError("concurrency must be >= 1");
    if (provider.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
}

json ExperimentConfig::manifest_snapshot() const {
    return json{
        {"generation_models", generation_models},
        {"generation_temperature", generation_temperature},
        {"judge_temperature", judge_temperature},
        {"max_utterances", max_utterances},
        {"judge_reasks", judge_reasks},
        {"termination_phrase", std::string(kTerminationPhrase)},
        {"prompts",
         {{"interviewer_system", sha256_hex(prompts.interviewer_system)},
          {"candidate_system", sha256_hex(prompts.candidate_system)},
          {"single_system", sha256_hex(prompts.single_system)},
          {"single_user", sha256_hex(prompts.single_user)},
          {"judge", sha256_hex(prompts.judge)}}},
    };
}

namespace {

json expand_tree(const json& j) {
    if (j.is_string()) return expand_env(j.get<std::string>());
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto& [key, value] : out.items()) value = expand_tree(value);
        return out;
    }
    return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

Endpoint parse_endpoint(const json& j, Endpoint fallback) {
    reject_unknown(j, {"base_url", "api_key"}, "endpoint");
    if (j.contains("base_url")) fallback.base_url = j.at("base_url").get<std::string>();
    if (j.contains("api_key")) fallback.api_key = j.at("api_key").get<std::string>();
    return fallback;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_config(const json& raw, const fs::path& base_dir) {
    if (!raw.is_object()) throw ConfigError("config must be a JSON object");
    const json j = expand_tree(raw);
    reject_unknown(j,
                   {"seed_source", "generation_models", "judge_models", "generation_temperature",
                    "judge_temperature", "max_utterances", "judge_reasks", "summarization_model",
                    "provider", "retry", "concurrency", "timeout_s", "prompts", "report_dir",
                    "intra_group"},
                   "config");
    ExperimentConfig c;
    try {
        if (j.contains("seed_source")) c.seed_source = resolve(base_dir, j.at("seed_source").get<std::string>());
        c.generation_models = j.value("generation_models", c.generation_models);
        c.judge_models = j.value("judge_models", c.judge_models);
        c.generation_temperature = j.value("generation_temperature", c.generation_temperature);
        c.judge_temperature = j.value("judge_temperature", c.judge_temperature);
        c.max_utterances = j.value("max_utterances", c.max_utterances);
        c.judge_reasks = j.value("judge_reasks", c.judge_reasks);
        c.summarization_model = j.value("summarization_model", c.summarization_model);
        c.provider.concurrency = j.value("concurrency", c.provider.concurrency);
        c.provider.timeout = std::chrono::seconds(j.value("timeout_s", c.provider.timeout.count()));
        if (j.contains("retry")) {
            const auto& r = j.at("retry");
            reject_unknown(r, {"max_attempts", "initial_delay_ms", "factor"}, "retry");
            c.provider.retry.max_attempts = r.value("max_attempts", c.provider.retry.max_attempts);
            c.provider.retry.initial_delay =
                std::chrono::milliseconds(r.value("initial_delay_ms", c.provider.retry.initial_delay.count()));
            c.provider.retry.factor = r.value("factor", c.provider.retry.factor);
        }
        if (j.contains("provider")) {
            const auto& p = j.at("provider");
            reject_unknown(p, {"base_url", "api_key", "models"}, "provider");
            c.provider.endpoint = parse_endpoint(
                json{{"base_url", p.value("base_url", c.provider.endpoint.base_url)},
                     {"api_key", p.value("api_key", c.provider.endpoint.api_key)}},
                c.provider.endpoint);
            if (p.contains("models"))
                for (const auto& [model, ep] : p.at("models").items())
                    c.provider.model_endpoints[model] = parse_endpoint(ep, c.provider.endpoint);
        }
        if (j.contains("prompts")) {
            const auto& p = j.at("prompts");
            reject_unknown(p, {"interviewer_system", "candidate_system", "single_system", "single_user",
                               "judge", "summarize"},
                           "prompts");
            auto load = [&](const char* key, std::string& slot) {
                if (p.contains(key)) slot = read_template(resolve(base_dir, p.at(key).get<std::string>()));
            };
            load("interviewer_system", c.prompts.interviewer_system);
            load("candidate_system", c.prompts.candidate_system);
            load("single_system", c.prompts.single_system);
            load("single_user", c.prompts.single_user);
            load("judge", c.prompts.judge);
            load("summarize", c.prompts.summarize);
        }
        if (j.contains("report_dir")) c.report_dir = j.at("report_dir").get<std::string>();
        if (j.contains("intra_group")) {
            const auto mode = j.at("intra_group").get<std::string>();
            if (mode == "include") {
                c.intra_group = IntraGroup::include;
            } else if (mode == "exclude") {
                c.intra_group = IntraGroup::exclude;
            } else {
                throw ConfigError("intra_group must be 'include' or 'exclude'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    if (c.provider.endpoint.api_key.empty()) {
        if (const char* env = std::getenv(kApiKeyEnv)) c.provider.endpoint.api_key = env;
    }
    for (auto& [_, ep] : c.provider.model_endpoints)
        if (ep.api_key.empty()) ep.api_key = c.provider.endpoint.api_key;
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

std::unique_ptr<Provider> make_http_provider(const ExperimentConfig& config) {
    HttpProviderOptions o;
    o.endpoint = config.provider.endpoint;
    o.model_endpoints = config.provider.model_endpoints;
    o.retry = config.provider.retry;
    o.max_concurrency = config.provider.concurrency;
    o.timeout = config.provider.timeout;
    return std::make_unique<OpenAIProvider>(std::move(o));
}

namespace {

// Runs `work(i)` for i in [0, count) with up to `workers` threads per batch,
// then `commit(i)` for the batch in index order on the calling thread.
void run_batched(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& work,
                 const std::function<void(std::size_t)>& commit) {
    workers = std::max<std::size_t>(1, workers);
    for (std::size_t start = 0; start < count; start += workers) {
        const std::size_t end = std::min(count, start + workers);
        if (end - start == 1) {
            work(start);
        } else {
            std::vector<std::jthread> threads;
            for (std::size_t i = start; i < end; ++i) threads.emplace_back([&work, i] { work(i); });
        }
        for (std::size_t i = start; i < end; ++i) commit(i);
    }
}

std::size_t worker_count(const ExperimentConfig& config, const Provider& provider) {
    return provider.requires_sequential_calls() ? 1 : config.provider.concurrency;
}

struct SeedInput {
    std::string id;
    std::string summary;
    std::string history;
};

std::vector<SeedInput> read_seed_source(const fs::path& path) {
    if (path.empty()) throw ConfigError("config has no seed_source");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read seed source " + path.string());
    std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

    std::vector<json> records;
    const auto first = content.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && content[first] == '[') {
            for (const auto& r : json::parse(content)) records.push_back(r);
        } else {
            std::size_t start = 0;
            std::size_t line_no = 0;
            while (start < content.size()) {
                auto end = content.find('\n', start);
                if (end == std::string::npos) end = content.size();
                ++line_no;
                const auto line = content.substr(start, end - start);
                start = end + 1;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                try {
                    records.push_back(json::parse(line));
                } catch (const json::exception& e) {
                    throw StoreParseError(path.filename().string(), line_no, e.what());
                }
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("seed source " + path.string() + " is not valid JSON: " + e.what());
    }

    std::vector<SeedInput> out;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        SeedInput s;
        try {
            s.id = r.at("id").get<std::string>();
            s.summary = r.value("summary", std::string{});
            s.history = r.value("history", std::string{});
        } catch (const json::exception& e) {
            throw ConfigError("seed record " + std::to_string(i + 1) + ": " + e.what());
        }
        if (s.id.empty() || s.id.find('/') != std::string::npos)
            throw ConfigError("seed record " + std::to_string(i + 1) + " needs an id without '/'");
        if (!ids.insert(s.id).second) throw ConfigError("seed id " + s.id + " appears twice");
        if (s.summary.empty() && s.history.empty())
            throw ConfigError("seed " + s.id + " has neither a summary nor a history");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::string> seed_ids_of(const std::vector<Seed>& seeds) {
    std::vector<std::string> ids;
    for (const auto& s : seeds) ids.push_back(s.id);
    return ids;
}

void check_manifest(const ExperimentConfig& config, const ExperimentData& data) {
    if (!data.manifest) return;
    const auto expected = compute_manifest_hash(config.manifest_snapshot(), seed_ids_of(data.seeds));
    if (expected != data.manifest->hash)
        throw StaleConfigError(
            "the configuration or seed list differs from the one this experiment was started with; "
            "use a new experiment directory");
}

// Loads the experiment, importing seeds and writing the manifest first if
// this is a fresh directory.
ExperimentData prepare(const ExperimentConfig& config, ExperimentStore& store) {
    auto data = store.load();
    if (!data.manifest) {
        if (data.seeds.empty()) {
            auto r = cmd_seeds(config, store, nullptr, RunOptions{});
            if (!r.failures.empty()) throw ConfigError("seed import failed: " + r.failures.front());
        } else {
            store.write_manifest(make_manifest(config.manifest_snapshot(), seed_ids_of(data.seeds)));
        }
        data = store.load();
    }
    check_manifest(config, data);
    return data;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

CommandResult cmd_seeds(const ExperimentConfig& config, ExperimentStore& store, Provider* provider,
                        const RunOptions& options) {
    auto existing = store.load();
    check_manifest(config, existing);
    auto inputs = read_seed_source(config.seed_source);
    if (!options.resume && !existing.seeds.empty() && !existing.manifest) {
        // A half-finished import; allowed to continue only on request.
        throw ConfigError("experiment already holds seeds; pass --resume to continue the import");
    }

    CommandResult result;
    GenerationPolicy policy;
    policy.temperature = config.generation_temperature;
    for (const auto& in : inputs) {
        if (store.has_seed(in.id)) {
            ++result.skipped;
            continue;
        }
        if (existing.manifest) {
            result.failures.push_back("seed " + in.id + " is not part of the recorded experiment");
            continue;
        }
        try {
            Seed seed{in.id, in.summary};
            if (seed.summary.empty()) {
                if (!provider || config.summarization_model.empty())
                    throw ConfigError("seed " + in.id +
                                      " only has a raw history; set summarization_model to summarize it");
                seed = summarize_seed(*provider, in.id, in.history, config.summarization_model, policy,
                                      config.prompts);
            }
            store.append(seed);
            ++result.created;
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            spdlog::error("seed {}: {}", in.id, e.what());
            result.failures.push_back("seed " + in.id + ": " + e.what());
        }
    }
    if (!existing.manifest && result.failures.empty()) {
        const auto data = store.load();
        store.write_manifest(make_manifest(config.manifest_snapshot(), seed_ids_of(data.seeds)));
    }
    return result;
}

CommandResult cmd_generate(const ExperimentConfig& config, ExperimentStore& store, Provider& provider,
                           const RunOptions& options) {
    config.validate();
    const auto data = prepare(config, store);
    if (!options.resume && !data.dialogues.empty())
        throw ConfigError("experiment already has " + std::to_string(data.dialogues.size()) +
                          " dialogues; pass --resume to fill in the missing ones");

    struct Task {
        const Seed* seed;
        GenerationMethod method;
    };
    std::vector<Task> tasks;
    CommandResult result;
    for (const auto& seed : data.seeds)
        for (const auto& model : config.generation_models)
            for (auto strategy : {Strategy::dual, Strategy::single}) {
                GenerationMethod method{strategy, model};
                if (store.has_dialogue(dialogue_id(seed.id, method))) {
                    ++result.skipped;
                    continue;
                }
                tasks.push_back({&seed, method});
            }

    GenerationPolicy policy;
    policy.temperature = config.generation_temperature;
    policy.max_utterances = config.max_utterances;

    std::vector<std::optional<Dialogue>> produced(tasks.size());
    std::vector<std::string> errors(tasks.size());
    auto work = [&](std::size_t i) {
        const auto& t = tasks[i];
        try {
            auto d = t.method.strategy == Strategy::dual
                         ? generate_dual(provider, *t.seed, t.method.model, t.method.model, policy,
                                         config.prompts)
                         : generate_single(provider, *t.seed, t.method.model, policy, config.prompts);
            produced[i] = normalize(std::move(d));
            validate(*produced[i]);
        } catch (const std::exception& e) {
            produced[i].reset();
            errors[i] = e.what();
        }
    };
    auto commit = [&](std::size_t i) {
        const auto& t = tasks[i];
        if (produced[i]) {
            try {
                store.append(*produced[i]);
                ++result.created;
                return;
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
        spdlog::error("seed {} {}: {}", t.seed->id, t.method.key(), errors[i]);
        result.failures.push_back("seed " + t.seed->id + " " + t.method.key() + ": " + errors[i]);
    };
    run_batched(tasks.size(), worker_count(config, provider), work, commit);
    spdlog::info("generate: {} created, {} already present, {} failed", result.created, result.skipped,
                 result.failures.size());
    return result;
}

CommandResult cmd_judge(const ExperimentConfig& config, ExperimentStore& store, Provider& provider,
                        const RunOptions& options) {
    config.validate();
    const auto data = prepare(config, store);
    if (!options.resume) {
        for (const auto& j : data.judgments)
            if (std::find(config.judge_models.begin(), config.judge_models.end(), j.judge_model) !=
                config.judge_models.end())
                throw ConfigError("experiment already has judgments from " + j.judge_model +
                                  "; pass --resume to fill in the missing ones");
    }

    std::vector<GenerationMethod> expected;
    for (const auto& model : config.generation_models)
        for (auto strategy : {Strategy::dual, Strategy::single}) expected.push_back({strategy, model});

    std::map<std::string, std::vector<Dialogue>> by_seed;
    for (const auto& d : data.dialogues) by_seed[d.seed_id].push_back(d);

    CommandResult result;
    std::vector<PairTask> tasks;
    for (const auto& seed : data.seeds) {
        try {
            const auto& group = by_seed[seed.id];
            for (auto& task : schedule_pairs(group, config.judge_models, expected)) {
                if (store.has_judgment(task.judgment_id())) {
                    ++result.skipped;
                    continue;
                }
                tasks.push_back(std::move(task));
            }
        } catch (const SchedulingError& e) {
            spdlog::error("seed {}: {}", seed.id, e.what());
            result.failures.push_back("seed " + seed.id + ": " + e.what());
        }
    }

    JudgePolicy policy;
    policy.temperature = config.judge_temperature;
    policy.max_reasks = config.judge_reasks;
    std::vector<std::optional<Judgment>> produced(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::size_t invalid = 0;
    auto work = [&](std::size_t i) {
        try {
            produced[i] = judge_pair(provider, tasks[i], policy, config.prompts);
        } catch (const std::exception& e) {
            produced[i].reset();
            errors[i] = e.what();
        }
    };
    auto commit = [&](std::size_t i) {
        if (produced[i]) {
            try {
                store.append(*produced[i]);
                ++result.created;
                if (!produced[i]->valid()) {
                    ++invalid;
                    spdlog::warn("{}: judge reply could not be parsed; stored as invalid", produced[i]->id);
                }
                return;
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
        spdlog::error("{}: {}", tasks[i].judgment_id(), errors[i]);
        result.failures.push_back(tasks[i].judgment_id() + ": " + errors[i]);
    };
    run_batched(tasks.size(), worker_count(config, provider), work, commit);
    spdlog::info("judge: {} created ({} invalid), {} already present, {} failed", result.created, invalid,
                 result.skipped, result.failures.size());
    return result;
}

namespace {

std::vector<report::LengthBiasRow> length_bias_for(const std::vector<Judgment>& judgments,
                                                   const std::vector<Dialogue>& dialogues,
                                                   std::vector<std::string>& warnings,
                                                   const std::string& judge) {
    std::set<std::pair<std::string, GenerationMethod>> judged;
    for (const auto& j : judgments) {
        if (!j.valid()) continue;
        judged.insert({j.seed_id, j.first});
        judged.insert({j.seed_id, j.second});
    }
    std::vector<Dialogue> covered;
    for (const auto& d : dialogues)
        if (judged.contains({d.seed_id, d.method})) covered.push_back(d);
    if (covered.size() < dialogues.size())
        warnings.push_back(fmt::format("judge {}: {} dialogues without a valid judgment left out of the "
                                       "length regression",
                                       judge, dialogues.size() - covered.size()));

    std::vector<report::LengthBiasRow> rows{{"chars", covered.size(), {}, {}},
                                            {"words", covered.size(), {}, {}}};
    if (covered.empty()) {
        for (auto& r : rows) r.error = "no judged dialogues";
        return rows;
    }
    const auto scored = score_and_bucket(judgments, covered);
    std::vector<int> buckets;
    std::vector<double> chars, words;
    for (std::size_t i = 0; i < covered.size(); ++i) {
        buckets.push_back(scored[i].bucket);
        const auto len = measure_length(covered[i]);
        chars.push_back(static_cast<double>(len.chars));
        words.push_back(static_cast<double>(len.words));
    }
    auto fit_into = [&](report::LengthBiasRow& row, const std::vector<double>& x) {
        try {
            row.fit = fit_ordinal(x, buckets);
        } catch (const Error& e) {
            row.error = e.what();
            warnings.push_back(fmt::format("judge {}, {}: regression failed: {}", judge, row.measure, e.what()));
        }
    };
    fit_into(rows[0], chars);
    fit_into(rows[1], words);
    return rows;
}

std::vector<report::KruskalRow> kruskal_rows(const std::vector<Dialogue>& dialogues,
                                             std::vector<std::string>& warnings) {
    std::map<GenerationMethod, std::vector<double>> chars, words;
    for (const auto& d : dialogues) {
        const auto len = measure_length(d);
        chars[d.method].push_back(static_cast<double>(len.chars));
        words[d.method].push_back(static_cast<double>(len.words));
    }
    std::vector<report::KruskalRow> rows;
    for (const auto& [name, by_method] : {std::pair{"chars", &chars}, std::pair{"words", &words}}) {
        report::KruskalRow row{name, by_method->size(), dialogues.size(), {}, {}};
        std::vector<std::vector<double>> groups;
        for (const auto& [_, g] : *by_method) groups.push_back(g);
        try {
            row.result = kruskal_wallis(groups);
        } catch (const Error& e) {
            row.error = e.what();
            warnings.push_back(std::string("Kruskal-Wallis on ") + name + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ReportResult cmd_report(const ExperimentConfig& config, const fs::path& experiment_dir, ReportPart part) {
    const auto data = load_experiment(experiment_dir);
    if (part != ReportPart::cost && data.judgments.empty())
        throw NothingToReportError("nothing to report: the experiment has no judgments yet");
    if (part == ReportPart::cost && data.dialogues.empty())
        throw NothingToReportError("nothing to report: the experiment has no dialogues yet");

    ReportResult result;
    const auto out_dir = config.report_dir.is_absolute() ? config.report_dir : experiment_dir / config.report_dir;
    fs::create_directories(out_dir);
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(out_dir / name, content);
        result.files.push_back(out_dir / name);
    };

    std::map<std::string, std::vector<Judgment>> by_judge;
    for (const auto& j : data.judgments) by_judge[j.judge_model].push_back(j);

    report::Digest digest;
    if (part == ReportPart::all) {
        for (const auto& [judge, judgments] : by_judge) {
            auto m = win_rate_matrix(judgments, judge, config.intra_group);
            for (std::size_t r = 0; r < m.rows(); ++r)
                for (std::size_t c = 0; c < WinRateMatrix::kColumns; ++c)
                    if (m.at(r, c).defined && !m.at(r, c).rate)
                        result.warnings.push_back(fmt::format("judge {}: no comparisons for {} x {}; shown as n/a",
                                                              judge, r < m.models.size() ? m.models[r] : "Both",
                                                              c == 0 ? "dual" : c == 1 ? "single" : "Both"));
            emit("win_rates_" + report::file_safe(judge) + ".csv", report::win_rates_csv(m));
            digest.matrices.push_back(std::move(m));
            digest.tie_rates.push_back(tie_rate(judgments, judge));
        }
        for (auto a = by_judge.begin(); a != by_judge.end(); ++a)
            for (auto b = std::next(a); b != by_judge.end(); ++b) {
                try {
                    digest.agreements.push_back(agreement(a->second, b->second));
                } catch (const CoverageError& e) {
                    result.warnings.push_back("no agreement for " + a->first + " vs " + b->first + ": " + e.what());
                }
            }
        emit("agreement.csv", report::agreement_csv(digest.agreements));
        emit("tie_rates.csv", report::tie_rates_csv(digest.tie_rates));
    }

    if (part == ReportPart::all || part == ReportPart::stats) {
        for (const auto& [judge, judgments] : by_judge) {
            auto rows = length_bias_for(judgments, data.dialogues, result.warnings, judge);
            emit("length_bias_" + report::file_safe(judge) + ".csv", report::length_bias_csv(rows));
            digest.length_bias.emplace_back(judge, std::move(rows));
        }
        digest.kruskal = kruskal_rows(data.dialogues, result.warnings);
        emit("length_kw.csv", report::length_kw_csv(digest.kruskal));
    }

    if (part == ReportPart::all || part == ReportPart::cost) {
        auto summary = summarize_costs(data.dialogues);
        for (const auto& w : summary.warnings) result.warnings.push_back(w);
        emit("token_counts.csv", report::token_counts_csv(summary));
        emit("cost_ratios.csv", report::cost_ratios_csv(summary));
        emit("cost_model.csv", report::cost_model_csv(cost_model(data.dialogues)));
        digest.judge_costs = summarize_judge_costs(data.judgments);
        emit("judge_token_counts.csv", report::judge_token_counts_csv(digest.judge_costs));
        digest.generation_costs = std::move(summary);
    }

    if (part == ReportPart::all) {
        digest.warnings = result.warnings;
        emit("report.md", report::markdown_digest(digest));
    }
    for (const auto& w : result.warnings) spdlog::warn("{}", w);
    return result;
}

}  // namespace dforge
