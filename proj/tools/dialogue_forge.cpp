// dialogue_forge: build a synthetic interview corpus and compare how it was made.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

#include "dforge/experiment.hpp"

namespace {

using namespace dforge;

struct Args {
    std::string config;
    std::string experiment_dir;
    std::vector<std::string> judges;
    std::string mock;
    bool resume = false;
    bool verbose = false;
};

ExperimentConfig config_for(const Args& args) {
    auto config = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
    if (!args.judges.empty()) config.judge_models = args.judges;
    return config;
}

std::unique_ptr<Provider> provider_for(const Args& args, const ExperimentConfig& config) {
    if (!args.mock.empty()) return script_mock(args.mock);
    return make_http_provider(config);
}

int report_command(const Args& args, const CommandResult& r, const char* what) {
    std::cout << fmt::format("{}: {} created, {} skipped, {} failed\n", what, r.created, r.skipped,
                             r.failures.size());
    for (const auto& f : r.failures) std::cerr << "failed: " << f << '\n';
    return r.exit_code();
}

int run(const std::string& command, const Args& args) {
    auto config = config_for(args);
    const std::filesystem::path dir = args.experiment_dir;

    if (command == "seeds" || command == "generate" || command == "judge") {
        if (args.config.empty()) throw ConfigError("--config is required for " + command);
        if (command != "seeds") config.validate();
        ExperimentStore store(dir);
        if (command == "seeds") {
            std::unique_ptr<Provider> provider;
            if (!config.summarization_model.empty()) provider = provider_for(args, config);
            return report_command(args, cmd_seeds(config, store, provider.get(), RunOptions{args.resume}),
                                  "seeds");
        }
        auto provider = provider_for(args, config);
        if (command == "generate")
            return report_command(args, cmd_generate(config, store, *provider, RunOptions{args.resume}),
                                  "generate");
        return report_command(args, cmd_judge(config, store, *provider, RunOptions{args.resume}), "judge");
    }

    const auto part = command == "cost" ? ReportPart::cost : command == "stats" ? ReportPart::stats : ReportPart::all;
    const auto result = cmd_report(config, dir, part);
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic interview dialogues and evaluate them with LLM judges"};
    app.require_subcommand(1);
    Args args;
    app.add_option("--config", args.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--experiment-dir", args.experiment_dir, "Directory holding the experiment data")
        ->required();
    app.add_flag("-v,--verbose", args.verbose, "Debug logging");

    const std::vector<std::pair<const char*, const char*>> commands{
        {"seeds", "Import seed summaries (summarizing raw histories if configured)"},
        {"generate", "Generate dual-agent and single-prompt dialogues"},
        {"judge", "Run pairwise judgments over the generated dialogues"},
        {"report", "Write win rates, agreement, tie rates, length bias and costs"},
        {"cost", "Write token usage and cost-model tables only"},
        {"stats", "Write the length-bias analyses only"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        const std::string n = name;
        if (n == "seeds" || n == "generate" || n == "judge") {
            sub->add_option("--mock", args.mock, "Scripted mock provider scenario (JSON)")
                ->check(CLI::ExistingFile);
            sub->add_flag("--resume", args.resume, "Skip records that already exist");
        }
        if (n == "judge") sub->add_option("--judge", args.judges, "Judge model (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_level(args.verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const StaleConfigError& e) {
        std::cerr << "stale experiment: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
