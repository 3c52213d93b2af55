#pragma once

// Prompt templates. Defaults are compiled in from prompts/*.txt; any of them
// can be replaced from a file at runtime.

#include <filesystem>
#include <string>
#include <string_view>

namespace dforge {

inline constexpr std::string_view kTerminationPhrase =
    "I got what I needed, thank you for your time.";

namespace prompts {

std::string_view interviewer_system();
std::string_view candidate_system();   // contains {seed}
std::string_view single_system();
std::string_view single_user();        // contains {seed}
std::string_view judge();              // contains {dialog1}, {dialog2}
std::string_view summarize();          // contains {history}

}  // namespace prompts

struct PromptSet {
    std::string interviewer_system{prompts::interviewer_system()};
    std::string candidate_system{prompts::candidate_system()};
    std::string single_system{prompts::single_system()};
    std::string single_user{prompts::single_user()};
    std::string judge{prompts::judge()};
    std::string summarize{prompts::summarize()};

    bool operator==(const PromptSet&) const = default;
};

// Reads a template file byte-for-byte.
std::string read_template(const std::filesystem::path& path);

}  // namespace dforge
