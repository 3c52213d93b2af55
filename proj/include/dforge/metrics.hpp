#pragma once

// Win rates with ties, win-rate matrices, inter-judge agreement, tie rates.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dforge/judging.hpp"
#include "dforge/model.hpp"

namespace dforge {

struct MethodTally {
    GenerationMethod method;
    std::int64_t wins = 0;
    std::int64_t losses = 0;
    std::int64_t ties = 0;

    std::int64_t total() const { return wins + losses + ties; }
    void add(Outcome outcome);
    MethodTally& operator+=(const MethodTally& other);
    bool operator==(const MethodTally&) const = default;
};

using MethodFilter = std::function<bool(const GenerationMethod&)>;

// Tallies every valid judgment; invalid ones are skipped. A method's tally
// only counts judgments it takes part in. With a filter, only methods it
// accepts get a tally.
std::map<GenerationMethod, MethodTally> tally(std::span<const Judgment> judgments,
                                              const MethodFilter& filter = {});

// wins / (wins + losses + ties). Throws EmptyDenominatorError on 0/0.
double win_rate(const MethodTally& tally);

enum class IntraGroup {
    include,  // a comparison between two members counts once per member
    exclude,  // only comparisons against non-members count
};

struct WinRateCell {
    bool defined = true;  // false for the (Both, Both) corner
    MethodTally tally;
    std::optional<double> rate;  // empty when the tally is 0/0
};

// Rows: one per generation model (sorted), then "Both". Columns: dual,
// single, "Both".
struct WinRateMatrix {
    std::string judge_model;
    std::vector<std::string> models;
    std::vector<std::vector<WinRateCell>> cells;

    static constexpr std::size_t kColumns = 3;
    std::size_t rows() const { return cells.size(); }
    std::size_t both_row() const { return models.size(); }
    static constexpr std::size_t both_column() { return 2; }
    const WinRateCell& at(std::size_t row, std::size_t col) const { return cells.at(row).at(col); }

    // Throws EmptyDenominatorError for a 0/0 cell, std::out_of_range for the corner.
    double rate(std::size_t row, std::size_t col) const;
};

// Every judgment must come from `judge_model`.
WinRateMatrix win_rate_matrix(std::span<const Judgment> judgments, const std::string& judge_model,
                              IntraGroup intra_group = IntraGroup::include);

// Unrelaxed: same choice. Relaxed: same choice or either is a tie.
bool agrees(Choice a, Choice b, bool relaxed);

struct CategoryAgreement {
    GenerationMethod a;  // a < b
    GenerationMethod b;
    std::size_t compared = 0;
    std::size_t unrelaxed_agree = 0;
    std::size_t relaxed_agree = 0;

    std::optional<double> unrelaxed() const;
    std::optional<double> relaxed() const;
};

struct TieRate {
    std::string judge_model;
    std::size_t ties = 0;
    std::size_t valid = 0;

    double rate() const;  // throws EmptyDenominatorError when valid == 0
};

struct AgreementReport {
    std::string judge_a;
    std::string judge_b;
    std::vector<CategoryAgreement> categories;  // sorted by (a, b)
    TieRate tie_rate_a;
    TieRate tie_rate_b;
};

TieRate tie_rate(std::span<const Judgment> judgments, const std::string& judge_model);

// Both sets must cover the same (seed, first, second) keys, otherwise
// CoverageError lists what is missing. A key where either verdict is invalid
// is left out of the comparison.
AgreementReport agreement(std::span<const Judgment> judge_a, std::span<const Judgment> judge_b);

}  // namespace dforge
