#pragma once

// CSV and Markdown renderings of the computed metrics.

#include <optional>
#include <string>
#include <vector>

#include "dforge/costing.hpp"
#include "dforge/metrics.hpp"
#include "dforge/stats.hpp"

namespace dforge::report {

// Fixed 4-decimal rate, or "n/a".
std::string format_rate(std::optional<double> rate);
std::string format_percent(std::optional<double> rate);

// Lowercase letters, digits, '.', '-' and '_' survive; the rest become '_'.
std::string file_safe(std::string_view name);

std::string win_rates_csv(const WinRateMatrix& matrix);
std::string agreement_csv(const std::vector<AgreementReport>& reports);
std::string tie_rates_csv(const std::vector<TieRate>& rates);

struct LengthBiasRow {
    std::string measure;  // "chars" | "words"
    std::size_t observations = 0;
    std::optional<OrdinalFit> fit;
    std::string error;  // why there is no fit
};
std::string length_bias_csv(const std::vector<LengthBiasRow>& rows);

struct KruskalRow {
    std::string measure;
    std::size_t groups = 0;
    std::size_t observations = 0;
    std::optional<KWResult> result;
    std::string error;
};
std::string length_kw_csv(const std::vector<KruskalRow>& rows);

std::string token_counts_csv(const CostSummary& summary);
std::string cost_ratios_csv(const CostSummary& summary);
std::string cost_model_csv(const std::vector<CostModelRow>& rows);
std::string judge_token_counts_csv(const std::vector<JudgeUsage>& usage);

struct Digest {
    std::vector<WinRateMatrix> matrices;
    std::vector<AgreementReport> agreements;
    std::vector<TieRate> tie_rates;
    std::vector<std::pair<std::string, std::vector<LengthBiasRow>>> length_bias;  // per judge
    std::vector<KruskalRow> kruskal;
    std::optional<CostSummary> generation_costs;
    std::vector<JudgeUsage> judge_costs;
    std::vector<std::string> warnings;
};

std::string markdown_digest(const Digest& digest);

}  // namespace dforge::report
