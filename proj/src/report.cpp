#include "dforge/report.hpp"

#include <fmt/format.h>

#include <cctype>

namespace dforge::report {

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_line(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += csv_field(f);
        first = false;
    }
    out += '\n';
    return out;
}

std::string num(double v) { return fmt::format("{:.10g}", v); }
std::string tokens(double v) { return fmt::format("{:.2f}", v); }

std::string row_name(const WinRateMatrix& m, std::size_t row) {
    return row < m.models.size() ? m.models[row] : "Both";
}

std::string cell_text(const WinRateCell& cell) {
    return cell.defined ? format_rate(cell.rate) : std::string{};
}

std::string category_name(const CategoryAgreement& c) { return c.a.key() + " vs " + c.b.key(); }

}  // namespace

std::string format_rate(std::optional<double> rate) {
    return rate ? fmt::format("{:.4f}", *rate) : "n/a";
}

std::string format_percent(std::optional<double> rate) {
    return rate ? fmt::format("{:.1f}%", *rate * 100.0) : "n/a";
}

std::string file_safe(std::string_view name) {
    std::string out;
    for (char c : name) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '.' || c == '-' || c == '_')
            out += static_cast<char>(std::tolower(u));
        else
            out += '_';
    }
    return out;
}

std::string win_rates_csv(const WinRateMatrix& m) {
    std::string out = csv_line({"model", "dual", "single", "both"});
    for (std::size_t r = 0; r < m.rows(); ++r)
        out += csv_line({row_name(m, r), cell_text(m.at(r, 0)), cell_text(m.at(r, 1)), cell_text(m.at(r, 2))});
    return out;
}

std::string agreement_csv(const std::vector<AgreementReport>& reports) {
    std::string out = csv_line({"judge_a", "judge_b", "comparison", "compared", "unrelaxed", "relaxed"});
    for (const auto& rep : reports)
        for (const auto& c : rep.categories)
            out += csv_line({rep.judge_a, rep.judge_b, category_name(c), std::to_string(c.compared),
                             format_rate(c.unrelaxed()), format_rate(c.relaxed())});
    return out;
}

std::string tie_rates_csv(const std::vector<TieRate>& rates) {
    std::string out = csv_line({"judge", "ties", "valid", "tie_rate"});
    for (const auto& t : rates)
        out += csv_line({t.judge_model, std::to_string(t.ties), std::to_string(t.valid),
                         format_rate(t.valid ? std::optional(t.rate()) : std::nullopt)});
    return out;
}

std::string length_bias_csv(const std::vector<LengthBiasRow>& rows) {
    std::string out = csv_line({"measure", "n", "beta", "std_error", "z", "p_value", "theta1",
                                "theta2", "log_likelihood", "converged", "error"});
    for (const auto& r : rows) {
        if (!r.fit) {
            out += csv_line({r.measure, std::to_string(r.observations), "n/a", "n/a", "n/a", "n/a",
                             "n/a", "n/a", "n/a", "false", r.error});
            continue;
        }
        const auto& f = *r.fit;
        const auto theta = [&](std::size_t k) {
            return k < f.thresholds.size() ? num(f.thresholds[k]) : std::string("n/a");
        };
        out += csv_line({r.measure, std::to_string(r.observations), num(f.beta), num(f.std_error),
                         num(f.z), num(f.p_value), theta(0), theta(1), num(f.log_likelihood),
                         f.converged ? "true" : "false", ""});
    }
    return out;
}

std::string length_kw_csv(const std::vector<KruskalRow>& rows) {
    std::string out = csv_line({"measure", "groups", "n", "H", "df", "p_value", "error"});
    for (const auto& r : rows) {
        if (!r.result) {
            out += csv_line({r.measure, std::to_string(r.groups), std::to_string(r.observations), "n/a",
                             "n/a", "n/a", r.error});
            continue;
        }
        out += csv_line({r.measure, std::to_string(r.groups), std::to_string(r.observations),
                         num(r.result->H), std::to_string(r.result->df), num(r.result->p_value), ""});
    }
    return out;
}

std::string token_counts_csv(const CostSummary& summary) {
    std::string out = csv_line({"method", "strategy", "model", "dialogues", "prompt_tokens", "completion_tokens"});
    for (const auto& m : summary.methods)
        out += csv_line({m.method.key(), std::string(to_string(m.method.strategy)), m.method.model,
                         std::to_string(m.dialogues), tokens(m.mean_prompt_tokens),
                         tokens(m.mean_completion_tokens)});
    return out;
}

std::string cost_ratios_csv(const CostSummary& summary) {
    std::string out = csv_line({"model", "total_ratio", "prompt_ratio", "completion_ratio"});
    for (const auto& r : summary.ratios)
        out += csv_line({r.model, fmt::format("{:.4f}", r.total), fmt::format("{:.4f}", r.prompt),
                         fmt::format("{:.4f}", r.completion)});
    return out;
}

std::string cost_model_csv(const std::vector<CostModelRow>& rows) {
    std::string out = csv_line({"method", "dialogues", "p", "a", "n", "measured_prompt_tokens",
                                "predicted_prompt_tokens"});
    for (const auto& r : rows)
        out += csv_line({r.method.key(), std::to_string(r.dialogues), tokens(r.mean_params.p),
                         tokens(r.mean_params.a), tokens(r.mean_params.n), tokens(r.measured_prompt_tokens),
                         tokens(r.predicted_prompt_tokens)});
    return out;
}

std::string judge_token_counts_csv(const std::vector<JudgeUsage>& usage) {
    std::string out = csv_line({"judge", "judgments", "calls", "prompt_tokens", "completion_tokens"});
    for (const auto& u : usage)
        out += csv_line({u.judge_model, std::to_string(u.judgments), std::to_string(u.calls),
                         tokens(u.mean_prompt_tokens), tokens(u.mean_completion_tokens)});
    return out;
}

std::string markdown_digest(const Digest& d) {
    std::string out = "# Experiment report\n";

    for (const auto& m : d.matrices) {
        out += fmt::format("\n## Win rates, judged by {}\n\n", m.judge_model);
        out += "| | Dual | Single | Both |\n|---|---|---|---|\n";
        for (std::size_t r = 0; r < m.rows(); ++r)
            out += fmt::format("| {} | {} | {} | {} |\n", row_name(m, r), cell_text(m.at(r, 0)),
                               cell_text(m.at(r, 1)), cell_text(m.at(r, 2)));
    }

    if (!d.agreements.empty()) {
        out += "\n## Agreement between judges\n";
        for (const auto& rep : d.agreements) {
            out += fmt::format("\n{} vs {}\n\n| Comparison | Unrelaxed | Relaxed | n |\n|---|---|---|---|\n",
                               rep.judge_a, rep.judge_b);
            for (const auto& c : rep.categories)
                out += fmt::format("| {} | {} | {} | {} |\n", category_name(c),
                                   format_percent(c.unrelaxed()), format_percent(c.relaxed()), c.compared);
        }
    }

    if (!d.tie_rates.empty()) {
        out += "\n## Tie rates\n\n| Judge | Ties | Valid | Rate |\n|---|---|---|---|\n";
        for (const auto& t : d.tie_rates)
            out += fmt::format("| {} | {} | {} | {} |\n", t.judge_model, t.ties, t.valid,
                               format_percent(t.valid ? std::optional(t.rate()) : std::nullopt));
    }

    if (!d.length_bias.empty()) {
        out += "\n## Length bias (ordinal logistic regression of score bucket on length)\n\n";
        out += "| Judge | Measure | beta | SE | z | p |\n|---|---|---|---|---|---|\n";
        for (const auto& [judge, rows] : d.length_bias)
            for (const auto& r : rows) {
                if (r.fit)
                    out += fmt::format("| {} | {} | {:.4g} | {:.4g} | {:.3f} | {:.4g} |\n", judge, r.measure,
                                       r.fit->beta, r.fit->std_error, r.fit->z, r.fit->p_value);
                else
                    out += fmt::format("| {} | {} | n/a | n/a | n/a | n/a |\n", judge, r.measure);
            }
    }

    if (!d.kruskal.empty()) {
        out += "\n## Length differences across methods (Kruskal-Wallis)\n\n";
        out += "| Measure | H | df | p |\n|---|---|---|---|\n";
        for (const auto& k : d.kruskal) {
            if (k.result)
                out += fmt::format("| {} | {:.4f} | {} | {:.4g} |\n", k.measure, k.result->H, k.result->df,
                                   k.result->p_value);
            else
                out += fmt::format("| {} | n/a | n/a | n/a |\n", k.measure);
        }
    }

    if (d.generation_costs) {
        out += "\n## Generation token counts (mean per dialogue)\n\n";
        out += "| Method | Dialogues | Prompt | Completion |\n|---|---|---|---|\n";
        for (const auto& m : d.generation_costs->methods)
            out += fmt::format("| {} | {} | {:.1f} | {:.1f} |\n", m.method.key(), m.dialogues,
                               m.mean_prompt_tokens, m.mean_completion_tokens);
        if (!d.generation_costs->ratios.empty()) {
            out += "\n| Model | Dual/single total tokens |\n|---|---|\n";
            for (const auto& r : d.generation_costs->ratios)
                out += fmt::format("| {} | {:.2f}x |\n", r.model, r.total);
        }
    }

    if (!d.judge_costs.empty()) {
        out += "\n## Judge token counts (mean per judgment)\n\n";
        out += "| Judge | Judgments | Calls | Prompt | Completion |\n|---|---|---|---|---|\n";
        for (const auto& u : d.judge_costs)
            out += fmt::format("| {} | {} | {} | {:.1f} | {:.1f} |\n", u.judge_model, u.judgments, u.calls,
                               u.mean_prompt_tokens, u.mean_completion_tokens);
    }

    if (!d.warnings.empty()) {
        out += "\n## Warnings\n\n";
        for (const auto& w : d.warnings) out += "- " + w + "\n";
    }
    return out;
}

}  // namespace dforge::report
