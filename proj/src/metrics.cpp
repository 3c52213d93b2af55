#include "dforge/metrics.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "dforge/errors.hpp"

namespace dforge {

void MethodTally::add(Outcome outcome) {
    switch (outcome) {
        case Outcome::win: ++wins; break;
        case Outcome::loss: ++losses; break;
        case Outcome::tie: ++ties; break;
    }
}

MethodTally& MethodTally::operator+=(const MethodTally& other) {
    wins += other.wins;
    losses += other.losses;
    ties += other.ties;
    return *this;
}

std::map<GenerationMethod, MethodTally> tally(std::span<const Judgment> judgments,
                                              const MethodFilter& filter) {
    std::map<GenerationMethod, MethodTally> out;
    auto credit = [&](const GenerationMethod& m, Outcome o) {
        if (filter && !filter(m)) return;
        auto [it, inserted] = out.try_emplace(m);
        if (inserted) it->second.method = m;
        it->second.add(o);
    };
    for (const auto& j : judgments) {
        auto o = outcome_of(j);
        if (!o) continue;
        credit(o->first, o->first_outcome);
        credit(o->second, o->second_outcome);
    }
    return out;
}

double win_rate(const MethodTally& t) {
    const auto n = t.total();
    if (n == 0) throw EmptyDenominatorError("no comparisons for " + t.method.key());
    return static_cast<double>(t.wins) / static_cast<double>(n);
}

double WinRateMatrix::rate(std::size_t row, std::size_t col) const {
    const auto& cell = at(row, col);
    if (!cell.defined) throw std::out_of_range("the Both x Both cell is undefined");
    if (!cell.rate) throw EmptyDenominatorError("no comparisons in cell (" + std::to_string(row) +
                                                ", " + std::to_string(col) + ")");
    return *cell.rate;
}

WinRateMatrix win_rate_matrix(std::span<const Judgment> judgments, const std::string& judge_model,
                              IntraGroup intra_group) {
    std::set<std::string> model_set;
    for (const auto& j : judgments) {
        if (j.judge_model != judge_model)
            throw ValidationError("judge_model", "judgment " + j.id + " is from judge " +
                                                     j.judge_model + ", expected " + judge_model);
        model_set.insert(j.first.model);
        model_set.insert(j.second.model);
    }

    WinRateMatrix m;
    m.judge_model = judge_model;
    m.models.assign(model_set.begin(), model_set.end());
    constexpr Strategy kColumns[] = {Strategy::dual, Strategy::single};

    // Tally of the group of methods accepted by `member`.
    auto group_tally = [&](const MethodFilter& member) {
        MethodTally total;
        for (const auto& j : judgments) {
            auto o = outcome_of(j);
            if (!o) continue;
            const bool in_first = member(o->first);
            const bool in_second = member(o->second);
            if (intra_group == IntraGroup::exclude && in_first && in_second) continue;
            if (in_first) total.add(o->first_outcome);
            if (in_second) total.add(o->second_outcome);
        }
        return total;
    };
    auto make_cell = [](MethodTally t) {
        WinRateCell cell;
        cell.tally = t;
        if (t.total() > 0) cell.rate = win_rate(t);
        return cell;
    };

    for (const auto& model : m.models) {
        std::vector<WinRateCell> row;
        for (auto strategy : kColumns) {
            auto t = group_tally([&](const GenerationMethod& g) {
                return g.model == model && g.strategy == strategy;
            });
            t.method = {strategy, model};
            row.push_back(make_cell(t));
        }
        auto both = group_tally([&](const GenerationMethod& g) { return g.model == model; });
        both.method = {Strategy::dual, model};
        row.push_back(make_cell(both));
        m.cells.push_back(std::move(row));
    }
    std::vector<WinRateCell> both_row;
    for (auto strategy : kColumns) {
        auto t = group_tally([&](const GenerationMethod& g) { return g.strategy == strategy; });
        t.method = {strategy, "Both"};
        both_row.push_back(make_cell(t));
    }
    WinRateCell corner;
    corner.defined = false;
    both_row.push_back(corner);
    m.cells.push_back(std::move(both_row));
    return m;
}

bool agrees(Choice a, Choice b, bool relaxed) {
    if (a == b) return true;
    return relaxed && (a == Choice::tie || b == Choice::tie);
}

std::optional<double> CategoryAgreement::unrelaxed() const {
    if (compared == 0) return std::nullopt;
    return static_cast<double>(unrelaxed_agree) / static_cast<double>(compared);
}

std::optional<double> CategoryAgreement::relaxed() const {
    if (compared == 0) return std::nullopt;
    return static_cast<double>(relaxed_agree) / static_cast<double>(compared);
}

double TieRate::rate() const {
    if (valid == 0) throw EmptyDenominatorError("judge " + judge_model + " has no valid judgments");
    return static_cast<double>(ties) / static_cast<double>(valid);
}

TieRate tie_rate(std::span<const Judgment> judgments, const std::string& judge_model) {
    TieRate t{judge_model, 0, 0};
    for (const auto& j : judgments) {
        if (j.judge_model != judge_model || !j.valid()) continue;
        ++t.valid;
        if (j.choice == Choice::tie) ++t.ties;
    }
    return t;
}

namespace {

using PairKey = std::tuple<std::string, GenerationMethod, GenerationMethod>;

std::map<PairKey, const Judgment*> index_by_pair(std::span<const Judgment> judgments,
                                                 std::string& judge) {
    std::map<PairKey, const Judgment*> out;
    for (const auto& j : judgments) {
        if (judge.empty()) judge = j.judge_model;
        if (j.judge_model != judge)
            throw ValidationError("judge_model", "mixed judges in one agreement input: " + judge +
                                                     " and " + j.judge_model);
        if (!out.emplace(PairKey{j.seed_id, j.first, j.second}, &j).second)
            throw ValidationError("id", "two judgments for " + j.id);
    }
    return out;
}

std::string describe(const PairKey& k) {
    return std::get<0>(k) + " " + std::get<1>(k).key() + "|" + std::get<2>(k).key();
}

}  // namespace

AgreementReport agreement(std::span<const Judgment> judge_a, std::span<const Judgment> judge_b) {
    AgreementReport report;
    const auto a = index_by_pair(judge_a, report.judge_a);
    const auto b = index_by_pair(judge_b, report.judge_b);

    std::vector<std::string> missing;
    for (const auto& [key, _] : a)
        if (!b.contains(key)) missing.push_back(describe(key) + " (missing for " + report.judge_b + ")");
    for (const auto& [key, _] : b)
        if (!a.contains(key)) missing.push_back(describe(key) + " (missing for " + report.judge_a + ")");
    if (!missing.empty()) {
        std::string msg = "judges cover different comparisons:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw CoverageError(msg);
    }

    std::map<std::pair<GenerationMethod, GenerationMethod>, CategoryAgreement> categories;
    for (const auto& [key, ja] : a) {
        const auto* jb = b.at(key);
        auto lo = std::min(std::get<1>(key), std::get<2>(key));
        auto hi = std::max(std::get<1>(key), std::get<2>(key));
        auto [it, inserted] = categories.try_emplace({lo, hi});
        if (inserted) {
            it->second.a = lo;
            it->second.b = hi;
        }
        if (!ja->valid() || !jb->valid()) continue;
        auto& c = it->second;
        ++c.compared;
        if (agrees(*ja->choice, *jb->choice, false)) ++c.unrelaxed_agree;
        if (agrees(*ja->choice, *jb->choice, true)) ++c.relaxed_agree;
    }
    for (auto& [_, c] : categories) report.categories.push_back(std::move(c));
    report.tie_rate_a = tie_rate(judge_a, report.judge_a);
    report.tie_rate_b = tie_rate(judge_b, report.judge_b);
    return report;
}

}  // namespace dforge
