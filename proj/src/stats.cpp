#include "dforge/stats.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "dforge/errors.hpp"
#include "dforge/judging.hpp"
#include "dforge/text.hpp"

namespace dforge {

LengthMeasure measure_length(const Dialogue& dialogue) {
    const auto rendered = render_transcript(dialogue);
    return {dialogue.id, text::codepoint_count(rendered), text::word_count(rendered)};
}

std::vector<int> bucketize(std::span<const std::int64_t> scores) {
    std::vector<int> out(scores.size(), 1);
    if (scores.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const std::int64_t lo = *lo_it;
    const std::int64_t range = *hi_it - lo;
    if (range == 0) return out;
    // s < lo + k*range/3  <=>  3*(s - lo) < k*range, exact in integers.
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::int64_t scaled = 3 * (scores[i] - lo);
        out[i] = scaled < range ? 0 : scaled < 2 * range ? 1 : 2;
    }
    return out;
}

std::vector<BucketedScore> score_and_bucket(std::span<const Judgment> judgments,
                                            std::span<const Dialogue> dialogues) {
    if (judgments.empty()) throw ValidationError("judgments", "no judgments to score");
    std::map<std::pair<std::string, GenerationMethod>, std::int64_t> score;
    std::map<std::pair<std::string, GenerationMethod>, std::int64_t> seen;
    auto credit = [&](const std::string& seed, const GenerationMethod& m, Outcome o) {
        auto key = std::pair{seed, m};
        ++seen[key];
        if (o == Outcome::win) ++score[key];
        if (o == Outcome::loss) --score[key];
    };
    for (const auto& j : judgments) {
        auto o = outcome_of(j);
        if (!o) continue;
        credit(j.seed_id, o->first, o->first_outcome);
        credit(j.seed_id, o->second, o->second_outcome);
    }
    std::vector<BucketedScore> out;
    std::vector<std::int64_t> raw;
    for (const auto& d : dialogues) {
        auto key = std::pair{d.seed_id, d.method};
        if (!seen.contains(key))
            throw ValidationError("judgments", "dialogue " + d.id + " has no valid judgment");
        out.push_back({d.id, score[key], 1});
        raw.push_back(score[key]);
    }
    const auto buckets = bucketize(raw);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].bucket = buckets[i];
    return out;
}

namespace {

double logistic(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Logistic density F(t)(1 - F(t)) and its derivative.
double density(double t) {
    const double f = logistic(t);
    return f * (1.0 - f);
}

double density_slope(double t) {
    const double f = logistic(t);
    return f * (1.0 - f) * (1.0 - 2.0 * f);
}

// P(F(lower) < Y* <= F(upper)) without cancellation when both are near 1.
double interval_probability(std::optional<double> lower, std::optional<double> upper) {
    if (!lower) return logistic(*upper);
    if (!upper) return logistic(-*lower);
    if (*lower > 0) return logistic(-*lower) - logistic(-*upper);
    return logistic(*upper) - logistic(*lower);
}

struct Bounds {
    std::optional<double> lower;  // theta_j - beta x
    std::optional<double> upper;  // theta_{j+1} - beta x
};

Bounds bounds_of(std::span<const double> params, double x, int level, int categories) {
    const double beta = params[categories - 1];
    Bounds b;
    if (level > 0) b.lower = params[level - 1] - beta * x;
    if (level < categories - 1) b.upper = params[level] - beta * x;
    return b;
}

struct Derivatives {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

Derivatives evaluate(std::span<const double> params, std::span<const double> x,
                     std::span<const int> level, int categories, bool with_hessian) {
    const int dim = categories;  // K-1 thresholds + beta
    const int bi = categories - 1;
    Derivatives d;
    d.gradient = Eigen::VectorXd::Zero(dim);
    if (with_hessian) d.hessian = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int j = level[i];
        const auto b = bounds_of(params, x[i], j, categories);
        const double p = interval_probability(b.lower, b.upper);
        if (!(p > 0.0)) {
            d.value = -std::numeric_limits<double>::infinity();
            continue;
        }
        d.value += std::log(p);
        const double gu = b.upper ? density(*b.upper) : 0.0;
        const double gl = b.lower ? density(*b.lower) : 0.0;
        const double xi = x[i];
        const int ui = j;      // index of the upper threshold
        const int li = j - 1;  // index of the lower threshold
        if (b.upper) d.gradient[ui] += gu / p;
        if (b.lower) d.gradient[li] -= gl / p;
        d.gradient[bi] += -xi * (gu - gl) / p;
        if (!with_hessian) continue;

        const double hu = b.upper ? density_slope(*b.upper) : 0.0;
        const double hl = b.lower ? density_slope(*b.lower) : 0.0;
        const double p2 = p * p;
        if (b.upper) {
            d.hessian(ui, ui) += hu / p - gu * gu / p2;
            const double ub = -xi * hu / p + xi * gu * (gu - gl) / p2;
            d.hessian(ui, bi) += ub;
            d.hessian(bi, ui) += ub;
        }
        if (b.lower) {
            d.hessian(li, li) += -hl / p - gl * gl / p2;
            const double lb = xi * hl / p - xi * gl * (gu - gl) / p2;
            d.hessian(li, bi) += lb;
            d.hessian(bi, li) += lb;
        }
        if (b.upper && b.lower) {
            const double ul = gu * gl / p2;
            d.hessian(ui, li) += ul;
            d.hessian(li, ui) += ul;
        }
        d.hessian(bi, bi) += xi * xi * (hu - hl) / p - xi * xi * (gu - gl) * (gu - gl) / p2;
    }
    return d;
}

bool increasing(const Eigen::VectorXd& params, int categories) {
    for (int k = 1; k < categories - 1; ++k)
        if (!(params[k] > params[k - 1])) return false;
    return true;
}

}  // namespace

namespace ordinal {

double log_likelihood(std::span<const double> params, std::span<const double> x,
                      std::span<const int> level, int categories) {
    return evaluate(params, x, level, categories, false).value;
}

std::vector<double> gradient(std::span<const double> params, std::span<const double> x,
                             std::span<const int> level, int categories) {
    const auto g = evaluate(params, x, level, categories, false).gradient;
    return {g.data(), g.data() + g.size()};
}

}  // namespace ordinal

OrdinalFit fit_ordinal(std::span<const double> x, std::span<const int> y, const OrdinalOptions& options) {
    if (x.size() != y.size()) throw ValidationError("y", "x and y differ in length");
    if (x.empty()) throw NotIdentifiableError("no observations");

    const std::set<int> distinct(y.begin(), y.end());
    if (distinct.size() < 2) throw NotIdentifiableError("the response takes a single value");
    const int categories = static_cast<int>(distinct.size());
    std::map<int, int> level_of;
    for (int v : distinct) level_of.emplace(v, static_cast<int>(level_of.size()));
    std::vector<int> level(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) level[i] = level_of.at(y[i]);

    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0) || !std::isfinite(sd))
        throw NotIdentifiableError("the predictor is constant");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;

    // Start from the marginal cumulative logits with beta = 0.
    Eigen::VectorXd params = Eigen::VectorXd::Zero(categories);
    {
        std::vector<double> count(categories, 0.0);
        for (int l : level) count[l] += 1.0;
        double cum = 0.0;
        for (int k = 0; k < categories - 1; ++k) {
            cum += count[k];
            const double q = cum / n;
            params[k] = std::log(q / (1.0 - q));
        }
    }
    auto span_of = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), v.size()); };

    std::string trace;
    OrdinalFit fit;
    auto current = evaluate(span_of(params), z, level, categories, true);
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const double gnorm = current.gradient.norm();
        trace += fmt::format("iter {:3d}  loglik {:.12g}  |grad| {:.3e}  beta_std {:.6g}\n", iter,
                             current.value, gnorm, params[categories - 1]);
        if (gnorm < options.gradient_tolerance) {
            fit.converged = true;
            fit.iterations = iter;
            break;
        }
        if (std::abs(params[categories - 1]) > options.separation_bound)
            throw SeparationError(fmt::format(
                "complete separation: standardized coefficient {:.3g} with gradient norm {:.3e}",
                params[categories - 1], gnorm));
        if (iter == options.max_iterations) break;

        const Eigen::MatrixXd info = -current.hessian;
        const Eigen::VectorXd step = info.ldlt().solve(current.gradient);
        if (!step.allFinite())
            throw ConvergenceError("Newton step is not finite", trace);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            Eigen::VectorXd candidate = params + t * step;
            if (!increasing(candidate, categories)) continue;
            auto next = evaluate(span_of(candidate), z, level, categories, true);
            if (std::isfinite(next.value) && next.value >= current.value - 1e-12 * std::abs(current.value)) {
                params = std::move(candidate);
                current = std::move(next);
                accepted = true;
                break;
            }
        }
        if (!accepted) throw ConvergenceError("line search failed to improve the likelihood", trace);
    }
    if (!fit.converged)
        throw ConvergenceError(fmt::format("no convergence after {} iterations", options.max_iterations),
                               trace);

    const Eigen::MatrixXd covariance = (-current.hessian).inverse();
    const double beta_std = params[categories - 1];
    const double se_std = std::sqrt(covariance(categories - 1, categories - 1));

    fit.beta = beta_std / sd;
    fit.std_error = se_std / sd;
    for (int k = 0; k < categories - 1; ++k) fit.thresholds.push_back(params[k] + fit.beta * mean);
    fit.z = fit.beta / fit.std_error;
    fit.p_value = normal_two_sided_p(fit.z);
    fit.log_likelihood = current.value;
    return fit;
}

KWResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ValidationError("groups", "need at least two groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty())
            throw ValidationError("groups[" + std::to_string(g) + "]", "empty group");
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    const std::size_t total = pooled.size();
    if (total < 3) throw ValidationError("groups", "need at least 3 observations");
    std::sort(pooled.begin(), pooled.end());

    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < total;) {
        std::size_t j = i;
        while (j < total && pooled[j].first == pooled[i].first) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += avg_rank;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }

    const double N = static_cast<double>(total);
    KWResult r;
    r.df = static_cast<int>(groups.size()) - 1;
    const double correction = 1.0 - tie_term / (N * N * N - N);
    if (correction <= 0.0) {
        r.H = 0.0;
        r.p_value = 1.0;
        return r;
    }
    double sum = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        sum += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    const double h = 12.0 / (N * (N + 1.0)) * sum - 3.0 * (N + 1.0);
    r.H = std::max(0.0, h / correction);
    r.p_value = chi_square_sf(r.H, r.df);
    return r;
}

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 10000;

// Regularized lower incomplete gamma P(a, x) by its power series.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxTerms; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi_square_sf(double x, int df) {
    if (df < 1) throw DomainError("chi-square degrees of freedom must be >= 1");
    if (!(x >= 0.0)) throw DomainError("chi-square statistic must be >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double a = df / 2.0;
    const double half = x / 2.0;
    const double q = half < a + 1.0 ? 1.0 - gamma_p_series(a, half) : gamma_q_fraction(a, half);
    return std::clamp(q, 0.0, 1.0);
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace dforge
