#pragma once

// Length-bias diagnostics.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dforge/model.hpp"

namespace dforge {

struct LengthMeasure {
    std::string dialogue_id;
    std::size_t chars = 0;  // UTF-8 code points of the rendered transcript
    std::size_t words = 0;  // whitespace-delimited tokens
};

LengthMeasure measure_length(const Dialogue& dialogue);

struct BucketedScore {
    std::string dialogue_id;
    std::int64_t score = 0;  // wins - losses
    int bucket = 1;          // 0 low, 1 mid, 2 high
};

// Three equal-width buckets over [min, max] of the observed scores:
// [m, m+w), [m+w, m+2w), [m+2w, M] with w = (M-m)/3. All-equal scores land in
// the middle bucket.
std::vector<int> bucketize(std::span<const std::int64_t> scores);

// Scores each dialogue by wins - losses over the valid judgments it appears
// in, then buckets. Output follows `dialogues` order. Throws ValidationError
// if there are no judgments or a dialogue has no valid judgment.
std::vector<BucketedScore> score_and_bucket(std::span<const Judgment> judgments,
                                            std::span<const Dialogue> dialogues);

struct OrdinalFit {
    double beta = 0.0;
    std::vector<double> thresholds;  // strictly increasing, one fewer than categories
    double std_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct OrdinalOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
    double separation_bound = 50.0;  // on the standardized-x coefficient
};

// Proportional-odds logit model P(y <= k | x) = logistic(theta_k - beta * x),
// fitted by damped Newton on standardized x; beta and its standard error are
// reported on the original scale with a two-sided Wald test. The categories
// are the distinct values of y in increasing order.
// Throws NotIdentifiableError (constant x or a single category),
// SeparationError, or ConvergenceError carrying the iteration trace.
OrdinalFit fit_ordinal(std::span<const double> x, std::span<const int> y,
                       const OrdinalOptions& options = {});

namespace ordinal {

// Parameters are (theta_1..theta_{K-1}, beta); `level` holds 0..K-1.
double log_likelihood(std::span<const double> params, std::span<const double> x,
                      std::span<const int> level, int categories);
std::vector<double> gradient(std::span<const double> params, std::span<const double> x,
                             std::span<const int> level, int categories);

}  // namespace ordinal

struct KWResult {
    double H = 0.0;  // tie-corrected
    int df = 1;
    double p_value = 1.0;
};

// Throws ValidationError on fewer than two groups, an empty group, or N < 3.
KWResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Upper tail of the chi-square distribution with `df` degrees of freedom.
// Throws DomainError for x < 0 or df < 1.
double chi_square_sf(double x, int df);

// Two-sided standard-normal tail probability P(|Z| >= |z|).
double normal_two_sided_p(double z);

}  // namespace dforge
