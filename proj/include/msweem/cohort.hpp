#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msweem/data_model.hpp"

namespace msweem {

// One annotation's deviation from its item's consensus, as a fraction of
// the largest deviation anywhere in the dataset.
struct AlignmentScore {
    std::string text_id;
    std::string annotator_id;
    double score = 0.0;  // in [0,1]
    bool aligned = false;
};

struct AlignmentConfig {
    double threshold = 0.5;  // aligned iff score <= threshold
};

// Requires >= 2 ratings per item. The rating label is typically an ordinal
// scale (e.g. 1..5 grammatical quality).
std::vector<AlignmentScore> alignment_scores(const Dataset& dataset,
                                             const std::string& rating_label,
                                             const AlignmentConfig& config = {});

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom; two-sided p through the exact t distribution.
WelchResult welch_t_test(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b);

struct CohortGroup {
    std::string name;
    std::size_t n = 0;
    double mean_worktime = 0.0;
    double var_worktime = 0.0;
    double mean_throughput = 0.0;
    double var_throughput = 0.0;
};

struct CohortStats {
    CohortGroup master;
    CohortGroup normal;
    WelchResult worktime_test;
    WelchResult throughput_test;
};

// Master-vs-normal comparison of worktime and throughput across records.
CohortStats cohort_stats(const Dataset& dataset);

struct LogisticFit {
    std::vector<std::string> terms;
    std::vector<double> beta;
    std::vector<double> se;
    std::vector<double> z;
    std::vector<double> p;
    bool converged = false;
    std::size_t iterations = 0;
    double log_likelihood = 0.0;
    std::string diagnostic;
};

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares; standard errors from the inverse observed information, Wald
// two-sided p-values. Column names must align with the design matrix.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& design,
                         const std::vector<int>& outcome,
                         const std::vector<std::string>& terms,
                         std::size_t max_iterations = 100, double tolerance = 1e-8);

// The qualification-moderation model: aligned-flag regressed on speed
// (min-max-normalized worktime), normalized throughput, the master flag,
// and the master interactions.
LogisticFit fit_logistic_cohort(const Dataset& dataset, const std::string& rating_label,
                                const AlignmentConfig& config = {});

// Coefficient table rows: term,beta,se,z,p.
void write_logistic_fit(std::ostream& out, const LogisticFit& fit);
void write_cohort_stats(std::ostream& out, const CohortStats& stats);

}  // namespace msweem
