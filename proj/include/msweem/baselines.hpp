#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "msweem/data_model.hpp"

namespace msweem {

// Modal label; ties resolve toward the lower label value.
int majority_vote(const std::vector<int>& labels);

// Items x annotators categorical label matrix, sparse by item.
struct AnnotationMatrix {
    std::vector<std::string> item_ids;
    std::vector<std::string> annotator_ids;
    int n_classes = 0;
    // annotations[i] = (annotator index, label in [0, n_classes))
    std::vector<std::vector<std::pair<std::size_t, int>>> annotations;

    static AnnotationMatrix from_dataset(const Dataset& dataset, const std::string& label);
    void validate() const;
};

struct MaceConfig {
    std::size_t max_iterations = 200;
    double tolerance = 1e-7;
    std::size_t restarts = 10;
    std::uint64_t seed = 1;
    double smoothing = 0.5;  // additive pseudo-counts in the M-step
};

// Generative story: true label T_i uniform over K; per-annotation spam
// indicator S_im ~ Bernoulli(theta_m); a spammed annotation is drawn from
// the annotator's spam distribution xi_m, otherwise it copies T_i.
struct MaceModel {
    std::vector<double> spam_prob;               // theta_m, one per annotator
    std::vector<std::vector<double>> spam_dist;  // xi_m over K classes
    std::vector<std::vector<double>> posteriors; // per item over K classes
    std::vector<std::string> item_ids;
    std::vector<std::string> annotator_ids;
    int n_classes = 0;
    double log_likelihood = 0.0;
    double objective = 0.0;  // log-likelihood + smoothing prior terms
    std::size_t iterations = 0;

    const std::vector<double>& posterior(const std::string& item_id) const;
    int hard_label(const std::string& item_id) const;  // argmax, ties lower
};

MaceModel mace_fit(const AnnotationMatrix& matrix, const MaceConfig& config);

// Single EM run from an explicit initialization (used by verification
// oracles that sweep a grid of starting points).
MaceModel mace_fit_from(const AnnotationMatrix& matrix, const MaceConfig& config,
                        const std::vector<double>& theta0,
                        const std::vector<std::vector<double>>& xi0);

// Export rows: item_id,label,posterior.
void write_mace_posteriors(std::ostream& out, const MaceModel& model);

}  // namespace msweem
