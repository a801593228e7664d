#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "msweem/data_model.hpp"

namespace msweem {

// Behavioral model of one simulated annotator. Effective competence on a
// task is clamp(base - fatigue_rate * task_fraction
//                    - speeding_penalty * [worktime < speeding_threshold],
//               0.5, 1), so a binary annotation is never worse than chance.
struct AnnotatorProfile {
    std::string annotator_id;
    double base_competence = 0.9;  // in (0.5, 1]
    double fatigue_rate = 0.0;
    double speed_mean_s = 60.0;  // median of the log-normal worktime draw
    double speed_sd_log = 0.4;   // sd in log space
    double speeding_threshold_s = 30.0;
    double speeding_penalty = 0.0;
    Qualification qualification = Qualification::normal;

    double effective_competence(double task_fraction, bool speeding) const;
};

struct SynthConfig {
    std::size_t n_texts = 2000;
    std::size_t n_aux = 4;
    std::vector<std::string> aux_names;  // default aux_1..aux_n
    std::string target_name = "target";

    // Gold target = [sigmoid(w . aux + b) > 0.5], then flipped with
    // probability label_noise.
    std::vector<double> link_weights;  // default: 2.0 per auxiliary label
    double link_bias = 0.0;            // default: -(sum of weights)/2
    double label_noise = 0.05;         // in [0, 0.5)
    double aux_prevalence = 0.5;
    // Probability that a text's signal token reflects its gold auxiliary
    // bit; below 1 the texts are ambiguous and content-only classifiers
    // stay weak, as with real behavioral labels.
    double text_signal = 1.0;

    std::size_t annotators_per_text = 5;
    std::size_t n_annotators = 20;
    // Probability that a text's crew is drawn from one speed-half of the
    // pool instead of uniformly; models workers grabbing HIT batches in
    // sessions, which concentrates fast workers on some texts.
    double crew_clustering = 0.0;
    double master_fraction = 0.3;
    double base_competence_lo = 0.85;
    double base_competence_hi = 0.98;
    double fatigue_rate = 0.0;
    double speeding_penalty = 0.0;
    double speeding_threshold_s = 30.0;
    double speed_mean_lo_s = 8.0;
    double speed_mean_hi_s = 400.0;
    double speed_sd_log = 0.4;

    std::size_t filler_tokens_lo = 3;
    std::size_t filler_tokens_hi = 12;
    std::size_t filler_vocab = 64;

    std::uint64_t seed = 1;

    std::vector<std::string> effective_aux_names() const;
    std::vector<double> effective_link_weights() const;
    double effective_link_bias() const;
    void validate() const;
};

std::vector<AnnotatorProfile> generate_annotators(const SynthConfig& config,
                                                  std::uint64_t seed);

struct SynthResult {
    Dataset dataset;  // includes the gold target column
    // True auxiliary labels per text id, for verification oracles.
    std::map<std::string, std::vector<int>> gold_aux;
};

SynthResult generate_dataset(const std::vector<AnnotatorProfile>& profiles,
                             const SynthConfig& config, std::uint64_t seed);

// Profile manifest rows:
// annotator_id,qualification,base_competence,fatigue_rate,speed_mean_s,
// speed_sd_log,speeding_threshold_s,speeding_penalty
void write_profile_manifest(std::ostream& out,
                            const std::vector<AnnotatorProfile>& profiles);

}  // namespace msweem
