#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "msweem/base_learners.hpp"
#include "msweem/data_model.hpp"
#include "msweem/ensemble.hpp"
#include "msweem/metafeatures.hpp"

namespace msweem {

// Unweighted mean of per-class F1 scores over the classes present in
// predictions or golds.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& golds);

struct ExperimentConfig {
    std::string experiment_id = "experiment";
    SplitSpec split;                   // seed field is overridden per run seed
    std::vector<VariantKind> variants{kAllVariantKinds,
                                      kAllVariantKinds + std::size(kAllVariantKinds)};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    bool prior_weighting = true;
    LearnerConfig learner;
    EnsembleConfig ensemble;
    QuadraticCoefficients quad_tp3 = default_quad_tp3();
    QuadraticCoefficients quad_tp4 = default_quad_tp4();
    std::size_t jobs = 1;
};

struct ScoreRow {
    std::string name;  // variant name, "base", or "direct"
    std::vector<double> per_seed;  // aligned with Report::seeds
    double mean = 0.0;
};

struct Report {
    std::string experiment_id;
    std::vector<std::uint64_t> seeds;  // sorted, deduplicated
    std::vector<ScoreRow> variants;
    ScoreRow base;
    ScoreRow direct;
    std::string config_snapshot;

    const ScoreRow* find(const std::string& name) const;
};

// The full pipeline per seed: split, train base learners, encode, weight,
// train the ensemble head, score test macro-F1 against the gold-preferring
// target; averaged over seeds. The unweighted ensemble and the
// direct-prediction learner are always scored alongside.
Report run_experiment(const Dataset& dataset, const ExperimentConfig& config);

struct AblationRow {
    std::size_t size = 0;
    std::vector<std::pair<std::string, double>> variant_means;
    double base_mean = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows;  // sizes strictly increasing
    std::vector<std::string> warnings;
};

// Paired stratified subsamples (identical across variants at each size),
// each pushed through run_experiment.
AblationReport ablate_dataset_size(const Dataset& dataset, const ExperimentConfig& config,
                                   const std::vector<std::size_t>& sizes);

// Stratified subsample of exactly `size` texts, deterministic in `seed`.
Dataset stratified_subsample(const Dataset& dataset, std::size_t size,
                             std::uint64_t seed);

void write_report_text(std::ostream& out, const Report& report);
void write_report_scores_csv(std::ostream& out, const Report& report);
void write_report_summary_csv(std::ostream& out, const Report& report);
void write_ablation_csv(std::ostream& out, const AblationReport& report);

}  // namespace msweem
