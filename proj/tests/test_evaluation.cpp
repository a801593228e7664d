#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "msweem/error.hpp"
#include "msweem/evaluation.hpp"
#include "msweem/synthgen.hpp"

using namespace msweem;

TEST_SUITE_BEGIN("evaluation");

namespace {

// Small synthetic campaign + fast experiment settings for pipeline tests.
SynthConfig small_synth() {
    SynthConfig config;
    config.n_texts = 150;
    config.n_aux = 2;
    config.annotators_per_text = 3;
    config.n_annotators = 8;
    config.speeding_penalty = 0.2;
    config.label_noise = 0.05;
    config.seed = 4;
    return config;
}

ExperimentConfig fast_experiment() {
    ExperimentConfig config;
    config.variants = {VariantKind::PC1};
    config.seeds = {1, 2};
    config.learner.features.dim = 256;
    config.learner.features.ngram_orders = {1};
    config.learner.epochs = 10;
    config.learner.batch_size = 32;
    config.learner.learning_rate = 0.1;
    config.ensemble.epochs = 20;
    config.ensemble.learning_rate = 0.02;
    return config;
}

Dataset small_dataset() {
    const SynthConfig config = small_synth();
    const auto profiles = generate_annotators(config, config.seed);
    return generate_dataset(profiles, config, config.seed).dataset;
}

}  // namespace

TEST_CASE("macro F1 equals hand-computed confusion-matrix values") {
    CHECK(macro_f1({1, 0, 1}, {1, 0, 1}) == doctest::Approx(1.0).epsilon(1e-15));
    // Both classes score F1 = 0.5 on this cross pattern.
    CHECK(std::fabs(macro_f1({1, 1, 0, 0}, {1, 0, 1, 0}) - 0.5) < 1e-12);
    // All-negative predictions on 9/1 data: F1(0) = 18/19, F1(1) = 0.
    CHECK(std::fabs(macro_f1({0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                             {0, 0, 0, 0, 0, 0, 0, 0, 0, 1}) -
                    9.0 / 19.0) < 1e-12);
    // Three-class case worked by hand: 1, 2/3, 2/3.
    CHECK(std::fabs(macro_f1({0, 1, 2, 2}, {0, 1, 2, 1}) - 7.0 / 9.0) < 1e-12);
    // Classes absent from both sides are skipped entirely.
    CHECK(macro_f1({0, 0}, {0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(macro_f1({1, 1, 1, 1}, {0, 0, 0, 0}) == doctest::Approx(0.0));
    CHECK(std::fabs(macro_f1({1, 0, 1, 1}, {1, 1, 0, 1}) - 1.0 / 3.0) < 1e-12);
    CHECK(macro_f1({1}, {1}) == doctest::Approx(1.0));
    CHECK(macro_f1({0}, {1}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(macro_f1({1, 0}, {1}), ArgumentError);
}

TEST_CASE("macro F1 is invariant to permutation and class relabeling") {
    const std::vector<int> preds = {1, 0, 1, 1, 0, 0, 1};
    const std::vector<int> golds = {1, 1, 0, 1, 0, 1, 0};
    const double base = macro_f1(preds, golds);

    std::vector<int> preds_p = {0, 1, 1, 0, 1, 0, 1};
    std::vector<int> golds_p = {1, 0, 1, 1, 1, 0, 0};  // same pairs, shuffled
    CHECK(macro_f1(preds_p, golds_p) == doctest::Approx(base).epsilon(1e-15));

    auto relabel = [](std::vector<int> v) {
        for (int& x : v) x = x == 1 ? 7 : 3;
        return v;
    };
    CHECK(macro_f1(relabel(preds), relabel(golds)) ==
          doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("experiment report has exactly the requested rows and valid means") {
    const Dataset dataset = small_dataset();
    const Report report = run_experiment(dataset, fast_experiment());

    REQUIRE(report.variants.size() == 1);
    CHECK(report.variants[0].name == "PC1");
    CHECK(report.find("base") != nullptr);
    CHECK(report.find("direct") != nullptr);
    CHECK(report.find("PC1") != nullptr);
    CHECK(report.find("WT1") == nullptr);
    REQUIRE(report.seeds == std::vector<std::uint64_t>{1, 2});

    for (const ScoreRow* row : {&report.base, &report.direct, &report.variants[0]}) {
        REQUIRE(row->per_seed.size() == 2);
        // Means recompute exactly from the stored per-seed values.
        CHECK(row->mean == (row->per_seed[0] + row->per_seed[1]) / 2.0);
        for (double f1 : row->per_seed) {
            CHECK(f1 >= 0.0);
            CHECK(f1 <= 1.0);
        }
    }
}

TEST_CASE("seed order does not change the report") {
    const Dataset dataset = small_dataset();
    ExperimentConfig config = fast_experiment();
    config.seeds = {1, 2};
    const Report a = run_experiment(dataset, config);
    config.seeds = {2, 1};
    const Report b = run_experiment(dataset, config);

    std::ostringstream sa, sb;
    write_report_scores_csv(sa, a);
    write_report_scores_csv(sb, b);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("repeated runs are byte-identical") {
    const Dataset dataset = small_dataset();
    const ExperimentConfig config = fast_experiment();
    const Report a = run_experiment(dataset, config);
    const Report b = run_experiment(dataset, config);
    std::ostringstream sa, sb, ta, tb;
    write_report_scores_csv(sa, a);
    write_report_scores_csv(sb, b);
    write_report_text(ta, a);
    write_report_text(tb, b);
    CHECK(sa.str() == sb.str());
    CHECK(ta.str() == tb.str());
}

TEST_CASE("worker count does not change the report") {
    const Dataset dataset = small_dataset();
    ExperimentConfig config = fast_experiment();
    config.jobs = 1;
    const Report serial = run_experiment(dataset, config);
    config.jobs = 3;
    const Report parallel = run_experiment(dataset, config);
    std::ostringstream a, b;
    write_report_scores_csv(a, serial);
    write_report_scores_csv(b, parallel);
    CHECK(a.str() == b.str());
}

TEST_CASE("requires at least two seeds") {
    const Dataset dataset = small_dataset();
    ExperimentConfig config = fast_experiment();
    config.seeds = {1};
    CHECK_THROWS_AS(run_experiment(dataset, config), ArgumentError);
}

TEST_CASE("stratified subsample is paired, stratified and identity at full size") {
    const Dataset dataset = small_dataset();
    const Dataset a = stratified_subsample(dataset, 60, 11);
    const Dataset b = stratified_subsample(dataset, 60, 11);
    REQUIRE(a.n_texts() == 60);
    auto ids = [](const Dataset& d) {
        std::vector<std::string> out;
        for (const auto& t : d.texts()) out.push_back(t.text_id);
        return out;
    };
    CHECK(ids(a) == ids(b));  // paired across variants by construction

    // Class proportion preserved within one observation.
    auto positives = [](const Dataset& d) {
        std::size_t n = 0;
        for (const auto& t : d.texts())
            if (d.observed_value(t.text_id, d.schema().target) == 1) ++n;
        return n;
    };
    const double global = static_cast<double>(positives(dataset)) /
                          static_cast<double>(dataset.n_texts());
    CHECK(std::fabs(static_cast<double>(positives(a)) - 60.0 * global) <= 1.0 + 1e-9);

    const Dataset full = stratified_subsample(dataset, dataset.n_texts(), 11);
    CHECK(full.n_texts() == dataset.n_texts());
    CHECK_THROWS_AS(stratified_subsample(dataset, dataset.n_texts() + 1, 1),
                    ArgumentError);
}

TEST_CASE("ablation runs each size and warns below the benchmarked floor") {
    const Dataset dataset = small_dataset();
    ExperimentConfig config = fast_experiment();
    const AblationReport report = ablate_dataset_size(dataset, config, {100, 150});
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].size == 100);
    CHECK(report.rows[1].size == 150);
    REQUIRE(report.warnings.size() == 2);  // both sizes below 250

    // Full-size row equals a plain experiment on the same dataset.
    const Report direct = run_experiment(dataset, config);
    CHECK(report.rows[1].base_mean == direct.base.mean);
    REQUIRE(report.rows[1].variant_means.size() == 1);
    CHECK(report.rows[1].variant_means[0].second == direct.variants[0].mean);

    CHECK_THROWS_AS(ablate_dataset_size(dataset, config, {100, 100}), ArgumentError);
    CHECK_THROWS_AS(ablate_dataset_size(dataset, config, {100, 9999}), ArgumentError);
}

TEST_CASE("ablation csv format") {
    AblationReport report;
    AblationRow row;
    row.size = 250;
    row.base_mean = 0.5;
    row.variant_means = {{"WT1", 0.625}};
    report.rows.push_back(row);
    std::ostringstream out;
    write_ablation_csv(out, report);
    CHECK(out.str() == "size,variant,score\n250,base,0.5\n250,WT1,0.625\n");
}

TEST_SUITE_END();
