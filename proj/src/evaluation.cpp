#include "msweem/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "msweem/csv.hpp"
#include "msweem/error.hpp"
#include "msweem/rng.hpp"

namespace msweem {

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& golds) {
    if (predictions.size() != golds.size())
        throw ArgumentError("macro_f1: predictions/golds length mismatch");
    if (predictions.empty()) throw ArgumentError("macro_f1: empty inputs");

    std::set<int> classes(predictions.begin(), predictions.end());
    classes.insert(golds.begin(), golds.end());

    double sum = 0.0;
    for (int cls : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool p = predictions[i] == cls;
            const bool g = golds[i] == cls;
            if (p && g) ++tp;
            else if (p) ++fp;
            else if (g) ++fn;
        }
        const double denom = static_cast<double>(2 * tp + fp + fn);
        sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return sum / static_cast<double>(classes.size());
}

const ScoreRow* Report::find(const std::string& name) const {
    if (name == "base") return &base;
    if (name == "direct") return &direct;
    for (const auto& row : variants)
        if (row.name == name) return &row;
    return nullptr;
}

namespace {

struct SeedOutcome {
    std::map<std::string, double> variant_f1;
    double base_f1 = 0.0;
    double direct_f1 = 0.0;
};

std::vector<int> observed_targets(const Dataset& split, const std::string& target) {
    std::vector<int> out;
    out.reserve(split.n_texts());
    for (const auto& t : split.texts())
        out.push_back(split.observed_value(t.text_id, target));
    return out;
}

SeedOutcome run_one_seed(const Dataset& dataset, const ExperimentConfig& config,
                         const std::vector<ObservationMeta>& metas,
                         std::uint64_t seed) {
    const auto& schema = dataset.schema();
    SplitSpec spec = config.split;
    spec.seed = seed;
    const SplitResult split = stratified_split(dataset, spec, schema.target);

    // One base learner per auxiliary label; shared across all variants.
    std::vector<BaseLearner> learners;
    for (std::size_t j = 0; j < schema.auxiliary.size(); ++j) {
        LearnerConfig lc = config.learner;
        lc.seed = seed ^ (0x9E3779B9ULL * (j + 1));
        learners.push_back(
            train_base_learner(split.train, split.val, schema.auxiliary[j], lc));
    }

    auto encode_split = [&](const Dataset& part) {
        std::vector<EncodingVector> out;
        out.reserve(part.n_texts());
        for (const auto& t : part.texts())
            out.push_back(build_encoding(learners, dataset, t.text_id));
        return out;
    };
    std::vector<EncodingVector> train_enc = encode_split(split.train);
    std::vector<EncodingVector> val_enc = encode_split(split.val);
    std::vector<EncodingVector> test_enc = encode_split(split.test);

    std::vector<double> priors;
    if (config.prior_weighting) {
        priors = compute_priors(split.train);
        auto weight_all = [&](std::vector<EncodingVector>& encs) {
            for (auto& e : encs) e = apply_prior_weighting(e, priors);
        };
        weight_all(train_enc);
        weight_all(val_enc);
        weight_all(test_enc);
    }

    // Targets everywhere are the observed crowd labels (majority vote; the
    // gold column backs the target only when no annotator labeled it). Test
    // scoring against crowd labels mirrors how such campaigns are evaluated.
    const std::vector<int> train_y = observed_targets(split.train, schema.target);
    const std::vector<int> val_y = observed_targets(split.val, schema.target);
    const std::vector<int> test_y = observed_targets(split.test, schema.target);

    std::map<std::string, const ObservationMeta*> meta_of;
    for (const auto& m : metas) meta_of[m.text_id] = &m;
    std::vector<const ObservationMeta*> train_metas;
    for (const auto& t : split.train.texts()) train_metas.push_back(meta_of.at(t.text_id));

    auto score_model = [&](const EnsembleModel& model,
                           const std::vector<EncodingVector>& encodings) {
        std::vector<int> preds;
        preds.reserve(encodings.size());
        for (const auto& e : encodings) preds.push_back(predict_target(model, e).label);
        return macro_f1(preds, test_y);
    };

    SeedOutcome outcome;

    // Unweighted (base) ensemble.
    {
        EnsembleConfig ec = config.ensemble;
        ec.seed = seed ^ 0xBA5EBA11ULL;
        EnsembleModel model = train_ensemble_mlp(train_enc, train_y, val_enc, val_y, ec);
        model.priors = priors;
        outcome.base_f1 = score_model(model, test_enc);
    }

    // Meta-weighted variants.
    if (!config.variants.empty()) {
        std::vector<ObservationMeta> train_meta_values;
        train_meta_values.reserve(train_metas.size());
        for (const auto* m : train_metas) train_meta_values.push_back(*m);
        const VariantStats stats = compute_variant_stats(
            train_meta_values, schema.auxiliary.size(), config.quad_tp3, config.quad_tp4);

        for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
            const VariantKind kind = config.variants[vi];
            auto weight_split = [&](const std::vector<EncodingVector>& encs) {
                std::vector<EncodingVector> out;
                out.reserve(encs.size());
                for (const auto& e : encs) {
                    const VariantWeight w =
                        compute_variant_weight(*meta_of.at(e.text_id), kind, stats);
                    out.push_back(apply_meta_weighting(e, w));
                }
                return out;
            };
            const auto w_train = weight_split(train_enc);
            const auto w_val = weight_split(val_enc);
            const auto w_test = weight_split(test_enc);

            EnsembleConfig ec = config.ensemble;
            ec.seed = seed ^ (0xC0FFEEULL * (vi + 1));
            EnsembleModel model = train_ensemble_mlp(w_train, train_y, w_val, val_y, ec);
            model.priors = priors;
            model.variant = to_string(kind);
            outcome.variant_f1[to_string(kind)] = score_model(model, w_test);
        }
    }

    // Direct prediction: a base learner trained on the target label itself.
    {
        LearnerConfig lc = config.learner;
        lc.seed = seed ^ 0xD12EC7ULL;
        const BaseLearner direct =
            train_base_learner(split.train, split.val, schema.target, lc);
        std::vector<int> preds;
        preds.reserve(split.test.n_texts());
        for (const auto& t : split.test.texts()) {
            std::set<std::string> ids;
            for (std::size_t ri : split.test.record_indices(t.text_id))
                ids.insert(split.test.records()[ri].annotator_id);
            preds.push_back(predict_label(direct, t.text,
                                          {ids.begin(), ids.end()}));
        }
        outcome.direct_f1 = macro_f1(preds, test_y);
    }

    return outcome;
}

std::string snapshot_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "experiment_id=" << config.experiment_id << '\n';
    out << "split=" << csv::format_double(config.split.train) << '/'
        << csv::format_double(config.split.val) << '/'
        << csv::format_double(config.split.test) << '\n';
    out << "seeds=";
    for (std::size_t i = 0; i < config.seeds.size(); ++i)
        out << (i ? "," : "") << config.seeds[i];
    out << '\n';
    out << "variants=";
    for (std::size_t i = 0; i < config.variants.size(); ++i)
        out << (i ? "," : "") << to_string(config.variants[i]);
    out << '\n';
    out << "prior_weighting=" << (config.prior_weighting ? "on" : "off") << '\n';
    out << "learner=" << to_string(config.learner.kind)
        << " dim=" << config.learner.features.dim
        << " epochs=" << config.learner.epochs
        << " batch=" << config.learner.batch_size
        << " lr=" << csv::format_double(config.learner.learning_rate)
        << " annotator_ids=" << (config.learner.use_annotator_ids ? "on" : "off") << '\n';
    out << "ensemble_hidden=";
    for (std::size_t i = 0; i < config.ensemble.hidden.size(); ++i)
        out << (i ? "," : "") << config.ensemble.hidden[i];
    out << " epochs=" << config.ensemble.epochs
        << " batch=" << config.ensemble.batch_size
        << " lr=" << csv::format_double(config.ensemble.learning_rate) << '\n';
    out << "quad_tp3=" << csv::format_double(config.quad_tp3.a) << ','
        << csv::format_double(config.quad_tp3.b) << ','
        << csv::format_double(config.quad_tp3.c) << '\n';
    out << "quad_tp4=" << csv::format_double(config.quad_tp4.a) << ','
        << csv::format_double(config.quad_tp4.b) << ','
        << csv::format_double(config.quad_tp4.c) << '\n';
    return out.str();
}

}  // namespace

Report run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
    if (config.seeds.size() < 2)
        throw ArgumentError("run_experiment: need at least 2 seeds");

    std::vector<std::uint64_t> seeds(config.seeds.begin(), config.seeds.end());
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    // Meta-features are normalization-dataset-wide and split-independent.
    const std::vector<ObservationMeta> metas = compute_observation_meta(dataset);

    std::vector<SeedOutcome> outcomes(seeds.size());
    const std::size_t jobs = std::max<std::size_t>(1, config.jobs);
    if (jobs == 1 || seeds.size() == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            outcomes[i] = run_one_seed(dataset, config, metas, seeds[i]);
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(seeds.size());
        for (std::size_t w = 0; w < std::min(jobs, seeds.size()); ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= seeds.size()) return;
                    try {
                        outcomes[i] = run_one_seed(dataset, config, metas, seeds[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    Report report;
    report.experiment_id = config.experiment_id;
    report.seeds = seeds;
    report.config_snapshot = snapshot_config(config);

    auto summarize = [&](const std::string& name, auto getter) {
        ScoreRow row;
        row.name = name;
        for (std::size_t i = 0; i < seeds.size(); ++i) row.per_seed.push_back(getter(i));
        row.mean = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) /
                   static_cast<double>(row.per_seed.size());
        return row;
    };

    for (const VariantKind kind : config.variants) {
        const std::string name = to_string(kind);
        report.variants.push_back(summarize(
            name, [&](std::size_t i) { return outcomes[i].variant_f1.at(name); }));
    }
    report.base = summarize("base", [&](std::size_t i) { return outcomes[i].base_f1; });
    report.direct =
        summarize("direct", [&](std::size_t i) { return outcomes[i].direct_f1; });
    return report;
}

Dataset stratified_subsample(const Dataset& dataset, std::size_t size,
                             std::uint64_t seed) {
    if (size > dataset.n_texts())
        throw ArgumentError("subsample size exceeds dataset size");
    if (size == dataset.n_texts()) return dataset;
    if (size == 0) throw ArgumentError("subsample size must be >= 1");

    const std::string& target = dataset.schema().target;
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& t : dataset.texts())
        by_class[dataset.observed_value(t.text_id, target)].push_back(t.text_id);

    const double total = static_cast<double>(dataset.n_texts());
    std::vector<std::pair<double, int>> remainders;  // (fraction, class)
    std::map<int, std::size_t> take;
    std::size_t assigned = 0;
    for (const auto& [cls, ids] : by_class) {
        const double exact =
            static_cast<double>(size) * static_cast<double>(ids.size()) / total;
        take[cls] = static_cast<std::size_t>(std::floor(exact));
        assigned += take[cls];
        remainders.emplace_back(exact - std::floor(exact), cls);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < size; ++k, ++assigned)
        ++take[remainders[k % remainders.size()].second];

    Rng rng(seed ^ 0x5AB5A317ULL);
    std::vector<std::string> chosen;
    for (auto& [cls, ids] : by_class) {
        rng.shuffle(ids);
        const std::size_t n = std::min(take[cls], ids.size());
        for (std::size_t k = 0; k < n; ++k) chosen.push_back(ids[k]);
    }
    std::unordered_map<std::string, std::size_t> order_of;
    for (std::size_t i = 0; i < dataset.texts().size(); ++i)
        order_of[dataset.texts()[i].text_id] = i;
    std::sort(chosen.begin(), chosen.end(), [&](const auto& a, const auto& b) {
        return order_of[a] < order_of[b];
    });
    return dataset.subset(chosen);
}

AblationReport ablate_dataset_size(const Dataset& dataset, const ExperimentConfig& config,
                                   const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw ArgumentError("ablation: no sizes given");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw ArgumentError("ablation: sizes must be strictly increasing");
    if (sizes.back() > dataset.n_texts())
        throw ArgumentError("ablation: size exceeds dataset size");

    AblationReport report;
    for (std::size_t size : sizes) {
        if (size < 250)
            report.warnings.push_back("size " + std::to_string(size) +
                                      " is below the smallest benchmarked size (250)");
        const Dataset sample =
            stratified_subsample(dataset, size, config.seeds.front() + size);
        const Report r = run_experiment(sample, config);
        AblationRow row;
        row.size = size;
        for (const auto& v : r.variants) row.variant_means.emplace_back(v.name, v.mean);
        row.base_mean = r.base.mean;
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_report_text(std::ostream& out, const Report& report) {
    out << "experiment: " << report.experiment_id << '\n';
    out << "seeds:";
    for (auto s : report.seeds) out << ' ' << s;
    out << "\n\n";
    out << "model,mean_macro_f1\n";
    auto line = [&](const ScoreRow& row) {
        out << row.name << ',' << csv::format_double(row.mean) << '\n';
    };
    line(report.direct);
    line(report.base);
    for (const auto& v : report.variants) line(v);
    out << "\nconfig:\n" << report.config_snapshot;
}

void write_report_scores_csv(std::ostream& out, const Report& report) {
    out << "variant,seed,macro_f1\n";
    auto rows = [&](const ScoreRow& row) {
        for (std::size_t i = 0; i < report.seeds.size(); ++i)
            out << row.name << ',' << report.seeds[i] << ','
                << csv::format_double(row.per_seed[i]) << '\n';
    };
    rows(report.direct);
    rows(report.base);
    for (const auto& v : report.variants) rows(v);
}

void write_report_summary_csv(std::ostream& out, const Report& report) {
    out << "variant,mean_macro_f1,n_seeds\n";
    auto row = [&](const ScoreRow& r) {
        out << r.name << ',' << csv::format_double(r.mean) << ',' << report.seeds.size()
            << '\n';
    };
    row(report.direct);
    row(report.base);
    for (const auto& v : report.variants) row(v);
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
    out << "size,variant,score\n";
    for (const auto& row : report.rows) {
        out << row.size << ",base," << csv::format_double(row.base_mean) << '\n';
        for (const auto& [name, score] : row.variant_means)
            out << row.size << ',' << name << ',' << csv::format_double(score) << '\n';
    }
}

}  // namespace msweem
