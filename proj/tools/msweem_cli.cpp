#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "msweem/baselines.hpp"
#include "msweem/config.hpp"
#include "msweem/error.hpp"

namespace fs = std::filesystem;
using namespace msweem;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
};

RunConfig resolve_config(const GlobalFlags& flags) {
    if (flags.config_path.empty()) throw ConfigError("--config is required");
    RunConfig config = load_config(flags.config_path);
    if (flags.seed) {
        config.seed = *flags.seed;
        config.seed_explicit = true;
        config.synth.seed = *flags.seed;
        // Shift the experiment seed set so repeated-seed averaging still
        // covers the configured number of runs.
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < config.experiment.seeds.size(); ++i)
            seeds.push_back(*flags.seed + i);
        config.experiment.seeds = seeds;
    } else if (!config.seed_explicit) {
        if (const char* env = std::getenv("WEEM_SEED")) {
            config.seed = std::strtoull(env, nullptr, 10);
            config.synth.seed = config.seed;
        }
    }
    if (flags.jobs) config.experiment.jobs = *flags.jobs;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    return config;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path.string());
    out << content;
}

fs::path prepare_out_dir(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    write_file(fs::path(config.out_dir) / "config.json", effective_config_json(config));
    return config.out_dir;
}

Dataset load_input_dataset(const RunConfig& config, std::vector<IngestIssue>* issues) {
    if (config.use_synth) {
        const auto profiles = generate_annotators(config.synth, config.synth.seed);
        return generate_dataset(profiles, config.synth, config.synth.seed).dataset;
    }
    if (config.dataset_path.empty())
        throw ConfigError("config needs either a 'dataset' path or \"synth\": true");
    IngestSchema schema{config.target, config.auxiliary};
    return ingest_dataset(config.dataset_path, schema, issues);
}

int cmd_simulate(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    config.use_synth = true;
    config.synth.validate();
    const fs::path out = prepare_out_dir(config);

    const auto profiles = generate_annotators(config.synth, config.synth.seed);
    const SynthResult result =
        generate_dataset(profiles, config.synth, config.synth.seed);

    write_dataset(result.dataset, (out / "annotations.csv").string());
    std::ofstream manifest(out / "profiles.csv");
    write_profile_manifest(manifest, profiles);

    std::cout << "simulated " << result.dataset.n_texts() << " texts, "
              << result.dataset.records().size() << " annotation records -> " << out
              << "\n";
    return 0;
}

int cmd_ingest(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    std::vector<IngestIssue> issues;
    const Dataset dataset = load_input_dataset(config, &issues);
    const fs::path out = prepare_out_dir(config);

    write_dataset(dataset, (out / "dataset.csv").string());
    std::ostringstream summary;
    summary << "texts: " << dataset.n_texts() << "\n"
            << "records: " << dataset.records().size() << "\n"
            << "target: " << dataset.schema().target << "\n"
            << "auxiliary:";
    for (const auto& a : dataset.schema().auxiliary) summary << ' ' << a;
    summary << "\ngold values: " << dataset.gold().size() << "\n"
            << "malformed rows: " << issues.size() << "\n";
    for (const auto& issue : issues)
        summary << "  line " << issue.line << ": " << issue.message << "\n";
    write_file(out / "summary.txt", summary.str());
    std::cout << summary.str();
    return 0;
}

int cmd_featurize(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);

    const auto metas = compute_observation_meta(dataset);
    SplitSpec spec = config.experiment.split;
    spec.seed = config.experiment.seeds.front();
    const SplitResult split = stratified_split(dataset, spec, dataset.schema().target);

    std::vector<ObservationMeta> train_metas;
    std::set<std::string> train_ids;
    for (const auto& t : split.train.texts()) train_ids.insert(t.text_id);
    for (const auto& m : metas)
        if (train_ids.count(m.text_id)) train_metas.push_back(m);
    const VariantStats stats =
        compute_variant_stats(train_metas, dataset.aux_count(),
                              config.experiment.quad_tp3, config.experiment.quad_tp4);

    std::vector<VariantWeight> weights;
    for (const auto& m : metas)
        for (VariantKind kind : config.experiment.variants)
            weights.push_back(compute_variant_weight(m, kind, stats));

    std::ofstream table(out / "metafeatures.csv");
    write_variant_weights(table, weights);
    std::cout << "wrote " << weights.size() << " variant weights -> "
              << (out / "metafeatures.csv") << "\n";
    return 0;
}

int cmd_train_base(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);

    SplitSpec spec = config.experiment.split;
    spec.seed = config.experiment.seeds.front();
    const SplitResult split = stratified_split(dataset, spec, dataset.schema().target);

    EncodingTable encodings;
    std::ostringstream report;
    report << "label,val_macro_f1\n";
    std::vector<BaseLearner> learners;
    for (std::size_t j = 0; j < dataset.schema().auxiliary.size(); ++j) {
        const std::string& label = dataset.schema().auxiliary[j];
        LearnerConfig lc = config.experiment.learner;
        lc.seed = spec.seed ^ (0x9E3779B9ULL * (j + 1));
        BaseLearner learner = train_base_learner(split.train, split.val, label, lc);
        report << label << ',' << learner.best_val_macro_f1 << '\n';
        write_file(out / ("learner_" + label + ".json"), dump_learner(learner));
        learners.push_back(std::move(learner));
    }
    for (const auto& t : dataset.texts()) {
        const EncodingVector enc = build_encoding(learners, dataset, t.text_id);
        for (std::size_t j = 0; j < enc.values.size(); ++j)
            encodings.set(t.text_id, dataset.schema().auxiliary[j], enc.values[j]);
    }
    std::ofstream enc_out(out / "encodings.csv");
    write_encodings(enc_out, encodings);
    write_file(out / "base_report.txt", report.str());
    std::cout << report.str();
    return 0;
}

int cmd_train_ensemble(const GlobalFlags& flags, const std::string& variant_name,
                       const std::string& encodings_path) {
    RunConfig config = resolve_config(flags);
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);
    const auto& schema = dataset.schema();

    SplitSpec spec = config.experiment.split;
    spec.seed = config.experiment.seeds.front();
    const SplitResult split = stratified_split(dataset, spec, schema.target);

    // Raw encodings either from freshly trained native learners or from an
    // imported table produced by external models.
    auto encode = [&](const Dataset& part,
                      const std::vector<BaseLearner>& learners,
                      const EncodingTable* table) {
        std::vector<EncodingVector> encs;
        for (const auto& t : part.texts())
            encs.push_back(table ? build_encoding(*table, schema, t.text_id)
                                 : build_encoding(learners, dataset, t.text_id));
        return encs;
    };

    std::vector<BaseLearner> learners;
    EncodingTable imported;
    const EncodingTable* table = nullptr;
    if (!encodings_path.empty()) {
        imported = import_external_encodings(encodings_path);
        std::vector<std::string> all_ids;
        for (const auto& t : dataset.texts()) all_ids.push_back(t.text_id);
        imported.require_complete(all_ids, schema.auxiliary);
        table = &imported;
    } else {
        for (std::size_t j = 0; j < schema.auxiliary.size(); ++j) {
            LearnerConfig lc = config.experiment.learner;
            lc.seed = spec.seed ^ (0x9E3779B9ULL * (j + 1));
            learners.push_back(
                train_base_learner(split.train, split.val, schema.auxiliary[j], lc));
        }
    }

    auto train_enc = encode(split.train, learners, table);
    auto val_enc = encode(split.val, learners, table);
    auto test_enc = encode(split.test, learners, table);

    std::vector<double> priors;
    if (config.experiment.prior_weighting) {
        priors = compute_priors(split.train);
        for (auto* encs : {&train_enc, &val_enc, &test_enc})
            for (auto& e : *encs) e = apply_prior_weighting(e, priors);
    }

    if (!variant_name.empty()) {
        const VariantKind kind = variant_kind_from_string(variant_name);
        const auto metas = compute_observation_meta(dataset);
        std::map<std::string, const ObservationMeta*> meta_of;
        for (const auto& m : metas) meta_of[m.text_id] = &m;
        std::vector<ObservationMeta> train_metas;
        for (const auto& t : split.train.texts())
            train_metas.push_back(*meta_of.at(t.text_id));
        const VariantStats stats =
            compute_variant_stats(train_metas, schema.auxiliary.size(),
                                  config.experiment.quad_tp3, config.experiment.quad_tp4);
        for (auto* encs : {&train_enc, &val_enc, &test_enc})
            for (auto& e : *encs)
                e = apply_meta_weighting(
                    e, compute_variant_weight(*meta_of.at(e.text_id), kind, stats));
    }

    auto targets = [&](const Dataset& part) {
        std::vector<int> ys;
        for (const auto& t : part.texts())
            ys.push_back(part.observed_value(t.text_id, schema.target));
        return ys;
    };
    const auto train_y = targets(split.train);
    const auto val_y = targets(split.val);

    EnsembleConfig ec = config.experiment.ensemble;
    ec.seed = spec.seed;
    EnsembleModel model = train_ensemble_mlp(train_enc, train_y, val_enc, val_y, ec);
    model.priors = priors;
    model.variant = variant_name;

    std::vector<int> preds, golds;
    for (std::size_t i = 0; i < test_enc.size(); ++i) {
        preds.push_back(predict_target(model, test_enc[i]).label);
        golds.push_back(
            split.test.observed_value(split.test.texts()[i].text_id, schema.target));
    }
    const double test_f1 = macro_f1(preds, golds);

    write_file(out / "ensemble.json", dump_ensemble(model));
    std::ostringstream report;
    report << "variant: " << (variant_name.empty() ? "base" : variant_name) << "\n"
           << "stage: " << to_string(model.stage) << "\n"
           << "val_macro_f1: " << model.best_val_macro_f1 << "\n"
           << "test_macro_f1: " << test_f1 << "\n";
    write_file(out / "ensemble_report.txt", report.str());
    std::cout << report.str();

    std::ofstream enc_dump(out / "encodings_weighted.csv");
    std::vector<EncodingVector> all;
    all.insert(all.end(), train_enc.begin(), train_enc.end());
    all.insert(all.end(), val_enc.begin(), val_enc.end());
    all.insert(all.end(), test_enc.begin(), test_enc.end());
    write_encoding_vectors(enc_dump, all);
    return 0;
}

int cmd_evaluate(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);

    const Report report = run_experiment(dataset, config.experiment);

    std::ofstream text(out / "report.txt");
    write_report_text(text, report);
    std::ofstream scores(out / "scores.csv");
    write_report_scores_csv(scores, report);
    std::ofstream summary(out / "summary.csv");
    write_report_summary_csv(summary, report);

    std::ostringstream echo;
    write_report_text(echo, report);
    std::cout << echo.str();
    return 0;
}

int cmd_ablate(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    if (config.ablation_sizes.empty())
        throw ConfigError("config key 'ablation_sizes' is required for ablate");
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);

    const AblationReport report =
        ablate_dataset_size(dataset, config.experiment, config.ablation_sizes);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    std::ofstream csv_out(out / "ablation.csv");
    write_ablation_csv(csv_out, report);
    std::ostringstream echo;
    write_ablation_csv(echo, report);
    std::cout << echo.str();
    return 0;
}

int cmd_cohort(const GlobalFlags& flags) {
    RunConfig config = resolve_config(flags);
    if (config.rating_label.empty())
        throw ConfigError("config key 'rating_label' is required for cohort");
    const Dataset dataset = load_input_dataset(config, nullptr);
    const fs::path out = prepare_out_dir(config);

    std::ostringstream report;
    const CohortStats stats = cohort_stats(dataset);
    write_cohort_stats(report, stats);
    const LogisticFit fit =
        fit_logistic_cohort(dataset, config.rating_label, config.alignment);
    report << "\n";
    write_logistic_fit(report, fit);

    write_file(out / "cohort.txt", report.str());
    std::ofstream coef(out / "coefficients.csv");
    write_logistic_fit(coef, fit);
    std::cout << report.str();
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    bool printed = false;
    for (const char* name : {"report.txt", "summary.csv", "ablation.csv", "cohort.txt",
                             "ensemble_report.txt", "base_report.txt", "summary.txt"}) {
        const fs::path p = dir / name;
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        std::cout << "== " << name << " ==\n" << in.rdbuf() << "\n";
        printed = true;
    }
    if (!printed) throw ArgumentError("no report artifacts found in " + run_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metadata-sensitive weighted-encoding ensemble toolkit"};
    app.require_subcommand(1);

    GlobalFlags flags;
    std::string variant_name, encodings_path, run_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config,-c", flags.config_path, "run config file (JSON)");
        cmd->add_option("--out,-o", flags.out_dir, "output directory override");
        cmd->add_option("--seed", flags.seed, "seed override");
        cmd->add_option("--jobs", flags.jobs, "worker cap for independent runs");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic campaign");
    add_common(simulate);
    CLI::App* ingest = app.add_subcommand("ingest", "validate and normalize a dataset");
    add_common(ingest);
    CLI::App* featurize =
        app.add_subcommand("featurize", "export per-observation variant weights");
    add_common(featurize);
    CLI::App* train_base =
        app.add_subcommand("train-base", "train per-label base learners");
    add_common(train_base);
    CLI::App* train_ensemble =
        app.add_subcommand("train-ensemble", "train the weighted ensemble head");
    add_common(train_ensemble);
    train_ensemble->add_option("--variant", variant_name,
                               "weighting variant (default: unweighted base)");
    train_ensemble->add_option("--encodings", encodings_path,
                               "import external encodings instead of training");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "full multi-seed experiment with report");
    add_common(evaluate);
    CLI::App* ablate = app.add_subcommand("ablate", "dataset-size ablation");
    add_common(ablate);
    CLI::App* cohort =
        app.add_subcommand("cohort", "annotator cohort statistics and regression");
    add_common(cohort);
    CLI::App* report = app.add_subcommand("report", "print artifacts of a run directory");
    report->add_option("--run", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(flags);
        if (ingest->parsed()) return cmd_ingest(flags);
        if (featurize->parsed()) return cmd_featurize(flags);
        if (train_base->parsed()) return cmd_train_base(flags);
        if (train_ensemble->parsed())
            return cmd_train_ensemble(flags, variant_name, encodings_path);
        if (evaluate->parsed()) return cmd_evaluate(flags);
        if (ablate->parsed()) return cmd_ablate(flags);
        if (cohort->parsed()) return cmd_cohort(flags);
        if (report->parsed()) return cmd_report(run_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
