#include "msweem/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "msweem/error.hpp"

namespace msweem {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "experiment_id", "dataset", "target", "auxiliary", "variants", "seeds",
        "prior_weighting", "split", "jobs", "out_dir", "seed",
        "learner_kind", "feature_dim", "ngram_orders", "mlp_hidden",
        "learner_epochs", "learner_batch_size", "learner_learning_rate",
        "use_annotator_ids",
        "ensemble_hidden", "ensemble_epochs", "ensemble_batch_size",
        "ensemble_learning_rate",
        "quad_tp3", "quad_tp4",
        "ablation_sizes", "rating_label", "alignment_threshold",
        "synth", "synth_n_texts", "synth_n_aux", "synth_aux_names",
        "synth_target_name", "synth_link_weights", "synth_link_bias",
        "synth_label_noise", "synth_aux_prevalence", "synth_text_signal", "synth_annotators_per_text",
        "synth_n_annotators", "synth_crew_clustering", "synth_master_fraction", "synth_base_competence",
        "synth_fatigue_rate", "synth_speeding_penalty", "synth_speeding_threshold_s",
        "synth_speed_mean_range_s", "synth_speed_sd_log", "synth_filler_tokens",
        "synth_filler_vocab",
    };
    return keys;
}

template <typename T>
void read_if(const json& j, const std::string& key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

QuadraticCoefficients read_quad(const json& j, const std::string& key,
                                QuadraticCoefficients fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3)
        throw ConfigError("config key '" + key + "' must be [a, b, c]");
    return {v[0], v[1], v[2]};
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known_keys().count(key))
            throw ConfigError("unknown config key '" + key + "'");
    }

    RunConfig config;
    config.seed_explicit = j.contains("seed");
    read_if(j, "experiment_id", config.experiment_id);
    read_if(j, "dataset", config.dataset_path);
    read_if(j, "target", config.target);
    read_if(j, "auxiliary", config.auxiliary);
    read_if(j, "out_dir", config.out_dir);
    read_if(j, "seed", config.seed);
    read_if(j, "rating_label", config.rating_label);
    read_if(j, "alignment_threshold", config.alignment.threshold);
    read_if(j, "ablation_sizes", config.ablation_sizes);

    config.use_synth = j.value("synth", false);

    auto& exp = config.experiment;
    exp.experiment_id = config.experiment_id;
    if (j.contains("variants")) {
        exp.variants.clear();
        for (const auto& name : j.at("variants").get<std::vector<std::string>>())
            exp.variants.push_back(variant_kind_from_string(name));
    }
    if (j.contains("seeds")) {
        exp.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (exp.seeds.empty()) throw ConfigError("config key 'seeds' must be non-empty");
    }
    read_if(j, "prior_weighting", exp.prior_weighting);
    read_if(j, "jobs", exp.jobs);
    if (j.contains("split")) {
        const auto v = j.at("split").get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("config key 'split' must be [train,val,test]");
        exp.split.train = v[0];
        exp.split.val = v[1];
        exp.split.test = v[2];
    }
    if (j.contains("learner_kind"))
        exp.learner.kind = learner_kind_from_string(j.at("learner_kind").get<std::string>());
    read_if(j, "feature_dim", exp.learner.features.dim);
    read_if(j, "ngram_orders", exp.learner.features.ngram_orders);
    read_if(j, "mlp_hidden", exp.learner.mlp_hidden);
    read_if(j, "learner_epochs", exp.learner.epochs);
    read_if(j, "learner_batch_size", exp.learner.batch_size);
    read_if(j, "learner_learning_rate", exp.learner.learning_rate);
    read_if(j, "use_annotator_ids", exp.learner.use_annotator_ids);
    read_if(j, "ensemble_hidden", exp.ensemble.hidden);
    read_if(j, "ensemble_epochs", exp.ensemble.epochs);
    read_if(j, "ensemble_batch_size", exp.ensemble.batch_size);
    read_if(j, "ensemble_learning_rate", exp.ensemble.learning_rate);
    exp.quad_tp3 = read_quad(j, "quad_tp3", default_quad_tp3());
    exp.quad_tp4 = read_quad(j, "quad_tp4", default_quad_tp4());

    auto& synth = config.synth;
    read_if(j, "synth_n_texts", synth.n_texts);
    read_if(j, "synth_n_aux", synth.n_aux);
    read_if(j, "synth_aux_names", synth.aux_names);
    read_if(j, "synth_target_name", synth.target_name);
    read_if(j, "synth_link_weights", synth.link_weights);
    read_if(j, "synth_link_bias", synth.link_bias);
    read_if(j, "synth_label_noise", synth.label_noise);
    read_if(j, "synth_aux_prevalence", synth.aux_prevalence);
    read_if(j, "synth_text_signal", synth.text_signal);
    read_if(j, "synth_annotators_per_text", synth.annotators_per_text);
    read_if(j, "synth_n_annotators", synth.n_annotators);
    read_if(j, "synth_crew_clustering", synth.crew_clustering);
    read_if(j, "synth_master_fraction", synth.master_fraction);
    read_if(j, "synth_fatigue_rate", synth.fatigue_rate);
    read_if(j, "synth_speeding_penalty", synth.speeding_penalty);
    read_if(j, "synth_speeding_threshold_s", synth.speeding_threshold_s);
    read_if(j, "synth_speed_sd_log", synth.speed_sd_log);
    read_if(j, "synth_filler_vocab", synth.filler_vocab);
    if (j.contains("synth_base_competence")) {
        const auto v = j.at("synth_base_competence").get<std::vector<double>>();
        if (v.size() != 2)
            throw ConfigError("config key 'synth_base_competence' must be [lo, hi]");
        synth.base_competence_lo = v[0];
        synth.base_competence_hi = v[1];
    }
    if (j.contains("synth_speed_mean_range_s")) {
        const auto v = j.at("synth_speed_mean_range_s").get<std::vector<double>>();
        if (v.size() != 2)
            throw ConfigError("config key 'synth_speed_mean_range_s' must be [lo, hi]");
        synth.speed_mean_lo_s = v[0];
        synth.speed_mean_hi_s = v[1];
    }
    if (j.contains("synth_filler_tokens")) {
        const auto v = j.at("synth_filler_tokens").get<std::vector<std::size_t>>();
        if (v.size() != 2)
            throw ConfigError("config key 'synth_filler_tokens' must be [lo, hi]");
        synth.filler_tokens_lo = v[0];
        synth.filler_tokens_hi = v[1];
    }
    synth.seed = config.seed;

    if (config.use_synth) {
        synth.validate();
        if (config.target.empty()) config.target = synth.target_name;
    } else if (!config.dataset_path.empty()) {
        if (!std::filesystem::exists(config.dataset_path))
            throw ConfigError("dataset path does not exist: " + config.dataset_path);
        if (config.target.empty())
            throw ConfigError("config key 'target' is required with a dataset path");
    }

    return config;
}

std::string effective_config_json(const RunConfig& config) {
    json j;
    j["experiment_id"] = config.experiment_id;
    if (!config.dataset_path.empty()) j["dataset"] = config.dataset_path;
    j["synth"] = config.use_synth;
    j["target"] = config.target;
    if (!config.auxiliary.empty()) j["auxiliary"] = config.auxiliary;
    j["out_dir"] = config.out_dir;
    j["seed"] = config.seed;
    if (!config.rating_label.empty()) j["rating_label"] = config.rating_label;
    j["alignment_threshold"] = config.alignment.threshold;
    if (!config.ablation_sizes.empty()) j["ablation_sizes"] = config.ablation_sizes;

    const auto& exp = config.experiment;
    {
        std::vector<std::string> names;
        for (VariantKind k : exp.variants) names.push_back(to_string(k));
        j["variants"] = names;
    }
    j["seeds"] = exp.seeds;
    j["prior_weighting"] = exp.prior_weighting;
    j["jobs"] = exp.jobs;
    j["split"] = {exp.split.train, exp.split.val, exp.split.test};
    j["learner_kind"] = to_string(exp.learner.kind);
    j["feature_dim"] = exp.learner.features.dim;
    j["ngram_orders"] = exp.learner.features.ngram_orders;
    j["mlp_hidden"] = exp.learner.mlp_hidden;
    j["learner_epochs"] = exp.learner.epochs;
    j["learner_batch_size"] = exp.learner.batch_size;
    j["learner_learning_rate"] = exp.learner.learning_rate;
    j["use_annotator_ids"] = exp.learner.use_annotator_ids;
    j["ensemble_hidden"] = exp.ensemble.hidden;
    j["ensemble_epochs"] = exp.ensemble.epochs;
    j["ensemble_batch_size"] = exp.ensemble.batch_size;
    j["ensemble_learning_rate"] = exp.ensemble.learning_rate;
    j["quad_tp3"] = {exp.quad_tp3.a, exp.quad_tp3.b, exp.quad_tp3.c};
    j["quad_tp4"] = {exp.quad_tp4.a, exp.quad_tp4.b, exp.quad_tp4.c};

    if (config.use_synth) {
        const auto& s = config.synth;
        j["synth_n_texts"] = s.n_texts;
        j["synth_n_aux"] = s.n_aux;
        j["synth_aux_names"] = s.effective_aux_names();
        j["synth_target_name"] = s.target_name;
        j["synth_link_weights"] = s.effective_link_weights();
        j["synth_link_bias"] = s.effective_link_bias();
        j["synth_label_noise"] = s.label_noise;
        j["synth_aux_prevalence"] = s.aux_prevalence;
        j["synth_text_signal"] = s.text_signal;
        j["synth_annotators_per_text"] = s.annotators_per_text;
        j["synth_n_annotators"] = s.n_annotators;
        j["synth_crew_clustering"] = s.crew_clustering;
        j["synth_master_fraction"] = s.master_fraction;
        j["synth_base_competence"] = {s.base_competence_lo, s.base_competence_hi};
        j["synth_fatigue_rate"] = s.fatigue_rate;
        j["synth_speeding_penalty"] = s.speeding_penalty;
        j["synth_speeding_threshold_s"] = s.speeding_threshold_s;
        j["synth_speed_mean_range_s"] = {s.speed_mean_lo_s, s.speed_mean_hi_s};
        j["synth_speed_sd_log"] = s.speed_sd_log;
        j["synth_filler_tokens"] = {s.filler_tokens_lo, s.filler_tokens_hi};
        j["synth_filler_vocab"] = s.filler_vocab;
    }
    return j.dump(2) + "\n";
}

}  // namespace msweem
