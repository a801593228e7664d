#include "msweem/base_learners.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "msweem/csv.hpp"
#include "msweem/error.hpp"

namespace msweem {

std::string to_string(LearnerKind kind) {
    return kind == LearnerKind::logistic ? "logistic" : "mlp";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "logistic") return LearnerKind::logistic;
    if (s == "mlp") return LearnerKind::mlp;
    throw ArgumentError("unknown learner kind '" + s + "'; valid: logistic, mlp");
}

ClassWeights class_weights(const Dataset& train, const std::string& label) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& t : train.texts()) {
        const int v = train.observed_value(t.text_id, label);
        if (v == 1) ++n_pos;
        else if (v == 0) ++n_neg;
        else throw ArgumentError("label '" + label + "' is not binary on text " + t.text_id);
    }
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateError("label '" + label + "' has a single class in training data");
    const double n = static_cast<double>(n_pos + n_neg);
    return {n / (2.0 * static_cast<double>(n_neg)),
            n / (2.0 * static_cast<double>(n_pos))};
}

namespace {

std::vector<std::string> annotator_ids_of(const Dataset& dataset,
                                          const std::string& text_id) {
    std::set<std::string> ids;
    for (std::size_t ri : dataset.record_indices(text_id))
        ids.insert(dataset.records()[ri].annotator_id);
    return {ids.begin(), ids.end()};
}

nn::Example make_example(const BaseLearner& learner, const Dataset& dataset,
                         const std::string& text_id, int y) {
    FeatureVector fv = featurize_text(dataset.text(text_id).text, learner.features);
    if (learner.vocab)
        fv = augment_with_annotator_ids(fv, annotator_ids_of(dataset, text_id),
                                        *learner.vocab);
    nn::Example ex;
    ex.x = std::move(fv.values);
    ex.y = y;
    ex.weight = y == 1 ? learner.weights.positive : learner.weights.negative;
    return ex;
}

std::vector<nn::Example> make_examples(const BaseLearner& learner, const Dataset& dataset,
                                       const std::string& label) {
    std::vector<nn::Example> out;
    out.reserve(dataset.n_texts());
    for (const auto& t : dataset.texts()) {
        const int y = dataset.observed_value(t.text_id, label);
        if (y != 0 && y != 1)
            throw ArgumentError("label '" + label + "' is not binary on text " + t.text_id);
        out.push_back(make_example(learner, dataset, t.text_id, y));
    }
    return out;
}

}  // namespace

BaseLearner train_base_learner(const Dataset& train, const Dataset& val,
                               const std::string& label, const LearnerConfig& config) {
    if (!train.schema().declares(label))
        throw ArgumentError("label '" + label + "' not declared in schema");

    BaseLearner learner;
    learner.label_name = label;
    learner.kind = config.kind;
    learner.features = config.features;
    learner.weights = class_weights(train, label);
    if (config.use_annotator_ids) learner.vocab = AnnotatorVocab::build(train);

    nn::MlpConfig net_config;
    net_config.input_dim =
        config.features.dim + (learner.vocab ? learner.vocab->block_size() : 0);
    if (config.kind == LearnerKind::mlp) net_config.hidden = {config.mlp_hidden};
    net_config.output = nn::Output::sigmoid;

    Rng rng(config.seed);
    learner.net = nn::Mlp(net_config, rng);

    const auto train_examples = make_examples(learner, train, label);
    const auto val_examples = make_examples(learner, val, label);

    nn::TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.learning_rate = config.learning_rate;
    tc.early_stopping = config.kind == LearnerKind::mlp;
    tc.seed = config.seed;
    const auto result = nn::train(learner.net, train_examples, val_examples, tc);
    learner.best_val_macro_f1 = result.best_val_macro_f1;
    return learner;
}

double predict_proba(const BaseLearner& learner, const std::string& text,
                     const std::vector<std::string>& annotator_ids) {
    FeatureVector fv = featurize_text(text, learner.features);
    if (learner.vocab) fv = augment_with_annotator_ids(fv, annotator_ids, *learner.vocab);
    const std::size_t expect =
        learner.features.dim + (learner.vocab ? learner.vocab->block_size() : 0);
    if (fv.dim != expect || learner.net.config().input_dim != expect)
        throw ModelError("feature dimension mismatch: model expects " +
                         std::to_string(learner.net.config().input_dim));
    return learner.net.predict_positive(fv.values);
}

int predict_label(const BaseLearner& learner, const std::string& text,
                  const std::vector<std::string>& annotator_ids) {
    return predict_proba(learner, text, annotator_ids) >= 0.5 ? 1 : 0;
}

std::string dump_learner(const BaseLearner& learner) {
    nlohmann::json j;
    j["format"] = "msweem-base-learner";
    j["version"] = 1;
    j["label_name"] = learner.label_name;
    j["kind"] = to_string(learner.kind);
    j["feature_dim"] = learner.features.dim;
    j["ngram_orders"] = learner.features.ngram_orders;
    j["class_weight_negative"] = learner.weights.negative;
    j["class_weight_positive"] = learner.weights.positive;
    j["best_val_macro_f1"] = learner.best_val_macro_f1;
    if (learner.vocab) j["annotator_vocab"] = learner.vocab->ids();
    j["net"] = nlohmann::json::parse(nn::dump_mlp(learner.net));
    return j.dump();
}

BaseLearner load_learner(const std::string& serialized) {
    nlohmann::json j = nlohmann::json::parse(serialized);
    if (j.value("format", "") != "msweem-base-learner")
        throw ModelError("not a base-learner dump");
    if (j.value("version", 0) != 1) throw ModelError("unsupported learner dump version");
    BaseLearner learner;
    learner.label_name = j.at("label_name").get<std::string>();
    learner.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    learner.features.dim = j.at("feature_dim").get<std::size_t>();
    learner.features.ngram_orders = j.at("ngram_orders").get<std::vector<int>>();
    learner.weights.negative = j.at("class_weight_negative").get<double>();
    learner.weights.positive = j.at("class_weight_positive").get<double>();
    learner.best_val_macro_f1 = j.value("best_val_macro_f1", 0.0);
    if (j.contains("annotator_vocab"))
        learner.vocab =
            AnnotatorVocab(j.at("annotator_vocab").get<std::vector<std::string>>());
    learner.net = nn::load_mlp(j.at("net").dump());
    return learner;
}

void EncodingTable::set(const std::string& text_id, const std::string& label, double p) {
    if (!(p >= 0.0) || !(p <= 1.0))
        throw ArgumentError("probability outside [0,1] for (" + text_id + ", " + label + ")");
    auto [it, inserted] = values_.emplace(std::make_pair(text_id, label), p);
    (void)it;
    if (!inserted)
        throw ArgumentError("duplicate encoding for (" + text_id + ", " + label + ")");
}

bool EncodingTable::has(const std::string& text_id, const std::string& label) const {
    return values_.count({text_id, label}) > 0;
}

double EncodingTable::get(const std::string& text_id, const std::string& label) const {
    auto it = values_.find({text_id, label});
    if (it == values_.end())
        throw ArgumentError("no encoding for (" + text_id + ", " + label + ")");
    return it->second;
}

void EncodingTable::require_complete(const std::vector<std::string>& text_ids,
                                     const std::vector<std::string>& labels) const {
    std::string missing;
    std::size_t count = 0;
    for (const auto& t : text_ids) {
        for (const auto& l : labels) {
            if (has(t, l)) continue;
            ++count;
            if (count <= 20) {
                if (!missing.empty()) missing += ", ";
                missing += "(" + t + ", " + l + ")";
            }
        }
    }
    if (count > 0)
        throw ArgumentError("encoding table incomplete; " + std::to_string(count) +
                            " missing pairs: " + missing + (count > 20 ? ", ..." : ""));
}

EncodingTable import_external_encodings(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    const int c_text = table.column("text_id");
    const int c_label = table.column("label_name");
    const int c_prob = table.column("probability");
    if (c_text < 0 || c_label < 0 || c_prob < 0)
        throw SchemaError("encoding table requires columns text_id,label_name,probability");
    EncodingTable out;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw RowError(row.line, "wrong field count");
        const std::string& prob = row.fields[c_prob];
        double p = 0.0;
        auto [ptr, ec] = std::from_chars(prob.data(), prob.data() + prob.size(), p);
        if (ec != std::errc() || ptr != prob.data() + prob.size())
            throw RowError(row.line, "non-numeric probability: '" + prob + "'");
        if (!(p >= 0.0) || !(p <= 1.0))
            throw RowError(row.line, "probability outside [0,1]: " + prob);
        try {
            out.set(row.fields[c_text], row.fields[c_label], p);
        } catch (const ArgumentError& e) {
            throw RowError(row.line, e.what());
        }
    }
    return out;
}

void write_encodings(std::ostream& out, const EncodingTable& table) {
    out << "text_id,label_name,probability\n";
    out.precision(17);
    for (const auto& [key, p] : table.values())
        out << key.first << ',' << key.second << ',' << p << '\n';
}

}  // namespace msweem
