#include "msweem/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "msweem/error.hpp"

namespace msweem {

std::string to_string(EncodingStage stage) {
    switch (stage) {
        case EncodingStage::raw: return "raw";
        case EncodingStage::prior_weighted: return "prior_weighted";
        case EncodingStage::meta_weighted: return "meta_weighted";
    }
    return "raw";
}

namespace {

EncodingStage stage_from_string(const std::string& s) {
    if (s == "raw") return EncodingStage::raw;
    if (s == "prior_weighted") return EncodingStage::prior_weighted;
    if (s == "meta_weighted") return EncodingStage::meta_weighted;
    throw ArgumentError("unknown encoding stage: " + s);
}

std::vector<std::string> annotator_ids_of(const Dataset& dataset,
                                          const std::string& text_id) {
    std::set<std::string> ids;
    for (std::size_t ri : dataset.record_indices(text_id))
        ids.insert(dataset.records()[ri].annotator_id);
    return {ids.begin(), ids.end()};
}

}  // namespace

EncodingVector build_encoding(const std::vector<BaseLearner>& learners,
                              const Dataset& dataset, const std::string& text_id) {
    const auto& schema = dataset.schema();
    EncodingVector enc;
    enc.text_id = text_id;
    enc.stage = EncodingStage::raw;
    const auto ids = annotator_ids_of(dataset, text_id);
    for (const auto& label : schema.auxiliary) {
        const BaseLearner* found = nullptr;
        for (const auto& l : learners)
            if (l.label_name == label) found = &l;
        if (!found)
            throw ArgumentError("no base learner for auxiliary label '" + label + "'");
        enc.values.push_back(predict_proba(*found, dataset.text(text_id).text, ids));
    }
    return enc;
}

EncodingVector build_encoding(const EncodingTable& table, const LabelSchema& schema,
                              const std::string& text_id) {
    EncodingVector enc;
    enc.text_id = text_id;
    enc.stage = EncodingStage::raw;
    for (const auto& label : schema.auxiliary) {
        if (!table.has(text_id, label))
            throw ArgumentError("missing probability for label '" + label +
                                "' on text " + text_id);
        enc.values.push_back(table.get(text_id, label));
    }
    return enc;
}

std::vector<double> compute_priors(const Dataset& train) {
    std::vector<double> priors;
    for (const auto& label : train.schema().auxiliary) {
        std::size_t pos = 0;
        for (const auto& t : train.texts())
            if (train.observed_value(t.text_id, label) == 1) ++pos;
        const double p = static_cast<double>(pos) / static_cast<double>(train.n_texts());
        if (p <= 0.0 || p >= 1.0)
            throw DegenerateError("prior for label '" + label +
                                  "' is degenerate (" + std::to_string(p) + ")");
        priors.push_back(p);
    }
    return priors;
}

EncodingVector apply_prior_weighting(const EncodingVector& encoding,
                                     const std::vector<double>& priors) {
    if (encoding.stage != EncodingStage::raw)
        throw ModelError("prior weighting expects a raw encoding, got " +
                         to_string(encoding.stage));
    if (priors.size() != encoding.values.size())
        throw ArgumentError("priors length " + std::to_string(priors.size()) +
                            " != encoding length " + std::to_string(encoding.values.size()));
    for (double p : priors) {
        if (!(p > 0.0) || !(p <= 1.0))
            throw ArgumentError("prior outside (0,1]: " + std::to_string(p));
    }
    EncodingVector out = encoding;
    out.stage = EncodingStage::prior_weighted;
    for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] *= priors[j];
    return out;
}

EncodingVector apply_meta_weighting(const EncodingVector& encoding,
                                    const VariantWeight& weight) {
    if (encoding.stage == EncodingStage::meta_weighted)
        throw ModelError("encoding is already meta-weighted");
    EncodingVector out = encoding;
    out.stage = EncodingStage::meta_weighted;
    if (weight.is_vector()) {
        if (weight.vector.size() != encoding.values.size())
            throw ArgumentError("vector weight length " +
                                std::to_string(weight.vector.size()) +
                                " != encoding length " +
                                std::to_string(encoding.values.size()));
        for (std::size_t j = 0; j < out.values.size(); ++j)
            out.values[j] *= weight.vector[j];
    } else {
        for (auto& v : out.values) v *= weight.scalar;
    }
    return out;
}

namespace {

std::vector<nn::Example> encoding_examples(std::span<const EncodingVector> encodings,
                                           std::span<const int> targets,
                                           const ClassWeights& weights) {
    std::vector<nn::Example> out;
    out.reserve(encodings.size());
    for (std::size_t i = 0; i < encodings.size(); ++i) {
        nn::Example ex;
        for (std::size_t j = 0; j < encodings[i].values.size(); ++j)
            ex.x.emplace_back(static_cast<std::uint32_t>(j), encodings[i].values[j]);
        ex.y = targets[i];
        ex.weight = ex.y == 1 ? weights.positive : weights.negative;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

EnsembleModel train_ensemble_mlp(std::span<const EncodingVector> train_encodings,
                                 std::span<const int> train_targets,
                                 std::span<const EncodingVector> val_encodings,
                                 std::span<const int> val_targets,
                                 const EnsembleConfig& config) {
    if (train_encodings.empty()) throw ArgumentError("no training encodings");
    if (train_encodings.size() != train_targets.size() ||
        val_encodings.size() != val_targets.size())
        throw ArgumentError("encodings/targets length mismatch");

    const EncodingStage stage = train_encodings.front().stage;
    const std::size_t dim = train_encodings.front().values.size();
    auto check = [&](std::span<const EncodingVector> encs) {
        for (const auto& e : encs) {
            if (e.stage != stage)
                throw ArgumentError("mixed encoding stages in ensemble training data");
            if (e.values.size() != dim)
                throw ArgumentError("mixed encoding lengths in ensemble training data");
        }
    };
    check(train_encodings);
    check(val_encodings);

    std::size_t n_pos = 0, n_neg = 0;
    for (int y : train_targets) {
        if (y == 1) ++n_pos;
        else if (y == 0) ++n_neg;
        else throw ArgumentError("ensemble targets must be binary");
    }
    for (int y : val_targets)
        if (y != 0 && y != 1) throw ArgumentError("ensemble targets must be binary");
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateError("ensemble training targets contain a single class");

    EnsembleModel model;
    model.stage = stage;
    model.input_dim = dim;
    const double n = static_cast<double>(n_pos + n_neg);
    model.weights = {n / (2.0 * static_cast<double>(n_neg)),
                     n / (2.0 * static_cast<double>(n_pos))};

    nn::MlpConfig net_config;
    net_config.input_dim = dim;
    net_config.hidden = config.hidden;
    net_config.output = nn::Output::softmax2;
    Rng rng(config.seed);
    model.net = nn::Mlp(net_config, rng);

    const auto train_ex = encoding_examples(train_encodings, train_targets, model.weights);
    const auto val_ex = encoding_examples(val_encodings, val_targets, model.weights);

    nn::TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.learning_rate = config.learning_rate;
    tc.early_stopping = true;
    tc.seed = config.seed;
    const auto result = nn::train(model.net, train_ex, val_ex, tc);
    model.best_val_macro_f1 = result.best_val_macro_f1;
    return model;
}

TargetPrediction predict_target(const EnsembleModel& model, const EncodingVector& encoding) {
    if (encoding.stage != model.stage)
        throw ModelError("encoding stage " + to_string(encoding.stage) +
                         " does not match model stage " + to_string(model.stage));
    if (encoding.values.size() != model.input_dim)
        throw ModelError("encoding length does not match model input dimension");
    nn::SparseVec x;
    for (std::size_t j = 0; j < encoding.values.size(); ++j)
        x.emplace_back(static_cast<std::uint32_t>(j), encoding.values[j]);
    TargetPrediction pred;
    pred.dist = model.net.predict_dist(x);
    pred.label = pred.dist[1] > pred.dist[0] ? 1 : 0;  // exact tie -> class 0
    return pred;
}

std::string dump_ensemble(const EnsembleModel& model) {
    nlohmann::json j;
    j["format"] = "msweem-ensemble";
    j["version"] = 1;
    j["stage"] = to_string(model.stage);
    j["input_dim"] = model.input_dim;
    j["priors"] = model.priors;
    j["variant"] = model.variant;
    j["class_weight_negative"] = model.weights.negative;
    j["class_weight_positive"] = model.weights.positive;
    j["best_val_macro_f1"] = model.best_val_macro_f1;
    j["net"] = nlohmann::json::parse(nn::dump_mlp(model.net));
    return j.dump();
}

EnsembleModel load_ensemble(const std::string& serialized) {
    nlohmann::json j = nlohmann::json::parse(serialized);
    if (j.value("format", "") != "msweem-ensemble")
        throw ModelError("not an ensemble dump");
    if (j.value("version", 0) != 1) throw ModelError("unsupported ensemble dump version");
    EnsembleModel model;
    model.stage = stage_from_string(j.at("stage").get<std::string>());
    model.input_dim = j.at("input_dim").get<std::size_t>();
    model.priors = j.at("priors").get<std::vector<double>>();
    model.variant = j.at("variant").get<std::string>();
    model.weights.negative = j.at("class_weight_negative").get<double>();
    model.weights.positive = j.at("class_weight_positive").get<double>();
    model.best_val_macro_f1 = j.value("best_val_macro_f1", 0.0);
    model.net = nn::load_mlp(j.at("net").dump());
    return model;
}

void write_encoding_vectors(std::ostream& out, std::span<const EncodingVector> encodings) {
    std::size_t p = 0;
    for (const auto& e : encodings) p = std::max(p, e.values.size());
    out << "text_id,stage";
    for (std::size_t j = 1; j <= p; ++j) out << ",v_" << j;
    out << '\n';
    out.precision(17);
    for (const auto& e : encodings) {
        out << e.text_id << ',' << to_string(e.stage);
        for (double v : e.values) out << ',' << v;
        out << '\n';
    }
}

}  // namespace msweem
