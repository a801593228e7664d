#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msweem/data_model.hpp"
#include "msweem/features.hpp"
#include "msweem/nn.hpp"

namespace msweem {

enum class LearnerKind { logistic, mlp };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

struct LearnerConfig {
    LearnerKind kind = LearnerKind::logistic;
    FeatureConfig features;
    std::size_t mlp_hidden = 64;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    bool use_annotator_ids = false;
    std::uint64_t seed = 1;
};

struct ClassWeights {
    double negative = 1.0;
    double positive = 1.0;
};

// Balanced inverse-frequency weights: w_c = N / (2 * N_c).
ClassWeights class_weights(const Dataset& train, const std::string& label);

// A trained binary classifier for one auxiliary (or target) label.
struct BaseLearner {
    std::string label_name;
    LearnerKind kind = LearnerKind::logistic;
    FeatureConfig features;
    std::optional<AnnotatorVocab> vocab;  // set when trained with annotator ids
    ClassWeights weights;
    nn::Mlp net;
    double best_val_macro_f1 = 0.0;
};

BaseLearner train_base_learner(const Dataset& train, const Dataset& val,
                               const std::string& label, const LearnerConfig& config);

// Positive-class probability for a text; annotator ids are only consulted
// when the learner was trained with the annotator-ID block.
double predict_proba(const BaseLearner& learner, const std::string& text,
                     const std::vector<std::string>& annotator_ids = {});
int predict_label(const BaseLearner& learner, const std::string& text,
                  const std::vector<std::string>& annotator_ids = {});

std::string dump_learner(const BaseLearner& learner);
BaseLearner load_learner(const std::string& serialized);

// Probabilities keyed by (text_id, label_name); the import boundary for
// encodings produced by heavier models trained elsewhere.
class EncodingTable {
public:
    void set(const std::string& text_id, const std::string& label, double p);
    bool has(const std::string& text_id, const std::string& label) const;
    double get(const std::string& text_id, const std::string& label) const;
    std::size_t size() const { return values_.size(); }

    // Throws listing every missing (text, label) pair.
    void require_complete(const std::vector<std::string>& text_ids,
                          const std::vector<std::string>& labels) const;

    const std::map<std::pair<std::string, std::string>, double>& values() const {
        return values_;
    }

private:
    std::map<std::pair<std::string, std::string>, double> values_;
};

EncodingTable import_external_encodings(const std::string& path);
void write_encodings(std::ostream& out, const EncodingTable& table);

}  // namespace msweem
