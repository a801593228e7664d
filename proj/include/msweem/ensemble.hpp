#pragma once

#include <span>
#include <string>
#include <vector>

#include "msweem/base_learners.hpp"
#include "msweem/data_model.hpp"
#include "msweem/metafeatures.hpp"
#include "msweem/nn.hpp"

namespace msweem {

enum class EncodingStage { raw, prior_weighted, meta_weighted };

std::string to_string(EncodingStage stage);

// The 1xP vector of positive-class probabilities, one slot per auxiliary
// label in schema order, possibly rescaled by priors and meta-feature
// weights.
struct EncodingVector {
    std::string text_id;
    std::vector<double> values;
    EncodingStage stage = EncodingStage::raw;
};

EncodingVector build_encoding(const std::vector<BaseLearner>& learners,
                              const Dataset& dataset, const std::string& text_id);
EncodingVector build_encoding(const EncodingTable& table, const LabelSchema& schema,
                              const std::string& text_id);

// Per-label prevalence of the positive class on the training split.
std::vector<double> compute_priors(const Dataset& train);

// values[j] *= priors[j]. Priors must lie in (0,1]; passing all ones is the
// documented way to run with prior weighting toggled off.
EncodingVector apply_prior_weighting(const EncodingVector& encoding,
                                     const std::vector<double>& priors);

// Scalar weights broadcast across all slots; PC3 supplies one weight per
// slot. Result stage is meta_weighted.
EncodingVector apply_meta_weighting(const EncodingVector& encoding,
                                    const VariantWeight& weight);

struct EnsembleConfig {
    std::vector<std::size_t> hidden = {16, 8};  // three trainable layers total
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

struct EnsembleModel {
    nn::Mlp net;  // softmax output over {0,1}
    EncodingStage stage = EncodingStage::raw;
    std::size_t input_dim = 0;
    std::vector<double> priors;  // priors in effect at training time
    std::string variant;         // weighting variant, empty for the base model
    ClassWeights weights;
    double best_val_macro_f1 = 0.0;
};

EnsembleModel train_ensemble_mlp(std::span<const EncodingVector> train_encodings,
                                 std::span<const int> train_targets,
                                 std::span<const EncodingVector> val_encodings,
                                 std::span<const int> val_targets,
                                 const EnsembleConfig& config);

struct TargetPrediction {
    int label = 0;
    std::vector<double> dist;  // sums to 1
};

// Softmax distribution over the target; exact ties resolve to class 0.
TargetPrediction predict_target(const EnsembleModel& model, const EncodingVector& encoding);

std::string dump_ensemble(const EnsembleModel& model);
EnsembleModel load_ensemble(const std::string& serialized);

// Encoding dump rows: text_id,stage,v_1..v_P.
void write_encoding_vectors(std::ostream& out, std::span<const EncodingVector> encodings);

}  // namespace msweem
