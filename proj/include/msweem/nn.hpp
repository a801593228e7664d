#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msweem/rng.hpp"

namespace msweem::nn {

// Sparse feature vector: (index, value) pairs with strictly increasing
// indices. Dense inputs are just fully populated sparse vectors.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

struct Example {
    SparseVec x;
    int y = 0;          // class in {0,1}
    double weight = 1.0;  // sample weight (class weight folded in here)
};

enum class Output { sigmoid, softmax2 };

struct MlpConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;  // empty = plain logistic model
    Output output = Output::sigmoid;
};

// Feed-forward net with rectifier hidden activations. Parameters are
// exposed flat so finite-difference oracles can probe the gradient.
class Mlp {
public:
    Mlp() = default;
    Mlp(const MlpConfig& config, Rng& rng);

    const MlpConfig& config() const { return config_; }
    std::size_t n_params() const;
    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> params);

    // Positive-class probability in (0,1).
    double predict_positive(const SparseVec& x) const;
    // Output distribution: {1-p, p} for sigmoid, softmax pair otherwise.
    std::vector<double> predict_dist(const SparseVec& x) const;

    // Weighted mean loss: sum(w_i * loss_i) / sum(w_i). Duplicating an
    // example is therefore exactly equivalent to doubling its weight.
    double loss(std::span<const Example> batch) const;
    double loss_and_grad(std::span<const Example> batch, std::vector<double>& grad) const;

private:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::vector<double> w;  // row-major out x in
        std::vector<double> b;
    };

    MlpConfig config_;
    std::vector<Layer> layers_;

    void forward(const SparseVec& x, std::vector<std::vector<double>>& activations) const;
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    // Per-parameter squared-gradient scaling (exponential moving average).
    double rms_decay = 0.9;
    double rms_eps = 1e-8;
    bool early_stopping = false;
    double early_stop_delta = 0.001;
    int early_stop_patience = 3;
    std::uint64_t seed = 1;
};

struct TrainResult {
    double best_val_macro_f1 = 0.0;
    std::size_t best_epoch = 0;   // 1-based epoch whose parameters were kept
    std::size_t epochs_run = 0;
};

// Mini-batch training; retains the parameters achieving the best validation
// macro-F1. Throws TrainingError (reporting the epoch) if the loss becomes
// non-finite.
TrainResult train(Mlp& net, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config);

// Versioned structured-text round trip for model parameters.
std::string dump_mlp(const Mlp& net);
Mlp load_mlp(const std::string& serialized);

}  // namespace msweem::nn
