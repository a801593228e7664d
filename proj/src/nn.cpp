#include "msweem/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "msweem/error.hpp"
#include "msweem/evaluation.hpp"

namespace msweem::nn {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Mlp::Mlp(const MlpConfig& config, Rng& rng) : config_(config) {
    if (config.input_dim == 0) throw ArgumentError("Mlp: input_dim must be >= 1");
    std::vector<std::size_t> sizes;
    sizes.push_back(config.input_dim);
    for (std::size_t h : config.hidden) {
        if (h == 0) throw ArgumentError("Mlp: hidden layer size must be >= 1");
        sizes.push_back(h);
    }
    sizes.push_back(config.output == Output::softmax2 ? 2 : 1);

    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        layer.w.resize(layer.in * layer.out);
        layer.b.assign(layer.out, 0.0);
        const double scale = std::sqrt(2.0 / static_cast<double>(layer.in));
        for (auto& w : layer.w) w = rng.gaussian() * scale;
        layers_.push_back(std::move(layer));
    }
}

std::size_t Mlp::n_params() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> out;
    out.reserve(n_params());
    for (const auto& l : layers_) {
        out.insert(out.end(), l.w.begin(), l.w.end());
        out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
}

void Mlp::set_flat_params(std::span<const double> params) {
    if (params.size() != n_params())
        throw ModelError("set_flat_params: expected " + std::to_string(n_params()) +
                         " parameters, got " + std::to_string(params.size()));
    std::size_t pos = 0;
    for (auto& l : layers_) {
        std::copy(params.begin() + pos, params.begin() + pos + l.w.size(), l.w.begin());
        pos += l.w.size();
        std::copy(params.begin() + pos, params.begin() + pos + l.b.size(), l.b.begin());
        pos += l.b.size();
    }
}

void Mlp::forward(const SparseVec& x,
                  std::vector<std::vector<double>>& activations) const {
    activations.assign(layers_.size(), {});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        std::vector<double>& z = activations[l];
        z = layer.b;
        if (l == 0) {
            for (const auto& [idx, value] : x) {
                if (idx >= layer.in)
                    throw ModelError("feature index " + std::to_string(idx) +
                                     " out of range for input dim " +
                                     std::to_string(layer.in));
                for (std::size_t o = 0; o < layer.out; ++o)
                    z[o] += layer.w[o * layer.in + idx] * value;
            }
        } else {
            const std::vector<double>& prev = activations[l - 1];
            for (std::size_t o = 0; o < layer.out; ++o) {
                double acc = z[o];
                const double* row = layer.w.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * prev[i];
                z[o] = acc;
            }
        }
        if (l + 1 < layers_.size()) {
            for (auto& v : z) v = std::max(0.0, v);  // rectifier
        }
    }
}

double Mlp::predict_positive(const SparseVec& x) const {
    return predict_dist(x)[1];
}

std::vector<double> Mlp::predict_dist(const SparseVec& x) const {
    std::vector<std::vector<double>> acts;
    forward(x, acts);
    const std::vector<double>& z = acts.back();
    if (config_.output == Output::sigmoid) {
        const double p = sigmoid(z[0]);
        return {1.0 - p, p};
    }
    const double m = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - m);
    const double e1 = std::exp(z[1] - m);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double Mlp::loss(std::span<const Example> batch) const {
    if (batch.empty()) throw ArgumentError("loss: empty batch");
    double total = 0.0, total_w = 0.0;
    for (const auto& ex : batch) {
        const auto dist = predict_dist(ex.x);
        const double p = std::clamp(dist[ex.y == 1 ? 1 : 0], 1e-12, 1.0);
        total += ex.weight * -std::log(p);
        total_w += ex.weight;
    }
    return total / total_w;
}

double Mlp::loss_and_grad(std::span<const Example> batch,
                          std::vector<double>& grad) const {
    if (batch.empty()) throw ArgumentError("loss_and_grad: empty batch");
    grad.assign(n_params(), 0.0);

    // Flat offsets of each layer's weights and biases.
    std::vector<std::size_t> w_off(layers_.size()), b_off(layers_.size());
    std::size_t pos = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        w_off[l] = pos;
        pos += layers_[l].w.size();
        b_off[l] = pos;
        pos += layers_[l].b.size();
    }

    double total = 0.0, total_w = 0.0;
    for (const auto& ex : batch) total_w += ex.weight;

    std::vector<std::vector<double>> acts;
    for (const auto& ex : batch) {
        forward(ex.x, acts);
        const std::vector<double>& z_out = acts.back();

        // Output delta dL/dz for the weighted-mean loss.
        std::vector<double> delta;
        if (config_.output == Output::sigmoid) {
            const double p = sigmoid(z_out[0]);
            const double p_true = std::clamp(ex.y == 1 ? p : 1.0 - p, 1e-12, 1.0);
            total += ex.weight * -std::log(p_true);
            delta = {ex.weight * (p - (ex.y == 1 ? 1.0 : 0.0)) / total_w};
        } else {
            const double m = std::max(z_out[0], z_out[1]);
            const double e0 = std::exp(z_out[0] - m);
            const double e1 = std::exp(z_out[1] - m);
            const double p0 = e0 / (e0 + e1);
            const double p1 = e1 / (e0 + e1);
            total += ex.weight * -std::log(std::clamp(ex.y == 1 ? p1 : p0, 1e-12, 1.0));
            delta = {ex.weight * (p0 - (ex.y == 0 ? 1.0 : 0.0)) / total_w,
                     ex.weight * (p1 - (ex.y == 1 ? 1.0 : 0.0)) / total_w};
        }

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const Layer& layer = layers_[l];
            double* gw = grad.data() + w_off[l];
            double* gb = grad.data() + b_off[l];
            for (std::size_t o = 0; o < layer.out; ++o) gb[o] += delta[o];
            if (l == 0) {
                for (const auto& [idx, value] : ex.x)
                    for (std::size_t o = 0; o < layer.out; ++o)
                        gw[o * layer.in + idx] += delta[o] * value;
            } else {
                const std::vector<double>& prev = acts[l - 1];
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double d = delta[o];
                    double* row = gw + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) row[i] += d * prev[i];
                }
                // Propagate through the rectifier: prev > 0 passes gradient.
                std::vector<double> next_delta(layer.in, 0.0);
                for (std::size_t i = 0; i < layer.in; ++i) {
                    if (prev[i] <= 0.0) continue;
                    double acc = 0.0;
                    for (std::size_t o = 0; o < layer.out; ++o)
                        acc += layer.w[o * layer.in + i] * delta[o];
                    next_delta[i] = acc;
                }
                delta = std::move(next_delta);
            }
        }
    }
    return total / total_w;
}

TrainResult train(Mlp& net, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config) {
    if (train_set.empty()) throw ArgumentError("train: empty training set");
    if (val_set.empty()) throw ArgumentError("train: empty validation set");
    if (config.batch_size == 0) throw ArgumentError("train: batch_size must be >= 1");

    Rng rng(config.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad;
    std::vector<double> rms_acc(net.n_params(), 0.0);
    std::vector<Example> batch;

    auto val_macro_f1 = [&] {
        std::vector<int> preds, golds;
        preds.reserve(val_set.size());
        golds.reserve(val_set.size());
        for (const auto& ex : val_set) {
            const auto dist = net.predict_dist(ex.x);
            preds.push_back(dist[1] > dist[0] ? 1 : 0);  // exact ties go to class 0
            golds.push_back(ex.y);
        }
        return macro_f1(preds, golds);
    };

    TrainResult result;
    std::vector<double> best_params = net.flat_params();
    result.best_val_macro_f1 = val_macro_f1();
    double prev_val_loss = net.loss(val_set);
    int stall_count = 0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            const double batch_loss = net.loss_and_grad(batch, grad);
            if (!std::isfinite(batch_loss))
                throw TrainingError("non-finite training loss at epoch " +
                                    std::to_string(epoch));
            auto params = net.flat_params();
            for (std::size_t i = 0; i < params.size(); ++i) {
                rms_acc[i] = config.rms_decay * rms_acc[i] +
                             (1.0 - config.rms_decay) * grad[i] * grad[i];
                params[i] -= config.learning_rate * grad[i] /
                             (std::sqrt(rms_acc[i]) + config.rms_eps);
            }
            net.set_flat_params(params);
        }

        const double val_loss = net.loss(val_set);
        if (!std::isfinite(val_loss))
            throw TrainingError("non-finite validation loss at epoch " +
                                std::to_string(epoch));
        const double f1 = val_macro_f1();
        if (f1 > result.best_val_macro_f1) {
            result.best_val_macro_f1 = f1;
            result.best_epoch = epoch;
            best_params = net.flat_params();
        }
        result.epochs_run = epoch;

        if (config.early_stopping) {
            if (prev_val_loss - val_loss < config.early_stop_delta)
                ++stall_count;
            else
                stall_count = 0;
            prev_val_loss = val_loss;
            if (stall_count >= config.early_stop_patience) break;
        }
    }

    net.set_flat_params(best_params);
    return result;
}

std::string dump_mlp(const Mlp& net) {
    nlohmann::json j;
    j["format"] = "msweem-mlp";
    j["version"] = 1;
    j["input_dim"] = net.config().input_dim;
    j["hidden"] = net.config().hidden;
    j["output"] = net.config().output == Output::sigmoid ? "sigmoid" : "softmax2";
    j["params"] = net.flat_params();
    return j.dump();
}

Mlp load_mlp(const std::string& serialized) {
    nlohmann::json j = nlohmann::json::parse(serialized);
    if (j.value("format", "") != "msweem-mlp")
        throw ModelError("not an mlp dump");
    if (j.value("version", 0) != 1)
        throw ModelError("unsupported mlp dump version");
    MlpConfig config;
    config.input_dim = j.at("input_dim").get<std::size_t>();
    config.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    config.output = j.at("output").get<std::string>() == "sigmoid" ? Output::sigmoid
                                                                   : Output::softmax2;
    Rng rng(0);
    Mlp net(config, rng);
    net.set_flat_params(j.at("params").get<std::vector<double>>());
    return net;
}

}  // namespace msweem::nn
