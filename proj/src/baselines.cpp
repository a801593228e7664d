#include "msweem/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "msweem/error.hpp"
#include "msweem/rng.hpp"

namespace msweem {

int majority_vote(const std::vector<int>& labels) {
    if (labels.empty()) throw ArgumentError("majority_vote: empty label list");
    std::map<int, std::size_t> counts;
    for (int v : labels) ++counts[v];
    int best = counts.begin()->first;
    std::size_t best_count = counts.begin()->second;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {  // ties keep the lower value
            best = value;
            best_count = count;
        }
    }
    return best;
}

AnnotationMatrix AnnotationMatrix::from_dataset(const Dataset& dataset,
                                                const std::string& label) {
    std::set<std::string> annotators;
    for (const auto& r : dataset.records()) annotators.insert(r.annotator_id);

    AnnotationMatrix m;
    m.annotator_ids.assign(annotators.begin(), annotators.end());
    std::map<std::string, std::size_t> annotator_index;
    for (std::size_t a = 0; a < m.annotator_ids.size(); ++a)
        annotator_index[m.annotator_ids[a]] = a;

    int max_label = 0;
    for (const auto& t : dataset.texts()) {
        std::vector<std::pair<std::size_t, int>> row;
        for (std::size_t ri : dataset.record_indices(t.text_id)) {
            const auto& rec = dataset.records()[ri];
            auto it = rec.labels.find(label);
            if (it == rec.labels.end()) continue;
            if (it->second < 0)
                throw ArgumentError("negative label value on text " + t.text_id);
            max_label = std::max(max_label, it->second);
            row.emplace_back(annotator_index[rec.annotator_id], it->second);
        }
        if (row.empty()) continue;  // text never annotated for this label
        m.item_ids.push_back(t.text_id);
        m.annotations.push_back(std::move(row));
    }
    m.n_classes = max_label + 1;
    if (m.n_classes < 2) m.n_classes = 2;
    m.validate();
    return m;
}

void AnnotationMatrix::validate() const {
    if (item_ids.size() != annotations.size())
        throw ArgumentError("annotation matrix: item/annotation size mismatch");
    if (n_classes < 2) throw ArgumentError("annotation matrix: need K >= 2 classes");
    if (item_ids.empty()) throw ArgumentError("annotation matrix: no items");
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        if (annotations[i].empty())
            throw ArgumentError("item " + item_ids[i] + " has no annotations");
        for (const auto& [a, label] : annotations[i]) {
            if (a >= annotator_ids.size())
                throw ArgumentError("annotator index out of range");
            if (label < 0 || label >= n_classes)
                throw ArgumentError("label outside [0,K) on item " + item_ids[i]);
        }
    }
}

const std::vector<double>& MaceModel::posterior(const std::string& item_id) const {
    for (std::size_t i = 0; i < item_ids.size(); ++i)
        if (item_ids[i] == item_id) return posteriors[i];
    throw ArgumentError("unknown item: " + item_id);
}

int MaceModel::hard_label(const std::string& item_id) const {
    const auto& p = posterior(item_id);
    int best = 0;
    for (int k = 1; k < n_classes; ++k)
        if (p[k] > p[best]) best = k;
    return best;
}

namespace {

struct EmState {
    std::vector<double> theta;               // spam probabilities
    std::vector<std::vector<double>> xi;     // spam label distributions
    std::vector<std::vector<double>> gamma;  // item posteriors
    double log_likelihood = 0.0;
    double objective = 0.0;
};

// One E-step at fixed parameters: fills gamma and returns (loglik, objective).
void e_step(const AnnotationMatrix& m, double smoothing, EmState& s) {
    const int K = m.n_classes;
    s.gamma.assign(m.annotations.size(), std::vector<double>(K, 0.0));
    double loglik = 0.0;
    for (std::size_t i = 0; i < m.annotations.size(); ++i) {
        // log P(annotations_i | T=t) for each t, uniform prior over t
        std::vector<double> logp(K, -std::log(static_cast<double>(K)));
        for (const auto& [a, label] : m.annotations[i]) {
            for (int t = 0; t < K; ++t) {
                const double p = (1.0 - s.theta[a]) * (label == t ? 1.0 : 0.0) +
                                 s.theta[a] * s.xi[a][label];
                logp[t] += std::log(std::max(p, 1e-300));
            }
        }
        const double mx = *std::max_element(logp.begin(), logp.end());
        double z = 0.0;
        for (int t = 0; t < K; ++t) z += std::exp(logp[t] - mx);
        for (int t = 0; t < K; ++t) s.gamma[i][t] = std::exp(logp[t] - mx) / z;
        loglik += mx + std::log(z);
    }
    s.log_likelihood = loglik;
    // MAP objective adds the Beta/Dirichlet smoothing prior log-densities,
    // which is the quantity EM with additive pseudo-counts ascends.
    double prior = 0.0;
    for (std::size_t a = 0; a < s.theta.size(); ++a) {
        prior += smoothing * (std::log(std::max(s.theta[a], 1e-300)) +
                              std::log(std::max(1.0 - s.theta[a], 1e-300)));
        for (int k = 0; k < K; ++k)
            prior += smoothing * std::log(std::max(s.xi[a][k], 1e-300));
    }
    s.objective = loglik + prior;
}

MaceModel run_em(const AnnotationMatrix& m, const MaceConfig& config,
                 std::vector<double> theta0, std::vector<std::vector<double>> xi0) {
    const int K = m.n_classes;
    const std::size_t A = m.annotator_ids.size();
    EmState s;
    s.theta = std::move(theta0);
    s.xi = std::move(xi0);

    e_step(m, config.smoothing, s);
    double prev_objective = s.objective;
    std::size_t iterations = 0;

    for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
        // Spam responsibilities, accumulated straight into M-step counts.
        std::vector<double> spam_sum(A, 0.0), n_annotations(A, 0.0);
        std::vector<std::vector<double>> spam_label(A, std::vector<double>(K, 0.0));
        for (std::size_t i = 0; i < m.annotations.size(); ++i) {
            for (const auto& [a, label] : m.annotations[i]) {
                double r = 0.0;
                for (int t = 0; t < K; ++t) {
                    const double p_match = (1.0 - s.theta[a]) * (label == t ? 1.0 : 0.0);
                    const double p_spam = s.theta[a] * s.xi[a][label];
                    const double denom = p_match + p_spam;
                    if (denom > 0.0) r += s.gamma[i][t] * (p_spam / denom);
                }
                spam_sum[a] += r;
                n_annotations[a] += 1.0;
                spam_label[a][label] += r;
            }
        }
        for (std::size_t a = 0; a < A; ++a) {
            s.theta[a] = (spam_sum[a] + config.smoothing) /
                         (n_annotations[a] + 2.0 * config.smoothing);
            const double denom = spam_sum[a] + K * config.smoothing;
            for (int k = 0; k < K; ++k)
                s.xi[a][k] = (spam_label[a][k] + config.smoothing) / denom;
        }

        e_step(m, config.smoothing, s);
        iterations = iter;
        const double delta = s.objective - prev_objective;
        if (delta < -1e-8 * (1.0 + std::fabs(prev_objective)))
            throw InternalError("MACE EM objective decreased by " + std::to_string(-delta) +
                                " at iteration " + std::to_string(iter));
        if (std::fabs(delta) < config.tolerance) break;
        prev_objective = s.objective;
    }

    MaceModel model;
    model.spam_prob = std::move(s.theta);
    model.spam_dist = std::move(s.xi);
    model.posteriors = std::move(s.gamma);
    model.item_ids = m.item_ids;
    model.annotator_ids = m.annotator_ids;
    model.n_classes = K;
    model.log_likelihood = s.log_likelihood;
    model.objective = s.objective;
    model.iterations = iterations;
    return model;
}

}  // namespace

MaceModel mace_fit_from(const AnnotationMatrix& matrix, const MaceConfig& config,
                        const std::vector<double>& theta0,
                        const std::vector<std::vector<double>>& xi0) {
    matrix.validate();
    if (theta0.size() != matrix.annotator_ids.size() ||
        xi0.size() != matrix.annotator_ids.size())
        throw ArgumentError("mace_fit_from: initialization size mismatch");
    return run_em(matrix, config, theta0, xi0);
}

MaceModel mace_fit(const AnnotationMatrix& matrix, const MaceConfig& config) {
    matrix.validate();
    if (config.restarts == 0) throw ArgumentError("mace_fit: restarts must be >= 1");
    const std::size_t A = matrix.annotator_ids.size();
    const int K = matrix.n_classes;

    Rng rng(config.seed);
    MaceModel best;
    bool have_best = false;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        Rng restart_rng = rng.fork(r);
        std::vector<double> theta0(A);
        std::vector<std::vector<double>> xi0(A, std::vector<double>(K, 0.0));
        for (std::size_t a = 0; a < A; ++a) {
            theta0[a] = restart_rng.uniform(0.2, 0.8);
            double z = 0.0;
            for (int k = 0; k < K; ++k) {
                xi0[a][k] = 0.1 + restart_rng.uniform();
                z += xi0[a][k];
            }
            for (int k = 0; k < K; ++k) xi0[a][k] /= z;
        }
        MaceModel candidate = run_em(matrix, config, std::move(theta0), std::move(xi0));
        if (!have_best || candidate.objective > best.objective) {
            best = std::move(candidate);
            have_best = true;
        }
    }
    return best;
}

void write_mace_posteriors(std::ostream& out, const MaceModel& model) {
    out << "item_id,label,posterior\n";
    out.precision(17);
    for (std::size_t i = 0; i < model.item_ids.size(); ++i)
        for (int k = 0; k < model.n_classes; ++k)
            out << model.item_ids[i] << ',' << k << ',' << model.posteriors[i][k] << '\n';
}

}  // namespace msweem
