#include "msweem/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "msweem/error.hpp"

namespace msweem {

double FeatureVector::l2_norm() const {
    double s = 0.0;
    for (const auto& [idx, v] : values) {
        (void)idx;
        s += v * v;
    }
    return std::sqrt(s);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
        if (ws) {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

FeatureVector featurize_counts(const std::string& text, const FeatureConfig& config) {
    if (text.empty()) throw ArgumentError("featurize: empty text");
    if (config.dim == 0) throw ArgumentError("featurize: dim must be >= 1");
    const auto tokens = tokenize(text);
    if (tokens.empty()) throw ArgumentError("featurize: text has no tokens");

    std::map<std::uint32_t, double> counts;
    for (int order : config.ngram_orders) {
        if (order < 1) throw ArgumentError("featurize: n-gram order must be >= 1");
        const std::size_t n = static_cast<std::size_t>(order);
        if (tokens.size() < n) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            // Tokens joined with a separator that cannot occur inside one.
            std::string gram = tokens[i];
            for (std::size_t k = 1; k < n; ++k) {
                gram.push_back('\x1f');
                gram += tokens[i + k];
            }
            counts[static_cast<std::uint32_t>(fnv1a64(gram) % config.dim)] += 1.0;
        }
    }

    FeatureVector fv;
    fv.dim = config.dim;
    fv.values.assign(counts.begin(), counts.end());
    return fv;
}

FeatureVector featurize_text(const std::string& text, const FeatureConfig& config) {
    FeatureVector fv = featurize_counts(text, config);
    const double norm = fv.l2_norm();
    if (norm > 0.0) {
        for (auto& [idx, v] : fv.values) {
            (void)idx;
            v /= norm;
        }
    }
    return fv;
}

AnnotatorVocab::AnnotatorVocab(std::vector<std::string> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

AnnotatorVocab AnnotatorVocab::build(const Dataset& train) {
    std::set<std::string> unique;
    for (const auto& r : train.records()) unique.insert(r.annotator_id);
    AnnotatorVocab vocab;
    vocab.ids_.assign(unique.begin(), unique.end());
    return vocab;
}

std::size_t AnnotatorVocab::slot(const std::string& annotator_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), annotator_id);
    if (it != ids_.end() && *it == annotator_id)
        return static_cast<std::size_t>(it - ids_.begin());
    return ids_.size();  // unknown slot
}

FeatureVector augment_with_annotator_ids(const FeatureVector& features,
                                         const std::vector<std::string>& annotator_ids,
                                         const AnnotatorVocab& vocab) {
    FeatureVector out = features;
    out.dim = features.dim + vocab.block_size();
    std::set<std::size_t> slots;
    for (const auto& id : annotator_ids) slots.insert(vocab.slot(id));
    for (std::size_t s : slots)
        out.values.emplace_back(static_cast<std::uint32_t>(features.dim + s), 1.0);
    return out;
}

}  // namespace msweem
