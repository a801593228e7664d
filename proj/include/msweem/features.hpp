#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msweem/data_model.hpp"
#include "msweem/nn.hpp"

namespace msweem {

struct FeatureConfig {
    std::size_t dim = 65536;
    std::vector<int> ngram_orders = {1, 2};
};

// Logically dense vector of dimension `dim`, stored sparse (sorted indices).
struct FeatureVector {
    std::size_t dim = 0;
    nn::SparseVec values;

    double l2_norm() const;
};

// FNV-1a 64-bit over the n-gram bytes; buckets are hash mod dim.
std::uint64_t fnv1a64(const std::string& s);

// Raw hashed n-gram counts of whitespace tokens (before normalization).
FeatureVector featurize_counts(const std::string& text, const FeatureConfig& config);

// L2-normalized hashed n-gram features; deterministic and pure.
FeatureVector featurize_text(const std::string& text, const FeatureConfig& config);

// Annotator-ID vocabulary fixed at train time; novel ids at predict time
// map to a shared unknown slot.
class AnnotatorVocab {
public:
    AnnotatorVocab() = default;
    explicit AnnotatorVocab(std::vector<std::string> ids);  // sorted + deduplicated
    static AnnotatorVocab build(const Dataset& train);

    std::size_t block_size() const { return ids_.size() + 1; }  // + unknown slot
    std::size_t slot(const std::string& annotator_id) const;
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;  // sorted
};

// Appends a 0/1 multi-hot annotator block after the text features.
FeatureVector augment_with_annotator_ids(const FeatureVector& features,
                                         const std::vector<std::string>& annotator_ids,
                                         const AnnotatorVocab& vocab);

}  // namespace msweem
