#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "msweem/error.hpp"
#include "msweem/features.hpp"
#include "test_support.hpp"

using namespace msweem;

TEST_SUITE_BEGIN("features");

TEST_CASE("repeated unigram accumulates into a single bucket") {
    FeatureConfig config;
    config.dim = 1024;
    config.ngram_orders = {1};
    const FeatureVector counts = featurize_counts("hello hello", config);
    REQUIRE(counts.values.size() == 1);
    CHECK(counts.values[0].second == 2.0);

    const FeatureVector normalized = featurize_text("hello hello", config);
    REQUIRE(normalized.values.size() == 1);
    CHECK(normalized.values[0].second == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("featurization is pure") {
    FeatureConfig config;
    const FeatureVector a = featurize_text("the quick brown fox", config);
    const FeatureVector b = featurize_text("the quick brown fox", config);
    CHECK(a.values == b.values);
}

TEST_CASE("bigram order distinguishes a b from b a") {
    FeatureConfig config;  // orders {1,2}
    const FeatureVector ab = featurize_counts("a b", config);
    const FeatureVector ba = featurize_counts("b a", config);
    CHECK(ab.values != ba.values);
}

TEST_CASE("unit L2 norm after normalization") {
    FeatureConfig config;
    const FeatureVector fv = featurize_text("one two three two one", config);
    CHECK(fv.l2_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty text is rejected") {
    FeatureConfig config;
    CHECK_THROWS_AS(featurize_text("", config), ArgumentError);
    CHECK_THROWS_AS(featurize_text("   ", config), ArgumentError);
}

TEST_CASE("collision rate on the fixture corpus stays under 1%") {
    // Count distinct n-grams and distinct buckets over a synthetic corpus of
    // a few hundred grams at the default dimension.
    FeatureConfig config;  // dim 65536
    std::set<std::string> grams;
    std::set<std::uint32_t> buckets;
    for (int i = 0; i < 300; ++i) {
        const std::string token = "tok" + std::to_string(i);
        grams.insert(token);
        buckets.insert(static_cast<std::uint32_t>(fnv1a64(token) % config.dim));
        const std::string bigram = token + '\x1f' + "tok" + std::to_string(i + 1);
        grams.insert(bigram);
        buckets.insert(static_cast<std::uint32_t>(fnv1a64(bigram) % config.dim));
    }
    const double lost =
        static_cast<double>(grams.size() - buckets.size()) / grams.size();
    CHECK(lost < 0.01);
}

TEST_CASE("annotator one-hot block follows the vocabulary order") {
    const AnnotatorVocab vocab({"A", "B", "C"});
    REQUIRE(vocab.block_size() == 4);

    FeatureConfig config;
    config.dim = 16;
    config.ngram_orders = {1};
    const FeatureVector text = featurize_text("x", config);

    auto block_of = [&](const std::vector<std::string>& ids) {
        const FeatureVector out = augment_with_annotator_ids(text, ids, vocab);
        std::vector<double> block(vocab.block_size(), 0.0);
        for (const auto& [idx, v] : out.values)
            if (idx >= text.dim) block[idx - text.dim] = v;
        return block;
    };

    CHECK(block_of({"A"}) == std::vector<double>{1, 0, 0, 0});
    CHECK(block_of({"A", "C"}) == std::vector<double>{1, 0, 1, 0});
    CHECK(block_of({"Z"}) == std::vector<double>{0, 0, 0, 1});  // unknown slot
    CHECK(block_of({}) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("vocabulary built from a dataset is sorted and deduplicated") {
    const Dataset d = testsupport::keyword_dataset(7, 3, 2);
    const AnnotatorVocab vocab = AnnotatorVocab::build(d);
    CHECK(vocab.ids().size() == 5);
    CHECK(std::is_sorted(vocab.ids().begin(), vocab.ids().end()));
}

TEST_SUITE_END();
