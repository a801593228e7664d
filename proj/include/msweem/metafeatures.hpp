#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msweem/data_model.hpp"

namespace msweem {

// Per-text aggregated annotation meta-features. tp/wt hold the dataset-wide
// min-max-normalized raw values for this text's annotators; pc holds the
// per-label percentage agreement (auxiliary labels in schema order, then the
// target when the dataset annotates it on every text).
struct ObservationMeta {
    std::string text_id;
    std::vector<double> tp_values;
    std::vector<double> wt_values;
    std::vector<double> pc_values;
    std::size_t n_words = 0;
    std::size_t n_chars = 0;
};

enum class VariantKind {
    TP1, TP2, TP3, TP4,
    WT1, WT2,
    PC1, PC2, PC3,
    TL1, TL2,
    SP1, SP2, SP3,
};

inline constexpr VariantKind kAllVariantKinds[] = {
    VariantKind::TP1, VariantKind::TP2, VariantKind::TP3, VariantKind::TP4,
    VariantKind::WT1, VariantKind::WT2,
    VariantKind::PC1, VariantKind::PC2, VariantKind::PC3,
    VariantKind::TL1, VariantKind::TL2,
    VariantKind::SP1, VariantKind::SP2, VariantKind::SP3,
};

std::string to_string(VariantKind kind);
VariantKind variant_kind_from_string(const std::string& name);

// f(x) = a*x^2 + b*x + c applied to Var(TP) for the quadratic kinds. The
// sign of c distinguishes the two kinds: negative for TP3, positive for TP4.
struct QuadraticCoefficients {
    double a = 1.0;
    double b = 0.0;
    double c = -1.0;

    double operator()(double x) const { return a * x * x + b * x + c; }
};

inline QuadraticCoefficients default_quad_tp3() { return {1.0, 0.0, -1.0}; }
inline QuadraticCoefficients default_quad_tp4() { return {1.0, 0.0, 1.0}; }

// Denominators for the ratio variants, frozen on the training split so that
// validation/test weighting never sees its own statistics.
struct VariantStats {
    std::size_t aux_count = 0;
    QuadraticCoefficients quad_tp3 = default_quad_tp3();
    QuadraticCoefficients quad_tp4 = default_quad_tp4();
    double max_mean_tp = 0.0;
    double max_var_tp = 0.0;
    double max_mean_wt = 0.0;
    double max_var_wt = 0.0;
    double max_mean_pc = 0.0;
    double max_var_pc = 0.0;
    double max_abs_quad_tp3 = 0.0;
    double max_abs_quad_tp4 = 0.0;
    double max_chars = 0.0;
    double max_words = 0.0;
};

// Scalar for every kind except PC3, which carries one weight per auxiliary
// label slot.
struct VariantWeight {
    std::string text_id;
    VariantKind kind = VariantKind::TP1;
    double scalar = 0.0;
    std::vector<double> vector;  // PC3 only, length = aux_count

    bool is_vector() const { return kind == VariantKind::PC3; }
};

// Fraction of annotators matching the modal label; modal ties resolve
// toward the lower label value.
double percentage_agreement(const std::vector<int>& labels);

struct TextLength {
    std::size_t n_words = 0;
    std::size_t n_chars = 0;
};
TextLength text_length(const std::string& text);

std::vector<ObservationMeta> compute_observation_meta(const Dataset& dataset);

VariantStats compute_variant_stats(std::span<const ObservationMeta> train_metas,
                                   std::size_t aux_count,
                                   QuadraticCoefficients quad_tp3 = default_quad_tp3(),
                                   QuadraticCoefficients quad_tp4 = default_quad_tp4());

VariantWeight compute_variant_weight(const ObservationMeta& meta, VariantKind kind,
                                     const VariantStats& stats);

// Export table: text_id,kind,value with PC3 serialized as v_1|...|v_P.
void write_variant_weights(std::ostream& out, std::span<const VariantWeight> weights);

}  // namespace msweem
