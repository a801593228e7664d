#include "msweem/metafeatures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "msweem/error.hpp"
#include "msweem/stats.hpp"

namespace msweem {

std::string to_string(VariantKind kind) {
    switch (kind) {
        case VariantKind::TP1: return "TP1";
        case VariantKind::TP2: return "TP2";
        case VariantKind::TP3: return "TP3";
        case VariantKind::TP4: return "TP4";
        case VariantKind::WT1: return "WT1";
        case VariantKind::WT2: return "WT2";
        case VariantKind::PC1: return "PC1";
        case VariantKind::PC2: return "PC2";
        case VariantKind::PC3: return "PC3";
        case VariantKind::TL1: return "TL1";
        case VariantKind::TL2: return "TL2";
        case VariantKind::SP1: return "SP1";
        case VariantKind::SP2: return "SP2";
        case VariantKind::SP3: return "SP3";
    }
    throw InternalError("unknown VariantKind");
}

VariantKind variant_kind_from_string(const std::string& name) {
    for (VariantKind k : kAllVariantKinds) {
        if (to_string(k) == name) return k;
    }
    std::string valid;
    for (VariantKind k : kAllVariantKinds) {
        if (!valid.empty()) valid += ", ";
        valid += to_string(k);
    }
    throw ArgumentError("unknown variant '" + name + "'; valid kinds: " + valid);
}

double percentage_agreement(const std::vector<int>& labels) {
    if (labels.empty()) throw ArgumentError("percentage_agreement: empty label list");
    std::map<int, std::size_t> counts;
    for (int v : labels) ++counts[v];
    std::size_t best = 0;
    for (const auto& [value, count] : counts) {
        (void)value;
        best = std::max(best, count);
    }
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

TextLength text_length(const std::string& text) {
    if (text.empty()) throw ArgumentError("text_length: empty text");
    TextLength tl;
    tl.n_chars = text.size();
    bool in_token = false;
    for (char c : text) {
        const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
        if (!ws && !in_token) ++tl.n_words;
        in_token = !ws;
    }
    return tl;
}

std::vector<ObservationMeta> compute_observation_meta(const Dataset& dataset) {
    const auto& records = dataset.records();
    if (records.empty()) throw ArgumentError("compute_observation_meta: no records");

    // Raw TP/WT are normalized over the whole dataset first, then aggregated
    // per observation.
    std::vector<double> raw_tp, raw_wt;
    raw_tp.reserve(records.size());
    raw_wt.reserve(records.size());
    for (const auto& r : records) {
        raw_tp.push_back(static_cast<double>(r.annotator_throughput));
        raw_wt.push_back(r.worktime_s);
    }
    const std::vector<double> norm_tp = minmax_normalize(raw_tp);
    const std::vector<double> norm_wt = minmax_normalize(raw_wt);

    const auto& schema = dataset.schema();
    std::vector<std::string> pc_labels = schema.auxiliary;
    // Include the target's agreement only when every text carries
    // per-annotator target labels, so pc vectors stay comparable.
    bool target_everywhere = true;
    for (const auto& t : dataset.texts()) {
        bool any = false;
        for (std::size_t ri : dataset.record_indices(t.text_id))
            if (dataset.records()[ri].labels.count(schema.target)) any = true;
        if (!any) {
            target_everywhere = false;
            break;
        }
    }
    if (target_everywhere) pc_labels.push_back(schema.target);

    std::vector<ObservationMeta> metas;
    metas.reserve(dataset.n_texts());
    for (const auto& t : dataset.texts()) {
        ObservationMeta m;
        m.text_id = t.text_id;
        for (std::size_t ri : dataset.record_indices(t.text_id)) {
            m.tp_values.push_back(norm_tp[ri]);
            m.wt_values.push_back(norm_wt[ri]);
        }
        for (const auto& label : pc_labels) {
            std::vector<int> values;
            for (std::size_t ri : dataset.record_indices(t.text_id)) {
                auto it = dataset.records()[ri].labels.find(label);
                if (it != dataset.records()[ri].labels.end()) values.push_back(it->second);
            }
            if (values.empty())
                throw ArgumentError("text " + t.text_id + " has no values for label '" +
                                    label + "'");
            m.pc_values.push_back(percentage_agreement(values));
        }
        const TextLength tl = text_length(t.text);
        m.n_words = tl.n_words;
        m.n_chars = tl.n_chars;
        metas.push_back(std::move(m));
    }
    return metas;
}

VariantStats compute_variant_stats(std::span<const ObservationMeta> train_metas,
                                   std::size_t aux_count,
                                   QuadraticCoefficients quad_tp3,
                                   QuadraticCoefficients quad_tp4) {
    if (train_metas.empty())
        throw ArgumentError("compute_variant_stats: no training observations");
    if (quad_tp3.a == 0.0 || quad_tp4.a == 0.0)
        throw ArgumentError("quadratic coefficient a must be nonzero");
    if (!(quad_tp3.c < 0.0)) throw ArgumentError("TP3 requires c < 0");
    if (!(quad_tp4.c > 0.0)) throw ArgumentError("TP4 requires c > 0");

    VariantStats s;
    s.aux_count = aux_count;
    s.quad_tp3 = quad_tp3;
    s.quad_tp4 = quad_tp4;
    for (const auto& m : train_metas) {
        const double var_tp = stats::variance(m.tp_values);
        s.max_mean_tp = std::max(s.max_mean_tp, stats::mean(m.tp_values));
        s.max_var_tp = std::max(s.max_var_tp, var_tp);
        s.max_mean_wt = std::max(s.max_mean_wt, stats::mean(m.wt_values));
        s.max_var_wt = std::max(s.max_var_wt, stats::variance(m.wt_values));
        s.max_mean_pc = std::max(s.max_mean_pc, stats::mean(m.pc_values));
        s.max_var_pc = std::max(s.max_var_pc, stats::variance(m.pc_values));
        s.max_abs_quad_tp3 = std::max(s.max_abs_quad_tp3, std::fabs(quad_tp3(var_tp)));
        s.max_abs_quad_tp4 = std::max(s.max_abs_quad_tp4, std::fabs(quad_tp4(var_tp)));
        s.max_chars = std::max(s.max_chars, static_cast<double>(m.n_chars));
        s.max_words = std::max(s.max_words, static_cast<double>(m.n_words));
    }
    return s;
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double ratio_or_throw(double numerator, double denominator, VariantKind kind) {
    if (denominator == 0.0)
        throw DegenerateError("variant " + to_string(kind) +
                              ": training-split maximum is zero");
    return clamp01(numerator / denominator);
}

}  // namespace

VariantWeight compute_variant_weight(const ObservationMeta& meta, VariantKind kind,
                                     const VariantStats& stats_in) {
    VariantWeight w;
    w.text_id = meta.text_id;
    w.kind = kind;

    // SP kinds are exact arithmetic means of their constituents, so the
    // scalar evaluator recurses through a small function object.
    struct Calc {
        const ObservationMeta& meta;
        const VariantStats& st;
        double operator()(VariantKind k) const {
            switch (k) {
                case VariantKind::TP1:
                    return ratio_or_throw(stats::mean(meta.tp_values), st.max_mean_tp, k);
                case VariantKind::TP2:
                    return ratio_or_throw(stats::variance(meta.tp_values), st.max_var_tp, k);
                case VariantKind::TP3:
                    return ratio_or_throw(st.quad_tp3(stats::variance(meta.tp_values)),
                                          st.max_abs_quad_tp3, k);
                case VariantKind::TP4:
                    return ratio_or_throw(st.quad_tp4(stats::variance(meta.tp_values)),
                                          st.max_abs_quad_tp4, k);
                case VariantKind::WT1:
                    return ratio_or_throw(stats::mean(meta.wt_values), st.max_mean_wt, k);
                case VariantKind::WT2:
                    return ratio_or_throw(stats::variance(meta.wt_values), st.max_var_wt, k);
                case VariantKind::PC1:
                    return ratio_or_throw(stats::mean(meta.pc_values), st.max_mean_pc, k);
                case VariantKind::PC2:
                    return ratio_or_throw(stats::variance(meta.pc_values), st.max_var_pc, k);
                case VariantKind::TL1:
                    return ratio_or_throw(static_cast<double>(meta.n_chars), st.max_chars, k);
                case VariantKind::TL2:
                    return ratio_or_throw(static_cast<double>(meta.n_words), st.max_words, k);
                case VariantKind::SP1:
                    return 0.5 * ((*this)(VariantKind::TP1) + (*this)(VariantKind::TP2));
                case VariantKind::SP2:
                    return 0.5 * ((*this)(VariantKind::WT1) + (*this)(VariantKind::WT2));
                case VariantKind::SP3:
                    return 0.5 * ((*this)(VariantKind::PC1) + (*this)(VariantKind::PC2));
                case VariantKind::PC3:
                    throw InternalError("PC3 is not a scalar kind");
            }
            throw InternalError("unknown VariantKind");
        }
    };

    if (kind == VariantKind::PC3) {
        if (meta.pc_values.size() < stats_in.aux_count)
            throw ArgumentError("PC3: observation has fewer pc values than auxiliary labels");
        w.vector.assign(meta.pc_values.begin(),
                        meta.pc_values.begin() + static_cast<long>(stats_in.aux_count));
        return w;
    }
    w.scalar = Calc{meta, stats_in}(kind);
    return w;
}

void write_variant_weights(std::ostream& out, std::span<const VariantWeight> weights) {
    out << "text_id,kind,value\n";
    for (const auto& w : weights) {
        out << w.text_id << ',' << to_string(w.kind) << ',';
        if (w.is_vector()) {
            for (std::size_t i = 0; i < w.vector.size(); ++i) {
                if (i) out << '|';
                out << w.vector[i];
            }
        } else {
            out << w.scalar;
        }
        out << '\n';
    }
}

}  // namespace msweem
