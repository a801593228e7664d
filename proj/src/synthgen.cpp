#include "msweem/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "msweem/error.hpp"
#include "msweem/rng.hpp"

namespace msweem {

double AnnotatorProfile::effective_competence(double task_fraction, bool speeding) const {
    const double raw = base_competence - fatigue_rate * task_fraction -
                       (speeding ? speeding_penalty : 0.0);
    return std::clamp(raw, 0.5, 1.0);
}

std::vector<std::string> SynthConfig::effective_aux_names() const {
    if (!aux_names.empty()) {
        if (aux_names.size() != n_aux)
            throw ArgumentError("aux_names size does not match n_aux");
        return aux_names;
    }
    std::vector<std::string> names;
    for (std::size_t j = 1; j <= n_aux; ++j) names.push_back("aux_" + std::to_string(j));
    return names;
}

std::vector<double> SynthConfig::effective_link_weights() const {
    if (!link_weights.empty()) {
        if (link_weights.size() != n_aux)
            throw ArgumentError("link_weights size does not match n_aux");
        return link_weights;
    }
    return std::vector<double>(n_aux, 2.0);
}

double SynthConfig::effective_link_bias() const {
    if (link_bias != 0.0) return link_bias;
    const auto w = effective_link_weights();
    return -0.5 * std::accumulate(w.begin(), w.end(), 0.0);
}

void SynthConfig::validate() const {
    if (n_texts < 1) throw ArgumentError("synth: n_texts must be >= 1");
    if (n_aux < 1) throw ArgumentError("synth: n_aux must be >= 1");
    if (annotators_per_text < 1)
        throw ArgumentError("synth: annotators_per_text must be >= 1");
    if (annotators_per_text > n_annotators)
        throw ArgumentError("synth: annotators_per_text exceeds annotator pool");
    if (!(label_noise >= 0.0) || !(label_noise < 0.5))
        throw ArgumentError("synth: label_noise must lie in [0, 0.5)");
    if (!(aux_prevalence > 0.0) || !(aux_prevalence < 1.0))
        throw ArgumentError("synth: aux_prevalence must lie in (0,1)");
    if (!(text_signal > 0.5) || !(text_signal <= 1.0))
        throw ArgumentError("synth: text_signal must lie in (0.5, 1]");
    if (!(base_competence_lo > 0.5) || !(base_competence_hi <= 1.0) ||
        base_competence_lo > base_competence_hi)
        throw ArgumentError("synth: base competence range must lie in (0.5, 1]");
    if (fatigue_rate < 0.0) throw ArgumentError("synth: fatigue_rate must be >= 0");
    if (!(crew_clustering >= 0.0) || !(crew_clustering <= 1.0))
        throw ArgumentError("synth: crew_clustering must lie in [0,1]");
    if (speeding_penalty < 0.0) throw ArgumentError("synth: speeding_penalty must be >= 0");
    effective_aux_names();
    effective_link_weights();
}

std::vector<AnnotatorProfile> generate_annotators(const SynthConfig& config,
                                                  std::uint64_t seed) {
    config.validate();
    Rng rng(seed ^ 0x616E6E6FULL);
    std::vector<AnnotatorProfile> profiles;
    const std::size_t n_masters = static_cast<std::size_t>(
        std::floor(config.master_fraction * static_cast<double>(config.n_annotators)));
    for (std::size_t a = 0; a < config.n_annotators; ++a) {
        AnnotatorProfile p;
        p.annotator_id = "ann_" + std::to_string(a + 1);
        p.fatigue_rate = config.fatigue_rate;
        p.speeding_penalty = config.speeding_penalty;
        p.speeding_threshold_s = config.speeding_threshold_s;
        p.speed_sd_log = config.speed_sd_log;
        // Median worktime is log-uniform over the configured range, so the
        // pool mixes habitual speeders with slower workers.
        const double log_lo = std::log(config.speed_mean_lo_s);
        const double log_hi = std::log(config.speed_mean_hi_s);
        p.speed_mean_s = std::exp(rng.uniform(log_lo, log_hi));
        p.base_competence = rng.uniform(config.base_competence_lo, config.base_competence_hi);
        if (a < n_masters) {
            // Masters are faster, busier and steadier than the regular pool.
            p.qualification = Qualification::master;
            p.speed_mean_s = std::max(config.speed_mean_lo_s, p.speed_mean_s * 0.5);
            p.base_competence =
                rng.uniform((config.base_competence_lo + config.base_competence_hi) / 2.0,
                            config.base_competence_hi);
        } else {
            p.qualification = Qualification::normal;
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

SynthResult generate_dataset(const std::vector<AnnotatorProfile>& profiles,
                             const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    if (profiles.empty()) throw ArgumentError("synth: no annotator profiles");
    if (config.annotators_per_text > profiles.size())
        throw ArgumentError("synth: annotators_per_text exceeds profile count");
    for (const auto& p : profiles) {
        if (!(p.base_competence > 0.5) || !(p.base_competence <= 1.0))
            throw ArgumentError("synth: base_competence outside (0.5, 1] for " +
                                p.annotator_id);
    }

    const auto aux_names = config.effective_aux_names();
    const auto weights = config.effective_link_weights();
    const double bias = config.effective_link_bias();

    Rng rng(seed);

    // Gold labels and text content, one fork per text.
    std::vector<std::vector<int>> gold_aux(config.n_texts,
                                           std::vector<int>(config.n_aux, 0));
    std::vector<int> gold_target(config.n_texts, 0);
    std::vector<TextUnit> texts(config.n_texts);
    for (std::size_t i = 0; i < config.n_texts; ++i) {
        Rng tr = rng.fork(2 * i);
        double z = bias;
        std::string text;
        for (std::size_t j = 0; j < config.n_aux; ++j) {
            const int bit = tr.bernoulli(config.aux_prevalence) ? 1 : 0;
            gold_aux[i][j] = bit;
            z += weights[j] * bit;
            if (!text.empty()) text += ' ';
            // One signal token per auxiliary label encodes its gold value,
            // corrupted when the text is ambiguous.
            int shown = bit;
            if (config.text_signal < 1.0 && tr.bernoulli(1.0 - config.text_signal))
                shown = 1 - shown;
            text += "k" + std::to_string(j + 1) + (shown ? "on" : "off");
        }
        int y = sigmoid(z) > 0.5 ? 1 : 0;
        if (tr.bernoulli(config.label_noise)) y = 1 - y;
        gold_target[i] = y;

        const std::size_t n_filler =
            config.filler_tokens_lo +
            static_cast<std::size_t>(tr.below(config.filler_tokens_hi -
                                              config.filler_tokens_lo + 1));
        for (std::size_t k = 0; k < n_filler; ++k)
            text += " f" + std::to_string(tr.below(config.filler_vocab));

        texts[i].text_id = "t" + std::to_string(i + 1);
        texts[i].text = std::move(text);
    }

    // Assign annotators_per_text distinct annotators to each text. With
    // crew clustering, a text's crew may be drawn from only the fast or
    // only the slow half of the pool.
    std::vector<std::vector<std::size_t>> tasks_of(profiles.size());
    std::vector<std::vector<std::size_t>> annotators_of(config.n_texts);
    std::vector<std::size_t> by_speed(profiles.size());
    std::iota(by_speed.begin(), by_speed.end(), 0);
    std::sort(by_speed.begin(), by_speed.end(), [&](std::size_t a, std::size_t b) {
        if (profiles[a].speed_mean_s != profiles[b].speed_mean_s)
            return profiles[a].speed_mean_s < profiles[b].speed_mean_s;
        return a < b;
    });
    const std::size_t half = profiles.size() / 2;
    std::vector<std::size_t> fast_half(by_speed.begin(), by_speed.begin() + half);
    std::vector<std::size_t> slow_half(by_speed.begin() + half, by_speed.end());

    std::vector<std::size_t> pool(profiles.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < config.n_texts; ++i) {
        Rng ar = rng.fork(2 * i + 1);
        std::vector<std::size_t>* source = &pool;
        if (config.crew_clustering > 0.0 && ar.bernoulli(config.crew_clustering)) {
            std::vector<std::size_t>& chosen = ar.bernoulli(0.5) ? fast_half : slow_half;
            if (chosen.size() >= config.annotators_per_text) source = &chosen;
        }
        ar.shuffle(*source);
        for (std::size_t k = 0; k < config.annotators_per_text; ++k) {
            annotators_of[i].push_back((*source)[k]);
            tasks_of[(*source)[k]].push_back(i);
        }
        std::sort(annotators_of[i].begin(), annotators_of[i].end());
    }

    // Walk each annotator's task list in order so fatigue accrues over the
    // campaign; records are emitted per text afterwards.
    struct Draft {
        double worktime = 0.0;
        std::map<std::string, int> labels;
    };
    std::vector<std::map<std::size_t, Draft>> drafts(config.n_texts);
    for (std::size_t a = 0; a < profiles.size(); ++a) {
        const auto& profile = profiles[a];
        const std::size_t n_tasks = tasks_of[a].size();
        for (std::size_t k = 0; k < n_tasks; ++k) {
            const std::size_t i = tasks_of[a][k];
            Rng rr = rng.fork((a + 1) * 0x3779F1ULL + k);
            Draft d;
            d.worktime = std::exp(std::log(profile.speed_mean_s) +
                                  profile.speed_sd_log * rr.gaussian());
            const bool speeding = d.worktime < profile.speeding_threshold_s;
            const double fraction =
                static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(1, n_tasks));
            const double competence = profile.effective_competence(fraction, speeding);
            for (std::size_t j = 0; j < config.n_aux; ++j) {
                int v = gold_aux[i][j];
                if (rr.bernoulli(1.0 - competence)) v = 1 - v;
                d.labels[aux_names[j]] = v;
            }
            int y = gold_target[i];
            if (rr.bernoulli(1.0 - competence)) y = 1 - y;
            d.labels[config.target_name] = y;
            drafts[i].emplace(a, std::move(d));
        }
    }

    std::vector<AnnotationRecord> records;
    std::map<std::string, int> gold;
    for (std::size_t i = 0; i < config.n_texts; ++i) {
        gold[texts[i].text_id] = gold_target[i];
        for (std::size_t a : annotators_of[i]) {
            const Draft& d = drafts[i].at(a);
            AnnotationRecord rec;
            rec.text_id = texts[i].text_id;
            rec.annotator_id = profiles[a].annotator_id;
            rec.labels = d.labels;
            rec.worktime_s = d.worktime;
            rec.annotator_throughput =
                static_cast<std::int64_t>(std::max<std::size_t>(1, tasks_of[a].size()));
            rec.qualification = profiles[a].qualification;
            records.push_back(std::move(rec));
        }
    }

    SynthResult result;
    LabelSchema schema{config.target_name, aux_names};
    result.dataset =
        Dataset(std::move(texts), std::move(records), std::move(schema), std::move(gold));
    for (std::size_t j = 0; j < config.n_aux; ++j) {
        std::vector<int>& column = result.gold_aux[aux_names[j]];
        column.reserve(config.n_texts);
        for (std::size_t i = 0; i < config.n_texts; ++i) column.push_back(gold_aux[i][j]);
    }
    return result;
}

void write_profile_manifest(std::ostream& out,
                            const std::vector<AnnotatorProfile>& profiles) {
    out << "annotator_id,qualification,base_competence,fatigue_rate,speed_mean_s,"
           "speed_sd_log,speeding_threshold_s,speeding_penalty\n";
    out.precision(17);
    for (const auto& p : profiles) {
        out << p.annotator_id << ',' << to_string(p.qualification) << ','
            << p.base_competence << ',' << p.fatigue_rate << ',' << p.speed_mean_s << ','
            << p.speed_sd_log << ',' << p.speeding_threshold_s << ','
            << p.speeding_penalty << '\n';
    }
}

}  // namespace msweem
