#include "msweem/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "msweem/csv.hpp"
#include "msweem/error.hpp"
#include "msweem/stats.hpp"

namespace msweem {

std::vector<AlignmentScore> alignment_scores(const Dataset& dataset,
                                             const std::string& rating_label,
                                             const AlignmentConfig& config) {
    struct Deviation {
        std::string text_id;
        std::string annotator_id;
        double value = 0.0;
    };
    std::vector<Deviation> deviations;

    for (const auto& t : dataset.texts()) {
        std::vector<double> ratings;
        std::vector<std::pair<std::string, double>> rated;
        for (std::size_t ri : dataset.record_indices(t.text_id)) {
            const auto& rec = dataset.records()[ri];
            auto it = rec.labels.find(rating_label);
            if (it == rec.labels.end()) continue;
            ratings.push_back(static_cast<double>(it->second));
            rated.emplace_back(rec.annotator_id, static_cast<double>(it->second));
        }
        if (ratings.size() < 2)
            throw ArgumentError("alignment_scores: item " + t.text_id +
                                " has fewer than 2 ratings");
        const double item_mean = stats::mean(ratings);
        for (const auto& [annotator, r] : rated)
            deviations.push_back({t.text_id, annotator, std::fabs(r - item_mean)});
    }

    double max_dev = 0.0;
    for (const auto& d : deviations) max_dev = std::max(max_dev, d.value);
    if (max_dev == 0.0)
        throw DegenerateError("alignment_scores: all ratings identical everywhere");

    std::vector<AlignmentScore> out;
    out.reserve(deviations.size());
    for (const auto& d : deviations) {
        AlignmentScore s;
        s.text_id = d.text_id;
        s.annotator_id = d.annotator_id;
        s.score = d.value / max_dev;
        s.aligned = s.score <= config.threshold;
        out.push_back(std::move(s));
    }
    return out;
}

WelchResult welch_t_test(const std::vector<double>& sample_a,
                         const std::vector<double>& sample_b) {
    if (sample_a.size() < 2 || sample_b.size() < 2)
        throw ArgumentError("welch_t_test: each sample needs >= 2 values");
    const double ma = stats::mean(sample_a);
    const double mb = stats::mean(sample_b);
    const double va = stats::sample_variance(sample_a);
    const double vb = stats::sample_variance(sample_b);
    const double na = static_cast<double>(sample_a.size());
    const double nb = static_cast<double>(sample_b.size());

    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        if (ma == mb) return {0.0, na + nb - 2.0, 1.0};  // identical constants
        throw DegenerateError("welch_t_test: zero variance with unequal means");
    }
    WelchResult result;
    result.t = (ma - mb) / std::sqrt(se2);
    result.df = se2 * se2 /
                ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    result.p = stats::t_two_sided_p(result.t, result.df);
    return result;
}

CohortStats cohort_stats(const Dataset& dataset) {
    std::vector<double> wt_master, wt_normal, tp_master, tp_normal;
    for (const auto& r : dataset.records()) {
        if (r.qualification == Qualification::master) {
            wt_master.push_back(r.worktime_s);
            tp_master.push_back(static_cast<double>(r.annotator_throughput));
        } else if (r.qualification == Qualification::normal) {
            wt_normal.push_back(r.worktime_s);
            tp_normal.push_back(static_cast<double>(r.annotator_throughput));
        }
    }
    if (wt_master.size() < 2 || wt_normal.size() < 2)
        throw DegenerateError("cohort_stats: need >= 2 records per cohort");

    CohortStats out;
    auto fill = [](CohortGroup& g, const std::string& name, const std::vector<double>& wt,
                   const std::vector<double>& tp) {
        g.name = name;
        g.n = wt.size();
        g.mean_worktime = stats::mean(wt);
        g.var_worktime = stats::sample_variance(wt);
        g.mean_throughput = stats::mean(tp);
        g.var_throughput = stats::sample_variance(tp);
    };
    fill(out.master, "master", wt_master, tp_master);
    fill(out.normal, "normal", wt_normal, tp_normal);
    out.worktime_test = welch_t_test(wt_master, wt_normal);
    out.throughput_test = welch_t_test(tp_master, tp_normal);
    return out;
}

namespace {

// Solves A x = b for symmetric positive-definite A by Gaussian elimination
// with partial pivoting; throws on (near) singularity.
std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                 std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            throw DegenerateError("design matrix is rank deficient");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

std::vector<std::vector<double>> invert_spd(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            throw DegenerateError("information matrix is singular");
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log sigmoid(x) evaluated without overflow for any x.
double log_sigmoid(double x) {
    return std::min(0.0, x) - std::log1p(std::exp(-std::fabs(x)));
}

double logistic_loglik(const std::vector<std::vector<double>>& design,
                       const std::vector<int>& outcome, const std::vector<double>& beta) {
    double ll = 0.0;
    for (std::size_t i = 0; i < design.size(); ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < beta.size(); ++j) eta += design[i][j] * beta[j];
        ll += log_sigmoid(outcome[i] == 1 ? eta : -eta);
    }
    return ll;
}

}  // namespace

LogisticFit fit_logistic(const std::vector<std::vector<double>>& design,
                         const std::vector<int>& outcome,
                         const std::vector<std::string>& terms,
                         std::size_t max_iterations, double tolerance) {
    if (design.size() != outcome.size())
        throw ArgumentError("fit_logistic: design/outcome length mismatch");
    if (design.empty()) throw ArgumentError("fit_logistic: empty design");
    const std::size_t p = design.front().size();
    if (terms.size() != p) throw ArgumentError("fit_logistic: terms/columns mismatch");
    for (const auto& row : design)
        if (row.size() != p) throw ArgumentError("fit_logistic: ragged design matrix");

    std::size_t ones = 0;
    for (int y : outcome) {
        if (y != 0 && y != 1) throw ArgumentError("fit_logistic: outcome must be 0/1");
        if (y == 1) ++ones;
    }
    if (ones == 0 || ones == outcome.size())
        throw DegenerateError("fit_logistic: outcome has a single class");

    LogisticFit fit;
    fit.terms = terms;
    fit.beta.assign(p, 0.0);

    std::vector<double> eta(design.size()), mu(design.size());
    double prev_ll = logistic_loglik(design, outcome, fit.beta);

    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        fit.iterations = iter;
        // Score and observed information at the current beta.
        std::vector<double> score(p, 0.0);
        std::vector<std::vector<double>> info(p, std::vector<double>(p, 0.0));
        for (std::size_t i = 0; i < design.size(); ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += design[i][j] * fit.beta[j];
            eta[i] = e;
            mu[i] = sigmoid(e);
            const double w = mu[i] * (1.0 - mu[i]);
            const double r = static_cast<double>(outcome[i]) - mu[i];
            for (std::size_t j = 0; j < p; ++j) {
                score[j] += design[i][j] * r;
                for (std::size_t k = 0; k <= j; ++k)
                    info[j][k] += w * design[i][j] * design[i][k];
            }
        }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j + 1; k < p; ++k) info[j][k] = info[k][j];

        double grad_norm = 0.0;
        for (double s : score) grad_norm = std::max(grad_norm, std::fabs(s));

        std::vector<double> step;
        try {
            step = solve_linear(info, score);
        } catch (const DegenerateError&) {
            if (iter == 1) throw;  // genuinely rank-deficient design
            fit.diagnostic = "information matrix became singular (separation?)";
            break;
        }

        // Newton step with halving so the log-likelihood never decreases.
        double scale = 1.0;
        std::vector<double> candidate(p);
        double new_ll = prev_ll;
        for (int half = 0; half < 30; ++half) {
            for (std::size_t j = 0; j < p; ++j)
                candidate[j] = fit.beta[j] + scale * step[j];
            new_ll = logistic_loglik(design, outcome, candidate);
            if (new_ll >= prev_ll - 1e-12) break;
            scale *= 0.5;
        }
        fit.beta = candidate;
        fit.log_likelihood = new_ll;

        double max_coef = 0.0;
        for (double b : fit.beta) max_coef = std::max(max_coef, std::fabs(b));
        if (max_coef > 30.0) {
            fit.diagnostic = "coefficients diverging (separation suspected)";
            break;
        }
        if (grad_norm < 1e-6 && new_ll - prev_ll < tolerance) {
            fit.converged = true;
            prev_ll = new_ll;
            break;
        }
        prev_ll = new_ll;
    }

    if (fit.converged) {
        // Standard errors from the inverse observed information at the MLE.
        std::vector<std::vector<double>> info(p, std::vector<double>(p, 0.0));
        for (std::size_t i = 0; i < design.size(); ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += design[i][j] * fit.beta[j];
            const double m = sigmoid(e);
            const double w = m * (1.0 - m);
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t k = 0; k < p; ++k)
                    info[j][k] += w * design[i][j] * design[i][k];
        }
        const auto cov = invert_spd(std::move(info));
        fit.se.resize(p);
        fit.z.resize(p);
        fit.p.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            fit.se[j] = std::sqrt(std::max(0.0, cov[j][j]));
            fit.z[j] = fit.se[j] > 0.0 ? fit.beta[j] / fit.se[j] : 0.0;
            fit.p[j] = 2.0 * (1.0 - stats::normal_cdf(std::fabs(fit.z[j])));
        }
    }
    return fit;
}

LogisticFit fit_logistic_cohort(const Dataset& dataset, const std::string& rating_label,
                                const AlignmentConfig& config) {
    const auto scores = alignment_scores(dataset, rating_label, config);

    // Speed is min-max-normalized worktime; throughput likewise.
    std::vector<double> raw_wt, raw_tp;
    for (const auto& r : dataset.records()) {
        raw_wt.push_back(r.worktime_s);
        raw_tp.push_back(static_cast<double>(r.annotator_throughput));
    }
    const auto norm_wt = minmax_normalize(raw_wt);
    const auto norm_tp = minmax_normalize(raw_tp);

    std::map<std::pair<std::string, std::string>, std::size_t> record_of;
    for (std::size_t ri = 0; ri < dataset.records().size(); ++ri) {
        const auto& r = dataset.records()[ri];
        record_of[{r.text_id, r.annotator_id}] = ri;
    }

    std::vector<std::vector<double>> design;
    std::vector<int> outcome;
    for (const auto& s : scores) {
        auto it = record_of.find({s.text_id, s.annotator_id});
        if (it == record_of.end()) continue;
        const auto& rec = dataset.records()[it->second];
        const double speed = norm_wt[it->second];
        const double throughput = norm_tp[it->second];
        const double master = rec.qualification == Qualification::master ? 1.0 : 0.0;
        design.push_back(
            {1.0, speed, throughput, master, master * speed, master * throughput});
        outcome.push_back(s.aligned ? 1 : 0);
    }

    return fit_logistic(design, outcome,
                        {"intercept", "speed", "throughput", "master", "master:speed",
                         "master:throughput"});
}

void write_logistic_fit(std::ostream& out, const LogisticFit& fit) {
    out << "term,beta,se,z,p\n";
    for (std::size_t j = 0; j < fit.terms.size(); ++j) {
        out << fit.terms[j] << ',' << csv::format_double(fit.beta[j]);
        if (fit.converged)
            out << ',' << csv::format_double(fit.se[j]) << ','
                << csv::format_double(fit.z[j]) << ',' << csv::format_double(fit.p[j]);
        else
            out << ",,,";
        out << '\n';
    }
    if (!fit.converged) out << "# not converged: " << fit.diagnostic << '\n';
}

void write_cohort_stats(std::ostream& out, const CohortStats& stats_in) {
    out << "cohort,n,mean_worktime_s,var_worktime,mean_throughput,var_throughput\n";
    auto row = [&](const CohortGroup& g) {
        out << g.name << ',' << g.n << ',' << csv::format_double(g.mean_worktime) << ','
            << csv::format_double(g.var_worktime) << ','
            << csv::format_double(g.mean_throughput) << ','
            << csv::format_double(g.var_throughput) << '\n';
    };
    row(stats_in.master);
    row(stats_in.normal);
    out << "test,t,df,p\n";
    out << "worktime," << csv::format_double(stats_in.worktime_test.t) << ','
        << csv::format_double(stats_in.worktime_test.df) << ','
        << csv::format_double(stats_in.worktime_test.p) << '\n';
    out << "throughput," << csv::format_double(stats_in.throughput_test.t) << ','
        << csv::format_double(stats_in.throughput_test.df) << ','
        << csv::format_double(stats_in.throughput_test.p) << '\n';
}

}  // namespace msweem
