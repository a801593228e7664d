#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "msweem/baselines.hpp"
#include "msweem/error.hpp"

using namespace msweem;

TEST_SUITE_BEGIN("baselines");

namespace {

AnnotationMatrix make_matrix(std::size_t n_annotators, int n_classes,
                             const std::vector<std::vector<int>>& labels_by_item) {
    AnnotationMatrix m;
    for (std::size_t a = 0; a < n_annotators; ++a)
        m.annotator_ids.push_back("a" + std::to_string(a + 1));
    m.n_classes = n_classes;
    for (std::size_t i = 0; i < labels_by_item.size(); ++i) {
        m.item_ids.push_back("i" + std::to_string(i + 1));
        std::vector<std::pair<std::size_t, int>> row;
        for (std::size_t a = 0; a < labels_by_item[i].size(); ++a) {
            if (labels_by_item[i][a] < 0) continue;  // -1 = not annotated
            row.emplace_back(a, labels_by_item[i][a]);
        }
        m.annotations.push_back(std::move(row));
    }
    m.validate();
    return m;
}

// Brute-force posterior over true labels by enumerating every latent
// configuration (T_i, S_i1..S_im) explicitly; independent of the EM E-step.
std::vector<double> brute_force_posterior(const AnnotationMatrix& m, std::size_t item,
                                          const std::vector<double>& theta,
                                          const std::vector<std::vector<double>>& xi) {
    const int K = m.n_classes;
    const auto& anns = m.annotations[item];
    std::vector<double> joint(K, 0.0);
    const std::size_t n_configs = std::size_t(1) << anns.size();
    for (int t = 0; t < K; ++t) {
        double total = 0.0;
        for (std::size_t mask = 0; mask < n_configs; ++mask) {
            double p = 1.0 / K;
            for (std::size_t k = 0; k < anns.size(); ++k) {
                const auto& [a, label] = anns[k];
                const bool spam = (mask >> k) & 1;
                if (spam)
                    p *= theta[a] * xi[a][label];
                else
                    p *= (1.0 - theta[a]) * (label == t ? 1.0 : 0.0);
            }
            total += p;
        }
        joint[t] = total;
    }
    double z = 0.0;
    for (double v : joint) z += v;
    for (double& v : joint) v /= z;
    return joint;
}

}  // namespace

TEST_CASE("majority vote picks the modal label with ties to the lower value") {
    CHECK(majority_vote({1, 1, 0}) == 1);
    CHECK(majority_vote({1, 0}) == 0);
    CHECK(majority_vote({2, 2, 2}) == 2);
    CHECK(majority_vote({3, 1, 3, 1}) == 1);
    CHECK_THROWS_AS(majority_vote({}), ArgumentError);
}

TEST_CASE("majority vote ignores annotation order") {
    const std::vector<int> a = {0, 1, 1, 2, 1};
    const std::vector<int> b = {1, 2, 1, 0, 1};
    CHECK(majority_vote(a) == majority_vote(b));
}

TEST_CASE("unanimous annotations recover the unanimous labels") {
    const auto m = make_matrix(3, 2, {{1, 1, 1}, {0, 0, 0}, {1, 1, 1}, {0, 0, 0}});
    const MaceModel model = mace_fit(m, {});
    CHECK(model.hard_label("i1") == 1);
    CHECK(model.hard_label("i2") == 0);
    CHECK(model.hard_label("i3") == 1);
    CHECK(model.hard_label("i4") == 0);
    for (const auto& p : model.posteriors) {
        double sum = 0.0;
        for (double v : p) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("a constant-label annotator earns the highest spam probability") {
    // a1 and a2 track the consensus; a3 answers 1 on every item.
    const auto m = make_matrix(3, 2,
                               {{0, 0, 1},
                                {1, 1, 1},
                                {0, 0, 1},
                                {1, 1, 1},
                                {0, 0, 1},
                                {0, 0, 1}});
    const MaceModel model = mace_fit(m, {});
    CHECK(model.spam_prob[2] > model.spam_prob[0]);
    CHECK(model.spam_prob[2] > model.spam_prob[1]);
    // Consensus items resolve to the majority view.
    CHECK(model.hard_label("i1") == 0);
    CHECK(model.hard_label("i2") == 1);
}

TEST_CASE("posteriors match brute-force marginalization at converged parameters") {
    const auto m = make_matrix(3, 2,
                               {{0, 0, 1},
                                {1, 1, 1},
                                {0, 1, 1},
                                {1, 0, 1},
                                {0, 0, 1},
                                {1, 1, 0}});
    const MaceModel model = mace_fit(m, {});
    for (std::size_t i = 0; i < m.item_ids.size(); ++i) {
        const auto oracle =
            brute_force_posterior(m, i, model.spam_prob, model.spam_dist);
        for (int k = 0; k < m.n_classes; ++k)
            CHECK(std::fabs(model.posteriors[i][k] - oracle[k]) < 1e-9);
    }
}

TEST_CASE("restarted EM reaches the best objective of an initialization grid") {
    const auto m = make_matrix(3, 2,
                               {{0, 0, 1},
                                {1, 1, 1},
                                {0, 1, 1},
                                {1, 0, 1},
                                {0, 0, 1},
                                {1, 1, 0}});
    const MaceModel fitted = mace_fit(m, {});

    double grid_best = -1e300;
    const double theta_grid[] = {0.25, 0.5, 0.75};
    const std::vector<std::vector<double>> xi_options = {
        {0.5, 0.5}, {0.9, 0.1}, {0.1, 0.9}};
    for (double t1 : theta_grid)
        for (double t2 : theta_grid)
            for (double t3 : theta_grid)
                for (const auto& xi : xi_options) {
                    const MaceModel run =
                        mace_fit_from(m, {}, {t1, t2, t3}, {xi, xi, xi});
                    grid_best = std::max(grid_best, run.objective);
                }
    CHECK(fitted.objective >= grid_best - 1e-6);
}

TEST_CASE("a single annotator is taken at their word") {
    const auto m = make_matrix(1, 2, {{1}, {0}, {1}});
    const MaceModel model = mace_fit(m, {});
    CHECK(model.hard_label("i1") == 1);
    CHECK(model.hard_label("i2") == 0);
    CHECK(model.hard_label("i3") == 1);
}

TEST_CASE("unanimity concentrates posterior mass") {
    const auto m = make_matrix(3, 2, {{1, 1, 1}});
    const MaceModel model = mace_fit(m, {});
    CHECK(model.posterior("i1")[1] > 0.9);
    CHECK_THROWS_AS(model.posterior("missing"), ArgumentError);
}

TEST_CASE("relabeling classes permutes the model consistently") {
    const auto original = make_matrix(3, 2,
                                      {{0, 0, 1},
                                       {1, 1, 1},
                                       {0, 1, 0},
                                       {1, 0, 1},
                                       {0, 0, 0},
                                       {1, 1, 0}});
    auto swapped_labels = std::vector<std::vector<int>>{
        {1, 1, 0}, {0, 0, 0}, {1, 0, 1}, {0, 1, 0}, {1, 1, 1}, {0, 0, 1}};
    const auto swapped = make_matrix(3, 2, swapped_labels);

    // Symmetric initialization so both runs walk mirrored trajectories.
    const std::vector<double> theta0 = {0.3, 0.5, 0.7};
    const std::vector<std::vector<double>> xi0(3, {0.5, 0.5});
    const MaceModel a = mace_fit_from(original, {}, theta0, xi0);
    const MaceModel b = mace_fit_from(swapped, {}, theta0, xi0);

    for (std::size_t i = 0; i < a.posteriors.size(); ++i) {
        CHECK(std::fabs(a.posteriors[i][0] - b.posteriors[i][1]) < 1e-9);
        CHECK(std::fabs(a.posteriors[i][1] - b.posteriors[i][0]) < 1e-9);
    }
    for (std::size_t m_i = 0; m_i < 3; ++m_i) {
        CHECK(std::fabs(a.spam_prob[m_i] - b.spam_prob[m_i]) < 1e-9);
        CHECK(std::fabs(a.spam_dist[m_i][0] - b.spam_dist[m_i][1]) < 1e-9);
    }
}

TEST_CASE("posterior export format") {
    const auto m = make_matrix(2, 2, {{1, 1}});
    MaceModel model = mace_fit(m, {});
    std::ostringstream out;
    write_mace_posteriors(out, model);
    std::istringstream check(out.str());
    std::string header;
    std::getline(check, header);
    CHECK(header == "item_id,label,posterior");
    std::string row;
    int rows = 0;
    while (std::getline(check, row)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("matrix construction from a dataset") {
    std::vector<TextUnit> texts = {{"t1", "alpha"}, {"t2", "beta"}};
    std::vector<AnnotationRecord> records;
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) {
            AnnotationRecord r;
            r.text_id = i == 0 ? "t1" : "t2";
            r.annotator_id = a == 0 ? "x" : "y";
            r.labels = {{"aux", (i + a) % 2}, {"y", 0}};
            r.worktime_s = 4;
            r.annotator_throughput = 2;
            records.push_back(r);
        }
    // Both classes must appear somewhere for K to be right.
    records[0].labels["y"] = 1;
    const Dataset d(texts, records, LabelSchema{"y", {"aux"}});
    const AnnotationMatrix m = AnnotationMatrix::from_dataset(d, "aux");
    CHECK(m.item_ids.size() == 2);
    CHECK(m.annotator_ids.size() == 2);
    CHECK(m.n_classes == 2);
    CHECK(m.annotations[0].size() == 2);
}

TEST_SUITE_END();
