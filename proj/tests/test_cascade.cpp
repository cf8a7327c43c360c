#include <doctest.h>

#include <random>

#include "qwyc/cascade.hpp"
#include "qwyc/errors.hpp"
#include "qwyc/oracle.hpp"
#include "support.hpp"

using namespace qwyc;
using testsupport::kInf;

namespace {

CascadePolicy fixture_policy() {
    CascadePolicy p;
    p.order = {2, 1, 0};
    p.eps_neg = {0.0, 0.0, -kInf};
    p.eps_pos = {0.0, 0.0, kInf};
    p.beta = 0.0;
    return p;
}

}  // namespace

TEST_CASE("per-example evaluation on the fixture") {
    const ScoreMatrix sm = tiny_pipeline_instance();
    const CascadePolicy p = fixture_policy();
    const CostVector costs = CostVector::ones(3);

    SUBCASE("e5 rejects at stage 1") {
        const EvalOutcome o = evaluate_example(p, sm.row(4), costs);
        CHECK_FALSE(o.positive);
        CHECK(o.stop_stage == 1);
        CHECK(o.cost_paid == 1.0);
        CHECK(o.partial_score == -1.0);
    }
    SUBCASE("e3 accepts at stage 2") {
        const EvalOutcome o = evaluate_example(p, sm.row(2), costs);
        CHECK(o.positive);
        CHECK(o.stop_stage == 2);
        CHECK(o.cost_paid == 2.0);
    }
    SUBCASE("e1 rides to the final stage") {
        const EvalOutcome o = evaluate_example(p, sm.row(0), costs);
        CHECK(o.positive);
        CHECK(o.stop_stage == 3);
        CHECK(o.cost_paid == 3.0);
    }
}

TEST_CASE("sentinel thresholds mean full evaluation") {
    std::mt19937_64 rng(3);
    const ScoreMatrix sm = testsupport::random_score_matrix(rng, 30, 5);
    const FullReference ref = full_reference(sm, 0.1);
    CascadePolicy p;
    p.order = {4, 2, 0, 1, 3};
    p.eps_neg.assign(5, -kInf);
    p.eps_pos.assign(5, kInf);
    p.beta = 0.1;
    const CostVector costs = CostVector::ones(5);
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        const EvalOutcome o = evaluate_example(p, sm.row(i), costs);
        CHECK(o.stop_stage == 5);
        CHECK(o.positive == (ref.full_decisions[i] != 0));
    }
}

TEST_CASE("matrix metrics on the fixture") {
    const ScoreMatrix sm = tiny_pipeline_instance();
    const FullReference ref = full_reference(sm, 0.0);
    const Metrics m = evaluate_matrix(fixture_policy(), sm, CostVector::ones(3), ref);
    CHECK(m.mean_cost == 1.75);
    CHECK(m.mean_models == 1.75);
    CHECK(m.pct_diff == 0.0);
    CHECK(m.n_diff == 0);
    CHECK(m.stop_histogram == std::vector<long long>{4, 2, 2});
    CHECK_FALSE(m.accuracy.has_value());
}

TEST_CASE("no-early-stop policy pays the full cost and never disagrees") {
    std::mt19937_64 rng(5);
    const ScoreMatrix sm = testsupport::random_score_matrix(rng, 40, 4);
    const FullReference ref = full_reference(sm, 0.0);
    CascadePolicy p;
    p.order = {0, 1, 2, 3};
    p.eps_neg.assign(4, -kInf);
    p.eps_pos.assign(4, kInf);
    p.beta = 0.0;
    CostVector costs{{0.5, 1.5, 2.0, 3.0}};
    const Metrics m = evaluate_matrix(p, sm, costs, ref);
    CHECK(m.mean_cost == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(m.pct_diff == 0.0);
    CHECK(m.mean_models == 4.0);
}

TEST_CASE("stage partition counts on the fixture") {
    const ScoreMatrix sm = tiny_pipeline_instance();
    const CascadePolicy p = fixture_policy();

    const StagePartition s1 = stage_partition(p, sm, 1);
    CHECK(s1.n_positive == 1);   // e6
    CHECK(s1.n_negative == 3);   // e5, e7, e8
    CHECK(s1.n_uncertain == 4);
    CHECK(s1.n_cascade_uncertain == 4);

    const StagePartition s0 = stage_partition(p, sm, 0);
    CHECK(s0.n_cascade_uncertain == 8);
    CHECK(s0.n_uncertain == 8);

    CHECK_THROWS_AS(stage_partition(p, sm, 4), validation_error);
    CHECK_THROWS_AS(stage_partition(p, sm, -1), validation_error);
}

TEST_CASE("wide-open stage leaves everything uncertain") {
    const ScoreMatrix sm = tiny_pipeline_instance();
    CascadePolicy p = fixture_policy();
    p.eps_neg[0] = -kInf;
    p.eps_pos[0] = kInf;
    const StagePartition s1 = stage_partition(p, sm, 1);
    CHECK(s1.n_cascade_uncertain == 8);
    CHECK(s1.n_uncertain == 8);
}

TEST_CASE("uncertain counts form a decreasing chain") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t t = 2 + rng() % 6;
        const ScoreMatrix sm = testsupport::random_score_matrix(rng, 60, t);
        CascadePolicy p;
        p.order.resize(t);
        for (std::size_t k = 0; k < t; ++k) p.order[k] = static_cast<int>(k);
        for (std::size_t k = t - 1; k > 0; --k) std::swap(p.order[k], p.order[rng() % (k + 1)]);
        p.eps_neg.assign(t, -0.5);
        p.eps_pos.assign(t, 0.5);
        p.eps_neg[t - 1] = -kInf;
        p.eps_pos[t - 1] = kInf;
        p.beta = 0.0;

        std::size_t prev = sm.n_examples;
        for (std::size_t r = 0; r <= t; ++r) {
            const StagePartition part = stage_partition(p, sm, static_cast<int>(r));
            CHECK(part.n_cascade_uncertain <= prev);
            prev = part.n_cascade_uncertain;
            CHECK(part.n_positive + part.n_negative + part.n_uncertain == sm.n_examples);
        }
    }
}

TEST_CASE("widening thresholds never cuts cost and shrinks early exits") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t t = 3 + rng() % 4;
        const ScoreMatrix sm = testsupport::random_score_matrix(rng, 50, t);
        const FullReference ref = full_reference(sm, 0.0);
        const CostVector costs = CostVector::ones(t);

        CascadePolicy narrow;
        narrow.order.resize(t);
        for (std::size_t k = 0; k < t; ++k) narrow.order[k] = static_cast<int>(k);
        narrow.eps_neg.assign(t, -0.4);
        narrow.eps_pos.assign(t, 0.4);
        narrow.eps_neg[t - 1] = -kInf;
        narrow.eps_pos[t - 1] = kInf;
        narrow.beta = 0.0;

        CascadePolicy wide = narrow;
        const std::size_t r = rng() % (t - 1);
        wide.eps_neg[r] = -1.5;
        wide.eps_pos[r] = 1.2;

        const Metrics mn = evaluate_matrix(narrow, sm, costs, ref);
        const Metrics mw = evaluate_matrix(wide, sm, costs, ref);
        CHECK(mw.mean_cost >= mn.mean_cost);

        // Early-classified sets are nested: anything stopping early under
        // the wide policy stops at least as early under the narrow one.
        for (std::size_t i = 0; i < sm.n_examples; ++i) {
            const EvalOutcome ow = evaluate_example(wide, sm.row(i), costs);
            const EvalOutcome on = evaluate_example(narrow, sm.row(i), costs);
            if (ow.stop_stage < static_cast<int>(t)) CHECK(on.stop_stage <= ow.stop_stage);
        }
    }
}

TEST_CASE("matrix evaluation equals the fold of per-example evaluation") {
    std::mt19937_64 rng(29);
    const std::size_t t = 5;
    const ScoreMatrix sm = testsupport::random_score_matrix(rng, 64, t, /*with_labels=*/true);
    const FullReference ref = full_reference(sm, -0.2);
    CascadePolicy p;
    p.order = {3, 0, 4, 1, 2};
    p.eps_neg = {-0.7, -0.9, -1.1, -1.3, -kInf};
    p.eps_pos = {0.7, 0.9, 1.1, 1.3, kInf};
    p.beta = -0.2;
    CostVector costs{{1.0, 2.0, 0.25, 1.5, 4.0}};

    const Metrics m = evaluate_matrix(p, sm, costs, ref);
    double total_cost = 0.0;
    long long models = 0, diffs = 0;
    std::vector<long long> hist(t, 0);
    for (std::size_t i = 0; i < sm.n_examples; ++i) {
        const EvalOutcome o = evaluate_example(p, sm.row(i), costs);
        total_cost += o.cost_paid;
        models += o.stop_stage;
        ++hist[static_cast<std::size_t>(o.stop_stage - 1)];
        if (o.positive != (ref.full_decisions[i] != 0)) ++diffs;
    }
    CHECK(m.mean_cost == total_cost / 64.0);
    CHECK(m.mean_models == static_cast<double>(models) / 64.0);
    CHECK(m.n_diff == diffs);
    CHECK(m.stop_histogram == hist);
}

TEST_CASE("policy json round-trips including sentinels") {
    CascadePolicy p = fixture_policy();
    const std::string text = p.to_json();
    CHECK(text.find("\"-inf\"") != std::string::npos);
    const CascadePolicy q = CascadePolicy::from_json(text);
    CHECK(q.order == p.order);
    CHECK(q.eps_neg == p.eps_neg);
    CHECK(q.eps_pos == p.eps_pos);
    CHECK(q.beta == p.beta);
}

TEST_CASE("policy validation catches broken inputs") {
    CascadePolicy p = fixture_policy();
    SUBCASE("not a permutation") {
        p.order = {0, 0, 2};
        CHECK_THROWS_AS(p.validate(), validation_error);
    }
    SUBCASE("crossed thresholds") {
        p.eps_neg[0] = 1.0;
        p.eps_pos[0] = -1.0;
        CHECK_THROWS_AS(p.validate(), validation_error);
    }
    SUBCASE("dimension mismatch at evaluation") {
        std::mt19937_64 rng(1);
        const ScoreMatrix sm = testsupport::random_score_matrix(rng, 4, 2);
        const FullReference ref = full_reference(sm, 0.0);
        CHECK_THROWS_AS(evaluate_matrix(p, sm, CostVector::ones(2), ref), validation_error);
    }
}
