#include <doctest.h>

#include <random>

#include "qwyc/ensemble.hpp"
#include "qwyc/errors.hpp"
#include "qwyc/oracle.hpp"
#include "support.hpp"

using namespace qwyc;

namespace {
const std::string kFixtureCsv = std::string(QWYC_DATA_DIR) + "/tiny_pipeline.csv";
}

TEST_CASE("fixture csv loads with expected shape and defaults") {
    const LoadedMatrix loaded = load_score_matrix(kFixtureCsv);
    CHECK(loaded.matrix.n_examples == 8);
    CHECK(loaded.matrix.n_models == 3);
    CHECK(loaded.config.beta == 0.0);
    CHECK(loaded.costs.values == std::vector<double>(3, 1.0));
    REQUIRE(loaded.matrix.example_ids.has_value());
    CHECK((*loaded.matrix.example_ids)[0] == "e1");
    CHECK_FALSE(loaded.matrix.labels.has_value());

    const ScoreMatrix built = tiny_pipeline_instance();
    CHECK(loaded.matrix.scores == built.scores);
}

TEST_CASE("full reference splits the fixture as expected") {
    const ScoreMatrix sm = tiny_pipeline_instance();
    const FullReference ref = full_reference(sm, 0.0);
    // positives: e1, e3, e4, e6 (indices 0, 2, 3, 5)
    const std::vector<std::uint8_t> expected = {1, 0, 1, 1, 0, 1, 0, 0};
    CHECK(ref.full_decisions == expected);
    CHECK(ref.full_scores[4] == -2.0);  // e5 = -1 + -1
}

TEST_CASE("ties at beta classify positive") {
    ScoreMatrix sm;
    sm.n_examples = 1;
    sm.n_models = 2;

    SUBCASE("exact zero") {
        sm.scores = {0.0, 0.0};
        CHECK(full_reference(sm, 0.0).full_decisions[0] == 1);
    }
    SUBCASE("cancellation") {
        sm.scores = {0.5, -0.5};
        const FullReference ref = full_reference(sm, 0.0);
        CHECK(ref.full_scores[0] == 0.0);
        CHECK(ref.full_decisions[0] == 1);
    }
}

TEST_CASE("empty file is a parse error") {
    const std::string path = testsupport::write_temp("empty.csv", "");
    CHECK_THROWS_AS(load_score_matrix(path), parse_error);
}

TEST_CASE("header-less single row uses defaults") {
    const std::string path = testsupport::write_temp("bare.csv", "id,1.0,2.0\n");
    const LoadedMatrix loaded = load_score_matrix(path);
    CHECK(loaded.matrix.n_examples == 1);
    CHECK(loaded.matrix.n_models == 2);
    CHECK(loaded.matrix.score(0, 0) == 1.0);
    CHECK(loaded.costs.values == std::vector<double>{1.0, 1.0});
    CHECK(loaded.config.beta == 0.0);
}

TEST_CASE("malformed rows report the line number") {
    const std::string path =
        testsupport::write_temp("bad_cols.csv", "id,s0,s1\na,1,2\nb,3\n");
    CHECK_THROWS_WITH_AS(load_score_matrix(path), doctest::Contains(":3:"), parse_error);

    const std::string path2 =
        testsupport::write_temp("bad_value.csv", "id,s0\na,1\nb,oops\n");
    CHECK_THROWS_WITH_AS(load_score_matrix(path2), doctest::Contains("oops"), parse_error);
}

TEST_CASE("non-finite scores are a validation error") {
    const std::string path = testsupport::write_temp("nan.csv", "id,s0,s1\na,nan,1\n");
    CHECK_THROWS_AS(load_score_matrix(path), validation_error);
    const std::string path2 = testsupport::write_temp("inf.csv", "id,s0,s1\na,inf,1\n");
    CHECK_THROWS_AS(load_score_matrix(path2), validation_error);
}

TEST_CASE("labels must be 0 or 1") {
    const std::string path = testsupport::write_temp("badlabel.csv", "id,label,s0\na,2,1\n");
    CHECK_THROWS_AS(load_score_matrix(path), parse_error);
    const std::string ok = testsupport::write_temp("oklabel.csv", "id,label,s0\na,1,0.5\n");
    const LoadedMatrix loaded = load_score_matrix(ok);
    REQUIRE(loaded.matrix.labels.has_value());
    CHECK((*loaded.matrix.labels)[0] == 1);
}

TEST_CASE("meta sidecar with wrong cost arity is rejected") {
    const std::string csv = testsupport::write_temp("m.csv", "id,s0,s1\na,1,2\n");
    const std::string meta =
        testsupport::write_temp("m_meta.json", "{\"beta\": 1.5, \"costs\": [1.0]}");
    CHECK_THROWS_AS(load_score_matrix(csv, meta), validation_error);

    const std::string meta_ok =
        testsupport::write_temp("m_meta_ok.json", "{\"beta\": 1.5, \"costs\": [2.0, 3.0]}");
    const LoadedMatrix loaded = load_score_matrix(csv, meta_ok);
    CHECK(loaded.config.beta == 1.5);
    CHECK(loaded.costs.values == std::vector<double>{2.0, 3.0});
}

TEST_CASE("full reference is invariant to column permutations") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const std::size_t t = 1 + rng() % 12;
        const ScoreMatrix sm = testsupport::random_score_matrix(rng, n, t);
        const FullReference ref = full_reference(sm, 0.25);

        std::vector<std::size_t> perm(t);
        for (std::size_t k = 0; k < t; ++k) perm[k] = k;
        for (std::size_t k = t - 1; k > 0; --k) std::swap(perm[k], perm[rng() % (k + 1)]);

        ScoreMatrix shuffled = sm;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < t; ++k)
                shuffled.scores[i * t + k] = sm.score(i, perm[k]);
        const FullReference ref2 = full_reference(shuffled, 0.25);
        CHECK(ref.full_scores == ref2.full_scores);
        CHECK(ref.full_decisions == ref2.full_decisions);
    }
}

TEST_CASE("save then load round-trips scores exactly") {
    std::mt19937_64 rng(11);
    ScoreMatrix sm = testsupport::random_score_matrix(rng, 25, 6, /*with_labels=*/true);
    // Exercise awkward values.
    sm.scores[0] = 0.1 + 0.2;
    sm.scores[1] = -1e-17;
    sm.scores[2] = 12345678.901234567;
    const std::string path = testsupport::temp_path("roundtrip.csv");
    save_score_matrix(path, sm);
    const LoadedMatrix loaded = load_score_matrix(path);
    CHECK(loaded.matrix.scores == sm.scores);
    CHECK(loaded.matrix.labels == sm.labels);
}
