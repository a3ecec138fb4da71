#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "twics/population.hpp"

using namespace twics;

namespace {

OutcomeModel continuous_outcome(double delta, double sigma = 1.0) {
    OutcomeModel m;
    m.kind = OutcomeKind::Continuous;
    m.control_level = 0.0;
    m.treatment_effect = delta;
    m.noise_sd = sigma;
    return m;
}

AcceptanceModel constant_acceptance(double rate) {
    AcceptanceModel a;
    a.intercept = logit(rate);
    return a;
}

}  // namespace

TEST_CASE("n = 0 yields an empty population", "[population]") {
    const auto pop = generate_population(0, {}, continuous_outcome(1.0), constant_acceptance(0.5),
                                         std::nullopt, 1);
    CHECK(pop.records.empty());
}

TEST_CASE("sample mean of y0 obeys the law of large numbers", "[population]") {
    const std::size_t n = 100000;
    const auto pop =
        generate_population(n, {}, continuous_outcome(1.0, 1.0), constant_acceptance(0.5),
                            std::nullopt, 20240601);
    double s = 0.0;
    for (const auto& r : pop.records) {
        s += r.y0;
        CHECK(r.y1 == r.y0 + 1.0);  // shared noise, homogeneous effect
    }
    CHECK(std::fabs(s / n) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("constant propensity is exact and ids are sequential", "[population]") {
    const auto pop = generate_population(1000, {}, continuous_outcome(1.0),
                                         constant_acceptance(0.7), std::nullopt, 7);
    for (std::size_t i = 0; i < pop.records.size(); ++i) {
        CHECK(pop.records[i].id == i);
        CHECK_THAT(pop.records[i].pi_accept, Catch::Matchers::WithinAbs(0.7, 1e-12));
    }
}

TEST_CASE("generation is deterministic in the seed", "[population]") {
    const std::vector<CovariateSpec> covs = {{"age", NormalDist{60, 10}},
                                             {"sex", BernoulliDist{0.4}}};
    const auto a = generate_population(500, covs, continuous_outcome(0.5),
                                       constant_acceptance(0.8), std::nullopt, 99);
    const auto b = generate_population(500, covs, continuous_outcome(0.5),
                                       constant_acceptance(0.8), std::nullopt, 99);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].x == b.records[i].x);
        CHECK(a.records[i].y0 == b.records[i].y0);
        CHECK(a.records[i].y1 == b.records[i].y1);
        CHECK(a.records[i].pi_accept == b.records[i].pi_accept);
        CHECK(a.records[i].u_accept == b.records[i].u_accept);
    }
}

TEST_CASE("binary outcome probability outside [0,1] is an error, not a clip", "[population]") {
    OutcomeModel m;
    m.kind = OutcomeKind::Binary;
    m.control_level = 0.9;
    m.treatment_effect = 0.3;  // p1 = 1.2
    CHECK_THROWS_AS(generate_population(10, {}, m, constant_acceptance(0.5), std::nullopt, 1),
                    ModelError);

    // Covariate contribution pushing p0 negative must name a patient index.
    OutcomeModel m2;
    m2.kind = OutcomeKind::Binary;
    m2.control_level = 0.05;
    m2.treatment_effect = 0.1;
    m2.covariate_coefs = {-0.2};
    try {
        generate_population(200, {{"flag", BernoulliDist{0.5}}}, m2, constant_acceptance(0.5),
                            std::nullopt, 3);
        FAIL("expected ModelError");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("patient") != std::string::npos);
    }
}

TEST_CASE("calibration closed forms", "[population]") {
    AcceptanceModel a;
    CHECK(calibrate_acceptance_intercept(a, {}, 0.5, 1) == 0.0);
    CHECK_THAT(calibrate_acceptance_intercept(a, {}, 0.7, 1),
               Catch::Matchers::WithinAbs(std::log(0.7 / 0.3), 1e-12));
}

TEST_CASE("calibration with a covariate hits the target marginal", "[population]") {
    AcceptanceModel a;
    a.covariate_coefs = {1.0};
    const std::vector<CovariateSpec> covs = {{"x", NormalDist{0, 1}}};
    const double intercept = calibrate_acceptance_intercept(a, covs, 0.7, 42);

    // Independent Monte Carlo check of the achieved marginal.
    AcceptanceModel with_intercept = a;
    with_intercept.intercept = intercept;
    const auto pop = generate_population(200000, covs, continuous_outcome(1.0), with_intercept,
                                         std::nullopt, 777);
    double s = 0.0;
    for (const auto& r : pop.records) s += r.pi_accept;
    const double marginal = s / double(pop.records.size());
    CHECK(marginal > 0.695);
    CHECK(marginal < 0.705);
}

TEST_CASE("calibration is monotone in the target", "[population]") {
    AcceptanceModel a;
    a.covariate_coefs = {0.8};
    const std::vector<CovariateSpec> covs = {{"x", NormalDist{0, 1}}};
    double prev = -1e9;
    for (double target : {0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double ic = calibrate_acceptance_intercept(a, covs, target, 5);
        CHECK(ic > prev);
        prev = ic;
    }
}

TEST_CASE("true estimands: homogeneous-effect mixture", "[population]") {
    const auto pop = generate_population(5000, {}, continuous_outcome(1.0),
                                         constant_acceptance(0.7), std::nullopt, 11);
    const auto t = compute_true_estimands(pop);
    CHECK_THAT(t.ace_received, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(t.ace_offered, Catch::Matchers::WithinAbs(0.7, 1e-12));
    CHECK_THAT(t.cace, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(t.acceptance_rate, Catch::Matchers::WithinAbs(0.7, 1e-12));
}

TEST_CASE("true estimands: full compliance collapses the panel", "[population]") {
    AcceptanceModel full;
    full.intercept = 40.0;  // logistic(40) == 1 in double precision
    const auto pop =
        generate_population(2000, {}, continuous_outcome(0.8), full, std::nullopt, 13);
    const auto t = compute_true_estimands(pop);
    CHECK(t.acceptance_rate == 1.0);
    CHECK(t.ace_offered == t.ace_received);
    CHECK(t.cace == t.ace_received);
}

TEST_CASE("true estimands: null effect", "[population]") {
    auto pop = generate_population(1000, {}, continuous_outcome(0.0), constant_acceptance(0.6),
                                   std::nullopt, 17);
    const auto t = compute_true_estimands(pop);
    CHECK(t.ace_received == 0.0);
    CHECK(t.ace_offered == 0.0);
    CHECK(t.cace == 0.0);
}

TEST_CASE("true estimands error cases", "[population]") {
    CHECK_THROWS_AS(compute_true_estimands(std::vector<PatientRecord>{}), EstimationError);

    PatientRecord r;
    r.pi_accept = 0.0;
    r.u_accept = 0.5;  // never a complier
    CHECK_THROWS_AS(compute_true_estimands(std::vector<PatientRecord>{r}), EstimationError);
}

TEST_CASE("dilution identity ace_offered = rate * ace_received under constant propensity",
          "[population]") {
    // Heterogeneous effects but constant acceptance: the identity holds by
    // direct summation, to 1e-12.
    OutcomeModel m = continuous_outcome(0.5);
    m.effect_heterogeneity = {0.7};
    const std::vector<CovariateSpec> covs = {{"x", NormalDist{0, 1}}};
    const auto pop =
        generate_population(3000, covs, m, constant_acceptance(0.73), std::nullopt, 19);
    const auto t = compute_true_estimands(pop);
    CHECK_THAT(t.ace_offered, Catch::Matchers::WithinAbs(t.acceptance_rate * t.ace_received, 1e-12));
}

TEST_CASE("biomarker generation respects prevalence", "[population]") {
    BiomarkerModel bm;
    bm.prevalence = 60.0 / 1320.0;
    const auto pop = generate_population(100000, {}, continuous_outcome(1.0),
                                         constant_acceptance(0.9), bm, 23);
    std::size_t pos = 0;
    for (const auto& r : pop.records) {
        REQUIRE(r.biomarker.has_value());
        if (*r.biomarker) ++pos;
    }
    const double p = bm.prevalence;
    const double se = std::sqrt(p * (1 - p) / 100000.0);
    CHECK(std::fabs(double(pos) / 100000.0 - p) < 3 * se);
}
