#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "twics/cohort.hpp"
#include "twics/population.hpp"
#include "twics/rng.hpp"

using namespace twics;

namespace {

Population make_population(std::size_t n, std::uint64_t seed) {
    std::vector<CovariateSpec> covs = {{"age", NormalDist{60, 10}}, {"sex", BernoulliDist{0.5}}};
    OutcomeModel m;
    m.treatment_effect = 1.0;
    AcceptanceModel a;
    return generate_population(n, covs, m, a, std::nullopt, seed);
}

}  // namespace

TEST_CASE("enrollment records staged consent", "[cohort]") {
    auto pop = make_population(1, 1);
    CohortRegistry reg;
    enroll_patient(reg, pop.records[0], true, 5);
    REQUIRE(reg.size() == 1);
    const auto& e = reg.entry(0);
    CHECK(e.enrollment_time == 5);
    CHECK(e.consent.stage1_cohort());
    CHECK(e.consent.stage2_broad_randomization());
    CHECK(e.consent.stage3("t") == Stage3::NotOffered);
}

TEST_CASE("duplicate enrollment is an error", "[cohort]") {
    auto pop = make_population(1, 2);
    CohortRegistry reg;
    enroll_patient(reg, pop.records[0], true, 0);
    CHECK_THROWS_AS(enroll_patient(reg, pop.records[0], false, 1), EnrollmentError);
}

TEST_CASE("patients without broad consent never pass screening", "[cohort]") {
    auto pop = make_population(10, 3);
    CohortRegistry reg;
    for (std::size_t i = 0; i < 10; ++i)
        enroll_patient(reg, pop.records[i], i % 2 == 0, 0);  // 5 with broad consent
    const auto ids = screen_eligible(reg, pop, {}, "t", 0);
    CHECK(ids.size() == 5);
    for (PatientId id : ids) CHECK(reg.entry(id).consent.stage2_broad_randomization());
}

TEST_CASE("screening equals a brute-force filter", "[cohort]") {
    auto pop = make_population(100, 4);
    CohortRegistry reg;
    Rng rng(17);
    for (const auto& r : pop.records) enroll_patient(reg, r, rng.bernoulli(0.8), 0);

    EligibilityCriteria crit;
    crit.predicates.push_back({"age", 50.0, std::nullopt, std::nullopt});
    const auto ids = screen_eligible(reg, pop, crit, "t", 0);

    std::vector<PatientId> expected;
    for (const auto& r : pop.records)
        if (reg.entry(r.id).consent.stage2_broad_randomization() && r.x[0] >= 50.0)
            expected.push_back(r.id);
    CHECK(ids == expected);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
}

TEST_CASE("screening rejects unknown covariates", "[cohort]") {
    auto pop = make_population(5, 5);
    CohortRegistry reg;
    for (const auto& r : pop.records) enroll_patient(reg, r, true, 0);
    EligibilityCriteria crit;
    crit.predicates.push_back({"bmi", 20.0, std::nullopt, std::nullopt});
    CHECK_THROWS_AS(screen_eligible(reg, pop, crit, "t", 0), CriteriaError);
}

TEST_CASE("screening on an empty registry is empty", "[cohort]") {
    auto pop = make_population(0, 6);
    CohortRegistry reg;
    CHECK(screen_eligible(reg, pop, {}, "t", 0).empty());
}

TEST_CASE("patients enrolled later are invisible to earlier screens", "[cohort]") {
    auto pop = make_population(4, 7);
    CohortRegistry reg;
    enroll_patient(reg, pop.records[0], true, 0);
    enroll_patient(reg, pop.records[1], true, 10);
    CHECK(screen_eligible(reg, pop, {}, "t", 5) == std::vector<PatientId>{0});
    CHECK(screen_eligible(reg, pop, {}, "t", 10) == std::vector<PatientId>{0, 1});
}

TEST_CASE("sequential trial reuse honors exclusion sets", "[cohort]") {
    auto pop = make_population(6, 8);
    CohortRegistry reg;
    for (const auto& r : pop.records) enroll_patient(reg, r, true, 0);
    // Patients 0..2 took part in trial A.
    for (PatientId id : {0, 1, 2}) reg.record_randomization(id, "A", Arm::Control);

    EligibilityCriteria open;  // A participants remain eligible for B
    CHECK(screen_eligible(reg, pop, open, "B", 0).size() == 6);

    EligibilityCriteria closed;
    closed.exclude_prior_trials = {"A"};
    CHECK(screen_eligible(reg, pop, closed, "B", 0) == std::vector<PatientId>({3, 4, 5}));
}

TEST_CASE("screening never returns a patient already in this trial", "[cohort]") {
    auto pop = make_population(5, 9);
    CohortRegistry reg;
    for (const auto& r : pop.records) enroll_patient(reg, r, true, 0);
    reg.record_randomization(2, "t", Arm::Offered);
    const auto ids = screen_eligible(reg, pop, {}, "t", 0);
    CHECK(std::find(ids.begin(), ids.end(), 2) == ids.end());
    CHECK_THROWS_AS(reg.record_randomization(2, "t", Arm::Control), EnrollmentError);
}

TEST_CASE("stage3 transitions are monotone", "[cohort]") {
    ConsentState c(true, true);
    c.advance_stage3("t", Stage3::Offered);
    c.advance_stage3("t", Stage3::Consented);
    CHECK(c.stage3("t") == Stage3::Consented);
    CHECK_THROWS_AS(c.advance_stage3("t", Stage3::Refused), EnrollmentError);
    CHECK_THROWS_AS(c.advance_stage3("t", Stage3::Offered), EnrollmentError);

    ConsentState no_broad(true, false);
    CHECK_THROWS_AS(no_broad.advance_stage3("t", Stage3::Offered), EnrollmentError);

    CHECK_THROWS_AS(ConsentState(false, true), EnrollmentError);
}

TEST_CASE("screening respects consent on random registries", "[cohort]") {
    // Property: screen output is always a subset of broad consenters.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto pop = make_population(50, seed + 100);
        CohortRegistry reg;
        Rng rng(seed);
        for (const auto& r : pop.records) enroll_patient(reg, r, rng.bernoulli(0.6), 0);
        EligibilityCriteria crit;
        if (seed % 2 == 0) crit.predicates.push_back({"sex", std::nullopt, std::nullopt, 1.0});
        for (PatientId id : screen_eligible(reg, pop, crit, "t", 0))
            CHECK(reg.entry(id).consent.stage2_broad_randomization());
    }
}

TEST_CASE("schedule alignment", "[cohort]") {
    MeasurementSchedule sched{{0, 6, 12}};
    CHECK(check_schedule_alignment({12}, sched, 0).aligned);
    const auto miss = check_schedule_alignment({13}, sched, 0);
    CHECK_FALSE(miss.aligned);
    CHECK(miss.unmatched == std::vector<Tick>{13});
    CHECK(check_schedule_alignment({13}, sched, 1).aligned);
    CHECK_THROWS_AS(check_schedule_alignment({}, sched, 0), CriteriaError);
    CHECK_THROWS_AS(check_schedule_alignment({1}, MeasurementSchedule{{}}, 0), CriteriaError);
    CHECK_THROWS_AS(check_schedule_alignment({1}, MeasurementSchedule{{3, 3}}, 0), CriteriaError);
}
