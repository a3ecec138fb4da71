#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "twics/population.hpp"
#include "twics/trial.hpp"

using namespace twics;

namespace {

struct World {
    Population pop;
    CohortRegistry reg;
};

World make_world(std::size_t n, double acceptance, std::uint64_t seed, double delta = 1.0,
                 std::optional<BiomarkerModel> biomarker = std::nullopt) {
    OutcomeModel m;
    m.kind = OutcomeKind::Continuous;
    m.treatment_effect = delta;
    m.noise_sd = 1.0;
    AcceptanceModel a;
    a.intercept = acceptance >= 1.0 ? 40.0 : logit(acceptance);
    World w{generate_population(n, {}, m, a, biomarker, seed), {}};
    for (const auto& r : w.pop.records) enroll_patient(w.reg, r, true, 0);
    return w;
}

TrialDesign basic_design(std::size_t target) {
    TrialDesign d;
    d.trial_id = "t";
    d.approach = SingleBatch{0};
    d.allocator = PermutedBlocks{4};
    d.target_n = target;
    d.endpoint_tick = 12;
    return d;
}

}  // namespace

TEST_CASE("full compliance: no refusal events, contrast near the effect", "[trial]") {
    auto w = make_world(4000, 1.0, 1);
    auto out = execute_trial(basic_design(4000), w.reg, w.pop, 2);
    CHECK(out.events.empty());
    double s1 = 0, s0 = 0;
    std::size_t n1 = 0, n0 = 0;
    for (const auto& r : out.dataset.rows) {
        if (r.z == 1) {
            CHECK(r.d == 1);
            s1 += r.y;
            ++n1;
        } else {
            CHECK(r.d == 0);
            s0 += r.y;
            ++n0;
        }
    }
    const double diff = s1 / double(n1) - s0 / double(n0);
    CHECK(std::fabs(diff - 1.0) < 3.0 * std::sqrt(2.0 / 2000.0));
}

TEST_CASE("observed refusal rate concentrates near 1 - pi_accept", "[trial]") {
    // 1e5 offered patients at acceptance 0.73; binomial 3-sigma band around 0.27.
    auto w = make_world(200000, 0.73, 3);
    auto out = execute_trial(basic_design(200000), w.reg, w.pop, 4);
    const auto rr = observed_refusal_rate(out.dataset);
    CHECK(rr.offered == 100000);
    CHECK(std::fabs(rr.rate - 0.27) < 3.0 * std::sqrt(0.73 * 0.27 / 100000.0));
}

TEST_CASE("refusers keep y0 exactly (exclusion restriction)", "[trial]") {
    auto w = make_world(2000, 0.6, 5);
    auto out = execute_trial(basic_design(2000), w.reg, w.pop, 6);
    for (const auto& r : out.dataset.rows) {
        const auto& rec = w.pop.records[r.id];
        if (r.z == 1 && r.a && !*r.a) {
            CHECK(r.y == rec.y0);  // bitwise: the offer has no outcome effect
            CHECK(r.d == 0);
            CHECK(r.stage3 == Stage3::Refused);
        }
        if (r.z == 1 && r.a && *r.a) {
            CHECK(r.y == rec.y1);
            CHECK(r.d == 1);
        }
    }
}

TEST_CASE("acceptance matches the latent complier attribute", "[trial]") {
    auto w = make_world(3000, 0.7, 7);
    auto out = execute_trial(basic_design(3000), w.reg, w.pop, 8);
    for (const auto& r : out.dataset.rows)
        if (r.z == 1) CHECK(*r.a == w.pop.records[r.id].complier());
}

TEST_CASE("controls stay uninformed, untested, unexposed with knobs at zero", "[trial]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto w = make_world(500, 0.5, 100 + seed);
        auto out = execute_trial(basic_design(500), w.reg, w.pop, 200 + seed);
        for (const auto& r : out.dataset.rows) {
            if (r.z == 0) {
                CHECK_FALSE(r.offered);
                CHECK_FALSE(r.tested);
                CHECK(r.stage3 == Stage3::NotOffered);
                CHECK(r.d == 0);
                CHECK_FALSE(r.a.has_value());
                CHECK(w.reg.entry(r.id).consent.stage3("t") == Stage3::NotOffered);
            }
        }
        for (const auto& ev : out.events) CHECK(ev.kind == IntercurrentKind::Refusal);
    }
}

TEST_CASE("refusal events only happen in the offered arm", "[trial]") {
    auto w = make_world(1000, 0.5, 9);
    auto out = execute_trial(basic_design(1000), w.reg, w.pop, 10);
    std::set<PatientId> offered;
    for (const auto& r : out.dataset.rows)
        if (r.z == 1) offered.insert(r.id);
    for (const auto& ev : out.events)
        if (ev.kind == IntercurrentKind::Refusal) CHECK(offered.count(ev.patient_id) == 1);
}

TEST_CASE("biomarker gating restricts exposure to positive consenters", "[trial]") {
    BiomarkerModel bm;
    bm.prevalence = 0.3;
    auto w = make_world(2000, 0.8, 11, 1.0, bm);
    auto d = basic_design(2000);
    d.variant = DesignVariant::BiomarkerGated;
    auto out = execute_trial(d, w.reg, w.pop, 12);
    for (const auto& r : out.dataset.rows) {
        if (r.d == 1) {
            CHECK(r.z == 1);
            CHECK(r.a.has_value());
            CHECK(*r.a);
            CHECK(r.tested);
            REQUIRE(r.biomarker_pos.has_value());
            CHECK(*r.biomarker_pos);
        }
        if (r.z == 0) CHECK_FALSE(r.tested);
        if (r.z == 1 && r.a && !*r.a) CHECK_FALSE(r.tested);  // testing needs consent
    }
}

TEST_CASE("gated design on a population without biomarker data is a configuration error",
          "[trial]") {
    auto w = make_world(100, 0.8, 13);
    auto d = basic_design(100);
    d.variant = DesignVariant::BiomarkerGated;
    CHECK_THROWS_AS(execute_trial(d, w.reg, w.pop, 14), CriteriaError);
}

TEST_CASE("expected biomarker positives track prevalence times offered", "[trial]") {
    // 1320 tested at prevalence 60/1320 gives 60 expected positives.
    BiomarkerModel bm;
    bm.prevalence = 60.0 / 1320.0;
    auto w = make_world(2640, 1.0, 15, 1.0, bm);
    auto d = basic_design(2640);
    d.variant = DesignVariant::BiomarkerGated;
    auto out = execute_trial(d, w.reg, w.pop, 16);
    std::size_t tested = 0, positives = 0;
    for (const auto& r : out.dataset.rows) {
        if (r.tested) ++tested;
        if (r.biomarker_pos && *r.biomarker_pos) ++positives;
    }
    CHECK(tested == 1320);
    const double sd = std::sqrt(1320.0 * bm.prevalence * (1.0 - bm.prevalence));
    CHECK(std::fabs(double(positives) - 60.0) < 3.0 * sd);
}

TEST_CASE("contamination knob crosses controls over and logs it", "[trial]") {
    auto w = make_world(4000, 1.0, 17);
    auto d = basic_design(4000);
    d.control_contamination_prob = 0.2;
    auto out = execute_trial(d, w.reg, w.pop, 18);
    std::size_t contaminated = 0, controls = 0;
    for (const auto& r : out.dataset.rows) {
        if (r.z == 0) {
            ++controls;
            if (r.d == 1) {
                CHECK(r.contaminated);
                CHECK(r.y == w.pop.records[r.id].y1);
                ++contaminated;
            }
        }
    }
    std::size_t logged = 0;
    for (const auto& ev : out.events)
        if (ev.kind == IntercurrentKind::Contamination) ++logged;
    CHECK(logged == contaminated);
    CHECK(std::fabs(double(contaminated) / double(controls) - 0.2) <
          3.0 * std::sqrt(0.2 * 0.8 / double(controls)));
}

TEST_CASE("control SOC refusal logs without changing outcomes by default", "[trial]") {
    auto w = make_world(2000, 1.0, 19);
    auto d = basic_design(2000);
    d.control_soc_refusal_prob = 0.1;
    auto out = execute_trial(d, w.reg, w.pop, 20);
    std::size_t logged = 0;
    for (const auto& ev : out.events)
        if (ev.kind == IntercurrentKind::ControlSOCRefusal) ++logged;
    CHECK(logged > 0);
    for (const auto& r : out.dataset.rows)
        if (r.z == 0) CHECK(r.y == w.pop.records[r.id].y0);

    // With a configured outcome level the refusing controls move to it.
    auto w2 = make_world(2000, 1.0, 19);
    d.control_soc_refusal_outcome = -5.0;
    auto out2 = execute_trial(d, w2.reg, w2.pop, 20);
    std::size_t moved = 0;
    for (const auto& r : out2.dataset.rows)
        if (r.z == 0 && r.y == -5.0) ++moved;
    std::size_t logged2 = 0;
    for (const auto& ev : out2.events)
        if (ev.kind == IntercurrentKind::ControlSOCRefusal) ++logged2;
    CHECK(moved == logged2);
}

TEST_CASE("execution is idempotent per seed", "[trial]") {
    auto w1 = make_world(500, 0.7, 21);
    auto w2 = make_world(500, 0.7, 21);
    auto a = execute_trial(basic_design(500), w1.reg, w1.pop, 22);
    auto b = execute_trial(basic_design(500), w2.reg, w2.pop, 22);
    CHECK(rows_to_csv(a.dataset) == rows_to_csv(b.dataset));
}

TEST_CASE("observed refusal rate exact rationals", "[trial]") {
    // 12 randomized, 6 offered, one refusal: rate 1/6.
    std::vector<TrialRow> rows;
    for (int i = 0; i < 12; ++i) {
        TrialRow r;
        r.id = i;
        r.z = i < 6 ? 1 : 0;
        r.offered = i < 6;
        if (r.offered) r.a = (i != 0);
        rows.push_back(r);
    }
    const auto rr = observed_refusal_rate(rows);
    CHECK(rr.refusals == 1);
    CHECK(rr.offered == 6);
    CHECK(rr.rate == 1.0 / 6.0);

    for (auto& r : rows)
        if (r.offered) r.a = true;
    CHECK(observed_refusal_rate(rows).rate == 0.0);
    for (auto& r : rows)
        if (r.offered) r.a = false;
    CHECK(observed_refusal_rate(rows).rate == 1.0);

    std::vector<TrialRow> no_offer(3);
    CHECK_THROWS_AS(observed_refusal_rate(no_offer), EstimationError);
}

TEST_CASE("CSV serialization uses the fixed column order and empty undefined fields", "[trial]") {
    TrialDataset ds;
    ds.covariate_names = {"age", "sex"};
    TrialRow offered;
    offered.id = 3;
    offered.z = 1;
    offered.offered = true;
    offered.a = true;
    offered.tested = true;
    offered.biomarker_pos = false;
    offered.d = 0;
    offered.y = 1.5;
    offered.x = {61.25, 1.0};
    TrialRow control;
    control.id = 4;
    control.z = 0;
    control.y = -0.5;
    control.x = {55.0, 0.0};
    ds.rows = {offered, control};
    CHECK(rows_to_csv(ds) ==
          "id,z,offered,a,tested,biomarker_pos,d,y,x1,x2\n"
          "3,1,1,1,1,0,0,1.5,61.25,1\n"
          "4,0,0,,0,,0,-0.5,55,0\n");
}
