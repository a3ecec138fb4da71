#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "twics/cohort.hpp"
#include "twics/error.hpp"
#include "twics/population.hpp"
#include "twics/randomization.hpp"
#include "twics/rng.hpp"

namespace twics {

enum class DesignVariant { Standard, BiomarkerGated };

// Embedded trial design. The two control-side knobs default to zero, the
// regime the design assumes; they exist to study what happens when control
// patients cross over to the alternative treatment anyway (contamination) or
// refuse standard care.
struct TrialDesign {
    TrialId trial_id = "trial";
    EligibilityCriteria criteria;
    SamplingApproach approach = SingleBatch{};
    Allocator allocator = SimpleBernoulli{0.5};
    DesignVariant variant = DesignVariant::Standard;
    std::size_t target_n = 0;
    Tick endpoint_tick = 0;
    double control_contamination_prob = 0.0;
    double control_soc_refusal_prob = 0.0;
    // When set, a control patient who refuses standard care has their outcome
    // replaced by this level; by default refusal of SOC is logged only.
    std::optional<double> control_soc_refusal_outcome;

    void validate() const {
        if (target_n < 1) throw CriteriaError("design: target_n must be >= 1");
        twics::validate(allocator);
        if (!(control_contamination_prob >= 0.0 && control_contamination_prob <= 1.0))
            throw CriteriaError("design: control_contamination_prob must be in [0,1]");
        if (!(control_soc_refusal_prob >= 0.0 && control_soc_refusal_prob <= 1.0))
            throw CriteriaError("design: control_soc_refusal_prob must be in [0,1]");
    }
};

// One realized participant row: randomization z, offer and consent state,
// acceptance a (defined only when offered), biomarker testing, exposure d,
// and the outcome read from cohort measurements at the endpoint tick.
struct TrialRow {
    PatientId id = 0;
    int z = 0;
    bool offered = false;
    Stage3 stage3 = Stage3::NotOffered;
    std::optional<bool> a;
    bool tested = false;
    std::optional<bool> biomarker_pos;
    int d = 0;
    bool contaminated = false;  // control crossover fired
    double y = 0.0;
    std::vector<double> x;
};

enum class IntercurrentKind { Refusal, Contamination, ControlSOCRefusal };

inline const char* to_string(IntercurrentKind k) {
    switch (k) {
        case IntercurrentKind::Refusal: return "refusal";
        case IntercurrentKind::Contamination: return "contamination";
        case IntercurrentKind::ControlSOCRefusal: return "control_soc_refusal";
    }
    return "?";
}

struct IntercurrentEvent {
    PatientId patient_id = 0;
    IntercurrentKind kind = IntercurrentKind::Refusal;
    Tick tick = 0;
};

struct TrialDataset {
    std::vector<std::string> covariate_names;
    OutcomeKind outcome_kind = OutcomeKind::Continuous;
    std::vector<TrialRow> rows;
};

struct TrialOutput {
    TrialDataset dataset;
    std::vector<IntercurrentEvent> events;
    std::vector<Assignment> assignments;  // recruitment timeline, row-aligned
    RecruitmentStatus recruitment = RecruitmentStatus::Complete;
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

// Runs one embedded trial end to end: sampling plan, offers, stage-3 consent,
// refusal, biomarker gating, exposure, and outcome realization. Acceptance
// reuses the population's latent draw (u_accept < pi_accept), so execution is
// idempotent per seed and realized compliers match the ground-truth complier
// stratum exactly. Refusers keep y0 untouched: the offer itself has no
// outcome effect.
inline TrialOutput execute_trial(const TrialDesign& design, CohortRegistry& registry,
                                 const Population& population, std::uint64_t seed) {
    design.validate();
    if (design.variant == DesignVariant::BiomarkerGated) {
        for (const auto& rec : population.records)
            if (!rec.biomarker.has_value())
                throw CriteriaError(
                    "biomarker-gated design requires biomarker status in the population");
    }

    SamplingResult sampling =
        run_sampling_plan(design.approach, registry, population, design.criteria, design.allocator,
                          design.trial_id, design.target_n, derive_seed(seed, 0));

    TrialOutput out;
    out.recruitment = sampling.status;
    out.dataset.covariate_names = population.covariate_names;
    out.dataset.outcome_kind = population.outcome_kind;
    out.dataset.rows.reserve(sampling.assignments.size());

    Rng knob_rng(derive_seed(seed, 1));  // control-side knobs only

    for (const auto& asg : sampling.assignments) {
        const PatientRecord& rec = population.records[asg.patient_id];
        ConsentState& consent = registry.entry(asg.patient_id).consent;

        TrialRow row;
        row.id = asg.patient_id;
        row.x = rec.x;
        row.z = asg.arm == Arm::Offered ? 1 : 0;

        if (asg.arm == Arm::Offered) {
            row.offered = true;
            consent.advance_stage3(design.trial_id, Stage3::Offered);
            const bool accepts = rec.complier();
            row.a = accepts;
            if (!accepts) {
                consent.advance_stage3(design.trial_id, Stage3::Refused);
                row.stage3 = Stage3::Refused;
                out.events.push_back({asg.patient_id, IntercurrentKind::Refusal, asg.time});
                row.d = 0;
                row.y = rec.y0;
            } else {
                consent.advance_stage3(design.trial_id, Stage3::Consented);
                row.stage3 = Stage3::Consented;
                if (design.variant == DesignVariant::Standard) {
                    row.d = 1;
                    row.y = rec.y1;
                } else {
                    // Consenting patients are tested; only biomarker-positive
                    // patients go on to treatment. The second acceptance step
                    // reuses the same latent draw and therefore agrees with
                    // the testing consent.
                    row.tested = true;
                    row.biomarker_pos = rec.biomarker;
                    if (*rec.biomarker) {
                        row.d = 1;
                        row.y = rec.y1;
                    } else {
                        row.d = 0;
                        row.y = rec.y0;
                    }
                }
            }
        } else {
            // Controls are never informed or tested; stage 3 stays NotOffered.
            row.offered = false;
            row.stage3 = Stage3::NotOffered;
            row.d = 0;
            row.y = rec.y0;
            if (design.control_contamination_prob > 0.0 &&
                knob_rng.bernoulli(design.control_contamination_prob)) {
                row.d = 1;
                row.y = rec.y1;
                row.contaminated = true;
                out.events.push_back({asg.patient_id, IntercurrentKind::Contamination, asg.time});
            } else if (design.control_soc_refusal_prob > 0.0 &&
                       knob_rng.bernoulli(design.control_soc_refusal_prob)) {
                out.events.push_back(
                    {asg.patient_id, IntercurrentKind::ControlSOCRefusal, asg.time});
                if (design.control_soc_refusal_outcome)
                    row.y = *design.control_soc_refusal_outcome;
            }
        }
        out.dataset.rows.push_back(std::move(row));
    }
    out.assignments = std::move(sampling.assignments);
    return out;
}

// ---------------------------------------------------------------------------
// Observed refusal
// ---------------------------------------------------------------------------

struct RefusalRate {
    double rate = 0.0;
    std::size_t refusals = 0;  // exact rational: refusals / offered
    std::size_t offered = 0;
};

inline RefusalRate observed_refusal_rate(const std::vector<TrialRow>& rows) {
    RefusalRate r;
    for (const auto& row : rows) {
        if (!row.offered) continue;
        ++r.offered;
        if (row.a && !*row.a) ++r.refusals;
    }
    if (r.offered == 0)
        throw EstimationError("observed_refusal_rate: no offered patients");
    r.rate = static_cast<double>(r.refusals) / static_cast<double>(r.offered);
    return r;
}

inline RefusalRate observed_refusal_rate(const TrialDataset& ds) {
    return observed_refusal_rate(ds.rows);
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

namespace detail {

inline void append_double(std::string& s, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    s.append(buf, res.ptr);
}

}  // namespace detail

// Fixed column order: id,z,offered,a,tested,biomarker_pos,d,y,x1..xk.
// Undefined optionals serialize as empty fields. Locale-independent.
inline std::string rows_to_csv(const TrialDataset& ds) {
    std::string s = "id,z,offered,a,tested,biomarker_pos,d,y";
    for (std::size_t i = 0; i < ds.covariate_names.size(); ++i)
        s += ",x" + std::to_string(i + 1);
    s += '\n';
    for (const auto& r : ds.rows) {
        s += std::to_string(r.id);
        s += ',';
        s += std::to_string(r.z);
        s += ',';
        s += r.offered ? '1' : '0';
        s += ',';
        if (r.a) s += *r.a ? '1' : '0';
        s += ',';
        s += r.tested ? '1' : '0';
        s += ',';
        if (r.biomarker_pos) s += *r.biomarker_pos ? '1' : '0';
        s += ',';
        s += std::to_string(r.d);
        s += ',';
        detail::append_double(s, r.y);
        for (double xv : r.x) {
            s += ',';
            detail::append_double(s, xv);
        }
        s += '\n';
    }
    return s;
}

}  // namespace twics
