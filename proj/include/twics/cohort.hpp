#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twics/error.hpp"
#include "twics/population.hpp"

namespace twics {

using Tick = std::int64_t;
using TrialId = std::string;

enum class Arm : int { Control = 0, Offered = 1 };

// Trial-specific (stage 3) consent position. Control-arm patients stay
// NotOffered for the lifetime of the trial: they are never informed.
enum class Stage3 { NotOffered, Offered, Consented, Refused };

inline const char* to_string(Stage3 s) {
    switch (s) {
        case Stage3::NotOffered: return "not_offered";
        case Stage3::Offered: return "offered";
        case Stage3::Consented: return "consented";
        case Stage3::Refused: return "refused";
    }
    return "?";
}

// Staged consent per patient. Stage 1 is cohort consent, stage 2 the broad
// consent to future randomization, stage 3 the per-trial consent. Stage 2 is
// decidable only at enrollment and stage 3 never reverts once Consented or
// Refused.
class ConsentState {
public:
    ConsentState() = default;
    ConsentState(bool stage1, bool stage2) : stage1_cohort_(stage1), stage2_broad_(stage2) {
        if (stage2 && !stage1) throw EnrollmentError("stage2 consent requires stage1 consent");
    }

    bool stage1_cohort() const { return stage1_cohort_; }
    bool stage2_broad_randomization() const { return stage2_broad_; }

    Stage3 stage3(const TrialId& trial) const {
        auto it = stage3_.find(trial);
        return it == stage3_.end() ? Stage3::NotOffered : it->second;
    }

    void advance_stage3(const TrialId& trial, Stage3 next) {
        if (!stage2_broad_)
            throw EnrollmentError("stage3 transition without stage2 broad consent");
        const Stage3 cur = stage3(trial);
        const bool ok = (cur == Stage3::NotOffered && next == Stage3::Offered) ||
                        (cur == Stage3::Offered &&
                         (next == Stage3::Consented || next == Stage3::Refused));
        if (!ok)
            throw EnrollmentError(std::string("invalid stage3 transition ") + to_string(cur) +
                                  " -> " + to_string(next));
        stage3_[trial] = next;
    }

private:
    bool stage1_cohort_ = false;
    bool stage2_broad_ = false;
    std::map<TrialId, Stage3> stage3_;
};

struct CohortEntry {
    PatientId id = 0;
    Tick enrollment_time = 0;
    ConsentState consent;
    std::map<TrialId, Arm> randomization_history;  // at most one arm per trial
};

// Routine cohort measurement times; strictly increasing, non-empty.
struct MeasurementSchedule {
    std::vector<Tick> measurement_ticks;

    void validate() const {
        if (measurement_ticks.empty())
            throw CriteriaError("measurement schedule must not be empty");
        for (std::size_t i = 1; i < measurement_ticks.size(); ++i)
            if (measurement_ticks[i] <= measurement_ticks[i - 1])
                throw CriteriaError("measurement ticks must be strictly increasing");
    }
};

// Per-covariate interval or equality test. min/max bounds are inclusive.
struct CovariatePredicate {
    std::string covariate;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> equals;

    bool matches(double value) const {
        if (equals && value != *equals) return false;
        if (min && value < *min) return false;
        if (max && value > *max) return false;
        return true;
    }
};

// Eligibility is a pure function of covariates, consent, and trial history.
// Broad (stage 2) consent is always required and cannot be disabled.
struct EligibilityCriteria {
    std::vector<CovariatePredicate> predicates;
    std::set<TrialId> exclude_prior_trials;
};

class CohortRegistry {
public:
    bool contains(PatientId id) const { return entries_.count(id) > 0; }
    std::size_t size() const { return entries_.size(); }

    const CohortEntry& entry(PatientId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end())
            throw EnrollmentError("patient " + std::to_string(id) + " not enrolled");
        return it->second;
    }
    CohortEntry& entry(PatientId id) {
        auto it = entries_.find(id);
        if (it == entries_.end())
            throw EnrollmentError("patient " + std::to_string(id) + " not enrolled");
        return it->second;
    }

    // Ordered by patient id; iteration is deterministic.
    const std::map<PatientId, CohortEntry>& entries() const { return entries_; }

    void record_randomization(PatientId id, const TrialId& trial, Arm arm) {
        auto& e = entry(id);
        if (e.randomization_history.count(trial))
            throw EnrollmentError("patient " + std::to_string(id) +
                                  " already randomized in trial '" + trial + "'");
        e.randomization_history[trial] = arm;
    }

    friend void enroll_patient(CohortRegistry&, const PatientRecord&, bool, Tick);

private:
    std::map<PatientId, CohortEntry> entries_;
};

inline void enroll_patient(CohortRegistry& registry, const PatientRecord& patient,
                           bool broad_consent, Tick time) {
    if (registry.contains(patient.id))
        throw EnrollmentError("patient " + std::to_string(patient.id) + " already enrolled");
    CohortEntry e;
    e.id = patient.id;
    e.enrollment_time = time;
    e.consent = ConsentState(true, broad_consent);
    registry.entries_.emplace(patient.id, std::move(e));
}

inline bool is_eligible(const CohortEntry& e, const Population& population,
                        const EligibilityCriteria& criteria, const TrialId& trial_id, Tick time) {
    if (e.enrollment_time > time) return false;
    if (!e.consent.stage2_broad_randomization()) return false;
    if (e.randomization_history.count(trial_id)) return false;
    for (const auto& prior : criteria.exclude_prior_trials)
        if (e.randomization_history.count(prior)) return false;
    if (e.id >= population.records.size()) return false;
    const auto& rec = population.records[e.id];
    for (const auto& p : criteria.predicates)
        if (!p.matches(rec.x[population.covariate_index(p.covariate)])) return false;
    return true;
}

// Returns the ids of patients enrolled by `time` that hold broad consent,
// satisfy every covariate predicate, and are not excluded by trial history.
// Output sorted by id.
inline std::vector<PatientId> screen_eligible(const CohortRegistry& registry,
                                              const Population& population,
                                              const EligibilityCriteria& criteria,
                                              const TrialId& trial_id, Tick time) {
    // Validate predicate names up front so a bad criterion fails loudly even
    // on an empty registry.
    for (const auto& p : criteria.predicates) population.covariate_index(p.covariate);

    std::vector<PatientId> out;
    for (const auto& [id, e] : registry.entries())
        if (is_eligible(e, population, criteria, trial_id, time)) out.push_back(id);
    return out;  // map iteration is already id-sorted
}

struct AlignmentResult {
    bool aligned = true;
    std::vector<Tick> unmatched;  // endpoint ticks with no schedule tick within tolerance
};

// The trial follow-up must line up with routine cohort measurements,
// otherwise outcomes would simply not be collected.
inline AlignmentResult check_schedule_alignment(const std::vector<Tick>& endpoint_ticks,
                                                const MeasurementSchedule& schedule,
                                                Tick tolerance) {
    if (endpoint_ticks.empty())
        throw CriteriaError("check_schedule_alignment: endpoint_ticks must not be empty");
    schedule.validate();
    AlignmentResult r;
    for (Tick ep : endpoint_ticks) {
        bool matched = false;
        for (Tick mt : schedule.measurement_ticks) {
            const Tick d = ep >= mt ? ep - mt : mt - ep;
            if (d <= tolerance) { matched = true; break; }
        }
        if (!matched) r.unmatched.push_back(ep);
    }
    r.aligned = r.unmatched.empty();
    return r;
}

}  // namespace twics
