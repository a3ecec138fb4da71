#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "twics/cohort.hpp"
#include "twics/error.hpp"
#include "twics/rng.hpp"

namespace twics {

// ---------------------------------------------------------------------------
// Sampling approaches and allocators
// ---------------------------------------------------------------------------

// All eligible patients are screened and randomized at one tick.
struct SingleBatch {
    Tick tick = 0;
};

// Repeated randomization rounds; only never-assigned patients enter a round.
struct MultipleBatch {
    std::vector<Tick> batch_ticks;
    std::optional<std::size_t> per_batch_cap;

    void validate() const {
        if (batch_ticks.empty()) throw CriteriaError("multiple-batch: batch_ticks must not be empty");
        for (std::size_t i = 1; i < batch_ticks.size(); ++i)
            if (batch_ticks[i] <= batch_ticks[i - 1])
                throw CriteriaError("multiple-batch: batch_ticks must be strictly increasing");
        if (per_batch_cap && *per_batch_cap < 1)
            throw CriteriaError("multiple-batch: per_batch_cap must be >= 1");
    }
};

// Patients are randomized at their enrollment tick, in enrollment order.
struct OnEntry {};

using SamplingApproach = std::variant<SingleBatch, MultipleBatch, OnEntry>;

struct SimpleBernoulli {
    double p_offered = 0.5;

    void validate() const {
        if (!(p_offered > 0.0 && p_offered < 1.0))
            throw CriteriaError("bernoulli allocator: p_offered must be in (0,1)");
    }
};

// 1:1 permuted blocks. Complete blocks contain exactly block_size/2 offered;
// a final partial block is filled balanced to within one assignment, with a
// fair coin deciding the extra arm when its size is odd.
struct PermutedBlocks {
    std::size_t block_size = 4;

    void validate() const {
        if (block_size < 2 || block_size % 2 != 0)
            throw CriteriaError("permuted blocks: block_size must be even and >= 2");
    }
};

using Allocator = std::variant<SimpleBernoulli, PermutedBlocks>;

inline void validate(const Allocator& a) {
    std::visit([](const auto& v) { v.validate(); }, a);
}

struct Assignment {
    PatientId patient_id = 0;
    Arm arm = Arm::Control;
    std::size_t batch_index = 0;
    Tick time = 0;
};

// ---------------------------------------------------------------------------
// Arm allocation over a known candidate list
// ---------------------------------------------------------------------------

inline std::vector<Assignment> allocate(const std::vector<PatientId>& candidates,
                                        const Allocator& allocator, std::uint64_t seed) {
    validate(allocator);
    {
        std::set<PatientId> uniq(candidates.begin(), candidates.end());
        if (uniq.size() != candidates.size())
            throw CriteriaError("allocate: duplicate candidate ids");
    }

    Rng rng(seed);
    std::vector<Arm> arms;
    arms.reserve(candidates.size());
    if (const auto* b = std::get_if<SimpleBernoulli>(&allocator)) {
        for (std::size_t i = 0; i < candidates.size(); ++i)
            arms.push_back(rng.bernoulli(b->p_offered) ? Arm::Offered : Arm::Control);
    } else {
        const std::size_t block = std::get<PermutedBlocks>(allocator).block_size;
        std::size_t remaining = candidates.size();
        while (remaining > 0) {
            const std::size_t m = std::min(block, remaining);
            std::size_t n_offered = m / 2;
            if (m % 2 == 1 && rng.bernoulli(0.5)) ++n_offered;
            std::vector<Arm> blk(m, Arm::Control);
            for (std::size_t i = 0; i < n_offered; ++i) blk[i] = Arm::Offered;
            rng.shuffle(blk);
            arms.insert(arms.end(), blk.begin(), blk.end());
            remaining -= m;
        }
    }

    std::vector<Assignment> out;
    out.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out.push_back(Assignment{candidates[i], arms[i], 0, 0});
    return out;
}

// ---------------------------------------------------------------------------
// Sampling plans
// ---------------------------------------------------------------------------

enum class RecruitmentStatus { Complete, StillRecruiting };

struct SamplingResult {
    std::vector<Assignment> assignments;
    RecruitmentStatus status = RecruitmentStatus::Complete;
};

// Runs the full sampling plan for one trial: screening, subset selection,
// arm allocation, and registry history updates. No patient is ever assigned
// twice; the output is deterministic in (registry state, seed).
inline SamplingResult run_sampling_plan(const SamplingApproach& approach, CohortRegistry& registry,
                                        const Population& population,
                                        const EligibilityCriteria& criteria, const Allocator& allocator,
                                        const TrialId& trial_id, std::size_t target_n,
                                        std::uint64_t seed) {
    if (target_n < 1) throw CriteriaError("run_sampling_plan: target_n must be >= 1");
    SamplingResult result;

    const auto commit = [&](std::vector<Assignment>&& batch, std::size_t batch_index, Tick time) {
        for (auto& a : batch) {
            a.batch_index = batch_index;
            a.time = time;
            registry.record_randomization(a.patient_id, trial_id, a.arm);
            result.assignments.push_back(a);
        }
    };

    if (const auto* sb = std::get_if<SingleBatch>(&approach)) {
        auto eligible = screen_eligible(registry, population, criteria, trial_id, sb->tick);
        if (eligible.size() < target_n)
            throw ShortfallError("single-batch sampling found " + std::to_string(eligible.size()) +
                                     " eligible patients, target " + std::to_string(target_n),
                                 eligible.size());
        if (eligible.size() > target_n) {
            Rng rng(derive_seed(seed, 0));
            eligible = rng.sample_without_replacement(eligible, target_n);
        }
        commit(allocate(eligible, allocator, derive_seed(seed, 1)), 0, sb->tick);
    } else if (const auto* mb = std::get_if<MultipleBatch>(&approach)) {
        mb->validate();
        for (std::size_t bi = 0; bi < mb->batch_ticks.size(); ++bi) {
            if (result.assignments.size() >= target_n) break;
            auto eligible =
                screen_eligible(registry, population, criteria, trial_id, mb->batch_ticks[bi]);
            std::size_t cap = target_n - result.assignments.size();
            if (mb->per_batch_cap) cap = std::min(cap, *mb->per_batch_cap);
            if (eligible.size() > cap) {
                Rng rng(derive_seed(seed, 2 * bi));
                eligible = rng.sample_without_replacement(eligible, cap);
            }
            if (eligible.empty()) continue;
            commit(allocate(eligible, allocator, derive_seed(seed, 2 * bi + 1)), bi,
                   mb->batch_ticks[bi]);
        }
        result.status = result.assignments.size() >= target_n ? RecruitmentStatus::Complete
                                                              : RecruitmentStatus::StillRecruiting;
    } else {
        // On-entry: each patient is screened once, at enrollment, and the
        // eligible arrivals are allocated in enrollment order (ties by id).
        std::vector<std::pair<Tick, PatientId>> arrivals;
        for (const auto& [id, e] : registry.entries())
            arrivals.emplace_back(e.enrollment_time, id);
        std::sort(arrivals.begin(), arrivals.end());

        std::vector<PatientId> chosen;
        std::vector<Tick> chosen_time;
        for (const auto& [t, id] : arrivals) {
            if (chosen.size() >= target_n) break;
            if (!is_eligible(registry.entry(id), population, criteria, trial_id, t)) continue;
            chosen.push_back(id);
            chosen_time.push_back(t);
        }
        auto batch = allocate(chosen, allocator, derive_seed(seed, 0));
        for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i].batch_index = i;
            batch[i].time = chosen_time[i];
            registry.record_randomization(batch[i].patient_id, trial_id, batch[i].arm);
            result.assignments.push_back(batch[i]);
        }
        result.status = result.assignments.size() >= target_n ? RecruitmentStatus::Complete
                                                              : RecruitmentStatus::StillRecruiting;
    }
    return result;
}

}  // namespace twics
