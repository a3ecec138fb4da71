#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twics/error.hpp"
#include "twics/estimators.hpp"
#include "twics/parallel.hpp"
#include "twics/population.hpp"
#include "twics/stats.hpp"
#include "twics/trial.hpp"

namespace twics {

// ---------------------------------------------------------------------------
// Assumptions
// ---------------------------------------------------------------------------

// Planning assumptions. The planned acceptance rate dilutes the effect the
// trial can see: the offered-arm contrast is acceptance * effect (continuous)
// or moves the offered-arm risk towards the control risk (binary), so the
// required sample size grows as acceptance falls.
struct DesignAssumptions {
    OutcomeKind kind = OutcomeKind::Continuous;
    double effect = 0.0;  // mean difference (continuous)
    double sd = 1.0;      // continuous
    double p0 = 0.0;      // binary: control risk
    double p1 = 0.0;      // binary: risk if treatment is received
    double alpha = 0.05;  // two-sided
    double power_target = 0.8;
    double planned_acceptance = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw CriteriaError("assumptions: alpha must be in (0,1)");
        if (!(power_target > 0.5 && power_target < 1.0))
            throw CriteriaError("assumptions: power_target must be in (0.5,1)");
        if (!(planned_acceptance > 0.0 && planned_acceptance <= 1.0))
            throw CriteriaError("assumptions: planned_acceptance must be in (0,1]");
        if (kind == OutcomeKind::Continuous) {
            if (!(sd > 0.0)) throw CriteriaError("assumptions: sd must be > 0");
            if (effect == 0.0) throw CriteriaError("assumptions: effect must be non-zero");
        } else {
            if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0))
                throw CriteriaError("assumptions: p0 and p1 must be in (0,1)");
            if (p0 == p1) throw CriteriaError("assumptions: p0 and p1 must differ");
        }
    }
};

// ---------------------------------------------------------------------------
// Sample size
// ---------------------------------------------------------------------------

// n per arm = ceil( 2 sigma^2 (z_{1-a/2} + z_pow)^2 / (acceptance * delta)^2 ).
inline std::size_t sample_size_continuous(const DesignAssumptions& a) {
    a.validate();
    if (a.kind != OutcomeKind::Continuous)
        throw CriteriaError("sample_size_continuous: assumptions are binary");
    const double z = normal_quantile(1.0 - a.alpha / 2.0) + normal_quantile(a.power_target);
    const double diluted = a.planned_acceptance * a.effect;
    const double n = 2.0 * a.sd * a.sd * z * z / (diluted * diluted);
    return static_cast<std::size_t>(std::ceil(n - 1e-12));
}

// Two-proportion normal approximation with pooled variance under H0, applied
// to the diluted offered-arm risk p1' = acc*p1 + (1-acc)*p0.
inline std::size_t sample_size_binary(const DesignAssumptions& a) {
    a.validate();
    if (a.kind != OutcomeKind::Binary)
        throw CriteriaError("sample_size_binary: assumptions are continuous");
    const double p1d = a.planned_acceptance * a.p1 + (1.0 - a.planned_acceptance) * a.p0;
    const double diff = p1d - a.p0;
    if (std::fabs(diff) < 1e-12)
        throw CriteriaError("sample_size_binary: diluted risk equals control risk; "
                            "design infeasible");
    const double pbar = 0.5 * (a.p0 + p1d);
    const double za = normal_quantile(1.0 - a.alpha / 2.0);
    const double zb = normal_quantile(a.power_target);
    const double num = za * std::sqrt(2.0 * pbar * (1.0 - pbar)) +
                       zb * std::sqrt(a.p0 * (1.0 - a.p0) + p1d * (1.0 - p1d));
    const double n = num * num / (diff * diff);
    return static_cast<std::size_t>(std::ceil(n - 1e-12));
}

inline std::size_t sample_size(const DesignAssumptions& a) {
    return a.kind == OutcomeKind::Continuous ? sample_size_continuous(a) : sample_size_binary(a);
}

// n_per_arm plus the realized inflation against the full-acceptance plan.
struct SampleSizeReport {
    std::size_t n_per_arm = 0;
    double inflation_factor = 1.0;
    DesignAssumptions inputs;
    std::vector<std::string> warnings;
};

inline SampleSizeReport sample_size_report(const DesignAssumptions& a) {
    SampleSizeReport rep;
    rep.inputs = a;
    rep.n_per_arm = sample_size(a);
    DesignAssumptions full = a;
    full.planned_acceptance = 1.0;
    rep.inflation_factor =
        static_cast<double>(rep.n_per_arm) / static_cast<double>(sample_size(full));
    if (a.planned_acceptance < 1.0)
        rep.warnings.push_back("sample size refers to the offered-treatment contrast under " +
                               std::to_string(1.0 - a.planned_acceptance) + " planned refusal");
    return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo power
// ---------------------------------------------------------------------------

struct PowerEstimate {
    double power = 0.0;
    double mc_se = 0.0;
    std::size_t replications = 0;  // replications that produced a test decision
    std::size_t failures = 0;
};

// Simulates the trial at n_per_arm per arm and reports the fraction of
// replications whose two-sided test at alpha rejects (CI excludes zero).
// Recruitment is idealized: exactly 2*n_per_arm patients are generated,
// enrolled with broad consent and randomized in a single batch; the design's
// variant, allocator and control knobs are retained.
inline PowerEstimate mc_power(const TrialDesign& design, const PopulationSpec& population_spec,
                              std::size_t n_per_arm, std::size_t replications, Estimand analysis,
                              double alpha, std::uint64_t seed,
                              unsigned workers = worker_count_from_env()) {
    if (replications < 100) throw CriteriaError("mc_power: replications must be >= 100");
    if (n_per_arm < 2) throw CriteriaError("mc_power: n_per_arm must be >= 2");
    population_spec.validate();

    TrialDesign d = design;
    d.target_n = 2 * n_per_arm;
    d.approach = SingleBatch{0};
    d.criteria = EligibilityCriteria{};

    std::vector<int> decision(replications, -1);  // 1 reject, 0 accept, -1 failed
    parallel_for(replications, workers, [&](std::size_t r) {
        const std::uint64_t seed_r = derive_seed(seed, r);
        try {
            Population pop = generate_population(d.target_n, population_spec, derive_seed(seed_r, 0));
            CohortRegistry registry;
            for (const auto& rec : pop.records) enroll_patient(registry, rec, true, 0);
            TrialOutput out = execute_trial(d, registry, pop, derive_seed(seed_r, 1));
            AnalysisOptions opts;
            opts.alpha = alpha;
            opts.bootstrap_seed = derive_seed(seed_r, 2);
            const EstimateResult est = run_analysis(out.dataset, analysis, opts);
            decision[r] = (est.ci_lo > 0.0 || est.ci_hi < 0.0) ? 1 : 0;
        } catch (const Error&) {
            decision[r] = -1;
        }
    });

    PowerEstimate pe;
    std::size_t rejects = 0;
    for (int v : decision) {
        if (v < 0)
            ++pe.failures;
        else {
            ++pe.replications;
            rejects += static_cast<std::size_t>(v);
        }
    }
    if (pe.failures * 20 > replications)
        throw InstabilityError("mc_power: " + std::to_string(pe.failures) + " of " +
                                   std::to_string(replications) + " replications failed",
                               pe.failures);
    pe.power = static_cast<double>(rejects) / static_cast<double>(pe.replications);
    pe.mc_se = std::sqrt(pe.power * (1.0 - pe.power) / static_cast<double>(pe.replications));
    return pe;
}

// ---------------------------------------------------------------------------
// Adaptive sample-size re-estimation
// ---------------------------------------------------------------------------

struct AdaptivePlan {
    DesignAssumptions assumptions;
    std::vector<Tick> review_ticks;
    std::optional<std::size_t> cohort_capacity;  // total patients, closed cohort
    std::size_t min_offered = 10;                // interim information floor

    void validate() const {
        assumptions.validate();
        for (std::size_t i = 1; i < review_ticks.size(); ++i)
            if (review_ticks[i] <= review_ticks[i - 1])
                throw CriteriaError("adaptive plan: review_ticks must be increasing");
    }
};

struct ReestimationResult {
    std::size_t n_per_arm = 0;
    double observed_acceptance = 0.0;
    std::size_t already_randomized_per_arm = 0;  // larger of the two arm counts
};

// Replaces the planned acceptance by the acceptance observed so far (pooled
// over all batches) and recomputes the sample size. The result never drops
// below what is already randomized; in a closed cohort, exceeding capacity is
// an error rather than a silent plan.
inline ReestimationResult adaptive_sample_size_reestimation(const AdaptivePlan& plan,
                                                            const std::vector<TrialRow>& interim) {
    plan.validate();
    const RefusalRate rr = observed_refusal_rate(interim);
    if (rr.offered < plan.min_offered)
        throw EstimationError("re-estimation needs at least " + std::to_string(plan.min_offered) +
                              " offered patients; have " + std::to_string(rr.offered));
    const double observed_acceptance = 1.0 - rr.rate;
    if (!(observed_acceptance > 0.0))
        throw EstimationError("re-estimation: observed acceptance is zero");

    DesignAssumptions updated = plan.assumptions;
    updated.planned_acceptance = observed_acceptance;
    std::size_t n = sample_size(updated);

    std::size_t n1 = 0, n0 = 0;
    for (const auto& r : interim) (r.z == 1 ? n1 : n0) += 1;
    const std::size_t randomized = std::max(n1, n0);
    n = std::max(n, randomized);

    if (plan.cohort_capacity && 2 * n > *plan.cohort_capacity)
        throw CapacityError("re-estimated total sample size " + std::to_string(2 * n) +
                                " exceeds the closed cohort capacity of " +
                                std::to_string(*plan.cohort_capacity),
                            static_cast<long>(2 * n), static_cast<long>(*plan.cohort_capacity));

    ReestimationResult res;
    res.n_per_arm = n;
    res.observed_acceptance = observed_acceptance;
    res.already_randomized_per_arm = randomized;
    return res;
}

// ---------------------------------------------------------------------------
// Non-inferiority
// ---------------------------------------------------------------------------

enum class HarmDirection { LowerOutcomeWorse, HigherOutcomeWorse };

struct NoninferiorityDecision {
    double margin = 0.0;
    double alpha_one_sided = 0.025;
    bool itt_noninferior = false;
    double itt_bound = 0.0;  // the CI bound compared against the margin
    std::optional<bool> pp_noninferior;
    std::optional<double> pp_bound;
    std::string caveat;
};

// Non-inferiority is claimed when the one-sided 1-alpha confidence bound on
// the harm side excludes the margin. Refusal dilutes the ITT contrast towards
// zero, which works in favor of a non-inferiority claim; the per-protocol
// decision is returned alongside and the caveat travels with the result.
inline NoninferiorityDecision noninferiority_decision(
    const TrialDataset& ds, double margin, double alpha_one_sided = 0.025,
    HarmDirection direction = HarmDirection::LowerOutcomeWorse) {
    if (!(margin > 0.0)) throw CriteriaError("noninferiority: margin must be > 0");
    if (!(alpha_one_sided > 0.0 && alpha_one_sided < 0.5))
        throw CriteriaError("noninferiority: alpha must be in (0,0.5)");

    const double z = normal_quantile(1.0 - alpha_one_sided);
    const auto decide = [&](const EstimateResult& est, double& bound) {
        if (direction == HarmDirection::LowerOutcomeWorse) {
            bound = est.point - z * est.se;
            return bound > -margin;
        }
        bound = est.point + z * est.se;
        return bound < margin;
    };

    NoninferiorityDecision dec;
    dec.margin = margin;
    dec.alpha_one_sided = alpha_one_sided;
    dec.caveat =
        "refusal dilutes the as-randomized contrast towards zero, which is "
        "anti-conservative for non-inferiority; the per-protocol decision is "
        "reported alongside";

    const EstimateResult itt = estimate_itt(ds, 2.0 * alpha_one_sided);
    dec.itt_noninferior = decide(itt, dec.itt_bound);
    try {
        const EstimateResult pp = estimate_per_protocol(ds, 2.0 * alpha_one_sided);
        double b = 0.0;
        dec.pp_noninferior = decide(pp, b);
        dec.pp_bound = b;
    } catch (const EstimationError&) {
        // No accepters: the per-protocol set is empty and its decision stays
        // undefined while the ITT decision is still returned.
    }
    return dec;
}

}  // namespace twics
