#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twics/parallel.hpp"
#include "twics/scenario.hpp"

namespace twics {

// ---------------------------------------------------------------------------
// Replication execution
// ---------------------------------------------------------------------------

struct ReplicationOutcome {
    std::optional<std::string> failure;  // whole-replication failure
    TrueEstimands truths;
    std::optional<RefusalRate> refusal;
    std::size_t randomized = 0;
    std::vector<std::size_t> batch_sizes;  // indexed by batch_index
    RecruitmentStatus status = RecruitmentStatus::Complete;
    // Aligned with the configured analysis list:
    std::vector<std::optional<EstimateResult>> estimates;
    std::vector<std::string> estimate_errors;
};

namespace detail {

// Substream indices inside one replication.
inline constexpr std::uint64_t kPopulationStream = 0;
inline constexpr std::uint64_t kConsentStream = 1;
inline constexpr std::uint64_t kTrialStream = 2;
inline constexpr std::uint64_t kAnalysisStreamBase = 16;
inline constexpr std::uint64_t kCalibrationStream = 0x43414c42;  // scenario-level

// Truths are computed over the subpopulation passing the design's covariate
// predicates: that is the population the randomized sample is drawn from.
// Broad consent is independent of covariates here, so it does not change the
// estimand values.
inline TrueEstimands eligible_truths(const Population& pop, const EligibilityCriteria& criteria) {
    if (criteria.predicates.empty()) return compute_true_estimands(pop);
    std::vector<PatientRecord> subset;
    for (const auto& rec : pop.records) {
        bool ok = true;
        for (const auto& p : criteria.predicates)
            if (!p.matches(rec.x[pop.covariate_index(p.covariate)])) {
                ok = false;
                break;
            }
        if (ok) subset.push_back(rec);
    }
    return compute_true_estimands(subset);
}

inline Tick enrollment_tick(const EnrollmentPattern& pattern, std::size_t patient_index) {
    if (pattern.kind == EnrollmentPattern::Kind::Immediate) return pattern.start_tick;
    return pattern.start_tick +
           static_cast<Tick>(patient_index / std::max<std::size_t>(1, pattern.patients_per_tick));
}

}  // namespace detail

// The acceptance model actually simulated: when a target marginal rate is
// requested the intercept is calibrated once, deterministically in the master
// seed. A target of 1 pins the intercept deep enough into the tail that the
// acceptance probability is 1 in double precision.
inline PopulationSpec resolve_population_spec(const ScenarioConfig& config) {
    PopulationSpec spec = config.population;
    if (spec.acceptance.target_marginal_rate) {
        const double target = *spec.acceptance.target_marginal_rate;
        if (target >= 1.0)
            spec.acceptance.intercept = 40.0;
        else
            spec.acceptance.intercept = calibrate_acceptance_intercept(
                spec.acceptance, spec.covariates, target,
                derive_seed(config.master_seed, detail::kCalibrationStream));
    }
    return spec;
}

inline ReplicationOutcome run_replication(const ScenarioConfig& config,
                                          const PopulationSpec& resolved_spec, std::size_t rep) {
    ReplicationOutcome out;
    out.estimates.resize(config.analyses.size());
    out.estimate_errors.resize(config.analyses.size());
    const std::uint64_t seed_r = derive_seed(config.master_seed, rep);
    try {
        Population pop = generate_population(config.cohort.size, resolved_spec,
                                             derive_seed(seed_r, detail::kPopulationStream));

        CohortRegistry registry;
        Rng consent_rng(derive_seed(seed_r, detail::kConsentStream));
        for (std::size_t i = 0; i < pop.records.size(); ++i) {
            const bool broad = consent_rng.bernoulli(config.cohort.broad_consent_rate);
            enroll_patient(registry, pop.records[i], broad,
                           detail::enrollment_tick(config.cohort.enrollment, i));
        }

        TrialOutput trial = execute_trial(config.design, registry, pop,
                                          derive_seed(seed_r, detail::kTrialStream));
        out.status = trial.recruitment;
        out.randomized = trial.dataset.rows.size();
        for (const auto& asg : trial.assignments) {
            if (out.batch_sizes.size() <= asg.batch_index)
                out.batch_sizes.resize(asg.batch_index + 1, 0);
            ++out.batch_sizes[asg.batch_index];
        }
        out.truths = detail::eligible_truths(pop, config.design.criteria);
        if (!trial.dataset.rows.empty()) {
            bool any_offered = false;
            for (const auto& r : trial.dataset.rows)
                if (r.offered) any_offered = true;
            if (any_offered) out.refusal = observed_refusal_rate(trial.dataset);
        }

        for (std::size_t a = 0; a < config.analyses.size(); ++a) {
            AnalysisOptions opts;
            opts.alpha = config.alpha;
            opts.bootstrap_B = config.bootstrap_replicates;
            opts.bootstrap_seed = derive_seed(seed_r, detail::kAnalysisStreamBase + a);
            opts.covariates = config.analysis_covariates;
            try {
                out.estimates[a] = run_analysis(trial.dataset, config.analyses[a], opts);
            } catch (const Error& e) {
                out.estimate_errors[a] = e.what();
            }
        }
    } catch (const Error& e) {
        out.failure = e.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AnalysisCell {
    Estimand label = Estimand::AceOffered;
    double mean_point = 0.0;
    double truth = 0.0;  // mean of the per-replication truths for this label
    double bias = 0.0;
    double emp_se = 0.0;
    double mean_se = 0.0;
    double coverage = 0.0;
    double reject_rate = 0.0;
    std::size_t n_reps = 0;
    std::size_t failures = 0;
};

struct RefusalSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n_reps = 0;
};

struct ScenarioResult {
    std::size_t replications_configured = 0;
    std::size_t replication_failures = 0;
    std::vector<AnalysisCell> cells;
    std::vector<std::optional<RefusalRate>> refusal_by_rep;
    RefusalSummary refusal;
    double mean_randomized = 0.0;
    double complete_fraction = 0.0;
    std::vector<double> batch_mean_sizes;  // by batch_index
    TrueEstimands mean_truths;
    std::vector<std::string> notes;
};

// Each label aggregates against its own estimand truth; the per-protocol and
// as-treated rows are deliberately referenced to the received-treatment
// effect to exhibit the selection bias of excluding refusers.
inline double truth_for(Estimand label, const TrueEstimands& t) {
    switch (label) {
        case Estimand::AceOffered: return t.ace_offered;
        case Estimand::PerProtocol:
        case Estimand::AsTreated: return t.ace_received;
        case Estimand::CaceWald:
        case Estimand::Cace2SPS:
        case Estimand::Cace2SRI:
        case Estimand::CacePropensity: return t.cace;
    }
    return 0.0;
}

inline ScenarioResult aggregate_replications(const std::vector<Estimand>& analyses,
                                             const std::vector<ReplicationOutcome>& outcomes) {
    if (outcomes.empty()) throw EstimationError("aggregate_replications: no replications");
    ScenarioResult res;
    res.replications_configured = outcomes.size();

    double sum_randomized = 0.0;
    std::vector<double> batch_sums;
    std::size_t complete = 0, truth_reps = 0;
    for (const auto& o : outcomes) {
        if (o.failure) {
            ++res.replication_failures;
            res.refusal_by_rep.push_back(std::nullopt);
            continue;
        }
        sum_randomized += static_cast<double>(o.randomized);
        for (std::size_t b = 0; b < o.batch_sizes.size(); ++b) {
            if (batch_sums.size() <= b) batch_sums.resize(b + 1, 0.0);
            batch_sums[b] += static_cast<double>(o.batch_sizes[b]);
        }
        if (o.status == RecruitmentStatus::Complete) ++complete;
        res.refusal_by_rep.push_back(o.refusal);
        res.mean_truths.ace_received += o.truths.ace_received;
        res.mean_truths.ace_offered += o.truths.ace_offered;
        res.mean_truths.cace += o.truths.cace;
        res.mean_truths.acceptance_rate += o.truths.acceptance_rate;
        ++truth_reps;
    }
    const std::size_t ok_reps = outcomes.size() - res.replication_failures;
    if (ok_reps > 0) {
        res.mean_randomized = sum_randomized / static_cast<double>(ok_reps);
        res.complete_fraction = static_cast<double>(complete) / static_cast<double>(ok_reps);
        for (double s : batch_sums)
            res.batch_mean_sizes.push_back(s / static_cast<double>(ok_reps));
    }
    if (truth_reps > 0) {
        res.mean_truths.ace_received /= static_cast<double>(truth_reps);
        res.mean_truths.ace_offered /= static_cast<double>(truth_reps);
        res.mean_truths.cace /= static_cast<double>(truth_reps);
        res.mean_truths.acceptance_rate /= static_cast<double>(truth_reps);
    }

    {
        double s = 0.0, lo = 0.0, hi = 0.0;
        std::size_t n = 0;
        for (const auto& r : res.refusal_by_rep) {
            if (!r) continue;
            if (n == 0) lo = hi = r->rate;
            lo = std::min(lo, r->rate);
            hi = std::max(hi, r->rate);
            s += r->rate;
            ++n;
        }
        if (n > 0) res.refusal = {s / static_cast<double>(n), lo, hi, n};
    }

    for (std::size_t a = 0; a < analyses.size(); ++a) {
        AnalysisCell cell;
        cell.label = analyses[a];
        std::vector<double> points, ses;
        double truth_sum = 0.0;
        std::size_t covered = 0, rejected = 0;
        for (const auto& o : outcomes) {
            if (o.failure || !o.estimates[a]) {
                ++cell.failures;
                continue;
            }
            const EstimateResult& est = *o.estimates[a];
            const double truth = truth_for(analyses[a], o.truths);
            points.push_back(est.point);
            ses.push_back(est.se);
            truth_sum += truth;
            if (est.ci_lo <= truth && truth <= est.ci_hi) ++covered;
            if (est.ci_lo > 0.0 || est.ci_hi < 0.0) ++rejected;
        }
        cell.n_reps = points.size();
        if (!points.empty()) {
            cell.mean_point = mean(std::span<const double>(points.data(), points.size()));
            cell.truth = truth_sum / static_cast<double>(points.size());
            cell.bias = cell.mean_point - cell.truth;
            cell.emp_se = points.size() > 1
                              ? sample_sd(std::span<const double>(points.data(), points.size()))
                              : 0.0;
            cell.mean_se = mean(std::span<const double>(ses.data(), ses.size()));
            cell.coverage = static_cast<double>(covered) / static_cast<double>(points.size());
            cell.reject_rate = static_cast<double>(rejected) / static_cast<double>(points.size());
        }
        res.cells.push_back(cell);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

inline ScenarioResult run_scenario(const ScenarioConfig& config,
                                   unsigned workers = worker_count_from_env()) {
    const PopulationSpec resolved = resolve_population_spec(config);
    std::vector<ReplicationOutcome> outcomes(config.replications);
    parallel_for(config.replications, workers,
                 [&](std::size_t r) { outcomes[r] = run_replication(config, resolved, r); });
    ScenarioResult res = aggregate_replications(config.analyses, outcomes);

    res.notes.push_back(
        "acceptance/refusal follows a logistic model in the covariates; this is a "
        "modeling choice of the engine, the design itself does not identify a refusal "
        "mechanism");
    bool has_pp = false, has_at = false;
    for (Estimand e : config.analyses) {
        if (e == Estimand::PerProtocol) has_pp = true;
        if (e == Estimand::AsTreated) has_at = true;
    }
    if (has_pp || has_at)
        res.notes.push_back(
            "PerProtocol/AsTreated bias is referenced to the received-treatment effect on "
            "purpose, to exhibit the selection bias of excluding refusers; ACE_Offered is "
            "the design's own estimand");
    if (config.design.variant == DesignVariant::BiomarkerGated)
        res.notes.push_back(
            "biomarker-gated design: estimand truths refer to offer acceptance only; "
            "gating further restricts realized exposure");
    return res;
}

// Fraction-based failure gate: a scenario fails only when more than 5% of
// replications (or of a cell's replications) are unusable.
inline bool exceeded_failure_threshold(const ScenarioResult& res) {
    const auto frac = [&](std::size_t failures) {
        return static_cast<double>(failures) /
               static_cast<double>(res.replications_configured);
    };
    if (frac(res.replication_failures) > 0.05) return true;
    for (const auto& c : res.cells)
        if (frac(c.failures) > 0.05) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

inline ScenarioConfig apply_sweep_value(const ScenarioConfig& base, const std::string& parameter,
                                        double value) {
    ScenarioConfig c = base;
    c.sweep.reset();
    if (parameter == "refusal_rate")
        c.population.acceptance.target_marginal_rate = 1.0 - value;
    else if (parameter == "acceptance_rate")
        c.population.acceptance.target_marginal_rate = value;
    else if (parameter == "treatment_effect")
        c.population.outcome.treatment_effect = value;
    else
        throw ConfigError("unknown sweep parameter '" + parameter + "'", {});
    return c;
}

struct SweepRun {
    double value = 0.0;
    ScenarioResult result;
};

inline std::vector<SweepRun> run_sweep(const ScenarioConfig& config,
                                       unsigned workers = worker_count_from_env()) {
    if (!config.sweep) return {};
    std::vector<SweepRun> runs;
    for (double v : config.sweep->values) {
        const ScenarioConfig c = apply_sweep_value(config, config.sweep->parameter, v);
        runs.push_back({v, run_scenario(c, workers)});
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Config loading
// ---------------------------------------------------------------------------

inline ScenarioConfig load_and_validate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", {});
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what(), {e.what()});
    }
    std::vector<std::string> errors;
    ScenarioConfig c = parse_config(root, errors);
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << errors.size() << " validation error(s) in '" << path << "'";
        throw ConfigError(msg.str(), errors);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Preset catalog: the applied trial designs, with their planned sizes and,
// where reported, planned vs observed refusal. Outcome effect sizes are
// placeholders (delta 0.5, sd 1): none of the designs pins an effect size, so
// replace them with study-specific values before drawing conclusions.
// ---------------------------------------------------------------------------

struct Preset {
    std::string name;
    ScenarioConfig config;
};

namespace detail {

inline ScenarioConfig preset_base() {
    ScenarioConfig c;
    c.population.covariates = {CovariateSpec{"age", NormalDist{62.0, 9.0}}};
    c.population.outcome.kind = OutcomeKind::Continuous;
    c.population.outcome.control_level = 0.0;
    c.population.outcome.treatment_effect = 0.5;  // placeholder effect size
    c.population.outcome.noise_sd = 1.0;
    c.cohort.broad_consent_rate = 1.0;
    c.cohort.schedule.measurement_ticks = {0, 6, 12};
    c.design.endpoint_tick = 12;
    c.design.allocator = PermutedBlocks{4};
    c.analyses = {Estimand::AceOffered, Estimand::PerProtocol, Estimand::CaceWald,
                  Estimand::Cace2SPS, Estimand::Cace2SRI};
    c.replications = 100;
    c.master_seed = 20240101;
    c.alpha = 0.05;
    c.bootstrap_replicates = 200;
    return c;
}

inline void set_refusal(ScenarioConfig& c, double planned, std::optional<double> actual) {
    PlanningInfo p;
    p.planned_refusal = planned;
    p.actual_refusal = actual;
    c.planning = p;
    // The simulation reproduces the refusal that actually happened when known.
    const double simulated = actual ? *actual : planned;
    c.population.acceptance.target_marginal_rate = 1.0 - simulated;
}

}  // namespace detail

inline std::vector<Preset> preset_catalog() {
    std::vector<Preset> out;

    {  // Feasibility trial, mesothelioma immunotherapy; single screen of a small cohort.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "tilt";
        c.design.target_n = 45;
        c.cohort.size = 120;
        c.design.approach = SingleBatch{0};
        detail::set_refusal(c, 0.10, std::nullopt);
        out.push_back({"tilt", c});
    }
    {  // Pre-operative boost; randomization directly after cohort enrollment.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "rectal_boost";
        c.design.target_n = 120;
        c.cohort.size = 300;
        c.cohort.enrollment.kind = EnrollmentPattern::Kind::Staggered;
        c.cohort.enrollment.patients_per_tick = 25;
        c.design.approach = OnEntry{};
        detail::set_refusal(c, 0.20, 0.27);
        out.push_back({"rectal_boost", c});
    }
    {  // Hyperbaric oxygen after radiation toxicity; repeated randomization rounds.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "honey";
        c.design.target_n = 120;
        c.cohort.size = 360;
        c.design.approach = MultipleBatch{{0, 3, 6, 9}, std::nullopt};
        detail::set_refusal(c, 0.10, std::nullopt);
        out.push_back({"honey", c});
    }
    {  // Exercise intervention; repeated rounds, heavy refusal.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "umbrella_fit";
        c.design.target_n = 192;
        c.cohort.size = 560;
        c.design.approach = MultipleBatch{{0, 3, 6, 9}, std::nullopt};
        detail::set_refusal(c, 0.30, 0.45);
        out.push_back({"umbrella_fit", c});
    }
    {  // ctDNA-guided chemotherapy: randomized to a testing pathway, treatment
       // offered only to biomarker-positive consenters.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "medocc_create";
        c.design.variant = DesignVariant::BiomarkerGated;
        c.design.target_n = 1320;
        c.cohort.size = 2640;
        c.design.approach = SingleBatch{0};
        c.population.biomarker = BiomarkerModel{60.0 / 1320.0, {}};
        detail::set_refusal(c, 0.0, std::nullopt);  // full testing consent by default
        out.push_back({"medocc_create", c});
    }
    {  // Retractor-sponge surgery; prior trial participants remain eligible.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "sponge";
        c.design.target_n = 196;
        c.cohort.size = 480;
        c.design.approach = SingleBatch{0};
        detail::set_refusal(c, 0.10, std::nullopt);
        out.push_back({"sponge", c});
    }
    {  // Stereotactic vs conventional radiotherapy; on-entry randomization.
        ScenarioConfig c = detail::preset_base();
        c.design.trial_id = "vertical";
        c.design.target_n = 110;
        c.cohort.size = 280;
        c.cohort.enrollment.kind = EnrollmentPattern::Kind::Staggered;
        c.cohort.enrollment.patients_per_tick = 25;
        c.design.approach = OnEntry{};
        detail::set_refusal(c, 0.10, 0.27);
        out.push_back({"vertical", c});
    }
    return out;
}

inline std::optional<Preset> find_preset(const std::string& name) {
    for (auto& p : preset_catalog())
        if (p.name == name) return p;
    return std::nullopt;
}

}  // namespace twics
