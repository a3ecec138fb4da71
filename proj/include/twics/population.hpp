#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "twics/error.hpp"
#include "twics/rng.hpp"
#include "twics/stats.hpp"

namespace twics {

// ---------------------------------------------------------------------------
// Covariate specifications
// ---------------------------------------------------------------------------

struct NormalDist {
    double mean = 0.0;
    double sd = 1.0;
};
struct BernoulliDist {
    double p = 0.5;
};
struct UniformDist {
    double lo = 0.0;
    double hi = 1.0;
};

using CovariateDistribution = std::variant<NormalDist, BernoulliDist, UniformDist>;

struct CovariateSpec {
    std::string name;
    CovariateDistribution distribution;

    void validate() const {
        if (name.empty()) throw ModelError("covariate name must not be empty");
        if (const auto* n = std::get_if<NormalDist>(&distribution)) {
            if (!(n->sd > 0.0)) throw ModelError("covariate '" + name + "': sd must be > 0");
        } else if (const auto* b = std::get_if<BernoulliDist>(&distribution)) {
            if (!(b->p >= 0.0 && b->p <= 1.0))
                throw ModelError("covariate '" + name + "': p must be in [0,1]");
        } else if (const auto* u = std::get_if<UniformDist>(&distribution)) {
            if (!(u->lo < u->hi)) throw ModelError("covariate '" + name + "': lo must be < hi");
        }
    }
};

// ---------------------------------------------------------------------------
// Outcome / acceptance / biomarker models
// ---------------------------------------------------------------------------

enum class OutcomeKind { Continuous, Binary };

// Continuous outcomes: y0 = control_level + coefs.x + noise, y1 = y0 + effect(x).
// Binary outcomes work on the risk-difference scale: P(y0=1) = control_level +
// coefs.x, P(y1=1) = P(y0=1) + effect(x), with a shared latent uniform so that
// a homogeneous risk difference shifts each patient's threshold coherently.
// Risks outside [0,1] are an error, never a silent clip.
struct OutcomeModel {
    OutcomeKind kind = OutcomeKind::Continuous;
    double control_level = 0.0;             // mu_C (continuous) or baseline risk p0 (binary)
    double treatment_effect = 0.0;          // mean difference or risk difference
    std::vector<double> covariate_coefs;    // beta, aligned with the covariate list
    double noise_sd = 1.0;                  // continuous only
    std::vector<double> effect_heterogeneity;  // optional per-covariate effect modifiers

    void validate(std::size_t n_covariates) const {
        if (kind == OutcomeKind::Continuous && !(noise_sd > 0.0))
            throw ModelError("outcome: noise_sd must be > 0");
        if (kind == OutcomeKind::Binary && !(control_level >= 0.0 && control_level <= 1.0))
            throw ModelError("outcome: binary control_level must be in [0,1]");
        if (!covariate_coefs.empty() && covariate_coefs.size() != n_covariates)
            throw ModelError("outcome: covariate_coefs length does not match covariates");
        if (!effect_heterogeneity.empty() && effect_heterogeneity.size() != n_covariates)
            throw ModelError("outcome: effect_heterogeneity length does not match covariates");
    }
};

// Log-odds model for accepting the alternative treatment when offered.
// With all coefficients zero the marginal acceptance is logistic(intercept)
// exactly. The logistic form is this engine's choice of refusal mechanism;
// reports carry a note to that effect.
struct AcceptanceModel {
    double intercept = 0.0;                // gamma_0, log-odds
    std::vector<double> covariate_coefs;   // gamma
    std::optional<double> target_marginal_rate;  // in (0,1] when set

    void validate(std::size_t n_covariates) const {
        if (!covariate_coefs.empty() && covariate_coefs.size() != n_covariates)
            throw ModelError("acceptance: covariate_coefs length does not match covariates");
        if (target_marginal_rate &&
            !(*target_marginal_rate > 0.0 && *target_marginal_rate <= 1.0))
            throw ModelError("acceptance: target_marginal_rate must be in (0,1]");
    }
};

struct BiomarkerModel {
    double prevalence = 0.0;
    std::vector<double> covariate_coefs;  // optional linear shift on the probability scale

    void validate(std::size_t n_covariates) const {
        if (!(prevalence >= 0.0 && prevalence <= 1.0))
            throw ModelError("biomarker: prevalence must be in [0,1]");
        if (!covariate_coefs.empty() && covariate_coefs.size() != n_covariates)
            throw ModelError("biomarker: covariate_coefs length does not match covariates");
    }
};

// ---------------------------------------------------------------------------
// Patient records and ground truth
// ---------------------------------------------------------------------------

using PatientId = std::uint32_t;

// Both potential outcomes are materialized for every patient so ground truth
// is computable by direct summation. u_accept is the single latent uniform
// draw fixed at generation time: the patient accepts an offer iff
// u_accept < pi_accept, which makes "complier" a deterministic attribute.
struct PatientRecord {
    PatientId id = 0;
    std::vector<double> x;
    double y0 = 0.0;
    double y1 = 0.0;
    double pi_accept = 1.0;
    double u_accept = 0.0;
    std::optional<bool> biomarker;

    bool complier() const { return u_accept < pi_accept; }
};

struct Population {
    std::vector<std::string> covariate_names;
    OutcomeKind outcome_kind = OutcomeKind::Continuous;
    std::vector<PatientRecord> records;

    std::size_t covariate_index(const std::string& name) const {
        for (std::size_t i = 0; i < covariate_names.size(); ++i)
            if (covariate_names[i] == name) return i;
        throw CriteriaError("unknown covariate '" + name + "'");
    }
};

struct TrueEstimands {
    double ace_received = 0.0;   // mean(y1 - y0)
    double ace_offered = 0.0;    // mean(pi_accept * (y1 - y0)); refusers contribute 0
    double cace = 0.0;           // mean(y1 - y0 | complier)
    double acceptance_rate = 0.0;  // mean(pi_accept)
};

// Bundle used by scenario configs and the power calculator.
struct PopulationSpec {
    std::vector<CovariateSpec> covariates;
    OutcomeModel outcome;
    AcceptanceModel acceptance;
    std::optional<BiomarkerModel> biomarker;

    void validate() const {
        for (const auto& c : covariates) c.validate();
        outcome.validate(covariates.size());
        acceptance.validate(covariates.size());
        if (biomarker) biomarker->validate(covariates.size());
    }
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

inline double dot_or_zero(const std::vector<double>& coefs, const std::vector<double>& x) {
    if (coefs.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < coefs.size(); ++i) s += coefs[i] * x[i];
    return s;
}

}  // namespace detail

inline Population generate_population(std::size_t n, const std::vector<CovariateSpec>& covariates,
                                      const OutcomeModel& outcome, const AcceptanceModel& acceptance,
                                      const std::optional<BiomarkerModel>& biomarker,
                                      std::uint64_t seed) {
    for (const auto& c : covariates) c.validate();
    outcome.validate(covariates.size());
    acceptance.validate(covariates.size());
    if (biomarker) biomarker->validate(covariates.size());

    Population pop;
    pop.outcome_kind = outcome.kind;
    pop.covariate_names.reserve(covariates.size());
    for (const auto& c : covariates) pop.covariate_names.push_back(c.name);

    Rng rng(seed);
    pop.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PatientRecord rec;
        rec.id = static_cast<PatientId>(i);
        rec.x.reserve(covariates.size());
        for (const auto& c : covariates) {
            if (const auto* nd = std::get_if<NormalDist>(&c.distribution))
                rec.x.push_back(rng.normal(nd->mean, nd->sd));
            else if (const auto* bd = std::get_if<BernoulliDist>(&c.distribution))
                rec.x.push_back(rng.bernoulli(bd->p) ? 1.0 : 0.0);
            else
                rec.x.push_back(rng.uniform(std::get<UniformDist>(c.distribution).lo,
                                            std::get<UniformDist>(c.distribution).hi));
        }

        const double effect =
            outcome.treatment_effect + detail::dot_or_zero(outcome.effect_heterogeneity, rec.x);
        if (outcome.kind == OutcomeKind::Continuous) {
            rec.y0 = outcome.control_level + detail::dot_or_zero(outcome.covariate_coefs, rec.x) +
                     rng.normal(0.0, outcome.noise_sd);
            rec.y1 = rec.y0 + effect;
        } else {
            const double p0 =
                outcome.control_level + detail::dot_or_zero(outcome.covariate_coefs, rec.x);
            const double p1 = p0 + effect;
            if (p0 < 0.0 || p0 > 1.0 || p1 < 0.0 || p1 > 1.0)
                throw ModelError("binary outcome probability outside [0,1] for patient " +
                                 std::to_string(i) + " (p0=" + std::to_string(p0) +
                                 ", p1=" + std::to_string(p1) + ")");
            // Shared latent uniform couples the two potential outcomes.
            const double v = rng.uniform01();
            rec.y0 = (v < p0) ? 1.0 : 0.0;
            rec.y1 = (v < p1) ? 1.0 : 0.0;
        }

        rec.pi_accept =
            logistic(acceptance.intercept + detail::dot_or_zero(acceptance.covariate_coefs, rec.x));
        rec.u_accept = rng.uniform01();

        if (biomarker) {
            const double pb =
                biomarker->prevalence + detail::dot_or_zero(biomarker->covariate_coefs, rec.x);
            if (pb < 0.0 || pb > 1.0)
                throw ModelError("biomarker probability outside [0,1] for patient " +
                                 std::to_string(i));
            rec.biomarker = rng.bernoulli(pb);
        }
        pop.records.push_back(std::move(rec));
    }
    return pop;
}

inline Population generate_population(std::size_t n, const PopulationSpec& spec, std::uint64_t seed) {
    return generate_population(n, spec.covariates, spec.outcome, spec.acceptance, spec.biomarker,
                               seed);
}

// ---------------------------------------------------------------------------
// Acceptance intercept calibration
// ---------------------------------------------------------------------------

// Finds the intercept whose marginal acceptance rate hits target_rate. With
// no covariate effects the closed form logit(target) is exact; otherwise a
// monotone bisection over a fixed Monte Carlo draw of covariate vectors is
// used (>= 1e5 draws, tolerance 0.005 on the achieved marginal).
inline double calibrate_acceptance_intercept(const AcceptanceModel& acceptance,
                                             const std::vector<CovariateSpec>& covariates,
                                             double target_rate, std::uint64_t seed,
                                             std::size_t n_draws = 200000) {
    if (!(target_rate > 0.0 && target_rate < 1.0))
        throw CalibrationError("target_rate must be in (0,1)", 0.0, 1.0);
    for (const auto& c : covariates) c.validate();
    acceptance.validate(covariates.size());

    bool all_zero = true;
    for (double g : acceptance.covariate_coefs)
        if (g != 0.0) all_zero = false;
    if (acceptance.covariate_coefs.empty() || all_zero) return logit(target_rate);

    // Common random numbers: one fixed set of linear predictors, reused for
    // every candidate intercept, makes the objective smooth and monotone.
    Rng rng(seed);
    std::vector<double> eta(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) {
        double s = 0.0;
        for (std::size_t i = 0; i < covariates.size(); ++i) {
            double x;
            if (const auto* nd = std::get_if<NormalDist>(&covariates[i].distribution))
                x = rng.normal(nd->mean, nd->sd);
            else if (const auto* bd = std::get_if<BernoulliDist>(&covariates[i].distribution))
                x = rng.bernoulli(bd->p) ? 1.0 : 0.0;
            else
                x = rng.uniform(std::get<UniformDist>(covariates[i].distribution).lo,
                                std::get<UniformDist>(covariates[i].distribution).hi);
            if (i < acceptance.covariate_coefs.size()) s += acceptance.covariate_coefs[i] * x;
        }
        eta[d] = s;
    }
    const auto marginal = [&](double intercept) {
        double m = 0.0;
        for (double e : eta) m += logistic(intercept + e);
        return m / static_cast<double>(eta.size());
    };

    double lo = -40.0, hi = 40.0;
    const double m_lo = marginal(lo), m_hi = marginal(hi);
    if (target_rate < m_lo || target_rate > m_hi)
        throw CalibrationError("acceptance calibration cannot reach target " +
                                   std::to_string(target_rate) + "; achievable range [" +
                                   std::to_string(m_lo) + ", " + std::to_string(m_hi) + "]",
                               m_lo, m_hi);
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (marginal(mid) < target_rate)
            lo = mid;
        else
            hi = mid;
    }
    const double intercept = 0.5 * (lo + hi);
    const double achieved = marginal(intercept);
    if (std::fabs(achieved - target_rate) > 0.005)
        throw CalibrationError("acceptance calibration stalled at marginal " +
                                   std::to_string(achieved) + " for target " +
                                   std::to_string(target_rate),
                               achieved, achieved);
    return intercept;
}

// ---------------------------------------------------------------------------
// Ground truth by direct summation
// ---------------------------------------------------------------------------

inline TrueEstimands compute_true_estimands(const std::vector<PatientRecord>& population) {
    if (population.empty())
        throw EstimationError("compute_true_estimands: population is empty");
    double sum_diff = 0.0, sum_offered = 0.0, sum_pi = 0.0;
    double sum_complier_diff = 0.0;
    std::size_t n_compliers = 0;
    for (const auto& p : population) {
        const double diff = p.y1 - p.y0;
        sum_diff += diff;
        sum_offered += p.pi_accept * diff;
        sum_pi += p.pi_accept;
        if (p.complier()) {
            sum_complier_diff += diff;
            ++n_compliers;
        }
    }
    if (n_compliers == 0)
        throw EstimationError("compute_true_estimands: no compliers, CACE undefined");
    const double n = static_cast<double>(population.size());
    TrueEstimands t;
    t.ace_received = sum_diff / n;
    t.ace_offered = sum_offered / n;
    t.acceptance_rate = sum_pi / n;
    t.cace = sum_complier_diff / static_cast<double>(n_compliers);
    return t;
}

inline TrueEstimands compute_true_estimands(const Population& pop) {
    return compute_true_estimands(pop.records);
}

}  // namespace twics
