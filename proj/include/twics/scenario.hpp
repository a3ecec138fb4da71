#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twics/cohort.hpp"
#include "twics/design.hpp"
#include "twics/error.hpp"
#include "twics/estimators.hpp"
#include "twics/parallel.hpp"
#include "twics/population.hpp"
#include "twics/randomization.hpp"
#include "twics/trial.hpp"

namespace twics {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct EnrollmentPattern {
    enum class Kind { Immediate, Staggered };
    Kind kind = Kind::Immediate;
    Tick start_tick = 0;
    std::size_t patients_per_tick = 0;  // staggered only
};

struct CohortConfig {
    std::size_t size = 0;
    EnrollmentPattern enrollment;
    double broad_consent_rate = 1.0;
    MeasurementSchedule schedule;
    Tick alignment_tolerance = 0;
};

struct PlanningInfo {
    double planned_refusal = 0.0;
    std::optional<double> actual_refusal;
};

struct SweepConfig {
    std::string parameter;  // refusal_rate | acceptance_rate | treatment_effect
    std::vector<double> values;
};

struct ScenarioConfig {
    int schema_version = 1;
    PopulationSpec population;
    CohortConfig cohort;
    TrialDesign design;
    std::optional<PlanningInfo> planning;
    std::vector<Estimand> analyses;
    std::vector<std::string> analysis_covariates;
    std::size_t replications = 1;
    std::uint64_t master_seed = 0;
    double alpha = 0.05;
    std::size_t bootstrap_replicates = 200;
    std::string output_dir = "out";
    std::optional<SweepConfig> sweep;
};

// ---------------------------------------------------------------------------
// Strict JSON parsing: unknown keys are rejected and every problem found is
// reported, not just the first.
// ---------------------------------------------------------------------------

namespace cfg {

inline void check_keys(const json& o, const std::string& path,
                       std::initializer_list<const char*> allowed,
                       std::vector<std::string>& errors) {
    if (!o.is_object()) {
        errors.push_back(path + ": expected an object");
        return;
    }
    for (const auto& [key, _] : o.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) errors.push_back(path + ": unknown field '" + key + "'");
    }
}

inline const json* get(const json& o, const std::string& path, const char* key, bool required,
                       std::vector<std::string>& errors) {
    if (!o.is_object()) return nullptr;
    auto it = o.find(key);
    if (it == o.end()) {
        if (required) errors.push_back(path + ": missing required field '" + key + "'");
        return nullptr;
    }
    return &*it;
}

inline std::optional<double> as_number(const json* j, const std::string& path,
                                       std::vector<std::string>& errors) {
    if (!j) return std::nullopt;
    if (!j->is_number()) {
        errors.push_back(path + ": expected a number");
        return std::nullopt;
    }
    return j->get<double>();
}

inline std::optional<std::int64_t> as_int(const json* j, const std::string& path,
                                          std::vector<std::string>& errors) {
    if (!j) return std::nullopt;
    if (!j->is_number_integer()) {
        errors.push_back(path + ": expected an integer");
        return std::nullopt;
    }
    return j->get<std::int64_t>();
}

inline std::optional<std::uint64_t> as_uint(const json* j, const std::string& path,
                                            std::vector<std::string>& errors) {
    if (!j) return std::nullopt;
    if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<std::int64_t>() >= 0)) {
        errors.push_back(path + ": expected a non-negative integer");
        return std::nullopt;
    }
    return j->get<std::uint64_t>();
}

inline std::optional<std::string> as_string(const json* j, const std::string& path,
                                            std::vector<std::string>& errors) {
    if (!j) return std::nullopt;
    if (!j->is_string()) {
        errors.push_back(path + ": expected a string");
        return std::nullopt;
    }
    return j->get<std::string>();
}

// {"covariate_name": coefficient} -> vector aligned with the covariate list.
inline std::vector<double> coef_map(const json* j, const std::string& path,
                                    const std::vector<std::string>& names,
                                    std::vector<std::string>& errors) {
    std::vector<double> out;
    if (!j) return out;
    if (!j->is_object()) {
        errors.push_back(path + ": expected an object mapping covariate names to numbers");
        return out;
    }
    if (j->empty()) return out;
    out.assign(names.size(), 0.0);
    for (const auto& [key, val] : j->items()) {
        auto it = std::find(names.begin(), names.end(), key);
        if (it == names.end()) {
            errors.push_back(path + ": references unknown covariate '" + key + "'");
            continue;
        }
        if (!val.is_number()) {
            errors.push_back(path + "." + key + ": expected a number");
            continue;
        }
        out[static_cast<std::size_t>(it - names.begin())] = val.get<double>();
    }
    return out;
}

}  // namespace cfg

inline ScenarioConfig parse_config(const json& root, std::vector<std::string>& errors) {
    using namespace cfg;
    ScenarioConfig c;

    check_keys(root, "$",
               {"schema_version", "population", "cohort", "design", "planning", "analyses",
                "analysis_covariates", "replications", "master_seed", "alpha",
                "bootstrap_replicates", "output_dir", "sweep"},
               errors);
    if (!root.is_object()) return c;

    if (auto v = as_int(get(root, "$", "schema_version", true, errors), "$.schema_version", errors)) {
        c.schema_version = static_cast<int>(*v);
        if (c.schema_version != 1)
            errors.push_back("$.schema_version: unsupported version " + std::to_string(*v));
    }

    // --- population ---------------------------------------------------------
    std::vector<std::string> cov_names;
    if (const json* pop = get(root, "$", "population", true, errors)) {
        check_keys(*pop, "$.population", {"covariates", "outcome", "acceptance", "biomarker"},
                   errors);
        if (const json* covs = get(*pop, "$.population", "covariates", true, errors)) {
            if (!covs->is_array()) {
                errors.push_back("$.population.covariates: expected an array");
            } else {
                std::size_t i = 0;
                for (const auto& cv : *covs) {
                    const std::string path = "$.population.covariates[" + std::to_string(i++) + "]";
                    check_keys(cv, path, {"name", "distribution"}, errors);
                    CovariateSpec spec;
                    if (auto nm = as_string(get(cv, path, "name", true, errors), path + ".name",
                                            errors)) {
                        spec.name = *nm;
                        if (std::find(cov_names.begin(), cov_names.end(), *nm) != cov_names.end())
                            errors.push_back(path + ".name: duplicate covariate '" + *nm + "'");
                    }
                    if (const json* d = get(cv, path, "distribution", true, errors)) {
                        const std::string dp = path + ".distribution";
                        auto type = as_string(get(*d, dp, "type", true, errors), dp + ".type", errors);
                        if (type == "normal") {
                            check_keys(*d, dp, {"type", "mean", "sd"}, errors);
                            NormalDist nd;
                            if (auto m = as_number(get(*d, dp, "mean", true, errors), dp + ".mean",
                                                   errors))
                                nd.mean = *m;
                            if (auto s = as_number(get(*d, dp, "sd", true, errors), dp + ".sd",
                                                   errors)) {
                                nd.sd = *s;
                                if (!(*s > 0.0)) errors.push_back(dp + ".sd: must be > 0");
                            }
                            spec.distribution = nd;
                        } else if (type == "bernoulli") {
                            check_keys(*d, dp, {"type", "p"}, errors);
                            BernoulliDist bd;
                            if (auto p = as_number(get(*d, dp, "p", true, errors), dp + ".p",
                                                   errors)) {
                                bd.p = *p;
                                if (!(*p >= 0.0 && *p <= 1.0))
                                    errors.push_back(dp + ".p: must be in [0,1]");
                            }
                            spec.distribution = bd;
                        } else if (type == "uniform") {
                            check_keys(*d, dp, {"type", "lo", "hi"}, errors);
                            UniformDist ud;
                            auto lo = as_number(get(*d, dp, "lo", true, errors), dp + ".lo", errors);
                            auto hi = as_number(get(*d, dp, "hi", true, errors), dp + ".hi", errors);
                            if (lo) ud.lo = *lo;
                            if (hi) ud.hi = *hi;
                            if (lo && hi && !(*lo < *hi))
                                errors.push_back(dp + ": lo must be < hi");
                            spec.distribution = ud;
                        } else if (type) {
                            errors.push_back(dp + ".type: unknown distribution '" + *type + "'");
                        }
                    }
                    cov_names.push_back(spec.name);
                    c.population.covariates.push_back(std::move(spec));
                }
            }
        }

        if (const json* oc = get(*pop, "$.population", "outcome", true, errors)) {
            const std::string op = "$.population.outcome";
            check_keys(*oc, op,
                       {"kind", "control_level", "treatment_effect", "covariate_coefs", "noise_sd",
                        "effect_heterogeneity"},
                       errors);
            auto kind = as_string(get(*oc, op, "kind", true, errors), op + ".kind", errors);
            if (kind == "continuous")
                c.population.outcome.kind = OutcomeKind::Continuous;
            else if (kind == "binary")
                c.population.outcome.kind = OutcomeKind::Binary;
            else if (kind)
                errors.push_back(op + ".kind: must be 'continuous' or 'binary'");
            if (auto v = as_number(get(*oc, op, "control_level", true, errors),
                                   op + ".control_level", errors))
                c.population.outcome.control_level = *v;
            if (auto v = as_number(get(*oc, op, "treatment_effect", true, errors),
                                   op + ".treatment_effect", errors))
                c.population.outcome.treatment_effect = *v;
            if (auto v = as_number(get(*oc, op, "noise_sd", false, errors), op + ".noise_sd",
                                   errors)) {
                c.population.outcome.noise_sd = *v;
                if (!(*v > 0.0)) errors.push_back(op + ".noise_sd: must be > 0");
            }
            c.population.outcome.covariate_coefs =
                coef_map(get(*oc, op, "covariate_coefs", false, errors), op + ".covariate_coefs",
                         cov_names, errors);
            c.population.outcome.effect_heterogeneity =
                coef_map(get(*oc, op, "effect_heterogeneity", false, errors),
                         op + ".effect_heterogeneity", cov_names, errors);
        }

        if (const json* ac = get(*pop, "$.population", "acceptance", true, errors)) {
            const std::string ap = "$.population.acceptance";
            check_keys(*ac, ap, {"intercept", "covariate_coefs", "target_marginal_rate"}, errors);
            if (auto v = as_number(get(*ac, ap, "intercept", false, errors), ap + ".intercept",
                                   errors))
                c.population.acceptance.intercept = *v;
            c.population.acceptance.covariate_coefs =
                coef_map(get(*ac, ap, "covariate_coefs", false, errors), ap + ".covariate_coefs",
                         cov_names, errors);
            if (auto v = as_number(get(*ac, ap, "target_marginal_rate", false, errors),
                                   ap + ".target_marginal_rate", errors)) {
                c.population.acceptance.target_marginal_rate = *v;
                if (!(*v > 0.0 && *v <= 1.0))
                    errors.push_back(ap + ".target_marginal_rate: must be in (0,1]");
            }
        }

        if (const json* bm = get(*pop, "$.population", "biomarker", false, errors)) {
            const std::string bp = "$.population.biomarker";
            check_keys(*bm, bp, {"prevalence", "covariate_coefs"}, errors);
            BiomarkerModel model;
            if (auto v = as_number(get(*bm, bp, "prevalence", true, errors), bp + ".prevalence",
                                   errors)) {
                model.prevalence = *v;
                if (!(*v >= 0.0 && *v <= 1.0)) errors.push_back(bp + ".prevalence: must be in [0,1]");
            }
            model.covariate_coefs = coef_map(get(*bm, bp, "covariate_coefs", false, errors),
                                             bp + ".covariate_coefs", cov_names, errors);
            c.population.biomarker = std::move(model);
        }
    }

    // --- cohort --------------------------------------------------------------
    if (const json* ch = get(root, "$", "cohort", true, errors)) {
        check_keys(*ch, "$.cohort",
                   {"size", "enrollment", "broad_consent_rate", "measurement_ticks",
                    "alignment_tolerance"},
                   errors);
        if (auto v = as_uint(get(*ch, "$.cohort", "size", true, errors), "$.cohort.size", errors)) {
            c.cohort.size = *v;
            if (*v == 0) errors.push_back("$.cohort.size: must be >= 1");
        }
        if (const json* en = get(*ch, "$.cohort", "enrollment", false, errors)) {
            const std::string ep = "$.cohort.enrollment";
            check_keys(*en, ep, {"pattern", "start_tick", "patients_per_tick"}, errors);
            auto pat = as_string(get(*en, ep, "pattern", true, errors), ep + ".pattern", errors);
            if (pat == "immediate")
                c.cohort.enrollment.kind = EnrollmentPattern::Kind::Immediate;
            else if (pat == "staggered")
                c.cohort.enrollment.kind = EnrollmentPattern::Kind::Staggered;
            else if (pat)
                errors.push_back(ep + ".pattern: must be 'immediate' or 'staggered'");
            if (auto v = as_int(get(*en, ep, "start_tick", false, errors), ep + ".start_tick",
                                errors))
                c.cohort.enrollment.start_tick = *v;
            if (auto v = as_uint(get(*en, ep, "patients_per_tick", false, errors),
                                 ep + ".patients_per_tick", errors))
                c.cohort.enrollment.patients_per_tick = *v;
            if (c.cohort.enrollment.kind == EnrollmentPattern::Kind::Staggered &&
                c.cohort.enrollment.patients_per_tick == 0)
                errors.push_back(ep + ": staggered enrollment requires patients_per_tick >= 1");
        }
        if (auto v = as_number(get(*ch, "$.cohort", "broad_consent_rate", false, errors),
                               "$.cohort.broad_consent_rate", errors)) {
            c.cohort.broad_consent_rate = *v;
            if (!(*v >= 0.0 && *v <= 1.0))
                errors.push_back("$.cohort.broad_consent_rate: must be in [0,1]");
        }
        if (const json* mt = get(*ch, "$.cohort", "measurement_ticks", true, errors)) {
            if (!mt->is_array() || mt->empty()) {
                errors.push_back("$.cohort.measurement_ticks: expected a non-empty array");
            } else {
                for (const auto& t : *mt) {
                    if (!t.is_number_integer()) {
                        errors.push_back("$.cohort.measurement_ticks: entries must be integers");
                        break;
                    }
                    c.cohort.schedule.measurement_ticks.push_back(t.get<Tick>());
                }
                for (std::size_t i = 1; i < c.cohort.schedule.measurement_ticks.size(); ++i)
                    if (c.cohort.schedule.measurement_ticks[i] <=
                        c.cohort.schedule.measurement_ticks[i - 1]) {
                        errors.push_back(
                            "$.cohort.measurement_ticks: must be strictly increasing");
                        break;
                    }
            }
        }
        if (auto v = as_int(get(*ch, "$.cohort", "alignment_tolerance", false, errors),
                            "$.cohort.alignment_tolerance", errors)) {
            c.cohort.alignment_tolerance = *v;
            if (*v < 0) errors.push_back("$.cohort.alignment_tolerance: must be >= 0");
        }
    }

    // --- design ---------------------------------------------------------------
    if (const json* dz = get(root, "$", "design", true, errors)) {
        check_keys(*dz, "$.design",
                   {"trial_id", "variant", "approach", "allocator", "target_n", "endpoint_tick",
                    "control_contamination_prob", "control_soc_refusal_prob",
                    "control_soc_refusal_outcome", "eligibility"},
                   errors);
        if (auto v = as_string(get(*dz, "$.design", "trial_id", false, errors), "$.design.trial_id",
                               errors))
            c.design.trial_id = *v;
        if (auto v = as_string(get(*dz, "$.design", "variant", false, errors), "$.design.variant",
                               errors)) {
            if (*v == "standard")
                c.design.variant = DesignVariant::Standard;
            else if (*v == "biomarker_gated")
                c.design.variant = DesignVariant::BiomarkerGated;
            else
                errors.push_back("$.design.variant: must be 'standard' or 'biomarker_gated'");
        }
        if (const json* ap = get(*dz, "$.design", "approach", true, errors)) {
            const std::string pp = "$.design.approach";
            auto type = as_string(get(*ap, pp, "type", true, errors), pp + ".type", errors);
            if (type == "single_batch") {
                check_keys(*ap, pp, {"type", "tick"}, errors);
                SingleBatch sb;
                if (auto v = as_int(get(*ap, pp, "tick", false, errors), pp + ".tick", errors))
                    sb.tick = *v;
                c.design.approach = sb;
            } else if (type == "multiple_batch") {
                check_keys(*ap, pp, {"type", "batch_ticks", "per_batch_cap"}, errors);
                MultipleBatch mb;
                if (const json* bt = get(*ap, pp, "batch_ticks", true, errors)) {
                    if (!bt->is_array() || bt->empty())
                        errors.push_back(pp + ".batch_ticks: expected a non-empty array");
                    else
                        for (const auto& t : *bt) {
                            if (!t.is_number_integer()) {
                                errors.push_back(pp + ".batch_ticks: entries must be integers");
                                break;
                            }
                            mb.batch_ticks.push_back(t.get<Tick>());
                        }
                    for (std::size_t i = 1; i < mb.batch_ticks.size(); ++i)
                        if (mb.batch_ticks[i] <= mb.batch_ticks[i - 1]) {
                            errors.push_back(pp + ".batch_ticks: must be strictly increasing");
                            break;
                        }
                }
                if (auto v = as_uint(get(*ap, pp, "per_batch_cap", false, errors),
                                     pp + ".per_batch_cap", errors)) {
                    mb.per_batch_cap = *v;
                    if (*v < 1) errors.push_back(pp + ".per_batch_cap: must be >= 1");
                }
                c.design.approach = mb;
            } else if (type == "on_entry") {
                check_keys(*ap, pp, {"type"}, errors);
                c.design.approach = OnEntry{};
            } else if (type) {
                errors.push_back(pp + ".type: unknown sampling approach '" + *type + "'");
            }
        }
        if (const json* al = get(*dz, "$.design", "allocator", true, errors)) {
            const std::string lp = "$.design.allocator";
            auto type = as_string(get(*al, lp, "type", true, errors), lp + ".type", errors);
            if (type == "bernoulli") {
                check_keys(*al, lp, {"type", "p_offered"}, errors);
                SimpleBernoulli sb;
                if (auto v = as_number(get(*al, lp, "p_offered", true, errors), lp + ".p_offered",
                                       errors)) {
                    sb.p_offered = *v;
                    if (!(*v > 0.0 && *v < 1.0))
                        errors.push_back(lp + ".p_offered: must be in (0,1)");
                }
                c.design.allocator = sb;
            } else if (type == "permuted_blocks") {
                check_keys(*al, lp, {"type", "block_size"}, errors);
                PermutedBlocks pb;
                if (auto v = as_uint(get(*al, lp, "block_size", true, errors), lp + ".block_size",
                                     errors)) {
                    pb.block_size = *v;
                    if (*v < 2 || *v % 2 != 0)
                        errors.push_back(lp + ".block_size: must be even and >= 2");
                }
                c.design.allocator = pb;
            } else if (type) {
                errors.push_back(lp + ".type: unknown allocator '" + *type + "'");
            }
        }
        if (auto v = as_uint(get(*dz, "$.design", "target_n", true, errors), "$.design.target_n",
                             errors)) {
            c.design.target_n = *v;
            if (*v < 1) errors.push_back("$.design.target_n: must be >= 1");
        }
        if (auto v = as_int(get(*dz, "$.design", "endpoint_tick", true, errors),
                            "$.design.endpoint_tick", errors))
            c.design.endpoint_tick = *v;
        if (auto v = as_number(get(*dz, "$.design", "control_contamination_prob", false, errors),
                               "$.design.control_contamination_prob", errors)) {
            c.design.control_contamination_prob = *v;
            if (!(*v >= 0.0 && *v <= 1.0))
                errors.push_back("$.design.control_contamination_prob: must be in [0,1]");
        }
        if (auto v = as_number(get(*dz, "$.design", "control_soc_refusal_prob", false, errors),
                               "$.design.control_soc_refusal_prob", errors)) {
            c.design.control_soc_refusal_prob = *v;
            if (!(*v >= 0.0 && *v <= 1.0))
                errors.push_back("$.design.control_soc_refusal_prob: must be in [0,1]");
        }
        if (auto v = as_number(get(*dz, "$.design", "control_soc_refusal_outcome", false, errors),
                               "$.design.control_soc_refusal_outcome", errors))
            c.design.control_soc_refusal_outcome = *v;
        if (const json* el = get(*dz, "$.design", "eligibility", false, errors)) {
            const std::string lp = "$.design.eligibility";
            check_keys(*el, lp, {"predicates", "exclude_prior_trials"}, errors);
            if (const json* pr = get(*el, lp, "predicates", false, errors)) {
                if (!pr->is_array()) {
                    errors.push_back(lp + ".predicates: expected an array");
                } else {
                    std::size_t i = 0;
                    for (const auto& p : *pr) {
                        const std::string qp = lp + ".predicates[" + std::to_string(i++) + "]";
                        check_keys(p, qp, {"covariate", "min", "max", "equals"}, errors);
                        CovariatePredicate pred;
                        if (auto nm = as_string(get(p, qp, "covariate", true, errors),
                                                qp + ".covariate", errors)) {
                            pred.covariate = *nm;
                            if (std::find(cov_names.begin(), cov_names.end(), *nm) ==
                                cov_names.end())
                                errors.push_back(qp + ".covariate: unknown covariate '" + *nm +
                                                 "'");
                        }
                        if (auto v = as_number(get(p, qp, "min", false, errors), qp + ".min",
                                               errors))
                            pred.min = *v;
                        if (auto v = as_number(get(p, qp, "max", false, errors), qp + ".max",
                                               errors))
                            pred.max = *v;
                        if (auto v = as_number(get(p, qp, "equals", false, errors), qp + ".equals",
                                               errors))
                            pred.equals = *v;
                        if (!pred.min && !pred.max && !pred.equals)
                            errors.push_back(qp + ": at least one of min/max/equals required");
                        c.design.criteria.predicates.push_back(std::move(pred));
                    }
                }
            }
            if (const json* ex = get(*el, lp, "exclude_prior_trials", false, errors)) {
                if (!ex->is_array()) {
                    errors.push_back(lp + ".exclude_prior_trials: expected an array of strings");
                } else {
                    for (const auto& t : *ex) {
                        if (!t.is_string()) {
                            errors.push_back(lp +
                                             ".exclude_prior_trials: entries must be strings");
                            break;
                        }
                        c.design.criteria.exclude_prior_trials.insert(t.get<std::string>());
                    }
                }
            }
        }
    }

    // --- planning (metadata) ---------------------------------------------------
    if (const json* pl = get(root, "$", "planning", false, errors)) {
        check_keys(*pl, "$.planning", {"planned_refusal", "actual_refusal"}, errors);
        PlanningInfo info;
        if (auto v = as_number(get(*pl, "$.planning", "planned_refusal", true, errors),
                               "$.planning.planned_refusal", errors)) {
            info.planned_refusal = *v;
            if (!(*v >= 0.0 && *v < 1.0))
                errors.push_back("$.planning.planned_refusal: must be in [0,1)");
        }
        if (auto v = as_number(get(*pl, "$.planning", "actual_refusal", false, errors),
                               "$.planning.actual_refusal", errors)) {
            info.actual_refusal = *v;
            if (!(*v >= 0.0 && *v < 1.0))
                errors.push_back("$.planning.actual_refusal: must be in [0,1)");
        }
        c.planning = info;
    }

    // --- analyses and run parameters -------------------------------------------
    if (const json* an = get(root, "$", "analyses", true, errors)) {
        if (!an->is_array() || an->empty()) {
            errors.push_back("$.analyses: expected a non-empty array of estimand labels");
        } else {
            for (const auto& a : *an) {
                if (!a.is_string()) {
                    errors.push_back("$.analyses: entries must be strings");
                    continue;
                }
                if (auto e = parse_estimand(a.get<std::string>()))
                    c.analyses.push_back(*e);
                else
                    errors.push_back("$.analyses: unknown estimand label '" +
                                     a.get<std::string>() + "'");
            }
        }
    }
    if (const json* ac = get(root, "$", "analysis_covariates", false, errors)) {
        if (!ac->is_array()) {
            errors.push_back("$.analysis_covariates: expected an array of covariate names");
        } else {
            for (const auto& a : *ac) {
                if (!a.is_string()) {
                    errors.push_back("$.analysis_covariates: entries must be strings");
                    continue;
                }
                const auto nm = a.get<std::string>();
                if (std::find(cov_names.begin(), cov_names.end(), nm) == cov_names.end())
                    errors.push_back("$.analysis_covariates: unknown covariate '" + nm + "'");
                c.analysis_covariates.push_back(nm);
            }
        }
    }
    if (auto v = as_uint(get(root, "$", "replications", true, errors), "$.replications", errors)) {
        c.replications = *v;
        if (*v < 1) errors.push_back("$.replications: must be >= 1");
    }
    if (auto v = as_uint(get(root, "$", "master_seed", true, errors), "$.master_seed", errors))
        c.master_seed = *v;
    if (auto v = as_number(get(root, "$", "alpha", false, errors), "$.alpha", errors)) {
        c.alpha = *v;
        if (!(*v > 0.0 && *v < 1.0)) errors.push_back("$.alpha: must be in (0,1)");
    }
    if (auto v = as_uint(get(root, "$", "bootstrap_replicates", false, errors),
                         "$.bootstrap_replicates", errors))
        c.bootstrap_replicates = *v;
    if (auto v = as_string(get(root, "$", "output_dir", false, errors), "$.output_dir", errors))
        c.output_dir = *v;

    if (const json* sw = get(root, "$", "sweep", false, errors)) {
        check_keys(*sw, "$.sweep", {"parameter", "values"}, errors);
        SweepConfig s;
        if (auto v = as_string(get(*sw, "$.sweep", "parameter", true, errors), "$.sweep.parameter",
                               errors)) {
            s.parameter = *v;
            if (*v != "refusal_rate" && *v != "acceptance_rate" && *v != "treatment_effect")
                errors.push_back("$.sweep.parameter: must be one of refusal_rate, "
                                 "acceptance_rate, treatment_effect");
        }
        if (const json* vals = get(*sw, "$.sweep", "values", true, errors)) {
            if (!vals->is_array() || vals->empty()) {
                errors.push_back("$.sweep.values: expected a non-empty array of numbers");
            } else {
                for (const auto& v : *vals) {
                    if (!v.is_number()) {
                        errors.push_back("$.sweep.values: entries must be numbers");
                        break;
                    }
                    s.values.push_back(v.get<double>());
                    if ((s.parameter == "refusal_rate" || s.parameter == "acceptance_rate") &&
                        !(s.values.back() >= 0.0 && s.values.back() < 1.0))
                        errors.push_back("$.sweep.values: rates must be in [0,1)");
                }
            }
        }
        c.sweep = std::move(s);
    }

    // --- cross-field rules -------------------------------------------------------
    if (c.design.variant == DesignVariant::BiomarkerGated && !c.population.biomarker)
        errors.push_back(
            "$.design.variant: biomarker_gated requires a $.population.biomarker block");
    bool wants_propensity = false, wants_bootstrap = false;
    for (Estimand e : c.analyses) {
        if (e == Estimand::CacePropensity) wants_propensity = true;
        if (e == Estimand::CacePropensity || e == Estimand::Cace2SPS || e == Estimand::Cace2SRI)
            wants_bootstrap = true;
    }
    if (wants_propensity && c.analysis_covariates.empty())
        errors.push_back("$.analyses: CACE_Propensity requires non-empty $.analysis_covariates");
    if (wants_bootstrap && c.bootstrap_replicates < 100)
        errors.push_back("$.bootstrap_replicates: must be >= 100 for bootstrap-based analyses");
    if (!c.cohort.schedule.measurement_ticks.empty()) {
        const AlignmentResult al = check_schedule_alignment(
            {c.design.endpoint_tick}, c.cohort.schedule, c.cohort.alignment_tolerance);
        if (!al.aligned)
            errors.push_back("$.design.endpoint_tick: " + std::to_string(c.design.endpoint_tick) +
                             " has no cohort measurement within tolerance " +
                             std::to_string(c.cohort.alignment_tolerance) +
                             "; trial follow-up must match the routine schedule");
    }
    return c;
}

inline std::vector<std::string> validate_config(const json& root) {
    std::vector<std::string> errors;
    (void)parse_config(root, errors);
    return errors;
}

// ---------------------------------------------------------------------------
// Config serialization (round-trips through parse_config)
// ---------------------------------------------------------------------------

inline json to_json(const ScenarioConfig& c) {
    json root;
    root["schema_version"] = c.schema_version;

    json covs = json::array();
    for (const auto& cv : c.population.covariates) {
        json d;
        if (const auto* n = std::get_if<NormalDist>(&cv.distribution))
            d = {{"type", "normal"}, {"mean", n->mean}, {"sd", n->sd}};
        else if (const auto* b = std::get_if<BernoulliDist>(&cv.distribution))
            d = {{"type", "bernoulli"}, {"p", b->p}};
        else {
            const auto& u = std::get<UniformDist>(cv.distribution);
            d = {{"type", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
        }
        covs.push_back({{"name", cv.name}, {"distribution", d}});
    }
    const auto coef_obj = [&](const std::vector<double>& coefs) {
        json o = json::object();
        for (std::size_t i = 0; i < coefs.size(); ++i)
            if (coefs[i] != 0.0) o[c.population.covariates[i].name] = coefs[i];
        return o;
    };
    json outcome = {
        {"kind", c.population.outcome.kind == OutcomeKind::Continuous ? "continuous" : "binary"},
        {"control_level", c.population.outcome.control_level},
        {"treatment_effect", c.population.outcome.treatment_effect},
        {"noise_sd", c.population.outcome.noise_sd},
    };
    if (!c.population.outcome.covariate_coefs.empty())
        outcome["covariate_coefs"] = coef_obj(c.population.outcome.covariate_coefs);
    if (!c.population.outcome.effect_heterogeneity.empty())
        outcome["effect_heterogeneity"] = coef_obj(c.population.outcome.effect_heterogeneity);
    json acceptance = {{"intercept", c.population.acceptance.intercept}};
    if (!c.population.acceptance.covariate_coefs.empty())
        acceptance["covariate_coefs"] = coef_obj(c.population.acceptance.covariate_coefs);
    if (c.population.acceptance.target_marginal_rate)
        acceptance["target_marginal_rate"] = *c.population.acceptance.target_marginal_rate;
    root["population"] = {{"covariates", covs}, {"outcome", outcome}, {"acceptance", acceptance}};
    if (c.population.biomarker) {
        json bm = {{"prevalence", c.population.biomarker->prevalence}};
        if (!c.population.biomarker->covariate_coefs.empty())
            bm["covariate_coefs"] = coef_obj(c.population.biomarker->covariate_coefs);
        root["population"]["biomarker"] = bm;
    }

    json enrollment = {
        {"pattern",
         c.cohort.enrollment.kind == EnrollmentPattern::Kind::Immediate ? "immediate" : "staggered"},
        {"start_tick", c.cohort.enrollment.start_tick},
    };
    if (c.cohort.enrollment.kind == EnrollmentPattern::Kind::Staggered)
        enrollment["patients_per_tick"] = c.cohort.enrollment.patients_per_tick;
    root["cohort"] = {{"size", c.cohort.size},
                      {"enrollment", enrollment},
                      {"broad_consent_rate", c.cohort.broad_consent_rate},
                      {"measurement_ticks", c.cohort.schedule.measurement_ticks},
                      {"alignment_tolerance", c.cohort.alignment_tolerance}};

    json approach;
    if (const auto* sb = std::get_if<SingleBatch>(&c.design.approach))
        approach = {{"type", "single_batch"}, {"tick", sb->tick}};
    else if (const auto* mb = std::get_if<MultipleBatch>(&c.design.approach)) {
        approach = {{"type", "multiple_batch"}, {"batch_ticks", mb->batch_ticks}};
        if (mb->per_batch_cap) approach["per_batch_cap"] = *mb->per_batch_cap;
    } else {
        approach = {{"type", "on_entry"}};
    }
    json allocator;
    if (const auto* b = std::get_if<SimpleBernoulli>(&c.design.allocator))
        allocator = {{"type", "bernoulli"}, {"p_offered", b->p_offered}};
    else
        allocator = {{"type", "permuted_blocks"},
                     {"block_size", std::get<PermutedBlocks>(c.design.allocator).block_size}};
    json design = {{"trial_id", c.design.trial_id},
                   {"variant", c.design.variant == DesignVariant::Standard ? "standard"
                                                                           : "biomarker_gated"},
                   {"approach", approach},
                   {"allocator", allocator},
                   {"target_n", c.design.target_n},
                   {"endpoint_tick", c.design.endpoint_tick},
                   {"control_contamination_prob", c.design.control_contamination_prob},
                   {"control_soc_refusal_prob", c.design.control_soc_refusal_prob}};
    if (c.design.control_soc_refusal_outcome)
        design["control_soc_refusal_outcome"] = *c.design.control_soc_refusal_outcome;
    if (!c.design.criteria.predicates.empty() || !c.design.criteria.exclude_prior_trials.empty()) {
        json preds = json::array();
        for (const auto& p : c.design.criteria.predicates) {
            json q = {{"covariate", p.covariate}};
            if (p.min) q["min"] = *p.min;
            if (p.max) q["max"] = *p.max;
            if (p.equals) q["equals"] = *p.equals;
            preds.push_back(q);
        }
        design["eligibility"] = {
            {"predicates", preds},
            {"exclude_prior_trials", c.design.criteria.exclude_prior_trials}};
    }
    root["design"] = design;

    if (c.planning) {
        json pl = {{"planned_refusal", c.planning->planned_refusal}};
        if (c.planning->actual_refusal) pl["actual_refusal"] = *c.planning->actual_refusal;
        root["planning"] = pl;
    }

    json analyses = json::array();
    for (Estimand e : c.analyses) analyses.push_back(to_string(e));
    root["analyses"] = analyses;
    if (!c.analysis_covariates.empty()) root["analysis_covariates"] = c.analysis_covariates;
    root["replications"] = c.replications;
    root["master_seed"] = c.master_seed;
    root["alpha"] = c.alpha;
    root["bootstrap_replicates"] = c.bootstrap_replicates;
    root["output_dir"] = c.output_dir;
    if (c.sweep)
        root["sweep"] = {{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
    return root;
}

}  // namespace twics
