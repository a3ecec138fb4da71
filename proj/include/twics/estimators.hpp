#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twics/error.hpp"
#include "twics/linreg.hpp"
#include "twics/rng.hpp"
#include "twics/stats.hpp"
#include "twics/trial.hpp"

namespace twics {

// ---------------------------------------------------------------------------
// Estimand labels and results
// ---------------------------------------------------------------------------

enum class Estimand {
    AceOffered,      // ITT contrast: effect of being offered the treatment
    PerProtocol,     // offered-arm accepters vs all controls
    AsTreated,       // exposed vs unexposed, ignoring randomization
    CaceWald,        // ITT scaled by the exposure rate difference
    Cace2SPS,        // two-stage predictor substitution
    Cace2SRI,        // two-stage residual inclusion
    CacePropensity,  // accepters vs predicted-accepter controls
};

inline const char* to_string(Estimand e) {
    switch (e) {
        case Estimand::AceOffered: return "ACE_Offered";
        case Estimand::PerProtocol: return "PerProtocol";
        case Estimand::AsTreated: return "AsTreated";
        case Estimand::CaceWald: return "CACE_Wald";
        case Estimand::Cace2SPS: return "CACE_2SPS";
        case Estimand::Cace2SRI: return "CACE_2SRI";
        case Estimand::CacePropensity: return "CACE_Propensity";
    }
    return "?";
}

inline std::optional<Estimand> parse_estimand(const std::string& s) {
    for (Estimand e : {Estimand::AceOffered, Estimand::PerProtocol, Estimand::AsTreated,
                       Estimand::CaceWald, Estimand::Cace2SPS, Estimand::Cace2SRI,
                       Estimand::CacePropensity})
        if (s == to_string(e)) return e;
    return std::nullopt;
}

struct EstimateResult {
    Estimand estimand = Estimand::AceOffered;
    double point = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_offered = 0;  // size of the offered-side analysis set
    std::size_t n_control = 0;  // size of the control-side analysis set
    std::string method;
    std::vector<std::string> warnings;
};

struct AnalysisOptions {
    double alpha = 0.05;           // two-sided level; CI level is 1 - alpha
    std::size_t bootstrap_B = 200; // resamples for bootstrap-based standard errors
    std::uint64_t bootstrap_seed = 0;
    std::vector<std::string> covariates;  // adjustment set for IV / propensity analyses
};

namespace detail {

struct GroupStats {
    std::vector<double> y1, y0;  // outcomes in the offered-side and control-side sets
};

inline double mean_of(const std::vector<double>& v) {
    return mean(std::span<const double>(v.data(), v.size()));
}

// Pooled two-sample SE for continuous outcomes, risk-difference SE for binary.
inline double two_sample_se(const std::vector<double>& a, const std::vector<double>& b,
                            OutcomeKind kind) {
    const double n1 = static_cast<double>(a.size());
    const double n0 = static_cast<double>(b.size());
    if (kind == OutcomeKind::Binary) {
        const double p1 = mean_of(a), p0 = mean_of(b);
        return std::sqrt(p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0);
    }
    const double s1 = sample_variance(std::span<const double>(a.data(), a.size()));
    const double s0 = sample_variance(std::span<const double>(b.data(), b.size()));
    if (n1 + n0 <= 2.0) return 0.0;
    const double sp2 = ((n1 - 1.0) * s1 + (n0 - 1.0) * s0) / (n1 + n0 - 2.0);
    return std::sqrt(sp2 * (1.0 / n1 + 1.0 / n0));
}

inline void attach_ci(EstimateResult& r, double alpha) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    r.ci_lo = r.point - z * r.se;
    r.ci_hi = r.point + z * r.se;
}

inline std::vector<std::size_t> covariate_indices(const TrialDataset& ds,
                                                  const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    for (const auto& nm : names) {
        bool found = false;
        for (std::size_t i = 0; i < ds.covariate_names.size(); ++i)
            if (ds.covariate_names[i] == nm) {
                idx.push_back(i);
                found = true;
            }
        if (!found) throw CriteriaError("analysis covariate '" + nm + "' not in dataset");
    }
    return idx;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Treatment-policy contrast (ITT)
// ---------------------------------------------------------------------------

// Difference in mean outcome between the randomized arms. In this design the
// contrast is the effect of being offered the alternative treatment, never of
// receiving it; the method string keeps that phrasing in every report.
inline EstimateResult estimate_itt(const TrialDataset& ds, double alpha = 0.05) {
    std::vector<double> y1, y0;
    for (const auto& r : ds.rows) (r.z == 1 ? y1 : y0).push_back(r.y);
    if (y1.empty() || y0.empty())
        throw EstimationError("estimate_itt: both arms must be non-empty");

    EstimateResult res;
    res.estimand = Estimand::AceOffered;
    res.point = detail::mean_of(y1) - detail::mean_of(y0);
    res.se = detail::two_sample_se(y1, y0, ds.outcome_kind);
    res.n_offered = y1.size();
    res.n_control = y0.size();
    res.method =
        "difference in means as randomized; estimates the effect of being "
        "(offered to be) treated with the alternative treatment vs standard of care";
    detail::attach_ci(res, alpha);
    return res;
}

// ---------------------------------------------------------------------------
// Per-protocol and as-treated contrasts
// ---------------------------------------------------------------------------

// Offered-arm refusers are excluded; accepters are compared with all
// controls. Selection on acceptance makes this biased for the
// received-treatment effect whenever refusal is related to prognosis.
inline EstimateResult estimate_per_protocol(const TrialDataset& ds, double alpha = 0.05) {
    std::vector<double> y1, y0;
    for (const auto& r : ds.rows) {
        if (r.z == 1) {
            if (r.a && *r.a) y1.push_back(r.y);
        } else {
            y0.push_back(r.y);
        }
    }
    if (y1.empty()) throw EstimationError("estimate_per_protocol: no accepters in the offered arm");
    if (y0.empty()) throw EstimationError("estimate_per_protocol: control arm empty");

    EstimateResult res;
    res.estimand = Estimand::PerProtocol;
    res.point = detail::mean_of(y1) - detail::mean_of(y0);
    res.se = detail::two_sample_se(y1, y0, ds.outcome_kind);
    res.n_offered = y1.size();
    res.n_control = y0.size();
    res.method = "offered-arm accepters vs all controls (refusers excluded)";
    detail::attach_ci(res, alpha);
    return res;
}

inline EstimateResult estimate_as_treated(const TrialDataset& ds, double alpha = 0.05) {
    std::vector<double> y1, y0;
    for (const auto& r : ds.rows) (r.d == 1 ? y1 : y0).push_back(r.y);
    if (y1.empty() || y0.empty())
        throw EstimationError("estimate_as_treated: both exposure groups must be non-empty");

    EstimateResult res;
    res.estimand = Estimand::AsTreated;
    res.point = detail::mean_of(y1) - detail::mean_of(y0);
    res.se = detail::two_sample_se(y1, y0, ds.outcome_kind);
    res.n_offered = y1.size();
    res.n_control = y0.size();
    res.method = "exposed vs unexposed regardless of randomization";
    res.warnings.push_back("as-treated contrast ignores randomization; shown for illustration");
    detail::attach_ci(res, alpha);
    return res;
}

// ---------------------------------------------------------------------------
// Wald (ratio) CACE
// ---------------------------------------------------------------------------

// ITT contrast scaled by the exposure rate difference between arms. Without
// contamination the denominator is exactly the acceptance proportion among
// offered patients. Standard error by the delta method.
inline EstimateResult estimate_wald_cace(const TrialDataset& ds, double alpha = 0.05) {
    const EstimateResult itt = estimate_itt(ds, alpha);
    double d1 = 0.0, d0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    bool contaminated = false;
    for (const auto& r : ds.rows) {
        if (r.z == 1) {
            d1 += r.d;
            ++n1;
        } else {
            d0 += r.d;
            ++n0;
            if (r.d == 1) contaminated = true;
        }
    }
    const double p1 = d1 / static_cast<double>(n1);
    const double p0 = d0 / static_cast<double>(n0);
    const double q = p1 - p0;
    if (!(q > 0.0))
        throw EstimationError("estimate_wald_cace: exposure rate difference is zero "
                              "(no acceptance); ratio undefined");

    EstimateResult res;
    res.estimand = Estimand::CaceWald;
    res.point = itt.point / q;
    const double var_q = p1 * (1.0 - p1) / static_cast<double>(n1) +
                         p0 * (1.0 - p0) / static_cast<double>(n0);
    res.se = std::sqrt(itt.se * itt.se / (q * q) + res.point * res.point * var_q / (q * q));
    res.n_offered = n1;
    res.n_control = n0;
    res.method = "ITT contrast / exposure rate difference; delta-method SE";
    if (contaminated)
        res.warnings.push_back(
            "control-arm exposure present; the ratio is only a complier effect "
            "under no contamination");
    detail::attach_ci(res, alpha);
    return res;
}

// ---------------------------------------------------------------------------
// Two-stage IV estimators
// ---------------------------------------------------------------------------

namespace detail {

struct FirstStage {
    std::vector<double> d_hat;
    std::string note;
};

// Stage 1: exposure explained by randomization (and optional covariates).
// With one-sided exposure (no exposed controls) the joint logistic model is
// quasi-separated by construction, so we fit its analytic limit instead: the
// acceptance model on the offered arm with fitted exposure 0 for controls.
// With no covariates the saturated fit is the cell proportions exactly.
inline FirstStage iv_first_stage(const TrialDataset& ds, const std::vector<std::size_t>& cov_idx) {
    const std::size_t n = ds.rows.size();
    std::vector<std::size_t> offered_rows, control_rows;
    bool any_control_exposed = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.rows[i].z == 1)
            offered_rows.push_back(i);
        else {
            control_rows.push_back(i);
            if (ds.rows[i].d == 1) any_control_exposed = true;
        }
    }
    if (offered_rows.empty() || control_rows.empty())
        throw EstimationError("iv first stage: instrument does not vary");

    FirstStage fs;
    fs.d_hat.assign(n, 0.0);

    if (cov_idx.empty()) {
        double p1 = 0.0, p0 = 0.0;
        for (std::size_t i : offered_rows) p1 += ds.rows[i].d;
        for (std::size_t i : control_rows) p0 += ds.rows[i].d;
        p1 /= static_cast<double>(offered_rows.size());
        p0 /= static_cast<double>(control_rows.size());
        for (std::size_t i : offered_rows) fs.d_hat[i] = p1;
        for (std::size_t i : control_rows) fs.d_hat[i] = p0;
        fs.note = "saturated first stage (arm exposure proportions)";
        return fs;
    }

    if (!any_control_exposed) {
        // Degenerate offered-arm exposure needs no model.
        bool all_one = true, all_zero = true;
        for (std::size_t i : offered_rows) (ds.rows[i].d == 1 ? all_zero : all_one) = false;
        if (all_one || all_zero) {
            for (std::size_t i : offered_rows) fs.d_hat[i] = all_one ? 1.0 : 0.0;
            fs.note = "offered-arm exposure constant; first stage is the constant fit";
            return fs;
        }
        Matrix x(offered_rows.size(), 1 + cov_idx.size());
        std::vector<double> d(offered_rows.size());
        for (std::size_t r = 0; r < offered_rows.size(); ++r) {
            const auto& row = ds.rows[offered_rows[r]];
            x(r, 0) = 1.0;
            for (std::size_t c = 0; c < cov_idx.size(); ++c) x(r, c + 1) = row.x[cov_idx[c]];
            d[r] = row.d;
        }
        const RegressionFit fit = fit_logistic_irls(x, d);
        const auto pred = logistic_predict(x, fit.coefficients);
        for (std::size_t r = 0; r < offered_rows.size(); ++r) fs.d_hat[offered_rows[r]] = pred[r];
        fs.note = "one-sided first stage: acceptance model fit on the offered arm, "
                  "fitted exposure 0 for controls";
        return fs;
    }

    Matrix x(n, 2 + cov_idx.size());
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = ds.rows[i];
        x(i, 0) = 1.0;
        x(i, 1) = row.z;
        for (std::size_t c = 0; c < cov_idx.size(); ++c) x(i, c + 2) = row.x[cov_idx[c]];
        d[i] = row.d;
    }
    const RegressionFit fit = fit_logistic_irls(x, d);
    fs.d_hat = logistic_predict(x, fit.coefficients);
    fs.note = "joint logistic first stage (exposure on randomization and covariates)";
    return fs;
}

struct TwoStagePoint {
    double point = 0.0;
    std::string note;
};

inline TwoStagePoint two_stage_point(const TrialDataset& ds,
                                     const std::vector<std::size_t>& cov_idx,
                                     bool residual_inclusion) {
    const FirstStage fs = iv_first_stage(ds, cov_idx);
    const std::size_t n = ds.rows.size();

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = ds.rows[i].y;

    TwoStagePoint out;
    if (!residual_inclusion) {
        Matrix x(n, 2 + cov_idx.size());
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = fs.d_hat[i];
            for (std::size_t c = 0; c < cov_idx.size(); ++c)
                x(i, c + 2) = ds.rows[i].x[cov_idx[c]];
        }
        out.point = fit_ols(x, y).coefficients[1];
        out.note = fs.note;
        return out;
    }

    std::vector<double> resid(n);
    double max_abs_resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        resid[i] = ds.rows[i].d - fs.d_hat[i];
        max_abs_resid = std::max(max_abs_resid, std::fabs(resid[i]));
    }
    if (max_abs_resid < 1e-12) {
        // No refusal: the residual carries no information and would make the
        // design singular, so it is dropped.
        Matrix x(n, 2 + cov_idx.size());
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = ds.rows[i].d;
            for (std::size_t c = 0; c < cov_idx.size(); ++c)
                x(i, c + 2) = ds.rows[i].x[cov_idx[c]];
        }
        out.point = fit_ols(x, y).coefficients[1];
        out.note = fs.note + "; residual constant (no refusal), residual column dropped";
        return out;
    }

    Matrix x(n, 3 + cov_idx.size());
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = ds.rows[i].d;
        x(i, 2) = resid[i];
        for (std::size_t c = 0; c < cov_idx.size(); ++c) x(i, c + 3) = ds.rows[i].x[cov_idx[c]];
    }
    out.point = fit_ols(x, y).coefficients[1];
    out.note = fs.note;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct BootstrapResult {
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t failures = 0;
};

// Case resampling stratified by randomized arm; percentile interval.
// Deterministic in the seed: resample b draws from derive_seed(seed, b),
// independent of evaluation order.
template <class PointFn>
BootstrapResult bootstrap_ci(PointFn&& point_fn, const TrialDataset& ds, std::size_t B,
                             double level, std::uint64_t seed) {
    if (B < 100) throw EstimationError("bootstrap_ci: B must be >= 100");
    if (!(level > 0.0 && level < 1.0))
        throw EstimationError("bootstrap_ci: level must be in (0,1)");

    std::vector<std::size_t> offered_rows, control_rows;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        (ds.rows[i].z == 1 ? offered_rows : control_rows).push_back(i);

    std::vector<double> points;
    points.reserve(B);
    std::size_t failures = 0;

    TrialDataset resampled;
    resampled.covariate_names = ds.covariate_names;
    resampled.outcome_kind = ds.outcome_kind;
    for (std::size_t b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, b));
        resampled.rows.clear();
        resampled.rows.reserve(ds.rows.size());
        for (std::size_t k = 0; k < offered_rows.size(); ++k)
            resampled.rows.push_back(ds.rows[offered_rows[rng.below(offered_rows.size())]]);
        for (std::size_t k = 0; k < control_rows.size(); ++k)
            resampled.rows.push_back(ds.rows[control_rows[rng.below(control_rows.size())]]);
        try {
            points.push_back(point_fn(resampled));
        } catch (const Error&) {
            ++failures;
        }
    }
    if (failures * 20 > B)  // > 5%
        throw InstabilityError("bootstrap_ci: " + std::to_string(failures) + " of " +
                                   std::to_string(B) + " resamples failed",
                               failures);

    BootstrapResult out;
    out.failures = failures;
    out.se = points.size() > 1 ? sample_sd(std::span<const double>(points.data(), points.size()))
                               : 0.0;
    out.ci_lo = quantile_type7(points, (1.0 - level) / 2.0);
    out.ci_hi = quantile_type7(points, 1.0 - (1.0 - level) / 2.0);
    return out;
}

// ---------------------------------------------------------------------------
// 2SPS / 2SRI with bootstrap uncertainty
// ---------------------------------------------------------------------------

namespace detail {

inline EstimateResult two_stage_estimate(const TrialDataset& ds, const AnalysisOptions& opts,
                                         bool residual_inclusion) {
    const auto cov_idx = covariate_indices(ds, opts.covariates);
    const TwoStagePoint ts = two_stage_point(ds, cov_idx, residual_inclusion);

    EstimateResult res;
    res.estimand = residual_inclusion ? Estimand::Cace2SRI : Estimand::Cace2SPS;
    res.point = ts.point;
    for (const auto& r : ds.rows) (r.z == 1 ? res.n_offered : res.n_control) += 1;
    res.method = (residual_inclusion
                      ? std::string("two-stage residual inclusion; ")
                      : std::string("two-stage predictor substitution; ")) +
                 ts.note + "; bootstrap SE (stratified by arm, percentile CI)";

    const auto fn = [&cov_idx, residual_inclusion](const TrialDataset& d) {
        return two_stage_point(d, cov_idx, residual_inclusion).point;
    };
    const BootstrapResult bs =
        bootstrap_ci(fn, ds, opts.bootstrap_B, 1.0 - opts.alpha, opts.bootstrap_seed);
    res.se = bs.se;
    res.ci_lo = bs.ci_lo;
    res.ci_hi = bs.ci_hi;
    if (bs.failures > 0)
        res.warnings.push_back(std::to_string(bs.failures) + " bootstrap resamples failed");
    if (res.point < res.ci_lo || res.point > res.ci_hi) {
        res.ci_lo = std::min(res.ci_lo, res.point);
        res.ci_hi = std::max(res.ci_hi, res.point);
        res.warnings.push_back("percentile interval widened to include the point estimate");
    }
    return res;
}

}  // namespace detail

inline EstimateResult estimate_iv_2sps(const TrialDataset& ds, const AnalysisOptions& opts = {}) {
    return detail::two_stage_estimate(ds, opts, false);
}

inline EstimateResult estimate_iv_2sri(const TrialDataset& ds, const AnalysisOptions& opts = {}) {
    return detail::two_stage_estimate(ds, opts, true);
}

// ---------------------------------------------------------------------------
// Propensity accepter analysis
// ---------------------------------------------------------------------------

namespace detail {

struct PropensityPoint {
    double point = 0.0;
    std::size_t n_accepters = 0;
    std::size_t n_selected_controls = 0;
    std::vector<PatientId> selected_controls;
};

// Accepters vs the control subset most likely to have accepted, had they been
// offered. The acceptance model is fit in the offered arm, controls are
// scored, and the threshold is set so the selected control fraction equals
// the offered-arm acceptance rate.
inline PropensityPoint propensity_point(const TrialDataset& ds,
                                        const std::vector<std::size_t>& cov_idx) {
    if (cov_idx.empty())
        throw EstimationError("propensity analysis requires at least one covariate");

    std::vector<std::size_t> offered_rows, control_rows;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        (ds.rows[i].z == 1 ? offered_rows : control_rows).push_back(i);
    if (offered_rows.empty() || control_rows.empty())
        throw EstimationError("propensity analysis: both arms required");

    std::size_t n_accept = 0, n_refuse = 0;
    for (std::size_t i : offered_rows) {
        if (!ds.rows[i].a) continue;
        (*ds.rows[i].a ? n_accept : n_refuse) += 1;
    }
    if (n_accept == 0 || n_refuse == 0)
        throw EstimationError(
            "propensity analysis: offered arm must contain both accepters and refusers");

    Matrix x(offered_rows.size(), 1 + cov_idx.size());
    std::vector<double> a(offered_rows.size());
    for (std::size_t r = 0; r < offered_rows.size(); ++r) {
        const auto& row = ds.rows[offered_rows[r]];
        x(r, 0) = 1.0;
        for (std::size_t c = 0; c < cov_idx.size(); ++c) x(r, c + 1) = row.x[cov_idx[c]];
        a[r] = (row.a && *row.a) ? 1.0 : 0.0;
    }
    const RegressionFit fit = fit_logistic_irls(x, a);

    Matrix xc(control_rows.size(), 1 + cov_idx.size());
    for (std::size_t r = 0; r < control_rows.size(); ++r) {
        const auto& row = ds.rows[control_rows[r]];
        xc(r, 0) = 1.0;
        for (std::size_t c = 0; c < cov_idx.size(); ++c) xc(r, c + 1) = row.x[cov_idx[c]];
    }
    const auto scores = logistic_predict(xc, fit.coefficients);

    const double acc_rate =
        static_cast<double>(n_accept) / static_cast<double>(n_accept + n_refuse);
    const std::size_t m = static_cast<std::size_t>(
        std::lround(acc_rate * static_cast<double>(control_rows.size())));
    if (m == 0) throw EstimationError("propensity analysis: selected control set is empty");

    // Descending score, ties broken by patient id for determinism.
    std::vector<std::size_t> order(control_rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        if (scores[lhs] != scores[rhs]) return scores[lhs] > scores[rhs];
        return ds.rows[control_rows[lhs]].id < ds.rows[control_rows[rhs]].id;
    });

    double sum_acc = 0.0, sum_sel = 0.0;
    for (std::size_t i : offered_rows)
        if (ds.rows[i].a && *ds.rows[i].a) sum_acc += ds.rows[i].y;
    PropensityPoint out;
    for (std::size_t k = 0; k < m; ++k) {
        const auto& row = ds.rows[control_rows[order[k]]];
        sum_sel += row.y;
        out.selected_controls.push_back(row.id);
    }
    out.n_accepters = n_accept;
    out.n_selected_controls = m;
    out.point = sum_acc / static_cast<double>(n_accept) - sum_sel / static_cast<double>(m);
    return out;
}

}  // namespace detail

inline EstimateResult propensity_accepter_analysis(const TrialDataset& ds,
                                                   const AnalysisOptions& opts) {
    const auto cov_idx = detail::covariate_indices(ds, opts.covariates);
    const auto pp = detail::propensity_point(ds, cov_idx);

    EstimateResult res;
    res.estimand = Estimand::CacePropensity;
    res.point = pp.point;
    res.n_offered = pp.n_accepters;
    res.n_control = pp.n_selected_controls;
    res.method =
        "accepters vs controls with predicted acceptance above the acceptance-rate "
        "quantile; sensitivity analysis to the IV estimates";
    res.warnings.push_back("sensitivity analysis");

    const auto fn = [&cov_idx](const TrialDataset& d) {
        return detail::propensity_point(d, cov_idx).point;
    };
    const BootstrapResult bs =
        bootstrap_ci(fn, ds, opts.bootstrap_B, 1.0 - opts.alpha, opts.bootstrap_seed);
    res.se = bs.se;
    res.ci_lo = bs.ci_lo;
    res.ci_hi = bs.ci_hi;
    if (bs.failures > 0)
        res.warnings.push_back(std::to_string(bs.failures) + " bootstrap resamples failed");
    if (res.point < res.ci_lo || res.point > res.ci_hi) {
        res.ci_lo = std::min(res.ci_lo, res.point);
        res.ci_hi = std::max(res.ci_hi, res.point);
        res.warnings.push_back("percentile interval widened to include the point estimate");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Dispatcher
// ---------------------------------------------------------------------------

inline EstimateResult run_analysis(const TrialDataset& ds, Estimand estimand,
                                   const AnalysisOptions& opts = {}) {
    switch (estimand) {
        case Estimand::AceOffered: return estimate_itt(ds, opts.alpha);
        case Estimand::PerProtocol: return estimate_per_protocol(ds, opts.alpha);
        case Estimand::AsTreated: return estimate_as_treated(ds, opts.alpha);
        case Estimand::CaceWald: return estimate_wald_cace(ds, opts.alpha);
        case Estimand::Cace2SPS: return estimate_iv_2sps(ds, opts);
        case Estimand::Cace2SRI: return estimate_iv_2sri(ds, opts);
        case Estimand::CacePropensity: return propensity_accepter_analysis(ds, opts);
    }
    throw EstimationError("unknown estimand");
}

}  // namespace twics
