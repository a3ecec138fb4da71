#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twics {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Model misspecification detected while generating data (e.g. a binary
// outcome probability pushed outside [0,1] by covariate contributions).
class ModelError : public Error {
public:
    using Error::Error;
};

// Intercept calibration could not reach the requested marginal rate.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double lo, double hi)
        : Error(what), achieved_lo(lo), achieved_hi(hi) {}
    double achieved_lo;
    double achieved_hi;
};

class EnrollmentError : public Error {
public:
    using Error::Error;
};

// Eligibility criteria reference unknown covariates or are malformed.
class CriteriaError : public Error {
public:
    using Error::Error;
};

// Single-batch sampling exhausted the cohort before reaching target_n.
class ShortfallError : public Error {
public:
    ShortfallError(const std::string& what, std::size_t achieved)
        : Error(what), achieved_n(achieved) {}
    std::size_t achieved_n;
};

// Configuration problems; carries the full list of issues found.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::vector<std::string> all_issues)
        : Error(what), issues(std::move(all_issues)) {}
    std::vector<std::string> issues;
};

// Rank-deficient design matrix in a regression fit.
class SingularityError : public Error {
public:
    using Error::Error;
};

// Logistic fit diverged (complete or quasi-complete separation).
class SeparationError : public Error {
public:
    using Error::Error;
};

// An estimator's preconditions do not hold on the given dataset.
class EstimationError : public Error {
public:
    using Error::Error;
};

// Too many resamples or replications failed.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, std::size_t failures)
        : Error(what), failure_count(failures) {}
    std::size_t failure_count;
};

// Re-estimated sample size exceeds a closed cohort's capacity.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, long required, long capacity)
        : Error(what), required_total(required), cohort_capacity(capacity) {}
    long required_total;
    long cohort_capacity;
};

}  // namespace twics
