#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace twrn {

enum class ErrorKind {
    domain,
    unsupported_order,
    insufficient_samples,
    missing_pilots,
    singular_point,
    diverged,
    degenerate_parametrization,
    singular_fim,
    invalid_argument,
    io,
};

/// Base class for every error raised by the library. The kind drives the
/// CLI exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures of the numerics (as opposed to bad inputs or I/O).
    bool is_numerical() const noexcept {
        return kind_ == ErrorKind::diverged || kind_ == ErrorKind::singular_fim ||
               kind_ == ErrorKind::singular_point;
    }

private:
    ErrorKind kind_;
};

class DivergedError : public Error {
public:
    DivergedError(const std::string& what, std::complex<double> last_finite)
        : Error(ErrorKind::diverged, what), last_finite_(last_finite) {}

    std::complex<double> last_finite_iterate() const noexcept { return last_finite_; }

private:
    std::complex<double> last_finite_;
};

class SingularFimError : public Error {
public:
    SingularFimError(const std::string& what, double condition_number)
        : Error(ErrorKind::singular_fim, what), condition_(condition_number) {}

    double condition_number() const noexcept { return condition_; }

private:
    double condition_;
};

}  // namespace twrn
