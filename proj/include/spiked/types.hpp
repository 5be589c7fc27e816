// Core value types shared by every module of the library.
#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>
#include <string>

namespace spiked {

/// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller passed an inconsistent configuration (empty interval, bad sizes, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative method hit a state it cannot continue from.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tensor order k and signal-to-noise ratio lambda.
class ModelParams {
public:
    ModelParams(int k, double lambda) : k_(k), lambda_(lambda) {
        if (k < 3) throw UsageError("tensor order k must be >= 3, got " + std::to_string(k));
        if (!std::isfinite(lambda) || lambda < 0.0)
            throw UsageError("lambda must be finite and >= 0");
    }

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

private:
    int k_;
    double lambda_;
};

/// A point of the (overlap, objective value) plane.
struct LandscapePoint {
    double m = 0.0;  // <sigma, u>, |m| <= 1
    double x = 0.0;  // f(sigma)
};

/// Coordinates of the rank-one deformed GOE matrix entering the rate functions.
struct MatrixCoords {
    double theta = 0.0;  // spike strength
    double t = 0.0;      // spectral shift
};

/// Extended real used for complexities. -inf is a legitimate value; +inf and NaN never are.
class ComplexityValue {
public:
    constexpr ComplexityValue() = default;
    constexpr explicit ComplexityValue(double v) : value_(v) {}

    static constexpr ComplexityValue neg_infinity() { return ComplexityValue(-kInf); }

    [[nodiscard]] constexpr double value() const noexcept { return value_; }
    [[nodiscard]] bool is_neg_infinity() const noexcept { return std::isinf(value_) && value_ < 0; }
    [[nodiscard]] bool is_finite() const noexcept { return std::isfinite(value_); }

    friend constexpr auto operator<=>(ComplexityValue a, ComplexityValue b) {
        return a.value_ <=> b.value_;
    }
    friend constexpr bool operator==(ComplexityValue a, ComplexityValue b) { return a.value_ == b.value_; }

private:
    double value_ = 0.0;
};

/// Which complexity: all critical points (star) or local maxima only (zero).
enum class Which { star, zero };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

}  // namespace spiked
