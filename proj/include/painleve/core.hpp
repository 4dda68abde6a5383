#ifndef PAINLEVE_CORE_HPP
#define PAINLEVE_CORE_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace painleve
{

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;

// Every failure mode the library reports. The CLI maps these onto exit codes.
enum class errc
{
    step_underflow,
    max_steps_exceeded,
    fit_diverged,
    series_unreliable,
    v_zero,
    seed_at_zero_of_y,
    identically_zero,
    no_admissible_points,
    ill_conditioned,
    inconclusive,
    eval_at_pole,
    ambiguous_link,
    zero_not_found,
    pole_on_contour,
    too_few_samples,
    degenerate_alpha,
    precondition,
    invalid_argument
};

inline std::string_view to_string(errc code)
{
    switch (code) {
    case errc::step_underflow: return "StepUnderflow";
    case errc::max_steps_exceeded: return "MaxStepsExceeded";
    case errc::fit_diverged: return "FitDiverged";
    case errc::series_unreliable: return "SeriesUnreliable";
    case errc::v_zero: return "VZero";
    case errc::seed_at_zero_of_y: return "SeedAtZeroOfY";
    case errc::identically_zero: return "IdenticallyZero";
    case errc::no_admissible_points: return "NoAdmissiblePoints";
    case errc::ill_conditioned: return "IllConditioned";
    case errc::inconclusive: return "Inconclusive";
    case errc::eval_at_pole: return "EvalAtPole";
    case errc::ambiguous_link: return "AmbiguousLink";
    case errc::zero_not_found: return "ZeroNotFound";
    case errc::pole_on_contour: return "PoleOnContour";
    case errc::too_few_samples: return "TooFewSamples";
    case errc::degenerate_alpha: return "DegenerateAlpha";
    case errc::precondition: return "PreconditionViolated";
    case errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

class error : public std::runtime_error
{
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

// A point (z, w, w') on a solution. wp holds dw/dz.
struct OdeState
{
    cplx z{};
    cplx w{};
    cplx wp{};
};

inline bool is_finite(cplx v)
{
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

inline bool is_finite(const OdeState& s)
{
    return is_finite(s.z) && is_finite(s.w) && is_finite(s.wp);
}

// |p|^{-1/2}, clamped to 1 inside the unit disc.
inline double local_scale(cplx p)
{
    return 1.0 / std::sqrt(std::max(1.0, std::abs(p)));
}

} // namespace painleve

#endif
