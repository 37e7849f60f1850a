#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Boost 1.74's pchip calls unqualified isnan.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include "conetomo/grid.hpp"

namespace conetomo {

/// q(r) = r^alpha, alpha > 0.
struct Monomial {
    double alpha;
};

/// Straight broken rays, q(r) = r.
struct Compton {};

/// Bragg curve on the central scan line, q(r) = r / sqrt(r^2 + 1).
struct Bragg {};

/// q(r) = (1 + epsilon) r + sin r. Satisfies q(0) = 0, q > 0 but g = q'/q is not injective.
struct Sinusoid {
    double epsilon;
};

/// Bragg curve for an off-centre scan line x2 in (-1, 1); derivatives by finite differences.
struct BraggOffset {
    double x2;
};

/// Samples (r_i, q_i) with 0 < r_0 < r_1 < ... and q_i > 0, joined by monotone cubic
/// (PCHIP) interpolation through the implicit knot (0, 0).
struct Tabulated {
    std::vector<double> r;
    std::vector<double> q;
};

struct QDerivs {
    double q;
    double dq;
    double d2q;
};

/// Generator q of the integration curves x2 = E q(|x1 - x0|).
///
/// Closed-form families (Monomial, Compton, Bragg, Sinusoid) carry analytic first and
/// second derivatives. BraggOffset and Tabulated use central differences with step
/// fd_step (forward differences when r < fd_step so that no sample falls below 0).
class CurveProfile {
public:
    using Family = std::variant<Monomial, Compton, Bragg, Sinusoid, BraggOffset, Tabulated>;

    static constexpr double kDefaultFdStep = 1e-4;

    explicit CurveProfile(Family family, double fd_step = kDefaultFdStep);

    static CurveProfile compton() { return CurveProfile(Compton{}); }
    static CurveProfile bragg() { return CurveProfile(Bragg{}); }
    static CurveProfile monomial(double alpha) { return CurveProfile(Monomial{alpha}); }
    static CurveProfile sinusoid(double epsilon) { return CurveProfile(Sinusoid{epsilon}); }
    static CurveProfile bragg_offset(double x2) { return CurveProfile(BraggOffset{x2}); }
    static CurveProfile tabulated(std::vector<double> r, std::vector<double> q);

    const Family& family() const { return family_; }
    double fd_step() const { return fd_step_; }
    bool has_analytic_derivatives() const;

    /// Canonical spec string, e.g. "compton", "monomial:0.5", "bragg-offset:0.3".
    std::string name() const;

    /// q(r); throws DomainError for r < 0 (or beyond the last knot of a table).
    double q(double r) const;
    /// (q, q', q'') at r > 0.
    QDerivs derivs(double r) const;
    /// g = q'/q at r > 0; throws SingularityError when q(r) == 0.
    double g(double r) const;
    /// g' = q''/q - (q'/q)^2.
    double g_prime(double r) const;

private:
    double q_unchecked(double r) const;
    QDerivs finite_difference_derivs(double r) const;

    using Interpolant = boost::math::interpolators::pchip<std::vector<double>>;

    Family family_;
    double fd_step_;
    std::shared_ptr<const Interpolant> table_;
    double table_r_max_ = 0.0;
};

/// Parse "compton", "bragg", "monomial:<a>", "sinusoid:<eps>", "bragg-offset:<x2>".
CurveProfile parse_profile(std::string_view text);

// Free-function forms of the profile evaluations.
inline double eval_q(const CurveProfile& p, double r) { return p.q(r); }
inline QDerivs eval_q_derivs(const CurveProfile& p, double r) { return p.derivs(r); }
inline double eval_g(const CurveProfile& p, double r) { return p.g(r); }
inline double eval_g_prime(const CurveProfile& p, double r) { return p.g_prime(r); }

/// Outcome of a sampled Bolker check on [r_min, r_max].
struct BolkerReport {
    bool satisfied = false;
    double r_min = 0.0;
    double r_max = 0.0;
    std::size_t n_samples = 0;
    std::vector<double> g_prime_zeros;
    bool g_monotone = false;
    double min_abs_g_prime = 0.0;
    /// g > 0 on every sample. Reported on its own; it does not enter `satisfied`.
    bool g_positive = false;
    /// |g'| threshold used when accepting a zero.
    double zero_tolerance = 0.0;

    std::string to_text() const;
    std::string to_key_values() const;
};

/// Samples g' on a uniform grid, brackets sign changes (and near-zero local minima of
/// |g'|), refines each zero by bisection to 1e-10 and checks strict monotonicity of g.
BolkerReport check_bolker(const CurveProfile& profile, double r_min, double r_max,
                          std::size_t n_samples = 4000);

/// Inverse of a monotone g on a fixed window. Monotonicity is checked once on
/// construction; the call operator solves g(r) = w by bisection to full precision.
class GInverse {
public:
    GInverse(const CurveProfile& profile, double r_min, double r_max,
             std::size_t n_check = 2048);

    double operator()(double w) const;

    double g_at_min() const { return g_lo_; }
    double g_at_max() const { return g_hi_; }

private:
    CurveProfile profile_;
    double r_min_;
    double r_max_;
    double g_lo_;
    double g_hi_;
};

double invert_g(const CurveProfile& profile, double w, double r_min, double r_max);

/// Tabulates g on a uniform grid so that repeated level-set queries cost one scan.
class GSampler {
public:
    GSampler(const CurveProfile& profile, double r_min, double r_max,
             std::size_t n_samples = 4000);

    /// Every r in [r_min, r_max] with g(r) = w, ascending.
    std::vector<double> solve(double w) const;
    /// Every r with g(r) = g(r1), ascending, r1 itself included exactly.
    std::vector<double> level_set(double r1) const;

    const CurveProfile& profile() const { return profile_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }

private:
    double radius(std::size_t i) const;

    CurveProfile profile_;
    double r_min_;
    double r_max_;
    std::vector<double> g_;
};

std::vector<double> g_level_set(const CurveProfile& profile, double r1, double r_min,
                                double r_max);

/// det of the left projection's Jacobian for one branch: sigma E (q q'' - q'^2).
double left_projection_jacobian_det(const CurveProfile& profile, double E, double sigma,
                                    double r);

/// Bragg curve for scan line x2 in (-1, 1); even in x1 and equal to x1/sqrt(x1^2+1) at x2 = 0.
double bragg_offset_q(double x1, double x2);

/// h_B = q_B / q_B' with q_B' by central differences (step fd_step) in x1.
double bragg_offset_h(double x1, double x2, double fd_step = CurveProfile::kDefaultFdStep);
/// d h_B / d x1 by central differences of h_B; x1 > 0.
double bragg_offset_h_prime(double x1, double x2, double fd_step = CurveProfile::kDefaultFdStep);

struct BraggOffsetScan {
    double min_h_prime;
    /// h'_B values; x1 along the fast axis, x2 along rows.
    ImageGrid grid;
};

/// h_B = q_B / q_B' and its x1-derivative on (0, x1_max] x (-1, 1).
BraggOffsetScan bragg_offset_bolker_scan(double x1_max, std::size_t n1, std::size_t n2,
                                         double fd_step = CurveProfile::kDefaultFdStep);

}  // namespace conetomo
