#include "conetomo/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "conetomo/errors.hpp"
#include "format.hpp"

namespace conetomo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kBolkerRefineWidth = 1e-10;

/// Root of f on [lo, hi] given f(lo) f(hi) <= 0, bisected until the bracket is
/// narrower than `width` (0 means full double precision).
template <class F>
double bisect_root(F&& f, double lo, double hi, double width)
{
    std::uintmax_t max_iter = 200;
    auto tol = [width](double a, double b) {
        if (width > 0.0)
            return std::abs(b - a) <= width;
        return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
    };
    const auto bracket = boost::math::tools::bisect(f, lo, hi, tol, max_iter);
    return 0.5 * (bracket.first + bracket.second);
}

void require_window(double r_min, double r_max)
{
    if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
        throw DomainError("radius window must satisfy 0 < r_min < r_max");
}

}  // namespace

CurveProfile::CurveProfile(Family family, double fd_step)
    : family_(std::move(family))
    , fd_step_(fd_step)
{
    if (!(fd_step_ > 0.0) || !std::isfinite(fd_step_))
        throw DomainError("fd_step must be positive");

    std::visit(Overloaded{
                   [](const Monomial& m) {
                       if (!(m.alpha > 0.0) || !std::isfinite(m.alpha))
                           throw DomainError("monomial exponent must be positive");
                   },
                   [](const Compton&) {},
                   [](const Bragg&) {},
                   [](const Sinusoid& s) {
                       if (!(s.epsilon > 0.0) || !std::isfinite(s.epsilon))
                           throw DomainError("sinusoid epsilon must be positive");
                   },
                   [](const BraggOffset& b) {
                       if (!(std::abs(b.x2) < 1.0))
                           throw DomainError("bragg-offset scan line must lie in (-1, 1)");
                   },
                   [this](const Tabulated& t) {
                       if (t.r.size() != t.q.size() || t.r.size() < 3)
                           throw ProfileInvalidError("tabulated profile needs at least 3 (r, q) knots");
                       if (!(t.r.front() > 0.0))
                           throw ProfileInvalidError("tabulated knots must start above r = 0");
                       for (std::size_t i = 0; i < t.r.size(); ++i) {
                           if (!(t.q[i] > 0.0))
                               throw ProfileInvalidError("tabulated q samples must be positive");
                           if (i > 0 && !(t.r[i] > t.r[i - 1]))
                               throw ProfileInvalidError("tabulated knots must be strictly increasing");
                       }
                       std::vector<double> x{0.0};
                       std::vector<double> y{0.0};
                       x.insert(x.end(), t.r.begin(), t.r.end());
                       y.insert(y.end(), t.q.begin(), t.q.end());
                       table_ = std::make_shared<const Interpolant>(std::move(x), std::move(y));
                       table_r_max_ = t.r.back();
                   },
               },
               family_);
}

CurveProfile CurveProfile::tabulated(std::vector<double> r, std::vector<double> q)
{
    return CurveProfile(Tabulated{std::move(r), std::move(q)});
}

bool CurveProfile::has_analytic_derivatives() const
{
    return !std::holds_alternative<BraggOffset>(family_) && !std::holds_alternative<Tabulated>(family_);
}

std::string CurveProfile::name() const
{
    return std::visit(Overloaded{
                          [](const Monomial& m) { return "monomial:" + detail::format_number(m.alpha); },
                          [](const Compton&) { return std::string("compton"); },
                          [](const Bragg&) { return std::string("bragg"); },
                          [](const Sinusoid& s) { return "sinusoid:" + detail::format_number(s.epsilon); },
                          [](const BraggOffset& b) { return "bragg-offset:" + detail::format_number(b.x2); },
                          [](const Tabulated& t) { return "tabulated:" + std::to_string(t.r.size()); },
                      },
                      family_);
}

double CurveProfile::q(double r) const
{
    if (!(r >= 0.0))
        throw DomainError("q evaluated at negative radius " + detail::format_number(r));
    if (table_ && r > table_r_max_)
        throw DomainError("q evaluated beyond the last tabulated knot");
    return q_unchecked(r);
}

double CurveProfile::q_unchecked(double r) const
{
    return std::visit(Overloaded{
                          [r](const Monomial& m) { return std::pow(r, m.alpha); },
                          [r](const Compton&) { return r; },
                          [r](const Bragg&) { return r / std::sqrt(r * r + 1.0); },
                          [r](const Sinusoid& s) { return (1.0 + s.epsilon) * r + std::sin(r); },
                          [r](const BraggOffset& b) { return bragg_offset_q(r, b.x2); },
                          [this, r](const Tabulated&) { return (*table_)(r); },
                      },
                      family_);
}

QDerivs CurveProfile::derivs(double r) const
{
    if (!(r > 0.0))
        throw DomainError("derivatives of q need r > 0");
    return std::visit(Overloaded{
                          [r](const Monomial& m) {
                              const double a = m.alpha;
                              return QDerivs{std::pow(r, a), a * std::pow(r, a - 1.0),
                                             a * (a - 1.0) * std::pow(r, a - 2.0)};
                          },
                          [r](const Compton&) { return QDerivs{r, 1.0, 0.0}; },
                          [r](const Bragg&) {
                              const double s = r * r + 1.0;
                              const double root = std::sqrt(s);
                              return QDerivs{r / root, 1.0 / (s * root), -3.0 * r / (s * s * root)};
                          },
                          [r](const Sinusoid& s) {
                              return QDerivs{(1.0 + s.epsilon) * r + std::sin(r), 1.0 + s.epsilon + std::cos(r),
                                             -std::sin(r)};
                          },
                          [this, r](const BraggOffset&) { return finite_difference_derivs(r); },
                          [this, r](const Tabulated&) {
                              if (r > table_r_max_)
                                  throw DomainError("derivatives evaluated beyond the last tabulated knot");
                              return finite_difference_derivs(r);
                          },
                      },
                      family_);
}

QDerivs CurveProfile::finite_difference_derivs(double r) const
{
    const double h = fd_step_;
    const double q0 = q_unchecked(r);
    if (r > h) {
        const double qp = q_unchecked(r + h);
        const double qm = q_unchecked(r - h);
        return QDerivs{q0, (qp - qm) / (2.0 * h), (qp - 2.0 * q0 + qm) / (h * h)};
    }
    const double q1 = q_unchecked(r + h);
    const double q2 = q_unchecked(r + 2.0 * h);
    return QDerivs{q0, (-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * h), (q0 - 2.0 * q1 + q2) / (h * h)};
}

double CurveProfile::g(double r) const
{
    const QDerivs d = derivs(r);
    if (d.q == 0.0)
        throw SingularityError("g = q'/q is singular where q vanishes");
    return d.dq / d.q;
}

double CurveProfile::g_prime(double r) const
{
    const QDerivs d = derivs(r);
    if (d.q == 0.0)
        throw SingularityError("g' is singular where q vanishes");
    const double ratio = d.dq / d.q;
    return d.d2q / d.q - ratio * ratio;
}

CurveProfile parse_profile(std::string_view text)
{
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const bool has_arg = colon != std::string_view::npos;
    auto argument = [&]() {
        if (!has_arg)
            throw DomainError("profile '" + std::string(head) + "' needs a numeric parameter");
        return detail::parse_number(text.substr(colon + 1));
    };

    if (head == "compton" && !has_arg)
        return CurveProfile::compton();
    if (head == "bragg" && !has_arg)
        return CurveProfile::bragg();
    if (head == "monomial")
        return CurveProfile::monomial(argument());
    if (head == "sinusoid")
        return CurveProfile::sinusoid(argument());
    if (head == "bragg-offset")
        return CurveProfile::bragg_offset(argument());
    throw DomainError("unknown profile '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Bolker check

BolkerReport check_bolker(const CurveProfile& profile, double r_min, double r_max, std::size_t n_samples)
{
    require_window(r_min, r_max);
    if (n_samples < 100)
        throw DomainError("check_bolker needs at least 100 samples");

    BolkerReport report;
    report.r_min = r_min;
    report.r_max = r_max;
    report.n_samples = n_samples;

    const double spacing = (r_max - r_min) / static_cast<double>(n_samples - 1);
    std::vector<double> r(n_samples);
    std::vector<double> g(n_samples);
    std::vector<double> gp(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        r[i] = i + 1 == n_samples ? r_max : r_min + spacing * static_cast<double>(i);
        const QDerivs d = profile.derivs(r[i]);
        if (!(d.q > 0.0))
            throw ProfileInvalidError("q is not positive at r = " + detail::format_number(r[i]));
        g[i] = d.dq / d.q;
        gp[i] = d.d2q / d.q - g[i] * g[i];
    }

    double max_abs = 0.0;
    for (double v : gp)
        max_abs = std::max(max_abs, std::abs(v));
    report.zero_tolerance = 1e-9 * max_abs;

    auto g_prime = [&profile](double x) { return profile.g_prime(x); };
    std::vector<double> zeros;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (gp[i] == 0.0) {
            zeros.push_back(r[i]);
            continue;
        }
        if (i + 1 < n_samples && gp[i + 1] != 0.0 && std::signbit(gp[i]) != std::signbit(gp[i + 1])) {
            zeros.push_back(bisect_root(g_prime, r[i], r[i + 1], kBolkerRefineWidth));
            continue;
        }
        // |g'| dipping towards zero without a sign change on the grid: look for a touch.
        const bool interior_min = i > 0 && i + 1 < n_samples && std::abs(gp[i]) <= std::abs(gp[i - 1]) &&
                                  std::abs(gp[i]) <= std::abs(gp[i + 1]);
        if (interior_min && std::abs(gp[i]) < report.zero_tolerance) {
            auto abs_gp = [&profile](double x) { return std::abs(profile.g_prime(x)); };
            std::uintmax_t iters = 200;
            const auto [x_min, f_min] = boost::math::tools::brent_find_minima(abs_gp, r[i - 1], r[i + 1], 40, iters);
            if (f_min < report.zero_tolerance)
                zeros.push_back(x_min);
        }
    }
    std::sort(zeros.begin(), zeros.end());
    zeros.erase(std::unique(zeros.begin(), zeros.end(),
                            [](double a, double b) { return std::abs(a - b) <= 2.0 * kBolkerRefineWidth; }),
                zeros.end());
    report.g_prime_zeros = std::move(zeros);

    bool increasing = true;
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < n_samples; ++i) {
        increasing = increasing && g[i + 1] > g[i];
        decreasing = decreasing && g[i + 1] < g[i];
    }
    report.g_monotone = increasing || decreasing;
    report.g_positive = std::all_of(g.begin(), g.end(), [](double v) { return v > 0.0; });

    double min_abs = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_samples; ++i) {
        const bool near_zero = std::any_of(report.g_prime_zeros.begin(), report.g_prime_zeros.end(),
                                           [&](double z) { return std::abs(r[i] - z) <= 2.0 * spacing; });
        if (!near_zero)
            min_abs = std::min(min_abs, std::abs(gp[i]));
    }
    report.min_abs_g_prime = std::isfinite(min_abs) ? min_abs : 0.0;
    report.satisfied = report.g_prime_zeros.empty() && report.g_monotone;
    return report;
}

std::string BolkerReport::to_text() const
{
    std::ostringstream out;
    out << "Bolker check on [" << detail::format_number(r_min) << ", " << detail::format_number(r_max) << "] with "
        << n_samples << " samples\n";
    out << "  condition: " << (satisfied ? "satisfied" : "VIOLATED") << "\n";
    out << "  g monotone: " << (g_monotone ? "yes" : "no") << "\n";
    out << "  g positive: " << (g_positive ? "yes" : "no") << "\n";
    out << "  zeros of g': " << g_prime_zeros.size() << "\n";
    for (double z : g_prime_zeros)
        out << "    r = " << detail::format_number(z) << "\n";
    out << "  min |g'| away from zeros: " << detail::format_number(min_abs_g_prime) << "\n";
    return out.str();
}

std::string BolkerReport::to_key_values() const
{
    std::ostringstream out;
    out << "satisfied=" << (satisfied ? "true" : "false") << "\n";
    out << "r_min=" << detail::format_number(r_min) << "\n";
    out << "r_max=" << detail::format_number(r_max) << "\n";
    out << "n_samples=" << n_samples << "\n";
    out << "g_monotone=" << (g_monotone ? "true" : "false") << "\n";
    out << "g_positive=" << (g_positive ? "true" : "false") << "\n";
    out << "min_abs_g_prime=" << detail::format_number(min_abs_g_prime) << "\n";
    out << "zero_count=" << g_prime_zeros.size() << "\n";
    out << "zeros=";
    for (std::size_t i = 0; i < g_prime_zeros.size(); ++i)
        out << (i ? "," : "") << detail::format_number(g_prime_zeros[i]);
    out << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Inversion and level sets of g

GInverse::GInverse(const CurveProfile& profile, double r_min, double r_max, std::size_t n_check)
    : profile_(profile)
    , r_min_(r_min)
    , r_max_(r_max)
{
    require_window(r_min, r_max);
    n_check = std::max<std::size_t>(n_check, 2);
    const double spacing = (r_max - r_min) / static_cast<double>(n_check - 1);
    double prev = profile_.g(r_min);
    g_lo_ = prev;
    int direction = 0;
    for (std::size_t i = 1; i < n_check; ++i) {
        const double r = i + 1 == n_check ? r_max : r_min + spacing * static_cast<double>(i);
        const double cur = profile_.g(r);
        const int step = cur > prev ? 1 : (cur < prev ? -1 : 0);
        if (step == 0 || (direction != 0 && step != direction))
            throw BolkerViolationError("g = q'/q is not strictly monotone on the window; it cannot be inverted");
        direction = step;
        prev = cur;
    }
    g_hi_ = prev;
}

double GInverse::operator()(double w) const
{
    const double lo = std::min(g_lo_, g_hi_);
    const double hi = std::max(g_lo_, g_hi_);
    if (!(w >= lo && w <= hi))
        throw OutOfRangeError("value " + detail::format_number(w) + " is outside the range of g on the window");
    if (w == g_lo_)
        return r_min_;
    if (w == g_hi_)
        return r_max_;
    return bisect_root([this, w](double r) { return profile_.g(r) - w; }, r_min_, r_max_, 0.0);
}

double invert_g(const CurveProfile& profile, double w, double r_min, double r_max)
{
    return GInverse(profile, r_min, r_max)(w);
}

GSampler::GSampler(const CurveProfile& profile, double r_min, double r_max, std::size_t n_samples)
    : profile_(profile)
    , r_min_(r_min)
    , r_max_(r_max)
{
    require_window(r_min, r_max);
    if (n_samples < 2)
        throw DomainError("GSampler needs at least two samples");
    g_.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        g_[i] = profile_.g(radius(i));
}

double GSampler::radius(std::size_t i) const
{
    if (i + 1 == g_.size())
        return r_max_;
    return r_min_ + (r_max_ - r_min_) * static_cast<double>(i) / static_cast<double>(g_.size() - 1);
}

std::vector<double> GSampler::solve(double w) const
{
    std::vector<double> roots;
    auto h = [this, w](double r) { return profile_.g(r) - w; };
    for (std::size_t i = 0; i < g_.size(); ++i) {
        const double hi = g_[i] - w;
        if (hi == 0.0) {
            roots.push_back(radius(i));
            continue;
        }
        if (i + 1 < g_.size()) {
            const double hn = g_[i + 1] - w;
            if (hn != 0.0 && std::signbit(hi) != std::signbit(hn))
                roots.push_back(bisect_root(h, radius(i), radius(i + 1), 0.0));
        }
    }
    return roots;
}

std::vector<double> GSampler::level_set(double r1) const
{
    if (!(r1 >= r_min_ && r1 <= r_max_))
        throw DomainError("level-set seed must lie inside the radius window");
    std::vector<double> roots = solve(profile_.g(r1));
    const double spacing = (r_max_ - r_min_) / static_cast<double>(g_.size() - 1);
    auto nearest = std::min_element(roots.begin(), roots.end(),
                                    [r1](double a, double b) { return std::abs(a - r1) < std::abs(b - r1); });
    if (nearest != roots.end() && std::abs(*nearest - r1) <= spacing)
        *nearest = r1;
    else
        roots.push_back(r1);
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<double> g_level_set(const CurveProfile& profile, double r1, double r_min, double r_max)
{
    return GSampler(profile, r_min, r_max).level_set(r1);
}

double left_projection_jacobian_det(const CurveProfile& profile, double E, double sigma, double r)
{
    if (!(E > 0.0))
        throw DomainError("E must be positive");
    if (sigma == 0.0)
        throw DomainError("sigma must be nonzero");
    const QDerivs d = profile.derivs(r);
    return sigma * E * (d.q * d.d2q - d.dq * d.dq);
}

// ---------------------------------------------------------------------------
// Off-centre Bragg curves

double bragg_offset_q(double x1, double x2)
{
    if (!(std::abs(x2) < 1.0))
        throw DomainError("bragg-offset scan line must lie in (-1, 1)");
    const double s = x1 * x1;
    const double num = s - (1.0 - x2 * x2);
    const double den = std::sqrt(s + (x2 + 1.0) * (x2 + 1.0)) * std::sqrt(s + (1.0 - x2) * (1.0 - x2));
    // 1 + num/den >= 0 analytically; clamp the roundoff at x1 = 0.
    return std::sqrt(std::max(0.0, 1.0 + num / den)) / std::sqrt(2.0);
}

double bragg_offset_h(double x1, double x2, double fd_step)
{
    const double h = fd_step;
    double dq;
    if (x1 > h)
        dq = (bragg_offset_q(x1 + h, x2) - bragg_offset_q(x1 - h, x2)) / (2.0 * h);
    else
        dq = (-3.0 * bragg_offset_q(x1, x2) + 4.0 * bragg_offset_q(x1 + h, x2) - bragg_offset_q(x1 + 2.0 * h, x2)) /
             (2.0 * h);
    return bragg_offset_q(x1, x2) / dq;
}

double bragg_offset_h_prime(double x1, double x2, double fd_step)
{
    if (!(x1 > 0.0))
        throw DomainError("h_B' needs x1 > 0");
    const double h = fd_step;
    if (x1 > 2.0 * h)
        return (bragg_offset_h(x1 + h, x2, h) - bragg_offset_h(x1 - h, x2, h)) / (2.0 * h);
    return (-3.0 * bragg_offset_h(x1, x2, h) + 4.0 * bragg_offset_h(x1 + h, x2, h) -
            bragg_offset_h(x1 + 2.0 * h, x2, h)) /
           (2.0 * h);
}

BraggOffsetScan bragg_offset_bolker_scan(double x1_max, std::size_t n1, std::size_t n2, double fd_step)
{
    if (!(x1_max > 0.0))
        throw DomainError("x1_max must be positive");
    if (n1 < 50 || n2 < 50)
        throw DomainError("bragg-offset scan needs at least 50 samples per axis");
    if (!(fd_step > 0.0))
        throw DomainError("fd_step must be positive");

    BraggOffsetScan scan{std::numeric_limits<double>::infinity(), ImageGrid(n1, n2, Extent{0.0, x1_max, -1.0, 1.0})};
    const GridShape& shape = scan.grid.shape();
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < n1; ++i) {
            const double v = bragg_offset_h_prime(shape.x_center(i), shape.y_center(j), fd_step);
            scan.grid(i, j) = v;
            scan.min_h_prime = std::min(scan.min_h_prime, v);
        }
    }
    return scan;
}

}  // namespace conetomo
