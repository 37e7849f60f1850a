#include "conetomo/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "format.hpp"

namespace conetomo {

namespace {

constexpr double kEdgeTolerance = 1e-9;

bool near(double v, double edge)
{
    return std::abs(v - edge) <= kEdgeTolerance * std::max(1.0, std::abs(edge));
}

Visibility classify(double E, double x0, const ScanGeometry& g)
{
    const bool e_edge = near(E, g.a) || near(E, g.b);
    const bool x_edge = near(x0, -g.c) || near(x0, g.c);
    const bool e_closed = E >= g.a - kEdgeTolerance * std::max(1.0, g.a) && E <= g.b + kEdgeTolerance * std::max(1.0, g.b);
    const bool x_closed = std::abs(x0) <= g.c * (1.0 + kEdgeTolerance);
    if ((e_edge && x_closed) || (x_edge && e_closed))
        return Visibility::Boundary;
    if (E > g.a && E < g.b && x0 > -g.c && x0 < g.c)
        return Visibility::Visible;
    return Visibility::Invisible;
}

double branch_norm(const CurveProfile& profile, double r)
{
    const QDerivs d = profile.derivs(r);
    return std::hypot(d.q, d.dq);
}

void rasterize_point(ImageGrid& mask, Point2 x)
{
    const auto i = mask.shape().x_index(x.x1);
    const auto j = mask.shape().y_index(x.x2);
    if (i && j)
        mask(*i, *j) = 1.0;
}

void emit_pairs(const CurveProfile& profile, double E, double x0, int omega, double r1, double sigma1,
                std::span<const double> level_set, ArtifactPrediction& out)
{
    const double norm1 = branch_norm(profile, r1);
    for (double r2 : level_set) {
        if (r2 == r1)
            continue;
        const QDerivs d2 = profile.derivs(r2);
        const double amplitude = norm1 / std::hypot(d2.q, d2.dq);
        const double sigma2 = sigma1 * amplitude;
        ArtifactPoint p;
        p.x = {x0 + omega * r2, E * d2.q};
        p.xi = {sigma2 * omega * E * d2.dq, -sigma2};
        p.amplitude = amplitude;
        p.r1 = r1;
        p.r2 = r2;
        p.E = E;
        p.x0 = x0;
        p.omega = omega;
        out.artifacts.push_back(p);
    }
}

}  // namespace

DataCovector forward_wavefront_map(const CurveProfile& profile, const WavefrontElement& w, RadiusWindow window)
{
    const auto [xi1, xi2] = w.xi;
    if (xi1 == 0.0)
        throw InvisibleCovectorError("vertical covector (xi1 = 0) has no image in the data");
    if (xi2 == 0.0)
        throw InvisibleCovectorError("horizontal covector (xi2 = 0) has no image in the data");
    if (!(w.x.x2 > 0.0))
        throw DomainError("image point must have x2 > 0");

    DataCovector d;
    d.omega = std::signbit(xi1) == std::signbit(xi2) ? -1 : 1;
    d.r = GInverse(profile, window.r_min, window.r_max)(std::abs(xi1) / (w.x.x2 * std::abs(xi2)));
    d.sigma = -xi2;
    const QDerivs q = profile.derivs(d.r);
    d.E = w.x.x2 / q.q;
    d.x0 = w.x.x1 - d.r * d.omega;
    d.eta = -d.sigma * q.q;
    d.xi_d = -d.sigma * d.E * q.dq * d.omega;
    return d;
}

WavefrontElement inverse_data_map(const CurveProfile& profile, const DataCovector& d)
{
    if (!(d.r > 0.0) || !(d.E > 0.0) || d.sigma == 0.0 || (d.omega != 1 && d.omega != -1))
        throw DomainError("data covector needs r > 0, E > 0, sigma != 0 and omega = +-1");
    const QDerivs q = profile.derivs(d.r);
    return {{d.x0 + d.r * d.omega, d.E * q.q}, {d.sigma * d.E * q.dq * d.omega, -d.sigma}};
}

double recover_sigma(const CurveProfile& profile, const DataCovector& d)
{
    return -d.eta / profile.q(d.r);
}

std::string_view to_string(Visibility v)
{
    switch (v) {
    case Visibility::Visible:
        return "visible";
    case Visibility::Invisible:
        return "invisible";
    case Visibility::Boundary:
        return "boundary";
    }
    return "invisible";
}

VisibilityTester::VisibilityTester(const CurveProfile& profile, const ScanGeometry& geom,
                                   std::optional<RadiusWindow> window)
    : geom_(geom)
    , sampler_(profile, window.value_or(geom.radius_window()).r_min, window.value_or(geom.radius_window()).r_max)
{
    geom_.validate();
}

Visibility VisibilityTester::operator()(const WavefrontElement& w) const
{
    const auto [xi1, xi2] = w.xi;
    if (xi1 == 0.0 || xi2 == 0.0 || !(w.x.x2 > 0.0))
        return Visibility::Invisible;
    const int omega = std::signbit(xi1) == std::signbit(xi2) ? -1 : 1;
    const CurveProfile& profile = sampler_.profile();

    Visibility best = Visibility::Invisible;
    for (double r : sampler_.solve(std::abs(xi1) / (w.x.x2 * std::abs(xi2)))) {
        const Visibility v = classify(w.x.x2 / profile.q(r), w.x.x1 - r * omega, geom_);
        if (v == Visibility::Visible)
            return v;
        if (v == Visibility::Boundary)
            best = v;
    }
    return best;
}

Visibility visibility_test(const CurveProfile& profile, const ScanGeometry& geom, const WavefrontElement& w)
{
    return VisibilityTester(profile, geom)(w);
}

std::vector<CoverageSample> coverage_map(const CurveProfile& profile, const ScanGeometry& geom, Point2 x,
                                         std::size_t n_angles)
{
    if (!(x.x2 > 0.0))
        throw DomainError("coverage map needs x2 > 0");
    if (n_angles == 0)
        throw DomainError("coverage map needs at least one angle");
    const VisibilityTester test(profile, geom);
    std::vector<CoverageSample> out;
    out.reserve(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
        // Pin the axis directions exactly; cos(pi/2) is not 0 in floating point.
        Covector xi{std::cos(angle), std::sin(angle)};
        if (4 * k == 2 * n_angles)
            xi = {0.0, 1.0};
        if (k == 0)
            xi = {1.0, 0.0};
        out.push_back({angle, test({x, xi})});
    }
    return out;
}

double visible_angular_measure(std::span<const CoverageSample> samples)
{
    if (samples.empty())
        return 0.0;
    const auto visible = std::count_if(samples.begin(), samples.end(),
                                       [](const CoverageSample& s) { return s.state == Visibility::Visible; });
    return std::numbers::pi * static_cast<double>(visible) / static_cast<double>(samples.size());
}

std::size_t ArtifactReport::point_count() const
{
    std::size_t n = 0;
    for (const auto& p : predictions)
        n += p.artifacts.size();
    return n;
}

ArtifactReport predict_artifacts(const CurveProfile& profile, const ScanGeometry& geom,
                                 std::span<const WavefrontElement> wavefront)
{
    geom.validate();
    const RadiusWindow window = geom.radius_window();
    const GSampler sampler(profile, window.r_min, window.r_max);
    ArtifactReport report{{}, geom.make_image()};

    for (const WavefrontElement& w : wavefront) {
        ArtifactPrediction pred{w, {}};
        const auto [xi1, xi2] = w.xi;
        if (xi1 != 0.0 && xi2 != 0.0 && w.x.x2 > 0.0) {
            const int omega = std::signbit(xi1) == std::signbit(xi2) ? -1 : 1;
            const double sigma1 = -xi2;
            const std::vector<double> radii = sampler.solve(std::abs(xi1) / (w.x.x2 * std::abs(xi2)));
            for (double r1 : radii) {
                const double E = w.x.x2 / profile.q(r1);
                const double x0 = w.x.x1 - r1 * omega;
                if (!(E > geom.a && E < geom.b) || std::abs(x0) > geom.c)
                    continue;
                emit_pairs(profile, E, x0, omega, r1, sigma1, radii, pred);
            }
        }
        for (const auto& a : pred.artifacts)
            rasterize_point(report.mask, a.x);
        report.predictions.push_back(std::move(pred));
    }
    return report;
}

ArtifactReport predict_point_artifacts(const CurveProfile& profile, const ScanGeometry& geom, Point2 p,
                                       std::size_t x0_samples)
{
    geom.validate();
    if (!(p.x2 > 0.0))
        throw DomainError("point source needs x2 > 0");
    if (x0_samples == 0)
        throw DomainError("point sweep needs at least one x0 sample");
    const RadiusWindow window = geom.radius_window();
    const GSampler sampler(profile, window.r_min, window.r_max);
    ArtifactReport report{{}, geom.make_image()};

    const double dx0 = 2.0 * geom.c / static_cast<double>(x0_samples);
    for (std::size_t k = 0; k < x0_samples; ++k) {
        const double x0 = -geom.c + (static_cast<double>(k) + 0.5) * dx0;
        const double offset = p.x1 - x0;
        const double r1 = std::abs(offset);
        if (offset == 0.0 || r1 < window.r_min || r1 > window.r_max)
            continue;
        const int omega = offset > 0.0 ? 1 : -1;
        const QDerivs d1 = profile.derivs(r1);
        const double E = p.x2 / d1.q;
        if (!(E > geom.a && E < geom.b))
            continue;
        const double sigma1 = 1.0;
        ArtifactPrediction pred{{p, {sigma1 * E * d1.dq * omega, -sigma1}}, {}};
        const std::vector<double> level = sampler.level_set(r1);
        emit_pairs(profile, E, x0, omega, r1, sigma1, level, pred);
        for (const auto& a : pred.artifacts)
            rasterize_point(report.mask, a.x);
        report.predictions.push_back(std::move(pred));
    }
    return report;
}

ArtifactReport predict_artifacts(const CurveProfile& profile, const ScanGeometry& geom, const PhantomSpec& phantom,
                                 std::size_t x0_samples, std::size_t n_wavefront)
{
    if (const auto* d = std::get_if<PixelDelta>(&phantom))
        return predict_point_artifacts(profile, geom, d->center, x0_samples);
    const auto samples = wavefront_samples(phantom, n_wavefront);
    return predict_artifacts(profile, geom, std::span<const WavefrontElement>(samples));
}

ImageGrid dilate_mask(const ImageGrid& mask, std::size_t radius)
{
    ImageGrid out(mask.shape());
    const auto nx = static_cast<std::ptrdiff_t>(mask.nx());
    const auto ny = static_cast<std::ptrdiff_t>(mask.ny());
    const auto rad = static_cast<std::ptrdiff_t>(radius);
    for (std::ptrdiff_t j = 0; j < ny; ++j) {
        for (std::ptrdiff_t i = 0; i < nx; ++i) {
            if (mask(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) == 0.0)
                continue;
            for (std::ptrdiff_t dj = std::max<std::ptrdiff_t>(0, j - rad); dj <= std::min(ny - 1, j + rad); ++dj)
                for (std::ptrdiff_t di = std::max<std::ptrdiff_t>(0, i - rad); di <= std::min(nx - 1, i + rad); ++di)
                    out(static_cast<std::size_t>(di), static_cast<std::size_t>(dj)) = 1.0;
        }
    }
    return out;
}

void write_artifact_csv(const ArtifactReport& report, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    using detail::format_number;
    out << "x1,x2,xi1,xi2,amplitude,r1,r2,E,x0\n";
    for (const auto& pred : report.predictions) {
        for (const auto& a : pred.artifacts) {
            out << format_number(a.x.x1) << ',' << format_number(a.x.x2) << ',' << format_number(a.xi.xi1) << ','
                << format_number(a.xi.xi2) << ',' << format_number(a.amplitude) << ',' << format_number(a.r1) << ','
                << format_number(a.r2) << ',' << format_number(a.E) << ',' << format_number(a.x0) << '\n';
        }
    }
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

void write_coverage_csv(std::span<const CoverageSample> samples, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << "angle,state\n";
    for (const auto& s : samples)
        out << detail::format_number(s.angle) << ',' << to_string(s.state) << '\n';
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace conetomo
