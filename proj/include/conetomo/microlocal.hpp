#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "conetomo/geometry.hpp"
#include "conetomo/grid.hpp"
#include "conetomo/phantom.hpp"
#include "conetomo/profile.hpp"
#include "conetomo/wavefront.hpp"

namespace conetomo {

/// Data-space covector (E, x0; eta, xi_d) together with the canonical coordinates
/// (r, omega, sigma) that produced it. eta = -sigma q(r), xi_d = -sigma E q'(r) omega.
struct DataCovector {
    double E;
    double x0;
    double eta;
    double xi_d;
    double r;
    int omega;  ///< branch: +1 when x1 > x0, -1 when x1 < x0
    double sigma;
};

/// Image covector -> data covector through the canonical relation. Requires xi1 != 0,
/// xi2 != 0 (InvisibleCovectorError otherwise) and a g that is monotone on `window`.
DataCovector forward_wavefront_map(const CurveProfile& profile, const WavefrontElement& w, RadiusWindow window);

/// (E, x0, r, omega, sigma) -> ((x0 + r omega, E q(r)), (sigma E q'(r) omega, -sigma)).
WavefrontElement inverse_data_map(const CurveProfile& profile, const DataCovector& d);

/// sigma = -eta / q(r).
double recover_sigma(const CurveProfile& profile, const DataCovector& d);

enum class Visibility { Visible, Invisible, Boundary };

std::string_view to_string(Visibility v);

/// Reusable visibility test for one profile and geometry. The canonical radius is every
/// solution of g(r) = |xi1| / (x2 |xi2|) in the scan window (a single one when Bolker
/// holds); a covector is visible when some solution has E = x2/q(r) in (a, b) and
/// x0 = x1 - r omega in (-c, c), and "boundary" when the best it does is land on the
/// edge of A.
class VisibilityTester {
public:
    VisibilityTester(const CurveProfile& profile, const ScanGeometry& geom,
                     std::optional<RadiusWindow> window = std::nullopt);

    Visibility operator()(const WavefrontElement& w) const;

private:
    ScanGeometry geom_;
    GSampler sampler_;
};

Visibility visibility_test(const CurveProfile& profile, const ScanGeometry& geom, const WavefrontElement& w);

struct CoverageSample {
    double angle;  ///< covector direction (cos angle, sin angle), angle in [0, pi)
    Visibility state;
};

std::vector<CoverageSample> coverage_map(const CurveProfile& profile, const ScanGeometry& geom, Point2 x,
                                         std::size_t n_angles);

/// Angular measure (radians, out of pi) of the visible samples.
double visible_angular_measure(std::span<const CoverageSample> samples);

struct ArtifactPoint {
    Point2 x;
    Covector xi;
    double amplitude;  ///< sigma2 / sigma1
    double r1;
    double r2;
    double E;
    double x0;
    int omega;
};

struct ArtifactPrediction {
    WavefrontElement source;
    std::vector<ArtifactPoint> artifacts;
};

struct ArtifactReport {
    std::vector<ArtifactPrediction> predictions;
    /// 1 in every pixel holding a predicted artifact point.
    ImageGrid mask;

    std::size_t point_count() const;
};

/// Artifacts generated by a list of wavefront elements: for each canonical radius r1 of
/// a source and each other r2 with g(r2) = g(r1), a point (x0 + omega r2, E q(r2)).
ArtifactReport predict_artifacts(const CurveProfile& profile, const ScanGeometry& geom,
                                 std::span<const WavefrontElement> wavefront);

/// Point source singular in every direction: sweep x0 over `x0_samples` cell centres of
/// [-c, c] and use the curve through p on the side of p.
ArtifactReport predict_point_artifacts(const CurveProfile& profile, const ScanGeometry& geom, Point2 p,
                                       std::size_t x0_samples);

/// PixelDelta -> point sweep at its centre; Disc -> `n_wavefront` boundary normals.
ArtifactReport predict_artifacts(const CurveProfile& profile, const ScanGeometry& geom, const PhantomSpec& phantom,
                                 std::size_t x0_samples = 4000, std::size_t n_wavefront = 720);

/// Square dilation by `radius` pixels of the nonzero set.
ImageGrid dilate_mask(const ImageGrid& mask, std::size_t radius);

/// CSV: x1,x2,xi1,xi2,amplitude,r1,r2,E,x0
void write_artifact_csv(const ArtifactReport& report, const std::filesystem::path& path);
/// CSV: angle,state
void write_coverage_csv(std::span<const CoverageSample> samples, const std::filesystem::path& path);

}  // namespace conetomo
