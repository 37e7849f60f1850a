#include "conetomo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "format.hpp"

namespace conetomo {

void ScanGeometry::validate() const
{
    validate_shape(image_shape());
    if (!(image.y_min >= 0.0))
        throw DomainError("image region must lie in x2 >= 0");
    if (n_e == 0 || n_x0 == 0)
        throw DimensionError("sinogram dimensions must be positive");
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b))
        throw DomainError("data rectangle needs 0 < a < b");
    if (!(c > 0.0) || !std::isfinite(c))
        throw DomainError("data rectangle needs c > 0");
    if (!(quadrature_step >= 0.0) || !std::isfinite(quadrature_step))
        throw DomainError("quadrature step must be nonnegative");
}

double ScanGeometry::h_q() const
{
    if (quadrature_step > 0.0)
        return quadrature_step;
    return 0.5 * image_shape().dx();
}

RadiusWindow ScanGeometry::radius_window() const
{
    const double span = std::max(image.x_max + c, c - image.x_min);
    const double diagonal = std::hypot(image.x_max - image.x_min, image.y_max - image.y_min);
    const double r_max = std::max(span, diagonal);
    return {1e-3 * r_max, r_max};
}

std::string ScanGeometry::fingerprint(const CurveProfile& profile) const
{
    using detail::format_number;
    std::string fp = "profile=" + profile.name() + ";fd=" + format_number(profile.fd_step());
    fp += ";image=" + format_number(image.x_min) + "," + format_number(image.x_max) + "," +
          format_number(image.y_min) + "," + format_number(image.y_max) + "," + std::to_string(nx) + "," +
          std::to_string(ny);
    fp += ";data=" + format_number(a) + "," + format_number(b) + "," + format_number(c) + "," + std::to_string(n_e) +
          "," + std::to_string(n_x0);
    fp += ";hq=" + format_number(h_q());
    return fp;
}

const std::vector<ExperimentPreset>& experiment_presets()
{
    static const std::vector<ExperimentPreset> presets = [] {
        ScanGeometry small;  // [-1,1] x [0,2], E in (0, 2.83), x0 in [-2, 2]
        ScanGeometry large;
        large.image = Extent{-10.0, 10.0, 0.0, 20.0};
        large.b = 3.77;
        large.c = 20.0;

        return std::vector<ExperimentPreset>{
            {"ex1-compton", "compton", small, "delta:0,1,0.015", "disc:0,1,0.2",
             "broken rays q(r)=r on [-1,1]x[0,2], E in (0,2.83), x0 in [-2,2]"},
            {"ex2-bragg", "bragg", small, "delta:0,1,0.015", "disc:0,1,0.2",
             "Bragg curves q(r)=r/sqrt(r^2+1) on [-1,1]x[0,2], E in (0,2.83), x0 in [-2,2]"},
            {"ex4-sinusoid", "sinusoid:0.1", large, "delta:0,10,0.15", "disc:0,10,2",
             "sinusoids q(r)=1.1r+sin(r) on [-10,10]x[0,20], E in (0,3.77), x0 in [-20,20]"},
            {"appendixA", "bragg", small, "delta:0,1,0.015", "disc:0,1,0.2",
             "off-centre Bragg curves, h_B' scanned on (0,3]x(-1,1)"},
        };
    }();
    return presets;
}

const ExperimentPreset& find_preset(const std::string& name)
{
    const auto& presets = experiment_presets();
    const auto it = std::find_if(presets.begin(), presets.end(), [&](const auto& p) { return p.name == name; });
    if (it == presets.end())
        throw DomainError("unknown preset '" + name + "'");
    return *it;
}

}  // namespace conetomo
