#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "conetomo/grid.hpp"
#include "conetomo/profile.hpp"

namespace conetomo {

/// Radius range [r_min, r_max] used whenever g has to be scanned or inverted numerically.
struct RadiusWindow {
    double r_min;
    double r_max;
};

/// Image region, the data rectangle A = [a, b] x [-c, c] in (E, x0), grid
/// resolutions and the curve quadrature step.
struct ScanGeometry {
    Extent image{-1.0, 1.0, 0.0, 2.0};
    std::size_t nx = 128;
    std::size_t ny = 128;

    double a = 0.01;  ///< lowest E
    double b = 2.83;  ///< highest E
    double c = 2.0;   ///< |x0| <= c
    std::size_t n_e = 128;
    std::size_t n_x0 = 256;

    /// Quadrature step along x1; 0 selects half the image pixel width.
    double quadrature_step = 0.0;

    /// Throws DomainError unless 0 < a < b, c > 0, x2_min >= 0 and sizes are positive.
    void validate() const;

    GridShape image_shape() const { return {nx, ny, image}; }
    GridShape sinogram_shape() const { return {n_e, n_x0, Extent{a, b, -c, c}}; }
    ImageGrid make_image(double fill = 0.0) const { return ImageGrid(image_shape(), fill); }
    Sinogram make_sinogram(double fill = 0.0) const { return Sinogram(sinogram_shape(), fill); }

    double h_q() const;

    /// Default scan window for g: r_max is the largest |x1 - x0| that can occur between
    /// the image and the vertex line (never less than the image diagonal), r_min = 1e-3 r_max.
    RadiusWindow radius_window() const;

    /// Stable text identifying every parameter that shapes a system matrix.
    std::string fingerprint(const CurveProfile& profile) const;
};

/// Named experiment: profile, geometry and default phantoms.
struct ExperimentPreset {
    std::string name;
    std::string profile;
    ScanGeometry geometry;
    std::string delta_phantom;
    std::string disc_phantom;
    std::string description;
};

/// ex1-compton, ex2-bragg, ex4-sinusoid, appendixA.
const std::vector<ExperimentPreset>& experiment_presets();
const ExperimentPreset& find_preset(const std::string& name);

}  // namespace conetomo
