#pragma once

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "conetomo/grid.hpp"
#include "conetomo/wavefront.hpp"

namespace conetomo {

/// Characteristic function of the rectangle |x1 - c1| <= hw1, |x2 - c2| <= hw2.
struct PixelDelta {
    Point2 center;
    double half_width_x1;
    double half_width_x2;
};

/// Characteristic function of the open disc |x - c| < radius.
struct Disc {
    Point2 center;
    double radius;
};

using PhantomSpec = std::variant<PixelDelta, Disc>;

/// "delta:cx,cy[,hw]" or "disc:cx,cy,r". `default_half_width` fills a missing hw.
PhantomSpec parse_phantom(std::string_view text, double default_half_width);

/// Binary rasterisation: 1 where the pixel centre lies in the set, 0 elsewhere.
/// Throws DomainError unless the support lies inside the extent with x2 > 0.
ImageGrid rasterize(const PhantomSpec& spec, const GridShape& shape);

/// Disc: n boundary points with unit outward normals. PixelDelta: the centre with n unit
/// covectors at angles 2 pi k / n.
std::vector<WavefrontElement> wavefront_samples(const PhantomSpec& spec, std::size_t n);

}  // namespace conetomo
