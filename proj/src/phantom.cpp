#include "conetomo/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "format.hpp"

namespace conetomo {

namespace {

std::vector<double> split_numbers(std::string_view text)
{
    std::vector<double> out;
    while (true) {
        const auto comma = text.find(',');
        out.push_back(detail::parse_number(text.substr(0, comma)));
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

struct Box {
    double x_min, x_max, y_min, y_max;
};

Box support_box(const PhantomSpec& spec)
{
    if (const auto* d = std::get_if<PixelDelta>(&spec))
        return {d->center.x1 - d->half_width_x1, d->center.x1 + d->half_width_x1, d->center.x2 - d->half_width_x2,
                d->center.x2 + d->half_width_x2};
    const auto& disc = std::get<Disc>(spec);
    return {disc.center.x1 - disc.radius, disc.center.x1 + disc.radius, disc.center.x2 - disc.radius,
            disc.center.x2 + disc.radius};
}

}  // namespace

PhantomSpec parse_phantom(std::string_view text, double default_half_width)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw DomainError("phantom spec must look like 'delta:cx,cy[,hw]' or 'disc:cx,cy,r'");
    const std::string_view kind = text.substr(0, colon);
    const std::vector<double> v = split_numbers(text.substr(colon + 1));
    if (kind == "delta") {
        if (v.size() != 2 && v.size() != 3)
            throw DomainError("delta phantom takes cx,cy[,hw]");
        const double hw = v.size() == 3 ? v[2] : default_half_width;
        if (!(hw > 0.0))
            throw DomainError("delta half-width must be positive");
        return PixelDelta{{v[0], v[1]}, hw, hw};
    }
    if (kind == "disc") {
        if (v.size() != 3)
            throw DomainError("disc phantom takes cx,cy,r");
        if (!(v[2] > 0.0))
            throw DomainError("disc radius must be positive");
        return Disc{{v[0], v[1]}, v[2]};
    }
    throw DomainError("unknown phantom kind '" + std::string(kind) + "'");
}

ImageGrid rasterize(const PhantomSpec& spec, const GridShape& shape)
{
    const Box box = support_box(spec);
    const Extent& e = shape.extent;
    if (!(box.y_min > 0.0) || box.x_min < e.x_min || box.x_max > e.x_max || box.y_min < e.y_min ||
        box.y_max > e.y_max)
        throw DomainError("phantom support must lie inside the image extent with x2 > 0");

    ImageGrid out(shape);
    for (std::size_t j = 0; j < shape.ny; ++j) {
        const double y = shape.y_center(j);
        for (std::size_t i = 0; i < shape.nx; ++i) {
            const double x = shape.x_center(i);
            bool inside;
            if (const auto* d = std::get_if<PixelDelta>(&spec)) {
                inside = std::abs(x - d->center.x1) <= d->half_width_x1 && std::abs(y - d->center.x2) <= d->half_width_x2;
            }
            else {
                const auto& disc = std::get<Disc>(spec);
                const double dx = x - disc.center.x1;
                const double dy = y - disc.center.x2;
                inside = dx * dx + dy * dy < disc.radius * disc.radius;
            }
            out(i, j) = inside ? 1.0 : 0.0;
        }
    }
    if (std::holds_alternative<PixelDelta>(spec) &&
        std::all_of(out.values().begin(), out.values().end(), [](double v) { return v == 0.0; }))
        throw DomainError("delta half-width is below the pixel spacing; no pixel centre falls inside");
    return out;
}

std::vector<WavefrontElement> wavefront_samples(const PhantomSpec& spec, std::size_t n)
{
    if (n < 4)
        throw DomainError("wavefront sampling needs n >= 4");
    std::vector<WavefrontElement> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const Covector dir{std::cos(theta), std::sin(theta)};
        if (const auto* d = std::get_if<PixelDelta>(&spec)) {
            out.push_back({d->center, dir});
        }
        else {
            const auto& disc = std::get<Disc>(spec);
            out.push_back({{disc.center.x1 + disc.radius * dir.xi1, disc.center.x2 + disc.radius * dir.xi2}, dir});
        }
    }
    return out;
}

}  // namespace conetomo
