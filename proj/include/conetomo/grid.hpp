#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "conetomo/errors.hpp"

namespace conetomo {

/// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]. For sinograms x is E and y is x0.
struct Extent {
    double x_min;
    double x_max;
    double y_min;
    double y_max;

    bool operator==(const Extent&) const = default;
};

/// Sizes and extent of a cell-centred grid, without the values.
struct GridShape {
    std::size_t nx;
    std::size_t ny;
    Extent extent;

    bool operator==(const GridShape&) const = default;

    double dx() const { return (extent.x_max - extent.x_min) / static_cast<double>(nx); }
    double dy() const { return (extent.y_max - extent.y_min) / static_cast<double>(ny); }
    double x_center(std::size_t i) const { return extent.x_min + (static_cast<double>(i) + 0.5) * dx(); }
    double y_center(std::size_t j) const { return extent.y_min + (static_cast<double>(j) + 0.5) * dy(); }

    /// Index of the cell containing x, or nullopt outside [x_min, x_max].
    std::optional<std::size_t> x_index(double x) const { return index(x, extent.x_min, extent.x_max, nx); }
    std::optional<std::size_t> y_index(double y) const { return index(y, extent.y_min, extent.y_max, ny); }

    std::size_t size() const { return nx * ny; }

private:
    static std::optional<std::size_t> index(double v, double lo, double hi, std::size_t n)
    {
        if (!(v >= lo && v <= hi))
            return std::nullopt;
        const auto k = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(n)));
        return std::min(k, n - 1);
    }
};

void validate_shape(const GridShape& shape);

enum class GridKind { Image, Sinogram };

/// Uniform 2D scalar field. Values are stored row-major with x fastest and live at
/// cell centres.
template <GridKind Kind>
class UniformGrid {
public:
    static constexpr GridKind kind = Kind;

    explicit UniformGrid(GridShape shape, double fill = 0.0)
        : shape_(shape)
    {
        validate_shape(shape_);
        if constexpr (Kind == GridKind::Sinogram) {
            if (!(shape_.extent.x_min > 0.0))
                throw DomainError("sinogram E range must start above 0");
        }
        values_.assign(shape_.size(), fill);
    }

    UniformGrid(std::size_t nx, std::size_t ny, Extent extent, double fill = 0.0)
        : UniformGrid(GridShape{nx, ny, extent}, fill)
    {
    }

    const GridShape& shape() const { return shape_; }
    const Extent& extent() const { return shape_.extent; }
    std::size_t nx() const { return shape_.nx; }
    std::size_t ny() const { return shape_.ny; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[j * shape_.nx + i]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[j * shape_.nx + i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool operator==(const UniformGrid&) const = default;

private:
    GridShape shape_;
    std::vector<double> values_;
};

/// Image space (x1, x2).
using ImageGrid = UniformGrid<GridKind::Image>;
/// Data space: E along the fast axis, x0 along rows.
using Sinogram = UniformGrid<GridKind::Sinogram>;

using AnyGrid = std::variant<ImageGrid, Sinogram>;

/// CRGRID: ASCII header followed by little-endian float64 payload.
template <GridKind Kind>
void write_grid(const UniformGrid<Kind>& grid, const std::filesystem::path& path);

AnyGrid read_grid(const std::filesystem::path& path);
ImageGrid read_image(const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

/// 16-bit binary PGM (P5, big-endian samples). The top row of the file is the
/// largest y. Values are mapped linearly from [lo, hi] (default: data min/max) and
/// clipped; a degenerate range writes mid-gray.
template <GridKind Kind>
void export_pgm(const UniformGrid<Kind>& grid, const std::filesystem::path& path,
                std::optional<std::pair<double, double>> clip = std::nullopt);

/// One CSV line per grid row (increasing y), values in full precision.
template <GridKind Kind>
void export_csv(const UniformGrid<Kind>& grid, const std::filesystem::path& path);

}  // namespace conetomo
