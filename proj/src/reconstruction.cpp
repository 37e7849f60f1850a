#include "conetomo/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

namespace conetomo {

Sinogram second_derivative_E(const Sinogram& s, BoundaryMode boundary)
{
    const std::size_t n_e = s.nx();
    if (n_e < 3)
        throw DimensionError("second derivative in E needs at least 3 E bins");
    const double inv_h2 = 1.0 / (s.shape().dx() * s.shape().dx());
    Sinogram out(s.shape());
    for (std::size_t j = 0; j < s.ny(); ++j) {
        for (std::size_t i = 1; i + 1 < n_e; ++i)
            out(i, j) = (s(i - 1, j) - 2.0 * s(i, j) + s(i + 1, j)) * inv_h2;
        if (boundary == BoundaryMode::ZeroPad) {
            out(0, j) = (-2.0 * s(0, j) + s(1, j)) * inv_h2;
            out(n_e - 1, j) = (s(n_e - 2, j) - 2.0 * s(n_e - 1, j)) * inv_h2;
        }
        else {
            out(0, j) = out(1, j);
            out(n_e - 1, j) = out(n_e - 2, j);
        }
    }
    return out;
}

ImageGrid lambda_fbp(const SystemMatrix& m, const Sinogram& s, BoundaryMode boundary)
{
    return adjoint(m, second_derivative_E(s, boundary));
}

LandweberResult landweber(const SystemMatrix& m, const Sinogram& s, const ReconstructionConfig& cfg)
{
    if (cfg.landweber_iters < 0)
        throw DomainError("Landweber iteration count must be nonnegative");
    if (s.shape() != m.sinogram_shape())
        throw DimensionError("sinogram does not match the system matrix");

    LandweberResult result{ImageGrid(m.image_shape()), {}, 0.0, false};
    const auto& a = m.matrix();
    const auto data_span = s.values();
    Eigen::Map<const Eigen::VectorXd> data(data_span.data(), static_cast<Eigen::Index>(data_span.size()));

    const bool need_norm = !cfg.step || cfg.landweber_iters > 0;
    const double norm = need_norm ? operator_norm(m, std::max(cfg.norm_iters, 10)) : 0.0;
    if (cfg.step) {
        if (!(*cfg.step > 0.0))
            throw DomainError("Landweber step must be positive");
        result.step = *cfg.step;
        result.divergence_warning = norm > 0.0 && result.step > 2.0 / (norm * norm);
    }
    else {
        result.step = norm > 0.0 ? 1.0 / (1.21 * norm * norm) : 0.0;
    }

    auto image_span = result.image.values();
    Eigen::Map<Eigen::VectorXd> f(image_span.data(), static_cast<Eigen::Index>(image_span.size()));
    Eigen::VectorXd residual = data;
    result.residual_history.reserve(static_cast<std::size_t>(cfg.landweber_iters) + 1);
    result.residual_history.push_back(residual.norm());
    for (int k = 0; k < cfg.landweber_iters; ++k) {
        f.noalias() += result.step * (a.transpose() * residual);
        residual = data - a * f;
        result.residual_history.push_back(residual.norm());
    }
    return result;
}

void zero_central_columns(ImageGrid& image, double x1_center, std::size_t count)
{
    std::vector<std::size_t> cols(image.nx());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    const GridShape& shape = image.shape();
    std::stable_sort(cols.begin(), cols.end(), [&](std::size_t l, std::size_t r) {
        return std::abs(shape.x_center(l) - x1_center) < std::abs(shape.x_center(r) - x1_center);
    });
    cols.resize(std::min(count, cols.size()));
    for (std::size_t i : cols)
        for (std::size_t j = 0; j < image.ny(); ++j)
            image(i, j) = 0.0;
}

}  // namespace conetomo
