#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "conetomo/grid.hpp"
#include "conetomo/operator.hpp"

namespace conetomo {

/// How d^2/dE^2 treats the first and last E bins.
enum class BoundaryMode {
    ZeroPad,   ///< data outside A is zero: keeps the sharp cut-off of the data set
    OneSided,  ///< reuse the nearest interior three-point stencil
};

struct ReconstructionConfig {
    int landweber_iters = 200;
    /// Landweber step; nullopt selects 1 / (1.1 |M|)^2 from a power-iteration estimate.
    std::optional<double> step;
    BoundaryMode fbp_boundary = BoundaryMode::ZeroPad;
    int norm_iters = 100;
};

/// Central second difference along E, (s[i-1] - 2 s[i] + s[i+1]) / dE^2. Needs nE >= 3.
Sinogram second_derivative_E(const Sinogram& s, BoundaryMode boundary = BoundaryMode::ZeroPad);

/// Lambda-type filtered backprojection: M^T (d^2/dE^2 s). Unnormalised.
ImageGrid lambda_fbp(const SystemMatrix& m, const Sinogram& s, BoundaryMode boundary = BoundaryMode::ZeroPad);

struct LandweberResult {
    ImageGrid image;
    /// |s - M f_k| for k = 0 .. iters (entry 0 is the starting residual |s|).
    std::vector<double> residual_history;
    double step;
    /// Set when an explicit step exceeds 2/|M|^2 and the iteration may diverge.
    bool divergence_warning = false;
};

/// f_0 = 0, f_{k+1} = f_k + tau M^T (s - M f_k).
LandweberResult landweber(const SystemMatrix& m, const Sinogram& s, const ReconstructionConfig& cfg = {});

/// Zero the `count` image columns whose centres lie closest to x1 = `x1_center`
/// (ties go to the lower column index).
void zero_central_columns(ImageGrid& image, double x1_center, std::size_t count);

}  // namespace conetomo
