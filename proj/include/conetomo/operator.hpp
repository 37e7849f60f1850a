#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/SparseCore>

#include "conetomo/geometry.hpp"
#include "conetomo/grid.hpp"
#include "conetomo/profile.hpp"

namespace conetomo {

/// Sparse discretisation of the two-branch cone transform.
///
/// Row index = iE + nE * ix0 (sinogram layout), column index = ix1 + nx * ix2 (image
/// layout). Entries are quadrature weight times bilinear interpolation coefficient, so
/// they are all nonnegative. The adjoint is the exact transpose.
class SystemMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

    SystemMatrix(Storage matrix, GridShape image, GridShape sinogram, std::string fingerprint);

    const Storage& matrix() const { return matrix_; }
    const GridShape& image_shape() const { return image_; }
    const GridShape& sinogram_shape() const { return sinogram_; }
    const std::string& fingerprint() const { return fingerprint_; }

    std::int64_t rows() const { return matrix_.rows(); }
    std::int64_t cols() const { return matrix_.cols(); }
    std::int64_t nonzeros() const { return matrix_.nonZeros(); }

private:
    Storage matrix_;
    GridShape image_;
    GridShape sinogram_;
    std::string fingerprint_;
};

/// Assemble the operator for `profile` on `geom`. Rows are built independently (in
/// parallel when OpenMP is available, `threads` <= 0 meaning the runtime default) and
/// the result is bit-identical for any thread count.
SystemMatrix build_system_matrix(const CurveProfile& profile, const ScanGeometry& geom, int threads = 0);

Sinogram forward(const SystemMatrix& m, const ImageGrid& f);
ImageGrid adjoint(const SystemMatrix& m, const Sinogram& s);

/// sqrt of the power-iteration estimate of the largest eigenvalue of M^T M after
/// `iters` (>= 10) steps from the all-ones vector. Nondecreasing in `iters`; 0 for a zero matrix.
double operator_norm(const SystemMatrix& m, int iters = 100);

/// Matrix cache: CRGRID-style header, then CSR arrays (int64 row pointers, int64 column
/// indices, float64 values), all little-endian.
void save_system_matrix(const SystemMatrix& m, const std::filesystem::path& path);
/// Loads a cached matrix; throws FormatError when its fingerprint differs from `expected`
/// (an empty `expected` skips the check).
SystemMatrix load_system_matrix(const std::filesystem::path& path, const std::string& expected = {});

}  // namespace conetomo
