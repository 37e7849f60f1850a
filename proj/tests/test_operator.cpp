#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

#include <Eigen/Core>
#include <gtest/gtest.h>

#include "conetomo/geometry.hpp"
#include "conetomo/operator.hpp"
#include "conetomo/phantom.hpp"

using namespace conetomo;

namespace {

ScanGeometry small_geometry()
{
    ScanGeometry g;  // [-1,1] x [0,2], E in [0.01, 2.83], x0 in [-2, 2]
    g.nx = g.ny = 32;
    g.n_e = 24;
    g.n_x0 = 48;
    return g;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    return Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()).dot(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
}

// Square matrix U diag(s) V^T with U, V plane rotations.
SystemMatrix known_singular_values(const std::vector<double>& s)
{
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n), v = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        Eigen::MatrixXd ru = Eigen::MatrixXd::Identity(n, n), rv = Eigen::MatrixXd::Identity(n, n);
        const double a = 0.3 + 0.2 * k, b = 1.1 - 0.15 * k;
        ru(k, k) = ru(k + 1, k + 1) = std::cos(a);
        ru(k, k + 1) = -std::sin(a);
        ru(k + 1, k) = std::sin(a);
        rv(k, k) = rv(k + 1, k + 1) = std::cos(b);
        rv(k, k + 1) = -std::sin(b);
        rv(k + 1, k) = std::sin(b);
        u = u * ru;
        v = v * rv;
    }
    const Eigen::MatrixXd dense = u * Eigen::VectorXd::Map(s.data(), n).asDiagonal() * v.transpose();
    const SystemMatrix::Storage sparse = dense.sparseView();
    const auto un = static_cast<std::size_t>(n);
    return SystemMatrix(sparse, GridShape{un, 1, {0, 1, 0, 1}}, GridShape{un, 1, {0.5, 1, 0, 1}}, "test");
}

}  // namespace

TEST(Operator, ConstantImageGivesArcLength)
{
    ScanGeometry g;
    g.a = 0.5;
    g.b = 1.5;
    g.n_e = 1;
    g.n_x0 = 1;
    const SystemMatrix m = build_system_matrix(CurveProfile::compton(), g);
    const Sinogram s = forward(m, g.make_image(1.0));
    EXPECT_NEAR(s.values()[0], 2.0 * std::numbers::sqrt2, 1e-12);
    EXPECT_EQ(forward(m, g.make_image(0.0)).values()[0], 0.0);
}

TEST(Operator, EntriesNonnegativeAndForwardPositive)
{
    const ScanGeometry g = small_geometry();
    for (const auto& p : {CurveProfile::compton(), CurveProfile::bragg(), CurveProfile::monomial(0.5)}) {
        const SystemMatrix m = build_system_matrix(p, g);
        EXPECT_GT(m.nonzeros(), 0);
        const auto& mat = m.matrix();
        for (Eigen::Index k = 0; k < mat.nonZeros(); ++k) {
            ASSERT_GE(mat.valuePtr()[k], 0.0);
            ASSERT_TRUE(std::isfinite(mat.valuePtr()[k]));
        }
    }
}

TEST(Operator, LinearityAndAdjoint)
{
    const ScanGeometry g = small_geometry();
    const SystemMatrix m = build_system_matrix(CurveProfile::bragg(), g);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        ImageGrid f = g.make_image(), h = g.make_image(), comb = g.make_image();
        Sinogram s = g.make_sinogram();
        for (double& v : f.values())
            v = n(rng);
        for (double& v : h.values())
            v = n(rng);
        for (double& v : s.values())
            v = n(rng);
        for (std::size_t k = 0; k < comb.size(); ++k)
            comb.values()[k] = 2.0 * f.values()[k] - 0.5 * h.values()[k];
        const Sinogram mf = forward(m, f), mh = forward(m, h), mc = forward(m, comb);
        for (std::size_t k = 0; k < mc.size(); ++k)
            ASSERT_NEAR(mc.values()[k], 2.0 * mf.values()[k] - 0.5 * mh.values()[k], 1e-12 * (1 + std::abs(mc.values()[k])));
        const double lhs = dot(mf.values(), s.values());
        const double rhs = dot(f.values(), adjoint(m, s).values());
        const double scale = std::sqrt(dot(mf.values(), mf.values()) * dot(s.values(), s.values()));
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
    }
    const ImageGrid back = adjoint(m, g.make_sinogram());
    for (double v : back.values())
        ASSERT_EQ(v, 0.0);
}

TEST(Operator, OneHotBackprojectionLiesOnItsCurve)
{
    const ScanGeometry g = small_geometry();
    const CurveProfile p = CurveProfile::bragg();
    const SystemMatrix m = build_system_matrix(p, g);
    const GridShape is = g.image_shape();
    for (const auto [ie, ix] : {std::pair{5, 20}, std::pair{12, 30}, std::pair{20, 24}}) {
        Sinogram s = g.make_sinogram();
        s(ie, ix) = 1.0;
        const double E = s.shape().x_center(ie), x0 = s.shape().y_center(ix);
        const ImageGrid b = adjoint(m, s);
        std::size_t lit = 0;
        for (std::size_t j = 0; j < is.ny; ++j) {
            for (std::size_t i = 0; i < is.nx; ++i) {
                if (b(i, j) == 0.0)
                    continue;
                ++lit;
                // Some point of the curve lies within one cell of the pixel centre.
                double best = INFINITY;
                for (int k = -200; k <= 200; ++k) {
                    const double x1 = is.x_center(i) + is.dx() * k / 200.0;
                    const double x2 = E * p.q(std::abs(x1 - x0));
                    best = std::min(best, std::abs(x2 - is.y_center(j)));
                }
                ASSERT_LE(best, is.dy() + 1e-12) << "pixel " << i << "," << j;
            }
        }
        EXPECT_GT(lit, 0u);
    }
}

TEST(Operator, MirrorSymmetry)
{
    // A phantom even in x1 gives Rf(E, x0) = Rf(E, -x0) on symmetric grids.
    const ScanGeometry g = small_geometry();
    const SystemMatrix m = build_system_matrix(CurveProfile::compton(), g);
    const Sinogram s = forward(m, rasterize(parse_phantom("disc:0,1,0.4", 0.0), g.image_shape()));
    for (std::size_t j = 0; j < g.n_x0; ++j)
        for (std::size_t i = 0; i < g.n_e; ++i)
            ASSERT_NEAR(s(i, j), s(i, g.n_x0 - 1 - j), 1e-12 * (1.0 + std::abs(s(i, j))));
}

TEST(Operator, DeltaSinogramStaysInFootprintBand)
{
    const ScanGeometry g = find_preset("ex1-compton").geometry;
    const CurveProfile p = CurveProfile::compton();
    const Sinogram s = forward(build_system_matrix(p, g), rasterize(parse_phantom("delta:0,1,0.015", 0.0), g.image_shape()));
    const GridShape sh = s.shape();
    const double gx = 0.015 + g.image_shape().dx(), gy = 0.015 + g.image_shape().dy();
    for (std::size_t j = 0; j < sh.ny; ++j) {
        const double r = std::abs(sh.y_center(j));
        const double e_hi = r > gx ? (1.0 + gy) / (r - gx) : INFINITY;
        const double e_lo = (1.0 - gy) / (r + gx);
        for (std::size_t i = 0; i < sh.nx; ++i)
            if (s(i, j) != 0.0) {
                ASSERT_GE(sh.x_center(i), e_lo - sh.dx());
                ASSERT_LE(sh.x_center(i), e_hi + sh.dx());
            }
    }
}

TEST(Operator, QuadratureConvergesAtSecondOrder)
{
    // Bragg curves at E = 1 stay below x2 = 1; a smooth image makes the integrand smooth.
    auto run = [](double h) {
        ScanGeometry g;
        g.a = 0.5;
        g.b = 1.5;
        g.n_e = 1;
        g.n_x0 = 1;
        g.quadrature_step = h;
        ImageGrid f = g.make_image();
        const GridShape s = g.image_shape();
        for (std::size_t j = 0; j < s.ny; ++j)
            for (std::size_t i = 0; i < s.nx; ++i)
                f(i, j) = 1.0 + 0.3 * s.x_center(i) * s.x_center(i) + 0.2 * s.y_center(j);
        return forward(build_system_matrix(CurveProfile::bragg(), g), f).values()[0];
    };
    const double h = ScanGeometry{}.h_q();
    const double v0 = run(h), v1 = run(h / 2), v2 = run(h / 4), v3 = run(h / 8);
    const double ratio1 = std::abs(v0 - v1) / std::abs(v1 - v2);
    const double ratio2 = std::abs(v1 - v2) / std::abs(v2 - v3);
    EXPECT_GT(ratio1, 3.0);
    EXPECT_GT(ratio2, 3.0);
}

TEST(Operator, ThreadCountDoesNotChangeTheMatrix)
{
    const ScanGeometry g = small_geometry();
    const SystemMatrix a = build_system_matrix(CurveProfile::bragg(), g, 1);
    const SystemMatrix b = build_system_matrix(CurveProfile::bragg(), g, 3);
    ASSERT_EQ(a.nonzeros(), b.nonzeros());
    const auto& ma = a.matrix();
    const auto& mb = b.matrix();
    EXPECT_EQ(0, std::memcmp(ma.valuePtr(), mb.valuePtr(), ma.nonZeros() * sizeof(double)));
    EXPECT_EQ(0, std::memcmp(ma.innerIndexPtr(), mb.innerIndexPtr(), ma.nonZeros() * sizeof(std::int64_t)));
}

TEST(Operator, DimensionMismatch)
{
    const ScanGeometry g = small_geometry();
    const SystemMatrix m = build_system_matrix(CurveProfile::compton(), g);
    EXPECT_THROW(forward(m, ImageGrid(16, 16, g.image)), DimensionError);
    EXPECT_THROW(adjoint(m, Sinogram(3, 3, {0.01, 1, -1, 1})), DimensionError);
}

TEST(OperatorNorm, KnownSingularValues)
{
    const SystemMatrix m = known_singular_values({5.0, 3.0, 2.0, 1.0, 0.5});
    EXPECT_NEAR(operator_norm(m, 50), 5.0, 0.05);
    double prev = 0.0;
    for (int it = 10; it <= 60; it += 5) {
        const double v = operator_norm(m, it);
        EXPECT_GE(v, prev * (1.0 - 1e-15));
        prev = v;
    }
    EXPECT_THROW(operator_norm(m, 5), DomainError);
}

TEST(OperatorNorm, ZeroMatrix)
{
    const SystemMatrix::Storage z(4, 4);
    const SystemMatrix m(z, GridShape{4, 1, {0, 1, 0, 1}}, GridShape{4, 1, {0.5, 1, 0, 1}}, "zero");
    EXPECT_EQ(operator_norm(m, 20), 0.0);
}

TEST(MatrixCache, RoundTripAndFingerprint)
{
    const ScanGeometry g = small_geometry();
    const SystemMatrix m = build_system_matrix(CurveProfile::compton(), g);
    const auto path = std::filesystem::temp_directory_path() / "conetomo_matrix_test.bin";
    save_system_matrix(m, path);
    const SystemMatrix back = load_system_matrix(path, g.fingerprint(CurveProfile::compton()));
    EXPECT_EQ(back.fingerprint(), m.fingerprint());
    EXPECT_EQ(back.image_shape(), m.image_shape());
    EXPECT_EQ(back.sinogram_shape(), m.sinogram_shape());
    ASSERT_EQ(back.nonzeros(), m.nonzeros());
    EXPECT_EQ(0, std::memcmp(back.matrix().valuePtr(), m.matrix().valuePtr(), m.nonzeros() * sizeof(double)));
    EXPECT_THROW(load_system_matrix(path, g.fingerprint(CurveProfile::bragg())), FormatError);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    EXPECT_THROW(load_system_matrix(path), FormatError);
}
