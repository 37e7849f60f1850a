#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "conetomo/profile.hpp"

using namespace conetomo;

namespace {

// Zeros of f on [lo, hi] by a fine scan and plain bisection.
std::vector<double> scan_zeros(const std::function<double(double)>& f, double lo, double hi, int n)
{
    std::vector<double> out;
    double a = lo, fa = f(lo);
    for (int k = 1; k <= n; ++k) {
        const double b = lo + (hi - lo) * k / n;
        const double fb = f(b);
        if (fa * fb < 0.0) {
            double l = a, h = b;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (l + h);
                (f(l) * f(m) <= 0.0 ? h : l) = m;
            }
            out.push_back(0.5 * (l + h));
        }
        a = b;
        fa = fb;
    }
    return out;
}

// g_1 from the sinusoid analysis: g_S' = 0 exactly where g_1 = 0.
double g1(double eps, double r)
{
    const double a = 1.0 + eps;
    return a * (r * std::sin(r) + 2.0 * std::cos(r)) + a * a + 1.0;
}

std::vector<CurveProfile> closed_forms()
{
    return {CurveProfile::compton(), CurveProfile::bragg(), CurveProfile::monomial(0.5), CurveProfile::monomial(2.0),
            CurveProfile::monomial(3.7), CurveProfile::sinusoid(0.1), CurveProfile::sinusoid(0.5)};
}

}  // namespace

TEST(Profile, QValues)
{
    EXPECT_DOUBLE_EQ(CurveProfile::compton().q(2.0), 2.0);
    EXPECT_NEAR(CurveProfile::bragg().q(1.0), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(CurveProfile::sinusoid(0.1).q(std::numbers::pi), 1.1 * std::numbers::pi, 1e-14);
    for (const auto& p : closed_forms())
        EXPECT_EQ(p.q(0.0), 0.0) << p.name();
    EXPECT_EQ(CurveProfile::bragg_offset(0.3).q(0.0), 0.0);
}

TEST(Profile, NegativeRadiusRejected)
{
    for (const auto& p : closed_forms()) {
        EXPECT_THROW(p.q(-0.1), DomainError);
        EXPECT_THROW(p.derivs(0.0), DomainError);
        EXPECT_THROW(p.derivs(-1.0), DomainError);
    }
}

TEST(Profile, Derivatives)
{
    const QDerivs b = CurveProfile::bragg().derivs(1.0);
    EXPECT_NEAR(b.q, 0.70710678118654752, 1e-12);
    EXPECT_NEAR(b.dq, 0.35355339059327376, 1e-12);
    EXPECT_NEAR(b.d2q, -0.53033008588991064, 1e-12);

    const QDerivs c = CurveProfile::compton().derivs(5.0);
    EXPECT_EQ(c.q, 5.0);
    EXPECT_EQ(c.dq, 1.0);
    EXPECT_EQ(c.d2q, 0.0);

    const QDerivs s = CurveProfile::sinusoid(0.1).derivs(std::numbers::pi / 2);
    EXPECT_NEAR(s.q, 1.1 * std::numbers::pi / 2 + 1.0, 1e-12);
    EXPECT_NEAR(s.dq, 1.1, 1e-12);
    EXPECT_NEAR(s.d2q, -1.0, 1e-12);
}

TEST(Profile, AnalyticDerivativesMatchCentralDifferences)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.1, 30.0);
    const double h = 1e-5;
    for (const auto& p : closed_forms()) {
        for (int k = 0; k < 1000; ++k) {
            const double r = u(rng);
            const QDerivs d = p.derivs(r);
            const double dq = (p.q(r + h) - p.q(r - h)) / (2 * h);
            const double d2q = (p.derivs(r + h).dq - p.derivs(r - h).dq) / (2 * h);
            ASSERT_LE(std::abs(d.dq - dq), 1e-6 * (1.0 + std::abs(d.dq))) << p.name() << " r=" << r;
            ASSERT_LE(std::abs(d.d2q - d2q), 1e-6 * (1.0 + std::abs(d.d2q))) << p.name() << " r=" << r;
        }
    }
}

TEST(Profile, JacobianIdentity)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.01, 40.0);
    for (const auto& p : closed_forms()) {
        for (int k = 0; k < 500; ++k) {
            const double r = u(rng);
            const QDerivs d = p.derivs(r);
            const double lhs = d.q * d.d2q - d.dq * d.dq;
            const double rhs = p.g_prime(r) * d.q * d.q;
            ASSERT_LE(std::abs(lhs - rhs), 1e-10 * (1.0 + std::abs(rhs))) << p.name() << " r=" << r;
        }
    }
}

TEST(Profile, GValues)
{
    EXPECT_NEAR(CurveProfile::monomial(1.0).g(2.0), 0.5, 1e-15);
    EXPECT_NEAR(CurveProfile::bragg().g(2.0), 0.1, 1e-15);
    EXPECT_NEAR(CurveProfile::monomial(2.0).g(2.0), 1.0, 1e-15);
    EXPECT_NEAR(CurveProfile::bragg().g_prime(1.0), -1.0, 1e-14);
    EXPECT_NEAR(CurveProfile::monomial(1.0).g_prime(2.0), -0.25, 1e-15);
}

TEST(Profile, SinusoidGPrimeVanishesAtFirstZeroOfG1)
{
    const auto zeros = scan_zeros([](double r) { return g1(0.1, r); }, 0.01, 10.0, 10000);
    ASSERT_FALSE(zeros.empty());
    EXPECT_NEAR(CurveProfile::sinusoid(0.1).g_prime(zeros.front()), 0.0, 1e-12);
}

TEST(Profile, ParseAndName)
{
    for (const char* s : {"compton", "bragg", "monomial:0.5", "sinusoid:0.1", "bragg-offset:0.3"})
        EXPECT_EQ(parse_profile(s).name(), s);
    EXPECT_EQ(parse_profile("monomial:1").q(2.5), parse_profile("compton").q(2.5));
    for (const char* s : {"", "line", "monomial", "monomial:-1", "monomial:abc", "sinusoid:0", "bragg-offset:1",
                          "bragg-offset:-1.5", "compton:2"})
        EXPECT_THROW(parse_profile(s), DomainError) << s;
}

TEST(Bolker, SatisfiedForMonotoneFamilies)
{
    for (const auto& p : {CurveProfile::compton(), CurveProfile::bragg(), CurveProfile::monomial(0.5),
                          CurveProfile::monomial(2.0)}) {
        const BolkerReport r = check_bolker(p, 0.01, 30.0);
        EXPECT_TRUE(r.satisfied) << p.name();
        EXPECT_TRUE(r.g_prime_zeros.empty());
        EXPECT_TRUE(r.g_monotone);
        EXPECT_TRUE(r.g_positive);
        EXPECT_GT(r.min_abs_g_prime, 0.0);
    }
}

TEST(Bolker, SinusoidZerosMatchG1Oracle)
{
    for (double eps : {0.05, 0.1, 0.5}) {
        const BolkerReport r = check_bolker(CurveProfile::sinusoid(eps), 0.01, 40.0);
        EXPECT_FALSE(r.satisfied);
        EXPECT_FALSE(r.g_monotone);
        const auto oracle = scan_zeros([eps](double x) { return g1(eps, x); }, 0.01, 40.0, 40000);
        ASSERT_GE(oracle.size(), 3u);
        ASSERT_EQ(r.g_prime_zeros.size(), oracle.size()) << "eps=" << eps;
        for (std::size_t k = 0; k < oracle.size(); ++k)
            EXPECT_NEAR(r.g_prime_zeros[k], oracle[k], 1e-8);
        for (double z : r.g_prime_zeros)
            EXPECT_LT(std::abs(CurveProfile::sinusoid(eps).g_prime(z)), r.zero_tolerance);
    }
}

TEST(Bolker, ReportSerialisation)
{
    const BolkerReport r = check_bolker(CurveProfile::sinusoid(0.1), 0.01, 40.0);
    const std::string kv = r.to_key_values();
    EXPECT_NE(kv.find("satisfied=false"), std::string::npos);
    EXPECT_NE(kv.find("zero_count=12"), std::string::npos);
    EXPECT_NE(r.to_text().find("VIOLATED"), std::string::npos);
    EXPECT_NE(check_bolker(CurveProfile::bragg(), 0.01, 30.0).to_key_values().find("satisfied=true"),
              std::string::npos);
}

TEST(Bolker, Preconditions)
{
    EXPECT_THROW(check_bolker(CurveProfile::compton(), 0.0, 1.0), DomainError);
    EXPECT_THROW(check_bolker(CurveProfile::compton(), 2.0, 1.0), DomainError);
    EXPECT_THROW(check_bolker(CurveProfile::compton(), 0.1, 1.0, 50), DomainError);
}

TEST(InvertG, Examples)
{
    EXPECT_NEAR(invert_g(CurveProfile::compton(), 0.5, 0.01, 30.0), 2.0, 1e-12);
    EXPECT_NEAR(invert_g(CurveProfile::bragg(), 0.1, 0.01, 30.0), 2.0, 1e-12);
    EXPECT_THROW(invert_g(CurveProfile::sinusoid(0.1), 0.5, 0.01, 40.0), BolkerViolationError);
    EXPECT_THROW(invert_g(CurveProfile::compton(), 1000.0, 0.01, 30.0), OutOfRangeError);
    EXPECT_THROW(invert_g(CurveProfile::compton(), 0.01, 0.01, 30.0), OutOfRangeError);
}

TEST(InvertG, RoundTrip)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 30.0);
    for (const auto& p : {CurveProfile::compton(), CurveProfile::bragg(), CurveProfile::monomial(0.5)}) {
        const GInverse inv(p, 0.01, 30.0);
        for (int k = 0; k < 200; ++k) {
            const double r = u(rng);
            EXPECT_NEAR(inv(p.g(r)), r, 1e-10 * r) << p.name();
        }
    }
}

TEST(LevelSet, InjectiveProfilesGiveSingletons)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 30.0);
    EXPECT_EQ(g_level_set(CurveProfile::compton(), 3.0, 0.01, 30.0), std::vector<double>{3.0});
    EXPECT_EQ(g_level_set(CurveProfile::bragg(), 1.0, 0.01, 30.0), std::vector<double>{1.0});
    for (const auto& p : {CurveProfile::compton(), CurveProfile::bragg(), CurveProfile::monomial(2.0)})
        for (int k = 0; k < 50; ++k)
            EXPECT_EQ(g_level_set(p, u(rng), 0.01, 30.0).size(), 1u);
}

TEST(LevelSet, SinusoidMatchesScanOracle)
{
    const CurveProfile s = CurveProfile::sinusoid(0.1);
    for (double r1 : {4.0, 7.3, 11.0, 20.5}) {
        const auto got = g_level_set(s, r1, 0.01, 40.0);
        const double target = s.g(r1);
        auto oracle = scan_zeros([&](double r) { return s.g(r) - target; }, 0.01, 40.0, 80000);
        ASSERT_GE(got.size(), 2u) << "r1=" << r1;
        ASSERT_EQ(got.size(), oracle.size()) << "r1=" << r1;
        EXPECT_NE(std::find(got.begin(), got.end(), r1), got.end());
        for (std::size_t k = 0; k < got.size(); ++k) {
            EXPECT_NEAR(got[k], oracle[k], 1e-8);
            EXPECT_LE(std::abs(s.g(got[k]) - target), 1e-9);
        }
    }
}

TEST(Jacobian, Examples)
{
    for (double r : {0.1, 1.0, 17.0})
        EXPECT_EQ(left_projection_jacobian_det(CurveProfile::compton(), 2.0, 1.0, r), -2.0);
    EXPECT_NEAR(left_projection_jacobian_det(CurveProfile::bragg(), 1.0, 1.0, 1.0), -0.5, 1e-14);
    const BolkerReport rep = check_bolker(CurveProfile::sinusoid(0.1), 0.01, 40.0);
    for (double z : rep.g_prime_zeros)
        EXPECT_NEAR(left_projection_jacobian_det(CurveProfile::sinusoid(0.1), 1.0, 1.0, z), 0.0, 1e-8);
}

TEST(BraggOffset, ClosedForm)
{
    EXPECT_NEAR(bragg_offset_q(1.0, 0.0), 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(bragg_offset_q(2.0, 0.0), 2.0 / std::sqrt(5.0), 1e-14);
    EXPECT_EQ(bragg_offset_q(1.3, 0.4), bragg_offset_q(-1.3, 0.4));
    EXPECT_THROW(bragg_offset_q(1.0, 1.0), DomainError);
    EXPECT_THROW(bragg_offset_q(1.0, -1.2), DomainError);
    for (double r : {0.2, 1.0, 2.5})
        EXPECT_NEAR(CurveProfile::bragg_offset(0.0).q(r), CurveProfile::bragg().q(r), 1e-14);
    // Finite-difference derivatives of the offset profile at x2 = 0 track the analytic Bragg ones.
    const QDerivs fd = CurveProfile::bragg_offset(0.0).derivs(1.0);
    const QDerivs an = CurveProfile::bragg().derivs(1.0);
    EXPECT_NEAR(fd.dq, an.dq, 1e-7);
    EXPECT_NEAR(fd.d2q, an.d2q, 1e-5);
}

TEST(BraggOffset, HPrimeScan)
{
    const BraggOffsetScan scan = bragg_offset_bolker_scan(3.0, 300, 200, 1e-4);
    EXPECT_GE(scan.min_h_prime, 0.9);
    EXPECT_LE(scan.min_h_prime, 1.1);
    EXPECT_EQ(scan.grid.nx(), 300u);
    EXPECT_EQ(scan.grid.ny(), 200u);
    for (double v : scan.grid.values())
        ASSERT_GE(v, 0.9);
    for (double x1 : {0.1, 0.7, 1.5, 2.9}) {
        EXPECT_NEAR(bragg_offset_h(x1, 0.0), x1 * (x1 * x1 + 1.0), 1e-6 * x1 * (x1 * x1 + 1.0));
        EXPECT_NEAR(bragg_offset_h_prime(x1, 0.0), 3 * x1 * x1 + 1.0, 1e-3 * (3 * x1 * x1 + 1.0));
    }
    EXPECT_NEAR(bragg_offset_h_prime(1e-3, 0.0), 1.0, 1e-3);
    EXPECT_THROW(bragg_offset_bolker_scan(3.0, 40, 200), DomainError);
}

TEST(Tabulated, InterpolatesThroughKnots)
{
    std::vector<double> r, q;
    for (int k = 1; k <= 40; ++k) {
        r.push_back(0.25 * k);
        q.push_back(CurveProfile::bragg().q(0.25 * k));
    }
    const CurveProfile t = CurveProfile::tabulated(r, q);
    EXPECT_EQ(t.q(0.0), 0.0);
    for (std::size_t k = 0; k < r.size(); ++k)
        EXPECT_NEAR(t.q(r[k]), q[k], 1e-14);
    for (double x : {0.1, 1.1, 3.3, 7.9})
        EXPECT_NEAR(t.q(x), CurveProfile::bragg().q(x), 5e-3);
    EXPECT_FALSE(t.has_analytic_derivatives());
    EXPECT_THROW(t.q(10.5), DomainError);
    EXPECT_THROW(CurveProfile::tabulated({1.0, 0.5, 2.0}, {1.0, 2.0, 3.0}), ProfileInvalidError);
    EXPECT_THROW(CurveProfile::tabulated({1.0, 2.0, 3.0}, {1.0, 0.0, 1.0}), ProfileInvalidError);
    EXPECT_THROW(CurveProfile::tabulated({0.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), ProfileInvalidError);
}
