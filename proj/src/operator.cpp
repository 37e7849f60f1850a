#include "conetomo/operator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <boost/math/tools/roots.hpp>

#ifdef CONETOMO_HAVE_OPENMP
#include <omp.h>
#endif

#include "conetomo/errors.hpp"
#include "format.hpp"

namespace conetomo {

namespace {

struct Entry {
    std::int64_t col;
    double value;
};

/// Bilinear stencil on cell centres, clamped at the outer half cells so that a constant
/// image interpolates to the same constant everywhere inside the extent.
struct Stencil {
    std::size_t i0, i1;
    double t;
};

Stencil axis_stencil(double v, double lo, double step, std::size_t n)
{
    if (n == 1)
        return {0, 0, 0.0};
    const double f = (v - lo) / step - 0.5;
    const double fl = std::floor(f);
    const auto i0 = static_cast<std::size_t>(std::clamp(fl, 0.0, static_cast<double>(n - 2)));
    const double t = std::clamp(f - static_cast<double>(i0), 0.0, 1.0);
    return {i0, i0 + 1, t};
}

class RowBuilder {
public:
    RowBuilder(const CurveProfile& profile, const ScanGeometry& geom)
        : profile_(profile)
        , image_(geom.image_shape())
        , h_q_(geom.h_q())
    {
    }

    /// All (column, weight) pairs of the sinogram bin (E, x0), merged and sorted by column.
    std::vector<Entry> build(double E, double x0) const
    {
        std::vector<Entry> entries;
        const Extent& ext = image_.extent;
        for (const int side : {-1, 1}) {
            // x1 = x0 + side * r must stay inside [x1_min, x1_max] with r > 0.
            const double r_lo = std::max(0.0, side > 0 ? ext.x_min - x0 : x0 - ext.x_max);
            const double r_hi = side > 0 ? ext.x_max - x0 : x0 - ext.x_min;
            if (!(r_hi > r_lo))
                continue;
            for (const auto& [u, v] : inside_intervals(E, r_lo, r_hi))
                integrate(E, x0, side, u, v, entries);
        }
        std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
        std::vector<Entry> merged;
        merged.reserve(entries.size());
        for (const Entry& e : entries) {
            if (!merged.empty() && merged.back().col == e.col)
                merged.back().value += e.value;
            else
                merged.push_back(e);
        }
        return merged;
    }

private:
    /// Sub-intervals of [r_lo, r_hi] on which x2 = E q(r) stays inside [x2_min, x2_max].
    std::vector<std::pair<double, double>> inside_intervals(double E, double r_lo, double r_hi) const
    {
        const double y_lo = image_.extent.y_min;
        const double y_hi = image_.extent.y_max;
        auto height = [&](double r) { return E * profile_.q(r); };
        auto inside = [&](double r) {
            const double h = height(r);
            return h >= y_lo && h <= y_hi;
        };

        const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil((r_hi - r_lo) / h_q_)));
        std::vector<double> breaks{r_lo};
        double r_prev = r_lo;
        double h_prev = height(r_lo);
        for (std::size_t k = 1; k <= m; ++k) {
            const double r = k == m ? r_hi : r_lo + (r_hi - r_lo) * static_cast<double>(k) / static_cast<double>(m);
            const double h = height(r);
            for (const double level : {y_lo, y_hi}) {
                if ((h_prev - level) * (h - level) < 0.0) {
                    auto f = [&](double x) { return height(x) - level; };
                    std::uintmax_t iters = 100;
                    const auto br = boost::math::tools::bisect(f, r_prev, r, boost::math::tools::eps_tolerance<double>(), iters);
                    breaks.push_back(0.5 * (br.first + br.second));
                }
            }
            r_prev = r;
            h_prev = h;
        }
        breaks.push_back(r_hi);
        std::sort(breaks.begin(), breaks.end());

        std::vector<std::pair<double, double>> out;
        for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
            const double u = breaks[k];
            const double v = breaks[k + 1];
            if (v > u && inside(0.5 * (u + v)))
                out.emplace_back(u, v);
        }
        return out;
    }

    /// Composite midpoint rule on [u, v] with step <= h_q, weight sqrt(1 + E^2 q'^2).
    void integrate(double E, double x0, int side, double u, double v, std::vector<Entry>& entries) const
    {
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((v - u) / h_q_)));
        const double step = (v - u) / static_cast<double>(n);
        // Below h_q/2 the weight is frozen at its value there; it blows up at the
        // vertex when q'(0) is infinite (monomials with alpha < 1).
        const double r_weight_floor = 0.5 * h_q_;
        const Extent& ext = image_.extent;
        const double dx = image_.dx();
        const double dy = image_.dy();
        for (std::size_t k = 0; k < n; ++k) {
            const double r = u + (static_cast<double>(k) + 0.5) * step;
            const double x1 = x0 + side * r;
            const double x2 = E * profile_.q(r);
            const double slope = E * profile_.derivs(std::max(r, r_weight_floor)).dq;
            const double w = std::sqrt(1.0 + slope * slope) * step;

            const Stencil sx = axis_stencil(x1, ext.x_min, dx, image_.nx);
            const Stencil sy = axis_stencil(x2, ext.y_min, dy, image_.ny);
            const auto nx = static_cast<std::int64_t>(image_.nx);
            auto put = [&](std::size_t i, std::size_t j, double coef) {
                if (coef > 0.0)
                    entries.push_back({static_cast<std::int64_t>(i) + nx * static_cast<std::int64_t>(j), w * coef});
            };
            put(sx.i0, sy.i0, (1.0 - sx.t) * (1.0 - sy.t));
            put(sx.i1, sy.i0, sx.t * (1.0 - sy.t));
            put(sx.i0, sy.i1, (1.0 - sx.t) * sy.t);
            put(sx.i1, sy.i1, sx.t * sy.t);
        }
    }

    const CurveProfile& profile_;
    GridShape image_;
    double h_q_;
};

constexpr std::string_view kMatrixMagic = "CRGRID 1";
constexpr std::string_view kMatrixPayload = "csr int64 int64 float64 le";

template <class T>
void write_le(std::ostream& out, const T* data, std::size_t count)
{
    static_assert(sizeof(T) == 8);
    std::vector<std::uint64_t> buf(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t v = std::bit_cast<std::uint64_t>(data[i]);
        if constexpr (std::endian::native == std::endian::big)
            v = __builtin_bswap64(v);
        buf[i] = v;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(count * 8));
}

template <class T>
void read_le(std::istream& in, T* data, std::size_t count)
{
    static_assert(sizeof(T) == 8);
    std::vector<std::uint64_t> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 8));
    if (!in)
        throw FormatError("truncated matrix payload");
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t v = buf[i];
        if constexpr (std::endian::native == std::endian::big)
            v = __builtin_bswap64(v);
        data[i] = std::bit_cast<T>(v);
    }
}

std::string shape_line(std::string_view tag, const GridShape& s)
{
    using detail::format_number;
    std::ostringstream out;
    out << tag << ' ' << s.nx << ' ' << s.ny << ' ' << format_number(s.extent.x_min) << ' '
        << format_number(s.extent.x_max) << ' ' << format_number(s.extent.y_min) << ' '
        << format_number(s.extent.y_max);
    return out.str();
}

GridShape parse_shape_line(const std::string& line, std::string_view tag)
{
    std::istringstream in(line);
    std::string head, nx, ny, e0, e1, e2, e3;
    if (!(in >> head >> nx >> ny >> e0 >> e1 >> e2 >> e3) || head != tag)
        throw FormatError("bad '" + std::string(tag) + "' line in matrix header");
    try {
        GridShape s{static_cast<std::size_t>(detail::parse_number(nx)), static_cast<std::size_t>(detail::parse_number(ny)),
                    Extent{detail::parse_number(e0), detail::parse_number(e1), detail::parse_number(e2),
                           detail::parse_number(e3)}};
        validate_shape(s);
        return s;
    }
    catch (const Error& err) {
        throw FormatError(std::string("bad matrix header: ") + err.what());
    }
}

}  // namespace

SystemMatrix::SystemMatrix(Storage matrix, GridShape image, GridShape sinogram, std::string fingerprint)
    : matrix_(std::move(matrix))
    , image_(image)
    , sinogram_(sinogram)
    , fingerprint_(std::move(fingerprint))
{
    if (static_cast<std::size_t>(matrix_.rows()) != sinogram_.size() ||
        static_cast<std::size_t>(matrix_.cols()) != image_.size())
        throw DimensionError("system matrix size does not match its grids");
    matrix_.makeCompressed();
}

SystemMatrix build_system_matrix(const CurveProfile& profile, const ScanGeometry& geom, int threads)
{
    geom.validate();
    const GridShape image = geom.image_shape();
    const GridShape data = geom.sinogram_shape();
    const auto n_rows = static_cast<std::int64_t>(data.size());

    // Guard the profile over every radius the operator can touch.
    const RadiusWindow window = geom.radius_window();
    if (!(profile.q(window.r_max) > 0.0) || !(profile.q(window.r_min) > 0.0))
        throw ProfileInvalidError("profile " + profile.name() + " is not positive on the scan range");

    const RowBuilder builder(profile, geom);
    std::vector<std::vector<Entry>> rows(static_cast<std::size_t>(n_rows));

#ifdef CONETOMO_HAVE_OPENMP
    const int n_threads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(n_threads)
#else
    (void)threads;
#endif
    for (std::int64_t row = 0; row < n_rows; ++row) {
        const auto iE = static_cast<std::size_t>(row) % data.nx;
        const auto ix0 = static_cast<std::size_t>(row) / data.nx;
        rows[static_cast<std::size_t>(row)] = builder.build(data.x_center(iE), data.y_center(ix0));
    }

    std::int64_t nnz = 0;
    for (const auto& r : rows)
        nnz += static_cast<std::int64_t>(r.size());

    SystemMatrix::Storage m(n_rows, static_cast<std::int64_t>(image.size()));
    m.resizeNonZeros(nnz);
    auto* outer = m.outerIndexPtr();
    auto* inner = m.innerIndexPtr();
    auto* values = m.valuePtr();
    std::int64_t pos = 0;
    outer[0] = 0;
    for (std::int64_t row = 0; row < n_rows; ++row) {
        for (const Entry& e : rows[static_cast<std::size_t>(row)]) {
            inner[pos] = e.col;
            values[pos] = e.value;
            ++pos;
        }
        outer[row + 1] = pos;
        rows[static_cast<std::size_t>(row)].clear();
        rows[static_cast<std::size_t>(row)].shrink_to_fit();
    }
    return SystemMatrix(std::move(m), image, data, geom.fingerprint(profile));
}

Sinogram forward(const SystemMatrix& m, const ImageGrid& f)
{
    if (f.shape() != m.image_shape())
        throw DimensionError("image grid does not match the system matrix");
    Sinogram out(m.sinogram_shape());
    const auto in = f.values();
    auto res = out.values();
    Eigen::Map<const Eigen::VectorXd> x(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXd> y(res.data(), static_cast<Eigen::Index>(res.size()));
    y.noalias() = m.matrix() * x;
    return out;
}

ImageGrid adjoint(const SystemMatrix& m, const Sinogram& s)
{
    if (s.shape() != m.sinogram_shape())
        throw DimensionError("sinogram does not match the system matrix");
    ImageGrid out(m.image_shape());
    const auto in = s.values();
    auto res = out.values();
    Eigen::Map<const Eigen::VectorXd> x(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXd> y(res.data(), static_cast<Eigen::Index>(res.size()));
    y.noalias() = m.matrix().transpose() * x;
    return out;
}

double operator_norm(const SystemMatrix& m, int iters)
{
    if (iters < 10)
        throw DomainError("operator_norm needs at least 10 iterations");
    const auto& a = m.matrix();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    for (int k = 0; k < iters; ++k) {
        const Eigen::VectorXd u = a * v;
        const Eigen::VectorXd w = a.transpose() * u;
        const double nw = w.norm();
        if (nw == 0.0)
            return 0.0;
        v = w / nw;
    }
    return (a * v).norm();
}

void save_system_matrix(const SystemMatrix& m, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    const auto& a = m.matrix();
    out << kMatrixMagic << '\n'
        << "matrix\n"
        << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n'
        << shape_line("image", m.image_shape()) << '\n'
        << shape_line("sinogram", m.sinogram_shape()) << '\n'
        << "fingerprint " << m.fingerprint() << '\n'
        << kMatrixPayload << '\n';
    write_le(out, a.outerIndexPtr(), static_cast<std::size_t>(a.rows() + 1));
    write_le(out, a.innerIndexPtr(), static_cast<std::size_t>(a.nonZeros()));
    write_le(out, a.valuePtr(), static_cast<std::size_t>(a.nonZeros()));
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

SystemMatrix load_system_matrix(const std::filesystem::path& path, const std::string& expected)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::string magic, kind, dims, image_line, sino_line, fp_line, payload;
    if (!std::getline(in, magic) || magic != kMatrixMagic)
        throw FormatError("'" + path.string() + "' is not a CRGRID matrix file (bad magic)");
    if (!std::getline(in, kind) || kind != "matrix")
        throw FormatError("'" + path.string() + "' does not hold a matrix");
    if (!std::getline(in, dims) || !std::getline(in, image_line) || !std::getline(in, sino_line) ||
        !std::getline(in, fp_line) || !std::getline(in, payload))
        throw FormatError("truncated matrix header");
    if (payload != kMatrixPayload)
        throw FormatError("unsupported matrix payload encoding");
    if (fp_line.rfind("fingerprint ", 0) != 0)
        throw FormatError("missing matrix fingerprint");
    const std::string fingerprint = fp_line.substr(12);
    if (!expected.empty() && fingerprint != expected)
        throw FormatError("matrix cache fingerprint mismatch: cached '" + fingerprint + "', wanted '" + expected + "'");

    std::int64_t rows = 0, cols = 0, nnz = 0;
    std::istringstream ds(dims);
    if (!(ds >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
        throw FormatError("bad matrix dimensions line");
    const GridShape image = parse_shape_line(image_line, "image");
    const GridShape sino = parse_shape_line(sino_line, "sinogram");

    SystemMatrix::Storage m(rows, cols);
    m.resizeNonZeros(nnz);
    read_le(in, m.outerIndexPtr(), static_cast<std::size_t>(rows + 1));
    read_le(in, m.innerIndexPtr(), static_cast<std::size_t>(nnz));
    read_le(in, m.valuePtr(), static_cast<std::size_t>(nnz));
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after matrix payload");
    const auto* outer = m.outerIndexPtr();
    if (outer[0] != 0 || outer[rows] != nnz)
        throw FormatError("inconsistent CSR row pointers");
    for (std::int64_t r = 0; r < rows; ++r) {
        if (outer[r + 1] < outer[r])
            throw FormatError("inconsistent CSR row pointers");
    }
    for (std::int64_t k = 0; k < nnz; ++k) {
        if (m.innerIndexPtr()[k] < 0 || m.innerIndexPtr()[k] >= cols)
            throw FormatError("CSR column index out of range");
    }
    return SystemMatrix(std::move(m), image, sino, fingerprint);
}

}  // namespace conetomo
