#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "conetomo/grid.hpp"
#include "format.hpp"

namespace conetomo {

namespace {

constexpr std::string_view kMagic = "CRGRID 1";
constexpr std::string_view kPayloadLine = "float64 le row-major";

std::uint64_t to_little_endian(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::little)
        return v;
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i)
        out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
}

std::string kind_name(GridKind kind)
{
    return kind == GridKind::Image ? "image" : "sinogram";
}

std::ofstream open_for_writing(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish_writing(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

std::string read_header_line(std::istream& in, std::size_t index)
{
    std::string line;
    // Header lines are short; cap the read so a binary file cannot swallow memory.
    char c = 0;
    while (in.get(c)) {
        if (c == '\n')
            return line;
        line.push_back(c);
        if (line.size() > 256)
            break;
    }
    throw FormatError("truncated or oversized CRGRID header line " + std::to_string(index + 1));
}

std::size_t parse_size(std::string_view text)
{
    const double v = detail::parse_number(text);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw FormatError("bad grid dimension '" + std::string(text) + "'");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::istringstream in(line);
    std::vector<std::string> fields;
    for (std::string f; in >> f;)
        fields.push_back(f);
    return fields;
}

}  // namespace

void validate_shape(const GridShape& shape)
{
    if (shape.nx == 0 || shape.ny == 0)
        throw DimensionError("grid dimensions must be positive");
    const Extent& e = shape.extent;
    if (!std::isfinite(e.x_min) || !std::isfinite(e.x_max) || !std::isfinite(e.y_min) || !std::isfinite(e.y_max))
        throw DomainError("grid extent must be finite");
    if (!(e.x_min < e.x_max) || !(e.y_min < e.y_max))
        throw DomainError("grid extent must have min < max on both axes");
}

template <GridKind Kind>
void write_grid(const UniformGrid<Kind>& grid, const std::filesystem::path& path)
{
    std::ofstream out = open_for_writing(path);
    const Extent& e = grid.extent();
    out << kMagic << '\n'
        << kind_name(Kind) << '\n'
        << grid.nx() << ' ' << grid.ny() << '\n'
        << detail::format_number(e.x_min) << ' ' << detail::format_number(e.x_max) << ' '
        << detail::format_number(e.y_min) << ' ' << detail::format_number(e.y_max) << '\n'
        << kPayloadLine << '\n';

    std::vector<std::uint64_t> payload(grid.size());
    const auto values = grid.values();
    std::transform(values.begin(), values.end(), payload.begin(),
                   [](double v) { return to_little_endian(std::bit_cast<std::uint64_t>(v)); });
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 8));
    finish_writing(out, path);
}

AnyGrid read_grid(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");

    if (read_header_line(in, 0) != kMagic)
        throw FormatError("'" + path.string() + "' is not a CRGRID file (bad magic)");
    const std::string kind = read_header_line(in, 1);
    if (kind != "image" && kind != "sinogram")
        throw FormatError("unknown CRGRID kind '" + kind + "'");

    const auto dims = split_fields(read_header_line(in, 2));
    if (dims.size() != 2)
        throw FormatError("CRGRID dims line must hold two integers");
    const auto ext = split_fields(read_header_line(in, 3));
    if (ext.size() != 4)
        throw FormatError("CRGRID extent line must hold four numbers");
    if (read_header_line(in, 4) != kPayloadLine)
        throw FormatError("unsupported CRGRID payload encoding");

    GridShape shape{parse_size(dims[0]), parse_size(dims[1]), {}};
    try {
        shape.extent = Extent{detail::parse_number(ext[0]), detail::parse_number(ext[1]), detail::parse_number(ext[2]),
                              detail::parse_number(ext[3])};
    }
    catch (const DomainError& err) {
        throw FormatError(std::string("bad CRGRID extent: ") + err.what());
    }

    const auto header_end = in.tellg();
    in.seekg(0, std::ios::end);
    const auto file_end = in.tellg();
    in.seekg(header_end);
    const auto expected = static_cast<std::streamoff>(shape.size() * 8);
    if (file_end - header_end != expected)
        throw FormatError("CRGRID payload size mismatch: expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(static_cast<long long>(file_end - header_end)));

    std::vector<std::uint64_t> payload(shape.size());
    in.read(reinterpret_cast<char*>(payload.data()), expected);
    if (!in)
        throw IoError("failed reading payload of '" + path.string() + "'");

    auto fill = [&payload](auto grid) {
        auto values = grid.values();
        std::transform(payload.begin(), payload.end(), values.begin(),
                       [](std::uint64_t v) { return std::bit_cast<double>(to_little_endian(v)); });
        return grid;
    };
    try {
        if (kind == "image")
            return fill(ImageGrid(shape));
        return fill(Sinogram(shape));
    }
    catch (const DomainError& err) {
        throw FormatError(std::string("invalid CRGRID geometry: ") + err.what());
    }
    catch (const DimensionError& err) {
        throw FormatError(std::string("invalid CRGRID geometry: ") + err.what());
    }
}

ImageGrid read_image(const std::filesystem::path& path)
{
    AnyGrid g = read_grid(path);
    if (auto* img = std::get_if<ImageGrid>(&g))
        return std::move(*img);
    throw FormatError("'" + path.string() + "' holds a sinogram, expected an image");
}

Sinogram read_sinogram(const std::filesystem::path& path)
{
    AnyGrid g = read_grid(path);
    if (auto* s = std::get_if<Sinogram>(&g))
        return std::move(*s);
    throw FormatError("'" + path.string() + "' holds an image, expected a sinogram");
}

template <GridKind Kind>
void export_pgm(const UniformGrid<Kind>& grid, const std::filesystem::path& path,
                std::optional<std::pair<double, double>> clip)
{
    const auto values = grid.values();
    for (double v : values) {
        if (!std::isfinite(v))
            throw DomainError("cannot export non-finite values to PGM");
    }
    double lo;
    double hi;
    if (clip) {
        std::tie(lo, hi) = *clip;
        if (!(hi > lo))
            throw DomainError("PGM clip range needs lo < hi");
    }
    else {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
    }

    constexpr double kMaxGray = 65535.0;
    auto gray = [lo, hi](double v) -> std::uint16_t {
        if (!(hi > lo))
            return 32768;
        const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        return static_cast<std::uint16_t>(std::lround(t * kMaxGray));
    };

    std::ofstream out = open_for_writing(path);
    out << "P5\n" << grid.nx() << ' ' << grid.ny() << "\n65535\n";
    std::vector<unsigned char> row(grid.nx() * 2);
    for (std::size_t jj = 0; jj < grid.ny(); ++jj) {
        const std::size_t j = grid.ny() - 1 - jj;
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            const std::uint16_t s = gray(grid(i, j));
            row[2 * i] = static_cast<unsigned char>(s >> 8);
            row[2 * i + 1] = static_cast<unsigned char>(s & 0xffu);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    finish_writing(out, path);
}

template <GridKind Kind>
void export_csv(const UniformGrid<Kind>& grid, const std::filesystem::path& path)
{
    std::ofstream out = open_for_writing(path);
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i)
            out << (i ? "," : "") << detail::format_number(grid(i, j));
        out << '\n';
    }
    finish_writing(out, path);
}

template void write_grid(const ImageGrid&, const std::filesystem::path&);
template void write_grid(const Sinogram&, const std::filesystem::path&);
template void export_pgm(const ImageGrid&, const std::filesystem::path&, std::optional<std::pair<double, double>>);
template void export_pgm(const Sinogram&, const std::filesystem::path&, std::optional<std::pair<double, double>>);
template void export_csv(const ImageGrid&, const std::filesystem::path&);
template void export_csv(const Sinogram&, const std::filesystem::path&);

}  // namespace conetomo
