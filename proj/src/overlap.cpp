#include "polariton/overlap.hpp"

#include "polariton/errors.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace polariton {

namespace {

constexpr double kSquareMicronsToSquareMetres = 1e-12;

void check_compatible(const FieldProfile& f, const FieldProfile& g, const DomainMask& s) {
    f.validate();
    g.validate();
    s.validate();
    if (f.nx != g.nx || f.ny != g.ny || f.nx != s.nx || f.ny != s.ny)
        throw StructuralError("profiles and mask must share grid dimensions");
    auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
    if (!same(f.dx, g.dx) || !same(f.dy, g.dy))
        throw StructuralError("profiles must share grid spacing");
    if (s.dx > 0.0 && (!same(f.dx, s.dx) || !same(f.dy, s.dy)))
        throw StructuralError("mask grid spacing differs from profile spacing");
}

double self_overlap(const FieldProfile& f, const DomainMask& s) {
    double sum = 0.0;
    for (int ix = 0; ix < f.nx; ++ix)
        for (int iy = 0; iy < f.ny; ++iy)
            if (s.contains(ix, iy))
                sum += std::norm(f.at(ix, iy));
    return sum * f.dx * f.dy;
}

double gaussian(double x, double y, double x0, double y0, double sigma) {
    const double r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
    return std::exp(-r2 / (2.0 * sigma * sigma));
}

// Cell-centre coordinate of index i on a grid of n cells spanning `extent`,
// centred on zero.
double cell_centre(int i, int n, double extent) {
    return (i + 0.5) * (extent / n) - 0.5 * extent;
}

struct FixtureParts {
    std::vector<double> central, background, corners;
};

FixtureParts fixture_parts(const FixtureGeometry& g) {
    g.validate();
    FixtureParts p;
    const std::size_t count = static_cast<std::size_t>(g.nx) * g.ny;
    p.central.resize(count);
    p.background.resize(count);
    p.corners.resize(count);
    const double c = g.corner_offset_um;
    for (int ix = 0; ix < g.nx; ++ix) {
        const double x = cell_centre(ix, g.nx, g.extent_x_um);
        for (int iy = 0; iy < g.ny; ++iy) {
            const double y = cell_centre(iy, g.ny, g.extent_y_um);
            const std::size_t k = static_cast<std::size_t>(ix) * g.ny + iy;
            p.central[k] = gaussian(x, y, 0.0, 0.0, g.central_width_um);
            p.background[k] = gaussian(x, y, 0.0, 0.0, g.background_width_um);
            p.corners[k] = gaussian(x, y, c, c, g.corner_width_um) + gaussian(x, y, -c, c, g.corner_width_um) +
                           gaussian(x, y, c, -c, g.corner_width_um) + gaussian(x, y, -c, -c, g.corner_width_um);
        }
    }
    return p;
}

// ---- text format ----------------------------------------------------------

struct Token {
    std::string text;
    int line;
};

class TokenReader {
public:
    explicit TokenReader(const std::filesystem::path& path) : path_(path), in_(path) {
        if (!in_)
            throw FormatError(path.string(), "cannot open file");
    }

    std::string where(int line) const { return path_.string() + ":" + std::to_string(line); }

    std::vector<std::string> header() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::istringstream ss(line);
            std::vector<std::string> parts;
            std::string t;
            while (ss >> t)
                parts.push_back(t);
            header_line_ = line_no_;
            return parts;
        }
        throw FormatError(where(line_no_ + 1), "missing header line \"nx ny dx dy\"");
    }

    int header_line() const { return header_line_; }

    bool next(Token& tok) {
        while (pending_.eof() || !(pending_ >> tok.text)) {
            std::string line;
            if (!std::getline(in_, line))
                return false;
            ++line_no_;
            pending_.clear();
            pending_.str(line);
        }
        tok.line = line_no_;
        return true;
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::istringstream pending_;
    int line_no_ = 0;
    int header_line_ = 0;
};

double parse_double(std::string_view s, const std::string& where, const char* what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw FormatError(where, std::string("invalid ") + what + " \"" + std::string(s) + "\"");
    return v;
}

int parse_int(std::string_view s, const std::string& where, const char* what) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw FormatError(where, std::string("invalid ") + what + " \"" + std::string(s) + "\"");
    return v;
}

struct GridHeader {
    int nx, ny;
    double dx, dy;
};

GridHeader read_header(TokenReader& reader) {
    const auto parts = reader.header();
    const std::string at = reader.where(reader.header_line());
    if (parts.size() != 4)
        throw FormatError(at, "header must contain exactly \"nx ny dx dy\"");
    GridHeader h{parse_int(parts[0], at, "nx"), parse_int(parts[1], at, "ny"),
                 parse_double(parts[2], at, "dx"), parse_double(parts[3], at, "dy")};
    if (h.nx < 2 || h.ny < 2)
        throw FormatError(at, "nx and ny must be >= 2");
    if (!(h.dx > 0.0) || !(h.dy > 0.0))
        throw FormatError(at, "dx and dy must be > 0");
    return h;
}

template <class Write>
void write_atomically(const std::filesystem::path& path, Write&& body) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out)
            throw FormatError(path.string(), "cannot write file");
        body(out);
        if (!out)
            throw FormatError(path.string(), "write failed");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

void FieldProfile::validate() const {
    if (nx < 2 || ny < 2)
        throw DomainError("field profile grid must be at least 2x2");
    if (!(dx > 0.0) || !(dy > 0.0))
        throw DomainError("field profile grid spacing must be > 0");
    if (values.size() != static_cast<std::size_t>(nx) * ny)
        throw StructuralError("field profile value count does not match nx*ny");
    for (const auto& v : values)
        if (v != std::complex<double>{})
            return;
    throw DegenerateProfileError("field profile is identically zero");
}

double DomainMask::area() const {
    std::size_t cells = 0;
    for (auto b : inside)
        cells += b != 0;
    return static_cast<double>(cells) * dx * dy;
}

void DomainMask::validate() const {
    if (nx < 1 || ny < 1 || inside.size() != static_cast<std::size_t>(nx) * ny)
        throw StructuralError("mask cell count does not match nx*ny");
    for (auto b : inside)
        if (b != 0)
            return;
    throw DomainError("mask contains no cells");
}

std::complex<double> overlap_integral(const FieldProfile& f, const FieldProfile& g, const DomainMask& s) {
    check_compatible(f, g, s);
    std::complex<double> sum{};
    for (int ix = 0; ix < f.nx; ++ix)
        for (int iy = 0; iy < f.ny; ++iy)
            if (s.contains(ix, iy))
                sum += std::conj(f.at(ix, iy)) * g.at(ix, iy);
    return sum * (f.dx * f.dy);
}

std::complex<double> overlap_parameter_complex(const FieldProfile& f, const FieldProfile& g,
                                               const DomainMask& s) {
    const auto fg = overlap_integral(f, g, s);
    const double ff = self_overlap(f, s);
    const double gg = self_overlap(g, s);
    if (!(ff > 0.0) || !(gg > 0.0))
        throw DegenerateProfileError("profile has zero self-overlap on the domain");
    return fg / std::sqrt(ff * gg);
}

double overlap_parameter(const FieldProfile& f, const FieldProfile& g, const DomainMask& s) {
    // Cauchy–Schwarz bounds this by 1 up to rounding.
    return std::min(1.0, std::abs(overlap_parameter_complex(f, g, s)));
}

double effective_mode_volume(const FieldProfile& f, const DomainMask& s, double physical_volume_m3) {
    check_compatible(f, f, s);
    if (!(physical_volume_m3 > 0.0))
        throw DomainError("physical mode volume must be > 0");
    const double ff = self_overlap(f, s);
    if (!(ff > 0.0))
        throw DegenerateProfileError("profile has zero self-overlap on the domain");
    return physical_volume_m3 / (ff * kSquareMicronsToSquareMetres);
}

void FixtureGeometry::validate() const {
    if (nx < 2 || ny < 2)
        throw DomainError("fixture grid must be at least 2x2");
    if (!(extent_x_um > 0.0) || !(extent_y_um > 0.0) || !(central_width_um > 0.0) ||
        !(background_width_um > 0.0) || !(corner_width_um > 0.0) || !(corner_offset_um > 0.0))
        throw DomainError("fixture dimensions must be > 0");
    if (!(background_amplitude >= 0.0))
        throw DomainError("background amplitude must be >= 0");
    if (corner_amplitude && !(*corner_amplitude >= 0.0))
        throw DomainError("corner amplitude must be >= 0");
}

double calibrate_corner_amplitude(const FixtureGeometry& geometry) {
    const auto p = fixture_parts(geometry);
    // Σ lc·central − a Σ lc·corners = 0 is linear in a.
    double lc_central = 0.0, lc_corners = 0.0;
    for (std::size_t k = 0; k < p.central.size(); ++k) {
        const double lc = p.central[k] + geometry.background_amplitude * p.background[k];
        lc_central += lc * p.central[k];
        lc_corners += lc * p.corners[k];
    }
    if (!(lc_corners > 0.0))
        throw DomainError("corner lobes do not overlap the LC profile; cannot calibrate");
    return lc_central / lc_corners;
}

FieldProfile synthetic_profile(ProfileKind kind, const FixtureGeometry& geometry) {
    const auto p = fixture_parts(geometry);
    FieldProfile f;
    f.nx = geometry.nx;
    f.ny = geometry.ny;
    f.dx = geometry.extent_x_um / geometry.nx;
    f.dy = geometry.extent_y_um / geometry.ny;
    f.values.resize(p.central.size());
    if (kind == ProfileKind::lc) {
        for (std::size_t k = 0; k < p.central.size(); ++k)
            f.values[k] = p.central[k] + geometry.background_amplitude * p.background[k];
    } else {
        const double a = geometry.corner_amplitude ? *geometry.corner_amplitude
                                                   : calibrate_corner_amplitude(geometry);
        for (std::size_t k = 0; k < p.central.size(); ++k)
            f.values[k] = p.central[k] - a * p.corners[k];
    }
    return f;
}

DomainMask full_mask(const FieldProfile& like) {
    DomainMask m;
    m.nx = like.nx;
    m.ny = like.ny;
    m.dx = like.dx;
    m.dy = like.dy;
    m.inside.assign(static_cast<std::size_t>(like.nx) * like.ny, 1);
    return m;
}

DomainMask central_mask(const FieldProfile& like, double half_x_um, double half_y_um) {
    if (!(half_x_um > 0.0) || !(half_y_um > 0.0))
        throw DomainError("mask half-widths must be > 0");
    DomainMask m = full_mask(like);
    const double ext_x = like.dx * like.nx;
    const double ext_y = like.dy * like.ny;
    for (int ix = 0; ix < like.nx; ++ix) {
        const double x = cell_centre(ix, like.nx, ext_x);
        for (int iy = 0; iy < like.ny; ++iy) {
            const double y = cell_centre(iy, like.ny, ext_y);
            m.inside[static_cast<std::size_t>(ix) * like.ny + iy] =
                (std::abs(x) < half_x_um && std::abs(y) < half_y_um) ? 1 : 0;
        }
    }
    m.validate();
    return m;
}

FieldProfile read_profile(const std::filesystem::path& path) {
    TokenReader reader(path);
    const auto h = read_header(reader);
    FieldProfile f{h.nx, h.ny, h.dx, h.dy, {}};
    const std::size_t count = static_cast<std::size_t>(h.nx) * h.ny;
    f.values.reserve(count);
    Token tok;
    while (reader.next(tok)) {
        const std::string at = reader.where(tok.line);
        if (f.values.size() == count)
            throw FormatError(at, "more than nx*ny entries");
        const auto comma = tok.text.find(',');
        if (comma == std::string::npos)
            throw FormatError(at, "entry \"" + tok.text + "\" is not of the form re,im");
        const std::string_view sv(tok.text);
        const double re = parse_double(sv.substr(0, comma), at, "real part");
        const double im = parse_double(sv.substr(comma + 1), at, "imaginary part");
        f.values.emplace_back(re, im);
    }
    if (f.values.size() != count)
        throw FormatError(reader.where(reader.header_line()),
                          "expected " + std::to_string(count) + " entries, found " + std::to_string(f.values.size()));
    f.validate();
    return f;
}

DomainMask read_mask(const std::filesystem::path& path) {
    TokenReader reader(path);
    const auto h = read_header(reader);
    DomainMask m{h.nx, h.ny, h.dx, h.dy, {}};
    const std::size_t count = static_cast<std::size_t>(h.nx) * h.ny;
    m.inside.reserve(count);
    Token tok;
    while (reader.next(tok)) {
        const std::string at = reader.where(tok.line);
        if (m.inside.size() == count)
            throw FormatError(at, "more than nx*ny entries");
        if (tok.text != "0" && tok.text != "1")
            throw FormatError(at, "mask entry \"" + tok.text + "\" must be 0 or 1");
        m.inside.push_back(tok.text == "1" ? 1 : 0);
    }
    if (m.inside.size() != count)
        throw FormatError(reader.where(reader.header_line()),
                          "expected " + std::to_string(count) + " entries, found " + std::to_string(m.inside.size()));
    try {
        m.validate();
    } catch (const Error& e) {
        throw FormatError(path.string(), e.what());
    }
    return m;
}

void write_profile(const std::filesystem::path& path, const FieldProfile& f) {
    write_atomically(path, [&](std::ostream& out) {
        out << f.nx << ' ' << f.ny << ' ' << std::setprecision(17) << f.dx << ' ' << f.dy << '\n';
        for (int ix = 0; ix < f.nx; ++ix) {
            for (int iy = 0; iy < f.ny; ++iy) {
                const auto v = f.at(ix, iy);
                out << (iy ? " " : "") << v.real() << ',' << v.imag();
            }
            out << '\n';
        }
    });
}

void write_mask(const std::filesystem::path& path, const DomainMask& m) {
    write_atomically(path, [&](std::ostream& out) {
        out << m.nx << ' ' << m.ny << ' ' << std::setprecision(17) << m.dx << ' ' << m.dy << '\n';
        for (int ix = 0; ix < m.nx; ++ix) {
            for (int iy = 0; iy < m.ny; ++iy)
                out << (iy ? " " : "") << (m.contains(ix, iy) ? 1 : 0);
            out << '\n';
        }
    });
}

} // namespace polariton
