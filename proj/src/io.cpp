#include "fdm/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <png.h>

#include "fdm/common.hpp"

namespace fdm {
namespace {

constexpr long long kMaxSamples = 1LL << 28;

void put_f32le(std::string& out, double v, const char* what) {
    if (!is_finite(v)) fail(std::string(what) + ": non-finite sample");
    std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

double get_f32le(const unsigned char* p, const std::string& path, const char* what) {
    std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    float f = std::bit_cast<float>(u);
    if (!std::isfinite(f)) fail(std::string(what) + ": non-finite sample in " + path);
    return static_cast<double>(f);
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(std::string(what) + ": cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return std::move(os).str();
}

void write_file(const std::string& path, const std::string& bytes, const char* what) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(std::string(what) + ": cannot open " + path + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) fail(std::string(what) + ": write failure on " + path);
}

// Splits off the first '\n'-terminated line; the payload starts right after.
std::pair<std::string, std::size_t> first_line(const std::string& bytes, const std::string& path,
                                               const char* what) {
    std::size_t nl = bytes.find('\n');
    if (nl == std::string::npos) fail(std::string(what) + ": malformed header in " + path);
    return {bytes.substr(0, nl), nl + 1};
}

}  // namespace

void save_hsic(const std::string& path, const HsiCube& cube) {
    check(cube.rows >= 1 && cube.cols >= 1 && cube.bands >= 1, "hsic: empty cube");
    char hdr[64];
    std::snprintf(hdr, sizeof hdr, "HSIC 1 %d %d %d\n", cube.rows, cube.cols, cube.bands);
    std::string out = hdr;
    out.reserve(out.size() + cube.data.size() * 4);
    for (double v : cube.data) put_f32le(out, v, "hsic");
    write_file(path, out, "hsic");
}

HsiCube load_hsic(const std::string& path) {
    std::string bytes = read_file(path, "hsic");
    auto [hdr, off] = first_line(bytes, path, "hsic");
    char magic[8] = {};
    int ver = 0, m = 0, n = 0, c = 0;
    if (std::sscanf(hdr.c_str(), "%7s %d %d %d %d", magic, &ver, &m, &n, &c) != 5 ||
        std::string(magic) != "HSIC" || ver != 1)
        fail("hsic: malformed header in " + path);
    if (m < 1 || n < 1 || c < 1) fail("hsic: bad extents in header of " + path);
    long long count = static_cast<long long>(m) * n * c;
    if (count > kMaxSamples) fail("hsic: header extents too large in " + path);

    std::size_t want = static_cast<std::size_t>(count) * 4;
    if (bytes.size() - off < want) fail("hsic: truncated payload in " + path);
    if (bytes.size() - off > want) fail("hsic: trailing bytes in " + path);

    HsiCube cube(m, n, c);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
    for (std::size_t i = 0; i < cube.data.size(); ++i, p += 4)
        cube.data[i] = get_f32le(p, path, "hsic");
    return cube;
}

void save_mosaic(const std::string& path, const MosaicImage& mos) {
    mos.pattern.validate();
    check(mos.im.rows >= 1 && mos.im.cols >= 1, "mosaic file: empty image");
    char hdr[64];
    std::snprintf(hdr, sizeof hdr, "MOSA 1 %d %d %d\n", mos.im.rows, mos.im.cols, mos.pattern.p);
    std::string out = hdr;
    for (std::size_t i = 0; i < mos.pattern.band_at.size(); ++i) {
        if (i) out.push_back(' ');
        out += std::to_string(mos.pattern.band_at[i]);
    }
    out.push_back('\n');
    out.reserve(out.size() + mos.im.v.size() * 4);
    for (double v : mos.im.v) put_f32le(out, v, "mosaic file");
    write_file(path, out, "mosaic file");
}

MosaicImage load_mosaic(const std::string& path) {
    std::string bytes = read_file(path, "mosaic file");
    auto [hdr, off] = first_line(bytes, path, "mosaic file");
    char magic[8] = {};
    int ver = 0, m = 0, n = 0, p = 0;
    if (std::sscanf(hdr.c_str(), "%7s %d %d %d %d", magic, &ver, &m, &n, &p) != 5 ||
        std::string(magic) != "MOSA" || ver != 1)
        fail("mosaic file: malformed header in " + path);
    if (m < 1 || n < 1 || p < 1) fail("mosaic file: bad extents in header of " + path);
    if (static_cast<long long>(m) * n > kMaxSamples || p > 64)
        fail("mosaic file: header extents too large in " + path);

    std::string pat_line;
    {
        std::string rest = bytes.substr(off);
        auto [line, off2] = first_line(rest, path, "mosaic file");
        pat_line = line;
        off += off2;
    }
    MsfaPattern pat;
    pat.p = p;
    std::istringstream ps(pat_line);
    int idx = 0;
    while (ps >> idx) {
        if (idx < 0) fail("mosaic file: band index out of range in " + path);
        pat.band_at.push_back(idx);
    }
    if (pat.band_at.size() != static_cast<std::size_t>(p) * p)
        fail("mosaic file: malformed pattern line in " + path);
    pat.bands = *std::max_element(pat.band_at.begin(), pat.band_at.end()) + 1;
    pat.validate();

    std::size_t want = static_cast<std::size_t>(m) * n * 4;
    if (bytes.size() - off < want) fail("mosaic file: truncated payload in " + path);
    if (bytes.size() - off > want) fail("mosaic file: trailing bytes in " + path);

    MosaicImage mos;
    mos.pattern = pat;
    mos.im = Image(m, n);
    const unsigned char* q = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
    for (std::size_t i = 0; i < mos.im.v.size(); ++i, q += 4)
        mos.im.v[i] = get_f32le(q, path, "mosaic file");
    return mos;
}

namespace {

unsigned char to_byte(double v) {
    double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::floor(c * 255.0 + 0.5));
}

void write_ppm(const std::string& path, int w, int h, const std::vector<unsigned char>& rgb) {
    char hdr[48];
    std::snprintf(hdr, sizeof hdr, "P6\n%d %d\n255\n", w, h);
    std::string out = hdr;
    out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    write_file(path, out, "falsecolor");
}

void write_png(const std::string& path, int w, int h, const std::vector<unsigned char>& rgb) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) fail("falsecolor: cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail("falsecolor: libpng init failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail("falsecolor: png write failure on " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i)
        rows[static_cast<std::size_t>(i)] =
            const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(i) * w * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) fail("falsecolor: write failure on " + path);
}

}  // namespace

void export_falsecolor(const HsiCube& cube, int band_r, int band_g, int band_b,
                       const std::string& path) {
    check(cube.rows >= 1 && cube.cols >= 1 && cube.bands >= 1, "falsecolor: empty cube");
    for (int b : {band_r, band_g, band_b})
        check(b >= 1 && b <= cube.bands, "falsecolor: band index out of range");

    std::vector<unsigned char> rgb(static_cast<std::size_t>(cube.rows) * cube.cols * 3);
    std::size_t k = 0;
    for (int i = 0; i < cube.rows; ++i)
        for (int j = 0; j < cube.cols; ++j) {
            rgb[k++] = to_byte(cube.at(i, j, band_r - 1));
            rgb[k++] = to_byte(cube.at(i, j, band_g - 1));
            rgb[k++] = to_byte(cube.at(i, j, band_b - 1));
        }

    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
        write_png(path, cube.cols, cube.rows, rgb);
    else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
        write_ppm(path, cube.cols, cube.rows, rgb);
    else
        check(false, "falsecolor: unsupported extension (use .png or .ppm)");
}

}  // namespace fdm
