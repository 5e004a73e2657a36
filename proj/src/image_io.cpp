#include "finslerconv/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace finslerconv {

namespace {

int next_pnm_token(std::istream& in, std::string& tok) {
    tok.clear();
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    return tok.empty() ? EOF : 0;
}

std::uint16_t quantize(double v, int maxval) {
    const double clamped = std::min(1.0, std::max(0.0, v));
    return static_cast<std::uint16_t>(std::lround(clamped * maxval));
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string tok;
    if (next_pnm_token(in, tok) == EOF || tok != "P5")
        throw std::runtime_error("read_pgm: not a binary PGM: " + path);
    int fields[3];
    for (int& f : fields) {
        if (next_pnm_token(in, tok) == EOF) throw std::runtime_error("read_pgm: truncated header");
        f = std::stoi(tok);
    }
    const int width = fields[0];
    const int height = fields[1];
    const int maxval = fields[2];
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("read_pgm: bad header values");

    GrayImage img(height, width);
    const std::size_t n = img.size();
    if (maxval < 256) {
        std::vector<unsigned char> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (!in) throw std::runtime_error("read_pgm: truncated data");
        for (std::size_t i = 0; i < n; ++i) img.data()[i] = raw[i] / static_cast<double>(maxval);
    } else {
        std::vector<unsigned char> raw(2 * n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n));
        if (!in) throw std::runtime_error("read_pgm: truncated data");
        for (std::size_t i = 0; i < n; ++i) {
            const int v = (raw[2 * i] << 8) | raw[2 * i + 1];  // big-endian per P5
            img.data()[i] = v / static_cast<double>(maxval);
        }
    }
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("write_pgm: bit depth must be 8 or 16");
    const int maxval = bit_depth == 8 ? 255 : 65535;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
    if (bit_depth == 8) {
        std::vector<unsigned char> raw(img.size());
        for (std::size_t i = 0; i < img.size(); ++i)
            raw[i] = static_cast<unsigned char>(quantize(img.data()[i], maxval));
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    } else {
        std::vector<unsigned char> raw(2 * img.size());
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::uint16_t v = quantize(img.data()[i], maxval);
            raw[2 * i] = static_cast<unsigned char>(v >> 8);
            raw[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
        }
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed");
}

GrayImage read_png_gray(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("read_png_gray: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("read_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("read_png_gray: decode error in " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);

    // Fold palette/color/alpha down to plain grayscale.
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    const int depth = png_get_bit_depth(png, info);
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> raw(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    GrayImage img(static_cast<int>(height), static_cast<int>(width));
    for (png_uint_32 r = 0; r < height; ++r) {
        const unsigned char* row = raw.data() + r * rowbytes;
        for (png_uint_32 c = 0; c < width; ++c) {
            int v;
            if (depth == 16)
                v = (row[2 * c] << 8) | row[2 * c + 1];
            else
                v = row[c];
            img.at(static_cast<int>(r), static_cast<int>(c)) = v / maxval;
        }
    }
    return img;
}

void write_png_gray(const GrayImage& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("write_png_gray: bit depth must be 8 or 16");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_png_gray: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("write_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("write_png_gray: encode error for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width(), img.height(), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const int maxval = bit_depth == 8 ? 255 : 65535;
    const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * (bit_depth / 8);
    std::vector<unsigned char> row(rowbytes);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const std::uint16_t v = quantize(img.at(r, c), maxval);
            if (bit_depth == 16) {
                row[2 * c] = static_cast<unsigned char>(v >> 8);
                row[2 * c + 1] = static_cast<unsigned char>(v & 0xFF);
            } else {
                row[c] = static_cast<unsigned char>(v);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    return std::equal(suf.rbegin(), suf.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

GrayImage read_image(const std::string& path) {
    if (has_suffix(path, ".png")) return read_png_gray(path);
    if (has_suffix(path, ".pgm")) return read_pgm(path);
    throw std::runtime_error("read_image: unsupported extension: " + path);
}

void write_image(const GrayImage& img, const std::string& path, int bit_depth) {
    if (has_suffix(path, ".png")) {
        write_png_gray(img, path, bit_depth);
    } else if (has_suffix(path, ".pgm")) {
        write_pgm(img, path, bit_depth);
    } else {
        throw std::runtime_error("write_image: unsupported extension: " + path);
    }
}

}  // namespace finslerconv
