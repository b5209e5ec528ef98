#include "doci/png_image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace doci {

namespace {

struct WriteBuffer {
    std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<WriteBuffer*>(png_get_io_ptr(png));
    buf->out->insert(buf->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadBuffer {
    const std::vector<std::uint8_t>* in;
    std::size_t pos;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<ReadBuffer*>(png_get_io_ptr(png));
    if (buf->pos + len > buf->in->size()) png_error(png, "truncated PNG");
    std::memcpy(data, buf->in->data() + buf->pos, len);
    buf->pos += len;
}

[[noreturn]] void error_cb(png_structp png, png_const_charp msg) {
    (void)png;
    throw Error(ErrorCode::Io, std::string("png: ") + msg);
}

void warning_cb(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    require(image.width() > 0 && image.height() > 0, "cannot encode an empty image");
    std::vector<std::uint8_t> out;
    WriteBuffer buf{&out};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    if (!png) fail(ErrorCode::Internal, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &buf, write_cb, flush_cb);
        png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                     PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<std::uint8_t> row(image.width() * 3);
        for (std::size_t y = 0; y < image.height(); ++y) {
            for (std::size_t x = 0; x < image.width(); ++x) {
                const Rgb c = image(x, y);
                row[3 * x] = c.r;
                row[3 * x + 1] = c.g;
                row[3 * x + 2] = c.b;
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) fail(ErrorCode::BadMagic, "not a PNG stream");
    ReadBuffer buf{&bytes, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    if (!png) fail(ErrorCode::Internal, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    RgbImage image;
    try {
        png_set_read_fn(png, &buf, read_cb);
        png_read_info(png, info);
        png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_set_palette_to_rgb(png);
        png_set_gray_to_rgb(png);
        png_read_update_info(png, info);
        const auto w = png_get_image_width(png, info);
        const auto h = png_get_image_height(png, info);
        image = RgbImage(w, h);
        std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
        for (std::size_t y = 0; y < h; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (std::size_t x = 0; x < w; ++x) image(x, y) = Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    const auto bytes = encode_png(image);
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

void plot_line(RgbImage& img, long x0, long y0, long x1, long y1, Rgb c) {
    const long dx = std::abs(x1 - x0);
    const long dy = -std::abs(y1 - y0);
    const long sx = x0 < x1 ? 1 : -1;
    const long sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    while (true) {
        if (x0 >= 0 && y0 >= 0 && x0 < static_cast<long>(img.width()) && y0 < static_cast<long>(img.height())) {
            img(static_cast<std::size_t>(x0), static_cast<std::size_t>(y0)) = c;
        }
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

RgbImage render_plot(const std::vector<PlotSeries>& series, std::size_t width, std::size_t height) {
    require(width >= 64 && height >= 64, "plot canvas too small");
    RgbImage img(width, height, Rgb{255, 255, 255});
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        require(s.x.size() == s.y.size(), "plot series needs matching x and y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

    const long left = 40, bottom = static_cast<long>(height) - 30, right = static_cast<long>(width) - 15, top = 15;
    const Rgb axis{0, 0, 0};
    plot_line(img, left, bottom, right, bottom, axis);
    plot_line(img, left, bottom, left, top, axis);
    auto px = [&](double x) { return left + std::lround((x - xmin) / (xmax - xmin) * static_cast<double>(right - left)); };
    auto py = [&](double y) { return bottom - std::lround((y - ymin) / (ymax - ymin) * static_cast<double>(bottom - top)); };

    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            const long cx = px(s.x[i]);
            const long cy = py(s.y[i]);
            if (s.connect && i > 0) {
                plot_line(img, px(s.x[i - 1]), py(s.y[i - 1]), cx, cy, s.color);
            } else if (!s.connect) {
                for (long d = -2; d <= 2; ++d) {
                    plot_line(img, cx - 2, cy + d, cx + 2, cy + d, s.color);
                }
            }
        }
    }
    return img;
}

}  // namespace doci
