#include "linerec/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "linerec/errors.hpp"

namespace linerec {

Tensor bilinear_resize_gray(const Tensor& gray, int64_t out_h, int64_t out_w) {
    if (gray.rank() != 2) throw DimensionError("resize: input must be H x W");
    const int64_t H = gray.dim(0), W = gray.dim(1);
    Tensor out({out_h, out_w});
    const double sy = static_cast<double>(H) / static_cast<double>(out_h);
    const double sx = static_cast<double>(W) / static_cast<double>(out_w);
    for (int64_t y = 0; y < out_h; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        int64_t y0 = static_cast<int64_t>(std::floor(fy));
        double wy = fy - static_cast<double>(y0);
        int64_t y0c = std::clamp<int64_t>(y0, 0, H - 1);
        int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, H - 1);
        for (int64_t x = 0; x < out_w; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            int64_t x0 = static_cast<int64_t>(std::floor(fx));
            double wx = fx - static_cast<double>(x0);
            int64_t x0c = std::clamp<int64_t>(x0, 0, W - 1);
            int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, W - 1);
            double top = (1.0 - wx) * gray.at(y0c, x0c) + wx * gray.at(y0c, x1c);
            double bot = (1.0 - wx) * gray.at(y1c, x0c) + wx * gray.at(y1c, x1c);
            out.at(y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

LineImage line_image_from_gray(const Tensor& gray) {
    const int64_t H = gray.dim(0), W = gray.dim(1);
    if (H < 1 || W < 1) throw InputError("image: empty");

    const int64_t target_h = LineImage::kHeight;
    int64_t target_w = static_cast<int64_t>(std::lround(
        static_cast<double>(W) * static_cast<double>(target_h) / static_cast<double>(H)));
    target_w = std::max<int64_t>(target_w, 4);
    Tensor resized =
        (H == target_h && W == target_w) ? gray : bilinear_resize_gray(gray, target_h, target_w);

    const int64_t padded_w = (target_w + 3) / 4 * 4;
    LineImage img;
    img.normalized_width = target_w;
    img.width = padded_w;
    img.pixels = Tensor({target_h, padded_w, 1});
    for (int64_t y = 0; y < target_h; ++y)
        for (int64_t x = 0; x < padded_w; ++x) {
            float p = resized.at(y, std::min(x, target_w - 1));
            img.pixels.at(y, x, 0) = p / 127.5f - 1.0f;
        }
    return img;
}

LineImage load_line_image(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("image: cannot open " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw FormatError("image: not a binary PGM (P5)");

    // Header tokens may be separated by whitespace and '#' comment lines.
    auto next_int = [&is]() -> int64_t {
        for (;;) {
            int c = is.peek();
            if (c == '#') {
                std::string line;
                std::getline(is, line);
                continue;
            }
            if (std::isspace(c)) {
                is.get();
                continue;
            }
            break;
        }
        int64_t v;
        if (!(is >> v)) throw FormatError("image: malformed PGM header");
        return v;
    };
    int64_t w = next_int();
    int64_t h = next_int();
    int64_t maxval = next_int();
    if (w < 1 || h < 1) throw FormatError("image: bad PGM dimensions");
    if (maxval != 255) throw FormatError("image: unsupported maxval (expect 255)");
    is.get();  // single whitespace after maxval

    std::vector<char> bytes(static_cast<size_t>(w * h));
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw FormatError("image: truncated pixel data");

    Tensor gray({h, w});
    for (int64_t i = 0; i < h * w; ++i)
        gray.at(i) = static_cast<float>(static_cast<unsigned char>(bytes[static_cast<size_t>(i)]));
    return line_image_from_gray(gray);
}

void write_pgm(const std::string& path, int64_t h, int64_t w,
               const std::vector<uint8_t>& pixels) {
    if (static_cast<int64_t>(pixels.size()) != h * w)
        throw InputError("write_pgm: pixel count does not match dimensions");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("write_pgm: cannot open " + path);
    os << "P5\n" << w << " " << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()),
             static_cast<std::streamsize>(pixels.size()));
    if (!os) throw InputError("write_pgm: write failed");
}

}  // namespace linerec
