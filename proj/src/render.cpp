#include "teachsize/render.hpp"

#include "teachsize/errors.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <sstream>

namespace teachsize {

std::string_view modality_name(Modality m) {
    return m == Modality::bitmap ? "bitmap" : "coordinates";
}

Modality modality_from_name(std::string_view name) {
    if (name == "bitmap") return Modality::bitmap;
    if (name == "coordinates") return Modality::coordinates;
    throw ConfigError("unknown modality: " + std::string(name));
}

namespace {

void plot(Raster& r, int x, int y, int brush) {
    const int lo = -(brush - 1) / 2;
    const int hi = brush / 2;
    for (int dy = lo; dy <= hi; ++dy) {
        for (int dx = lo; dx <= hi; ++dx) {
            const int px = x + dx;
            const int py = y + dy;
            if (px >= 0 && px < r.width && py >= 0 && py < r.height) {
                r.pixels[static_cast<size_t>(py) * r.width + px] = 0;
            }
        }
    }
}

void draw_line(Raster& r, Point a, Point b, int brush) {
    // Bresenham, integer-only.
    int x0 = a.x, y0 = a.y, x1 = b.x, y1 = b.y;
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        plot(r, x0, y0, brush);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
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

// --- PNG plumbing -----------------------------------------------------------

uint32_t crc32_of(const uint8_t* data, size_t len, uint32_t crc = 0) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t n = 0; n < 256; ++n) {
            uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    crc = ~crc;
    for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return ~crc;
}

uint32_t adler32_of(const uint8_t* data, size_t len) {
    uint32_t a = 1, b = 0;
    for (size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

void put_be32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>(v >> 16));
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
    put_be32(out, static_cast<uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    put_be32(out, crc32_of(reinterpret_cast<const uint8_t*>(body.data()), body.size()));
}

// zlib stream holding only stored (type 0) deflate blocks. Slightly larger
// files, but byte-stable with no compressor dependency.
std::string zlib_stored(const std::string& raw) {
    std::string out;
    out.push_back(0x78);
    out.push_back(0x01);
    size_t pos = 0;
    const size_t block_max = 65535;
    do {
        const size_t n = std::min(block_max, raw.size() - pos);
        const bool final = pos + n == raw.size();
        out.push_back(final ? 1 : 0);
        out.push_back(static_cast<char>(n & 0xff));
        out.push_back(static_cast<char>(n >> 8));
        out.push_back(static_cast<char>(~n & 0xff));
        out.push_back(static_cast<char>((~n >> 8) & 0xff));
        out.append(raw, pos, n);
        pos += n;
    } while (pos < raw.size());
    put_be32(out, adler32_of(reinterpret_cast<const uint8_t*>(raw.data()), raw.size()));
    return out;
}

} // namespace

Raster rasterize(const Drawing& d, const RenderOptions& opts) {
    Raster r;
    r.width = opts.width;
    r.height = opts.height;
    r.pixels.assign(static_cast<size_t>(opts.width) * opts.height, 255);
    for (const auto& s : d.strokes) {
        for (size_t i = 0; i + 1 < s.points.size(); ++i) {
            draw_line(r, s.points[i], s.points[i + 1], opts.stroke_width);
        }
    }
    return r;
}

std::string encode_png(const Raster& r) {
    static const char sig[] = "\x89PNG\r\n\x1a\n";
    std::string out(sig, 8);

    std::string ihdr;
    put_be32(ihdr, static_cast<uint32_t>(r.width));
    put_be32(ihdr, static_cast<uint32_t>(r.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // no interlace
    put_chunk(out, "IHDR", ihdr);

    std::string raw;
    raw.reserve(static_cast<size_t>(r.height) * (r.width + 1));
    for (int y = 0; y < r.height; ++y) {
        raw.push_back(0); // filter type: none
        raw.append(reinterpret_cast<const char*>(&r.pixels[static_cast<size_t>(y) * r.width]),
                   static_cast<size_t>(r.width));
    }
    put_chunk(out, "IDAT", zlib_stored(raw));
    put_chunk(out, "IEND", std::string());
    return out;
}

std::string to_bitmap(const Drawing& d, const RenderOptions& opts) {
    return encode_png(rasterize(d, opts));
}

std::string to_tikz(const Drawing& d) {
    std::ostringstream os;
    bool first_stroke = true;
    for (const auto& s : d.strokes) {
        if (!first_stroke) os << '\n';
        first_stroke = false;
        os << "\\draw ";
        for (size_t i = 0; i < s.points.size(); ++i) {
            if (i > 0) os << " -- ";
            os << '(' << s.points[i].x << ", " << s.points[i].y << ')';
        }
        os << ';';
    }
    return os.str();
}

std::string encode_image_payload(std::string_view png_bytes) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((png_bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= png_bytes.size()) {
        const uint32_t n = (static_cast<uint8_t>(png_bytes[i]) << 16) |
                           (static_cast<uint8_t>(png_bytes[i + 1]) << 8) |
                           static_cast<uint8_t>(png_bytes[i + 2]);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back(alphabet[n & 63]);
        i += 3;
    }
    const size_t rest = png_bytes.size() - i;
    if (rest == 1) {
        const uint32_t n = static_cast<uint8_t>(png_bytes[i]) << 16;
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        const uint32_t n = (static_cast<uint8_t>(png_bytes[i]) << 16) |
                           (static_cast<uint8_t>(png_bytes[i + 1]) << 8);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

Stimulus make_stimulus(const Drawing& d, double epsilon, Modality m,
                       const RenderOptions& opts) {
    Stimulus st;
    st.drawing_id = d.id;
    st.concept_name = d.concept_name;
    st.epsilon = epsilon;
    st.modality = m;
    st.segment_count = segment_count(d);
    st.payload = m == Modality::bitmap ? to_bitmap(d, opts) : to_tikz(d);
    return st;
}

} // namespace teachsize
