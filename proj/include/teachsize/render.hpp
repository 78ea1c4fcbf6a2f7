#pragma once

#include "teachsize/drawing.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace teachsize {

enum class Modality { bitmap, coordinates };

std::string_view modality_name(Modality m);
Modality modality_from_name(std::string_view name);

// 8-bit grayscale canvas, row-major, y growing downward (dataset convention).
// 0 = ink, 255 = background.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    friend bool operator==(const Raster&, const Raster&) = default;
};

struct RenderOptions {
    int width = 256;
    int height = 256;
    int stroke_width = 1; // square brush, no anti-aliasing
};

// Strokes drawn as connected black polylines on white; dataset coordinates map
// 1:1 onto the canvas, no scaling or centering.
Raster rasterize(const Drawing& d, const RenderOptions& opts = {});

// Deterministic PNG bytes: 8-bit grayscale, filter 0, stored (uncompressed)
// deflate blocks, so identical input gives identical bytes on any platform.
std::string encode_png(const Raster& r);

std::string to_bitmap(const Drawing& d, const RenderOptions& opts = {});

// One `\draw (x, y) -- (x, y) -- ...;` line per stroke, joined by newlines.
std::string to_tikz(const Drawing& d);

// Standard base64 (RFC 4648, with padding) of the PNG bytes.
std::string encode_image_payload(std::string_view png_bytes);

// One drawing rendered in one modality, ready to show to a learner. The
// payload is PNG bytes for bitmap and TikZ text for coordinates.
struct Stimulus {
    std::string drawing_id;
    std::string concept_name;
    double epsilon = 0.0;
    Modality modality = Modality::bitmap;
    int segment_count = 0;
    std::string payload;
};

Stimulus make_stimulus(const Drawing& d, double epsilon, Modality m,
                       const RenderOptions& opts = {});

} // namespace teachsize
