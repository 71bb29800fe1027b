#pragma once

#include <cstddef>
#include <vector>

namespace poisonlab {

/// H x W x C intensity tensor, row-major with interleaved channels
/// (index = (y*width + x)*channels + c). Intensities live in [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c)
        : height(h), width(w), channels(c), pixels(h * w * c, 0.0f) {}

    float& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * channels + c];
    }
    float at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

} // namespace poisonlab
