#include "poisonlab/trigger.hpp"

#include "poisonlab/errors.hpp"

#include <cmath>
#include <string>

namespace poisonlab {

std::string trigger_kind_name(TriggerKind k) {
    switch (k) {
        case TriggerKind::Patch: return "patch";
        case TriggerKind::Blend: return "blend";
        case TriggerKind::BaselinePatch: return "baseline-patch";
        case TriggerKind::BaselineBlend: return "baseline-blend";
    }
    return "patch";
}

TriggerKind trigger_kind_from_name(const std::string& name) {
    if (name == "patch") return TriggerKind::Patch;
    if (name == "blend") return TriggerKind::Blend;
    if (name == "baseline-patch") return TriggerKind::BaselinePatch;
    if (name == "baseline-blend") return TriggerKind::BaselineBlend;
    throw ConfigError("unknown trigger kind: " + name);
}

bool is_baseline_kind(TriggerKind k) {
    return k == TriggerKind::BaselinePatch || k == TriggerKind::BaselineBlend;
}

bool is_patch_kind(TriggerKind k) {
    return k == TriggerKind::Patch || k == TriggerKind::BaselinePatch;
}

GridShape grid_for_bits(std::size_t n) {
    if (n == 0) throw ConfigError("grid_for_bits: need at least one bit");
    GridShape g;
    g.rows = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    if (g.rows == 0) g.rows = 1;
    g.cols = (n + g.rows - 1) / g.rows;
    return g;
}

namespace {

void validate_spec(const Image& x, const TriggerSpec& t) {
    if (t.n_bits == 0) throw ConfigError("trigger: n_bits must be positive");
    if (t.grid.rows * t.grid.cols < t.n_bits)
        throw ConfigError("trigger: grid smaller than bit count");
    if (t.geometry.alpha <= 0.0 || t.geometry.alpha > 1.0)
        throw ConfigError("trigger: alpha must be in (0, 1]");
    if (is_baseline_kind(t.kind)) {
        if (t.cell_colors.size() != t.grid.rows * t.grid.cols)
            throw ConfigError("trigger: baseline needs one color per grid cell");
    } else {
        if (t.bits.size() != t.n_bits)
            throw ConfigError("trigger: bits length does not match n_bits");
        for (char c : t.bits)
            if (c != '0' && c != '1') throw ConfigError("trigger: bits must be 0/1");
    }
    if (is_patch_kind(t.kind)) {
        if (t.geometry.cell_size == 0) throw ConfigError("trigger: cell_size must be positive");
        const std::size_t h = t.geometry.origin_row + t.grid.rows * t.geometry.cell_size;
        const std::size_t w = t.geometry.origin_col + t.grid.cols * t.geometry.cell_size;
        if (h > x.height || w > x.width)
            throw ConfigError("trigger: patch footprint " + std::to_string(h) + "x" +
                              std::to_string(w) + " overflows image " +
                              std::to_string(x.height) + "x" + std::to_string(x.width));
    }
}

std::array<double, 3> cell_color(const TriggerSpec& t, std::size_t cell) {
    if (is_baseline_kind(t.kind)) return t.cell_colors[cell];
    // surplus cells beyond the encoding render as bit-0 color
    const bool one = cell < t.bits.size() && t.bits[cell] == '1';
    return one ? t.geometry.color1 : t.geometry.color0;
}

} // namespace

Image apply(const Image& x, const TriggerSpec& t) {
    if (x.channels != 3) throw DimensionError("apply: expected a 3-channel image");
    validate_spec(x, t);
    Image out = x;

    if (is_patch_kind(t.kind)) {
        const std::size_t cs = t.geometry.cell_size;
        for (std::size_t r = 0; r < t.grid.rows; ++r) {
            for (std::size_t c = 0; c < t.grid.cols; ++c) {
                const auto color = cell_color(t, r * t.grid.cols + c);
                for (std::size_t dy = 0; dy < cs; ++dy) {
                    const std::size_t y = t.geometry.origin_row + r * cs + dy;
                    for (std::size_t dx = 0; dx < cs; ++dx) {
                        const std::size_t px = t.geometry.origin_col + c * cs + dx;
                        for (std::size_t ch = 0; ch < 3; ++ch)
                            out.at(y, px, ch) = clamp01(static_cast<float>(color[ch]));
                    }
                }
            }
        }
    } else {
        const double alpha = t.geometry.alpha;
        for (std::size_t y = 0; y < x.height; ++y) {
            // near-equal rectangle partition of the full image
            const std::size_t r = y * t.grid.rows / x.height;
            for (std::size_t px = 0; px < x.width; ++px) {
                const std::size_t c = px * t.grid.cols / x.width;
                const auto color = cell_color(t, r * t.grid.cols + c);
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const double mixed =
                        (1.0 - alpha) * static_cast<double>(x.at(y, px, ch)) + alpha * color[ch];
                    out.at(y, px, ch) = clamp01(static_cast<float>(mixed));
                }
            }
        }
    }
    return out;
}

std::string decode_patch(const Image& x, const TriggerSpec& geometry) {
    TriggerSpec probe = geometry;
    probe.kind = TriggerKind::Patch;
    probe.bits.assign(probe.n_bits, '0'); // placeholder so validation passes
    validate_spec(x, probe);

    const std::size_t cs = geometry.geometry.cell_size;
    std::string bits(geometry.n_bits, '0');
    for (std::size_t cell = 0; cell < geometry.n_bits; ++cell) {
        const std::size_t r = cell / geometry.grid.cols;
        const std::size_t c = cell % geometry.grid.cols;
        std::size_t votes0 = 0, votes1 = 0;
        for (std::size_t dy = 0; dy < cs; ++dy) {
            const std::size_t y = geometry.geometry.origin_row + r * cs + dy;
            for (std::size_t dx = 0; dx < cs; ++dx) {
                const std::size_t px = geometry.geometry.origin_col + c * cs + dx;
                double d0 = 0.0, d1 = 0.0;
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const double v = static_cast<double>(x.at(y, px, ch));
                    d0 += std::abs(v - geometry.geometry.color0[ch]);
                    d1 += std::abs(v - geometry.geometry.color1[ch]);
                }
                if (d0 < d1)
                    ++votes0;
                else if (d1 < d0)
                    ++votes1;
            }
        }
        if (votes0 == votes1)
            throw DecodeError("decode_patch: ambiguous cell " + std::to_string(cell));
        bits[cell] = votes1 > votes0 ? '1' : '0';
    }
    return bits;
}

TriggerSpec make_baseline(std::size_t class_id, TriggerKind kind, const RandomStream& stream,
                          std::size_t n_bits, const TriggerGeometry& geometry) {
    if (!is_baseline_kind(kind))
        throw ConfigError("make_baseline: kind must be a baseline kind");
    TriggerSpec t;
    t.kind = kind;
    t.n_bits = n_bits;
    t.grid = grid_for_bits(n_bits);
    t.geometry = geometry;
    t.baseline_seed = stream.seed();

    RandomStream colors = stream.fork("baseline-trigger/" + std::to_string(class_id));
    t.cell_colors.resize(t.grid.rows * t.grid.cols);
    for (auto& c : t.cell_colors)
        c = {colors.uniform(), colors.uniform(), colors.uniform()};
    return t;
}

TriggerSpec trigger_for_class(const ClassEncodingTable& table, std::size_t y, TriggerKind kind,
                              const TriggerGeometry& geometry) {
    if (is_baseline_kind(kind))
        throw ConfigError("trigger_for_class: baseline kinds carry no encoding");
    if (y >= table.num_classes())
        throw InputError("trigger_for_class: class " + std::to_string(y) +
                         " not in encoding table");
    TriggerSpec t;
    t.kind = kind;
    t.bits = table.bits[y];
    t.n_bits = t.bits.size();
    t.grid = grid_for_bits(t.n_bits);
    t.geometry = geometry;
    return t;
}

double patch_footprint_fraction(std::size_t n, std::size_t cell_size, std::size_t image_h,
                                std::size_t image_w) {
    const GridShape g = grid_for_bits(n);
    return static_cast<double>(g.rows * cell_size) * static_cast<double>(g.cols * cell_size) /
           (static_cast<double>(image_h) * static_cast<double>(image_w));
}

} // namespace poisonlab
