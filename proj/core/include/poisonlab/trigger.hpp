#pragma once

#include "poisonlab/image.hpp"
#include "poisonlab/latent_codec.hpp"
#include "poisonlab/random.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace poisonlab {

enum class TriggerKind { Patch, Blend, BaselinePatch, BaselineBlend };

std::string trigger_kind_name(TriggerKind k);
TriggerKind trigger_kind_from_name(const std::string& name);

bool is_baseline_kind(TriggerKind k);
bool is_patch_kind(TriggerKind k);

struct GridShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Most-square grid with rows*cols >= n, bits laid out row-major.
GridShape grid_for_bits(std::size_t n);

/// Kind-independent placement and palette parameters.
struct TriggerGeometry {
    std::size_t cell_size = 2;                 // pixels per bit cell (patch kinds)
    std::size_t origin_row = 0, origin_col = 0; // patch anchor, top-left
    double alpha = 0.2;                        // blend ratio (blend kinds)
    std::array<double, 3> color0{0.0, 0.0, 0.0};
    std::array<double, 3> color1{1.0, 1.0, 1.0};
};

struct TriggerSpec {
    TriggerKind kind = TriggerKind::Patch;
    std::string bits;       // empty for baseline kinds
    std::size_t n_bits = 0; // encoding length; grid covers at least this many cells
    GridShape grid;
    TriggerGeometry geometry;
    // baseline kinds: one random color per grid cell
    std::vector<std::array<double, 3>> cell_colors;
    std::uint64_t baseline_seed = 0;
};

/// The embedding operator. Patch kinds overwrite the covered rectangle with
/// the cell grid at the origin; blend kinds partition the whole image into
/// grid cells and mix pixel = (1-alpha)*base + alpha*cell color. The result
/// is clamped to [0,1] and the input is untouched.
Image apply(const Image& x, const TriggerSpec& t);

/// Recovers the bit string from a stamped patch by nearest-palette-color
/// vote per cell. A tied cell vote raises DecodeError.
std::string decode_patch(const Image& x, const TriggerSpec& geometry);

/// Random per-class trigger with the same footprint as the universal patch
/// (or the universal blend grid). Deterministic in (class_id, stream seed).
TriggerSpec make_baseline(std::size_t class_id, TriggerKind kind, const RandomStream& stream,
                          std::size_t n_bits, const TriggerGeometry& geometry);

/// Looks up B_y and wraps it in a TriggerSpec of the requested kind.
TriggerSpec trigger_for_class(const ClassEncodingTable& table, std::size_t y, TriggerKind kind,
                              const TriggerGeometry& geometry);

/// Fraction of an H x W image covered by the n-bit patch at a given cell size.
double patch_footprint_fraction(std::size_t n, std::size_t cell_size, std::size_t image_h,
                                std::size_t image_w);

} // namespace poisonlab
