#pragma once

#include "poisonlab/image.hpp"
#include "poisonlab/random.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace poisonlab {

enum class Split { Train, Validation, SurrogateSample };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct LabeledSample {
    Image image;
    std::size_t label = 0;
    std::size_t origin = 0; // index in the originally generated dataset
    bool poisoned = false;

    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Ordered labeled samples plus the metadata needed to reproduce them.
/// Immutable by convention once built; manipulations return new datasets.
struct Dataset {
    std::vector<LabeledSample> samples;
    std::size_t num_classes = 0;
    Split split = Split::Train;
    std::uint64_t seed = 0;

    std::size_t size() const { return samples.size(); }

    /// Indices of all samples carrying label y (the D^y view).
    std::vector<std::size_t> indices_of_class(std::size_t y) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Procedural multi-class dataset: every class renders a distinct parametric
/// template (shape kind, position, scale, hue are a pure function of the
/// class id), with per-sample placement jitter and pixel noise controlled by
/// noise_level. noise_level 0 collapses each class to identical images.
Dataset generate(std::size_t num_classes, std::size_t per_class, std::size_t image_size,
                 double noise_level, RandomStream& stream);

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset sample; // surrogate sampling set, drawn from train
};

/// Per-class partition into train/validation, plus a surrogate-sample subset
/// of sample_per_class images per class drawn from the train side. train and
/// validation are disjoint by origin; sample is a subset of train.
SplitResult split_dataset(const Dataset& d, double val_fraction,
                          std::size_t sample_per_class, RandomStream& stream);

/// Directory layout: header.txt (shape, num_classes, split, seed, count) +
/// manifest.csv (file,label,origin,poisoned) + one raw little-endian float32
/// tensor file per sample. store/load round-trips byte-for-byte.
void store(const Dataset& d, const std::filesystem::path& dir);
Dataset load(const std::filesystem::path& dir);

} // namespace poisonlab
