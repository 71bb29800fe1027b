#pragma once

#include "poisonlab/dataset.hpp"
#include "poisonlab/image.hpp"
#include "poisonlab/matrix.hpp"
#include "poisonlab/random.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace poisonlab {

enum class Role { Victim, Surrogate, Teacher };

std::string role_name(Role r);
Role role_from_name(const std::string& name);

/// Architecture text: dash-separated blocks, e.g. "c8-c16-d64".
///   cN  3x3 convolution, N output channels, stride 2, padding 1, ReLU
///   dN  dense layer of width N, ReLU (the penultimate / latent layer)
/// A linear head of width num_classes is appended at init.
struct ArchSpec {
    std::size_t input_h = 32;
    std::size_t input_w = 32;
    std::size_t input_c = 3;
    std::string desc = "c8-c16-d64";
};

enum class LayerKind { Conv, Dense };

struct Layer {
    LayerKind kind = LayerKind::Dense;
    bool relu = true;
    // conv geometry (3x3 kernel, padding 1)
    std::size_t stride = 2;
    std::size_t in_h = 0, in_w = 0, in_c = 0;
    std::size_t out_h = 0, out_w = 0, out_c = 0;
    // dense geometry
    std::size_t in_width = 0, out_width = 0;
    std::vector<double> w; // conv: [ky][kx][in_c][out_c]; dense: [out][in]
    std::vector<double> b;

    std::size_t output_size() const {
        return kind == LayerKind::Conv ? out_h * out_w * out_c : out_width;
    }
    std::size_t input_size() const {
        return kind == LayerKind::Conv ? in_h * in_w * in_c : in_width;
    }
};

struct ModelParams {
    ArchSpec arch;
    std::size_t num_classes = 0;
    std::vector<Layer> layers;          // last layer is the linear head l
    std::size_t penultimate_index = 0;  // index of the head; f = layers before it
    Role role = Role::Victim;
    std::uint64_t seed = 0;

    std::size_t param_count() const;
    std::size_t latent_width() const { return layers[penultimate_index].in_width; }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lr_decay_factor = 10.0;
    std::size_t decay_epoch_interval = 15;
    std::size_t early_stop_patience = 10;
    bool augment = true;           // random horizontal flip + crop jitter
    std::size_t crop_jitter = 2;   // max shift in pixels per axis
    std::uint64_t seed = 0;
};

ModelParams init_model(const ArchSpec& arch, std::size_t num_classes, RandomStream& stream,
                       Role role = Role::Victim);

std::vector<double> image_to_input(const Image& img);

/// acts[0] is the flat input; acts[i+1] is the (post-ReLU) output of layers[i].
struct Activations {
    std::vector<std::vector<double>> acts;
};

Activations forward_cache(const ModelParams& m, const std::vector<double>& input);

struct ForwardResult {
    std::vector<double> latent; // activation entering the head (f(x))
    std::vector<double> logits; // l(f(x))
};
ForwardResult forward(const ModelParams& m, const Image& x);

std::size_t predict(const ModelParams& m, const Image& x);

std::vector<double> softmax(const std::vector<double>& logits);

struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static Gradients zeros_like(const ModelParams& m);
    void accumulate(const Gradients& other);
    void scale(double s);
};

/// Reverse pass from an arbitrary gradient at the logits. extra_output_grads,
/// when non-null, holds one (possibly empty) vector per layer that is added
/// to that layer's output gradient — the hook used by attention distillation.
/// input_grad, when non-null, receives dLoss/dInput.
Gradients backward(const ModelParams& m, const Activations& cache,
                   const std::vector<double>& dlogits,
                   const std::vector<std::vector<double>>* extra_output_grads = nullptr,
                   std::vector<double>* input_grad = nullptr);

/// Mean softmax cross-entropy gradient over a batch plus the weight-decay
/// term. Deterministic: per-sample gradients are reduced over a fixed number
/// of chunks regardless of the machine's thread count.
Gradients batch_grad(const ModelParams& m, std::span<const std::vector<double>> inputs,
                     std::span<const std::size_t> labels, double weight_decay,
                     double* mean_loss = nullptr);

Gradients grad(const ModelParams& m, std::span<const LabeledSample> batch,
               double weight_decay, double* mean_loss = nullptr);

struct TrainResult {
    ModelParams model;                // best-validation-accuracy snapshot
    std::vector<double> val_accuracy; // one entry per completed epoch
};

TrainResult train(const ModelParams& m, const Dataset& train_set, const Dataset& validation,
                  const TrainConfig& cfg);

double accuracy(const ModelParams& m, const Dataset& d);

/// Latent rows aligned with d (row i = f(x_i)), augmentation-free.
Matrix extract_latents(const ModelParams& m, const Dataset& d,
                       std::vector<std::size_t>* labels = nullptr);

struct SpatialMap {
    std::size_t h = 0, w = 0;
    std::vector<double> v;
};

/// Per-position sum over channels of |activation|^p at a convolutional
/// layer's output, L2-normalized over positions.
SpatialMap attention_map(const ModelParams& m, const Image& x, std::size_t layer_index,
                         double p);

/// Checkpoint: text header (arch, input shape, classes, penultimate index,
/// role, seed, parameter count) + flat little-endian float32 parameter block.
void store_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

} // namespace poisonlab
