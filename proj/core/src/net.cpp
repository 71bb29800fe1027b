#include "poisonlab/net.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"
#include "poisonlab/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; big-endian hosts are unsupported");

namespace poisonlab {

std::string role_name(Role r) {
    switch (r) {
        case Role::Victim: return "victim";
        case Role::Surrogate: return "surrogate";
        case Role::Teacher: return "teacher";
    }
    return "victim";
}

Role role_from_name(const std::string& name) {
    if (name == "victim") return Role::Victim;
    if (name == "surrogate") return Role::Surrogate;
    if (name == "teacher") return Role::Teacher;
    throw FormatError("unknown model role: " + name);
}

namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kPad = 1;

// conv weight flat index, layout [ky][kx][in_c][out_c]
inline std::size_t widx(std::size_t ky, std::size_t kx, std::size_t ic, std::size_t oc,
                        std::size_t in_c, std::size_t out_c) {
    return ((ky * kKernel + kx) * in_c + ic) * out_c + oc;
}

std::vector<Layer> build_layers(const ArchSpec& arch, std::size_t num_classes) {
    if (num_classes < 2) throw ConfigError("model needs at least 2 classes");
    if (arch.input_h == 0 || arch.input_w == 0 || arch.input_c == 0)
        throw ConfigError("model input shape has a zero dimension");

    std::vector<Layer> layers;
    std::size_t h = arch.input_h, w = arch.input_w, c = arch.input_c;
    bool seen_dense = false;

    for (const std::string& tok : split(arch.desc, '-')) {
        if (tok.size() < 2 || (tok[0] != 'c' && tok[0] != 'd'))
            throw ConfigError("architecture token '" + tok + "' is not cN or dN");
        std::size_t width = 0;
        try {
            width = std::stoull(tok.substr(1));
        } catch (const std::exception&) {
            throw ConfigError("architecture token '" + tok + "' has no numeric width");
        }
        if (width == 0) throw ConfigError("architecture token '" + tok + "' has zero width");

        if (tok[0] == 'c') {
            if (seen_dense)
                throw ConfigError("architecture: conv blocks must precede the dense layer");
            Layer l;
            l.kind = LayerKind::Conv;
            l.relu = true;
            l.stride = 2;
            l.in_h = h;
            l.in_w = w;
            l.in_c = c;
            l.out_c = width;
            l.out_h = (h + 2 * kPad - kKernel) / l.stride + 1;
            l.out_w = (w + 2 * kPad - kKernel) / l.stride + 1;
            if (l.out_h == 0 || l.out_w == 0)
                throw ConfigError("architecture: image too small for conv stack");
            l.w.assign(kKernel * kKernel * l.in_c * l.out_c, 0.0);
            l.b.assign(l.out_c, 0.0);
            h = l.out_h;
            w = l.out_w;
            c = l.out_c;
            layers.push_back(std::move(l));
        } else {
            if (seen_dense)
                throw ConfigError("architecture: exactly one dense penultimate layer expected");
            seen_dense = true;
            Layer l;
            l.kind = LayerKind::Dense;
            l.relu = true;
            l.in_width = h * w * c;
            l.out_width = width;
            l.w.assign(l.in_width * l.out_width, 0.0);
            l.b.assign(l.out_width, 0.0);
            layers.push_back(std::move(l));
        }
    }
    if (!seen_dense)
        throw ConfigError("architecture needs a dense penultimate layer (dN)");

    Layer head;
    head.kind = LayerKind::Dense;
    head.relu = false;
    head.in_width = layers.back().out_width;
    head.out_width = num_classes;
    head.w.assign(head.in_width * head.out_width, 0.0);
    head.b.assign(head.out_width, 0.0);
    layers.push_back(std::move(head));
    return layers;
}

} // namespace

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

ModelParams init_model(const ArchSpec& arch, std::size_t num_classes, RandomStream& stream,
                       Role role) {
    ModelParams m;
    m.arch = arch;
    m.num_classes = num_classes;
    m.layers = build_layers(arch, num_classes);
    m.penultimate_index = m.layers.size() - 1;
    m.role = role;
    m.seed = stream.seed();

    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Layer& l = m.layers[i];
        const std::size_t fan_in =
            l.kind == LayerKind::Conv ? l.in_c * kKernel * kKernel : l.in_width;
        // He scaling for ReLU layers, plain fan-in scaling for the head
        const double stddev = l.relu ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                     : std::sqrt(1.0 / static_cast<double>(fan_in));
        for (double& v : l.w) v = stream.normal(0.0, stddev);
    }
    return m;
}

std::vector<double> image_to_input(const Image& img) {
    std::vector<double> v(img.pixels.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(img.pixels[i]);
    return v;
}

namespace {

void conv_forward(const Layer& l, const std::vector<double>& in, std::vector<double>& out) {
    out.assign(l.out_h * l.out_w * l.out_c, 0.0);
    for (std::size_t oy = 0; oy < l.out_h; ++oy) {
        for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            double* op = &out[(oy * l.out_w + ox) * l.out_c];
            for (std::size_t oc = 0; oc < l.out_c; ++oc) op[oc] = l.b[oc];
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(kPad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(l.in_h)) continue;
                for (std::size_t kx = 0; kx < kKernel; ++kx) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(kPad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(l.in_w)) continue;
                    const double* ip = &in[(static_cast<std::size_t>(iy) * l.in_w +
                                            static_cast<std::size_t>(ix)) * l.in_c];
                    const double* wp = &l.w[widx(ky, kx, 0, 0, l.in_c, l.out_c)];
                    for (std::size_t ic = 0; ic < l.in_c; ++ic) {
                        const double xv = ip[ic];
                        if (xv == 0.0) continue;
                        const double* wrow = wp + ic * l.out_c;
                        for (std::size_t oc = 0; oc < l.out_c; ++oc) op[oc] += xv * wrow[oc];
                    }
                }
            }
            if (l.relu)
                for (std::size_t oc = 0; oc < l.out_c; ++oc) op[oc] = std::max(0.0, op[oc]);
        }
    }
}

void dense_forward(const Layer& l, const std::vector<double>& in, std::vector<double>& out) {
    out.assign(l.out_width, 0.0);
    for (std::size_t o = 0; o < l.out_width; ++o) {
        const double* wrow = &l.w[o * l.in_width];
        double sum = l.b[o];
        for (std::size_t i = 0; i < l.in_width; ++i) sum += wrow[i] * in[i];
        out[o] = l.relu ? std::max(0.0, sum) : sum;
    }
}

void conv_backward(const Layer& l, const std::vector<double>& in, std::vector<double>& dout,
                   const std::vector<double>& out, std::vector<double>& dw,
                   std::vector<double>& db, std::vector<double>* din) {
    if (l.relu) {
        for (std::size_t i = 0; i < dout.size(); ++i)
            if (out[i] <= 0.0) dout[i] = 0.0;
    }
    if (din) din->assign(in.size(), 0.0);
    for (std::size_t oy = 0; oy < l.out_h; ++oy) {
        for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            const double* dop = &dout[(oy * l.out_w + ox) * l.out_c];
            for (std::size_t oc = 0; oc < l.out_c; ++oc) db[oc] += dop[oc];
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(kPad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(l.in_h)) continue;
                for (std::size_t kx = 0; kx < kKernel; ++kx) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(kPad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(l.in_w)) continue;
                    const std::size_t ibase = (static_cast<std::size_t>(iy) * l.in_w +
                                               static_cast<std::size_t>(ix)) * l.in_c;
                    for (std::size_t ic = 0; ic < l.in_c; ++ic) {
                        const double xv = in[ibase + ic];
                        const std::size_t wbase = widx(ky, kx, ic, 0, l.in_c, l.out_c);
                        double dsum = 0.0;
                        for (std::size_t oc = 0; oc < l.out_c; ++oc) {
                            dw[wbase + oc] += xv * dop[oc];
                            dsum += l.w[wbase + oc] * dop[oc];
                        }
                        if (din) (*din)[ibase + ic] += dsum;
                    }
                }
            }
        }
    }
}

void dense_backward(const Layer& l, const std::vector<double>& in, std::vector<double>& dout,
                    const std::vector<double>& out, std::vector<double>& dw,
                    std::vector<double>& db, std::vector<double>* din) {
    if (l.relu) {
        for (std::size_t o = 0; o < dout.size(); ++o)
            if (out[o] <= 0.0) dout[o] = 0.0;
    }
    if (din) din->assign(l.in_width, 0.0);
    for (std::size_t o = 0; o < l.out_width; ++o) {
        const double d = dout[o];
        db[o] += d;
        double* dwrow = &dw[o * l.in_width];
        const double* wrow = &l.w[o * l.in_width];
        if (d != 0.0) {
            for (std::size_t i = 0; i < l.in_width; ++i) {
                dwrow[i] += d * in[i];
                if (din) (*din)[i] += d * wrow[i];
            }
        }
    }
}

} // namespace

Activations forward_cache(const ModelParams& m, const std::vector<double>& input) {
    if (input.size() != m.layers.front().input_size())
        throw DimensionError("forward: input size " + std::to_string(input.size()) +
                             " does not match model input " +
                             std::to_string(m.layers.front().input_size()));
    Activations cache;
    cache.acts.resize(m.layers.size() + 1);
    cache.acts[0] = input;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const Layer& l = m.layers[i];
        if (l.kind == LayerKind::Conv)
            conv_forward(l, cache.acts[i], cache.acts[i + 1]);
        else
            dense_forward(l, cache.acts[i], cache.acts[i + 1]);
    }
    return cache;
}

ForwardResult forward(const ModelParams& m, const Image& x) {
    Activations cache = forward_cache(m, image_to_input(x));
    ForwardResult r;
    r.latent = cache.acts[m.penultimate_index];
    r.logits = cache.acts.back();
    return r;
}

std::size_t predict(const ModelParams& m, const Image& x) {
    const auto logits = forward(m, x).logits;
    return static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Gradients Gradients::zeros_like(const ModelParams& m) {
    Gradients g;
    g.w.resize(m.layers.size());
    g.b.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        g.w[i].assign(m.layers[i].w.size(), 0.0);
        g.b[i].assign(m.layers[i].b.size(), 0.0);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w[i].size(); ++j) w[i][j] += other.w[i][j];
        for (std::size_t j = 0; j < b[i].size(); ++j) b[i][j] += other.b[i][j];
    }
}

void Gradients::scale(double s) {
    for (auto& layer : w)
        for (double& v : layer) v *= s;
    for (auto& layer : b)
        for (double& v : layer) v *= s;
}

Gradients backward(const ModelParams& m, const Activations& cache,
                   const std::vector<double>& dlogits,
                   const std::vector<std::vector<double>>* extra_output_grads,
                   std::vector<double>* input_grad) {
    Gradients g = Gradients::zeros_like(m);
    std::vector<double> dout = dlogits;
    std::vector<double> din;
    for (std::size_t idx = m.layers.size(); idx-- > 0;) {
        const Layer& l = m.layers[idx];
        if (extra_output_grads && !(*extra_output_grads)[idx].empty()) {
            const auto& extra = (*extra_output_grads)[idx];
            if (extra.size() != dout.size())
                throw DimensionError("backward: injected gradient size mismatch at layer " +
                                     std::to_string(idx));
            for (std::size_t i = 0; i < dout.size(); ++i) dout[i] += extra[i];
        }
        const bool want_din = idx > 0 || input_grad != nullptr;
        if (l.kind == LayerKind::Conv)
            conv_backward(l, cache.acts[idx], dout, cache.acts[idx + 1], g.w[idx], g.b[idx],
                          want_din ? &din : nullptr);
        else
            dense_backward(l, cache.acts[idx], dout, cache.acts[idx + 1], g.w[idx], g.b[idx],
                           want_din ? &din : nullptr);
        dout = std::move(din);
        din.clear();
    }
    if (input_grad) *input_grad = std::move(dout);
    return g;
}

Gradients batch_grad(const ModelParams& m, std::span<const std::vector<double>> inputs,
                     std::span<const std::size_t> labels, double weight_decay,
                     double* mean_loss) {
    if (inputs.empty()) throw InputError("batch_grad: empty batch");
    if (inputs.size() != labels.size())
        throw DimensionError("batch_grad: inputs/labels size mismatch");

    const std::size_t n = inputs.size();
    std::vector<Gradients> partial(kParallelChunks);
    std::vector<double> partial_loss(kParallelChunks, 0.0);

    parallel_chunks(n, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Gradients acc = Gradients::zeros_like(m);
        double loss = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            if (labels[i] >= m.num_classes)
                throw InputError("batch_grad: label out of range");
            Activations cache = forward_cache(m, inputs[i]);
            std::vector<double> p = softmax(cache.acts.back());
            loss += -std::log(std::max(p[labels[i]], 1e-300));
            p[labels[i]] -= 1.0; // dCE/dlogits
            acc.accumulate(backward(m, cache, p));
        }
        partial[chunk] = std::move(acc);
        partial_loss[chunk] = loss;
    });

    Gradients total = Gradients::zeros_like(m);
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < kParallelChunks; ++c) {
        if (partial[c].w.empty()) continue;
        total.accumulate(partial[c]);
        loss_sum += partial_loss[c];
    }
    total.scale(1.0 / static_cast<double>(n));
    if (weight_decay != 0.0) {
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            for (std::size_t j = 0; j < m.layers[i].w.size(); ++j)
                total.w[i][j] += weight_decay * m.layers[i].w[j];
            for (std::size_t j = 0; j < m.layers[i].b.size(); ++j)
                total.b[i][j] += weight_decay * m.layers[i].b[j];
        }
    }
    if (mean_loss) *mean_loss = loss_sum / static_cast<double>(n);
    return total;
}

Gradients grad(const ModelParams& m, std::span<const LabeledSample> batch,
               double weight_decay, double* mean_loss) {
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(batch.size());
    labels.reserve(batch.size());
    for (const LabeledSample& s : batch) {
        inputs.push_back(image_to_input(s.image));
        labels.push_back(s.label);
    }
    return batch_grad(m, inputs, labels, weight_decay, mean_loss);
}

namespace {

Image augment_image(const Image& img, RandomStream& stream, std::size_t jitter) {
    const bool flip = stream.uniform() < 0.5;
    const std::size_t span = 2 * jitter + 1;
    const std::ptrdiff_t dy =
        static_cast<std::ptrdiff_t>(stream.uniform_int(span)) - static_cast<std::ptrdiff_t>(jitter);
    const std::ptrdiff_t dx =
        static_cast<std::ptrdiff_t>(stream.uniform_int(span)) - static_cast<std::ptrdiff_t>(jitter);

    Image out(img.height, img.width, img.channels);
    for (std::size_t y = 0; y < img.height; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
        for (std::size_t x = 0; x < img.width; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + dx;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(img.height) || sx < 0 ||
                sx >= static_cast<std::ptrdiff_t>(img.width))
                continue; // zero fill outside the crop
            const std::size_t src_x =
                flip ? img.width - 1 - static_cast<std::size_t>(sx) : static_cast<std::size_t>(sx);
            for (std::size_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(static_cast<std::size_t>(sy), src_x, c);
        }
    }
    return out;
}

} // namespace

double accuracy(const ModelParams& m, const Dataset& d) {
    if (d.samples.empty()) return 0.0;
    std::vector<std::size_t> hits(kParallelChunks, 0);
    parallel_chunks(d.samples.size(), [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::size_t h = 0;
        for (std::size_t i = begin; i < end; ++i)
            if (predict(m, d.samples[i].image) == d.samples[i].label) ++h;
        hits[chunk] = h;
    });
    const std::size_t total = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(d.samples.size());
}

TrainResult train(const ModelParams& m, const Dataset& train_set, const Dataset& validation,
                  const TrainConfig& cfg) {
    if (train_set.num_classes != m.num_classes || validation.num_classes != m.num_classes)
        throw ConfigError("train: dataset class count does not match model");
    if (train_set.samples.empty()) throw ConfigError("train: empty training set");
    if (cfg.batch_size == 0 || cfg.batch_size > train_set.samples.size())
        throw ConfigError("train: batch_size must be in [1, train size]");
    if (cfg.epochs == 0) throw ConfigError("train: epochs must be positive");
    if (cfg.lr < 0.0 || cfg.momentum < 0.0 || cfg.weight_decay < 0.0)
        throw ConfigError("train: negative rate");
    if (cfg.lr_decay_factor <= 0.0) throw ConfigError("train: lr_decay_factor must be positive");

    RandomStream root(cfg.seed, "train");
    RandomStream shuffle_stream = root.fork("shuffle");
    RandomStream augment_stream = root.fork("augment");

    ModelParams model = m;
    Gradients velocity = Gradients::zeros_like(model);

    TrainResult result;
    ModelParams best = model;
    double best_acc = -1.0;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_set.samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.decay_epoch_interval > 0
                              ? cfg.lr / std::pow(cfg.lr_decay_factor,
                                                  static_cast<double>(epoch / cfg.decay_epoch_interval))
                              : cfg.lr;
        shuffle_stream.shuffle(order);

        for (std::size_t start = 0, step = 0; start < order.size();
             start += cfg.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::vector<double>> inputs;
            std::vector<std::size_t> labels;
            inputs.reserve(end - start);
            labels.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const LabeledSample& s = train_set.samples[order[i]];
                inputs.push_back(cfg.augment ? image_to_input(augment_image(s.image, augment_stream, cfg.crop_jitter))
                                             : image_to_input(s.image));
                labels.push_back(s.label);
            }

            double loss = 0.0;
            Gradients g = batch_grad(model, inputs, labels, 0.0, &loss);
            if (!std::isfinite(loss))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                                    " step " + std::to_string(step));

            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                Layer& l = model.layers[li];
                for (std::size_t j = 0; j < l.w.size(); ++j) {
                    velocity.w[li][j] = cfg.momentum * velocity.w[li][j] + g.w[li][j];
                    // decoupled weight decay: active even at lr 0
                    l.w[j] -= lr * velocity.w[li][j] + cfg.weight_decay * l.w[j];
                }
                for (std::size_t j = 0; j < l.b.size(); ++j) {
                    velocity.b[li][j] = cfg.momentum * velocity.b[li][j] + g.b[li][j];
                    l.b[j] -= lr * velocity.b[li][j] + cfg.weight_decay * l.b[j];
                }
            }
        }

        const double val_acc = accuracy(model, validation);
        result.val_accuracy.push_back(val_acc);
        if (val_acc > best_acc) {
            best_acc = val_acc;
            best = model;
            since_best = 0;
        } else {
            if (val_acc == best_acc) best = model; // prefer the later snapshot on ties
            ++since_best;
        }
        if (since_best >= cfg.early_stop_patience) break;
    }

    result.model = std::move(best);
    return result;
}

Matrix extract_latents(const ModelParams& m, const Dataset& d,
                       std::vector<std::size_t>* labels) {
    const std::size_t width = m.latent_width();
    Matrix out(d.samples.size(), width);
    parallel_chunks(d.samples.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const ForwardResult r = forward(m, d.samples[i].image);
            std::copy(r.latent.begin(), r.latent.end(), &out.data[i * width]);
        }
    });
    if (labels) {
        labels->resize(d.samples.size());
        for (std::size_t i = 0; i < d.samples.size(); ++i) (*labels)[i] = d.samples[i].label;
    }
    return out;
}

SpatialMap attention_map(const ModelParams& m, const Image& x, std::size_t layer_index,
                         double p) {
    if (layer_index >= m.layers.size() || m.layers[layer_index].kind != LayerKind::Conv)
        throw ConfigError("attention_map: layer " + std::to_string(layer_index) +
                          " is not convolutional");
    if (p < 1.0) throw ConfigError("attention_map: power must be >= 1");

    const Activations cache = forward_cache(m, image_to_input(x));
    const Layer& l = m.layers[layer_index];
    const std::vector<double>& a = cache.acts[layer_index + 1];

    SpatialMap map;
    map.h = l.out_h;
    map.w = l.out_w;
    map.v.assign(l.out_h * l.out_w, 0.0);
    for (std::size_t pos = 0; pos < map.v.size(); ++pos) {
        double sum = 0.0;
        for (std::size_t c = 0; c < l.out_c; ++c) sum += std::pow(std::abs(a[pos * l.out_c + c]), p);
        map.v[pos] = sum;
    }
    double norm = 0.0;
    for (double v : map.v) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& v : map.v) v /= norm;
    return map;
}

void store_model(const ModelParams& m, const std::filesystem::path& path) {
    std::string header;
    header += "PLNET1\n";
    header += "arch=" + m.arch.desc + "\n";
    header += "input=" + std::to_string(m.arch.input_h) + "x" + std::to_string(m.arch.input_w) +
              "x" + std::to_string(m.arch.input_c) + "\n";
    header += "classes=" + std::to_string(m.num_classes) + "\n";
    header += "penultimate_index=" + std::to_string(m.penultimate_index) + "\n";
    header += "role=" + role_name(m.role) + "\n";
    header += "seed=" + std::to_string(m.seed) + "\n";
    header += "params=" + std::to_string(m.param_count()) + "\n";
    header += "DATA\n";

    std::vector<float> block;
    block.reserve(m.param_count());
    for (const Layer& l : m.layers) {
        for (double v : l.w) block.push_back(static_cast<float>(v));
        for (double v : l.b) block.push_back(static_cast<float>(v));
    }

    std::string bytes = header;
    bytes.resize(header.size() + block.size() * sizeof(float));
    std::memcpy(bytes.data() + header.size(), block.data(), block.size() * sizeof(float));
    write_text_file(path, bytes);
}

ModelParams load_model(const std::filesystem::path& path) {
    const auto bytes = read_binary_file(path);
    const std::string magic = "PLNET1\n";
    const std::string data_tag = "DATA\n";
    std::string text(bytes.begin(), bytes.end());
    if (text.rfind(magic, 0) != 0) throw FormatError("checkpoint: bad magic in " + path.string());
    const auto data_pos = text.find(data_tag);
    if (data_pos == std::string::npos) throw FormatError("checkpoint: missing DATA block");

    ArchSpec arch;
    std::size_t classes = 0, penultimate = 0, params = 0;
    Role role = Role::Victim;
    std::uint64_t seed = 0;
    for (const std::string& line : split(text.substr(magic.size(), data_pos - magic.size()), '\n')) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("checkpoint: malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "arch") {
            arch.desc = val;
        } else if (key == "input") {
            const auto dims = split(val, 'x');
            if (dims.size() != 3) throw FormatError("checkpoint: bad input shape: " + val);
            arch.input_h = std::stoull(dims[0]);
            arch.input_w = std::stoull(dims[1]);
            arch.input_c = std::stoull(dims[2]);
        } else if (key == "classes") {
            classes = std::stoull(val);
        } else if (key == "penultimate_index") {
            penultimate = std::stoull(val);
        } else if (key == "role") {
            role = role_from_name(val);
        } else if (key == "seed") {
            seed = std::stoull(val);
        } else if (key == "params") {
            params = std::stoull(val);
        } else {
            throw FormatError("checkpoint: unknown header key: " + key);
        }
    }

    ModelParams m;
    m.arch = arch;
    m.num_classes = classes;
    m.layers = build_layers(arch, classes);
    m.penultimate_index = m.layers.size() - 1;
    m.role = role;
    m.seed = seed;
    if (penultimate != m.penultimate_index)
        throw FormatError("checkpoint: penultimate_index inconsistent with architecture");
    if (params != m.param_count())
        throw FormatError("checkpoint: parameter count inconsistent with architecture");

    const std::size_t offset = data_pos + data_tag.size();
    if (bytes.size() - offset != params * sizeof(float))
        throw FormatError("checkpoint: parameter block has wrong size");

    const auto* fp = reinterpret_cast<const float*>(bytes.data() + offset);
    std::size_t k = 0;
    for (Layer& l : m.layers) {
        for (double& v : l.w) v = static_cast<double>(fp[k++]);
        for (double& v : l.b) v = static_cast<double>(fp[k++]);
    }
    return m;
}

} // namespace poisonlab
