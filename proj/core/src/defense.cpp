#include "poisonlab/defense.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"
#include "poisonlab/parallel.hpp"
#include "poisonlab/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace poisonlab {

namespace {

double mean_attack_asr(const ModelParams& model, const AttackContext& ctx) {
    std::vector<double> per_class;
    per_class.reserve(ctx.num_classes);
    for (std::size_t y = 0; y < ctx.num_classes; ++y)
        per_class.push_back(
            asr_for_class(model, *ctx.validation, ctx.triggers, y, ctx.exclude_true_class));
    return mean_asr(per_class);
}

// Draws index batches from the trusted set, reshuffling on wraparound.
class BatchSource {
public:
    BatchSource(std::size_t n, std::size_t batch, RandomStream stream)
        : order_(n), batch_(std::min(batch, n)), stream_(std::move(stream)) {
        std::iota(order_.begin(), order_.end(), 0);
        stream_.shuffle(order_);
    }

    std::vector<std::size_t> next() {
        std::vector<std::size_t> idx;
        idx.reserve(batch_);
        for (std::size_t k = 0; k < batch_; ++k) {
            if (pos_ == order_.size()) {
                stream_.shuffle(order_);
                pos_ = 0;
            }
            idx.push_back(order_[pos_++]);
        }
        return idx;
    }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t pos_ = 0;
    RandomStream stream_;
};

// One SGD-with-momentum parameter update from an already-reduced gradient.
void apply_update(ModelParams& model, Gradients& velocity, const Gradients& g, double lr,
                  double momentum) {
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        Layer& l = model.layers[li];
        for (std::size_t j = 0; j < l.w.size(); ++j) {
            velocity.w[li][j] = momentum * velocity.w[li][j] + g.w[li][j];
            l.w[j] -= lr * velocity.w[li][j];
        }
        for (std::size_t j = 0; j < l.b.size(); ++j) {
            velocity.b[li][j] = momentum * velocity.b[li][j] + g.b[li][j];
            l.b[j] -= lr * velocity.b[li][j];
        }
    }
}

// Runs `steps` updates produced by step_grad, checking clean accuracy against
// the cutoff every eval_interval steps. Returns (model, halted): on a cutoff
// violation the last in-cutoff snapshot is returned.
template <typename StepGrad>
std::pair<ModelParams, bool> monitored_descent(ModelParams model, std::size_t steps,
                                               const DefenseConfig& cfg,
                                               const AttackContext& ctx, double baseline_acc,
                                               StepGrad&& step_grad) {
    if (steps == 0) return {std::move(model), false};
    Gradients velocity = Gradients::zeros_like(model);
    ModelParams snapshot = model;
    const std::size_t interval = std::max<std::size_t>(1, cfg.eval_interval);

    for (std::size_t step = 0; step < steps; ++step) {
        const Gradients g = step_grad(model, step);
        apply_update(model, velocity, g, cfg.lr, cfg.momentum);

        if ((step + 1) % interval == 0 || step + 1 == steps) {
            const double acc = clean_accuracy(model, *ctx.validation);
            if (acc < baseline_acc - cfg.accuracy_cutoff) return {std::move(snapshot), true};
            snapshot = model;
        }
    }
    return {std::move(model), false};
}

Gradients trusted_ce_grad(const ModelParams& model, const Dataset& trusted,
                          const std::vector<std::size_t>& idx, double weight_decay) {
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(idx.size());
    labels.reserve(idx.size());
    for (std::size_t i : idx) {
        inputs.push_back(image_to_input(trusted.samples[i].image));
        labels.push_back(trusted.samples[i].label);
    }
    return batch_grad(model, inputs, labels, weight_decay);
}

DefenseOutcome run_fine_tune(const ModelParams& model, const Dataset& trusted,
                             const DefenseConfig& cfg, const AttackContext& ctx) {
    if (trusted.samples.empty()) throw DefenseError("fine_tune: empty trusted set");

    DefenseOutcome out;
    out.asr_before = mean_attack_asr(model, ctx);
    out.clean_acc_before = clean_accuracy(model, *ctx.validation);

    if (cfg.steps == 0) {
        out.model = model;
        out.asr_after = out.asr_before;
        out.clean_acc_after = out.clean_acc_before;
        return out;
    }

    BatchSource batches(trusted.samples.size(), cfg.batch_size,
                        RandomStream(cfg.seed, "defense").fork("finetune"));
    auto [tuned, halted] = monitored_descent(
        model, cfg.steps, cfg, ctx, out.clean_acc_before,
        [&](const ModelParams& m, std::size_t) {
            return trusted_ce_grad(m, trusted, batches.next(), cfg.weight_decay);
        });

    out.model = std::move(tuned);
    out.halted_by_cutoff = halted;
    out.asr_after = mean_attack_asr(out.model, ctx);
    out.clean_acc_after = clean_accuracy(out.model, *ctx.validation);
    return out;
}

} // namespace

Dataset sample_trusted(const Dataset& pool, double fraction, RandomStream& stream) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ConfigError("sample_trusted: fraction must be in (0, 1]");
    const std::size_t want_total = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size()))));
    const std::size_t per_class =
        std::max<std::size_t>(1, want_total / std::max<std::size_t>(1, pool.num_classes));

    Dataset trusted;
    trusted.num_classes = pool.num_classes;
    trusted.split = pool.split;
    trusted.seed = pool.seed;
    for (std::size_t y = 0; y < pool.num_classes; ++y) {
        std::vector<std::size_t> idx = pool.indices_of_class(y);
        stream.shuffle(idx);
        const std::size_t take = std::min(per_class, idx.size());
        for (std::size_t k = 0; k < take; ++k) trusted.samples.push_back(pool.samples[idx[k]]);
    }
    return trusted;
}

DefenseOutcome fine_tune(const ModelParams& model, const Dataset& trusted,
                         const DefenseConfig& cfg, const AttackContext& ctx) {
    return run_fine_tune(model, trusted, cfg, ctx);
}

DefenseOutcome fine_prune(const ModelParams& model, const Dataset& trusted,
                          const DefenseConfig& cfg, const AttackContext& ctx) {
    if (cfg.prune_rate < 0.0 || cfg.prune_rate >= 1.0)
        throw ConfigError("fine_prune: prune_rate must be in [0, 1)");
    std::size_t conv_index = model.layers.size();
    for (std::size_t i = model.layers.size(); i-- > 0;) {
        if (model.layers[i].kind == LayerKind::Conv) {
            conv_index = i;
            break;
        }
    }
    if (conv_index == model.layers.size())
        throw ConfigError("fine_prune: model has no convolutional layer");

    ModelParams pruned = model;
    const Layer& conv = model.layers[conv_index];
    const std::size_t filters = conv.out_c;
    const std::size_t to_prune =
        static_cast<std::size_t>(cfg.prune_rate * static_cast<double>(filters));

    if (to_prune > 0) {
        // mean |activation| per filter over sampled trusted batches
        BatchSource batches(trusted.samples.size(), cfg.batch_size,
                            RandomStream(cfg.seed, "defense").fork("prune-rank"));
        std::vector<double> score(filters, 0.0);
        std::size_t positions = 0;
        for (std::size_t b = 0; b < cfg.sampled_batches; ++b) {
            for (std::size_t i : batches.next()) {
                const Activations cache =
                    forward_cache(model, image_to_input(trusted.samples[i].image));
                const std::vector<double>& act = cache.acts[conv_index + 1];
                const std::size_t spatial = conv.out_h * conv.out_w;
                for (std::size_t pos = 0; pos < spatial; ++pos)
                    for (std::size_t f = 0; f < filters; ++f)
                        score[f] += std::abs(act[pos * filters + f]);
                positions += spatial;
            }
        }
        for (double& s : score) s /= static_cast<double>(positions);

        std::vector<std::size_t> order(filters);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

        Layer& target = pruned.layers[conv_index];
        for (std::size_t k = 0; k < to_prune; ++k) {
            const std::size_t f = order[k];
            target.b[f] = 0.0;
            // conv weights are [ky][kx][in_c][out_c]: stride out_c over filters
            for (std::size_t base = f; base < target.w.size(); base += filters)
                target.w[base] = 0.0;
        }
    }

    DefenseOutcome out = run_fine_tune(pruned, trusted, cfg, ctx);
    // report drift relative to the unpruned input model
    out.asr_before = mean_attack_asr(model, ctx);
    out.clean_acc_before = clean_accuracy(model, *ctx.validation);
    return out;
}

namespace {

struct ReversedTrigger {
    std::vector<double> mask;    // H*W in [0,1]
    std::vector<double> pattern; // H*W*C in [0,1]
};

// Projected gradient descent on x' = (1-m)*x + m*delta toward target class y
// with an L1 penalty on the mask.
ReversedTrigger reverse_trigger_for_class(const ModelParams& model, const Dataset& trusted,
                                          std::size_t y, const DefenseConfig& cfg) {
    const Image& probe = trusted.samples.front().image;
    const std::size_t hw = probe.height * probe.width;
    const std::size_t hwc = hw * probe.channels;

    ReversedTrigger rt;
    rt.mask.assign(hw, 0.1);
    rt.pattern.assign(hwc, 0.5);

    BatchSource batches(trusted.samples.size(), std::min<std::size_t>(cfg.batch_size, 32),
                        RandomStream(cfg.seed, "defense").fork("cleanse/" + std::to_string(y)));

    for (std::size_t step = 0; step < cfg.steps_per_class; ++step) {
        const std::vector<std::size_t> idx = batches.next();
        std::vector<double> dmask(hw, 0.0);
        std::vector<double> dpattern(hwc, 0.0);

        for (std::size_t i : idx) {
            const std::vector<double> base = image_to_input(trusted.samples[i].image);
            std::vector<double> blended(hwc);
            for (std::size_t px = 0; px < hw; ++px)
                for (std::size_t c = 0; c < probe.channels; ++c) {
                    const std::size_t k = px * probe.channels + c;
                    blended[k] = (1.0 - rt.mask[px]) * base[k] + rt.mask[px] * rt.pattern[k];
                }

            const Activations cache = forward_cache(model, blended);
            std::vector<double> dlogits = softmax(cache.acts.back());
            dlogits[y] -= 1.0;
            std::vector<double> dinput;
            backward(model, cache, dlogits, nullptr, &dinput);

            for (std::size_t px = 0; px < hw; ++px) {
                double dm = 0.0;
                for (std::size_t c = 0; c < probe.channels; ++c) {
                    const std::size_t k = px * probe.channels + c;
                    dm += dinput[k] * (rt.pattern[k] - base[k]);
                    dpattern[k] += dinput[k] * rt.mask[px];
                }
                dmask[px] += dm;
            }
        }

        const double inv = 1.0 / static_cast<double>(idx.size());
        for (std::size_t px = 0; px < hw; ++px) {
            const double l1_sub = rt.mask[px] > 0.0 ? cfg.norm_lambda : 0.0;
            rt.mask[px] -= cfg.mask_lr * (dmask[px] * inv + l1_sub);
            rt.mask[px] = std::clamp(rt.mask[px], 0.0, 1.0);
        }
        for (std::size_t k = 0; k < hwc; ++k) {
            rt.pattern[k] -= cfg.mask_lr * dpattern[k] * inv;
            rt.pattern[k] = std::clamp(rt.pattern[k], 0.0, 1.0);
        }
    }

    for (double v : rt.mask)
        if (!std::isfinite(v)) throw DefenseError("neural_cleanse: mask optimization diverged");
    return rt;
}

Image stamp_reversed(const Image& img, const ReversedTrigger& rt) {
    Image out = img;
    const std::size_t hw = img.height * img.width;
    for (std::size_t px = 0; px < hw; ++px)
        for (std::size_t c = 0; c < img.channels; ++c) {
            const std::size_t k = px * img.channels + c;
            const double v = (1.0 - rt.mask[px]) * static_cast<double>(img.pixels[k]) +
                             rt.mask[px] * rt.pattern[k];
            out.pixels[k] = clamp01(static_cast<float>(v));
        }
    return out;
}

} // namespace

NeuralCleanseOutcome neural_cleanse(const ModelParams& model, const Dataset& trusted,
                                    const DefenseConfig& cfg, const AttackContext& ctx) {
    if (trusted.samples.empty()) throw DefenseError("neural_cleanse: empty trusted set");

    NeuralCleanseOutcome nc;
    nc.outcome.asr_before = mean_attack_asr(model, ctx);
    nc.outcome.clean_acc_before = clean_accuracy(model, *ctx.validation);

    const std::size_t classes = model.num_classes;
    std::vector<ReversedTrigger> reversed(classes);
    parallel_chunks(classes, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t y = begin; y < end; ++y)
            reversed[y] = reverse_trigger_for_class(model, trusted, y, cfg);
    });

    nc.mask_l1.resize(classes);
    for (std::size_t y = 0; y < classes; ++y)
        nc.mask_l1[y] = std::accumulate(reversed[y].mask.begin(), reversed[y].mask.end(), 0.0);

    // MAD anomaly index; only small-mask outliers suggest a backdoor
    std::vector<double> sorted = nc.mask_l1;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::vector<double> dev;
    dev.reserve(classes);
    for (double v : nc.mask_l1) dev.push_back(std::abs(v - median));
    std::sort(dev.begin(), dev.end());
    const double mad = dev[dev.size() / 2];
    nc.anomaly_index.resize(classes);
    for (std::size_t y = 0; y < classes; ++y) {
        nc.anomaly_index[y] = std::abs(nc.mask_l1[y] - median) / (1.4826 * mad + 1e-12);
        if (nc.anomaly_index[y] > cfg.anomaly_threshold && nc.mask_l1[y] < median)
            nc.flagged.push_back(y);
    }

    if (cfg.steps == 0) {
        nc.outcome.model = model;
        nc.outcome.asr_after = nc.outcome.asr_before;
        nc.outcome.clean_acc_after = nc.outcome.clean_acc_before;
        return nc;
    }

    // unlearning: half of every batch gets a flagged reversed trigger stamped
    // while keeping its correct label
    BatchSource batches(trusted.samples.size(), cfg.batch_size,
                        RandomStream(cfg.seed, "defense").fork("cleanse-unlearn"));
    RandomStream pick(cfg.seed, "cleanse-pick");
    auto [tuned, halted] = monitored_descent(
        model, cfg.steps, cfg, ctx, nc.outcome.clean_acc_before,
        [&](const ModelParams& m, std::size_t) {
            const std::vector<std::size_t> idx = batches.next();
            std::vector<std::vector<double>> inputs;
            std::vector<std::size_t> labels;
            inputs.reserve(idx.size());
            labels.reserve(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const LabeledSample& s = trusted.samples[idx[k]];
                const bool stamp = !nc.flagged.empty() && k % 2 == 0;
                if (stamp) {
                    const std::size_t fy =
                        nc.flagged[pick.uniform_int(nc.flagged.size())];
                    inputs.push_back(image_to_input(stamp_reversed(s.image, reversed[fy])));
                } else {
                    inputs.push_back(image_to_input(s.image));
                }
                labels.push_back(s.label);
            }
            return batch_grad(m, inputs, labels, cfg.weight_decay);
        });

    nc.outcome.model = std::move(tuned);
    nc.outcome.halted_by_cutoff = halted;
    nc.outcome.asr_after = mean_attack_asr(nc.outcome.model, ctx);
    nc.outcome.clean_acc_after = clean_accuracy(nc.outcome.model, *ctx.validation);
    return nc;
}

namespace {

std::vector<std::size_t> conv_layer_indices(const ModelParams& m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.layers.size(); ++i)
        if (m.layers[i].kind == LayerKind::Conv) idx.push_back(i);
    return idx;
}

struct AttentionMapRaw {
    std::vector<double> g;   // per-position sum of a^p
    std::vector<double> map; // g / ||g||
    double norm = 0.0;
};

AttentionMapRaw attention_from_acts(const std::vector<double>& act, const Layer& l, double p) {
    AttentionMapRaw a;
    const std::size_t spatial = l.out_h * l.out_w;
    a.g.assign(spatial, 0.0);
    for (std::size_t pos = 0; pos < spatial; ++pos) {
        double sum = 0.0;
        for (std::size_t c = 0; c < l.out_c; ++c)
            sum += std::pow(std::abs(act[pos * l.out_c + c]), p);
        a.g[pos] = sum;
    }
    double n2 = 0.0;
    for (double v : a.g) n2 += v * v;
    a.norm = std::sqrt(n2);
    a.map = a.g;
    if (a.norm > 0.0)
        for (double& v : a.map) v /= a.norm;
    return a;
}

} // namespace

double attention_distance(const ModelParams& a, const ModelParams& b, const Image& x,
                          double p) {
    const Activations ca = forward_cache(a, image_to_input(x));
    const Activations cb = forward_cache(b, image_to_input(x));
    double total = 0.0;
    for (std::size_t li : conv_layer_indices(a)) {
        const AttentionMapRaw ma = attention_from_acts(ca.acts[li + 1], a.layers[li], p);
        const AttentionMapRaw mb = attention_from_acts(cb.acts[li + 1], b.layers[li], p);
        double d2 = 0.0;
        for (std::size_t i = 0; i < ma.map.size(); ++i) {
            const double d = ma.map[i] - mb.map[i];
            d2 += d * d;
        }
        total += std::sqrt(d2);
    }
    return total;
}

DefenseOutcome nad(const ModelParams& model, const Dataset& trusted, const DefenseConfig& cfg,
                   const AttackContext& ctx) {
    if (trusted.samples.empty()) throw DefenseError("nad: empty trusted set");

    DefenseOutcome out;
    out.asr_before = mean_attack_asr(model, ctx);
    out.clean_acc_before = clean_accuracy(model, *ctx.validation);

    // teacher: plain fine-tuned clone
    ModelParams teacher = model;
    teacher.role = Role::Teacher;
    {
        BatchSource batches(trusted.samples.size(), cfg.batch_size,
                            RandomStream(cfg.seed, "defense").fork("teacher"));
        Gradients velocity = Gradients::zeros_like(teacher);
        for (std::size_t step = 0; step < cfg.teacher_steps; ++step) {
            const Gradients g = trusted_ce_grad(teacher, trusted, batches.next(), cfg.weight_decay);
            apply_update(teacher, velocity, g, cfg.lr, cfg.momentum);
        }
    }

    if (cfg.steps == 0) {
        out.model = model;
        out.asr_after = out.asr_before;
        out.clean_acc_after = out.clean_acc_before;
        return out;
    }

    const std::vector<std::size_t> conv_layers = conv_layer_indices(model);
    BatchSource batches(trusted.samples.size(), cfg.batch_size,
                        RandomStream(cfg.seed, "defense").fork("student"));

    auto step_grad = [&](const ModelParams& student, std::size_t) {
        const std::vector<std::size_t> idx = batches.next();
        const std::size_t n = idx.size();

        std::vector<Gradients> partial(kParallelChunks);
        parallel_chunks(n, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            Gradients acc = Gradients::zeros_like(student);
            std::vector<std::vector<double>> extra(student.layers.size());
            for (std::size_t k = begin; k < end; ++k) {
                const LabeledSample& s = trusted.samples[idx[k]];
                const std::vector<double> input = image_to_input(s.image);
                const Activations cs = forward_cache(student, input);
                const Activations ct = forward_cache(teacher, input);

                for (auto& e : extra) e.clear();
                for (std::size_t li : conv_layers) {
                    const Layer& l = student.layers[li];
                    const AttentionMapRaw ms = attention_from_acts(cs.acts[li + 1], l, cfg.power);
                    const AttentionMapRaw mt =
                        attention_from_acts(ct.acts[li + 1], teacher.layers[li], cfg.power);

                    const std::size_t spatial = ms.map.size();
                    std::vector<double> dmap(spatial, 0.0);
                    double dist = 0.0;
                    for (std::size_t i = 0; i < spatial; ++i) {
                        const double d = ms.map[i] - mt.map[i];
                        dist += d * d;
                    }
                    dist = std::sqrt(dist);
                    if (dist <= 1e-12 || ms.norm <= 0.0) continue;
                    for (std::size_t i = 0; i < spatial; ++i)
                        dmap[i] = (ms.map[i] - mt.map[i]) / dist;

                    double dot = 0.0;
                    for (std::size_t i = 0; i < spatial; ++i) dot += dmap[i] * ms.map[i];

                    std::vector<double>& e = extra[li];
                    e.assign(spatial * l.out_c, 0.0);
                    for (std::size_t i = 0; i < spatial; ++i) {
                        const double dg = (dmap[i] - dot * ms.map[i]) / ms.norm;
                        for (std::size_t c = 0; c < l.out_c; ++c) {
                            const double a = cs.acts[li + 1][i * l.out_c + c];
                            if (a <= 0.0) continue;
                            e[i * l.out_c + c] = cfg.at_lambda * dg * cfg.power *
                                                 std::pow(a, cfg.power - 1.0);
                        }
                    }
                }

                std::vector<double> dlogits = softmax(cs.acts.back());
                dlogits[s.label] -= 1.0;
                acc.accumulate(backward(student, cs, dlogits, &extra));
            }
            partial[chunk] = std::move(acc);
        });

        Gradients total = Gradients::zeros_like(student);
        for (auto& part : partial)
            if (!part.w.empty()) total.accumulate(part);
        total.scale(1.0 / static_cast<double>(n));
        if (cfg.weight_decay != 0.0) {
            for (std::size_t li = 0; li < student.layers.size(); ++li) {
                for (std::size_t j = 0; j < student.layers[li].w.size(); ++j)
                    total.w[li][j] += cfg.weight_decay * student.layers[li].w[j];
                for (std::size_t j = 0; j < student.layers[li].b.size(); ++j)
                    total.b[li][j] += cfg.weight_decay * student.layers[li].b[j];
            }
        }
        return total;
    };

    auto [tuned, halted] =
        monitored_descent(model, cfg.steps, cfg, ctx, out.clean_acc_before, step_grad);

    out.model = std::move(tuned);
    out.halted_by_cutoff = halted;
    out.asr_after = mean_attack_asr(out.model, ctx);
    out.clean_acc_after = clean_accuracy(out.model, *ctx.validation);
    return out;
}

std::vector<double> strip_scores(const ModelParams& model,
                                 const std::vector<LabeledSample>& inputs,
                                 const Dataset& overlay_pool, std::size_t blends_per_input,
                                 double alpha, RandomStream& stream) {
    if (blends_per_input == 0) throw ConfigError("strip_scores: blends_per_input must be >= 1");
    if (overlay_pool.samples.empty()) throw InputError("strip_scores: empty overlay pool");

    // overlay picks are drawn up-front so scoring can run in parallel
    std::vector<std::size_t> picks(inputs.size() * blends_per_input);
    for (auto& p : picks) p = stream.uniform_int(overlay_pool.samples.size());

    std::vector<double> scores(inputs.size(), 0.0);
    parallel_chunks(inputs.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double entropy_sum = 0.0;
            for (std::size_t b = 0; b < blends_per_input; ++b) {
                const Image& overlay =
                    overlay_pool.samples[picks[i * blends_per_input + b]].image;
                Image blended = inputs[i].image;
                for (std::size_t k = 0; k < blended.pixels.size(); ++k)
                    blended.pixels[k] = clamp01(static_cast<float>(
                        (1.0 - alpha) * static_cast<double>(blended.pixels[k]) +
                        alpha * static_cast<double>(overlay.pixels[k])));
                const std::vector<double> p = softmax(forward(model, blended).logits);
                double h = 0.0;
                for (double v : p)
                    if (v > 0.0) h -= v * std::log(v);
                entropy_sum += h;
            }
            scores[i] = entropy_sum / static_cast<double>(blends_per_input);
        }
    });
    return scores;
}

RocResult roc_curve(const std::vector<double>& scores_clean,
                    const std::vector<double>& scores_poisoned) {
    if (scores_clean.empty() || scores_poisoned.empty())
        throw InputError("roc_curve: both score lists must be non-empty");

    std::vector<double> thresholds;
    thresholds.reserve(scores_clean.size() + scores_poisoned.size());
    thresholds.insert(thresholds.end(), scores_clean.begin(), scores_clean.end());
    thresholds.insert(thresholds.end(), scores_poisoned.begin(), scores_poisoned.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const double n = static_cast<double>(scores_clean.size());
    const double p = static_cast<double>(scores_poisoned.size());

    RocResult roc;
    roc.points.emplace_back(0.0, 0.0);
    auto frac_below = [](const std::vector<double>& v, double t) {
        std::size_t c = 0;
        for (double s : v)
            if (s < t) ++c;
        return c;
    };
    for (double t : thresholds)
        roc.points.emplace_back(static_cast<double>(frac_below(scores_clean, t)) / n,
                                static_cast<double>(frac_below(scores_poisoned, t)) / p);
    roc.points.emplace_back(1.0, 1.0);
    roc.points.erase(std::unique(roc.points.begin(), roc.points.end()), roc.points.end());

    double auc = 0.0;
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        const auto& [x0, y0] = roc.points[i - 1];
        const auto& [x1, y1] = roc.points[i];
        auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    roc.auc = auc;
    return roc;
}

std::vector<TradeoffPoint> clean_data_tradeoff(const ModelParams& model,
                                               const Dataset& clean_pool,
                                               const std::vector<double>& fractions,
                                               const DefenseConfig& cfg,
                                               const AttackContext& ctx) {
    std::vector<TradeoffPoint> curve;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        RandomStream stream(cfg.seed, "tradeoff/" + std::to_string(i));
        const Dataset trusted = sample_trusted(clean_pool, fractions[i], stream);
        DefenseConfig level_cfg = cfg;
        level_cfg.seed = cfg.seed + 104729ull * (i + 1);
        const DefenseOutcome out = fine_tune(model, trusted, level_cfg, ctx);
        curve.push_back({fractions[i], out.asr_after, out.clean_acc_after,
                         out.halted_by_cutoff});
    }
    return curve;
}

std::string roc_to_csv(const RocResult& roc) {
    CsvTable t;
    t.header = {"fpr", "tpr"};
    for (const auto& [fpr, tpr] : roc.points)
        t.rows.push_back({format_double(fpr), format_double(tpr)});
    std::string out = to_csv(t);
    out += "\nauc," + format_double(roc.auc) + "\n";
    return out;
}

std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& curve) {
    CsvTable t;
    t.header = {"fraction", "asr_after", "clean_accuracy_after", "halted"};
    for (const TradeoffPoint& p : curve)
        t.rows.push_back({format_double(p.fraction), format_double(p.asr_after),
                          format_double(p.clean_acc_after), p.halted ? "1" : "0"});
    return to_csv(t);
}

} // namespace poisonlab
