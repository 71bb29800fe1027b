#pragma once

#include "poisonlab/dataset.hpp"
#include "poisonlab/eval.hpp"
#include "poisonlab/net.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace poisonlab {

struct DefenseConfig {
    std::size_t steps = 500;    // fine-tune / unlearning / distillation budget
    double lr = 5e-4;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::size_t batch_size = 128;

    // fine-pruning
    double prune_rate = 0.10; // appendix preset; the stricter text preset is 0.001
    std::size_t sampled_batches = 10;

    // neural cleanse
    std::size_t steps_per_class = 100;
    double norm_lambda = 5e-4;
    double mask_lr = 0.5; // projected-GD rate for mask/pattern recovery
    double anomaly_threshold = 2.0;

    // attention distillation
    std::size_t teacher_steps = 100;
    double power = 2.0;
    double at_lambda = 1000.0;

    double clean_fraction = 0.01;  // trusted share of the training data
    double accuracy_cutoff = 0.02; // max tolerated clean-accuracy drop
    std::size_t eval_interval = 50;
    std::uint64_t seed = 0;
};

struct DefenseOutcome {
    ModelParams model;
    double asr_before = 0.0;
    double asr_after = 0.0;
    double clean_acc_before = 0.0;
    double clean_acc_after = 0.0;
    bool halted_by_cutoff = false;
};

/// Everything a defense needs to measure the attack it is trying to remove.
struct AttackContext {
    const Dataset* validation = nullptr;
    TriggerProvider triggers;
    std::size_t num_classes = 0;
    bool exclude_true_class = true;
};

/// Class-balanced trusted subset of fraction * |pool| samples.
Dataset sample_trusted(const Dataset& pool, double fraction, RandomStream& stream);

/// SGD fine-tuning on trusted data with weight-decay regularization;
/// clean accuracy is checked against the cutoff every eval_interval steps and
/// the last in-cutoff snapshot is returned when a check fails.
DefenseOutcome fine_tune(const ModelParams& model, const Dataset& trusted,
                         const DefenseConfig& cfg, const AttackContext& ctx);

/// Zeroes the prune_rate fraction of last-conv-layer filters with the lowest
/// mean absolute activation over sampled trusted batches, then fine-tunes.
DefenseOutcome fine_prune(const ModelParams& model, const Dataset& trusted,
                          const DefenseConfig& cfg, const AttackContext& ctx);

struct NeuralCleanseOutcome {
    DefenseOutcome outcome;
    std::vector<double> mask_l1;       // per-class reversed-trigger mask norms
    std::vector<double> anomaly_index; // MAD-based
    std::vector<std::size_t> flagged;  // anomaly > threshold on the small side
};

/// Per-class trigger reverse-engineering (mask + pattern, L1-regularized),
/// MAD outlier flagging, then unlearning fine-tuning on trusted images
/// stamped with the flagged reversed triggers under their correct labels.
NeuralCleanseOutcome neural_cleanse(const ModelParams& model, const Dataset& trusted,
                                    const DefenseConfig& cfg, const AttackContext& ctx);

/// Attention distillation: fine-tunes a teacher copy on trusted data, then
/// trains the student with cross-entropy plus at_lambda times the L2 distance
/// between student and teacher attention maps at every conv layer.
DefenseOutcome nad(const ModelParams& model, const Dataset& trusted, const DefenseConfig& cfg,
                   const AttackContext& ctx);

/// Summed per-conv-layer attention-map L2 distance between two models on one
/// image. Test hook for the distillation objective.
double attention_distance(const ModelParams& a, const ModelParams& b, const Image& x, double p);

/// Mean softmax entropy of each input under blends_per_input random clean
/// overlays at the given blend ratio. Low entropy flags trigger dominance.
std::vector<double> strip_scores(const ModelParams& model,
                                 const std::vector<LabeledSample>& inputs,
                                 const Dataset& overlay_pool, std::size_t blends_per_input,
                                 double alpha, RandomStream& stream);

struct RocResult {
    std::vector<std::pair<double, double>> points; // (fpr, tpr), (0,0) to (1,1)
    double auc = 0.0;
};

/// Threshold sweep treating poisoned as positive, detected when the score is
/// below the threshold; trapezoidal AUC.
RocResult roc_curve(const std::vector<double>& scores_clean,
                    const std::vector<double>& scores_poisoned);

struct TradeoffPoint {
    double fraction = 0.0;
    double asr_after = 0.0;
    double clean_acc_after = 0.0;
    bool halted = false;
};

/// Fine-tunes per trusted fraction and reports the ASR / clean-accuracy curve.
std::vector<TradeoffPoint> clean_data_tradeoff(const ModelParams& model,
                                               const Dataset& clean_pool,
                                               const std::vector<double>& fractions,
                                               const DefenseConfig& cfg,
                                               const AttackContext& ctx);

std::string roc_to_csv(const RocResult& roc);
std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& curve);

} // namespace poisonlab
