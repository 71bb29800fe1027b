#pragma once

#include "poisonlab/dataset.hpp"
#include "poisonlab/latent_codec.hpp"
#include "poisonlab/net.hpp"
#include "poisonlab/poison.hpp"
#include "poisonlab/trigger.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace poisonlab {

/// Maps a target class to the trigger the attacker would craft for it.
using TriggerProvider = std::function<TriggerSpec(std::size_t)>;

TriggerProvider universal_triggers(const ClassEncodingTable& table, TriggerKind kind,
                                   const TriggerGeometry& geometry);
TriggerProvider baseline_triggers(TriggerKind kind, std::uint64_t seed, std::size_t n_bits,
                                  const TriggerGeometry& geometry);

/// Fraction of validation images (true label != y when exclusion is on) that
/// the model classifies as y once y's trigger is stamped on them.
double asr_for_class(const ModelParams& victim, const Dataset& validation,
                     const TriggerProvider& triggers, std::size_t y,
                     bool exclude_true_class = true);

double asr_for_class(const ModelParams& victim, const Dataset& validation,
                     const ClassEncodingTable& table, TriggerKind kind,
                     const TriggerGeometry& geometry, std::size_t y,
                     bool exclude_true_class = true);

/// Unweighted mean over all classes; every class must be present.
double mean_asr(const std::vector<double>& per_class);

/// Top-1 accuracy on untriggered images.
double clean_accuracy(const ModelParams& m, const Dataset& validation);

struct ClassStats {
    double min = 0.0, max = 0.0, mean = 0.0, median = 0.0;
};
ClassStats class_stats(const std::vector<double>& per_class);

struct EvalReport {
    std::vector<double> per_class_asr;
    double mean_asr = 0.0;
    double clean_accuracy = 0.0;
    ClassStats stats;
    std::size_t poison_budget = 0;
    std::uint64_t seed = 0;
};

EvalReport evaluate_attack(const ModelParams& victim, const Dataset& validation,
                           const TriggerProvider& triggers, std::size_t num_classes,
                           std::size_t poison_budget, std::uint64_t seed,
                           bool exclude_true_class = true);

/// One row per class plus a summary row.
std::string report_to_csv(const EvalReport& r);

struct TransferabilitySpec {
    std::vector<std::size_t> observed;  // B: fixed small per-class budget
    std::vector<std::size_t> variation; // A: carries the remaining budget
    std::vector<std::size_t> budgets;   // total poison counts to sweep
    std::size_t observed_per_class = 1;
};

struct TransferPoint {
    std::size_t requested_budget = 0;
    std::size_t effective_poisons = 0;
    double asr_observed = 0.0;
    double asr_variation = 0.0;
};

/// For each budget level: poison (B fixed, remainder spread evenly over A),
/// train a fresh victim, and measure mean ASR restricted to B and to A.
std::vector<TransferPoint> transferability_experiment(
    const Dataset& d_clean, const Dataset& d_sample, const Dataset& validation,
    const ModelParams& surrogate, const TransferabilitySpec& spec, const PoisonPlan& plan,
    const TrainConfig& victim_cfg, const ArchSpec& victim_arch);

std::string transfer_curve_to_csv(const std::vector<TransferPoint>& curve);

/// Spearman rank correlation; used by the trend checks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace poisonlab
