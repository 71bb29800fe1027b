#pragma once

#include "poisonlab/dataset.hpp"
#include "poisonlab/latent_codec.hpp"
#include "poisonlab/net.hpp"
#include "poisonlab/trigger.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poisonlab {

struct PoisonPlan {
    std::size_t total_budget = 0; // p; floor(p/|Y|) rounds, remainder dropped
    TriggerKind kind = TriggerKind::Patch;
    std::size_t n = 16; // encoding length
    TriggerGeometry geometry;
    std::uint64_t seed = 0;
    bool exclude_target_class_sources = false; // ablation knob
    std::vector<std::size_t> excluded_origins; // e.g. the surrogate sample set
};

struct PoisonRecord {
    std::size_t position;     // index in the poisoned dataset
    std::size_t origin;       // origin of the replaced clean sample
    std::size_t source_label;
    std::size_t target_label;
    std::string bits;         // embedded encoding; empty for baselines
};

struct PoisonResult {
    Dataset poisoned;
    std::vector<PoisonRecord> records;
    ClassEncodingTable table;
    LdaProjection projection;
};

/// Full pipeline: sample surrogate latents on d_sample, compress with LDA,
/// encode classes, then run floor(p/|Y|) rounds that draw a source sample
/// without replacement per target class, stamp its trigger, and relabel.
/// The poisoned dataset keeps d_clean's size and order.
PoisonResult poison_dataset(const Dataset& d_clean, const Dataset& d_sample,
                            const ModelParams& surrogate, const PoisonPlan& plan);

/// Same injection loop with an explicit per-class budget (classes absent from
/// the map get zero). Drives the transferability experiments.
PoisonResult poison_with_counts(const Dataset& d_clean, const Dataset& d_sample,
                                const ModelParams& surrogate,
                                const std::map<std::size_t, std::size_t>& per_class_counts,
                                const PoisonPlan& plan);

struct BaselinePoisonResult {
    Dataset poisoned;
    std::vector<PoisonRecord> records;
};

/// Budget loop with per-class random triggers instead of encodings; no
/// surrogate, no LDA. plan.kind must be a baseline kind.
BaselinePoisonResult baseline_poison(const Dataset& d_clean, const PoisonPlan& plan);

/// Audit table: origin,source_label,target_label,bits.
std::string records_to_csv(const std::vector<PoisonRecord>& records);

} // namespace poisonlab
