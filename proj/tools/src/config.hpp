#pragma once

#include "poisonlab/defense.hpp"
#include "poisonlab/net.hpp"
#include "poisonlab/poison.hpp"
#include "poisonlab/trigger.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poisonlab::cli {

struct DatasetConfig {
    std::size_t classes = 20;
    std::size_t per_class = 100;
    std::size_t image_size = 32;
    double noise = 0.1;
    std::uint64_t seed = 1;
    double val_fraction = 0.2;
    std::size_t sample_per_class = 25;
};

struct ModelSection {
    std::string arch = "c8-c16-d64";
    TrainConfig train;
};

struct AttackConfig {
    std::string method = "universal"; // universal | baseline | none
    TriggerKind trigger = TriggerKind::Patch;
    std::size_t n = 16;
    std::size_t p = 40;
    std::optional<std::map<std::size_t, std::size_t>> per_class_counts;
    TriggerGeometry geometry;
    std::uint64_t seed = 303;
    bool exclude_target_class_sources = false;

    /// trigger adjusted for baseline methods (patch -> baseline-patch).
    TriggerKind effective_kind() const;
};

struct EvaluationConfig {
    bool exclude_target_class = true;
};

struct DefensesConfig {
    std::vector<std::string> run = {"fine-tune", "fine-prune", "neural-cleanse", "nad"};
    DefenseConfig cfg;
};

struct TransferConfig {
    double observed_fraction = 0.1;
    std::size_t observed_per_class = 1;
    std::vector<std::size_t> budgets;
    std::uint64_t seed = 606;
};

struct StripConfig {
    std::size_t blends_per_input = 8;
    double alpha = 0.5;
    std::size_t num_inputs = 100;
    std::uint64_t seed = 505;
};

struct TradeoffConfig {
    std::vector<double> fractions = {0.01, 0.1, 0.2, 0.4};
    // the clean-data sweep runs hotter than the plain defense defaults
    double lr = 0.001;
    double weight_decay = 0.001;
    std::size_t steps = 500;
};

struct OutputConfig {
    std::string dir;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelSection surrogate;
    ModelSection victim;
    AttackConfig attack;
    EvaluationConfig evaluation;
    DefensesConfig defenses;
    TransferConfig transfer;
    StripConfig strip;
    TradeoffConfig tradeoff;
    OutputConfig output;
};

/// Parses and validates a config file. Unknown keys are rejected with the
/// offending key path in the message.
ExperimentConfig load_config(const std::filesystem::path& path);

ExperimentConfig default_config();

/// Fully resolved (defaults filled in) JSON image of a config; written next
/// to every command's outputs.
nlohmann::json to_json(const ExperimentConfig& cfg);

void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

} // namespace poisonlab::cli
