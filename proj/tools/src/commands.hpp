#pragma once

#include "config.hpp"

#include "poisonlab/errors.hpp"

#include <filesystem>

namespace poisonlab::cli {

/// A required prior artifact (dataset, checkpoint, table) is not on disk.
/// Mapped to exit code 2.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

void cmd_generate_data(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_train_surrogate(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_poison(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_train_victim(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_defend(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_transfer(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_strip(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_tradeoff(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_report(const std::filesystem::path& out);

} // namespace poisonlab::cli
