#include "commands.hpp"
#include "config.hpp"

#include "poisonlab/errors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace poisonlab;
using namespace poisonlab::cli;

namespace {

fs::path resolve_out(const std::string& out_flag, const ExperimentConfig& cfg) {
    if (!out_flag.empty()) return fs::path(out_flag);
    if (!cfg.output.dir.empty()) return fs::path(cfg.output.dir);
    if (const char* root = std::getenv("POISONLAB_OUT")) return fs::path(root) / "run";
    throw ConfigError("config: output.dir is empty and neither --out nor POISONLAB_OUT is set");
}

// --seed overrides the seed of the section that drives the command.
void apply_seed(ExperimentConfig& cfg, const std::string& command, std::uint64_t seed) {
    if (command == "generate-data")
        cfg.dataset.seed = seed;
    else if (command == "train-surrogate")
        cfg.surrogate.train.seed = seed;
    else if (command == "poison")
        cfg.attack.seed = seed;
    else if (command == "train-victim")
        cfg.victim.train.seed = seed;
    else if (command == "defend" || command == "tradeoff")
        cfg.defenses.cfg.seed = seed;
    else if (command == "transfer")
        cfg.transfer.seed = seed;
    else if (command == "strip")
        cfg.strip.seed = seed;
}

// repeat r shifts every run-level seed, leaving the dataset untouched.
void apply_repeat(ExperimentConfig& cfg, std::size_t r) {
    if (r == 0) return;
    cfg.surrogate.train.seed += r;
    cfg.victim.train.seed += r;
    cfg.attack.seed += r;
    cfg.defenses.cfg.seed += r;
    cfg.transfer.seed += r;
    cfg.strip.seed += r;
}

void dispatch(const std::string& command, const ExperimentConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    if (command == "generate-data")
        cmd_generate_data(cfg, out);
    else if (command == "train-surrogate")
        cmd_train_surrogate(cfg, out);
    else if (command == "poison")
        cmd_poison(cfg, out);
    else if (command == "train-victim")
        cmd_train_victim(cfg, out);
    else if (command == "evaluate")
        cmd_evaluate(cfg, out);
    else if (command == "defend")
        cmd_defend(cfg, out);
    else if (command == "transfer")
        cmd_transfer(cfg, out);
    else if (command == "strip")
        cmd_strip(cfg, out);
    else if (command == "tradeoff")
        cmd_tradeoff(cfg, out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisonlab: universal backdoor data-poisoning laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    std::size_t repeat = 1;

    app.add_option("--config", config_path, "Experiment config (JSON)");
    app.add_option("--out", out_flag, "Output directory");
    app.add_option("--seed", seed_flag, "Seed override for the command's driving section")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    app.add_option("--repeat", repeat, "Run the command k times with shifted seeds")
        ->check(CLI::PositiveNumber);

    const std::vector<std::string> commands = {
        "generate-data", "train-surrogate", "poison", "train-victim", "evaluate",
        "defend",        "transfer",        "strip",  "tradeoff",     "report"};
    for (const std::string& name : commands) app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "report") {
            if (out_flag.empty())
                throw ConfigError("report: --out is required");
            cmd_report(fs::path(out_flag));
            return 0;
        }

        ExperimentConfig base =
            config_path.empty() ? default_config() : load_config(config_path);
        if (seed_given) apply_seed(base, command, seed_flag);
        const fs::path out_root = resolve_out(out_flag, base);

        if (repeat == 1) {
            dispatch(command, base, out_root);
        } else {
            for (std::size_t r = 0; r < repeat; ++r) {
                ExperimentConfig cfg = base;
                apply_repeat(cfg, r);
                char sub[32];
                std::snprintf(sub, sizeof(sub), "repeat-%03zu", r);
                dispatch(command, cfg, out_root / sub);
            }
        }
        return 0;
    } catch (const MissingArtifact& e) {
        std::cerr << "error: missing-artifact: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
