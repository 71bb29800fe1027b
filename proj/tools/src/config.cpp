#include "config.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

using nlohmann::json;

namespace poisonlab::cli {

TriggerKind AttackConfig::effective_kind() const {
    if (method != "baseline") return trigger;
    return trigger == TriggerKind::Patch ? TriggerKind::BaselinePatch
                                         : TriggerKind::BaselineBlend;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.surrogate.train.epochs = 30;
    cfg.surrogate.train.seed = 101;
    cfg.victim.train.seed = 202;
    return cfg;
}

namespace {

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw ConfigError("config: unknown key " +
                              (prefix.empty() ? key : prefix + "." + key));
    }
}

template <typename T>
void read_if(const json& obj, const std::string& prefix, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(out);
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for key " +
                          (prefix.empty() ? std::string(key) : prefix + "." + key));
    }
}

void read_train(const json& obj, const std::string& prefix, ModelSection& out) {
    check_keys(obj, prefix,
               {"arch", "epochs", "batch_size", "lr", "momentum", "weight_decay",
                "lr_decay_factor", "decay_epoch_interval", "early_stop_patience", "augment",
                "seed"});
    read_if(obj, prefix, "arch", out.arch);
    read_if(obj, prefix, "epochs", out.train.epochs);
    read_if(obj, prefix, "batch_size", out.train.batch_size);
    read_if(obj, prefix, "lr", out.train.lr);
    read_if(obj, prefix, "momentum", out.train.momentum);
    read_if(obj, prefix, "weight_decay", out.train.weight_decay);
    read_if(obj, prefix, "lr_decay_factor", out.train.lr_decay_factor);
    read_if(obj, prefix, "decay_epoch_interval", out.train.decay_epoch_interval);
    read_if(obj, prefix, "early_stop_patience", out.train.early_stop_patience);
    read_if(obj, prefix, "augment", out.train.augment);
    read_if(obj, prefix, "seed", out.train.seed);
}

std::array<double, 3> read_color(const json& obj, const std::string& prefix, const char* key,
                                 std::array<double, 3> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& arr = obj.at(key);
    if (!arr.is_array() || arr.size() != 3)
        throw ConfigError("config: key " + prefix + "." + key + " must be [r,g,b]");
    std::array<double, 3> c{};
    for (std::size_t i = 0; i < 3; ++i) c[i] = arr[i].get<double>();
    return c;
}

} // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    json root;
    {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config: " + path.string());
        try {
            root = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config: parse failure in " + path.string() + ": " + e.what());
        }
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(root, "",
               {"dataset", "surrogate", "victim", "attack", "evaluation", "defenses",
                "transfer", "strip", "tradeoff", "output"});

    ExperimentConfig cfg = default_config();

    if (root.contains("dataset")) {
        const json& d = root.at("dataset");
        check_keys(d, "dataset",
                   {"classes", "per_class", "image_size", "noise", "seed", "val_fraction",
                    "sample_per_class"});
        read_if(d, "dataset", "classes", cfg.dataset.classes);
        read_if(d, "dataset", "per_class", cfg.dataset.per_class);
        read_if(d, "dataset", "image_size", cfg.dataset.image_size);
        read_if(d, "dataset", "noise", cfg.dataset.noise);
        read_if(d, "dataset", "seed", cfg.dataset.seed);
        read_if(d, "dataset", "val_fraction", cfg.dataset.val_fraction);
        read_if(d, "dataset", "sample_per_class", cfg.dataset.sample_per_class);
    }
    if (root.contains("surrogate")) read_train(root.at("surrogate"), "surrogate", cfg.surrogate);
    if (root.contains("victim")) read_train(root.at("victim"), "victim", cfg.victim);

    if (root.contains("attack")) {
        const json& a = root.at("attack");
        check_keys(a, "attack",
                   {"method", "trigger", "n", "p", "per_class_counts", "cell_size",
                    "origin_row", "origin_col", "alpha", "color0", "color1", "seed",
                    "exclude_target_class_sources"});
        read_if(a, "attack", "method", cfg.attack.method);
        if (cfg.attack.method != "universal" && cfg.attack.method != "baseline" &&
            cfg.attack.method != "none")
            throw ConfigError("config: attack.method must be universal, baseline, or none");
        if (a.contains("trigger")) {
            const std::string t = a.at("trigger").get<std::string>();
            if (t != "patch" && t != "blend")
                throw ConfigError("config: attack.trigger must be patch or blend");
            cfg.attack.trigger = t == "patch" ? TriggerKind::Patch : TriggerKind::Blend;
        }
        read_if(a, "attack", "n", cfg.attack.n);
        read_if(a, "attack", "p", cfg.attack.p);
        if (a.contains("per_class_counts")) {
            const json& m = a.at("per_class_counts");
            if (!m.is_object())
                throw ConfigError("config: attack.per_class_counts must be an object");
            std::map<std::size_t, std::size_t> counts;
            for (const auto& [key, value] : m.items())
                counts[std::stoull(key)] = value.get<std::size_t>();
            cfg.attack.per_class_counts = std::move(counts);
        }
        read_if(a, "attack", "cell_size", cfg.attack.geometry.cell_size);
        read_if(a, "attack", "origin_row", cfg.attack.geometry.origin_row);
        read_if(a, "attack", "origin_col", cfg.attack.geometry.origin_col);
        read_if(a, "attack", "alpha", cfg.attack.geometry.alpha);
        cfg.attack.geometry.color0 = read_color(a, "attack", "color0", cfg.attack.geometry.color0);
        cfg.attack.geometry.color1 = read_color(a, "attack", "color1", cfg.attack.geometry.color1);
        read_if(a, "attack", "seed", cfg.attack.seed);
        read_if(a, "attack", "exclude_target_class_sources",
                cfg.attack.exclude_target_class_sources);
    }

    if (root.contains("evaluation")) {
        const json& e = root.at("evaluation");
        check_keys(e, "evaluation", {"exclude_target_class"});
        read_if(e, "evaluation", "exclude_target_class", cfg.evaluation.exclude_target_class);
    }

    if (root.contains("defenses")) {
        const json& d = root.at("defenses");
        check_keys(d, "defenses",
                   {"run", "steps", "lr", "momentum", "weight_decay", "batch_size",
                    "prune_rate", "sampled_batches", "steps_per_class", "norm_lambda",
                    "mask_lr", "anomaly_threshold", "teacher_steps", "power", "at_lambda",
                    "clean_fraction", "accuracy_cutoff", "eval_interval", "seed"});
        read_if(d, "defenses", "run", cfg.defenses.run);
        for (const std::string& name : cfg.defenses.run)
            if (name != "fine-tune" && name != "fine-prune" && name != "neural-cleanse" &&
                name != "nad")
                throw ConfigError("config: defenses.run has unknown defense " + name);
        read_if(d, "defenses", "steps", cfg.defenses.cfg.steps);
        read_if(d, "defenses", "lr", cfg.defenses.cfg.lr);
        read_if(d, "defenses", "momentum", cfg.defenses.cfg.momentum);
        read_if(d, "defenses", "weight_decay", cfg.defenses.cfg.weight_decay);
        read_if(d, "defenses", "batch_size", cfg.defenses.cfg.batch_size);
        read_if(d, "defenses", "prune_rate", cfg.defenses.cfg.prune_rate);
        read_if(d, "defenses", "sampled_batches", cfg.defenses.cfg.sampled_batches);
        read_if(d, "defenses", "steps_per_class", cfg.defenses.cfg.steps_per_class);
        read_if(d, "defenses", "norm_lambda", cfg.defenses.cfg.norm_lambda);
        read_if(d, "defenses", "mask_lr", cfg.defenses.cfg.mask_lr);
        read_if(d, "defenses", "anomaly_threshold", cfg.defenses.cfg.anomaly_threshold);
        read_if(d, "defenses", "teacher_steps", cfg.defenses.cfg.teacher_steps);
        read_if(d, "defenses", "power", cfg.defenses.cfg.power);
        read_if(d, "defenses", "at_lambda", cfg.defenses.cfg.at_lambda);
        read_if(d, "defenses", "clean_fraction", cfg.defenses.cfg.clean_fraction);
        read_if(d, "defenses", "accuracy_cutoff", cfg.defenses.cfg.accuracy_cutoff);
        read_if(d, "defenses", "eval_interval", cfg.defenses.cfg.eval_interval);
        read_if(d, "defenses", "seed", cfg.defenses.cfg.seed);
    }

    if (root.contains("transfer")) {
        const json& t = root.at("transfer");
        check_keys(t, "transfer",
                   {"observed_fraction", "observed_per_class", "budgets", "seed"});
        read_if(t, "transfer", "observed_fraction", cfg.transfer.observed_fraction);
        read_if(t, "transfer", "observed_per_class", cfg.transfer.observed_per_class);
        read_if(t, "transfer", "budgets", cfg.transfer.budgets);
        read_if(t, "transfer", "seed", cfg.transfer.seed);
    }

    if (root.contains("strip")) {
        const json& s = root.at("strip");
        check_keys(s, "strip", {"blends_per_input", "alpha", "num_inputs", "seed"});
        read_if(s, "strip", "blends_per_input", cfg.strip.blends_per_input);
        read_if(s, "strip", "alpha", cfg.strip.alpha);
        read_if(s, "strip", "num_inputs", cfg.strip.num_inputs);
        read_if(s, "strip", "seed", cfg.strip.seed);
    }

    if (root.contains("tradeoff")) {
        const json& t = root.at("tradeoff");
        check_keys(t, "tradeoff", {"fractions", "lr", "weight_decay", "steps"});
        read_if(t, "tradeoff", "fractions", cfg.tradeoff.fractions);
        read_if(t, "tradeoff", "lr", cfg.tradeoff.lr);
        read_if(t, "tradeoff", "weight_decay", cfg.tradeoff.weight_decay);
        read_if(t, "tradeoff", "steps", cfg.tradeoff.steps);
    }

    if (root.contains("output")) {
        const json& o = root.at("output");
        check_keys(o, "output", {"dir"});
        read_if(o, "output", "dir", cfg.output.dir);
    }

    return cfg;
}

namespace {

json train_to_json(const ModelSection& s) {
    return json{{"arch", s.arch},
                {"epochs", s.train.epochs},
                {"batch_size", s.train.batch_size},
                {"lr", s.train.lr},
                {"momentum", s.train.momentum},
                {"weight_decay", s.train.weight_decay},
                {"lr_decay_factor", s.train.lr_decay_factor},
                {"decay_epoch_interval", s.train.decay_epoch_interval},
                {"early_stop_patience", s.train.early_stop_patience},
                {"augment", s.train.augment},
                {"seed", s.train.seed}};
}

} // namespace

json to_json(const ExperimentConfig& cfg) {
    json root;
    root["dataset"] = {{"classes", cfg.dataset.classes},
                       {"per_class", cfg.dataset.per_class},
                       {"image_size", cfg.dataset.image_size},
                       {"noise", cfg.dataset.noise},
                       {"seed", cfg.dataset.seed},
                       {"val_fraction", cfg.dataset.val_fraction},
                       {"sample_per_class", cfg.dataset.sample_per_class}};
    root["surrogate"] = train_to_json(cfg.surrogate);
    root["victim"] = train_to_json(cfg.victim);

    json attack = {{"method", cfg.attack.method},
                   {"trigger", cfg.attack.trigger == TriggerKind::Patch ? "patch" : "blend"},
                   {"n", cfg.attack.n},
                   {"p", cfg.attack.p},
                   {"cell_size", cfg.attack.geometry.cell_size},
                   {"origin_row", cfg.attack.geometry.origin_row},
                   {"origin_col", cfg.attack.geometry.origin_col},
                   {"alpha", cfg.attack.geometry.alpha},
                   {"color0", cfg.attack.geometry.color0},
                   {"color1", cfg.attack.geometry.color1},
                   {"seed", cfg.attack.seed},
                   {"exclude_target_class_sources", cfg.attack.exclude_target_class_sources}};
    if (cfg.attack.per_class_counts) {
        json counts = json::object();
        for (const auto& [y, k] : *cfg.attack.per_class_counts)
            counts[std::to_string(y)] = k;
        attack["per_class_counts"] = counts;
    }
    root["attack"] = attack;

    root["evaluation"] = {{"exclude_target_class", cfg.evaluation.exclude_target_class}};
    root["defenses"] = {{"run", cfg.defenses.run},
                        {"steps", cfg.defenses.cfg.steps},
                        {"lr", cfg.defenses.cfg.lr},
                        {"momentum", cfg.defenses.cfg.momentum},
                        {"weight_decay", cfg.defenses.cfg.weight_decay},
                        {"batch_size", cfg.defenses.cfg.batch_size},
                        {"prune_rate", cfg.defenses.cfg.prune_rate},
                        {"sampled_batches", cfg.defenses.cfg.sampled_batches},
                        {"steps_per_class", cfg.defenses.cfg.steps_per_class},
                        {"norm_lambda", cfg.defenses.cfg.norm_lambda},
                        {"mask_lr", cfg.defenses.cfg.mask_lr},
                        {"anomaly_threshold", cfg.defenses.cfg.anomaly_threshold},
                        {"teacher_steps", cfg.defenses.cfg.teacher_steps},
                        {"power", cfg.defenses.cfg.power},
                        {"at_lambda", cfg.defenses.cfg.at_lambda},
                        {"clean_fraction", cfg.defenses.cfg.clean_fraction},
                        {"accuracy_cutoff", cfg.defenses.cfg.accuracy_cutoff},
                        {"eval_interval", cfg.defenses.cfg.eval_interval},
                        {"seed", cfg.defenses.cfg.seed}};
    root["transfer"] = {{"observed_fraction", cfg.transfer.observed_fraction},
                        {"observed_per_class", cfg.transfer.observed_per_class},
                        {"budgets", cfg.transfer.budgets},
                        {"seed", cfg.transfer.seed}};
    root["strip"] = {{"blends_per_input", cfg.strip.blends_per_input},
                     {"alpha", cfg.strip.alpha},
                     {"num_inputs", cfg.strip.num_inputs},
                     {"seed", cfg.strip.seed}};
    root["tradeoff"] = {{"fractions", cfg.tradeoff.fractions},
                        {"lr", cfg.tradeoff.lr},
                        {"weight_decay", cfg.tradeoff.weight_decay},
                        {"steps", cfg.tradeoff.steps}};
    root["output"] = {{"dir", cfg.output.dir}};
    return root;
}

void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    write_text_file(path, to_json(cfg).dump(2) + "\n");
}

} // namespace poisonlab::cli
