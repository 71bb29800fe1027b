#include "commands.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/defense.hpp"
#include "poisonlab/eval.hpp"
#include "poisonlab/latent_codec.hpp"
#include "poisonlab/poison.hpp"

#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;
using nlohmann::json;

namespace poisonlab::cli {

namespace {

void require(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw MissingArtifact("missing artifact " + path.string() + " (run `" + producer +
                              "` first)");
}

struct DataBundle {
    Dataset train;
    Dataset validation;
    Dataset sample;
};

DataBundle load_data(const fs::path& out) {
    require(out / "data" / "train" / "header.txt", "generate-data");
    DataBundle d;
    d.train = load(out / "data" / "train");
    d.validation = load(out / "data" / "validation");
    d.sample = load(out / "data" / "sample");
    return d;
}

ArchSpec arch_for(const std::string& desc, const Dataset& d) {
    ArchSpec arch;
    arch.desc = desc;
    if (!d.samples.empty()) {
        arch.input_h = d.samples.front().image.height;
        arch.input_w = d.samples.front().image.width;
        arch.input_c = d.samples.front().image.channels;
    }
    return arch;
}

std::string history_csv(const std::vector<double>& val_accuracy) {
    CsvTable t;
    t.header = {"epoch", "val_accuracy"};
    for (std::size_t e = 0; e < val_accuracy.size(); ++e)
        t.rows.push_back({std::to_string(e), format_double(val_accuracy[e])});
    return to_csv(t);
}

/// Attack-time trigger lookup for the configured method. Universal methods
/// read the encoding table artifact; baselines regenerate from the seed.
TriggerProvider provider_for(const ExperimentConfig& cfg, const fs::path& out) {
    if (cfg.attack.method == "baseline")
        return baseline_triggers(cfg.attack.effective_kind(), cfg.attack.seed, cfg.attack.n,
                                 cfg.attack.geometry);
    require(out / "encodings.csv", "poison");
    const ClassEncodingTable table =
        encoding_table_from_csv(read_text_file(out / "encodings.csv"));
    return universal_triggers(table, cfg.attack.trigger, cfg.attack.geometry);
}

AttackContext attack_context(const ExperimentConfig& cfg, const Dataset& validation,
                             const TriggerProvider& provider) {
    AttackContext ctx;
    ctx.validation = &validation;
    ctx.triggers = provider;
    ctx.num_classes = validation.num_classes;
    ctx.exclude_true_class = cfg.evaluation.exclude_target_class;
    return ctx;
}

} // namespace

void cmd_generate_data(const ExperimentConfig& cfg, const fs::path& out) {
    fs::create_directories(out / "data");
    RandomStream gen_stream(cfg.dataset.seed, "dataset");
    const Dataset full = generate(cfg.dataset.classes, cfg.dataset.per_class,
                                  cfg.dataset.image_size, cfg.dataset.noise, gen_stream);
    RandomStream split_stream(cfg.dataset.seed, "split");
    const SplitResult parts =
        split_dataset(full, cfg.dataset.val_fraction, cfg.dataset.sample_per_class, split_stream);
    store(parts.train, out / "data" / "train");
    store(parts.validation, out / "data" / "validation");
    store(parts.sample, out / "data" / "sample");
    write_resolved_config(cfg, out / "generate-data_config.json");
    std::cerr << "generate-data: " << full.size() << " samples, " << cfg.dataset.classes
              << " classes -> " << (out / "data").string() << "\n";
}

void cmd_train_surrogate(const ExperimentConfig& cfg, const fs::path& out) {
    const DataBundle data = load_data(out);
    RandomStream init_stream(cfg.surrogate.train.seed, "init");
    const ModelParams model = init_model(arch_for(cfg.surrogate.arch, data.train),
                                         data.train.num_classes, init_stream, Role::Surrogate);
    const TrainResult result = train(model, data.train, data.validation, cfg.surrogate.train);
    store_model(result.model, out / "surrogate.ckpt");
    write_text_file(out / "surrogate_history.csv", history_csv(result.val_accuracy));
    write_resolved_config(cfg, out / "train-surrogate_config.json");
    std::cerr << "train-surrogate: best validation accuracy "
              << format_double(*std::max_element(result.val_accuracy.begin(),
                                                 result.val_accuracy.end()))
              << "\n";
}

void cmd_poison(const ExperimentConfig& cfg, const fs::path& out) {
    const DataBundle data = load_data(out);

    PoisonPlan plan;
    plan.total_budget = cfg.attack.p;
    plan.kind = cfg.attack.effective_kind();
    plan.n = cfg.attack.n;
    plan.geometry = cfg.attack.geometry;
    plan.seed = cfg.attack.seed;
    plan.exclude_target_class_sources = cfg.attack.exclude_target_class_sources;
    for (const LabeledSample& s : data.sample.samples) plan.excluded_origins.push_back(s.origin);

    if (cfg.attack.method == "universal") {
        require(out / "surrogate.ckpt", "train-surrogate");
        const ModelParams surrogate = load_model(out / "surrogate.ckpt");
        const PoisonResult result =
            cfg.attack.per_class_counts
                ? poison_with_counts(data.train, data.sample, surrogate,
                                     *cfg.attack.per_class_counts, plan)
                : poison_dataset(data.train, data.sample, surrogate, plan);
        store(result.poisoned, out / "poisoned");
        write_text_file(out / "poison_records.csv", records_to_csv(result.records));
        write_text_file(out / "encodings.csv", encoding_table_to_csv(result.table));
        const auto collisions = encoding_collisions(result.table);
        if (!collisions.empty())
            std::cerr << "poison: warning: " << collisions.size()
                      << " encoding collision group(s); colliding classes share triggers\n";
        std::cerr << "poison: injected " << result.records.size() << " samples\n";
    } else if (cfg.attack.method == "baseline") {
        plan.excluded_origins.clear(); // baselines sample the whole clean set
        const BaselinePoisonResult result = baseline_poison(data.train, plan);
        store(result.poisoned, out / "poisoned");
        write_text_file(out / "poison_records.csv", records_to_csv(result.records));
        std::cerr << "poison: injected " << result.records.size() << " baseline samples\n";
    } else {
        store(data.train, out / "poisoned"); // control: untouched training data
        write_text_file(out / "poison_records.csv",
                        records_to_csv(std::vector<PoisonRecord>{}));
        std::cerr << "poison: method none, stored clean training set\n";
    }
    write_resolved_config(cfg, out / "poison_config.json");
}

void cmd_train_victim(const ExperimentConfig& cfg, const fs::path& out) {
    require(out / "poisoned" / "header.txt", "poison");
    require(out / "data" / "validation" / "header.txt", "generate-data");
    const Dataset poisoned = load(out / "poisoned");
    const Dataset validation = load(out / "data" / "validation");

    RandomStream init_stream(cfg.victim.train.seed, "init");
    const ModelParams model = init_model(arch_for(cfg.victim.arch, poisoned),
                                         poisoned.num_classes, init_stream, Role::Victim);
    const TrainResult result = train(model, poisoned, validation, cfg.victim.train);
    store_model(result.model, out / "victim.ckpt");
    write_text_file(out / "victim_history.csv", history_csv(result.val_accuracy));
    write_resolved_config(cfg, out / "train-victim_config.json");
    std::cerr << "train-victim: best validation accuracy "
              << format_double(*std::max_element(result.val_accuracy.begin(),
                                                 result.val_accuracy.end()))
              << "\n";
}

void cmd_evaluate(const ExperimentConfig& cfg, const fs::path& out) {
    require(out / "victim.ckpt", "train-victim");
    const ModelParams victim = load_model(out / "victim.ckpt");
    require(out / "data" / "validation" / "header.txt", "generate-data");
    const Dataset validation = load(out / "data" / "validation");

    const TriggerProvider provider = provider_for(cfg, out);
    const EvalReport report =
        evaluate_attack(victim, validation, provider, validation.num_classes, cfg.attack.p,
                        cfg.victim.train.seed, cfg.evaluation.exclude_target_class);
    write_text_file(out / "eval_report.csv", report_to_csv(report));
    write_resolved_config(cfg, out / "evaluate_config.json");
    std::cerr << "evaluate: mean ASR " << format_double(report.mean_asr) << ", clean accuracy "
              << format_double(report.clean_accuracy) << "\n";
}

void cmd_defend(const ExperimentConfig& cfg, const fs::path& out) {
    require(out / "victim.ckpt", "train-victim");
    const ModelParams victim = load_model(out / "victim.ckpt");
    const DataBundle data = load_data(out);
    const TriggerProvider provider = provider_for(cfg, out);
    const AttackContext ctx = attack_context(cfg, data.validation, provider);

    RandomStream trusted_stream(cfg.defenses.cfg.seed, "trusted");
    const Dataset trusted =
        sample_trusted(data.train, cfg.defenses.cfg.clean_fraction, trusted_stream);

    CsvTable outcomes;
    outcomes.header = {"defense", "asr_before", "asr_after", "clean_acc_before",
                       "clean_acc_after", "halted"};
    auto add_row = [&outcomes](const std::string& name, const DefenseOutcome& o) {
        outcomes.rows.push_back({name, format_double(o.asr_before), format_double(o.asr_after),
                                 format_double(o.clean_acc_before),
                                 format_double(o.clean_acc_after), o.halted_by_cutoff ? "1" : "0"});
    };

    for (const std::string& name : cfg.defenses.run) {
        std::cerr << "defend: running " << name << "\n";
        if (name == "fine-tune") {
            add_row(name, fine_tune(victim, trusted, cfg.defenses.cfg, ctx));
        } else if (name == "fine-prune") {
            add_row(name, fine_prune(victim, trusted, cfg.defenses.cfg, ctx));
        } else if (name == "neural-cleanse") {
            const NeuralCleanseOutcome nc = neural_cleanse(victim, trusted, cfg.defenses.cfg, ctx);
            add_row(name, nc.outcome);
            CsvTable norms;
            norms.header = {"class", "mask_l1", "anomaly_index", "flagged"};
            for (std::size_t y = 0; y < nc.mask_l1.size(); ++y) {
                const bool flagged =
                    std::find(nc.flagged.begin(), nc.flagged.end(), y) != nc.flagged.end();
                norms.rows.push_back({std::to_string(y), format_double(nc.mask_l1[y]),
                                      format_double(nc.anomaly_index[y]), flagged ? "1" : "0"});
            }
            write_text_file(out / "neural_cleanse_norms.csv", to_csv(norms));
        } else if (name == "nad") {
            add_row(name, nad(victim, trusted, cfg.defenses.cfg, ctx));
        }
    }
    write_text_file(out / "defense_outcomes.csv", to_csv(outcomes));
    write_resolved_config(cfg, out / "defend_config.json");
}

void cmd_transfer(const ExperimentConfig& cfg, const fs::path& out) {
    const DataBundle data = load_data(out);
    require(out / "surrogate.ckpt", "train-surrogate");
    const ModelParams surrogate = load_model(out / "surrogate.ckpt");

    const std::size_t classes = data.train.num_classes;
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), 0);
    RandomStream class_stream(cfg.transfer.seed, "transfer-classes");
    class_stream.shuffle(order);

    TransferabilitySpec spec;
    const std::size_t observed_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.transfer.observed_fraction *
                                    static_cast<double>(classes)));
    spec.observed.assign(order.begin(), order.begin() + observed_count);
    spec.variation.assign(order.begin() + observed_count, order.end());
    spec.observed_per_class = cfg.transfer.observed_per_class;
    spec.budgets = cfg.transfer.budgets;
    if (spec.budgets.empty()) {
        const std::size_t base = spec.observed.size() * spec.observed_per_class;
        for (std::size_t level = 0; level < 5; ++level)
            spec.budgets.push_back(base + level * spec.variation.size());
    }

    PoisonPlan plan;
    plan.kind = cfg.attack.trigger;
    plan.n = cfg.attack.n;
    plan.geometry = cfg.attack.geometry;
    plan.seed = cfg.transfer.seed;
    for (const LabeledSample& s : data.sample.samples) plan.excluded_origins.push_back(s.origin);

    TrainConfig victim_cfg = cfg.victim.train;
    const std::vector<TransferPoint> curve = transferability_experiment(
        data.train, data.sample, data.validation, surrogate, spec, plan, victim_cfg,
        arch_for(cfg.victim.arch, data.train));

    write_text_file(out / "transfer_curve.csv", transfer_curve_to_csv(curve));
    write_resolved_config(cfg, out / "transfer_config.json");
    for (const TransferPoint& p : curve)
        std::cerr << "transfer: budget " << p.requested_budget << " -> observed ASR "
                  << format_double(p.asr_observed) << "\n";
}

void cmd_strip(const ExperimentConfig& cfg, const fs::path& out) {
    require(out / "victim.ckpt", "train-victim");
    const ModelParams victim = load_model(out / "victim.ckpt");
    const DataBundle data = load_data(out);
    const TriggerProvider provider = provider_for(cfg, out);

    RandomStream stream(cfg.strip.seed, "strip");
    RandomStream pick = stream.fork("inputs");
    const std::size_t count = std::min(cfg.strip.num_inputs, data.validation.size());
    std::vector<LabeledSample> clean_inputs, poisoned_inputs;
    for (std::size_t i = 0; i < count; ++i) {
        const LabeledSample& s =
            data.validation.samples[pick.uniform_int(data.validation.size())];
        clean_inputs.push_back(s);
        LabeledSample stamped = s;
        const std::size_t target = pick.uniform_int(data.validation.num_classes);
        stamped.image = apply(s.image, provider(target));
        poisoned_inputs.push_back(std::move(stamped));
    }

    RandomStream overlay_clean = stream.fork("overlays-clean");
    RandomStream overlay_poison = stream.fork("overlays-poisoned");
    const std::vector<double> scores_clean =
        strip_scores(victim, clean_inputs, data.sample, cfg.strip.blends_per_input,
                     cfg.strip.alpha, overlay_clean);
    const std::vector<double> scores_poisoned =
        strip_scores(victim, poisoned_inputs, data.sample, cfg.strip.blends_per_input,
                     cfg.strip.alpha, overlay_poison);

    CsvTable scores;
    scores.header = {"kind", "index", "entropy"};
    for (std::size_t i = 0; i < scores_clean.size(); ++i)
        scores.rows.push_back({"clean", std::to_string(i), format_double(scores_clean[i])});
    for (std::size_t i = 0; i < scores_poisoned.size(); ++i)
        scores.rows.push_back({"poisoned", std::to_string(i), format_double(scores_poisoned[i])});
    write_text_file(out / "strip_scores.csv", to_csv(scores));

    const RocResult roc = roc_curve(scores_clean, scores_poisoned);
    write_text_file(out / "strip_roc.csv", roc_to_csv(roc));
    write_resolved_config(cfg, out / "strip_config.json");
    std::cerr << "strip: AUC " << format_double(roc.auc) << "\n";
}

void cmd_tradeoff(const ExperimentConfig& cfg, const fs::path& out) {
    require(out / "victim.ckpt", "train-victim");
    const ModelParams victim = load_model(out / "victim.ckpt");
    const DataBundle data = load_data(out);
    const TriggerProvider provider = provider_for(cfg, out);
    const AttackContext ctx = attack_context(cfg, data.validation, provider);

    DefenseConfig dcfg = cfg.defenses.cfg;
    dcfg.lr = cfg.tradeoff.lr;
    dcfg.weight_decay = cfg.tradeoff.weight_decay;
    dcfg.steps = cfg.tradeoff.steps;

    const std::vector<TradeoffPoint> curve =
        clean_data_tradeoff(victim, data.train, cfg.tradeoff.fractions, dcfg, ctx);
    write_text_file(out / "tradeoff_curve.csv", tradeoff_to_csv(curve));
    write_resolved_config(cfg, out / "tradeoff_config.json");
    for (const TradeoffPoint& p : curve)
        std::cerr << "tradeoff: fraction " << format_double(p.fraction) << " -> ASR "
                  << format_double(p.asr_after) << "\n";
}

void cmd_report(const fs::path& out) {
    require(out, "any experiment");
    CsvTable matrix;
    matrix.header = {"run", "method", "trigger", "p", "mean_asr", "clean_accuracy"};

    std::vector<fs::path> reports;
    for (const auto& entry : fs::recursive_directory_iterator(out))
        if (entry.is_regular_file() && entry.path().filename() == "eval_report.csv")
            reports.push_back(entry.path());
    std::sort(reports.begin(), reports.end());

    for (const fs::path& path : reports) {
        std::string method = "?", trigger = "?", p = "?";
        const fs::path cfg_path = path.parent_path() / "evaluate_config.json";
        if (fs::exists(cfg_path)) {
            const json cfg = json::parse(read_text_file(cfg_path));
            method = cfg.at("attack").at("method").get<std::string>();
            trigger = cfg.at("attack").at("trigger").get<std::string>();
            p = std::to_string(cfg.at("attack").at("p").get<std::size_t>());
        }
        // summary row follows a blank line after the per-class table
        std::string mean_asr = "?", clean_acc = "?";
        const auto lines = split(read_text_file(path), '\n');
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
            if (lines[i].rfind("mean_asr,", 0) == 0) {
                const auto fields = split(lines[i + 1], ',');
                if (fields.size() >= 2) {
                    mean_asr = fields[0];
                    clean_acc = fields[1];
                }
            }
        }
        matrix.rows.push_back(
            {fs::relative(path.parent_path(), out).string(), method, trigger, p, mean_asr,
             clean_acc});
    }
    write_text_file(out / "report_matrix.csv", to_csv(matrix));
    std::cerr << "report: " << matrix.rows.size() << " run(s) collated\n";
}

} // namespace poisonlab::cli
