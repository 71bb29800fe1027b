#include "poisonlab/eval.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"
#include "poisonlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace poisonlab {

TriggerProvider universal_triggers(const ClassEncodingTable& table, TriggerKind kind,
                                   const TriggerGeometry& geometry) {
    return [table, kind, geometry](std::size_t y) {
        return trigger_for_class(table, y, kind, geometry);
    };
}

TriggerProvider baseline_triggers(TriggerKind kind, std::uint64_t seed, std::size_t n_bits,
                                  const TriggerGeometry& geometry) {
    return [kind, seed, n_bits, geometry](std::size_t y) {
        const RandomStream stream(seed, "baseline-triggers");
        return make_baseline(y, kind, stream, n_bits, geometry);
    };
}

double asr_for_class(const ModelParams& victim, const Dataset& validation,
                     const TriggerProvider& triggers, std::size_t y,
                     bool exclude_true_class) {
    if (y >= victim.num_classes) throw EvalError("asr_for_class: target class out of range");
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < validation.samples.size(); ++i)
        if (!exclude_true_class || validation.samples[i].label != y) eligible.push_back(i);
    if (eligible.empty())
        throw EvalError("asr_for_class: no eligible validation images for class " +
                        std::to_string(y));

    const TriggerSpec trigger = triggers(y);
    std::vector<std::size_t> hits(kParallelChunks, 0);
    parallel_chunks(eligible.size(), [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::size_t h = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const Image stamped = apply(validation.samples[eligible[k]].image, trigger);
            if (predict(victim, stamped) == y) ++h;
        }
        hits[chunk] = h;
    });
    const std::size_t total = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(eligible.size());
}

double asr_for_class(const ModelParams& victim, const Dataset& validation,
                     const ClassEncodingTable& table, TriggerKind kind,
                     const TriggerGeometry& geometry, std::size_t y,
                     bool exclude_true_class) {
    return asr_for_class(victim, validation, universal_triggers(table, kind, geometry), y,
                         exclude_true_class);
}

double mean_asr(const std::vector<double>& per_class) {
    if (per_class.empty()) throw InputError("mean_asr: no classes");
    double sum = 0.0;
    for (double v : per_class) sum += v;
    return sum / static_cast<double>(per_class.size());
}

double clean_accuracy(const ModelParams& m, const Dataset& validation) {
    return accuracy(m, validation);
}

ClassStats class_stats(const std::vector<double>& per_class) {
    if (per_class.empty()) throw InputError("class_stats: empty input");
    std::vector<double> sorted = per_class;
    std::sort(sorted.begin(), sorted.end());
    ClassStats s;
    s.min = sorted.front();
    s.max = sorted.back();
    s.mean = mean_asr(per_class);
    const std::size_t n = sorted.size();
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return s;
}

EvalReport evaluate_attack(const ModelParams& victim, const Dataset& validation,
                           const TriggerProvider& triggers, std::size_t num_classes,
                           std::size_t poison_budget, std::uint64_t seed,
                           bool exclude_true_class) {
    EvalReport r;
    r.per_class_asr.reserve(num_classes);
    for (std::size_t y = 0; y < num_classes; ++y)
        r.per_class_asr.push_back(
            asr_for_class(victim, validation, triggers, y, exclude_true_class));
    r.mean_asr = mean_asr(r.per_class_asr);
    r.clean_accuracy = clean_accuracy(victim, validation);
    r.stats = class_stats(r.per_class_asr);
    r.poison_budget = poison_budget;
    r.seed = seed;
    return r;
}

std::string report_to_csv(const EvalReport& r) {
    CsvTable t;
    t.header = {"class", "asr"};
    for (std::size_t y = 0; y < r.per_class_asr.size(); ++y)
        t.rows.push_back({std::to_string(y), format_double(r.per_class_asr[y])});
    std::string out = to_csv(t);
    out += "\n";
    CsvTable summary;
    summary.header = {"mean_asr", "clean_accuracy", "asr_min", "asr_max", "asr_median",
                      "poison_budget", "seed"};
    summary.rows.push_back({format_double(r.mean_asr), format_double(r.clean_accuracy),
                            format_double(r.stats.min), format_double(r.stats.max),
                            format_double(r.stats.median), std::to_string(r.poison_budget),
                            std::to_string(r.seed)});
    out += to_csv(summary);
    return out;
}

std::vector<TransferPoint> transferability_experiment(
    const Dataset& d_clean, const Dataset& d_sample, const Dataset& validation,
    const ModelParams& surrogate, const TransferabilitySpec& spec, const PoisonPlan& plan,
    const TrainConfig& victim_cfg, const ArchSpec& victim_arch) {
    if (spec.observed.empty()) throw InputError("transferability: observed set is empty");
    std::set<std::size_t> a(spec.variation.begin(), spec.variation.end());
    for (std::size_t y : spec.observed)
        if (a.count(y))
            throw InputError("transferability: observed and variation sets must be disjoint");
    if (spec.budgets.empty()) throw InputError("transferability: no budget levels");

    const std::size_t base = spec.observed.size() * spec.observed_per_class;

    std::vector<TransferPoint> curve;
    for (std::size_t level = 0; level < spec.budgets.size(); ++level) {
        const std::size_t budget = spec.budgets[level];
        if (budget < base)
            throw PlanningError("transferability: budget " + std::to_string(budget) +
                                " below the observed-set floor " + std::to_string(base));

        std::map<std::size_t, std::size_t> counts;
        for (std::size_t y : spec.observed) counts[y] = spec.observed_per_class;
        if (!spec.variation.empty()) {
            const std::size_t per_a = (budget - base) / spec.variation.size();
            if (per_a > 0)
                for (std::size_t y : spec.variation) counts[y] = per_a;
        }

        PoisonPlan level_plan = plan;
        // decouple runs: fresh sampling and training seeds per level
        level_plan.seed = plan.seed + 1000003ull * (level + 1);
        const PoisonResult poisoned =
            poison_with_counts(d_clean, d_sample, surrogate, counts, level_plan);

        TrainConfig cfg = victim_cfg;
        cfg.seed = victim_cfg.seed + 7919ull * (level + 1);
        RandomStream init_stream(cfg.seed, "init");
        const ModelParams victim0 =
            init_model(victim_arch, d_clean.num_classes, init_stream, Role::Victim);
        const TrainResult trained = train(victim0, poisoned.poisoned, validation, cfg);

        const TriggerProvider triggers =
            universal_triggers(poisoned.table, plan.kind, plan.geometry);

        TransferPoint pt;
        pt.requested_budget = budget;
        pt.effective_poisons = poisoned.records.size();
        std::vector<double> asr_b, asr_a;
        for (std::size_t y : spec.observed)
            asr_b.push_back(asr_for_class(trained.model, validation, triggers, y));
        for (std::size_t y : spec.variation)
            asr_a.push_back(asr_for_class(trained.model, validation, triggers, y));
        pt.asr_observed = mean_asr(asr_b);
        pt.asr_variation = asr_a.empty() ? 0.0 : mean_asr(asr_a);
        curve.push_back(pt);
    }
    return curve;
}

std::string transfer_curve_to_csv(const std::vector<TransferPoint>& curve) {
    CsvTable t;
    t.header = {"requested_budget", "effective_poisons", "asr_observed", "asr_variation"};
    for (const TransferPoint& p : curve)
        t.rows.push_back({std::to_string(p.requested_budget),
                          std::to_string(p.effective_poisons), format_double(p.asr_observed),
                          format_double(p.asr_variation)});
    return to_csv(t);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0; // tie-averaged
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw InputError("spearman: need two equal-length series of >= 2 points");
    const std::vector<double> rx = ranks(xs);
    const std::vector<double> ry = ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

} // namespace poisonlab
