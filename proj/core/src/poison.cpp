#include "poisonlab/poison.hpp"

#include "poisonlab/csv.hpp"
#include "poisonlab/errors.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <string>

namespace poisonlab {

namespace {

// Shared injection loop: rounds of targets, each drawing a source uniformly
// without replacement from the remaining pool, stamping, and relabeling.
void inject(Dataset& poisoned, std::vector<PoisonRecord>& records,
            const std::map<std::size_t, std::size_t>& counts, const PoisonPlan& plan,
            const std::function<TriggerSpec(std::size_t)>& trigger_of) {
    std::set<std::size_t> excluded(plan.excluded_origins.begin(), plan.excluded_origins.end());
    std::vector<std::size_t> pool;
    pool.reserve(poisoned.samples.size());
    for (std::size_t i = 0; i < poisoned.samples.size(); ++i)
        if (!excluded.count(poisoned.samples[i].origin)) pool.push_back(i);

    std::size_t total = 0;
    std::size_t max_rounds = 0;
    for (const auto& [y, k] : counts) {
        if (y >= poisoned.num_classes)
            throw InputError("poison: target class " + std::to_string(y) + " out of range");
        total += k;
        max_rounds = std::max(max_rounds, k);
    }
    if (total > pool.size())
        throw PlanningError("poison: budget " + std::to_string(total) +
                            " exceeds available pool of " + std::to_string(pool.size()));

    RandomStream stream(plan.seed, "poison-sampling");

    for (std::size_t round = 0; round < max_rounds; ++round) {
        for (std::size_t y = 0; y < poisoned.num_classes; ++y) {
            auto it = counts.find(y);
            if (it == counts.end() || it->second <= round) continue;

            std::size_t pick_pos;
            if (plan.exclude_target_class_sources) {
                std::vector<std::size_t> eligible;
                for (std::size_t p : pool)
                    if (poisoned.samples[p].label != y) eligible.push_back(p);
                if (eligible.empty())
                    throw PlanningError("poison: pool exhausted for target class " +
                                        std::to_string(y));
                pick_pos = eligible[stream.uniform_int(eligible.size())];
            } else {
                if (pool.empty()) throw PlanningError("poison: pool exhausted");
                pick_pos = pool[stream.uniform_int(pool.size())];
            }
            pool.erase(std::find(pool.begin(), pool.end(), pick_pos));

            LabeledSample& s = poisoned.samples[pick_pos];
            const TriggerSpec trigger = trigger_of(y);

            PoisonRecord rec;
            rec.position = pick_pos;
            rec.origin = s.origin;
            rec.source_label = s.label;
            rec.target_label = y;
            rec.bits = is_baseline_kind(trigger.kind) ? std::string() : trigger.bits;
            records.push_back(std::move(rec));

            s.image = apply(s.image, trigger);
            s.label = y;
            s.poisoned = true;
        }
    }
}

std::map<std::size_t, std::size_t> uniform_counts(std::size_t p, std::size_t num_classes) {
    const std::size_t rounds = p / num_classes; // remainder dropped per the budget rule
    std::map<std::size_t, std::size_t> counts;
    if (rounds > 0)
        for (std::size_t y = 0; y < num_classes; ++y) counts[y] = rounds;
    return counts;
}

PoisonResult run_universal(const Dataset& d_clean, const Dataset& d_sample,
                           const ModelParams& surrogate,
                           const std::map<std::size_t, std::size_t>& counts,
                           const PoisonPlan& plan) {
    if (is_baseline_kind(plan.kind))
        throw ConfigError("poison_dataset: baseline kinds go through baseline_poison");
    if (d_sample.samples.empty()) throw InputError("poison: empty surrogate sample set");
    if (d_clean.num_classes != d_sample.num_classes)
        throw InputError("poison: clean and sample sets disagree on class count");

    PoisonResult out;

    std::vector<std::size_t> labels;
    const Matrix latents = extract_latents(surrogate, d_sample, &labels);
    out.projection = fit_lda(latents, labels, plan.n);
    const Matrix compressed = project(out.projection, latents);
    const ClassMeans means = class_means(compressed, labels, d_clean.num_classes);
    out.table = encode_latent(means);

    out.poisoned = d_clean;
    inject(out.poisoned, out.records, counts, plan, [&](std::size_t y) {
        return trigger_for_class(out.table, y, plan.kind, plan.geometry);
    });
    return out;
}

} // namespace

PoisonResult poison_dataset(const Dataset& d_clean, const Dataset& d_sample,
                            const ModelParams& surrogate, const PoisonPlan& plan) {
    if (d_clean.num_classes == 0) throw InputError("poison: dataset has no classes");
    return run_universal(d_clean, d_sample, surrogate,
                         uniform_counts(plan.total_budget, d_clean.num_classes), plan);
}

PoisonResult poison_with_counts(const Dataset& d_clean, const Dataset& d_sample,
                                const ModelParams& surrogate,
                                const std::map<std::size_t, std::size_t>& per_class_counts,
                                const PoisonPlan& plan) {
    return run_universal(d_clean, d_sample, surrogate, per_class_counts, plan);
}

BaselinePoisonResult baseline_poison(const Dataset& d_clean, const PoisonPlan& plan) {
    if (!is_baseline_kind(plan.kind))
        throw ConfigError("baseline_poison: plan.kind must be a baseline kind");
    BaselinePoisonResult out;
    out.poisoned = d_clean;
    const RandomStream trigger_stream(plan.seed, "baseline-triggers");
    inject(out.poisoned, out.records, uniform_counts(plan.total_budget, d_clean.num_classes),
           plan, [&](std::size_t y) {
               return make_baseline(y, plan.kind, trigger_stream, plan.n, plan.geometry);
           });
    return out;
}

std::string records_to_csv(const std::vector<PoisonRecord>& records) {
    CsvTable t;
    t.header = {"origin", "source_label", "target_label", "bits"};
    for (const PoisonRecord& r : records)
        t.rows.push_back({std::to_string(r.origin), std::to_string(r.source_label),
                          std::to_string(r.target_label), r.bits});
    return to_csv(t);
}

} // namespace poisonlab
