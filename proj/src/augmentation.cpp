#include "fswad/augmentation.hpp"

#include <bit>
#include <string>

namespace fswad {

std::vector<double> OrdinalLabelScheme::labels() const {
    std::vector<double> out;
    for (int a = k; a >= 0; --a) out.push_back(label_for_anomaly_count(a));
    return out;
}

double OrdinalLabelScheme::label_for_anomaly_count(int anomalies) const {
    return static_cast<double>(anomalies) * gap;
}

double OrdinalLabelScheme::default_threshold() const { return static_cast<double>(k) * gap; }

void OrdinalLabelScheme::validate() const {
    if (k != 2 && k != 3) throw ConfigError("tuple size must be 2 or 3, got " + std::to_string(k));
    if (!(gap > 0.0)) throw ConfigError("ordinal gap must be positive");
}

double label_of_combination(std::span<const Source> tags, const OrdinalLabelScheme& scheme) {
    if (tags.size() != static_cast<std::size_t>(scheme.k)) {
        throw ConfigError("tuple has " + std::to_string(tags.size()) + " tags, scheme expects " +
                          std::to_string(scheme.k));
    }
    int anomalies = 0;
    for (Source t : tags) anomalies += t == Source::labelled_anomaly ? 1 : 0;
    return scheme.label_for_anomaly_count(anomalies);
}

BatchComposition parse_batch_composition(std::string_view text) {
    if (text == "balanced") return BatchComposition::balanced;
    if (text == "uniform") return BatchComposition::uniform;
    throw ConfigError("batch_composition must be balanced or uniform, got '" + std::string(text) + "'");
}

namespace {

AugmentedInstance draw_instance(const TrainingPools& pools, std::span<const Source> tags,
                                const OrdinalLabelScheme& scheme, Rng& rng) {
    AugmentedInstance inst;
    inst.tags.assign(tags.begin(), tags.end());
    for (Source t : tags) {
        const auto pool = t == Source::labelled_anomaly ? pools.labelled : pools.unlabelled;
        inst.members.push_back(pool[uniform_index(rng, pool.size())]);
    }
    inst.label = label_of_combination(inst.tags, scheme);
    return inst;
}

}  // namespace

AugmentedBatch sample_batch(const TrainingPools& pools, const OrdinalLabelScheme& scheme, std::size_t batch_size,
                            Rng& rng, BatchComposition composition) {
    scheme.validate();
    const auto k = static_cast<std::size_t>(scheme.k);
    if (pools.labelled.empty()) throw DataError("labelled anomaly pool is empty");
    if (pools.unlabelled.size() < k) {
        throw DataError("unlabelled pool needs at least " + std::to_string(k) + " rows");
    }
    AugmentedBatch batch;
    batch.instances.reserve(batch_size);
    std::vector<Source> tags(k);

    if (composition == BatchComposition::uniform) {
        const std::size_t total = pools.labelled.size() + pools.unlabelled.size();
        for (std::size_t i = 0; i < batch_size; ++i) {
            for (auto& t : tags) {
                t = uniform_index(rng, total) < pools.labelled.size() ? Source::labelled_anomaly : Source::unlabelled;
            }
            batch.instances.push_back(draw_instance(pools, tags, scheme, rng));
        }
        return batch;
    }

    const std::size_t classes = scheme.class_count();
    if (batch_size == 0 || batch_size % classes != 0) {
        throw ConfigError("balanced batch size " + std::to_string(batch_size) + " is not a positive multiple of " +
                          std::to_string(classes));
    }
    // Arrangements of anomaly tags, indexed by anomaly count, as bit masks over positions.
    std::vector<std::vector<unsigned>> arrangements(k + 1);
    for (unsigned mask = 0; mask < (1u << k); ++mask) arrangements[std::popcount(mask)].push_back(mask);

    const std::size_t per_class = batch_size / classes;
    for (std::size_t anomalies = k + 1; anomalies-- > 0;) {
        const auto& masks = arrangements[anomalies];
        for (std::size_t i = 0; i < per_class; ++i) {
            const unsigned mask = masks[uniform_index(rng, masks.size())];
            for (std::size_t p = 0; p < k; ++p) {
                tags[p] = (mask >> p) & 1u ? Source::labelled_anomaly : Source::unlabelled;
            }
            batch.instances.push_back(draw_instance(pools, tags, scheme, rng));
        }
    }
    return batch;
}

}  // namespace fswad
