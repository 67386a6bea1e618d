#pragma once

#include "fswad/common.hpp"

#include <vector>

namespace fswad {

enum class Source : std::uint8_t { labelled_anomaly, unlabelled };

/// Equally spaced ordinal targets for k-tuples. A tuple holding `a` members
/// from the labelled anomaly pool is labelled a * gap, so for k = 3 the
/// labels are C1 = 3m, C2 = 2m, C3 = m, C4 = 0.
struct OrdinalLabelScheme {
    int k = 3;
    double gap = 4.0;

    /// Labels in descending order, C1 first.
    std::vector<double> labels() const;
    std::size_t class_count() const { return static_cast<std::size_t>(k) + 1; }
    double label_for_anomaly_count(int anomalies) const;
    /// Decision threshold halfway between the ideal anomaly score (C1 + C3
    /// for k = 3) and the ideal normal score (C2 + C4): k * gap.
    double default_threshold() const;
    void validate() const;
};

/// Label of a tagged tuple; depends only on how many tags are labelled anomalies.
double label_of_combination(std::span<const Source> tags, const OrdinalLabelScheme& scheme);

struct AugmentedInstance {
    std::vector<std::size_t> members;
    std::vector<Source> tags;
    double label = 0.0;
};

struct AugmentedBatch {
    std::vector<AugmentedInstance> instances;
    std::size_t size() const { return instances.size(); }
};

enum class BatchComposition { balanced, uniform };

BatchComposition parse_batch_composition(std::string_view text);

/// Pools of row indices the augmentation draws from. Carries no labels.
struct TrainingPools {
    std::span<const std::size_t> labelled;
    std::span<const std::size_t> unlabelled;
};

/// Draws `batch_size` augmented instances. Balanced composition puts
/// batch_size / (k + 1) instances in every ordinal class and places the
/// anomaly tags uniformly among that class's arrangements; uniform
/// composition draws each member from the union of both pools. Members are
/// drawn with replacement.
AugmentedBatch sample_batch(const TrainingPools& pools, const OrdinalLabelScheme& scheme, std::size_t batch_size,
                            Rng& rng, BatchComposition composition = BatchComposition::balanced);

}  // namespace fswad
