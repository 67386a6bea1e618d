#pragma once

#include "fswad/common.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace fswad {

struct EncodedDataset;

/// Size and composition of one SampleSet.
struct SampleSetSpec {
    std::size_t normal_count = 0;
    std::size_t anomaly_total = 0;
    std::size_t labelled_count = 0;
    /// Target contamination of the available set, in percent.
    double anomaly_percent = 10.0;
    double test_fraction = 2.0 / 9.0;
    std::uint64_t seed = 0;
    /// Attack families that may never enter the labelled pool.
    std::set<std::string> exclude_attack_families;

    std::size_t available_size() const { return normal_count + anomaly_total - labelled_count; }
    /// Contamination of the available set, in percent.
    double available_anomaly_percent() const;
    /// Throws ConfigError when an invariant fails.
    void validate() const;
};

/// Largest labelled pool allowed for `normal_count` normals.
constexpr double kMaxLabelledShare = 0.1;

/// Row indices into an EncodedDataset. `unlabelled` starts as the whole
/// available set and loses the held-out rows to `test` when split.
struct SampleSet {
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
    std::vector<std::size_t> test;

    friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

/// Draws `count` pairwise-disjoint SampleSets, each with `normal_count`
/// normals and `anomaly_total` anomalies, of which `labelled_count` go to the
/// labelled pool. Test rows are not yet split off.
std::vector<SampleSet> build_sample_sets(const EncodedDataset& dataset, const SampleSetSpec& spec, std::size_t count);

/// Stratified hold-out of the available set. The test side gets
/// floor(fraction * |D|) rows, of which round(fraction * anomalies(D)) are
/// anomalies. `labels` is ground truth for the whole dataset.
SampleSet split_train_test(const SampleSet& sample_set, std::span<const std::uint8_t> labels, double test_fraction,
                           std::uint64_t seed);

/// Number of rows `split_train_test` moves to the test side.
std::size_t test_row_count(std::size_t available, double test_fraction);
std::size_t test_anomaly_count(std::size_t available_anomalies, double test_fraction);

/// One SampleSet with everything needed to replay it: the dataset it indexes,
/// the spec and seed that produced it, and its position among its siblings.
struct SampleSetManifest {
    std::string data_path;
    std::uint64_t seed = 0;
    std::size_t index = 0;
    SampleSetSpec spec;
    SampleSet set;
};

std::string manifest_to_json(const SampleSetManifest& manifest);
SampleSetManifest manifest_from_json(std::string_view text);
void save_manifest(const SampleSetManifest& manifest, const std::filesystem::path& path);
SampleSetManifest load_manifest(const std::filesystem::path& path);

/// Reads a SampleSet spec from flat key-value text: normal_count,
/// anomaly_total, labelled_count, anomaly_percent, and optionally
/// test_fraction, seed, exclude_attack_families.
SampleSetSpec parse_sample_set_spec(std::string_view text, std::string_view origin);

}  // namespace fswad
