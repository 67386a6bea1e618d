#pragma once

#include "fswad/evaluation.hpp"
#include "fswad/ingest.hpp"
#include "fswad/sampling.hpp"
#include "fswad/settings.hpp"
#include "fswad/trainer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fswad {

/// Triplet augmentation (k = 3) or the pair baseline (k = 2).
enum class Method { triplet, pair };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
std::vector<Method> parse_methods(std::string_view text);
int tuple_size(Method method);

/// A benchmark dataset: its schema file name and per-SampleSet sizes.
struct DatasetProfile {
    std::string id;
    std::string schema_file;
    SampleSetSpec sample_set;
};

/// Known datasets: nslkdd, cicids2018, toniot.
const DatasetProfile& dataset_profile(std::string_view id);
const std::vector<DatasetProfile>& dataset_profiles();

/// Holds the normal count fixed and resizes the anomaly total so that the
/// available set carries `percent` contamination with `labelled` labelled
/// anomalies reserved.
SampleSetSpec vary_anomaly_percent(const SampleSetSpec& spec, double percent, std::size_t labelled);

struct ExperimentConfig {
    int experiment_id = 1;
    std::string dataset;
    std::vector<std::size_t> labelled_counts{30, 60, 120};
    std::vector<double> anomaly_percents{2, 5, 10};
    std::size_t labelled_fixed = 60;
    double percent_fixed = 10.0;
    std::size_t sample_set_count = 5;
    std::vector<Method> methods{Method::triplet, Method::pair};
    std::uint64_t base_seed = 1;
    /// SampleSet sizes at the fixed contamination (a Table-3 style row).
    SampleSetSpec base_spec;

    TrainConfig train;
    double gap = 4.0;
    std::size_t repetitions = 30;
    /// Overrides the scheme's default threshold when set.
    std::optional<double> threshold;
    double test_fraction = 2.0 / 9.0;
    std::size_t jobs = 1;

    void validate() const;
};

/// Builds an ExperimentConfig from resolved settings. The dataset profile
/// supplies base_spec; methods come from the caller.
ExperimentConfig make_experiment_config(const Settings& settings, int experiment_id, const DatasetProfile& profile,
                                        std::vector<Method> methods);
TrainConfig make_train_config(const Settings& settings);
OrdinalLabelScheme make_scheme(const Settings& settings);
InferenceConfig make_inference_config(const Settings& settings, const OrdinalLabelScheme& scheme);

/// A SampleSet's rows copied out of the dataset and normalized: labelled
/// rows first, then unlabelled, then test. Only test rows carry truth.
struct LocalSampleSet {
    Matrix data;
    std::vector<std::uint8_t> truth;
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
    std::vector<std::size_t> test;
    /// Dataset row id of every local row.
    std::vector<std::size_t> source_rows;
    NormalizationStats stats;

    TrainingPools pools() const { return {labelled, unlabelled}; }
};

/// Fits normalization on the labelled and unlabelled rows unless `stats` is
/// given, and applies it to every row.
LocalSampleSet localize(const EncodedDataset& dataset, const SampleSet& set,
                        const NormalizationStats* stats = nullptr);

struct RunResult {
    Method method = Method::triplet;
    std::size_t sample_set = 0;
    bool ok = false;
    std::string error;
    EvaluationReport report;
    std::vector<EpochRecord> log;
    std::uint64_t seed = 0;
};

struct PointResult {
    std::string sweep;
    double value = 0.0;
    std::uint64_t seed = 0;
    SampleSetSpec spec;
    /// Labelled anomalies actually used per SampleSet.
    std::size_t labelled_used = 0;
    std::vector<SampleSet> sets;
    std::vector<RunResult> runs;
    std::map<Method, ReportSummary> summary;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<PointResult> points;

    bool all_ok() const;
    /// Mean AUROC of `method` at the point whose sweep value equals `value`.
    double mean_auroc(Method method, double value) const;
};

/// Seed of one sweep point, derived from the base seed, dataset, experiment
/// and sweep value so every point draws independent streams.
std::uint64_t point_seed(std::uint64_t base_seed, std::string_view dataset, int experiment_id, double sweep_value);

/// Trains and evaluates one method on one split SampleSet. Normalization is
/// fitted on the SampleSet's training rows and applied to its test rows.
RunResult run_sample_set(const EncodedDataset& dataset, const SampleSet& set, Method method,
                         const ExperimentConfig& config, std::uint64_t seed);

/// Runs every sweep point of the configured experiment on `dataset`
/// (encoded, not yet normalized). All methods see identical SampleSets.
ExperimentResult run_experiment(const ExperimentConfig& config, const EncodedDataset& dataset);

/// Writes per-point manifests, reports, training logs and aggregate.csv.
void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir,
                              std::string_view data_path);

/// aggregate.csv contents, one row per (method, sweep point).
std::string aggregate_csv(const ExperimentResult& result);

/// Locates and encodes a benchmark dataset. Prefers `<data_dir>/<id>.encoded.csv`
/// when present, else loads `<data_dir>/<schema file>` with the schema from
/// `schema_dir`. Throws DataError naming the expected path when missing.
EncodedDataset load_benchmark(const DatasetProfile& profile, const std::filesystem::path& data_dir,
                              const std::filesystem::path& schema_dir, std::string* resolved_path = nullptr);

/// Expected raw file location for a benchmark dataset.
std::filesystem::path benchmark_path(const DatasetProfile& profile, const std::filesystem::path& data_dir,
                                     const std::filesystem::path& schema_dir);

}  // namespace fswad
