#pragma once

#include "fswad/augmentation.hpp"
#include "fswad/model.hpp"

#include <vector>

namespace fswad {

enum class ScoreCombination { sum };

struct InferenceConfig {
    std::size_t repetitions = 30;
    /// Decision threshold; scores at or above it are predicted anomalous.
    double threshold = 12.0;
    ScoreCombination combine = ScoreCombination::sum;
    std::uint64_t seed = 0;
};

/// Sub-network outputs of the reference pools, computed once per model.
class ReferenceEmbeddings {
public:
    ReferenceEmbeddings(const ScoringModel& model, const Matrix& data, const TrainingPools& pools);

    std::span<const double> labelled(std::size_t i) const { return labelled_.row(i); }
    std::span<const double> unlabelled(std::size_t i) const { return unlabelled_.row(i); }
    std::size_t labelled_size() const { return labelled_.rows(); }
    std::size_t unlabelled_size() const { return unlabelled_.rows(); }

private:
    Matrix labelled_;
    Matrix unlabelled_;
};

/// Mean over `repetitions` draws of S1 + S2, where S1 scores the tuple
/// (a_1, .., a_{k-1}, T) with distinct labelled anomalies and S2 scores
/// (T, u_1, .., u_{k-1}) with distinct unlabelled rows.
double score_sample(const ScoringModel& model, std::span<const double> record, const ReferenceEmbeddings& references,
                    const InferenceConfig& config, Rng& rng);

/// Convenience overload that embeds the pools itself.
double score_sample(const ScoringModel& model, std::span<const double> record, const Matrix& data,
                    const TrainingPools& pools, const InferenceConfig& config);

/// 1 iff score >= threshold.
int classify(double score, const InferenceConfig& config);

struct ScoredRow {
    std::size_t row = 0;
    double score = 0.0;
    int truth = 0;
};

/// Scores `rows` of `data`. Each row draws references from its own stream
/// seeded by (config.seed, row id), so output does not depend on row order.
/// `truth` supplies ground truth per dataset row for evaluation and may be
/// empty. `threads` > 1 splits the rows across worker threads.
std::vector<ScoredRow> score_dataset(const ScoringModel& model, const Matrix& data, std::span<const std::size_t> rows,
                                     const TrainingPools& pools, std::span<const std::uint8_t> truth,
                                     const InferenceConfig& config, std::size_t threads = 1);

/// CSV with columns row_id,score,predicted,truth.
void write_scores_csv(const std::vector<ScoredRow>& scores, const InferenceConfig& config,
                      const std::filesystem::path& path);
std::vector<ScoredRow> read_scores_csv(const std::filesystem::path& path);

}  // namespace fswad
