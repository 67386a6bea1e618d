#pragma once

#include "fswad/inference.hpp"

#include <string>
#include <vector>

namespace fswad {

struct ScoreLabel {
    double score = 0.0;
    int truth = 0;
};

std::vector<ScoreLabel> to_score_labels(const std::vector<ScoredRow>& rows);

/// Probability that a random anomaly outscores a random normal, ties counted
/// half. Computed from mid-ranks in O(n log n). Throws DataError unless both
/// classes are present.
double auroc(std::span<const ScoreLabel> scores);

struct EvaluationReport {
    double auroc = 0.0;
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double tpr = 0.0;
    double fpr = 0.0;
    /// Set when tp + fn == 0 (tpr reported as 0).
    bool tpr_undefined = false;
    /// Set when fp + tn == 0 (fpr reported as 0).
    bool fpr_undefined = false;
    double threshold = 0.0;
};

/// Confusion counts at `threshold` (predict anomaly iff score >= threshold)
/// and the AUROC when both classes are present (0 otherwise).
EvaluationReport confusion(std::span<const ScoreLabel> scores, double threshold);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Arithmetic mean and sample (n - 1) standard deviation; 0 for one value.
Summary aggregate(std::span<const double> values);

struct ReportSummary {
    std::size_t count = 0;
    Summary auroc, tpr, fpr, tp, tn, fp, fn;
};

ReportSummary aggregate(std::span<const EvaluationReport> reports);

std::string report_to_json(const EvaluationReport& report, std::uint64_t seed);

}  // namespace fswad
