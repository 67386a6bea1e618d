#include "fswad/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fswad {

std::vector<ScoreLabel> to_score_labels(const std::vector<ScoredRow>& rows) {
    std::vector<ScoreLabel> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.score, r.truth});
    return out;
}

double auroc(std::span<const ScoreLabel> scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });

    // Twice the Mann-Whitney U of the anomalies, kept integral: a tie group
    // occupying sorted positions [i, j) has mid-rank (i + 1 + j) / 2.
    std::uint64_t positives = 0;
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]].score == scores[order[i]].score) ++j;
        std::uint64_t group_pos = 0;
        for (std::size_t t = i; t < j; ++t) group_pos += scores[order[t]].truth ? 1 : 0;
        twice_rank_sum += group_pos * (i + 1 + j);
        positives += group_pos;
        i = j;
    }
    const std::uint64_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw DataError("AUROC needs at least one anomaly and one normal");
    const std::uint64_t twice_u = twice_rank_sum - positives * (positives + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

EvaluationReport confusion(std::span<const ScoreLabel> scores, double threshold) {
    EvaluationReport r;
    r.threshold = threshold;
    for (const auto& s : scores) {
        const bool predicted = s.score >= threshold;
        if (s.truth) {
            (predicted ? r.tp : r.fn) += 1;
        } else {
            (predicted ? r.fp : r.tn) += 1;
        }
    }
    r.tpr_undefined = r.tp + r.fn == 0;
    r.fpr_undefined = r.fp + r.tn == 0;
    r.tpr = r.tpr_undefined ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    r.fpr = r.fpr_undefined ? 0.0 : static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
    if (!r.tpr_undefined && !r.fpr_undefined) r.auroc = auroc(scores);
    return r;
}

Summary aggregate(std::span<const double> values) {
    if (values.empty()) throw DataError("cannot aggregate an empty list");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

ReportSummary aggregate(std::span<const EvaluationReport> reports) {
    if (reports.empty()) throw DataError("cannot aggregate an empty report list");
    auto column = [&](auto field) {
        std::vector<double> values;
        for (const auto& r : reports) values.push_back(static_cast<double>(field(r)));
        return aggregate(values);
    };
    ReportSummary s;
    s.count = reports.size();
    s.auroc = column([](const EvaluationReport& r) { return r.auroc; });
    s.tpr = column([](const EvaluationReport& r) { return r.tpr; });
    s.fpr = column([](const EvaluationReport& r) { return r.fpr; });
    s.tp = column([](const EvaluationReport& r) { return r.tp; });
    s.tn = column([](const EvaluationReport& r) { return r.tn; });
    s.fp = column([](const EvaluationReport& r) { return r.fp; });
    s.fn = column([](const EvaluationReport& r) { return r.fn; });
    return s;
}

std::string report_to_json(const EvaluationReport& report, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["auroc"] = report.auroc;
    j["tp"] = report.tp;
    j["tn"] = report.tn;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    j["tpr"] = report.tpr;
    j["fpr"] = report.fpr;
    j["tpr_undefined"] = report.tpr_undefined;
    j["fpr_undefined"] = report.fpr_undefined;
    j["threshold"] = report.threshold;
    j["seed"] = seed;
    return j.dump(2);
}

}  // namespace fswad
