#include "fswad/evaluation.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <random>

using namespace fswad;

namespace {

// Pairwise definition: each (anomaly, normal) pair scores 1 when the anomaly
// ranks higher and 1/2 on a tie.
double pairwise_auroc(const std::vector<ScoreLabel>& s) {
    std::uint64_t greater = 0, ties = 0, pos = 0, neg = 0;
    for (const auto& a : s) (a.truth ? pos : neg) += 1;
    for (const auto& a : s) {
        if (!a.truth) continue;
        for (const auto& b : s) {
            if (b.truth) continue;
            if (a.score > b.score) ++greater;
            if (a.score == b.score) ++ties;
        }
    }
    return static_cast<double>(2 * greater + ties) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<ScoreLabel> report_rows(std::size_t tp, std::size_t fn, std::size_t fp, std::size_t tn) {
    std::vector<ScoreLabel> r;
    r.insert(r.end(), tp, {16.0, 1});
    r.insert(r.end(), fn, {8.0, 1});
    r.insert(r.end(), fp, {13.0, 0});
    r.insert(r.end(), tn, {4.0, 0});
    return r;
}

}  // namespace

TEST(Auroc, PerfectSeparation) {
    const std::vector<ScoreLabel> s{{0.9, 1}, {0.8, 1}, {0.1, 0}};
    EXPECT_EQ(auroc(s), 1.0);
}

TEST(Auroc, FullTieIsHalf) {
    const std::vector<ScoreLabel> s{{0.5, 1}, {0.5, 0}};
    EXPECT_EQ(auroc(s), 0.5);
}

TEST(Auroc, SingleClassRejected) {
    const std::vector<ScoreLabel> s{{0.5, 1}, {0.7, 1}};
    EXPECT_THROW(auroc(s), DataError);
}

TEST(Auroc, MatchesPairwiseOracleWithTies) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoreLabel> s(200);
        for (auto& x : s) {
            x.score = static_cast<double>(rng() % 15);
            x.truth = static_cast<int>(rng() % 3 == 0);
        }
        s[0].truth = 1;
        s[1].truth = 0;
        EXPECT_EQ(auroc(s), pairwise_auroc(s));
    }
}

TEST(Auroc, MonotoneTransformInvariant) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::vector<ScoreLabel> s(150), t(150);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = {n(rng), static_cast<int>(i % 4 == 0)};
        t[i] = {std::exp(3.0 * s[i].score) + 7.0, s[i].truth};
    }
    EXPECT_EQ(auroc(s), auroc(t));
}

TEST(Auroc, FlippingLabelsComplements) {
    std::mt19937_64 rng(3);
    std::vector<ScoreLabel> s(120);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = {static_cast<double>(rng() % 20), static_cast<int>(i % 3 == 0)};
    auto flipped = s;
    for (auto& x : flipped) x.truth = 1 - x.truth;
    EXPECT_NEAR(auroc(s) + auroc(flipped), 1.0, 1e-12);
}

TEST(Auroc, RandomScoresNearHalf) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ScoreLabel> s(20000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = {u(rng), static_cast<int>(i % 2)};
    EXPECT_NEAR(auroc(s), 0.5, 0.05);
}

TEST(Confusion, ReportedRatesFromCounts) {
    auto r = confusion(report_rows(276, 57, 87, 2902), 12.0);
    EXPECT_EQ(r.tp, 276u);
    EXPECT_EQ(r.fn, 57u);
    EXPECT_EQ(r.fp, 87u);
    EXPECT_EQ(r.tn, 2902u);
    EXPECT_EQ(r.tpr, 276.0 / 333.0);
    EXPECT_EQ(r.fpr, 87.0 / 2989.0);
    EXPECT_NEAR(r.tpr, 0.829, 1e-3);
    EXPECT_NEAR(r.fpr, 0.029, 1e-3);
    // 274/333 = 0.8228; the published figure reads 0.822.
    r = confusion(report_rows(274, 59, 128, 2861), 12.0);
    EXPECT_NEAR(r.tpr, 0.822, 1e-3);
    EXPECT_NEAR(r.fpr, 0.043, 1e-3);
}

TEST(Confusion, AllBelowThreshold) {
    const std::vector<ScoreLabel> s{{1, 1}, {2, 0}, {3, 1}};
    const auto r = confusion(s, 12.0);
    EXPECT_EQ(r.tp, 0u);
    EXPECT_EQ(r.fp, 0u);
    EXPECT_EQ(r.tpr, 0.0);
    EXPECT_EQ(r.fpr, 0.0);
    EXPECT_EQ(r.tp + r.fn, 2u);
    EXPECT_EQ(r.fp + r.tn, 1u);
}

TEST(Confusion, UndefinedRatesFlagged) {
    const std::vector<ScoreLabel> s{{20, 0}, {2, 0}};
    const auto r = confusion(s, 12.0);
    EXPECT_TRUE(r.tpr_undefined);
    EXPECT_FALSE(r.fpr_undefined);
    EXPECT_EQ(r.fpr, 0.5);
}

TEST(Confusion, BoundaryScoreCountsAsAnomaly) {
    const std::vector<ScoreLabel> s{{12.0, 1}, {12.0, 0}};
    const auto r = confusion(s, 12.0);
    EXPECT_EQ(r.tp, 1u);
    EXPECT_EQ(r.fp, 1u);
}

TEST(Aggregate, ConstantList) {
    const std::vector<double> v{0.94, 0.94, 0.94, 0.94, 0.94};
    const auto s = aggregate(v);
    EXPECT_NEAR(s.mean, 0.94, 1e-15);
    EXPECT_NEAR(s.stddev, 0.0, 1e-15);
}

TEST(Aggregate, TwoPoints) {
    const std::vector<double> v{0.93, 0.95};
    const auto s = aggregate(v);
    EXPECT_NEAR(s.mean, 0.94, 1e-15);
    EXPECT_NEAR(s.stddev, 0.01414, 1e-5);
}

TEST(Aggregate, EmptyRejected) {
    EXPECT_THROW(aggregate(std::span<const double>{}), DataError);
}

TEST(ReportJson, CarriesSeedAndFields) {
    const auto r = confusion(report_rows(3, 1, 1, 5), 12.0);
    const auto j = nlohmann::json::parse(report_to_json(r, 77));
    EXPECT_EQ(j["seed"], 77);
    EXPECT_EQ(j["tp"], 3);
    EXPECT_EQ(j["threshold"], 12.0);
    EXPECT_TRUE(j.contains("auroc"));
}
