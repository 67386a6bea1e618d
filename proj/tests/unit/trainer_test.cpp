#include "fswad/trainer.hpp"

#include "../support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fswad;
using fswad::testing::gaussian_clusters;

namespace {

struct Fixture {
    EncodedDataset data;
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;

    explicit Fixture(double sigma = std::sqrt(0.1)) : data(gaussian_clusters(450, 60, sigma, 21)) {
        // Ten labelled anomalies; every other row is unlabelled.
        for (std::size_t r = 0; r < data.size(); ++r) (r >= 450 && r < 460 ? labelled : unlabelled).push_back(r);
    }
    TrainingPools pools() const { return {labelled, unlabelled}; }
};

TrainConfig quick(std::uint64_t seed = 3) {
    TrainConfig c;
    c.epochs = 10;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(UpdateStep, SgdArithmetic) {
    std::vector<double> p{5.0};
    const std::vector<double> g{2.0};
    OptimizerState state;
    TrainConfig c;
    c.optimizer = OptimizerKind::sgd;
    c.learning_rate = 1.0;
    update_step(p, g, state, c);
    EXPECT_EQ(p[0], 3.0);
}

TEST(UpdateStep, RmspropFirstStep) {
    std::vector<double> p{0.0};
    const std::vector<double> g{4.0};
    OptimizerState state;
    TrainConfig c;
    c.learning_rate = 1.0;
    update_step(p, g, state, c);
    ASSERT_EQ(state.mean_square.size(), 1u);
    EXPECT_NEAR(state.mean_square[0], 1.6, 1e-12);
    EXPECT_NEAR(-p[0], 4.0 / (std::sqrt(1.6) + 1e-8), 1e-12);
    EXPECT_NEAR(-p[0], 3.1623, 1e-4);
}

TEST(UpdateStep, ZeroGradientNoChange) {
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::rmsprop}) {
        std::vector<double> p{1.5, -2.0};
        const std::vector<double> g{0.0, 0.0};
        OptimizerState state;
        TrainConfig c;
        c.optimizer = kind;
        update_step(p, g, state, c);
        EXPECT_EQ(p, (std::vector<double>{1.5, -2.0}));
    }
}

TEST(TrainConfigTest, EffectiveBatchRoundsDown) {
    TrainConfig c;
    c.batch_size = 66;
    EXPECT_EQ(c.effective_batch_size(OrdinalLabelScheme{3, 4}), 64u);
    EXPECT_EQ(c.effective_batch_size(OrdinalLabelScheme{2, 4}), 66u);
    c.batch_size = 3;
    EXPECT_THROW(c.validate(OrdinalLabelScheme{3, 4}), ConfigError);
}

TEST(TrainConfigTest, RejectsBadValues) {
    TrainConfig c;
    c.learning_rate = -1;
    EXPECT_THROW(c.validate(OrdinalLabelScheme{}), ConfigError);
    c = TrainConfig{};
    c.epochs = 0;
    EXPECT_THROW(c.validate(OrdinalLabelScheme{}), ConfigError);
    EXPECT_EQ(parse_optimizer("sgd"), OptimizerKind::sgd);
    EXPECT_THROW(parse_optimizer("adam"), ConfigError);
}

TEST(Train, SeparableDataFits) {
    const Fixture f;
    const auto r = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick());
    ASSERT_EQ(r.log.size(), 10u);
    EXPECT_LT(r.log.back().mean_objective, r.log.front().mean_objective);
}

TEST(Train, SameSeedIdenticalModel) {
    const Fixture f;
    const auto a = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick(5));
    const auto b = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick(5));
    const auto c = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick(6));
    EXPECT_EQ(a.model, b.model);
    EXPECT_FALSE(a.model == c.model);
}

TEST(Train, ZeroLearningRateKeepsInitialParameters) {
    const Fixture f;
    auto c = quick(8);
    c.learning_rate = 0.0;
    c.epochs = 2;
    const auto r = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, c);
    const auto init = ScoringModel::initialize(ModelShape{2, c.hidden_sizes, 3}, c.lambda, mix_seed({c.seed, 0x1417}));
    EXPECT_EQ(r.model, init);
}

TEST(Train, LabelsOfUnlabelledPoolNeverRead) {
    // Training takes only the matrix and index pools; flipping ground truth
    // therefore cannot change the outcome.
    Fixture f;
    const auto a = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick());
    for (auto& l : f.data.labels) l ^= 1;
    const auto b = train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, quick());
    EXPECT_EQ(a.model, b.model);
}

TEST(Train, DivergenceReported) {
    const Fixture f;
    auto c = quick();
    c.optimizer = OptimizerKind::sgd;
    c.learning_rate = 1e300;
    c.epochs = 3;
    EXPECT_THROW(train(f.pools(), f.data.matrix, OrdinalLabelScheme{}, c), TrainingDiverged);
}

TEST(Train, PairSchemeTrains) {
    const Fixture f;
    const auto r = train(f.pools(), f.data.matrix, OrdinalLabelScheme{2, 4.0}, quick());
    EXPECT_EQ(r.model.shape().arity, 2);
    EXPECT_LT(r.log.back().mean_objective, r.log.front().mean_objective);
}
