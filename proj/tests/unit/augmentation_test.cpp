#include "fswad/augmentation.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>

using namespace fswad;

namespace {

constexpr Source A = Source::labelled_anomaly;
constexpr Source U = Source::unlabelled;

double label_of(std::initializer_list<Source> tags, OrdinalLabelScheme scheme = {}) {
    std::vector<Source> v(tags);
    return label_of_combination(v, scheme);
}

struct Pools {
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> unlabelled;
    Pools(std::size_t a, std::size_t u) : labelled(a), unlabelled(u) {
        std::iota(labelled.begin(), labelled.end(), 0);
        std::iota(unlabelled.begin(), unlabelled.end(), a);
    }
    TrainingPools view() const { return {labelled, unlabelled}; }
};

}  // namespace

TEST(Scheme, DefaultLabels) {
    const OrdinalLabelScheme s;
    EXPECT_EQ(s.labels(), (std::vector<double>{12, 8, 4, 0}));
    EXPECT_EQ(s.default_threshold(), 12.0);
    EXPECT_EQ(s.class_count(), 4u);
    const OrdinalLabelScheme pair{2, 4.0};
    EXPECT_EQ(pair.labels(), (std::vector<double>{8, 4, 0}));
    EXPECT_EQ(pair.default_threshold(), 8.0);
}

TEST(Scheme, EqualSpacingForAnyGap) {
    for (double m : {0.5, 1.0, 4.0, 7.25}) {
        const auto l = OrdinalLabelScheme{3, m}.labels();
        for (std::size_t i = 0; i + 1 < l.size(); ++i) {
            EXPECT_GT(l[i], l[i + 1]);
            EXPECT_DOUBLE_EQ(l[i] - l[i + 1], m);
        }
        EXPECT_EQ(l.back(), 0.0);
    }
}

TEST(Scheme, Validation) {
    EXPECT_THROW((OrdinalLabelScheme{4, 4.0}.validate()), ConfigError);
    EXPECT_THROW((OrdinalLabelScheme{3, 0.0}.validate()), ConfigError);
}

TEST(Combination, ExampleTuples) {
    EXPECT_EQ(label_of({A, A, U}), 8.0);
    EXPECT_EQ(label_of({U, U, U}), 0.0);
    EXPECT_EQ(label_of({U, A, A}), 8.0);
    EXPECT_EQ(label_of({A, U, A}), 8.0);
    EXPECT_EQ(label_of({A, A, A}), 12.0);
}

TEST(Combination, EnumerationMultiplicities) {
    std::map<double, int> counts;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<Source> tags;
        int anomalies = 0;
        for (int p = 0; p < 3; ++p) {
            const bool a = (mask >> p) & 1;
            tags.push_back(a ? A : U);
            anomalies += a;
        }
        const double label = label_of_combination(tags, OrdinalLabelScheme{});
        ++counts[label];
        EXPECT_EQ(label, 4.0 * anomalies);
    }
    EXPECT_EQ(counts, (std::map<double, int>{{0, 1}, {4, 3}, {8, 3}, {12, 1}}));
}

TEST(Combination, WrongArity) {
    EXPECT_THROW(label_of({A, U}), Error);
}

TEST(SampleBatch, BalancedClassesAndConsistentLabels) {
    const Pools pools(3, 50);
    Rng rng(1);
    const auto batch = sample_batch(pools.view(), OrdinalLabelScheme{}, 8, rng);
    ASSERT_EQ(batch.size(), 8u);
    std::map<double, int> counts;
    for (const auto& inst : batch.instances) {
        ++counts[inst.label];
        ASSERT_EQ(inst.members.size(), 3u);
        EXPECT_EQ(inst.label, label_of_combination(inst.tags, OrdinalLabelScheme{}));
        for (std::size_t p = 0; p < 3; ++p) {
            const bool from_a = inst.members[p] < 3;
            EXPECT_EQ(from_a, inst.tags[p] == A);
        }
    }
    EXPECT_EQ(counts, (std::map<double, int>{{0, 2}, {4, 2}, {8, 2}, {12, 2}}));
}

TEST(SampleBatch, Replay) {
    const Pools pools(5, 40);
    Rng a(77), b(77);
    const auto x = sample_batch(pools.view(), OrdinalLabelScheme{}, 64, a);
    const auto y = sample_batch(pools.view(), OrdinalLabelScheme{}, 64, b);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x.instances[i].members, y.instances[i].members);
        EXPECT_EQ(x.instances[i].tags, y.instances[i].tags);
    }
}

TEST(SampleBatch, AllAnomalyTupleCoversEveryCombination) {
    // With three labelled anomalies there are 3^3 ordered (A,A,A) member
    // choices, 3^2 for pairs; sampling with replacement reaches all of them.
    for (int k : {3, 2}) {
        const Pools pools(3, 20);
        const OrdinalLabelScheme scheme{k, 4.0};
        std::set<std::vector<std::size_t>> seen;
        Rng rng(5);
        for (int i = 0; i < 400; ++i) {
            for (const auto& inst : sample_batch(pools.view(), scheme, scheme.class_count() * 4, rng).instances) {
                if (inst.label == scheme.labels().front()) seen.insert(inst.members);
            }
        }
        EXPECT_EQ(seen.size(), k == 3 ? 27u : 9u);
    }
}

TEST(SampleBatch, ArrangementsUniformWithinClass) {
    const Pools pools(4, 30);
    Rng rng(3);
    std::map<std::vector<Source>, int> c2;
    for (int i = 0; i < 2000; ++i) {
        for (const auto& inst : sample_batch(pools.view(), OrdinalLabelScheme{}, 4, rng).instances) {
            if (inst.label == 8.0) ++c2[inst.tags];
        }
    }
    ASSERT_EQ(c2.size(), 3u);
    for (const auto& [tags, n] : c2) EXPECT_NEAR(n, 2000.0 / 3.0, 100.0);
}

TEST(SampleBatch, UniformCompositionDrawsFromUnion) {
    const Pools pools(10, 90);
    Rng rng(8);
    std::size_t a = 0, total = 0;
    for (int i = 0; i < 200; ++i) {
        for (const auto& inst : sample_batch(pools.view(), OrdinalLabelScheme{}, 10, rng, BatchComposition::uniform)
                                    .instances) {
            for (auto t : inst.tags) {
                a += t == A;
                ++total;
            }
            EXPECT_EQ(inst.label, label_of_combination(inst.tags, OrdinalLabelScheme{}));
        }
    }
    EXPECT_NEAR(static_cast<double>(a) / static_cast<double>(total), 0.1, 0.02);
}

TEST(SampleBatch, EmptyPoolsRejected) {
    const Pools no_a(0, 10);
    const Pools no_u(3, 0);
    Rng rng(1);
    EXPECT_THROW(sample_batch(no_a.view(), OrdinalLabelScheme{}, 8, rng), Error);
    EXPECT_THROW(sample_batch(no_u.view(), OrdinalLabelScheme{}, 8, rng), Error);
}

TEST(SampleBatch, Composition) {
    EXPECT_EQ(parse_batch_composition("balanced"), BatchComposition::balanced);
    EXPECT_EQ(parse_batch_composition("uniform"), BatchComposition::uniform);
    EXPECT_THROW(parse_batch_composition("x"), ConfigError);
}
