#pragma once

#include "fswad/augmentation.hpp"
#include "fswad/common.hpp"
#include "fswad/ingest.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace fswad {

class ScoringModel;

struct ModelShape {
    std::size_t inputs = 0;
    /// Widths of the ReLU layers of the shared sub-network.
    std::vector<std::size_t> hidden{20};
    int arity = 3;

    std::size_t representation_size() const { return hidden.back(); }
    std::size_t parameter_count() const;
    void validate() const;

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct ObjectiveGradient {
    double objective = 0.0;
    std::vector<double> gradient;
};

/// Output of one forward pass over a k-tuple.
struct TupleScore {
    double score = 0.0;
    /// Sub-network output per tuple position.
    std::vector<std::vector<double>> representations;
    /// Ordered concatenation of `representations`.
    std::vector<double> combined;
};

/// Anomaly scoring network: one sub-network applied with the same parameters
/// to every tuple member, followed by a linear head over the concatenated
/// representations.
///
/// Parameters live in one flat vector. Layout, per hidden layer: weights
/// (out x in, row-major) then biases; after the last layer the head weights
/// (arity * representation_size) and the head bias.
class ScoringModel {
public:
    ScoringModel() = default;
    ScoringModel(ModelShape shape, double l2);

    /// Glorot-uniform weights, zero biases.
    static ScoringModel initialize(ModelShape shape, double l2, std::uint64_t seed);

    const ModelShape& shape() const { return shape_; }
    double l2() const { return l2_; }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    /// False for bias entries, which the regularizer skips.
    bool is_weight(std::size_t index) const { return weight_mask_[index] != 0; }

    /// Sub-network output for one record.
    std::vector<double> embed(std::span<const double> record) const;
    /// Linear head over per-position representations.
    double head(std::span<const std::span<const double>> representations) const;

    TupleScore forward(std::span<const std::span<const double>> records) const;
    double score(std::span<const std::span<const double>> records) const;

    /// Sum of squared weights, biases excluded.
    double regularization() const;

    friend bool operator==(const ScoringModel& a, const ScoringModel& b) {
        return a.shape_ == b.shape_ && a.l2_ == b.l2_ && a.params_ == b.params_;
    }

private:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t weights = 0;
        std::size_t biases = 0;
    };

    friend ObjectiveGradient backward(const ScoringModel&, const AugmentedBatch&, const Matrix&);

    ModelShape shape_;
    double l2_ = 0.0;
    std::vector<Layer> layers_;
    std::size_t head_weights_ = 0;
    std::size_t head_bias_ = 0;
    std::vector<double> params_;
    std::vector<std::uint8_t> weight_mask_;
};

/// Absolute prediction error |label - score|.
double loss(double score, double label);

/// Mean absolute error over the batch plus l2 * regularization().
double objective(const ScoringModel& model, const AugmentedBatch& batch, const Matrix& data);

/// Exact gradient of `objective` with d|u|/du = sign(u) (0 at 0) and
/// ReLU'(0) = 0. Shared sub-network gradients are summed over positions.
ObjectiveGradient backward(const ScoringModel& model, const AugmentedBatch& batch, const Matrix& data);

/// Model file contents: the network plus the normalization fitted on its
/// training rows, when known.
struct ModelFile {
    ScoringModel model;
    std::optional<NormalizationStats> normalization;
};

/// JSON model file, format version 1. Doubles round-trip bit-exactly.
void save_model(const std::filesystem::path& path, const ScoringModel& model,
                const NormalizationStats* normalization = nullptr);
ModelFile load_model(const std::filesystem::path& path);

std::string model_to_json(const ScoringModel& model, const NormalizationStats* normalization = nullptr);
ModelFile model_from_json(std::string_view text);

}  // namespace fswad
