#pragma once

#include "fswad/augmentation.hpp"
#include "fswad/model.hpp"

#include <filesystem>
#include <vector>

namespace fswad {

enum class OptimizerKind { sgd, rmsprop };

OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t steps_per_epoch = 20;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::rmsprop;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    double lambda = 0.01;
    std::vector<std::size_t> hidden_sizes{20};
    BatchComposition composition = BatchComposition::balanced;
    std::uint64_t seed = 0;

    /// Batch size rounded down to a multiple of the scheme's class count.
    std::size_t effective_batch_size(const OrdinalLabelScheme& scheme) const;
    void validate(const OrdinalLabelScheme& scheme) const;
};

/// Per-parameter state carried between updates (RMSprop running mean of g^2).
struct OptimizerState {
    std::vector<double> mean_square;
};

/// sgd:     p -= lr * g
/// rmsprop: v = decay * v + (1 - decay) * g^2;  p -= lr * g / (sqrt(v) + eps)
void update_step(std::span<double> parameters, std::span<const double> gradient, OptimizerState& state,
                 const TrainConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_objective = 0.0;
};

struct TrainResult {
    ScoringModel model;
    std::vector<EpochRecord> log;
};

/// Raised when the objective stops being finite.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

/// Minimizes the batch objective over epochs * steps_per_epoch updates, with a
/// fresh augmented batch per step. `data` rows referenced by the pools must be
/// normalized; labels of the unlabelled pool are never consulted.
TrainResult train(const TrainingPools& pools, const Matrix& data, const OrdinalLabelScheme& scheme,
                  const TrainConfig& config);

void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path);

}  // namespace fswad
