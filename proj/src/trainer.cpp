#include "fswad/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace fswad {

OptimizerKind parse_optimizer(std::string_view text) {
    if (text == "sgd") return OptimizerKind::sgd;
    if (text == "rmsprop") return OptimizerKind::rmsprop;
    throw ConfigError("optimizer must be sgd or rmsprop, got '" + std::string(text) + "'");
}

std::size_t TrainConfig::effective_batch_size(const OrdinalLabelScheme& scheme) const {
    if (composition == BatchComposition::uniform) return batch_size;
    const std::size_t classes = scheme.class_count();
    return batch_size - batch_size % classes;
}

void TrainConfig::validate(const OrdinalLabelScheme& scheme) const {
    scheme.validate();
    if (epochs == 0 || steps_per_epoch == 0) throw ConfigError("epochs and steps_per_epoch must be positive");
    if (batch_size < scheme.class_count()) {
        throw ConfigError("batch size " + std::to_string(batch_size) + " is below the class count " +
                          std::to_string(scheme.class_count()));
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
    if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw ConfigError("rmsprop_decay must lie in [0, 1)");
    if (!(rmsprop_epsilon > 0.0)) throw ConfigError("rmsprop_epsilon must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (hidden_sizes.empty()) throw ConfigError("hidden_sizes must name at least one layer");
}

void update_step(std::span<double> parameters, std::span<const double> gradient, OptimizerState& state,
                 const TrainConfig& config) {
    if (parameters.size() != gradient.size()) {
        throw DataError("gradient has " + std::to_string(gradient.size()) + " entries, model has " +
                        std::to_string(parameters.size()));
    }
    const double lr = config.learning_rate;
    if (config.optimizer == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < parameters.size(); ++i) parameters[i] -= lr * gradient[i];
        return;
    }
    if (state.mean_square.size() != parameters.size()) state.mean_square.assign(parameters.size(), 0.0);
    const double decay = config.rmsprop_decay;
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        const double g = gradient[i];
        double& v = state.mean_square[i];
        v = decay * v + (1.0 - decay) * g * g;
        parameters[i] -= lr * g / (std::sqrt(v) + config.rmsprop_epsilon);
    }
}

TrainResult train(const TrainingPools& pools, const Matrix& data, const OrdinalLabelScheme& scheme,
                  const TrainConfig& config) {
    config.validate(scheme);
    if (pools.labelled.empty() || pools.unlabelled.empty()) throw DataError("training pools must be non-empty");

    ModelShape shape{data.cols(), config.hidden_sizes, scheme.k};
    TrainResult result{ScoringModel::initialize(shape, config.lambda, mix_seed({config.seed, 0x1417})), {}};
    OptimizerState state;
    const std::size_t batch_size = config.effective_batch_size(scheme);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double sum = 0.0;
        for (std::size_t step = 0; step < config.steps_per_epoch; ++step) {
            Rng rng(mix_seed({config.seed, epoch, step}));
            const auto batch = sample_batch(pools, scheme, batch_size, rng, config.composition);
            const auto og = backward(result.model, batch, data);
            if (!std::isfinite(og.objective)) {
                throw TrainingDiverged("objective became non-finite at epoch " + std::to_string(epoch + 1) +
                                       ", step " + std::to_string(step + 1) + "; lower learning_rate");
            }
            sum += og.objective;
            update_step(result.model.parameters(), og.gradient, state, config);
        }
        result.log.push_back({epoch + 1, sum / static_cast<double>(config.steps_per_epoch)});
    }
    return result;
}

void write_training_log(const std::vector<EpochRecord>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write training log " + path.string());
    out << "epoch,mean_objective\n";
    char buf[64];
    for (const auto& rec : log) {
        std::snprintf(buf, sizeof buf, "%.10g", rec.mean_objective);
        out << rec.epoch << ',' << buf << '\n';
    }
}

}  // namespace fswad
