#include "fswad/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace fswad {

namespace {

constexpr int kFormatVersion = 1;

double relu(double x) { return x > 0.0 ? x : 0.0; }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_record(std::span<const double> record, std::size_t inputs) {
    if (record.size() != inputs) {
        throw DataError("record has " + std::to_string(record.size()) + " features, model expects " +
                        std::to_string(inputs));
    }
    for (double v : record) {
        if (!std::isfinite(v)) throw DataError("record contains a non-finite feature");
    }
}

}  // namespace

std::size_t ModelShape::parameter_count() const {
    std::size_t count = 0;
    std::size_t in = inputs;
    for (std::size_t width : hidden) {
        count += width * in + width;
        in = width;
    }
    return count + static_cast<std::size_t>(arity) * representation_size() + 1;
}

void ModelShape::validate() const {
    if (inputs == 0) throw ConfigError("model needs at least one input feature");
    if (hidden.empty()) throw ConfigError("model needs at least one hidden layer");
    for (std::size_t width : hidden) {
        if (width == 0) throw ConfigError("hidden layer width must be positive");
    }
    if (arity != 2 && arity != 3) throw ConfigError("model arity must be 2 or 3");
}

ScoringModel::ScoringModel(ModelShape shape, double l2) : shape_(std::move(shape)), l2_(l2) {
    shape_.validate();
    if (!(l2 >= 0.0)) throw ConfigError("regularization strength must be non-negative");
    std::size_t offset = 0;
    std::size_t in = shape_.inputs;
    weight_mask_.clear();
    for (std::size_t width : shape_.hidden) {
        Layer layer{in, width, offset, offset + width * in};
        layers_.push_back(layer);
        weight_mask_.insert(weight_mask_.end(), width * in, 1);
        weight_mask_.insert(weight_mask_.end(), width, 0);
        offset = layer.biases + width;
        in = width;
    }
    head_weights_ = offset;
    const std::size_t head_width = static_cast<std::size_t>(shape_.arity) * shape_.representation_size();
    head_bias_ = offset + head_width;
    weight_mask_.insert(weight_mask_.end(), head_width, 1);
    weight_mask_.push_back(0);
    params_.assign(head_bias_ + 1, 0.0);
}

ScoringModel ScoringModel::initialize(ModelShape shape, double l2, std::uint64_t seed) {
    ScoringModel model(std::move(shape), l2);
    Rng rng(seed);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < count; ++i) model.params_[offset + i] = dist(rng);
    };
    for (const auto& layer : model.layers_) fill(layer.weights, layer.in * layer.out, layer.in, layer.out);
    const std::size_t head_width = model.head_bias_ - model.head_weights_;
    fill(model.head_weights_, head_width, head_width, 1);
    return model;
}

std::vector<double> ScoringModel::embed(std::span<const double> record) const {
    check_record(record, shape_.inputs);
    std::vector<double> input(record.begin(), record.end());
    std::vector<double> output;
    for (const auto& layer : layers_) {
        output.assign(layer.out, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = params_.data() + layer.weights + o * layer.in;
            double z = params_[layer.biases + o];
            for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * input[i];
            output[o] = relu(z);
        }
        input.swap(output);
    }
    return input;
}

double ScoringModel::head(std::span<const std::span<const double>> representations) const {
    const std::size_t width = shape_.representation_size();
    if (representations.size() != static_cast<std::size_t>(shape_.arity)) {
        throw DataError("tuple has " + std::to_string(representations.size()) + " members, model expects " +
                        std::to_string(shape_.arity));
    }
    double s = params_[head_bias_];
    for (std::size_t p = 0; p < representations.size(); ++p) {
        const double* w = params_.data() + head_weights_ + p * width;
        for (std::size_t j = 0; j < width; ++j) s += w[j] * representations[p][j];
    }
    return s;
}

TupleScore ScoringModel::forward(std::span<const std::span<const double>> records) const {
    if (records.size() != static_cast<std::size_t>(shape_.arity)) {
        throw DataError("tuple has " + std::to_string(records.size()) + " members, model expects " +
                        std::to_string(shape_.arity));
    }
    TupleScore out;
    for (const auto& record : records) out.representations.push_back(embed(record));
    std::vector<std::span<const double>> views(out.representations.begin(), out.representations.end());
    out.score = head(views);
    for (const auto& rep : out.representations) out.combined.insert(out.combined.end(), rep.begin(), rep.end());
    return out;
}

double ScoringModel::score(std::span<const std::span<const double>> records) const {
    return forward(records).score;
}

double ScoringModel::regularization() const {
    double r = 0.0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (weight_mask_[i]) r += params_[i] * params_[i];
    }
    return r;
}

double loss(double score, double label) { return std::abs(label - score); }

namespace {

std::vector<std::span<const double>> member_rows(const AugmentedInstance& inst, const Matrix& data) {
    std::vector<std::span<const double>> rows;
    rows.reserve(inst.members.size());
    for (std::size_t idx : inst.members) {
        if (idx >= data.rows()) throw DataError("augmented instance refers to row " + std::to_string(idx));
        rows.push_back(data.row(idx));
    }
    return rows;
}

}  // namespace

double objective(const ScoringModel& model, const AugmentedBatch& batch, const Matrix& data) {
    if (batch.instances.empty()) throw DataError("objective of an empty batch");
    double total = 0.0;
    for (const auto& inst : batch.instances) total += loss(model.score(member_rows(inst, data)), inst.label);
    return total / static_cast<double>(batch.size()) + model.l2() * model.regularization();
}

ObjectiveGradient backward(const ScoringModel& model, const AugmentedBatch& batch, const Matrix& data) {
    if (batch.instances.empty()) throw DataError("gradient of an empty batch");
    const auto& params = model.params_;
    const std::size_t depth = model.layers_.size();
    const std::size_t width = model.shape_.representation_size();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    ObjectiveGradient out;
    out.gradient.assign(params.size(), 0.0);
    auto& grad = out.gradient;

    // activations[p][0] is the input record; activations[p][l + 1] the output of layer l.
    std::vector<std::vector<std::vector<double>>> activations(static_cast<std::size_t>(model.shape_.arity),
                                                              std::vector<std::vector<double>>(depth + 1));
    std::vector<double> delta;
    std::vector<double> delta_prev;
    double total_loss = 0.0;

    for (const auto& inst : batch.instances) {
        const auto rows = member_rows(inst, data);
        if (rows.size() != activations.size()) throw DataError("instance arity does not match the model");
        for (std::size_t p = 0; p < rows.size(); ++p) {
            check_record(rows[p], model.shape_.inputs);
            auto& acts = activations[p];
            acts[0].assign(rows[p].begin(), rows[p].end());
            for (std::size_t l = 0; l < depth; ++l) {
                const auto& layer = model.layers_[l];
                acts[l + 1].assign(layer.out, 0.0);
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double* w = params.data() + layer.weights + o * layer.in;
                    double z = params[layer.biases + o];
                    for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * acts[l][i];
                    acts[l + 1][o] = relu(z);
                }
            }
        }
        double s = params[model.head_bias_];
        for (std::size_t p = 0; p < rows.size(); ++p) {
            const double* w = params.data() + model.head_weights_ + p * width;
            const auto& rep = activations[p][depth];
            for (std::size_t j = 0; j < width; ++j) s += w[j] * rep[j];
        }
        total_loss += loss(s, inst.label);

        const double ds = sign(s - inst.label) * inv_batch;
        if (ds == 0.0) continue;
        grad[model.head_bias_] += ds;
        for (std::size_t p = 0; p < rows.size(); ++p) {
            const auto& acts = activations[p];
            const double* w_head = params.data() + model.head_weights_ + p * width;
            double* g_head = grad.data() + model.head_weights_ + p * width;
            delta.assign(width, 0.0);
            for (std::size_t j = 0; j < width; ++j) {
                g_head[j] += ds * acts[depth][j];
                // A post-ReLU activation is positive exactly when its pre-activation is.
                delta[j] = acts[depth][j] > 0.0 ? ds * w_head[j] : 0.0;
            }
            for (std::size_t l = depth; l-- > 0;) {
                const auto& layer = model.layers_[l];
                const auto& input = acts[l];
                for (std::size_t o = 0; o < layer.out; ++o) {
                    if (delta[o] == 0.0) continue;
                    double* gw = grad.data() + layer.weights + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) gw[i] += delta[o] * input[i];
                    grad[layer.biases + o] += delta[o];
                }
                if (l == 0) break;
                delta_prev.assign(layer.in, 0.0);
                for (std::size_t o = 0; o < layer.out; ++o) {
                    if (delta[o] == 0.0) continue;
                    const double* w = params.data() + layer.weights + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) delta_prev[i] += w[i] * delta[o];
                }
                for (std::size_t i = 0; i < layer.in; ++i) {
                    if (!(input[i] > 0.0)) delta_prev[i] = 0.0;
                }
                delta.swap(delta_prev);
            }
        }
    }

    const double l2 = model.l2_;
    if (l2 != 0.0) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (model.weight_mask_[i]) grad[i] += 2.0 * l2 * params[i];
        }
    }
    out.objective = total_loss * inv_batch + l2 * model.regularization();
    return out;
}

std::string model_to_json(const ScoringModel& model, const NormalizationStats* normalization) {
    nlohmann::json j;
    j["format"] = "fswad-model";
    j["version"] = kFormatVersion;
    j["inputs"] = model.shape().inputs;
    j["hidden_sizes"] = model.shape().hidden;
    j["arity"] = model.shape().arity;
    j["lambda"] = model.l2();
    j["parameters"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
    if (normalization) {
        j["normalization"] = {{"min", normalization->min}, {"max", normalization->max}};
    }
    return j.dump();
}

ModelFile model_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "fswad-model") throw DataError("not an fswad model file");
    if (j.value("version", 0) != kFormatVersion) {
        throw DataError("unsupported model file version " + std::to_string(j.value("version", 0)));
    }
    try {
        ModelShape shape;
        shape.inputs = j.at("inputs").get<std::size_t>();
        shape.hidden = j.at("hidden_sizes").get<std::vector<std::size_t>>();
        shape.arity = j.at("arity").get<int>();
        ModelFile file{ScoringModel(shape, j.at("lambda").get<double>()), std::nullopt};
        const auto params = j.at("parameters").get<std::vector<double>>();
        if (params.size() != file.model.parameters().size()) {
            throw DataError("model file holds " + std::to_string(params.size()) + " parameters, shape needs " +
                            std::to_string(file.model.parameters().size()));
        }
        std::copy(params.begin(), params.end(), file.model.parameters().begin());
        if (j.contains("normalization")) {
            NormalizationStats stats;
            stats.min = j["normalization"].at("min").get<std::vector<double>>();
            stats.max = j["normalization"].at("max").get<std::vector<double>>();
            if (stats.min.size() != shape.inputs || stats.max.size() != shape.inputs) {
                throw DataError("model normalization does not match its input width");
            }
            file.normalization = std::move(stats);
        }
        return file;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ScoringModel& model, const NormalizationStats* normalization) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file " + path.string());
    out << model_to_json(model, normalization) << '\n';
    if (!out) throw DataError("failed writing model file " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

}  // namespace fswad
