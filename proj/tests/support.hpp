#pragma once

// Shared fixtures: synthetic datasets and an independent forward pass used as
// an oracle against the library's model code.

#include "fswad/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fswad::testing {

/// Two Gaussian clusters: normals around (0,..,0), anomalies around (1,..,1).
inline EncodedDataset gaussian_clusters(std::size_t normals, std::size_t anomalies, double sigma, std::uint64_t seed,
                                        std::size_t dims = 2) {
    EncodedDataset d;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> row(dims);
    for (std::size_t i = 0; i < normals + anomalies; ++i) {
        const bool anomaly = i >= normals;
        for (auto& v : row) v = (anomaly ? 1.0 : 0.0) + noise(rng);
        d.matrix.append_row(row);
        d.labels.push_back(anomaly ? 1 : 0);
        d.families.push_back(anomaly ? "attack" : "normal");
    }
    for (std::size_t c = 0; c < dims; ++c) d.feature_names.push_back("f" + std::to_string(c));
    d.provenance.source = "synthetic";
    return d;
}

/// Spec taking every row of `gaussian_clusters(normals, anomalies, ..)`.
inline SampleSetSpec whole_dataset_spec(std::size_t normals, std::size_t anomalies, std::size_t labelled,
                                        std::uint64_t seed) {
    SampleSetSpec s;
    s.normal_count = normals;
    s.anomaly_total = anomalies;
    s.labelled_count = labelled;
    s.seed = seed;
    s.anomaly_percent = s.available_anomaly_percent();
    return s;
}

/// Plain re-derivation of the network: loops over the flat parameter layout
/// without sharing code with ScoringModel. Also reports the smallest
/// |pre-activation| seen, so callers can stay clear of ReLU kinks.
struct NaiveNet {
    std::size_t inputs;
    std::vector<std::size_t> hidden;
    int arity;

    std::vector<double> embed(const std::vector<double>& p, std::span<const double> x, double& min_preact) const {
        std::vector<double> a(x.begin(), x.end());
        std::size_t at = 0;
        std::size_t in = inputs;
        for (std::size_t out : hidden) {
            std::vector<double> z(out);
            for (std::size_t o = 0; o < out; ++o) {
                double s = 0.0;
                for (std::size_t i = 0; i < in; ++i) s += p[at + o * in + i] * a[i];
                z[o] = s;
            }
            at += out * in;
            for (std::size_t o = 0; o < out; ++o) {
                z[o] += p[at + o];
                min_preact = std::min(min_preact, std::abs(z[o]));
                z[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
            at += out;
            a = std::move(z);
            in = out;
        }
        return a;
    }

    double score(const std::vector<double>& p, const std::vector<std::span<const double>>& records,
                 double& min_preact) const {
        std::size_t head = 0;
        std::size_t in = inputs;
        for (std::size_t out : hidden) {
            head += out * in + out;
            in = out;
        }
        const std::size_t h = hidden.back();
        double s = p[head + static_cast<std::size_t>(arity) * h];
        for (int pos = 0; pos < arity; ++pos) {
            const auto c = embed(p, records[static_cast<std::size_t>(pos)], min_preact);
            for (std::size_t j = 0; j < h; ++j) s += p[head + static_cast<std::size_t>(pos) * h + j] * c[j];
        }
        return s;
    }

    /// Mean absolute error plus l2 * sum of squared weights.
    double objective(const std::vector<double>& p, const AugmentedBatch& batch, const Matrix& data, double l2,
                     double& min_preact, double& min_residual) const {
        double total = 0.0;
        for (const auto& inst : batch.instances) {
            std::vector<std::span<const double>> rec;
            for (auto m : inst.members) rec.push_back(data.row(m));
            const double r = score(p, rec, min_preact) - inst.label;
            min_residual = std::min(min_residual, std::abs(r));
            total += std::abs(r);
        }
        double reg = 0.0;
        std::size_t at = 0;
        std::size_t in = inputs;
        for (std::size_t out : hidden) {
            for (std::size_t i = 0; i < out * in; ++i) reg += p[at + i] * p[at + i];
            at += out * in + out;
            in = out;
        }
        for (std::size_t i = 0; i < static_cast<std::size_t>(arity) * hidden.back(); ++i) reg += p[at + i] * p[at + i];
        return total / static_cast<double>(batch.size()) + l2 * reg;
    }
};

}  // namespace fswad::testing
