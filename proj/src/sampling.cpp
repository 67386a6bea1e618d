#include "fswad/sampling.hpp"

#include "fswad/ingest.hpp"
#include "fswad/settings.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fswad {

double SampleSetSpec::available_anomaly_percent() const {
    const auto available = available_size();
    if (available == 0) return 0.0;
    return 100.0 * static_cast<double>(anomaly_total - labelled_count) / static_cast<double>(available);
}

void SampleSetSpec::validate() const {
    if (normal_count == 0) throw ConfigError("SampleSet spec needs at least one normal row");
    if (labelled_count == 0) throw ConfigError("SampleSet spec needs at least one labelled anomaly");
    if (labelled_count > anomaly_total) {
        throw ConfigError("labelled anomalies (" + std::to_string(labelled_count) + ") exceed anomaly total (" +
                          std::to_string(anomaly_total) + ")");
    }
    if (static_cast<double>(labelled_count) > kMaxLabelledShare * static_cast<double>(normal_count)) {
        throw ConfigError("labelled anomalies (" + std::to_string(labelled_count) + ") must stay below " +
                          std::to_string(kMaxLabelledShare) + " of the normal count (" +
                          std::to_string(normal_count) + ")");
    }
    if (std::abs(available_anomaly_percent() - anomaly_percent) > 0.5) {
        throw ConfigError("available-set contamination " + std::to_string(available_anomaly_percent()) +
                          "% is not within 0.5 of the target " + std::to_string(anomaly_percent) + "%");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
}

std::vector<SampleSet> build_sample_sets(const EncodedDataset& dataset, const SampleSetSpec& spec,
                                         std::size_t count) {
    spec.validate();
    std::vector<std::size_t> normals;
    std::vector<std::size_t> anomalies;
    for (std::size_t i = 0; i < dataset.size(); ++i) (dataset.labels[i] ? anomalies : normals).push_back(i);

    if (normals.size() < count * spec.normal_count) {
        throw DataError("dataset has " + std::to_string(normals.size()) + " normal rows, " + std::to_string(count) +
                        " SampleSets need " + std::to_string(count * spec.normal_count));
    }
    if (anomalies.size() < count * spec.anomaly_total) {
        throw DataError("dataset has " + std::to_string(anomalies.size()) + " anomalous rows, " +
                        std::to_string(count) + " SampleSets need " + std::to_string(count * spec.anomaly_total));
    }

    Rng rng(spec.seed);
    std::shuffle(normals.begin(), normals.end(), rng);
    std::shuffle(anomalies.begin(), anomalies.end(), rng);

    std::vector<SampleSet> sets(count);
    for (std::size_t s = 0; s < count; ++s) {
        auto& set = sets[s];
        const auto n_begin = normals.begin() + static_cast<std::ptrdiff_t>(s * spec.normal_count);
        const auto a_begin = anomalies.begin() + static_cast<std::ptrdiff_t>(s * spec.anomaly_total);
        std::vector<std::size_t> drawn(a_begin, a_begin + static_cast<std::ptrdiff_t>(spec.anomaly_total));

        // Draw order is already random, so the first eligible rows form the labelled pool.
        std::vector<std::size_t> rest;
        for (std::size_t idx : drawn) {
            const bool eligible = !spec.exclude_attack_families.contains(dataset.families[idx]);
            if (eligible && set.labelled.size() < spec.labelled_count) {
                set.labelled.push_back(idx);
            } else {
                rest.push_back(idx);
            }
        }
        if (set.labelled.size() < spec.labelled_count) {
            throw DataError("SampleSet " + std::to_string(s) + " has only " + std::to_string(set.labelled.size()) +
                            " anomalies outside the excluded families");
        }
        set.unlabelled.assign(n_begin, n_begin + static_cast<std::ptrdiff_t>(spec.normal_count));
        set.unlabelled.insert(set.unlabelled.end(), rest.begin(), rest.end());
        std::sort(set.unlabelled.begin(), set.unlabelled.end());
    }
    return sets;
}

std::size_t test_row_count(std::size_t available, double test_fraction) {
    const double exact = test_fraction * static_cast<double>(available);
    // Guard against 22230 * (2/9) landing a hair below 4940.
    return static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
}

std::size_t test_anomaly_count(std::size_t available_anomalies, double test_fraction) {
    return static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(available_anomalies)));
}

SampleSet split_train_test(const SampleSet& sample_set, std::span<const std::uint8_t> labels, double test_fraction,
                           std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (!sample_set.test.empty()) throw DataError("SampleSet is already split");
    std::vector<std::size_t> normals;
    std::vector<std::size_t> anomalies;
    for (std::size_t idx : sample_set.unlabelled) {
        if (idx >= labels.size()) throw DataError("SampleSet row index out of range");
        (labels[idx] ? anomalies : normals).push_back(idx);
    }
    const std::size_t available = normals.size() + anomalies.size();
    const std::size_t test_total = test_row_count(available, test_fraction);
    if (test_total == 0 || test_total >= available) {
        throw DataError("test fraction " + std::to_string(test_fraction) + " leaves an empty side of " +
                        std::to_string(available) + " rows");
    }
    std::size_t test_anomalies = std::min(test_anomaly_count(anomalies.size(), test_fraction), anomalies.size());
    test_anomalies = std::min(test_anomalies, test_total);
    std::size_t test_normals = test_total - test_anomalies;
    if (test_normals > normals.size()) {
        test_normals = normals.size();
        test_anomalies = test_total - test_normals;
    }

    Rng rng(seed);
    std::shuffle(normals.begin(), normals.end(), rng);
    std::shuffle(anomalies.begin(), anomalies.end(), rng);

    SampleSet out;
    out.labelled = sample_set.labelled;
    out.test.assign(anomalies.begin(), anomalies.begin() + static_cast<std::ptrdiff_t>(test_anomalies));
    out.test.insert(out.test.end(), normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(test_normals));
    out.unlabelled.assign(anomalies.begin() + static_cast<std::ptrdiff_t>(test_anomalies), anomalies.end());
    out.unlabelled.insert(out.unlabelled.end(), normals.begin() + static_cast<std::ptrdiff_t>(test_normals),
                          normals.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.unlabelled.begin(), out.unlabelled.end());
    return out;
}

std::string manifest_to_json(const SampleSetManifest& m) {
    nlohmann::ordered_json j;
    j["format"] = "fswad-sampleset";
    j["version"] = 1;
    j["data"] = m.data_path;
    j["seed"] = m.seed;
    j["index"] = m.index;
    j["spec"] = {
        {"normal_count", m.spec.normal_count},
        {"anomaly_total", m.spec.anomaly_total},
        {"labelled_count", m.spec.labelled_count},
        {"anomaly_percent", m.spec.anomaly_percent},
        {"test_fraction", m.spec.test_fraction},
        {"seed", m.spec.seed},
        {"exclude_attack_families", m.spec.exclude_attack_families},
    };
    j["labelled"] = m.set.labelled;
    j["unlabelled"] = m.set.unlabelled;
    j["test"] = m.set.test;
    return j.dump();
}

SampleSetManifest manifest_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "fswad-sampleset" || j.value("version", 0) != 1) {
            throw DataError("not an fswad SampleSet manifest (version 1)");
        }
        SampleSetManifest m;
        m.data_path = j.at("data").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.index = j.at("index").get<std::size_t>();
        const auto& spec = j.at("spec");
        m.spec.normal_count = spec.at("normal_count").get<std::size_t>();
        m.spec.anomaly_total = spec.at("anomaly_total").get<std::size_t>();
        m.spec.labelled_count = spec.at("labelled_count").get<std::size_t>();
        m.spec.anomaly_percent = spec.at("anomaly_percent").get<double>();
        m.spec.test_fraction = spec.at("test_fraction").get<double>();
        m.spec.seed = spec.at("seed").get<std::uint64_t>();
        m.spec.exclude_attack_families = spec.at("exclude_attack_families").get<std::set<std::string>>();
        m.set.labelled = j.at("labelled").get<std::vector<std::size_t>>();
        m.set.unlabelled = j.at("unlabelled").get<std::vector<std::size_t>>();
        m.set.test = j.at("test").get<std::vector<std::size_t>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed SampleSet manifest: ") + e.what());
    }
}

void save_manifest(const SampleSetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << manifest_to_json(manifest) << '\n';
}

SampleSetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return manifest_from_json(buffer.str());
}

SampleSetSpec parse_sample_set_spec(std::string_view text, std::string_view origin) {
    SampleSetSpec spec;
    bool have[4] = {false, false, false, false};
    for (const auto& kv : parse_key_values(text, origin)) {
        if (kv.key == "normal_count") {
            spec.normal_count = static_cast<std::size_t>(parse_integer(kv.value, kv.key));
            have[0] = true;
        } else if (kv.key == "anomaly_total") {
            spec.anomaly_total = static_cast<std::size_t>(parse_integer(kv.value, kv.key));
            have[1] = true;
        } else if (kv.key == "labelled_count") {
            spec.labelled_count = static_cast<std::size_t>(parse_integer(kv.value, kv.key));
            have[2] = true;
        } else if (kv.key == "anomaly_percent") {
            spec.anomaly_percent = parse_real(kv.value, kv.key);
            have[3] = true;
        } else if (kv.key == "test_fraction") {
            spec.test_fraction = parse_real(kv.value, kv.key);
        } else if (kv.key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_integer(kv.value, kv.key));
        } else if (kv.key == "exclude_attack_families") {
            for (auto& f : split_list(kv.value)) spec.exclude_attack_families.insert(f);
        } else {
            throw ConfigError(std::string(origin) + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
        }
    }
    for (bool h : have) {
        if (!h) throw ConfigError(std::string(origin) + ": spec needs normal_count, anomaly_total, labelled_count and anomaly_percent");
    }
    spec.validate();
    return spec;
}

}  // namespace fswad
