#include "fswad/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace fswad {

std::string_view to_string(Method method) { return method == Method::triplet ? "triplet" : "pair"; }

Method parse_method(std::string_view text) {
    if (text == "triplet") return Method::triplet;
    if (text == "pair") return Method::pair;
    throw ConfigError("unknown method '" + std::string(text) + "' (expected triplet or pair)");
}

std::vector<Method> parse_methods(std::string_view text) {
    std::vector<Method> out;
    for (const auto& item : split_list(text)) {
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) throw ConfigError("no methods selected");
    return out;
}

int tuple_size(Method method) { return method == Method::triplet ? 3 : 2; }

const std::vector<DatasetProfile>& dataset_profiles() {
    static const std::vector<DatasetProfile> profiles = [] {
        auto spec = [](std::size_t normals, std::size_t anomalies) {
            SampleSetSpec s;
            s.normal_count = normals;
            s.anomaly_total = anomalies;
            s.labelled_count = 120;
            s.anomaly_percent = 10.0;
            return s;
        };
        return std::vector<DatasetProfile>{
            {"nslkdd", "nslkdd.conf", spec(13460, 1620)},
            {"cicids2018", "cicids2018.conf", spec(20000, 2350)},
            {"toniot", "toniot.conf", spec(1948, 337)},
        };
    }();
    return profiles;
}

const DatasetProfile& dataset_profile(std::string_view id) {
    for (const auto& p : dataset_profiles()) {
        if (p.id == id) return p;
    }
    throw ConfigError("unknown dataset '" + std::string(id) + "' (expected nslkdd, cicids2018 or toniot)");
}

SampleSetSpec vary_anomaly_percent(const SampleSetSpec& spec, double percent, std::size_t labelled) {
    if (!(percent > 0.0 && percent < 50.0)) throw ConfigError("anomaly percent must lie in (0, 50)");
    const double share = percent / 100.0;
    const auto contamination =
        static_cast<std::size_t>(std::llround(share * static_cast<double>(spec.normal_count) / (1.0 - share)));
    if (contamination < 1) {
        throw ConfigError(std::to_string(percent) + "% of " + std::to_string(spec.normal_count) +
                          " normals leaves no contaminating anomaly");
    }
    SampleSetSpec out = spec;
    out.labelled_count = labelled;
    out.anomaly_total = contamination + labelled;
    out.anomaly_percent = percent;
    if (out.anomaly_total < out.labelled_count) throw ConfigError("anomaly total below labelled count");
    return out;
}

void ExperimentConfig::validate() const {
    if (experiment_id < 1 || experiment_id > 3) throw ConfigError("experiment id must be 1, 2 or 3");
    if (labelled_counts.empty() || anomaly_percents.empty()) throw ConfigError("sweep lists must be non-empty");
    for (auto c : labelled_counts) {
        if (c == 0) throw ConfigError("labelled counts must be positive");
    }
    for (auto p : anomaly_percents) {
        if (!(p > 0.0)) throw ConfigError("anomaly percents must be positive");
    }
    if (labelled_fixed == 0 || !(percent_fixed > 0.0)) throw ConfigError("fixed sweep values must be positive");
    if (sample_set_count == 0) throw ConfigError("sample_set_count must be positive");
    if (methods.empty()) throw ConfigError("no methods selected");
    if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
    if (jobs == 0) throw ConfigError("jobs must be at least 1");
}

TrainConfig make_train_config(const Settings& s) {
    TrainConfig c;
    c.epochs = static_cast<std::size_t>(s.integer("epochs"));
    c.steps_per_epoch = static_cast<std::size_t>(s.integer("steps_per_epoch"));
    c.batch_size = static_cast<std::size_t>(s.integer("batch_size"));
    c.learning_rate = s.real("learning_rate");
    c.optimizer = parse_optimizer(s.text("optimizer"));
    c.rmsprop_decay = s.real("rmsprop_decay");
    c.rmsprop_epsilon = s.real("rmsprop_epsilon");
    c.lambda = s.real("lambda");
    c.hidden_sizes.clear();
    for (auto h : s.integers("hidden_sizes")) {
        if (h <= 0) throw ConfigError("hidden_sizes entries must be positive");
        c.hidden_sizes.push_back(static_cast<std::size_t>(h));
    }
    c.composition = parse_batch_composition(s.text("batch_composition"));
    c.seed = static_cast<std::uint64_t>(s.integer("seed"));
    return c;
}

OrdinalLabelScheme make_scheme(const Settings& s) {
    OrdinalLabelScheme scheme{static_cast<int>(s.integer("tuple_size")), s.real("gap")};
    scheme.validate();
    return scheme;
}

InferenceConfig make_inference_config(const Settings& s, const OrdinalLabelScheme& scheme) {
    InferenceConfig c;
    const auto reps = s.integer("repetitions");
    if (reps < 1) throw ConfigError("repetitions must be at least 1");
    c.repetitions = static_cast<std::size_t>(reps);
    c.threshold = s.text("threshold") == "auto" ? scheme.default_threshold() : s.real("threshold");
    c.seed = static_cast<std::uint64_t>(s.integer("seed"));
    return c;
}

ExperimentConfig make_experiment_config(const Settings& s, int experiment_id, const DatasetProfile& profile,
                                        std::vector<Method> methods) {
    ExperimentConfig c;
    c.experiment_id = experiment_id;
    c.dataset = profile.id;
    c.labelled_counts.clear();
    for (auto v : s.integers("labelled_counts")) {
        if (v <= 0) throw ConfigError("labelled_counts entries must be positive");
        c.labelled_counts.push_back(static_cast<std::size_t>(v));
    }
    c.anomaly_percents = s.reals("anomaly_percents");
    const auto fixed = s.integer("labelled_fixed");
    if (fixed <= 0) throw ConfigError("labelled_fixed must be positive");
    c.labelled_fixed = static_cast<std::size_t>(fixed);
    c.percent_fixed = s.real("percent_fixed");
    const auto count = s.integer("sample_set_count");
    if (count <= 0) throw ConfigError("sample_set_count must be positive");
    c.sample_set_count = static_cast<std::size_t>(count);
    c.methods = std::move(methods);
    c.base_seed = static_cast<std::uint64_t>(s.integer("seed"));
    c.base_spec = profile.sample_set;
    c.test_fraction = s.real("test_fraction");
    c.base_spec.test_fraction = c.test_fraction;
    c.train = make_train_config(s);
    c.gap = s.real("gap");
    const auto reps = s.integer("repetitions");
    if (reps < 1) throw ConfigError("repetitions must be at least 1");
    c.repetitions = static_cast<std::size_t>(reps);
    if (s.text("threshold") != "auto") c.threshold = s.real("threshold");
    const auto jobs = s.integer("jobs");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    c.jobs = static_cast<std::size_t>(jobs);
    c.validate();
    return c;
}

bool ExperimentResult::all_ok() const {
    for (const auto& p : points) {
        for (const auto& r : p.runs) {
            if (!r.ok) return false;
        }
    }
    return true;
}

double ExperimentResult::mean_auroc(Method method, double value) const {
    for (const auto& p : points) {
        if (p.value == value) {
            auto it = p.summary.find(method);
            if (it == p.summary.end()) break;
            return it->second.auroc.mean;
        }
    }
    throw DataError("no result for method " + std::string(to_string(method)) + " at sweep value " +
                    std::to_string(value));
}

std::uint64_t point_seed(std::uint64_t base_seed, std::string_view dataset, int experiment_id, double sweep_value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", sweep_value);
    return mix_seed({base_seed, hash_text(dataset), static_cast<std::uint64_t>(experiment_id), hash_text(buf)});
}

LocalSampleSet localize(const EncodedDataset& dataset, const SampleSet& set, const NormalizationStats* stats) {
    LocalSampleSet local;
    local.data = Matrix(0, dataset.dims());
    auto add = [&](std::size_t idx, std::vector<std::size_t>& group, std::uint8_t truth) {
        if (idx >= dataset.size()) throw DataError("SampleSet row " + std::to_string(idx) + " out of range");
        group.push_back(local.data.rows());
        local.data.append_row(dataset.matrix.row(idx));
        local.truth.push_back(truth);
        local.source_rows.push_back(idx);
    };
    for (auto idx : set.labelled) add(idx, local.labelled, 0);
    for (auto idx : set.unlabelled) add(idx, local.unlabelled, 0);
    if (stats) {
        local.stats = *stats;
    } else {
        Matrix train_rows(0, dataset.dims());
        for (std::size_t i = 0; i < local.data.rows(); ++i) train_rows.append_row(local.data.row(i));
        local.stats = fit_stats(train_rows);
    }
    for (auto idx : set.test) add(idx, local.test, dataset.labels[idx]);
    apply_normalize_in_place(local.data, local.stats);
    return local;
}

RunResult run_sample_set(const EncodedDataset& dataset, const SampleSet& set, Method method,
                         const ExperimentConfig& config, std::uint64_t seed) {
    RunResult run;
    run.method = method;
    run.seed = seed;
    try {
        const auto local = localize(dataset, set);
        const auto pools = local.pools();

        const OrdinalLabelScheme scheme{tuple_size(method), config.gap};
        TrainConfig train_config = config.train;
        train_config.seed = mix_seed({seed, 2});
        auto trained = train(pools, local.data, scheme, train_config);
        run.log = std::move(trained.log);

        InferenceConfig inference;
        inference.repetitions = config.repetitions;
        inference.threshold = config.threshold.value_or(scheme.default_threshold());
        inference.seed = mix_seed({seed, 3});
        const auto scored = score_dataset(trained.model, local.data, local.test, pools, local.truth, inference);
        run.report = confusion(to_score_labels(scored), inference.threshold);
        run.ok = true;
    } catch (const Error& e) {
        run.error = e.what();
    }
    return run;
}

namespace {

struct PointPlan {
    std::string sweep;
    double value = 0.0;
    SampleSetSpec spec;
    std::size_t labelled_used = 0;
};

std::vector<PointPlan> plan_points(const ExperimentConfig& c) {
    auto spec_at = [&](double percent) {
        if (std::abs(percent - c.base_spec.anomaly_percent) < 1e-9) return c.base_spec;
        return vary_anomaly_percent(c.base_spec, percent, c.base_spec.labelled_count);
    };
    std::vector<PointPlan> plans;
    switch (c.experiment_id) {
        case 1:
            plans.push_back({"labelled", static_cast<double>(c.labelled_fixed), spec_at(c.percent_fixed),
                             c.labelled_fixed});
            break;
        case 2:
            for (auto count : c.labelled_counts) {
                plans.push_back({"labelled", static_cast<double>(count), spec_at(c.percent_fixed), count});
            }
            break;
        case 3:
            for (auto percent : c.anomaly_percents) {
                plans.push_back({"percent", percent, vary_anomaly_percent(c.base_spec, percent, c.labelled_fixed),
                                 c.labelled_fixed});
            }
            break;
        default: throw ConfigError("experiment id must be 1, 2 or 3");
    }
    for (auto& p : plans) {
        if (p.labelled_used > p.spec.labelled_count) {
            throw ConfigError("sweep point uses " + std::to_string(p.labelled_used) +
                              " labelled anomalies but the SampleSet reserves only " +
                              std::to_string(p.spec.labelled_count));
        }
        p.spec.test_fraction = c.test_fraction;
    }
    return plans;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const EncodedDataset& dataset) {
    config.validate();
    ExperimentResult result{config, {}};
    for (auto& plan : plan_points(config)) {
        PointResult point;
        point.sweep = plan.sweep;
        point.value = plan.value;
        point.seed = point_seed(config.base_seed, config.dataset, config.experiment_id, plan.value);
        point.spec = plan.spec;
        point.spec.seed = point.seed;
        point.labelled_used = plan.labelled_used;

        auto sets = build_sample_sets(dataset, point.spec, config.sample_set_count);
        for (std::size_t s = 0; s < sets.size(); ++s) {
            sets[s] = split_train_test(sets[s], dataset.labels, config.test_fraction, mix_seed({point.seed, s, 1}));
            // The reserved labelled pool beyond the count in use is set aside entirely.
            sets[s].labelled.resize(plan.labelled_used);
        }
        point.sets = std::move(sets);

        const std::size_t tasks = point.sets.size() * config.methods.size();
        point.runs.resize(tasks);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t t; (t = next++) < tasks;) {
                const std::size_t s = t / config.methods.size();
                const Method m = config.methods[t % config.methods.size()];
                point.runs[t] = run_sample_set(dataset, point.sets[s], m, config, mix_seed({point.seed, s, 2}));
                point.runs[t].sample_set = s;
            }
        };
        const std::size_t threads = std::min(config.jobs, tasks);
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        for (Method m : config.methods) {
            std::vector<EvaluationReport> reports;
            for (const auto& r : point.runs) {
                if (r.method == m && r.ok) reports.push_back(r.report);
            }
            if (!reports.empty()) point.summary[m] = aggregate(reports);
        }
        result.points.push_back(std::move(point));
    }
    return result;
}

std::string aggregate_csv(const ExperimentResult& result) {
    std::string out =
        "experiment,dataset,method,sweep,value,sample_sets,auroc_mean,auroc_std,tpr_mean,tpr_std,fpr_mean,fpr_std,"
        "tp_mean,tn_mean,fp_mean,fn_mean,seed\n";
    char buf[512];
    for (const auto& p : result.points) {
        for (Method m : result.config.methods) {
            auto it = p.summary.find(m);
            if (it == p.summary.end()) continue;
            const auto& s = it->second;
            std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%g,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.1f,%.1f,%.1f,%.1f,%llu\n",
                          result.config.experiment_id, result.config.dataset.c_str(), std::string(to_string(m)).c_str(),
                          p.sweep.c_str(), p.value, s.count, s.auroc.mean, s.auroc.stddev, s.tpr.mean, s.tpr.stddev,
                          s.fpr.mean, s.fpr.stddev, s.tp.mean, s.tn.mean, s.fp.mean, s.fn.mean,
                          static_cast<unsigned long long>(result.config.base_seed));
            out += buf;
        }
    }
    return out;
}

void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir,
                              std::string_view data_path) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const auto& p : result.points) {
        char name[64];
        std::snprintf(name, sizeof name, "point_%s_%g", p.sweep.c_str(), p.value);
        const fs::path dir = out_dir / name;
        fs::create_directories(dir);
        for (std::size_t s = 0; s < p.sets.size(); ++s) {
            SampleSetManifest m{std::string(data_path), p.seed, s, p.spec, p.sets[s]};
            save_manifest(m, dir / ("set" + std::to_string(s) + "_manifest.json"));
        }
        for (const auto& r : p.runs) {
            const std::string stem = std::string(to_string(r.method)) + "_set" + std::to_string(r.sample_set);
            if (!r.ok) {
                std::ofstream err(dir / (stem + "_error.txt"));
                err << r.error << '\n';
                continue;
            }
            std::ofstream report(dir / (stem + "_report.json"));
            report << report_to_json(r.report, r.seed) << '\n';
            write_training_log(r.log, dir / (stem + "_train_log.csv"));
        }
    }
    std::ofstream csv(out_dir / "aggregate.csv");
    if (!csv) throw DataError("cannot write " + (out_dir / "aggregate.csv").string());
    csv << aggregate_csv(result);
}

std::filesystem::path benchmark_path(const DatasetProfile& profile, const std::filesystem::path& data_dir,
                                     const std::filesystem::path& schema_dir) {
    const auto schema = FeatureSchema::load(schema_dir / profile.schema_file);
    return data_dir / schema.file;
}

EncodedDataset load_benchmark(const DatasetProfile& profile, const std::filesystem::path& data_dir,
                              const std::filesystem::path& schema_dir, std::string* resolved_path) {
    const auto schema = FeatureSchema::load(schema_dir / profile.schema_file);
    const auto cached = data_dir / (profile.id + ".encoded.csv");
    if (std::filesystem::exists(cached)) {
        auto ds = read_encoded_csv(cached);
        if (ds.provenance.schema_hash != schema.hash()) {
            throw DataError(cached.string() + " was encoded with a different schema; delete it or re-run `fswad prepare`");
        }
        if (resolved_path) *resolved_path = cached.string();
        return ds;
    }
    const auto raw = data_dir / schema.file;
    if (!std::filesystem::exists(raw)) {
        throw DataError("dataset '" + profile.id + "' not found: expected " + raw.string() + " (or a prepared " +
                        cached.string() + "); see README for download instructions");
    }
    if (resolved_path) *resolved_path = raw.string();
    return encode(load_table(raw, schema), schema);
}

}  // namespace fswad
