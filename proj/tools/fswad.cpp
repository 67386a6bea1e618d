// fswad: few-shot weakly-supervised anomaly detection command line.

#include "fswad/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#ifndef FSWAD_VERSION
#define FSWAD_VERSION "dev"
#endif
#ifndef FSWAD_SCHEMA_DIR
#define FSWAD_SCHEMA_DIR "data/schemas"
#endif

namespace fs = std::filesystem;
using namespace fswad;

namespace {

/// Options shared by every subcommand that consumes run settings.
struct SettingsOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<long long> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "flat key-value settings file");
        cmd->add_option("--set", overrides, "override a setting, key=value (repeatable)");
        cmd->add_option("--seed", seed, "base random seed");
    }

    Settings resolve() const {
        Settings s = Settings::defaults();
        if (!config.empty()) s.load_file(config);
        for (const auto& item : overrides) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
            s.set(trim(std::string_view(item).substr(0, eq)), trim(std::string_view(item).substr(eq + 1)),
                  ValueSource::flag);
        }
        if (seed) s.set("seed", std::to_string(*seed), ValueSource::flag);
        return s;
    }
};

void print_settings(const Settings& s) { std::cerr << "# resolved configuration\n" << s.describe(); }

EncodedDataset load_encoded(const SampleSetManifest& manifest, const std::string& data_override) {
    return read_encoded_csv(data_override.empty() ? manifest.data_path : data_override);
}

int cmd_prepare(const std::string& schema_path, const std::string& input, const std::string& out, bool normalize,
                const std::string& stats_out) {
    const auto schema = FeatureSchema::load(schema_path);
    auto dataset = encode(load_table(input, schema), schema);
    if (normalize) {
        if (dataset.size() == 0) throw DataError("cannot normalize an empty table");
        auto [normalized, stats] = fit_normalize(dataset);
        dataset = std::move(normalized);
        if (!stats_out.empty()) {
            std::ofstream so(stats_out);
            so << nlohmann::json{{"min", stats.min}, {"max", stats.max}}.dump() << '\n';
        }
    }
    write_encoded_csv(dataset, out);
    std::size_t anomalies = 0;
    for (auto l : dataset.labels) anomalies += l;
    std::cout << nlohmann::json{{"rows", dataset.size()},
                                {"features", dataset.dims()},
                                {"anomalies", anomalies},
                                {"normalized", normalize},
                                {"out", out}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_sample(const Settings& settings, const std::string& spec_path, const std::string& data_path,
               const std::string& out_dir, bool seed_flag) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open spec file " + spec_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto spec = parse_sample_set_spec(buffer.str(), spec_path);
    if (seed_flag) spec.seed = static_cast<std::uint64_t>(settings.integer("seed"));
    const auto count = static_cast<std::size_t>(settings.integer("sample_set_count"));
    const auto dataset = read_encoded_csv(data_path);
    auto sets = build_sample_sets(dataset, spec, count);
    fs::create_directories(out_dir);
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto split = split_train_test(sets[s], dataset.labels, spec.test_fraction, mix_seed({spec.seed, s, 1}));
        const auto path = fs::path(out_dir) / ("set" + std::to_string(s) + "_manifest.json");
        save_manifest(SampleSetManifest{data_path, spec.seed, s, spec, split}, path);
        summary.push_back({{"manifest", path.string()},
                           {"labelled", split.labelled.size()},
                           {"unlabelled", split.unlabelled.size()},
                           {"test", split.test.size()}});
    }
    std::cout << nlohmann::json{{"seed", spec.seed}, {"sample_sets", summary}}.dump(2) << '\n';
    return 0;
}

int cmd_augment(const Settings& settings, const std::string& manifest_path, const std::string& data_override,
                std::size_t batch_size) {
    const auto manifest = load_manifest(manifest_path);
    const auto dataset = load_encoded(manifest, data_override);
    const auto local = localize(dataset, manifest.set);
    const auto scheme = make_scheme(settings);
    const auto seed = static_cast<std::uint64_t>(settings.integer("seed"));
    Rng rng(seed);
    const auto batch = sample_batch(local.pools(), scheme, batch_size, rng,
                                    parse_batch_composition(settings.text("batch_composition")));
    std::cout << "# seed=" << seed << " k=" << scheme.k << " gap=" << scheme.gap << '\n';
    std::cout << "label,tags,rows\n";
    for (const auto& inst : batch.instances) {
        std::string tags;
        std::string rows;
        for (std::size_t p = 0; p < inst.members.size(); ++p) {
            tags += inst.tags[p] == Source::labelled_anomaly ? 'A' : 'U';
            if (p) rows += ' ';
            rows += std::to_string(local.source_rows[inst.members[p]]);
        }
        std::cout << inst.label << ',' << tags << ',' << rows << '\n';
    }
    return 0;
}

int cmd_train(const Settings& settings, const std::string& manifest_path, const std::string& data_override,
              const std::string& out, std::string log_path) {
    const auto manifest = load_manifest(manifest_path);
    const auto dataset = load_encoded(manifest, data_override);
    const auto local = localize(dataset, manifest.set);
    const auto scheme = make_scheme(settings);
    const auto config = make_train_config(settings);
    const auto result = train(local.pools(), local.data, scheme, config);
    save_model(out, result.model, &local.stats);
    if (log_path.empty()) log_path = out + ".log.csv";
    write_training_log(result.log, log_path);
    std::cout << nlohmann::json{{"model", out},
                                {"log", log_path},
                                {"seed", config.seed},
                                {"first_epoch_objective", result.log.front().mean_objective},
                                {"final_epoch_objective", result.log.back().mean_objective}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_score(Settings settings, const std::string& model_path, const std::string& manifest_path,
              const std::string& data_override, const std::string& test_path, const std::string& out) {
    const auto file = load_model(model_path);
    if (!file.normalization) throw DataError(model_path + " carries no normalization statistics");
    const auto manifest = load_manifest(manifest_path);
    const auto dataset = load_encoded(manifest, data_override);

    SampleSet pools_only = manifest.set;
    if (!test_path.empty()) pools_only.test.clear();
    auto local = localize(dataset, pools_only, &*file.normalization);

    std::vector<std::size_t> row_ids = local.source_rows;
    if (!test_path.empty()) {
        auto extra = read_encoded_csv(test_path);
        if (extra.dims() != local.data.cols()) {
            throw DataError(test_path + " has " + std::to_string(extra.dims()) + " features, model expects " +
                            std::to_string(local.data.cols()));
        }
        apply_normalize_in_place(extra.matrix, *file.normalization);
        for (std::size_t r = 0; r < extra.size(); ++r) {
            local.test.push_back(local.data.rows());
            local.data.append_row(extra.matrix.row(r));
            local.truth.push_back(extra.labels[r]);
            row_ids.push_back(r);
        }
    }

    if (settings.source("tuple_size") == ValueSource::default_value) {
        settings.set("tuple_size", std::to_string(file.model.shape().arity), ValueSource::default_value);
    }
    const auto scheme = make_scheme(settings);
    if (scheme.k != file.model.shape().arity) throw ConfigError("tuple_size does not match the model arity");
    const auto config = make_inference_config(settings, scheme);
    auto scored = score_dataset(file.model, local.data, local.test, local.pools(), local.truth, config);
    for (auto& s : scored) s.row = row_ids[s.row];
    write_scores_csv(scored, config, out);
    std::cout << nlohmann::json{{"scores", out}, {"rows", scored.size()}, {"threshold", config.threshold},
                                {"seed", config.seed}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_eval(const Settings& settings, const std::string& scores_path, double threshold, const std::string& out) {
    const auto rows = read_scores_csv(scores_path);
    const auto report = confusion(to_score_labels(rows), threshold);
    const auto text = report_to_json(report, static_cast<std::uint64_t>(settings.integer("seed")));
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw DataError("cannot write " + out);
        o << text << '\n';
    }
    std::cout << text << '\n';
    return 0;
}

int cmd_experiment(const Settings& settings, int id, const std::string& dataset_id, const std::string& methods,
                   const std::string& out_dir, const std::string& data_dir, const std::string& schema_dir) {
    const auto& profile = dataset_profile(dataset_id);
    const auto config = make_experiment_config(settings, id, profile, parse_methods(methods));
    std::string resolved;
    const auto dataset = load_benchmark(profile, data_dir, schema_dir, &resolved);
    std::cerr << "# dataset " << resolved << ": " << dataset.size() << " rows, " << dataset.dims() << " features\n";
    const auto result = run_experiment(config, dataset);
    write_experiment_outputs(result, out_dir, resolved);
    {
        std::ofstream cfg(fs::path(out_dir) / "config.txt");
        cfg << "# experiment " << id << " dataset " << dataset_id << " methods " << methods << '\n'
            << settings.describe();
    }
    std::cout << aggregate_csv(result);
    for (const auto& p : result.points) {
        for (const auto& r : p.runs) {
            if (!r.ok) {
                std::cerr << "error: " << to_string(r.method) << " run on SampleSet " << r.sample_set << " at "
                          << p.sweep << "=" << p.value << " failed: " << r.error << '\n';
            }
        }
    }
    return result.all_ok() ? 0 : 1;
}

/// Reservoir-samples normals and anomalies from large CSV exports.
int cmd_extract(const std::string& schema_path, const std::vector<std::string>& inputs, std::size_t normals,
                std::size_t anomalies, std::uint64_t seed, const std::string& out) {
    const auto schema = FeatureSchema::load(schema_path);
    const std::string& label_name = schema.label_column().name;
    std::vector<std::string> header;
    std::vector<std::string> kept[2];
    std::size_t seen[2] = {0, 0};
    const std::size_t want[2] = {normals, anomalies};
    Rng rng(seed);

    for (const auto& input : inputs) {
        std::ifstream in(input);
        if (!in) throw DataError("cannot open " + input);
        std::string line;
        if (!std::getline(in, line)) continue;
        if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        const std::string header_line = line;
        const auto file_header = split_csv_line(line);
        if (header.empty()) header = file_header;
        std::vector<std::size_t> pick;
        for (const auto& name : header) {
            auto it = std::find(file_header.begin(), file_header.end(), name);
            if (it == file_header.end()) throw DataError(input + ": missing column '" + name + "'");
            pick.push_back(static_cast<std::size_t>(it - file_header.begin()));
        }
        const auto label_it = std::find(file_header.begin(), file_header.end(), label_name);
        if (label_it == file_header.end()) throw DataError(input + ": no label column '" + label_name + "'");
        const auto label_pos = static_cast<std::size_t>(label_it - file_header.begin());

        while (std::getline(in, line)) {
            if (trim(line).empty() || line == header_line) continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != file_header.size()) continue;
            const int cls = schema.classify_label(cells[label_pos]);
            std::string row;
            for (std::size_t i = 0; i < pick.size(); ++i) {
                if (i) row += ',';
                row += cells[pick[i]];
            }
            auto& bucket = kept[cls];
            const std::size_t n = ++seen[cls];
            if (bucket.size() < want[cls]) {
                bucket.push_back(std::move(row));
            } else if (const auto j = uniform_index(rng, n); j < want[cls]) {
                bucket[j] = std::move(row);
            }
        }
    }
    if (kept[0].size() < normals || kept[1].size() < anomalies) {
        throw DataError("inputs hold " + std::to_string(seen[0]) + " normal and " + std::to_string(seen[1]) +
                        " anomalous rows, fewer than requested");
    }
    std::ofstream o(out);
    if (!o) throw DataError("cannot write " + out);
    for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
    o << '\n';
    for (const auto& bucket : kept) {
        for (const auto& row : bucket) o << row << '\n';
    }
    std::cout << nlohmann::json{{"normals", kept[0].size()}, {"anomalies", kept[1].size()}, {"seed", seed},
                                {"out", out}}
                     .dump()
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot weakly-supervised anomaly detection"};
    app.set_version_flag("--version", std::string("fswad ") + FSWAD_VERSION + " (C++" +
                                          std::to_string(__cplusplus / 100 % 100) + ", " + __VERSION__ + ")");
    app.require_subcommand(1);

    SettingsOptions opts;

    std::string schema, input, out, stats_out;
    bool normalize = false;
    auto* prepare = app.add_subcommand("prepare", "encode a raw CSV into a numeric dataset");
    prepare->add_option("--schema", schema, "dataset schema file")->required();
    prepare->add_option("--input", input, "raw CSV")->required();
    prepare->add_option("--out", out, "encoded CSV to write")->required();
    prepare->add_flag("--normalize", normalize, "min-max normalize the whole table");
    prepare->add_option("--stats", stats_out, "write normalization stats JSON (with --normalize)");

    std::string spec_path, data_path;
    auto* sample = app.add_subcommand("sample", "build SampleSet manifests");
    sample->add_option("--spec", spec_path, "SampleSet spec file")->required();
    sample->add_option("--data", data_path, "encoded dataset CSV")->required();
    std::optional<long long> sample_count;
    sample->add_option("--count", sample_count, "number of SampleSets")->check(CLI::PositiveNumber);
    sample->add_option("--out", out, "output directory")->required();
    opts.attach(sample);

    std::string manifest, data_override;
    std::size_t batch = 8;
    bool dry_run = false;
    auto* augment = app.add_subcommand("augment", "print an augmented batch");
    augment->add_flag("--dry-run", dry_run, "print the batch without training")->required();
    augment->add_option("--sampleset", manifest, "SampleSet manifest")->required();
    augment->add_option("--data", data_override, "encoded dataset overriding the manifest path");
    augment->add_option("--batch", batch, "instances to draw");
    opts.attach(augment);

    std::string log_path;
    auto* train_cmd = app.add_subcommand("train", "train a scoring model on one SampleSet");
    train_cmd->add_option("--sampleset", manifest, "SampleSet manifest")->required();
    train_cmd->add_option("--data", data_override, "encoded dataset overriding the manifest path");
    train_cmd->add_option("--out", out, "model file to write")->required();
    train_cmd->add_option("--log", log_path, "training log CSV (default <out>.log.csv)");
    opts.attach(train_cmd);

    std::string model_path, test_path;
    auto* score = app.add_subcommand("score", "score test rows with a trained model");
    score->add_option("--model", model_path, "model file")->required();
    score->add_option("--sampleset", manifest, "SampleSet manifest supplying reference pools")->required();
    score->add_option("--data", data_override, "encoded dataset overriding the manifest path");
    score->add_option("--test", test_path, "encoded CSV of rows to score instead of the manifest test rows");
    score->add_option("--out", out, "scores CSV to write")->required();
    opts.attach(score);

    std::string scores_path;
    double threshold = 12.0;
    auto* eval = app.add_subcommand("eval", "evaluate a scores CSV");
    eval->add_option("--scores", scores_path, "scores CSV")->required();
    eval->add_option("--threshold", threshold, "decision threshold");
    eval->add_option("--out", out, "report JSON to write");
    opts.attach(eval);

    int exp_id = 1;
    std::string dataset_id, methods = "triplet,pair", data_dir = "data", schema_dir = FSWAD_SCHEMA_DIR;
    std::optional<long long> jobs;
    auto* experiment = app.add_subcommand("experiment", "run a full experiment");
    experiment->add_option("--id", exp_id, "experiment 1, 2 or 3")->required()->check(CLI::Range(1, 3));
    experiment->add_option("--dataset", dataset_id, "nslkdd | cicids2018 | toniot")->required();
    experiment->add_option("--methods", methods, "comma-separated: triplet,pair");
    experiment->add_option("--out", out, "output directory (default results/exp<id>_<dataset>)");
    experiment->add_option("--data-dir", data_dir, "directory holding the dataset files");
    experiment->add_option("--schema-dir", schema_dir, "directory holding the schema files");
    experiment->add_option("--jobs", jobs, "parallel SampleSet jobs");
    opts.attach(experiment);

    std::vector<std::string> inputs;
    std::size_t want_normals = 0, want_anomalies = 0;
    long long extract_seed = 1;
    auto* extract = app.add_subcommand("extract", "reservoir-sample a subset from large CSV exports");
    extract->add_option("--schema", schema, "dataset schema file")->required();
    extract->add_option("--input", inputs, "input CSV files")->required();
    extract->add_option("--normals", want_normals, "normal rows to keep")->required();
    extract->add_option("--anomalies", want_anomalies, "anomalous rows to keep")->required();
    extract->add_option("--seed", extract_seed, "random seed");
    extract->add_option("--out", out, "subset CSV to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*prepare) return cmd_prepare(schema, input, out, normalize, stats_out);
        if (*extract) return cmd_extract(schema, inputs, want_normals, want_anomalies,
                                         static_cast<std::uint64_t>(extract_seed), out);

        Settings settings = opts.resolve();
        if (sample_count) settings.set("sample_set_count", std::to_string(*sample_count), ValueSource::flag);
        if (jobs) settings.set("jobs", std::to_string(*jobs), ValueSource::flag);
        print_settings(settings);

        if (*sample) return cmd_sample(settings, spec_path, data_path, out, opts.seed.has_value());
        if (*augment) return cmd_augment(settings, manifest, data_override, batch);
        if (*train_cmd) return cmd_train(settings, manifest, data_override, out, log_path);
        if (*score) return cmd_score(settings, model_path, manifest, data_override, test_path, out);
        if (*eval) return cmd_eval(settings, scores_path, threshold, out);
        if (*experiment && out.empty()) out = "results/exp" + std::to_string(exp_id) + "_" + dataset_id;
        if (*experiment) return cmd_experiment(settings, exp_id, dataset_id, methods, out, data_dir, schema_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
