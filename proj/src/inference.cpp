#include "fswad/inference.hpp"

#include "fswad/settings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <thread>

namespace fswad {

ReferenceEmbeddings::ReferenceEmbeddings(const ScoringModel& model, const Matrix& data, const TrainingPools& pools) {
    const std::size_t width = model.shape().representation_size();
    labelled_ = Matrix(0, width);
    unlabelled_ = Matrix(0, width);
    for (std::size_t idx : pools.labelled) labelled_.append_row(model.embed(data.row(idx)));
    for (std::size_t idx : pools.unlabelled) unlabelled_.append_row(model.embed(data.row(idx)));
}

namespace {

/// Picks `count` distinct indices from [0, n) in draw order.
void draw_distinct(Rng& rng, std::size_t n, std::size_t count, std::vector<std::size_t>& out) {
    out.clear();
    while (out.size() < count) {
        const std::size_t i = uniform_index(rng, n);
        if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    }
}

}  // namespace

double score_sample(const ScoringModel& model, std::span<const double> record, const ReferenceEmbeddings& references,
                    const InferenceConfig& config, Rng& rng) {
    const auto refs = static_cast<std::size_t>(model.shape().arity) - 1;
    if (references.labelled_size() < std::max<std::size_t>(refs, 2) ||
        references.unlabelled_size() < std::max<std::size_t>(refs, 2)) {
        throw DataError("reference pools need at least 2 rows each");
    }
    if (config.repetitions == 0) throw ConfigError("repetitions must be at least 1");

    const auto target = model.embed(record);
    std::vector<std::span<const double>> tuple(refs + 1);
    std::vector<std::size_t> picks;
    double total = 0.0;
    for (std::size_t r = 0; r < config.repetitions; ++r) {
        draw_distinct(rng, references.labelled_size(), refs, picks);
        for (std::size_t i = 0; i < refs; ++i) tuple[i] = references.labelled(picks[i]);
        tuple[refs] = target;
        const double s1 = model.head(tuple);

        draw_distinct(rng, references.unlabelled_size(), refs, picks);
        tuple[0] = target;
        for (std::size_t i = 0; i < refs; ++i) tuple[i + 1] = references.unlabelled(picks[i]);
        const double s2 = model.head(tuple);

        total += s1 + s2;
    }
    return total / static_cast<double>(config.repetitions);
}

double score_sample(const ScoringModel& model, std::span<const double> record, const Matrix& data,
                    const TrainingPools& pools, const InferenceConfig& config) {
    if (pools.labelled.size() < 2 || pools.unlabelled.size() < 2) {
        throw DataError("reference pools need at least 2 rows each");
    }
    ReferenceEmbeddings refs(model, data, pools);
    Rng rng(config.seed);
    return score_sample(model, record, refs, config, rng);
}

int classify(double score, const InferenceConfig& config) { return score >= config.threshold ? 1 : 0; }

std::vector<ScoredRow> score_dataset(const ScoringModel& model, const Matrix& data, std::span<const std::size_t> rows,
                                     const TrainingPools& pools, std::span<const std::uint8_t> truth,
                                     const InferenceConfig& config, std::size_t threads) {
    std::vector<ScoredRow> out(rows.size());
    if (rows.empty()) return out;
    if (pools.labelled.size() < 2 || pools.unlabelled.size() < 2) {
        throw DataError("reference pools need at least 2 rows each");
    }
    const ReferenceEmbeddings refs(model, data, pools);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t row = rows[i];
            if (row >= data.rows()) throw DataError("test row " + std::to_string(row) + " out of range");
            Rng rng(mix_seed({config.seed, row}));
            out[i] = ScoredRow{row, score_sample(model, data.row(row), refs, config, rng),
                               truth.empty() ? 0 : static_cast<int>(truth[row])};
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, rows.size());
    if (threads == 1) {
        work(0, rows.size());
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (rows.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                work(std::min(rows.size(), t * chunk), std::min(rows.size(), (t + 1) * chunk));
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

void write_scores_csv(const std::vector<ScoredRow>& scores, const InferenceConfig& config,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scores file " + path.string());
    out << "row_id,score,predicted,truth\n";
    char buf[64];
    for (const auto& s : scores) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, s.score);
        out << s.row << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << ','
            << classify(s.score, config) << ',' << s.truth << '\n';
    }
    if (!out) throw DataError("failed writing scores file " + path.string());
}

std::vector<ScoredRow> read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "row_id,score,predicted,truth") {
        throw DataError(path.string() + ": expected header row_id,score,predicted,truth");
    }
    std::vector<ScoredRow> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_list(line);
        if (cells.size() != 4) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 cells");
        ScoredRow row;
        try {
            row.row = static_cast<std::size_t>(parse_integer(cells[0], "row_id"));
            row.score = parse_real(cells[1], "score");
            row.truth = static_cast<int>(parse_integer(cells[3], "truth"));
        } catch (const ConfigError& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (row.truth != 0 && row.truth != 1) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": truth must be 0 or 1");
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace fswad
