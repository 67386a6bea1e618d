#include "fswad/ingest.hpp"

#include "fswad/settings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fswad {

namespace {

ColumnRole parse_role(std::string_view token, std::string_view where) {
    if (token == "numeric") return ColumnRole::numeric;
    if (token == "ordinal") return ColumnRole::ordinal_categorical;
    if (token == "onehot") return ColumnRole::onehot_categorical;
    if (token == "label") return ColumnRole::label;
    if (token == "family") return ColumnRole::family;
    if (token == "drop") return ColumnRole::drop;
    throw ConfigError(std::string(where) + ": unknown column role '" + std::string(token) + "'");
}

bool parse_bool(std::string_view value, std::string_view where) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw ConfigError(std::string(where) + ": expected true/false, got '" + std::string(value) + "'");
}

bool is_categorical(ColumnRole role) {
    return role == ColumnRole::ordinal_categorical || role == ColumnRole::onehot_categorical;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::numeric: return "numeric";
        case ColumnRole::ordinal_categorical: return "ordinal";
        case ColumnRole::onehot_categorical: return "onehot";
        case ColumnRole::label: return "label";
        case ColumnRole::family: return "family";
        case ColumnRole::drop: return "drop";
    }
    return "?";
}

FeatureSchema FeatureSchema::parse(std::string_view text, std::string_view origin) {
    FeatureSchema schema;
    for (const auto& kv : parse_key_values(text, origin)) {
        const std::string where = std::string(origin) + ":" + std::to_string(kv.line);
        if (kv.key.starts_with("column.")) {
            ColumnSpec col;
            col.name = kv.key.substr(7);
            const auto space = kv.value.find_first_of(" \t");
            const std::string role = trim(std::string_view(kv.value).substr(0, space));
            col.role = parse_role(role, where);
            if (space != std::string::npos) col.values = split_list(std::string_view(kv.value).substr(space));
            if (is_categorical(col.role) && col.values.empty()) {
                throw ConfigError(where + ": categorical column '" + col.name + "' declares no values");
            }
            if (!is_categorical(col.role) && !col.values.empty()) {
                throw ConfigError(where + ": only categorical columns take a value list");
            }
            schema.columns.push_back(std::move(col));
        } else if (kv.key == "name") {
            schema.name = kv.value;
        } else if (kv.key == "file") {
            schema.file = kv.value;
        } else if (kv.key == "has_header") {
            schema.has_header = parse_bool(kv.value, where);
        } else if (kv.key == "label_positive") {
            if (kv.value == "*") {
                schema.positive_is_complement = true;
            } else {
                for (auto& v : split_list(kv.value)) schema.label_positive_values.insert(v);
            }
        } else if (kv.key == "label_negative") {
            for (auto& v : split_list(kv.value)) schema.label_negative_values.insert(v);
        } else if (kv.key == "unlisted_columns") {
            const ColumnRole role = parse_role(kv.value, where);
            if (role != ColumnRole::numeric && role != ColumnRole::drop) {
                throw ConfigError(where + ": unlisted_columns must be numeric or drop");
            }
            schema.unlisted_role = role;
        } else if (kv.key == "nonfinite") {
            if (kv.value == "impute") {
                schema.impute_nonfinite = true;
            } else if (kv.value != "error") {
                throw ConfigError(where + ": nonfinite must be impute or error");
            }
        } else {
            throw ConfigError(where + ": unknown schema key '" + kv.key + "'");
        }
    }
    schema.validate();
    return schema;
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

void FeatureSchema::validate() const {
    std::set<std::string, std::less<>> names;
    int labels = 0;
    int families = 0;
    for (const auto& col : columns) {
        if (!names.insert(col.name).second) throw ConfigError("schema column '" + col.name + "' declared twice");
        if (col.role == ColumnRole::label) ++labels;
        if (col.role == ColumnRole::family) ++families;
        if (is_categorical(col.role)) {
            std::set<std::string> distinct(col.values.begin(), col.values.end());
            if (distinct.size() != col.values.size()) {
                throw ConfigError("schema column '" + col.name + "' repeats a declared value");
            }
        }
    }
    if (labels != 1) throw ConfigError("schema must declare exactly one label column, found " + std::to_string(labels));
    if (families > 1) throw ConfigError("schema declares more than one family column");
    if (label_positive_values.empty() && !positive_is_complement) {
        throw ConfigError("schema declares no label_positive values");
    }
    if (positive_is_complement && label_negative_values.empty()) {
        throw ConfigError("label_positive = * requires label_negative values");
    }
    for (const auto& v : label_positive_values) {
        if (label_negative_values.contains(v)) throw ConfigError("label value '" + v + "' is both positive and negative");
    }
}

const ColumnSpec* FeatureSchema::find(std::string_view column) const {
    for (const auto& col : columns) {
        if (col.name == column) return &col;
    }
    return nullptr;
}

const ColumnSpec& FeatureSchema::label_column() const {
    for (const auto& col : columns) {
        if (col.role == ColumnRole::label) return col;
    }
    throw ConfigError("schema has no label column");
}

int FeatureSchema::classify_label(std::string_view value) const {
    const std::string v(value);
    if (label_positive_values.contains(v)) return 1;
    if (label_negative_values.contains(v)) return 0;
    if (positive_is_complement) return 1;
    throw DataError("label value '" + v + "' is neither positive nor negative in schema '" + name + "'");
}

std::uint64_t FeatureSchema::hash() const {
    std::ostringstream canon;
    canon << name << '\n' << has_header << '\n' << positive_is_complement << impute_nonfinite << '\n';
    canon << (unlisted_role ? std::string(to_string(*unlisted_role)) : "-") << '\n';
    for (const auto& v : label_positive_values) canon << '+' << v << '\n';
    for (const auto& v : label_negative_values) canon << '-' << v << '\n';
    for (const auto& col : columns) {
        canon << col.name << ':' << to_string(col.role);
        for (const auto& v : col.values) canon << ',' << v;
        canon << '\n';
    }
    return hash_text(canon.str());
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

RawTable load_table(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path.string());
    return parse_table(in, schema, path.string());
}

RawTable parse_table(std::istream& in, const FeatureSchema& schema, std::string source) {
    std::vector<std::string> header;
    std::string header_line;
    if (schema.has_header) {
        if (!std::getline(in, header_line)) throw DataError(source + ": missing header row");
        if (header_line.starts_with("\xEF\xBB\xBF")) header_line.erase(0, 3);
        header = split_csv_line(header_line);
    } else {
        for (const auto& col : schema.columns) header.push_back(col.name);
    }

    // Resolve each file column to a spec and a destination slot in the table.
    std::set<std::string, std::less<>> seen;
    std::vector<ColumnSpec> file_specs;
    std::vector<std::string> unknown;
    for (const auto& name : header) {
        if (!seen.insert(name).second) throw DataError(source + ": duplicate header column '" + name + "'");
        if (const auto* spec = schema.find(name)) {
            file_specs.push_back(*spec);
        } else if (schema.unlisted_role) {
            file_specs.push_back(ColumnSpec{name, *schema.unlisted_role, {}});
        } else {
            unknown.push_back(name);
        }
    }
    if (!unknown.empty()) {
        std::string msg = source + ": header columns absent from schema '" + schema.name + "':";
        for (const auto& n : unknown) msg += " " + n;
        throw DataError(msg);
    }
    for (const auto& col : schema.columns) {
        if (!seen.contains(col.name)) {
            throw DataError(source + ": schema column '" + col.name + "' missing from header");
        }
    }

    RawTable table;
    table.source = std::move(source);
    std::vector<int> slot(header.size(), -1);
    for (const auto& col : schema.columns) {
        if (col.role == ColumnRole::drop) continue;
        const auto pos = std::find(header.begin(), header.end(), col.name) - header.begin();
        slot[pos] = static_cast<int>(table.columns.size());
        table.columns.push_back(RawTable::Column{col, {}, {}});
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (schema.find(header[i]) || file_specs[i].role == ColumnRole::drop) continue;
        slot[i] = static_cast<int>(table.columns.size());
        table.columns.push_back(RawTable::Column{file_specs[i], {}, {}});
    }

    std::string line;
    std::size_t line_no = schema.has_header ? 1 : 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (schema.has_header && line == header_line) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError(table.source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (slot[i] < 0) continue;
            auto& column = table.columns[static_cast<std::size_t>(slot[i])];
            if (column.spec.role != ColumnRole::numeric) {
                column.text.push_back(cells[i]);
                continue;
            }
            const std::string& cell = cells[i];
            double value = 0.0;
            if (!cell.empty()) {
                const char* begin = cell.data();
                const char* end = begin + cell.size();
                if (*begin == '+') ++begin;
                auto [ptr, ec] = std::from_chars(begin, end, value);
                if (ec == std::errc::result_out_of_range) {
                    value = cell.front() == '-' ? -HUGE_VAL : HUGE_VAL;
                } else if (ec != std::errc() || ptr != end) {
                    throw DataError(table.source + ":" + std::to_string(line_no) + ": column '" + header[i] +
                                    "' has unparseable numeric cell '" + cell + "'");
                }
                if (!std::isfinite(value) && schema.impute_nonfinite) value = 0.0;
            }
            column.numbers.push_back(value);
        }
        ++table.rows;
    }
    return table;
}

EncodedDataset encode(const RawTable& table, const FeatureSchema& schema) {
    EncodedDataset out;
    out.provenance = Provenance{table.source, schema.hash()};

    struct Plan {
        const RawTable::Column* column;
        std::map<std::string, std::size_t, std::less<>> index;
    };
    std::vector<Plan> plan;
    const RawTable::Column* label = nullptr;
    const RawTable::Column* family = nullptr;
    for (const auto& col : table.columns) {
        switch (col.spec.role) {
            case ColumnRole::label: label = &col; continue;
            case ColumnRole::family: family = &col; continue;
            case ColumnRole::drop: continue;
            case ColumnRole::numeric: out.feature_names.push_back(col.spec.name); break;
            case ColumnRole::ordinal_categorical: out.feature_names.push_back(col.spec.name); break;
            case ColumnRole::onehot_categorical:
                for (const auto& v : col.spec.values) out.feature_names.push_back(col.spec.name + "=" + v);
                break;
        }
        Plan p{&col, {}};
        for (std::size_t i = 0; i < col.spec.values.size(); ++i) p.index.emplace(col.spec.values[i], i);
        plan.push_back(std::move(p));
    }
    if (!label) throw DataError(table.source + ": table has no label column");

    out.matrix = Matrix(table.rows, out.feature_names.size());
    out.labels.resize(table.rows);
    out.families.resize(table.rows);
    for (std::size_t r = 0; r < table.rows; ++r) {
        auto row = out.matrix.row(r);
        std::size_t j = 0;
        for (const auto& p : plan) {
            const auto& spec = p.column->spec;
            if (spec.role == ColumnRole::numeric) {
                row[j++] = p.column->numbers[r];
                continue;
            }
            const std::string& cell = p.column->text[r];
            auto it = p.index.find(cell);
            if (it == p.index.end()) {
                throw DataError(table.source + ": row " + std::to_string(r) + ": value '" + cell +
                                "' not declared for column '" + spec.name + "'");
            }
            if (spec.role == ColumnRole::ordinal_categorical) {
                row[j++] = static_cast<double>(it->second);
            } else {
                row[j + it->second] = 1.0;
                j += spec.values.size();
            }
        }
        const std::string& raw_label = label->text[r];
        out.labels[r] = static_cast<std::uint8_t>(schema.classify_label(raw_label));
        out.families[r] = family ? family->text[r] : raw_label;
    }
    return out;
}

NormalizationStats fit_stats(const Matrix& matrix) {
    if (matrix.empty()) throw DataError("cannot fit normalization on an empty matrix");
    NormalizationStats stats;
    stats.min.assign(matrix.cols(), HUGE_VAL);
    stats.max.assign(matrix.cols(), -HUGE_VAL);
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        const auto row = matrix.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!std::isfinite(row[j])) {
                throw DataError("non-finite value at row " + std::to_string(r) + ", feature " + std::to_string(j));
            }
            stats.min[j] = std::min(stats.min[j], row[j]);
            stats.max[j] = std::max(stats.max[j], row[j]);
        }
    }
    return stats;
}

void apply_normalize_in_place(Matrix& matrix, const NormalizationStats& stats) {
    if (stats.min.size() != matrix.cols() || stats.max.size() != matrix.cols()) {
        throw DataError("normalization stats cover " + std::to_string(stats.min.size()) + " features, data has " +
                        std::to_string(matrix.cols()));
    }
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        auto row = matrix.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double range = stats.max[j] - stats.min[j];
            if (!(range > 0.0)) {
                row[j] = 0.0;
                continue;
            }
            row[j] = std::clamp((row[j] - stats.min[j]) / range, 0.0, 1.0);
        }
    }
}

std::pair<EncodedDataset, NormalizationStats> fit_normalize(const EncodedDataset& dataset) {
    auto stats = fit_stats(dataset.matrix);
    EncodedDataset out = dataset;
    apply_normalize_in_place(out.matrix, stats);
    return {std::move(out), std::move(stats)};
}

EncodedDataset apply_normalize(const EncodedDataset& dataset, const NormalizationStats& stats) {
    EncodedDataset out = dataset;
    apply_normalize_in_place(out.matrix, stats);
    return out;
}

void write_encoded_csv(const EncodedDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dataset.provenance.schema_hash));
    out << "# fswad-encoded v1 schema_hash=" << hash << " source=" << dataset.provenance.source << '\n';
    for (const auto& name : dataset.feature_names) out << name << ',';
    out << "is_anomaly,family\n";
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        for (double v : dataset.matrix.row(r)) out << format_double(v) << ',';
        out << static_cast<int>(dataset.labels[r]) << ',' << dataset.families[r] << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

EncodedDataset read_encoded_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open encoded dataset " + path.string() + " (run `fswad prepare` first)");
    EncodedDataset out;
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("# fswad-encoded v1")) {
        throw DataError(path.string() + ": not an fswad encoded dataset");
    }
    if (auto h = line.find("schema_hash="); h != std::string::npos) {
        out.provenance.schema_hash = std::stoull(line.substr(h + 12, 16), nullptr, 16);
    }
    if (auto s = line.find("source="); s != std::string::npos) out.provenance.source = line.substr(s + 7);
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[header.size() - 2] != "is_anomaly" || header.back() != "family") {
        throw DataError(path.string() + ": header must end with is_anomaly,family");
    }
    const std::size_t dims = header.size() - 2;
    out.feature_names.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(dims));
    out.matrix = Matrix(0, dims);
    std::vector<double> row(dims);
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong cell count");
        }
        for (std::size_t j = 0; j < dims; ++j) {
            const auto& c = cells[j];
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), row[j]);
            if (ec != std::errc() || ptr != c.data() + c.size()) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + c + "'");
            }
        }
        out.matrix.append_row(row);
        const auto& label = cells[dims];
        if (label != "0" && label != "1") {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": is_anomaly must be 0 or 1");
        }
        out.labels.push_back(label == "1" ? 1 : 0);
        out.families.push_back(cells.back());
    }
    return out;
}

}  // namespace fswad
