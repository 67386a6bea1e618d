#pragma once

#include "fswad/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fswad {

enum class ColumnRole { numeric, ordinal_categorical, onehot_categorical, label, family, drop };

std::string_view to_string(ColumnRole role);

struct ColumnSpec {
    std::string name;
    ColumnRole role = ColumnRole::numeric;
    /// Declared values for categorical columns. For ordinal columns the list
    /// order is the rank order (index 0 = lowest).
    std::vector<std::string> values;
};

/// Per-column roles driving the encoding of one dataset.
///
/// Schema files are flat key-value text:
///
///     name = nslkdd
///     file = KDDTrain+.txt
///     has_header = false
///     label_positive = *
///     label_negative = normal
///     column.protocol_type = onehot icmp,tcp,udp
///     column.severity = ordinal low,med,high
///     column.label = label
///     column.difficulty = drop
///
/// `label_positive = *` means "every value not listed in label_negative".
/// `unlisted_columns = numeric|drop` admits header columns absent from the
/// schema; without it they are a header mismatch. A `family` column carries
/// the attack family used by `exclude_attack_families` and never becomes a
/// feature; without one the raw label text serves as family.
struct FeatureSchema {
    std::string name;
    std::string file;
    bool has_header = true;
    std::vector<ColumnSpec> columns;
    std::set<std::string> label_positive_values;
    std::set<std::string> label_negative_values;
    bool positive_is_complement = false;
    std::optional<ColumnRole> unlisted_role;
    /// Treat `nan`/`inf` numeric cells as missing (imputed 0) instead of failing.
    bool impute_nonfinite = false;

    static FeatureSchema parse(std::string_view text, std::string_view origin = "<schema>");
    static FeatureSchema load(const std::filesystem::path& path);

    /// Throws ConfigError when an invariant fails.
    void validate() const;
    const ColumnSpec* find(std::string_view column) const;
    const ColumnSpec& label_column() const;
    /// 1 for anomaly, 0 for normal; throws DataError when unclassifiable.
    int classify_label(std::string_view value) const;
    std::uint64_t hash() const;
};

/// Column-oriented table as loaded from CSV. Dropped columns are already
/// removed; numeric columns carry parsed numbers, other roles the raw text.
struct RawTable {
    struct Column {
        ColumnSpec spec;
        std::vector<double> numbers;
        std::vector<std::string> text;
    };
    std::vector<Column> columns;
    std::size_t rows = 0;
    std::string source;
};

struct Provenance {
    std::string source;
    std::uint64_t schema_hash = 0;
};

/// Dense numeric records with labels held apart from the features.
struct EncodedDataset {
    Matrix matrix;
    std::vector<std::uint8_t> labels;
    std::vector<std::string> feature_names;
    /// Attack family (raw label or family column) per row.
    std::vector<std::string> families;
    Provenance provenance;

    std::size_t size() const { return labels.size(); }
    std::size_t dims() const { return matrix.cols(); }
};

struct NormalizationStats {
    std::vector<double> min;
    std::vector<double> max;
};

/// Splits one CSV line into cells. Double-quoted cells may contain commas.
std::vector<std::string> split_csv_line(std::string_view line);

RawTable load_table(const std::filesystem::path& path, const FeatureSchema& schema);
RawTable parse_table(std::istream& in, const FeatureSchema& schema, std::string source);

EncodedDataset encode(const RawTable& table, const FeatureSchema& schema);

/// Min-max scaling fitted on `dataset`. Constant features map to 0.
std::pair<EncodedDataset, NormalizationStats> fit_normalize(const EncodedDataset& dataset);
NormalizationStats fit_stats(const Matrix& matrix);

/// Applies fitted stats, clamping to [0,1] outside the fitted range.
EncodedDataset apply_normalize(const EncodedDataset& dataset, const NormalizationStats& stats);
void apply_normalize_in_place(Matrix& matrix, const NormalizationStats& stats);

/// CSV dump of an encoded dataset: a `# fswad-encoded` provenance line, a
/// header of feature names plus `is_anomaly,family`, then one row per record.
void write_encoded_csv(const EncodedDataset& dataset, const std::filesystem::path& path);
EncodedDataset read_encoded_csv(const std::filesystem::path& path);

}  // namespace fswad
