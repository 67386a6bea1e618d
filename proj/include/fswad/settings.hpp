#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fswad {

/// One `key = value` line of a flat configuration file.
struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

/// Parses flat key-value text. Blank lines and lines starting with `#` are
/// ignored; trailing `# comments` are stripped. Order is preserved and
/// duplicate keys are reported as errors.
std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view origin);
std::vector<KeyValue> read_key_values(const std::filesystem::path& path);

/// Splits a comma-separated list, trimming whitespace and dropping empties.
std::vector<std::string> split_list(std::string_view text);

std::string trim(std::string_view text);

/// Parses a real, also accepting a fraction written as `a/b`.
double parse_real(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

enum class ValueSource { default_value, file, flag };

std::string_view to_string(ValueSource source);

/// Resolved run configuration: every known key with its value and where the
/// value came from. Flags override file values, which override defaults.
class Settings {
public:
    /// Value type a key accepts; checked whenever the key is set.
    enum class Kind { integer, real, integers, reals, text, real_or_auto };

    struct Entry {
        std::string value;
        ValueSource source = ValueSource::default_value;
        std::string help;
        Kind kind = Kind::text;
        std::vector<std::string> choices;
    };

    /// All known keys at their defaults.
    static Settings defaults();

    void load_file(const std::filesystem::path& path);
    void set(std::string_view key, std::string value, ValueSource source);
    bool contains(std::string_view key) const;

    const std::string& text(std::string_view key) const;
    double real(std::string_view key) const;
    long long integer(std::string_view key) const;
    std::vector<double> reals(std::string_view key) const;
    std::vector<long long> integers(std::string_view key) const;
    ValueSource source(std::string_view key) const;

    const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }

    /// Multi-line dump, one `key = value  # source` per entry.
    std::string describe() const;

private:
    const Entry& entry(std::string_view key) const;

    std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace fswad
