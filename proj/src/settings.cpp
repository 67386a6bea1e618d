#include "fswad/settings.hpp"

#include "fswad/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fswad {

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
        throw DataError("row width " + std::to_string(values.size()) + " does not match matrix width " +
                        std::to_string(cols_));
    }
    values_.insert(values_.end(), values.begin(), values.end());
    ++rows_;
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    for (std::uint64_t word : words) {
        state ^= word + 0x9E3779B97F4A7C15ULL + (state << 6) + (state >> 2);
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        state = z ^ (z >> 31);
    }
    return state;
}

std::uint64_t hash_text(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        auto item = trim(text.substr(start, comma - start));
        if (!item.empty()) items.push_back(std::move(item));
        start = comma + 1;
    }
    return items;
}

double parse_real(std::string_view text, std::string_view what) {
    const std::string s = trim(text);
    auto parse_one = [&](std::string_view part) {
        double value = 0.0;
        const auto* end = part.data() + part.size();
        auto [ptr, ec] = std::from_chars(part.data(), end, value);
        if (ec != std::errc() || ptr != end || part.empty()) {
            throw ConfigError("invalid number for " + std::string(what) + ": '" + s + "'");
        }
        return value;
    };
    if (auto slash = s.find('/'); slash != std::string::npos) {
        const double num = parse_one(trim(std::string_view(s).substr(0, slash)));
        const double den = parse_one(trim(std::string_view(s).substr(slash + 1)));
        if (den == 0.0) throw ConfigError("zero denominator for " + std::string(what));
        return num / den;
    }
    return parse_one(s);
}

long long parse_integer(std::string_view text, std::string_view what) {
    const std::string s = trim(text);
    long long value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end || s.empty()) {
        throw ConfigError("invalid integer for " + std::string(what) + ": '" + s + "'");
    }
    return value;
}

std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view origin) {
    std::vector<KeyValue> out;
    std::set<std::string, std::less<>> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        KeyValue kv{trim(std::string_view(stripped).substr(0, eq)), trim(std::string_view(stripped).substr(eq + 1)),
                    number};
        if (kv.key.empty()) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": empty key");
        }
        if (!seen.insert(kv.key).second) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": duplicate key '" + kv.key + "'");
        }
        out.push_back(std::move(kv));
    }
    return out;
}

std::vector<KeyValue> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_values(buffer.str(), path.string());
}

std::string_view to_string(ValueSource source) {
    switch (source) {
        case ValueSource::default_value: return "default";
        case ValueSource::file: return "file";
        case ValueSource::flag: return "flag";
    }
    return "?";
}

Settings Settings::defaults() {
    Settings s;
    using K = Kind;
    auto add = [&](const char* key, const char* value, K kind, const char* help,
                   std::vector<std::string> choices = {}) {
        s.entries_[key] = Entry{value, ValueSource::default_value, help, kind, std::move(choices)};
    };
    add("seed", "1", K::integer, "base random seed");
    add("tuple_size", "3", K::integer, "augmented tuple size k (3 = triplet, 2 = pair)");
    add("gap", "4", K::real, "ordinal label spacing m");
    add("batch_composition", "balanced", K::text, "balanced | uniform", {"balanced", "uniform"});
    add("hidden_sizes", "20", K::integers, "hidden layer widths of the shared sub-network");
    add("lambda", "0.01", K::real, "L2 weight regularization strength");
    add("epochs", "50", K::integer, "training epochs");
    add("steps_per_epoch", "20", K::integer, "parameter updates per epoch");
    add("batch_size", "64", K::integer, "augmented instances per step");
    add("learning_rate", "0.001", K::real, "optimizer step size");
    add("optimizer", "rmsprop", K::text, "sgd | rmsprop", {"sgd", "rmsprop"});
    add("rmsprop_decay", "0.9", K::real, "RMSprop squared-gradient decay");
    add("rmsprop_epsilon", "1e-8", K::real, "RMSprop denominator epsilon");
    add("repetitions", "30", K::integer, "reference draws per test record");
    add("threshold", "auto", K::real_or_auto, "decision threshold; auto = k * gap");
    add("test_fraction", "2/9", K::real, "share of the available set held out for testing");
    add("sample_set_count", "5", K::integer, "SampleSets per sweep point");
    add("labelled_counts", "30,60,120", K::integers, "experiment 2 sweep");
    add("anomaly_percents", "2,5,10", K::reals, "experiment 3 sweep");
    add("labelled_fixed", "60", K::integer, "labelled anomalies for experiments 1 and 3");
    add("percent_fixed", "10", K::real, "contamination percent for experiments 1 and 2");
    add("jobs", "1", K::integer, "parallel SampleSet jobs");
    return s;
}

void Settings::load_file(const std::filesystem::path& path) {
    for (auto& kv : read_key_values(path)) {
        if (!contains(kv.key)) {
            throw ConfigError(path.string() + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
        }
        set(kv.key, std::move(kv.value), ValueSource::file);
    }
}

namespace {

void check_value(std::string_view key, const Settings::Entry& e, const std::string& value) {
    using K = Settings::Kind;
    switch (e.kind) {
        case K::integer: parse_integer(value, key); break;
        case K::real: parse_real(value, key); break;
        case K::real_or_auto:
            if (trim(value) != "auto") parse_real(value, key);
            break;
        case K::integers:
        case K::reals:
            if (split_list(value).empty()) throw ConfigError(std::string(key) + " needs at least one value");
            for (const auto& item : split_list(value)) {
                if (e.kind == K::integers) {
                    parse_integer(item, key);
                } else {
                    parse_real(item, key);
                }
            }
            break;
        case K::text:
            if (!e.choices.empty() && std::find(e.choices.begin(), e.choices.end(), trim(value)) == e.choices.end()) {
                throw ConfigError("invalid value for " + std::string(key) + ": '" + value + "'");
            }
            break;
    }
}

}  // namespace

void Settings::set(std::string_view key, std::string value, ValueSource source) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown setting '" + std::string(key) + "'");
    check_value(key, it->second, value);
    it->second.value = std::move(value);
    it->second.source = source;
}

bool Settings::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const Settings::Entry& Settings::entry(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown setting '" + std::string(key) + "'");
    return it->second;
}

const std::string& Settings::text(std::string_view key) const { return entry(key).value; }

double Settings::real(std::string_view key) const { return parse_real(entry(key).value, key); }

long long Settings::integer(std::string_view key) const { return parse_integer(entry(key).value, key); }

std::vector<double> Settings::reals(std::string_view key) const {
    std::vector<double> out;
    for (const auto& item : split_list(entry(key).value)) out.push_back(parse_real(item, key));
    return out;
}

std::vector<long long> Settings::integers(std::string_view key) const {
    std::vector<long long> out;
    for (const auto& item : split_list(entry(key).value)) out.push_back(parse_integer(item, key));
    return out;
}

ValueSource Settings::source(std::string_view key) const { return entry(key).source; }

std::string Settings::describe() const {
    std::ostringstream out;
    for (const auto& [key, e] : entries_) {
        out << key << " = " << e.value << "  # " << to_string(e.source) << '\n';
    }
    return out.str();
}

}  // namespace fswad
