#pragma once

// Versioned line-oriented text format for fitted models:
//
//   dhf-model 1
//   <key> <count> <v1> ... <vcount>
//   ...
//   end
//
// Doubles use the shortest round-trip representation, so a save/load cycle
// reproduces every value exactly.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dhf/error.hpp"

namespace dhf {

inline constexpr int kModelFormatVersion = 1;

class ModelWriter {
public:
    void text(std::string_view key, std::string_view value) {
        check_key(key);
        if (value.empty() || value.find_first_of(" \t\r\n") != std::string_view::npos) {
            throw ValidationError("model field '" + std::string(key) + "' must be a single token");
        }
        lines_.push_back(std::string(key) + " 1 " + std::string(value));
    }

    void number(std::string_view key, double v) { numbers(key, std::span<const double>(&v, 1)); }

    void numbers(std::string_view key, std::span<const double> values) {
        check_key(key);
        std::string line = std::string(key) + ' ' + std::to_string(values.size());
        char buf[64];
        for (double v : values) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            line += ' ';
            line.append(buf, ptr);
        }
        lines_.push_back(std::move(line));
    }

    void write(std::ostream& out) const {
        out << "dhf-model " << kModelFormatVersion << '\n';
        for (const auto& l : lines_) out << l << '\n';
        out << "end\n";
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write model file '" + path + "'");
        write(out);
    }

private:
    static void check_key(std::string_view key) {
        if (key.empty() || key.find_first_of(" \t\r\n") != std::string_view::npos || key == "end") {
            throw ValidationError("invalid model key");
        }
    }
    std::vector<std::string> lines_;
};

class ModelReader {
public:
    explicit ModelReader(std::istream& in) {
        std::string line;
        if (!std::getline(in, line)) throw DataError("empty model file");
        std::istringstream head(line);
        std::string magic;
        int version = 0;
        head >> magic >> version;
        if (magic != "dhf-model") throw DataError("not a model file");
        if (version != kModelFormatVersion) {
            throw DataError("unsupported model format version " + std::to_string(version));
        }
        bool ended = false;
        while (std::getline(in, line)) {
            if (line == "end") {
                ended = true;
                break;
            }
            std::istringstream ls(line);
            std::string key;
            std::size_t count = 0;
            if (!(ls >> key >> count)) throw DataError("malformed model line");
            std::vector<std::string> tokens(count);
            for (auto& t : tokens) {
                if (!(ls >> t)) throw DataError("model field '" + key + "' is truncated");
            }
            if (!fields_.emplace(key, std::move(tokens)).second) {
                throw DataError("duplicate model field '" + key + "'");
            }
        }
        if (!ended) throw DataError("model file has no end marker");
    }

    static ModelReader from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open model file '" + path + "'");
        return ModelReader(in);
    }

    bool has(std::string_view key) const { return fields_.find(std::string(key)) != fields_.end(); }

    const std::string& text(std::string_view key) const {
        const auto& t = tokens(key);
        if (t.size() != 1) throw DataError("model field '" + std::string(key) + "' is not a token");
        return t.front();
    }

    std::vector<double> numbers(std::string_view key) const {
        const auto& t = tokens(key);
        std::vector<double> out(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto& s = t[i];
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out[i]);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw DataError("model field '" + std::string(key) + "' has a bad number");
            }
        }
        return out;
    }

    std::vector<double> numbers(std::string_view key, std::size_t expected) const {
        auto v = numbers(key);
        if (v.size() != expected) {
            throw DataError("model field '" + std::string(key) + "' has " + std::to_string(v.size()) +
                            " values, expected " + std::to_string(expected));
        }
        return v;
    }

    double number(std::string_view key) const { return numbers(key, 1).front(); }

private:
    const std::vector<std::string>& tokens(std::string_view key) const {
        const auto it = fields_.find(std::string(key));
        if (it == fields_.end()) throw DataError("model file lacks field '" + std::string(key) + "'");
        return it->second;
    }
    std::map<std::string, std::vector<std::string>> fields_;
};

}  // namespace dhf
