#pragma once

// Minimal INI reader that remembers where every entry came from, so semantic
// validation downstream can report line numbers.
//
//   # comment            ; comment
//   [section]
//   key = value          # trailing comments allowed

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "caqubit/errors.hpp"

namespace caqubit {

struct IniEntry {
    std::string value;
    int line = 0;
};

class IniDocument {
public:
    using Section = std::map<std::string, IniEntry>;

    static IniDocument parse(std::string_view text, std::string source = {}) {
        IniDocument doc;
        doc.source_ = std::move(source);
        std::string current;
        int lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = std::min(text.find('\n', pos), text.size());
            std::string line(text.substr(pos, eol - pos));
            pos = eol + 1;
            ++lineno;

            if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
            line = trim(line);
            if (line.empty()) {
                if (eol == text.size()) break;
                continue;
            }

            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3)
                    throw ConfigError(doc.source_, lineno, "malformed section header '" + line + "'");
                current = trim(line.substr(1, line.size() - 2));
                doc.sections_[current];
                doc.section_lines_[current] = lineno;
            } else {
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ConfigError(doc.source_, lineno, "expected 'key = value', got '" + line + "'");
                if (current.empty())
                    throw ConfigError(doc.source_, lineno, "entry outside of any [section]");
                std::string key = trim(line.substr(0, eq));
                std::string value = trim(line.substr(eq + 1));
                if (key.empty()) throw ConfigError(doc.source_, lineno, "empty key");
                auto& sec = doc.sections_[current];
                if (sec.contains(key))
                    throw ConfigError(doc.source_, lineno,
                                      "duplicate key '" + key + "' in [" + current + "]");
                sec[key] = IniEntry{std::move(value), lineno};
            }
            if (eol == text.size()) break;
        }
        return doc;
    }

    static IniDocument load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path, 0, "cannot open file");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    [[nodiscard]] const std::string& source() const noexcept { return source_; }

    [[nodiscard]] bool has_section(const std::string& s) const { return sections_.contains(s); }

    [[nodiscard]] const std::map<std::string, Section>& sections() const noexcept {
        return sections_;
    }

    [[nodiscard]] int section_line(const std::string& s) const {
        auto it = section_lines_.find(s);
        return it == section_lines_.end() ? 0 : it->second;
    }

    [[nodiscard]] const IniEntry* find(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto e = s->second.find(key);
        return e == s->second.end() ? nullptr : &e->second;
    }

    [[nodiscard]] const IniEntry& require(const std::string& section, const std::string& key) const {
        if (const auto* e = find(section, key)) return *e;
        throw ConfigError(source_, section_line(section),
                          "missing required entry '" + key + "' in [" + section + "]");
    }

    [[nodiscard]] double number(const std::string& section, const std::string& key) const {
        const auto& e = require(section, key);
        return to_double(e, section, key);
    }

    [[nodiscard]] std::optional<double> optional_number(const std::string& section,
                                                        const std::string& key) const {
        const auto* e = find(section, key);
        if (!e) return std::nullopt;
        return to_double(*e, section, key);
    }

    /// A number that must be > 0 (or >= 0 when allow_zero).
    [[nodiscard]] double positive(const std::string& section, const std::string& key,
                                  bool allow_zero = false) const {
        const auto& e = require(section, key);
        const double v = to_double(e, section, key);
        if (v < 0.0 || (!allow_zero && v == 0.0))
            throw ConfigError(source_, e.line,
                              "[" + section + "] " + key + " must be " +
                                  (allow_zero ? "non-negative" : "positive") + ", got " + e.value);
        return v;
    }

    [[nodiscard]] double to_double(const IniEntry& e, const std::string& section,
                                   const std::string& key) const {
        double v = 0.0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || !std::isfinite(v))
            throw ConfigError(source_, e.line,
                              "[" + section + "] " + key + ": '" + e.value + "' is not a number");
        return v;
    }

    static bool to_bool(const IniEntry& e, const std::string& source, const std::string& key) {
        std::string v = e.value;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        throw ConfigError(source, e.line, key + ": '" + e.value + "' is not a boolean");
    }

    /// Applies `other` on top of this document (later entries win).
    void merge(const IniDocument& other) {
        for (const auto& [name, sec] : other.sections_) {
            auto& mine = sections_[name];
            if (!section_lines_.contains(name)) section_lines_[name] = other.section_line(name);
            for (const auto& [k, v] : sec) mine[k] = v;
        }
    }

    void set(const std::string& section, const std::string& key, std::string value) {
        sections_[section][key] = IniEntry{std::move(value), 0};
    }

private:
    static std::string trim(std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return std::string(s.substr(b, e - b));
    }

    std::string source_;
    std::map<std::string, Section> sections_;
    std::map<std::string, int> section_lines_;
};

}  // namespace caqubit
