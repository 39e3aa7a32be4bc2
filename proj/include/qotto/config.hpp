// Flat key-value configuration files with TOML-style sections. Only what
// the scenario configs need: numbers, booleans, quoted strings, and flat
// arrays. Every key must be consumed by the loader; leftovers are errors.
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qotto {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigTable {
  public:
    static ConfigTable parse_string(const std::string& text,
                                    const std::string& origin = "<string>") {
        ConfigTable t;
        t.origin_ = origin;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    t.fail(lineno, "malformed section header: " + s);
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty()) t.fail(lineno, "empty section name");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                t.fail(lineno, "expected key = value: " + s);
            std::string key = trim(s.substr(0, eq));
            std::string val = trim(s.substr(eq + 1));
            if (key.empty()) t.fail(lineno, "empty key");
            if (!section.empty()) key = section + "." + key;
            for (const auto& kv : t.items_)
                if (kv.first == key)
                    t.fail(lineno, "duplicate key " + key);
            t.items_.emplace_back(key, parse_value(val, t, lineno));
        }
        return t;
    }

    static ConfigTable parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path);
    }

    bool has(const std::string& key) const {
        for (const auto& kv : items_)
            if (kv.first == key) return true;
        return false;
    }

    double number(const std::string& key, double fallback) const {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::number)
            throw ConfigError(origin_ + ": " + key + ": expected a number");
        return v->num;
    }

    std::optional<double> maybe_number(const std::string& key) const {
        const Value* v = find(key);
        if (!v) return std::nullopt;
        if (v->kind != Value::Kind::number)
            throw ConfigError(origin_ + ": " + key + ": expected a number");
        return v->num;
    }

    bool boolean(const std::string& key, bool fallback) const {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::boolean)
            throw ConfigError(origin_ + ": " + key + ": expected true/false");
        return v->b;
    }

    std::string str(const std::string& key,
                    const std::string& fallback) const {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::string)
            throw ConfigError(origin_ + ": " + key +
                              ": expected a quoted string");
        return v->s;
    }

    std::vector<double> numbers(const std::string& key) const {
        const Value* v = find(key);
        if (!v) return {};
        if (v->kind == Value::Kind::number) return {v->num};
        if (v->kind != Value::Kind::number_list)
            throw ConfigError(origin_ + ": " + key +
                              ": expected a list of numbers");
        return v->nums;
    }

    // every parsed key must have been read by the time loading finishes
    void require_all_consumed() const {
        std::string leftovers;
        for (const auto& kv : items_)
            if (!consumed_.count(kv.first))
                leftovers += (leftovers.empty() ? "" : ", ") + kv.first;
        if (!leftovers.empty())
            throw ConfigError(origin_ + ": unknown key(s): " + leftovers);
    }

    const std::string& origin() const { return origin_; }

  private:
    struct Value {
        enum class Kind { number, boolean, string, number_list } kind;
        double num = 0.0;
        bool b = false;
        std::string s;
        std::vector<double> nums;
    };

    const Value* find(const std::string& key) const {
        for (const auto& kv : items_)
            if (kv.first == key) {
                consumed_.insert(key);
                return &kv.second;
            }
        return nullptr;
    }

    [[noreturn]] void fail(int line, const std::string& what) const {
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
    }

    static std::string trim(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
            --b;
        return s.substr(a, b - a);
    }

    static std::string strip_comment(const std::string& s) {
        bool in_quote = false;
        for (size_t k = 0; k < s.size(); ++k) {
            if (s[k] == '"') in_quote = !in_quote;
            if (s[k] == '#' && !in_quote) return s.substr(0, k);
        }
        return s;
    }

    static double parse_number(const std::string& s, const ConfigTable& t,
                               int line) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || s.empty())
            t.fail(line, "not a number: '" + s + "'");
        if (!std::isfinite(v)) t.fail(line, "non-finite number: " + s);
        return v;
    }

    static Value parse_value(const std::string& s, const ConfigTable& t,
                             int line) {
        Value v;
        if (s == "true" || s == "false") {
            v.kind = Value::Kind::boolean;
            v.b = (s == "true");
            return v;
        }
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
            v.kind = Value::Kind::string;
            v.s = s.substr(1, s.size() - 2);
            return v;
        }
        if (!s.empty() && s.front() == '[') {
            if (s.back() != ']') t.fail(line, "unterminated list: " + s);
            v.kind = Value::Kind::number_list;
            std::string body = s.substr(1, s.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) t.fail(line, "empty list element");
                v.nums.push_back(parse_number(item, t, line));
            }
            return v;
        }
        v.kind = Value::Kind::number;
        v.num = parse_number(s, t, line);
        return v;
    }

    std::string origin_;
    std::vector<std::pair<std::string, Value>> items_;
    mutable std::set<std::string> consumed_;
};

}  // namespace qotto
