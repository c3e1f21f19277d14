#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "zvonkin/util.hpp"

namespace zvonkin {

// Flat key=value configuration with one level of [section] headers.
// Comments start with '#'. Keys must be unique within their section and
// every key must live under a section; anything unrecognised is an error
// at the consumer, so typos cannot silently change a run.
class Config {
   public:
    struct Entry {
        std::string section, key, value;
        int line = 0;
        mutable bool consumed = false;
    };

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        c.origin_ = origin;
        std::istringstream in(text);
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = strip(raw);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                require(s.back() == ']' && s.size() > 2,
                        origin + ":" + std::to_string(line) + ": malformed section header");
                section = strip(s.substr(1, s.size() - 2));
                continue;
            }
            auto eq = s.find('=');
            require(eq != std::string::npos,
                    origin + ":" + std::to_string(line) + ": expected key = value");
            require(!section.empty(),
                    origin + ":" + std::to_string(line) + ": key outside any [section]");
            std::string key = strip(s.substr(0, eq));
            std::string value = strip(s.substr(eq + 1));
            require(!key.empty(), origin + ":" + std::to_string(line) + ": empty key");
            for (const Entry& e : c.entries_)
                require(!(e.section == section && e.key == key),
                        origin + ":" + std::to_string(line) + ": duplicate key '" + section +
                            "." + key + "'");
            c.entries_.push_back({section, key, value, line, false});
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        require(static_cast<bool>(in), "config: cannot open '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    bool has(const std::string& section, const std::string& key) const {
        return lookup(section, key) != nullptr;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const Entry* e = lookup(section, key);
        return e ? e->value : fallback;
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        const Entry* e = lookup(section, key);
        if (!e) return fallback;
        return parse_number(*e);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const Entry* e = lookup(section, key);
        if (!e) return fallback;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        throw ConfigError(where(*e) + ": expected true or false, got '" + e->value + "'");
    }

    long get_int(const std::string& section, const std::string& key, long fallback) const {
        const Entry* e = lookup(section, key);
        if (!e) return fallback;
        double v = parse_number(*e);
        long n = static_cast<long>(v);
        require(static_cast<double>(n) == v,
                where(*e) + ": expected an integer, got '" + e->value + "'");
        return n;
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const {
        const Entry* e = lookup(section, key);
        if (!e) return fallback;
        try {
            // stoull would wrap a leading minus instead of failing
            require(!e->value.empty() && e->value[0] != '-', "");
            std::size_t used = 0;
            std::uint64_t v = std::stoull(e->value, &used);
            require(used == e->value.size(), "");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(*e) + ": expected an unsigned integer, got '" + e->value +
                              "'");
        }
    }

    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 std::vector<double> fallback) const {
        const Entry* e = lookup(section, key);
        if (!e) return fallback;
        std::vector<double> out;
        std::string item;
        std::istringstream in(e->value);
        while (std::getline(in, item, ',')) {
            item = strip(item);
            require(!item.empty(), where(*e) + ": empty list item");
            Entry fake{e->section, e->key, item, e->line, false};
            out.push_back(parse_number(fake));
        }
        require(!out.empty(), where(*e) + ": expected a comma separated list");
        return out;
    }

    // every key must have been read by now; unread keys are typos
    void reject_unconsumed() const {
        for (const Entry& e : entries_)
            require(e.consumed, where(e) + ": unknown key '" + e.section + "." + e.key + "'");
    }

    const std::vector<Entry>& entries() const { return entries_; }

   private:
    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    const Entry* lookup(const std::string& section, const std::string& key) const {
        for (const Entry& e : entries_)
            if (e.section == section && e.key == key) {
                e.consumed = true;
                return &e;
            }
        return nullptr;
    }

    std::string where(const Entry& e) const { return origin_ + ":" + std::to_string(e.line); }

    double parse_number(const Entry& e) const {
        try {
            std::size_t used = 0;
            double v = std::stod(e.value, &used);
            require(used == e.value.size(), "");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(e) + ": expected a number, got '" + e.value + "'");
        }
    }

    std::string origin_;
    std::vector<Entry> entries_;
};

}  // namespace zvonkin
