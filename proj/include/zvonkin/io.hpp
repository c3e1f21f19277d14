#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zvonkin/transform.hpp"

namespace zvonkin {

// Writes the [block] / key = value report format. Every number goes through
// the shortest round-trip formatter, so identical runs produce identical
// bytes and a reader recovers the exact doubles.
class KvWriter {
   public:
    explicit KvWriter(std::ostream& out) : out_(out) {}

    void block(const std::string& name) {
        if (!first_) out_ << "\n";
        first_ = false;
        out_ << "[" << name << "]\n";
    }

    void kv(const std::string& key, const std::string& v) { out_ << key << " = " << v << "\n"; }
    void kv(const std::string& key, const char* v) { out_ << key << " = " << v << "\n"; }
    void kv(const std::string& key, double v) { kv(key, format_double(v)); }
    void kv(const std::string& key, bool v) { kv(key, v ? "true" : "false"); }
    void kv(const std::string& key, long long v) { kv(key, std::to_string(v)); }
    void kv(const std::string& key, int v) { kv(key, std::to_string(v)); }
    void kv(const std::string& key, std::uint64_t v) { kv(key, std::to_string(v)); }

    void list(const std::string& key, const std::vector<double>& vs) {
        std::string s;
        for (double v : vs) {
            if (!s.empty()) s += ", ";
            s += format_double(v);
        }
        kv(key, s);
    }

   private:
    std::ostream& out_;
    bool first_ = true;
};

// Space separated numeric columns under one comment header, for plotting.
inline void write_table(const std::string& path, const std::string& header,
                        const std::vector<std::vector<double>>& cols) {
    require(!cols.empty(), "table: need at least one column");
    std::size_t rows = cols[0].size();
    for (const auto& c : cols)
        require(c.size() == rows, "table: columns must have equal length");
    std::ofstream out(path);
    require(static_cast<bool>(out), "table: cannot write '" + path + "'");
    out << "# " << header << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c)
            out << (c ? " " : "") << format_double(cols[c][r]);
        out << "\n";
    }
    require(static_cast<bool>(out), "table: write to '" + path + "' failed");
}

inline std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "hash: cannot open '" + path + "'");
    std::uint64_t h = fnv1a64(nullptr, 0);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

inline std::uint64_t hash_field(const SpaceTimeField& f, std::uint64_t h = fnv1a64(nullptr, 0)) {
    const Grid& g = f.grid();
    double meta[9] = {static_cast<double>(g.dim),  g.half_width,
                      g.hx,                        g.horizon,
                      g.ht,                        static_cast<double>(f.channels()),
                      f.alpha(),                   f.q(),
                      static_cast<double>(f.time_slices())};
    h = fnv1a64(meta, sizeof meta, h);
    std::size_t per = static_cast<std::size_t>(g.node_count()) * f.channels();
    for (int s = 0; s < f.time_slices(); ++s)
        h = fnv1a64(f.slice_data(s), per * sizeof(double), h);
    return h;
}

namespace detail {

// sequential reader for the exact layout the writers above emit
class LineReader {
   public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool header(const std::string& name) {
        std::string line = next_nonempty();
        return line == "[" + name + "]";
    }

    // "key = value"; empty result when the line does not match the key
    std::optional<std::string> kv(const std::string& key) {
        std::string line = next_nonempty();
        std::string prefix = key + " = ";
        if (line.rfind(prefix, 0) != 0) return std::nullopt;
        return line.substr(prefix.size());
    }

    std::istream& stream() { return in_; }

   private:
    std::string next_nonempty() {
        std::string line;
        while (std::getline(in_, line)) {
            std::size_t a = line.find_first_not_of(" \t\r");
            if (a == std::string::npos) continue;
            std::size_t b = line.find_last_not_of(" \t\r");
            return line.substr(a, b - a + 1);
        }
        return {};
    }

    std::istream& in_;
};

inline void write_field(std::ostream& out, const std::string& name, const SpaceTimeField& f) {
    const Grid& g = f.grid();
    KvWriter w(out);
    w.block(name);
    w.kv("dim", g.dim);
    w.kv("half_width", g.half_width);
    w.kv("hx", g.hx);
    w.kv("horizon", g.horizon);
    w.kv("ht", g.ht);
    w.kv("channels", f.channels());
    w.kv("alpha", f.alpha());
    w.kv("q", f.q());
    w.kv("time_constant", f.time_constant());
    std::size_t per = static_cast<std::size_t>(g.node_count()) * f.channels();
    for (int s = 0; s < f.time_slices(); ++s) {
        const double* v = f.slice_data(s);
        for (std::size_t i = 0; i < per; ++i)
            out << (i % 8 ? " " : "") << format_double(v[i]) << (i % 8 == 7 ? "\n" : "");
        if (per % 8 != 0) out << "\n";
    }
}

inline std::optional<SpaceTimeField> read_field(LineReader& r, const std::string& name) {
    if (!r.header(name)) return std::nullopt;
    auto need = [&](const char* key) -> std::optional<double> {
        auto v = r.kv(key);
        if (!v) return std::nullopt;
        try {
            return parse_double(*v);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    auto dim = need("dim");
    auto half_width = need("half_width");
    auto hx = need("hx");
    auto horizon = need("horizon");
    auto ht = need("ht");
    auto channels = need("channels");
    auto alpha = need("alpha");
    auto q = need("q");
    auto tc = r.kv("time_constant");
    if (!dim || !half_width || !hx || !horizon || !ht || !channels || !alpha || !q || !tc)
        return std::nullopt;
    try {
        Grid g(static_cast<int>(*dim), *half_width, *hx, *horizon, *ht);
        SpaceTimeField f(g, static_cast<int>(*channels), *alpha, *q, *tc == "true");
        std::size_t per = static_cast<std::size_t>(g.node_count()) * f.channels();
        std::string tok;
        for (int s = 0; s < f.time_slices(); ++s) {
            double* v = f.slice_data(s);
            for (std::size_t i = 0; i < per; ++i) {
                if (!(r.stream() >> tok)) return std::nullopt;
                v[i] = parse_double(tok);
            }
        }
        return f;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

// On-disk copy of a finished damping selection: the reversed-time solution
// pair plus the certificate inputs, keyed by a hash of everything that went
// into the solve. Loading is best effort; any mismatch reads as a miss.
inline void save_transform(const std::string& path, std::uint64_t input_hash,
                           const Transform& tr, const std::vector<std::string>& notes = {}) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "transform cache: cannot write '" + path + "'");
    const PdeSolution& sol = tr.solution();
    KvWriter w(out);
    w.block("transform");
    w.kv("input_hash", to_hex(input_hash));
    w.kv("lambda", tr.lambda());
    w.kv("margin", tr.certificate().margin);
    w.kv("sup_grad_u", tr.certificate().sup_grad_u);
    w.kv("backend", sol.backend);
    w.kv("iterations", sol.iterations);
    w.kv("residual", sol.residual);
    w.kv("notes", static_cast<int>(notes.size()));
    for (const std::string& n : notes) w.kv("note", n);
    detail::write_field(out, "u", sol.u);
    detail::write_field(out, "grad-u", sol.grad_u);
    require(static_cast<bool>(out), "transform cache: write to '" + path + "' failed");
}

inline std::optional<Transform> load_transform(const std::string& path,
                                               std::uint64_t input_hash,
                                               std::vector<std::string>* notes = nullptr) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    detail::LineReader r(in);
    if (!r.header("transform")) return std::nullopt;
    auto hash = r.kv("input_hash");
    if (!hash || *hash != to_hex(input_hash)) return std::nullopt;
    auto lambda = r.kv("lambda");
    auto margin = r.kv("margin");
    auto sup = r.kv("sup_grad_u");
    auto backend = r.kv("backend");
    auto iterations = r.kv("iterations");
    auto residual = r.kv("residual");
    auto note_count = r.kv("notes");
    if (!lambda || !margin || !sup || !backend || !iterations || !residual || !note_count)
        return std::nullopt;
    if (notes) notes->clear();
    try {
        long n = static_cast<long>(parse_double(*note_count));
        for (long i = 0; i < n; ++i) {
            auto line = r.kv("note");
            if (!line) return std::nullopt;
            if (notes) notes->push_back(*line);
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    auto u = detail::read_field(r, "u");
    if (!u) return std::nullopt;
    auto gu = detail::read_field(r, "grad-u");
    if (!gu) return std::nullopt;
    try {
        PdeSolution sol;
        sol.u = std::move(*u);
        sol.grad_u = std::move(*gu);
        sol.backend = *backend;
        sol.iterations = static_cast<int>(parse_double(*iterations));
        sol.residual = parse_double(*residual);
        sol.lambda = parse_double(*lambda);
        Transform tr(std::move(sol), parse_double(*lambda), parse_double(*margin));
        // a cache written by a different build of the solver could disagree
        if (std::abs(tr.certificate().sup_grad_u - parse_double(*sup)) > 1e-12)
            return std::nullopt;
        return tr;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace zvonkin
