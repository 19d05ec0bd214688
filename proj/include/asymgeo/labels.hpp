#pragma once

// Alphabets, dot-notation labels and eventually periodic threads.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asymgeo/error.hpp"

namespace asymgeo {

using Symbol = std::uint8_t;

class Alphabet {
public:
    Alphabet() = default;
    explicit Alphabet(std::vector<std::string> symbols) : names_(std::move(symbols)) {
        if (names_.empty()) throw RangeError("alphabet must be nonempty");
        if (names_.size() > 255) throw RangeError("alphabet too large");
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty() || names_[i].find_first_of(".:() ") != std::string::npos)
                throw ParseError("bad symbol name '" + names_[i] + "'");
            for (std::size_t j = 0; j < i; ++j)
                if (names_[i] == names_[j]) throw RangeError("duplicate symbol '" + names_[i] + "'");
        }
    }

    std::size_t size() const { return names_.size(); }
    const std::string& name(Symbol s) const {
        if (s >= names_.size()) throw RangeError("symbol index out of range");
        return names_[s];
    }
    std::optional<Symbol> find(std::string_view n) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == n) return static_cast<Symbol>(i);
        return std::nullopt;
    }
    const std::vector<std::string>& symbols() const { return names_; }
    bool operator==(const Alphabet&) const = default;

private:
    std::vector<std::string> names_;
};

// A finite label t1.t2...tn. Symbols are alphabet indices, so comparison is
// lexicographic in alphabet order.
class LabelPath {
public:
    LabelPath() = default;
    LabelPath(std::initializer_list<Symbol> s) : s_(s) {}
    explicit LabelPath(std::vector<Symbol> s) : s_(std::move(s)) {}
    explicit LabelPath(std::span<const Symbol> s) : s_(s.begin(), s.end()) {}

    std::size_t size() const { return s_.size(); }
    bool empty() const { return s_.empty(); }
    Symbol operator[](std::size_t i) const { return s_[i]; }
    std::span<const Symbol> span() const { return s_; }
    const std::vector<Symbol>& symbols() const { return s_; }

    void push_back(Symbol s) { s_.push_back(s); }
    LabelPath then(Symbol s) const {
        LabelPath r = *this;
        r.s_.push_back(s);
        return r;
    }
    bool is_prefix_of(std::span<const Symbol> other) const {
        return s_.size() <= other.size() && std::equal(s_.begin(), s_.end(), other.begin());
    }
    bool is_prefix_of(const LabelPath& other) const { return is_prefix_of(other.span()); }

    auto operator<=>(const LabelPath&) const = default;
    bool operator==(const LabelPath&) const = default;

private:
    std::vector<Symbol> s_;
};

inline LabelPath prefix(const LabelPath& x, std::size_t i) {
    if (i < 1 || i > x.size())
        throw RangeError("prefix length " + std::to_string(i) + " outside 1.." + std::to_string(x.size()));
    return LabelPath(x.span().first(i));
}

inline std::vector<LabelPath> successors(const LabelPath& x, const Alphabet& a) {
    std::vector<LabelPath> out;
    out.reserve(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out.push_back(x.then(static_cast<Symbol>(t)));
    return out;
}

inline std::string format_label(std::span<const Symbol> x, const Alphabet& a) {
    std::string out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += '.';
        out += a.name(x[i]);
    }
    return out;
}
inline std::string format_label(const LabelPath& x, const Alphabet& a) { return format_label(x.span(), a); }

inline LabelPath parse_label(std::string_view text, const Alphabet& a) {
    LabelPath out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = text.find('.', pos);
        std::string_view tok = text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
        auto s = a.find(tok);
        if (!s) throw ParseError("unknown symbol '" + std::string(tok) + "' in label '" + std::string(text) + "'");
        out.push_back(*s);
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    return out;
}

// head followed by cycle repeated forever.
struct ThreadSpec {
    LabelPath head;
    LabelPath cycle;

    ThreadSpec() = default;
    ThreadSpec(LabelPath h, LabelPath c) : head(std::move(h)), cycle(std::move(c)) {
        if (cycle.empty()) throw ThreadError("thread cycle must be nonempty");
    }

    Symbol at(std::size_t i) const {
        if (i < head.size()) return head[i];
        return cycle[(i - head.size()) % cycle.size()];
    }

    // Shortest equivalent form: primitive cycle, head shrunk as far as possible.
    ThreadSpec normalized() const {
        std::vector<Symbol> c = cycle.symbols();
        std::size_t n = c.size();
        for (std::size_t p = 1; p <= n; ++p) {
            if (n % p) continue;
            bool ok = true;
            for (std::size_t i = p; i < n && ok; ++i) ok = c[i] == c[i - p];
            if (ok) {
                c.resize(p);
                break;
            }
        }
        std::vector<Symbol> h = head.symbols();
        while (!h.empty() && h.back() == c.back()) {
            std::rotate(c.rbegin(), c.rbegin() + 1, c.rend());
            h.pop_back();
        }
        return ThreadSpec(LabelPath(std::move(h)), LabelPath(std::move(c)));
    }

    bool operator==(const ThreadSpec& o) const {
        ThreadSpec a = normalized(), b = o.normalized();
        return a.head == b.head && a.cycle == b.cycle;
    }
};

inline LabelPath expand(const ThreadSpec& t, std::size_t k) {
    std::vector<Symbol> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = t.at(i);
    return LabelPath(std::move(out));
}

// Number of leading symbols two threads share; SIZE_MAX when identical.
inline std::size_t common_prefix(const ThreadSpec& u, const ThreadSpec& v) {
    std::size_t bound = std::max(u.head.size(), v.head.size()) + std::lcm(u.cycle.size(), v.cycle.size());
    for (std::size_t i = 0; i < bound; ++i)
        if (u.at(i) != v.at(i)) return i;
    return SIZE_MAX;
}

// Total order on threads as infinite words.
inline std::strong_ordering compare_threads(const ThreadSpec& u, const ThreadSpec& v) {
    std::size_t c = common_prefix(u, v);
    if (c == SIZE_MAX) return std::strong_ordering::equal;
    return u.at(c) <=> v.at(c);
}

inline std::string format_thread(const ThreadSpec& t, const Alphabet& a) {
    return format_label(t.head, a) + ":(" + format_label(t.cycle, a) + ")";
}

// "prefix:(cycle)"; a bare label is accepted as a thread continued by the
// first alphabet symbol.
inline ThreadSpec parse_thread(std::string_view text, const Alphabet& a) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        LabelPath h = parse_label(text, a);
        if (h.empty()) throw ParseError("empty thread");
        return ThreadSpec(h, LabelPath{0});
    }
    std::string_view rest = text.substr(colon + 1);
    if (rest.size() < 3 || rest.front() != '(' || rest.back() != ')')
        throw ParseError("thread cycle must be written as (x.y...) in '" + std::string(text) + "'");
    LabelPath cyc = parse_label(rest.substr(1, rest.size() - 2), a);
    if (cyc.empty()) throw ParseError("empty thread cycle");
    return ThreadSpec(parse_label(text.substr(0, colon), a), cyc);
}

}  // namespace asymgeo
