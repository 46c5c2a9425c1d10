// CPLEX-style LP text format: writer for external inspection of built
// programs, reader for the round-trip contract. Covers the subset the writer
// emits (linear objective/constraints, bounds, binaries).
#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "cpomdp/lp.hpp"

namespace cpomdp::lp {

namespace detail {

inline std::string var_name(const ProgramHandle& p, std::size_t j) {
    const std::string& n = p.var(j).name;
    return n.empty() ? "v" + std::to_string(j) : n;
}

inline std::string row_name(const ProgramHandle& p, std::size_t i) {
    const std::string& n = p.row(i).name;
    return n.empty() ? "c" + std::to_string(i) : n;
}

inline void write_number(std::ostream& os, real v) {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v;
    os << tmp.str();
}

inline void write_terms(std::ostream& os,
                        const std::vector<std::pair<std::size_t, real>>& terms,
                        const ProgramHandle& p) {
    bool first = true;
    for (const auto& [j, v] : terms) {
        if (v == 0) continue;
        if (first) {
            if (v < 0) os << "- ";
            first = false;
        } else {
            os << (v < 0 ? " - " : " + ");
        }
        write_number(os, std::abs(v));
        os << ' ' << var_name(p, j);
    }
    if (first) os << "0 " << var_name(p, 0);
}

} // namespace detail

inline void write_lp(const ProgramHandle& p, std::ostream& os) {
    os << (p.objective_sense() == Sense::maximize ? "Maximize" : "Minimize") << "\n obj: ";
    std::vector<std::pair<std::size_t, real>> obj;
    for (std::size_t j = 0; j < p.n_vars(); ++j)
        if (p.objective_coef(j) != 0) obj.push_back({j, p.objective_coef(j)});
    detail::write_terms(os, obj, p);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < p.n_rows(); ++i) {
        const auto& row = p.row(i);
        os << ' ' << detail::row_name(p, i) << ": ";
        detail::write_terms(os, row.coefs, p);
        switch (row.sense) {
        case RowSense::le: os << " <= "; break;
        case RowSense::ge: os << " >= "; break;
        case RowSense::eq: os << " = "; break;
        }
        detail::write_number(os, row.rhs);
        os << '\n';
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < p.n_vars(); ++j) {
        const auto& v = p.var(j);
        if (v.binary) continue; // implied [0,1]
        os << ' ';
        if (!std::isfinite(v.lb) && !std::isfinite(v.ub)) {
            os << detail::var_name(p, j) << " free\n";
            continue;
        }
        if (std::isfinite(v.lb))
            detail::write_number(os, v.lb);
        else
            os << "-inf";
        os << " <= " << detail::var_name(p, j) << " <= ";
        if (std::isfinite(v.ub))
            detail::write_number(os, v.ub);
        else
            os << "+inf";
        os << '\n';
    }
    bool any_bin = false;
    for (std::size_t j = 0; j < p.n_vars(); ++j)
        if (p.var(j).binary) {
            if (!any_bin) os << "Binaries\n";
            any_bin = true;
            os << ' ' << detail::var_name(p, j) << '\n';
        }
    os << "End\n";
}

inline void write_lp_file(const ProgramHandle& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write LP file: " + path);
    write_lp(p, out);
}

namespace detail {

struct LpTokens {
    std::vector<std::string> tok;
    std::size_t pos = 0;

    bool done() const { return pos >= tok.size(); }
    const std::string& peek() const { return tok[pos]; }
    std::string next() { return tok[pos++]; }
    bool accept(const std::string& s) {
        if (!done() && tok[pos] == s) {
            ++pos;
            return true;
        }
        return false;
    }
};

inline bool is_number_start(const std::string& s) {
    return std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' ||
           ((s[0] == '+' || s[0] == '-') && s.size() > 1 &&
            (std::isdigit(static_cast<unsigned char>(s[1])) || s[1] == '.'));
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline real parse_number_tok(LpTokens& tk) {
    real sign = 1;
    while (!tk.done() && (tk.peek() == "+" || tk.peek() == "-"))
        if (tk.next() == "-") sign = -sign;
    const std::string s = lower(tk.next());
    if (s == "inf" || s == "infinity") return sign * inf;
    return sign * std::stod(s);
}

inline bool peek_is_number(const LpTokens& tk) {
    std::size_t p = tk.pos;
    while (p < tk.tok.size() && (tk.tok[p] == "+" || tk.tok[p] == "-")) ++p;
    if (p >= tk.tok.size()) return false;
    const std::string s = lower(tk.tok[p]);
    return is_number_start(tk.tok[p]) || s == "inf" || s == "infinity";
}

inline LpTokens tokenize_lp(std::istream& in) {
    LpTokens out;
    std::string line;
    while (std::getline(in, line)) {
        const auto comment = line.find('\\');
        if (comment != std::string::npos) line.erase(comment);
        std::size_t i = 0;
        while (i < line.size()) {
            const char c = line[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (c == '<' || c == '>' || c == '=') {
                std::string op(1, c);
                if (i + 1 < line.size() && line[i + 1] == '=') {
                    op += '=';
                    ++i;
                }
                out.tok.push_back(op);
                ++i;
                continue;
            }
            if (c == '+' || c == '-') {
                out.tok.push_back(std::string(1, c));
                ++i;
                continue;
            }
            if (c == ':') {
                out.tok.push_back(":");
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
                   line[j] != '<' && line[j] != '>' && line[j] != '=' && line[j] != ':' &&
                   line[j] != '+' && line[j] != '-')
                ++j;
            // keep exponent signs attached: 1e-05
            if (j < line.size() && (line[j] == '+' || line[j] == '-') && j > i &&
                (line[j - 1] == 'e' || line[j - 1] == 'E') &&
                is_number_start(line.substr(i, j - i))) {
                ++j;
                while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j])))
                    ++j;
            }
            out.tok.push_back(line.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

} // namespace detail

/// Parses the LP-format subset produced by write_lp (plus common variants:
/// keyword casing, st/s.t., inf spellings). Variables are created in order
/// of first appearance.
inline ProgramHandle read_lp(std::istream& in) {
    using namespace detail;
    LpTokens t = tokenize_lp(in);
    ProgramHandle p;
    std::map<std::string, std::size_t> vars;
    auto var_of = [&](const std::string& name) {
        auto it = vars.find(name);
        if (it != vars.end()) return it->second;
        const std::size_t j = p.add_var(0.0, inf, 0.0, name);
        vars.emplace(name, j);
        return j;
    };

    auto is_keyword = [](const std::string& s) {
        const std::string k = lower(s);
        return k == "maximize" || k == "minimize" || k == "max" || k == "min" ||
               k == "subject" || k == "st" || k == "s.t." || k == "such" || k == "bounds" ||
               k == "binaries" || k == "binary" || k == "bin" || k == "general" ||
               k == "end";
    };

    // sum of terms, up to a relational operator or keyword
    auto parse_terms = [&](LpTokens& tk) {
        std::vector<std::pair<std::size_t, real>> terms;
        real sign = 1;
        bool have_sign = false;
        while (!tk.done()) {
            const std::string& s = tk.peek();
            if (s == "<=" || s == ">=" || s == "=" || s == "<" || s == ">") break;
            if (!have_sign && is_keyword(s)) break;
            if (s == "+") {
                sign = 1;
                have_sign = true;
                tk.next();
                continue;
            }
            if (s == "-") {
                sign = have_sign ? -sign : -1;
                have_sign = true;
                tk.next();
                continue;
            }
            real coef = 1;
            if (is_number_start(s)) {
                coef = std::stod(tk.next());
                if (!tk.done() && tk.peek() == "*") tk.next();
            }
            std::string name;
            if (!tk.done() && !is_number_start(tk.peek()) && tk.peek() != "+" &&
                tk.peek() != "-" && tk.peek() != "<=" && tk.peek() != ">=" &&
                tk.peek() != "=" && !is_keyword(tk.peek()))
                name = tk.next();
            if (name.empty()) {
                // constant term in a row: fold into rhs via sentinel index
                terms.push_back({SIZE_MAX, sign * coef});
            } else {
                terms.push_back({var_of(name), sign * coef});
            }
            sign = 1;
            have_sign = false;
        }
        return terms;
    };

    // objective
    std::string kw = lower(t.next());
    const bool maximize = kw == "maximize" || kw == "max";
    p.set_objective_sense(maximize ? Sense::maximize : Sense::minimize);
    // optional label
    if (!t.done() && t.pos + 1 < t.tok.size() && t.tok[t.pos + 1] == ":") {
        t.next();
        t.next();
    }
    for (const auto& [j, v] : parse_terms(t))
        if (j != SIZE_MAX) p.set_objective(j, p.objective_coef(j) + v);

    // constraints
    kw = lower(t.next());
    if (kw == "subject" || kw == "such") {
        t.next(); // "to"/"that"
    } else if (kw != "st" && kw != "s.t.") {
        throw ConfigError("LP parse: expected constraint section, got " + kw);
    }
    while (!t.done() && !is_keyword(t.peek())) {
        if (t.pos + 1 < t.tok.size() && t.tok[t.pos + 1] == ":") {
            t.next();
            t.next();
        }
        auto terms = parse_terms(t);
        const std::string op = t.next();
        real rhs = parse_number_tok(t);
        std::vector<std::pair<std::size_t, real>> coefs;
        for (const auto& [j, v] : terms) {
            if (j == SIZE_MAX)
                rhs -= v;
            else
                coefs.push_back({j, v});
        }
        RowSense sense = RowSense::eq;
        if (op == "<=" || op == "<") sense = RowSense::le;
        else if (op == ">=" || op == ">") sense = RowSense::ge;
        p.add_row(std::move(coefs), sense, rhs);
    }

    // bounds / binaries
    while (!t.done()) {
        kw = lower(t.next());
        if (kw == "end") break;
        if (kw == "bounds") {
            while (!t.done() && !is_keyword(t.peek())) {
                // forms: "lb <= x <= ub" | "x free" | "x <= ub" | "x >= lb"
                if (peek_is_number(t)) {
                    const real lb = parse_number_tok(t);
                    t.next(); // <=
                    const std::size_t j = var_of(t.next());
                    t.next(); // <=
                    const real ub = parse_number_tok(t);
                    p.set_bounds(j, lb, ub);
                } else {
                    const std::size_t j = var_of(t.next());
                    if (!t.done() && lower(t.peek()) == "free") {
                        t.next();
                        p.set_bounds(j, -inf, inf);
                    } else {
                        const std::string op = t.next();
                        const real v = parse_number_tok(t);
                        if (op == "<=" || op == "<")
                            p.set_bounds(j, p.var(j).lb, v);
                        else if (op == ">=" || op == ">")
                            p.set_bounds(j, v, p.var(j).ub);
                        else
                            p.set_bounds(j, v, v);
                    }
                }
            }
        } else if (kw == "binaries" || kw == "binary" || kw == "bin") {
            while (!t.done() && !is_keyword(t.peek())) {
                const std::size_t j = var_of(t.next());
                p.set_bounds(j, 0, 1);
                p.set_binary(j, true);
            }
        }
    }
    return p;
}

inline ProgramHandle read_lp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open LP file: " + path);
    return read_lp(in);
}

} // namespace cpomdp::lp
