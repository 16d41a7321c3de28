// lia.hpp -- linear integer arithmetic formulas, a built-in feasibility
// solver (exact-rational simplex with branch and bound, case splitting over
// disjunctions), SMT-LIB2 emission and an external text-protocol backend.

#ifndef STRAND_LIA_HPP
#define STRAND_LIA_HPP

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

namespace strand {

using LiaVar = uint32_t;

enum class LiaVarKind { Length, Int, Code, Counter };

struct LiaVarInfo {
    LiaVarKind kind;
    std::string name;
    bool non_negative;
};

/// Interning pool for LIA variables. Length and code variables are keyed by
/// the string variable's name, integer variables by their own name;
/// counters are always fresh.
class LiaVarPool {
  public:
    LiaVar length_of(const std::string& str_var) {
        return intern(LiaVarKind::Length, "len!" + str_var, true);
    }
    LiaVar int_var(const std::string& name) { return intern(LiaVarKind::Int, name, false); }
    LiaVar code_of(const std::string& str_var) {
        return intern(LiaVarKind::Code, "code!" + str_var, true);
    }
    LiaVar fresh_counter() {
        LiaVar v = static_cast<LiaVar>(infos_.size());
        infos_.push_back({LiaVarKind::Counter, "n!" + std::to_string(v), true});
        return v;
    }

    const LiaVarInfo& info(LiaVar v) const { return infos_.at(v); }
    size_t size() const { return infos_.size(); }

  private:
    LiaVar intern(LiaVarKind kind, const std::string& key, bool nn) {
        auto it = by_name_.find(key);
        if (it != by_name_.end()) return it->second;
        LiaVar v = static_cast<LiaVar>(infos_.size());
        infos_.push_back({kind, key, nn});
        by_name_[key] = v;
        return v;
    }

    std::vector<LiaVarInfo> infos_;
    std::map<std::string, LiaVar> by_name_;
};

/// Sum of coefficient * variable plus a constant.
struct LinExpr {
    std::map<LiaVar, int64_t> coeff;
    int64_t constant = 0;

    static LinExpr of(LiaVar v, int64_t c = 1) {
        LinExpr e;
        e.coeff[v] = c;
        return e;
    }
    static LinExpr lit(int64_t c) {
        LinExpr e;
        e.constant = c;
        return e;
    }

    LinExpr& add(const LinExpr& o, int64_t scale = 1) {
        for (auto& [v, c] : o.coeff) {
            coeff[v] += c * scale;
            if (coeff[v] == 0) coeff.erase(v);
        }
        constant += o.constant * scale;
        return *this;
    }

    bool operator==(const LinExpr&) const = default;
};

enum class LiaCmp { Eq, Ne, Le, Lt, Ge, Gt };

/// Formula tree. Atoms compare a linear expression against zero.
struct LiaFormula {
    enum class Kind { True, False, Atom, And, Or, Not };

    Kind kind = Kind::True;
    LinExpr expr;  // Atom: expr cmp 0
    LiaCmp cmp = LiaCmp::Eq;
    std::vector<LiaFormula> children;

    static LiaFormula top() { return {}; }
    static LiaFormula bottom() {
        LiaFormula f;
        f.kind = Kind::False;
        return f;
    }
    static LiaFormula atom(LinExpr e, LiaCmp c) {
        LiaFormula f;
        f.kind = Kind::Atom;
        f.expr = std::move(e);
        f.cmp = c;
        return f;
    }
    /// lhs cmp rhs
    static LiaFormula compare(const LinExpr& lhs, LiaCmp c, const LinExpr& rhs) {
        LinExpr e = lhs;
        e.add(rhs, -1);
        return atom(std::move(e), c);
    }
    static LiaFormula conj(std::vector<LiaFormula> cs) {
        LiaFormula f;
        f.kind = Kind::And;
        f.children = std::move(cs);
        return f;
    }
    static LiaFormula disj(std::vector<LiaFormula> cs) {
        LiaFormula f;
        f.kind = Kind::Or;
        f.children = std::move(cs);
        return f;
    }
    static LiaFormula negate(LiaFormula f) {
        LiaFormula g;
        g.kind = Kind::Not;
        g.children.push_back(std::move(f));
        return g;
    }

    void collect_vars(std::vector<bool>& used) const {
        for (auto& [v, c] : expr.coeff) {
            if (used.size() <= v) used.resize(v + 1, false);
            used[v] = true;
        }
        for (const auto& c : children) c.collect_vars(used);
    }
};

inline LiaCmp negate_cmp(LiaCmp c) {
    switch (c) {
        case LiaCmp::Eq: return LiaCmp::Ne;
        case LiaCmp::Ne: return LiaCmp::Eq;
        case LiaCmp::Le: return LiaCmp::Gt;
        case LiaCmp::Lt: return LiaCmp::Ge;
        case LiaCmp::Ge: return LiaCmp::Lt;
        case LiaCmp::Gt: return LiaCmp::Le;
    }
    return LiaCmp::Eq;
}

/// Negation normal form; Not nodes are pushed onto atoms.
inline LiaFormula nnf(const LiaFormula& f, bool neg = false) {
    using K = LiaFormula::Kind;
    switch (f.kind) {
        case K::True: return neg ? LiaFormula::bottom() : LiaFormula::top();
        case K::False: return neg ? LiaFormula::top() : LiaFormula::bottom();
        case K::Atom: return LiaFormula::atom(f.expr, neg ? negate_cmp(f.cmp) : f.cmp);
        case K::Not: return nnf(f.children[0], !neg);
        case K::And:
        case K::Or: {
            std::vector<LiaFormula> cs;
            cs.reserve(f.children.size());
            for (const auto& c : f.children) cs.push_back(nnf(c, neg));
            bool is_and = (f.kind == K::And) != neg;
            return is_and ? LiaFormula::conj(std::move(cs)) : LiaFormula::disj(std::move(cs));
        }
    }
    return LiaFormula::top();
}

using LiaModel = std::map<LiaVar, int64_t>;

/// Direct evaluation under a total model; missing variables count as 0.
inline bool eval_lia(const LiaFormula& f, const LiaModel& model) {
    using K = LiaFormula::Kind;
    switch (f.kind) {
        case K::True: return true;
        case K::False: return false;
        case K::Not: return !eval_lia(f.children[0], model);
        case K::And:
            for (const auto& c : f.children)
                if (!eval_lia(c, model)) return false;
            return true;
        case K::Or:
            for (const auto& c : f.children)
                if (eval_lia(c, model)) return true;
            return false;
        case K::Atom: {
            int64_t v = f.expr.constant;
            for (auto& [var, c] : f.expr.coeff) {
                auto it = model.find(var);
                v += c * (it == model.end() ? 0 : it->second);
            }
            switch (f.cmp) {
                case LiaCmp::Eq: return v == 0;
                case LiaCmp::Ne: return v != 0;
                case LiaCmp::Le: return v <= 0;
                case LiaCmp::Lt: return v < 0;
                case LiaCmp::Ge: return v >= 0;
                case LiaCmp::Gt: return v > 0;
            }
        }
    }
    return false;
}

enum class LiaStatus { Sat, Unsat, Unknown };

struct LiaResult {
    LiaStatus status = LiaStatus::Unknown;
    LiaModel model;
    std::string diagnostics;
};

// ---------------------------------------------------------------------------
// Built-in solver
// ---------------------------------------------------------------------------

namespace lia_detail {

struct Overflow : std::runtime_error {
    Overflow() : std::runtime_error("lia: rational overflow") {}
};

/// Exact rational with overflow detection.
struct Rat {
    int64_t num = 0;
    int64_t den = 1;

    Rat() = default;
    Rat(int64_t n) : num(n) {}
    Rat(int64_t n, int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw Overflow();
        if (den < 0) {
            num = -num;
            den = -den;
        }
        int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    static int64_t clamp(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN) throw Overflow();
        return static_cast<int64_t>(v);
    }

    friend Rat operator+(const Rat& a, const Rat& b) {
        __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return reduced(n, d);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        __int128 n = (__int128)a.num * b.den - (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return reduced(n, d);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return reduced((__int128)a.num * b.num, (__int128)a.den * b.den);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        if (b.num == 0) throw Overflow();
        return reduced((__int128)a.num * b.den, (__int128)a.den * b.num);
    }

    static Rat reduced(__int128 n, __int128 d) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n;
        __int128 g = gcd128(a, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        Rat r;
        r.num = clamp(n);
        r.den = clamp(d);
        if (r.den == 0) throw Overflow();
        return r;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    bool operator==(const Rat& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rat& o) const {
        return (__int128)num * o.den < (__int128)o.num * den;
    }
    bool operator<=(const Rat& o) const { return *this < o || *this == o; }
    bool operator>(const Rat& o) const { return o < *this; }
    bool operator>=(const Rat& o) const { return o <= *this; }

    bool is_int() const { return den == 1; }
    int64_t floor() const {
        if (num >= 0) return num / den;
        return -((-num + den - 1) / den);
    }
};

/// Bound-based general simplex for feasibility, in the style used by SMT
/// solvers: slack variables are defined by rows, original and slack
/// variables carry optional bounds, and pivoting repairs bound violations.
class Simplex {
  public:
    // returns feasible rational assignment or nullopt
    std::optional<std::vector<Rat>> solve(
        size_t num_vars, const std::vector<std::pair<std::map<uint32_t, int64_t>, int64_t>>& rows_in,
        const std::vector<std::optional<Rat>>& lower_in, const std::vector<std::optional<Rat>>& upper_in,
        // per row: 0 = equality (== rhs), -1 = (<= rhs)
        const std::vector<int>& row_kind, size_t pivot_budget) {
        n_orig_ = num_vars;
        size_t total = num_vars + rows_in.size();
        lower_.assign(total, std::nullopt);
        upper_.assign(total, std::nullopt);
        for (size_t v = 0; v < num_vars; ++v) {
            lower_[v] = lower_in[v];
            upper_[v] = upper_in[v];
        }
        beta_.assign(total, Rat(0));
        // clamp initial nonbasic values into bounds
        for (size_t v = 0; v < num_vars; ++v) {
            if (lower_[v] && beta_[v] < *lower_[v]) beta_[v] = *lower_[v];
            if (upper_[v] && beta_[v] > *upper_[v]) beta_[v] = *upper_[v];
        }

        rows_.clear();
        basic_.clear();
        is_basic_.assign(total, SIZE_MAX);
        for (size_t r = 0; r < rows_in.size(); ++r) {
            uint32_t slack = static_cast<uint32_t>(num_vars + r);
            std::map<uint32_t, Rat> row;
            for (auto& [v, c] : rows_in[r].first) row[v] = Rat(c);
            rows_.push_back(std::move(row));
            basic_.push_back(slack);
            is_basic_[slack] = r;
            Rat rhs(rows_in[r].second);
            if (row_kind[r] == 0) {
                lower_[slack] = rhs;
                upper_[slack] = rhs;
            } else {
                upper_[slack] = rhs;
            }
        }
        recompute_basics();

        for (size_t step = 0; step < pivot_budget; ++step) {
            // Bland's rule: violating basic variable with the smallest index
            size_t bad_row = SIZE_MAX;
            bool need_increase = false;
            uint32_t best = UINT32_MAX;
            for (size_t r = 0; r < rows_.size(); ++r) {
                uint32_t b = basic_[r];
                if (b >= best) continue;
                if (lower_[b] && beta_[b] < *lower_[b]) {
                    bad_row = r;
                    need_increase = true;
                    best = b;
                } else if (upper_[b] && beta_[b] > *upper_[b]) {
                    bad_row = r;
                    need_increase = false;
                    best = b;
                }
            }
            if (bad_row == SIZE_MAX) {
                std::vector<Rat> out(beta_.begin(), beta_.begin() + n_orig_);
                return out;
            }
            if (!pivot_fix(bad_row, need_increase)) return std::nullopt;
        }
        throw Overflow();  // treated as resource exhaustion by the caller
    }

  private:
    void recompute_basics() {
        for (size_t r = 0; r < rows_.size(); ++r) {
            Rat v(0);
            for (auto& [x, c] : rows_[r])
                if (is_basic_[x] == SIZE_MAX) v = v + c * beta_[x];
            beta_[basic_[r]] = v;
        }
    }

    bool pivot_fix(size_t r, bool increase) {
        uint32_t b = basic_[r];
        Rat target = increase ? *lower_[b] : *upper_[b];
        // choose nonbasic var by Bland's rule that can move beta_[b] toward target
        uint32_t chosen = UINT32_MAX;
        for (auto& [x, c] : rows_[r]) {
            if (is_basic_[x] != SIZE_MAX || c.num == 0) continue;
            bool can;
            if (increase) {
                can = (c.num > 0 && (!upper_[x] || beta_[x] < *upper_[x])) ||
                      (c.num < 0 && (!lower_[x] || beta_[x] > *lower_[x]));
            } else {
                can = (c.num > 0 && (!lower_[x] || beta_[x] > *lower_[x])) ||
                      (c.num < 0 && (!upper_[x] || beta_[x] < *upper_[x]));
            }
            if (can && x < chosen) chosen = x;
        }
        if (chosen == UINT32_MAX) return false;

        // pivot: make chosen basic in row r, set the old basic to its bound
        Rat c_xj = rows_[r][chosen];
        Rat delta = (target - beta_[b]) / c_xj;
        // update beta: chosen moves by delta, basics follow
        beta_[chosen] = beta_[chosen] + delta;
        beta_[b] = target;
        for (size_t rr = 0; rr < rows_.size(); ++rr) {
            if (rr == r) continue;
            auto it = rows_[rr].find(chosen);
            if (it != rows_[rr].end()) beta_[basic_[rr]] = beta_[basic_[rr]] + it->second * delta;
        }

        // rewrite row r: b = sum -> chosen = (b - rest)/c
        std::map<uint32_t, Rat> new_row;
        new_row[b] = Rat(1) / c_xj;
        for (auto& [x, c] : rows_[r]) {
            if (x == chosen) continue;
            Rat nc = Rat(0) - c / c_xj;
            if (nc.num != 0) new_row[x] = nc;
        }
        // substitute into other rows
        for (size_t rr = 0; rr < rows_.size(); ++rr) {
            if (rr == r) continue;
            auto it = rows_[rr].find(chosen);
            if (it == rows_[rr].end()) continue;
            Rat c = it->second;
            rows_[rr].erase(it);
            for (auto& [x, cc] : new_row) {
                Rat merged = (rows_[rr].count(x) ? rows_[rr][x] : Rat(0)) + c * cc;
                if (merged.num == 0)
                    rows_[rr].erase(x);
                else
                    rows_[rr][x] = merged;
            }
        }
        rows_[r] = std::move(new_row);
        is_basic_[b] = SIZE_MAX;
        is_basic_[chosen] = r;
        basic_[r] = chosen;
        return true;
    }

    size_t n_orig_ = 0;
    std::vector<std::map<uint32_t, Rat>> rows_;
    std::vector<uint32_t> basic_;
    std::vector<size_t> is_basic_;
    std::vector<std::optional<Rat>> lower_, upper_;
    std::vector<Rat> beta_;
};

struct NormAtom {
    std::map<uint32_t, int64_t> coeff;
    int64_t rhs;
    bool equality;
};

/// Integer feasibility of a conjunction of normalized atoms over a compact
/// variable space, by LP relaxation plus branch and bound.
class BranchAndBound {
  public:
    BranchAndBound(size_t num_vars, std::vector<std::optional<Rat>> lower, size_t node_budget)
        : num_vars_(num_vars), lower0_(std::move(lower)), budget_(node_budget) {}

    std::optional<std::vector<int64_t>> run(const std::vector<NormAtom>& atoms) {
        rows_.clear();
        kinds_.clear();
        for (const auto& a : atoms) {
            if (a.coeff.empty()) {
                if (a.equality ? (a.rhs != 0) : (0 > a.rhs)) return std::nullopt;
                continue;
            }
            rows_.push_back({a.coeff, a.rhs});
            kinds_.push_back(a.equality ? 0 : -1);
            if (a.equality) {
                // quick gcd infeasibility check
                int64_t g = 0;
                for (auto& [v, c] : a.coeff) g = std::gcd(g, c < 0 ? -c : c);
                if (g > 1 && a.rhs % g != 0) return std::nullopt;
            }
        }
        std::vector<std::optional<Rat>> lo = lower0_, hi(num_vars_, std::nullopt);
        return branch(lo, hi);
    }

  private:
    std::optional<std::vector<int64_t>> branch(std::vector<std::optional<Rat>>& lo,
                                               std::vector<std::optional<Rat>>& hi) {
        if (nodes_++ > budget_) throw Overflow();
        Simplex s;
        auto sol = s.solve(num_vars_, rows_, lo, hi, kinds_, 20000);
        if (!sol) return std::nullopt;
        size_t frac = SIZE_MAX;
        for (size_t v = 0; v < num_vars_; ++v) {
            if (!(*sol)[v].is_int()) {
                frac = v;
                break;
            }
        }
        if (frac == SIZE_MAX) {
            std::vector<int64_t> out(num_vars_);
            for (size_t v = 0; v < num_vars_; ++v) out[v] = (*sol)[v].num;
            return out;
        }
        int64_t fl = (*sol)[frac].floor();
        {
            auto saved = hi[frac];
            Rat bound(fl);
            hi[frac] = (saved && *saved < bound) ? saved : std::optional<Rat>(bound);
            auto r = branch(lo, hi);
            hi[frac] = saved;
            if (r) return r;
        }
        {
            auto saved = lo[frac];
            Rat bound(fl + 1);
            lo[frac] = (saved && *saved > bound) ? saved : std::optional<Rat>(bound);
            auto r = branch(lo, hi);
            lo[frac] = saved;
            if (r) return r;
        }
        return std::nullopt;
    }

    size_t num_vars_;
    std::vector<std::optional<Rat>> lower0_;
    size_t budget_;
    size_t nodes_ = 0;
    std::vector<std::pair<std::map<uint32_t, int64_t>, int64_t>> rows_;
    std::vector<int> kinds_;
};

}  // namespace lia_detail

struct LiaSolveOptions {
    size_t node_budget = 50000;
};

/// Decide the existential LIA formula with the built-in solver. Complete on
/// the generated fragment up to the node budget.
inline LiaResult lia_solve_builtin(const LiaFormula& formula, const LiaVarPool& pool,
                                   const LiaSolveOptions& opts = {}) {
    using K = LiaFormula::Kind;
    LiaFormula f = nnf(formula);

    // compact the variable space
    std::vector<bool> used;
    f.collect_vars(used);
    std::vector<LiaVar> vars;
    std::map<LiaVar, uint32_t> index;
    for (LiaVar v = 0; v < used.size(); ++v) {
        if (used[v]) {
            index[v] = static_cast<uint32_t>(vars.size());
            vars.push_back(v);
        }
    }
    std::vector<std::optional<lia_detail::Rat>> lower(vars.size(), std::nullopt);
    for (size_t i = 0; i < vars.size(); ++i)
        if (pool.info(vars[i]).non_negative) lower[i] = lia_detail::Rat(0);

    // depth-first case split over disjunctions, collecting atom conjunctions;
    // branch state is passed by value at choice points (formulas are small)
    std::optional<std::vector<int64_t>> found;
    bool exhausted_budget = false;

    auto norm = [&](const LinExpr& e, bool negate_expr, int64_t rhs_shift) {
        lia_detail::NormAtom a;
        for (auto& [v, c] : e.coeff) a.coeff[index[v]] = negate_expr ? -c : c;
        a.rhs = (negate_expr ? e.constant : -e.constant) + rhs_shift;
        a.equality = false;
        return a;
    };

    std::function<bool(std::vector<const LiaFormula*>, std::vector<lia_detail::NormAtom>)> explore =
        [&](std::vector<const LiaFormula*> agenda, std::vector<lia_detail::NormAtom> conj) -> bool {
        while (!agenda.empty()) {
            const LiaFormula* node = agenda.back();
            agenda.pop_back();
            switch (node->kind) {
                case K::True:
                    break;
                case K::False:
                    return false;
                case K::And:
                    for (size_t i = node->children.size(); i > 0; --i)
                        agenda.push_back(&node->children[i - 1]);
                    break;
                case K::Or: {
                    for (const auto& child : node->children) {
                        auto branch = agenda;
                        branch.push_back(&child);
                        if (explore(std::move(branch), conj)) return true;
                    }
                    return false;
                }
                case K::Not:
                    throw std::logic_error("nnf left a Not node");
                case K::Atom: {
                    switch (node->cmp) {
                        case LiaCmp::Le: conj.push_back(norm(node->expr, false, 0)); break;
                        case LiaCmp::Lt: conj.push_back(norm(node->expr, false, -1)); break;
                        case LiaCmp::Ge: conj.push_back(norm(node->expr, true, 0)); break;
                        case LiaCmp::Gt: conj.push_back(norm(node->expr, true, -1)); break;
                        case LiaCmp::Eq: {
                            auto a = norm(node->expr, false, 0);
                            a.equality = true;
                            conj.push_back(a);
                            break;
                        }
                        case LiaCmp::Ne: {
                            for (int side = 0; side < 2; ++side) {
                                auto branch_conj = conj;
                                branch_conj.push_back(norm(node->expr, side == 1, -1));
                                if (explore(agenda, branch_conj)) return true;
                            }
                            return false;
                        }
                    }
                    break;
                }
            }
        }
        lia_detail::BranchAndBound bb(vars.size(), lower, opts.node_budget);
        try {
            auto r = bb.run(conj);
            if (r) {
                found = r;
                return true;
            }
        } catch (const lia_detail::Overflow&) {
            exhausted_budget = true;
        }
        return false;
    };

    bool sat = explore({&f}, {});

    LiaResult out;
    if (sat) {
        out.status = LiaStatus::Sat;
        for (size_t i = 0; i < vars.size(); ++i) out.model[vars[i]] = (*found)[i];
    } else if (exhausted_budget) {
        out.status = LiaStatus::Unknown;
        out.diagnostics = "builtin lia: node budget exhausted";
    } else {
        out.status = LiaStatus::Unsat;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SMT-LIB2 emission and the external backend
// ---------------------------------------------------------------------------

namespace lia_detail {

inline std::string smt_name(const LiaVarInfo& info) {
    bool simple = !info.name.empty();
    for (char c : info.name)
        if (!(isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            simple = false;
    if (simple) return info.name;
    return "|" + info.name + "|";
}

inline void emit_expr(std::ostringstream& os, const LinExpr& e, const LiaVarPool& pool) {
    std::vector<std::string> parts;
    for (auto& [v, c] : e.coeff) {
        std::string name = smt_name(pool.info(v));
        if (c == 1)
            parts.push_back(name);
        else if (c >= 0)
            parts.push_back("(* " + std::to_string(c) + " " + name + ")");
        else
            parts.push_back("(* (- " + std::to_string(-c) + ") " + name + ")");
    }
    if (e.constant != 0 || parts.empty()) {
        parts.push_back(e.constant >= 0 ? std::to_string(e.constant)
                                        : "(- " + std::to_string(-e.constant) + ")");
    }
    if (parts.size() == 1) {
        os << parts[0];
    } else {
        os << "(+";
        for (const auto& p : parts) os << ' ' << p;
        os << ')';
    }
}

inline void emit_formula(std::ostringstream& os, const LiaFormula& f, const LiaVarPool& pool) {
    using K = LiaFormula::Kind;
    switch (f.kind) {
        case K::True: os << "true"; return;
        case K::False: os << "false"; return;
        case K::Not:
            os << "(not ";
            emit_formula(os, f.children[0], pool);
            os << ')';
            return;
        case K::And:
        case K::Or: {
            if (f.children.empty()) {
                os << (f.kind == K::And ? "true" : "false");
                return;
            }
            os << (f.kind == K::And ? "(and" : "(or");
            for (const auto& c : f.children) {
                os << ' ';
                emit_formula(os, c, pool);
            }
            os << ')';
            return;
        }
        case K::Atom: {
            const char* op = nullptr;
            bool wrap_not = false;
            switch (f.cmp) {
                case LiaCmp::Eq: op = "="; break;
                case LiaCmp::Ne: op = "="; wrap_not = true; break;
                case LiaCmp::Le: op = "<="; break;
                case LiaCmp::Lt: op = "<"; break;
                case LiaCmp::Ge: op = ">="; break;
                case LiaCmp::Gt: op = ">"; break;
            }
            if (wrap_not) os << "(not ";
            os << '(' << op << ' ';
            emit_expr(os, f.expr, pool);
            os << " 0)";
            if (wrap_not) os << ')';
            return;
        }
    }
}

}  // namespace lia_detail

/// Emit the query in the fixed SMT-LIB2 LIA text contract:
/// set-logic, integer declarations, a single assert, check-sat, get-value
/// over the free (non-counter) variables.
inline std::string to_smtlib2(const LiaFormula& formula, const LiaVarPool& pool) {
    std::vector<bool> used;
    formula.collect_vars(used);

    std::ostringstream os;
    os << "(set-logic LIA)\n";
    LiaFormula full = formula;
    std::vector<LiaFormula> side;
    for (LiaVar v = 0; v < used.size(); ++v) {
        if (!used[v]) continue;
        os << "(declare-fun " << lia_detail::smt_name(pool.info(v)) << " () Int)\n";
        if (pool.info(v).non_negative)
            side.push_back(LiaFormula::atom(LinExpr::of(v, -1), LiaCmp::Le));  // -v <= 0
    }
    if (!side.empty()) {
        side.insert(side.begin(), std::move(full));
        full = LiaFormula::conj(std::move(side));
    }
    os << "(assert ";
    lia_detail::emit_formula(os, full, pool);
    os << ")\n(check-sat)\n";
    std::vector<std::string> free_vars;
    for (LiaVar v = 0; v < used.size(); ++v)
        if (used[v] && pool.info(v).kind != LiaVarKind::Counter)
            free_vars.push_back(lia_detail::smt_name(pool.info(v)));
    if (!free_vars.empty()) {
        os << "(get-value (";
        for (size_t i = 0; i < free_vars.size(); ++i) {
            if (i) os << ' ';
            os << free_vars[i];
        }
        os << "))\n";
    }
    return os.str();
}

/// Run an external SMT-LIB2 LIA solver process on the emitted query.
inline LiaResult lia_solve_external(const LiaFormula& formula, const LiaVarPool& pool,
                                    const std::string& command) {
    LiaResult out;
    std::string text = to_smtlib2(formula, pool);
    char tmpl[] = "/tmp/strand_lia_XXXXXX";
    int fd = mkstemp(tmpl);
    if (fd < 0) {
        out.diagnostics = "external lia: cannot create temp file";
        return out;
    }
    {
        FILE* f = fdopen(fd, "w");
        fwrite(text.data(), 1, text.size(), f);
        fclose(f);
    }
    std::string cmd = command + " " + tmpl + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        out.diagnostics = "external lia: cannot spawn '" + command + "'";
        std::remove(tmpl);
        return out;
    }
    std::string reply;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) reply.append(buf, n);
    pclose(pipe);
    std::remove(tmpl);

    std::istringstream is(reply);
    std::string verdict;
    std::getline(is, verdict);
    if (verdict == "unsat") {
        out.status = LiaStatus::Unsat;
        return out;
    }
    if (verdict != "sat") {
        out.diagnostics = "external lia: unexpected reply: " + reply;
        return out;
    }
    out.status = LiaStatus::Sat;

    // parse ((name value) ...) pairs from the rest of the reply
    std::string rest((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::map<std::string, LiaVar> by_name;
    std::vector<bool> used;
    formula.collect_vars(used);
    for (LiaVar v = 0; v < used.size(); ++v)
        if (used[v]) by_name[lia_detail::smt_name(pool.info(v))] = v;

    size_t pos = 0;
    auto skip_ws = [&]() {
        while (pos < rest.size() && isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
    };
    while (pos < rest.size()) {
        skip_ws();
        if (pos >= rest.size() || rest[pos] != '(') {
            ++pos;
            continue;
        }
        ++pos;
        skip_ws();
        if (pos < rest.size() && rest[pos] == '(') continue;  // outer list
        size_t start = pos;
        while (pos < rest.size() && !isspace(static_cast<unsigned char>(rest[pos])) &&
               rest[pos] != ')')
            ++pos;
        std::string name = rest.substr(start, pos - start);
        skip_ws();
        bool neg = false;
        if (pos < rest.size() && rest[pos] == '(') {  // (- 5)
            ++pos;
            skip_ws();
            if (pos < rest.size() && rest[pos] == '-') {
                neg = true;
                ++pos;
                skip_ws();
            }
        }
        start = pos;
        while (pos < rest.size() && (isdigit(static_cast<unsigned char>(rest[pos])))) ++pos;
        if (start != pos) {
            int64_t val = std::stoll(rest.substr(start, pos - start));
            auto it = by_name.find(name);
            if (it != by_name.end()) out.model[it->second] = neg ? -val : val;
        }
        while (pos < rest.size() && rest[pos] != '(') ++pos;
    }
    return out;
}

}  // namespace strand

#endif
