// constraint.hpp -- the constraint model: variables, atoms, cubes, language
// assignments, literal desugaring, regular-constraint normalization and
// negation elimination into positive cubes.

#ifndef STRAND_CONSTRAINT_HPP
#define STRAND_CONSTRAINT_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "strand/lia.hpp"
#include "strand/nfa.hpp"
#include "strand/transducer.hpp"

namespace strand {

using VarId = uint32_t;

/// String variables: user-declared or fresh (with a reason tag). Fresh names
/// start with '%' and therefore never collide with user names.
class VarPool {
  public:
    VarId user(const std::string& name) {
        if (!name.empty() && name[0] == '%') throw std::invalid_argument("reserved variable name");
        auto it = by_name_.find(name);
        if (it != by_name_.end()) return it->second;
        VarId v = static_cast<VarId>(names_.size());
        names_.push_back(name);
        by_name_[name] = v;
        return v;
    }

    VarId fresh(const std::string& reason) {
        VarId v = static_cast<VarId>(names_.size());
        names_.push_back("%" + reason + std::to_string(fresh_count_++));
        by_name_[names_.back()] = v;
        return v;
    }

    const std::string& name(VarId v) const { return names_.at(v); }
    bool is_fresh(VarId v) const { return names_.at(v)[0] == '%'; }
    size_t size() const { return names_.size(); }

    std::optional<VarId> find(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

  private:
    std::vector<std::string> names_;
    std::map<std::string, VarId> by_name_;
    uint32_t fresh_count_ = 0;
};

using Term = std::vector<VarId>;

inline std::string term_to_string(const Term& t, const VarPool& pool) {
    std::string out;
    for (size_t i = 0; i < t.size(); ++i) {
        if (i) out += ' ';
        out += pool.name(t[i]);
    }
    if (t.empty()) out = "()";
    return out;
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

/// Oriented equation: lhs is the input term, rhs the output term.
struct Equation {
    Term lhs, rhs;
    auto operator<=>(const Equation&) const = default;
};

/// Oriented transducer constraint T(in, out).
struct TransConstraint {
    std::shared_ptr<const Transducer> t;
    std::string name;  // display name for traces
    Term in, out;
    bool functional = false;

    bool operator==(const TransConstraint& o) const {
        return t == o.t && in == o.in && out == o.out;
    }
    auto operator<=>(const TransConstraint& o) const {
        if (auto c = t.get() <=> o.t.get(); c != 0) return c;
        if (auto c = in <=> o.in; c != 0) return c;
        return out <=> o.out;
    }
};

struct RegAtom {
    VarId var;
    std::shared_ptr<const Nfa> lang;
};

/// A linear-integer comparison over |x| variables and integer variables.
struct LengthAtom {
    LiaFormula formula;
};

/// to_code(a) = / != to_code(b) for single-character variables.
struct CodeAtom {
    VarId a, b;
    bool distinct;
};

using AtomVariant = std::variant<Equation, TransConstraint, RegAtom, LengthAtom, CodeAtom>;

struct Literal {
    AtomVariant atom;
    bool positive = true;
};

/// Equations and transducer constraints, the nodes of the inclusion graph.
using Constraint = std::variant<Equation, TransConstraint>;

inline const Term& input_term(const Constraint& c) {
    if (auto* e = std::get_if<Equation>(&c)) return e->lhs;
    return std::get<TransConstraint>(c).in;
}
inline const Term& output_term(const Constraint& c) {
    if (auto* e = std::get_if<Equation>(&c)) return e->rhs;
    return std::get<TransConstraint>(c).out;
}

inline std::string constraint_to_string(const Constraint& c, const VarPool& pool) {
    if (auto* e = std::get_if<Equation>(&c))
        return "{" + term_to_string(e->lhs, pool) + " = " + term_to_string(e->rhs, pool) + "}";
    const auto& tc = std::get<TransConstraint>(c);
    return tc.name + "(" + term_to_string(tc.in, pool) + " -> " + term_to_string(tc.out, pool) + ")";
}

// ---------------------------------------------------------------------------
// Language assignments
// ---------------------------------------------------------------------------

using NfaPtr = std::shared_ptr<const Nfa>;
using LangMap = std::map<VarId, NfaPtr>;

inline NfaPtr make_lang(Nfa a) { return std::make_shared<const Nfa>(std::move(a)); }

/// Language of a term: concatenation of the component languages.
inline Nfa term_language(const LangMap& lang, const Term& t) {
    Nfa out = nfa_epsilon();
    for (VarId v : t) out = concat(out, *lang.at(v));
    return trim(out);
}

/// Term language with delimiters between components.
inline Nfa term_language_delimited(const LangMap& lang, const Term& t, Symbol delim) {
    if (t.empty()) return nfa_epsilon();
    Nfa out = *lang.at(t[0]);
    for (size_t i = 1; i < t.size(); ++i) out = delim_concat(out, delim, *lang.at(t[i]));
    return out;
}

// ---------------------------------------------------------------------------
// Sugared atoms: frontends build terms mixing variables and literal words;
// desugaring replaces every literal by a fresh variable with a singleton
// regular constraint.
// ---------------------------------------------------------------------------

struct SugaredElem {
    bool is_literal = false;
    VarId var = 0;
    Word lit;

    static SugaredElem of_var(VarId v) { return {false, v, {}}; }
    static SugaredElem of_lit(Word w) { return {true, 0, std::move(w)}; }
};

using SugaredTerm = std::vector<SugaredElem>;

struct SugaredEquation {
    SugaredTerm lhs, rhs;
};
struct SugaredTrans {
    std::shared_ptr<const Transducer> t;
    std::string name;
    SugaredTerm in, out;
    bool functional = false;
};

using SugaredAtom = std::variant<SugaredEquation, SugaredTrans, RegAtom, LengthAtom, CodeAtom>;

struct SugaredLiteral {
    SugaredAtom atom;
    bool positive = true;
};

using SugaredCube = std::vector<SugaredLiteral>;
using InputCube = std::vector<Literal>;

/// Replace literal words by fresh variables with singleton languages.
inline InputCube desugar_literals(const SugaredCube& cube, VarPool& pool) {
    InputCube out;
    auto desugar_term = [&](const SugaredTerm& st, InputCube& sink) {
        Term t;
        for (const auto& e : st) {
            if (!e.is_literal) {
                t.push_back(e.var);
                continue;
            }
            VarId v = pool.fresh("lit");
            sink.push_back({RegAtom{v, make_lang(nfa_word(e.lit))}, true});
            t.push_back(v);
        }
        return t;
    };
    for (const auto& lit : cube) {
        if (auto* eq = std::get_if<SugaredEquation>(&lit.atom)) {
            Equation e{desugar_term(eq->lhs, out), desugar_term(eq->rhs, out)};
            out.push_back({std::move(e), lit.positive});
        } else if (auto* tc = std::get_if<SugaredTrans>(&lit.atom)) {
            TransConstraint c{tc->t, tc->name, desugar_term(tc->in, out), desugar_term(tc->out, out),
                              tc->functional};
            out.push_back({std::move(c), lit.positive});
        } else if (auto* r = std::get_if<RegAtom>(&lit.atom)) {
            out.push_back({*r, lit.positive});
        } else if (auto* l = std::get_if<LengthAtom>(&lit.atom)) {
            out.push_back({*l, lit.positive});
        } else {
            out.push_back({std::get<CodeAtom>(lit.atom), lit.positive});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Negation elimination
// ---------------------------------------------------------------------------

struct NegatedNonFunctionalTransducer : std::runtime_error {
    explicit NegatedNonFunctionalTransducer(const std::string& name)
        : std::runtime_error("negated transducer constraint '" + name + "' is not known functional") {}
};

namespace detail {

inline Nfa any_letter(const Alphabet& sigma) {
    Nfa a;
    State q = a.add_state(), r = a.add_state();
    a.make_initial(q);
    a.make_final(r);
    for (Symbol s : sigma.letters()) a.add_transition(q, s, r);
    return a;
}

inline LinExpr term_length_expr(const Term& t, const VarPool& pool, LiaVarPool& lia) {
    LinExpr e;
    for (VarId v : t) e.add(LinExpr::of(lia.length_of(pool.name(v))));
    return e;
}

/// The two-disjunct disequation shape: either the lengths differ, or the
/// sides split at the first differing character, compared via to_code.
inline std::vector<std::vector<Literal>> expand_disequation(const Term& lhs, const Term& rhs,
                                                            VarPool& pool, LiaVarPool& lia,
                                                            const Alphabet& sigma) {
    std::vector<std::vector<Literal>> out;
    {
        std::vector<Literal> len_branch;
        LinExpr dl = term_length_expr(lhs, pool, lia);
        dl.add(term_length_expr(rhs, pool, lia), -1);
        len_branch.push_back({LengthAtom{LiaFormula::atom(dl, LiaCmp::Ne)}, true});
        out.push_back(std::move(len_branch));
    }
    {
        std::vector<Literal> split;
        VarId x1 = pool.fresh("dq"), a1 = pool.fresh("dc"), x2 = pool.fresh("dq");
        VarId y1 = pool.fresh("dq"), a2 = pool.fresh("dc"), y2 = pool.fresh("dq");
        split.push_back({Equation{lhs, {x1, a1, x2}}, true});
        split.push_back({Equation{rhs, {y1, a2, y2}}, true});
        LinExpr d = LinExpr::of(lia.length_of(pool.name(x1)));
        d.add(LinExpr::of(lia.length_of(pool.name(y1))), -1);
        split.push_back({LengthAtom{LiaFormula::atom(d, LiaCmp::Eq)}, true});
        NfaPtr letters = make_lang(any_letter(sigma));
        split.push_back({RegAtom{a1, letters}, true});
        split.push_back({RegAtom{a2, letters}, true});
        split.push_back({CodeAtom{a1, a2, true}, true});
        out.push_back(std::move(split));
    }
    return out;
}

}  // namespace detail

/// Rewrite a cube with negated atoms into an equisatisfiable disjunction of
/// positive cubes. Negated transducer constraints must be marked functional.
inline std::vector<InputCube> eliminate_negation(const InputCube& cube, VarPool& pool,
                                                 LiaVarPool& lia, const Alphabet& sigma) {
    std::vector<InputCube> cubes{{}};

    auto append_everywhere = [&](const Literal& lit) {
        for (auto& c : cubes) c.push_back(lit);
    };
    auto branch_with = [&](const std::vector<std::vector<Literal>>& branches) {
        std::vector<InputCube> next;
        for (const auto& base : cubes) {
            for (const auto& br : branches) {
                InputCube c = base;
                c.insert(c.end(), br.begin(), br.end());
                next.push_back(std::move(c));
            }
        }
        cubes = std::move(next);
    };

    for (const auto& lit : cube) {
        if (lit.positive) {
            append_everywhere(lit);
            continue;
        }
        if (auto* r = std::get_if<RegAtom>(&lit.atom)) {
            append_everywhere({RegAtom{r->var, make_lang(complement(*r->lang, sigma))}, true});
        } else if (auto* l = std::get_if<LengthAtom>(&lit.atom)) {
            append_everywhere({LengthAtom{LiaFormula::negate(l->formula)}, true});
        } else if (auto* cd = std::get_if<CodeAtom>(&lit.atom)) {
            append_everywhere({CodeAtom{cd->a, cd->b, !cd->distinct}, true});
        } else if (auto* eq = std::get_if<Equation>(&lit.atom)) {
            branch_with(detail::expand_disequation(eq->lhs, eq->rhs, pool, lia, sigma));
        } else {
            const auto& tc = std::get<TransConstraint>(lit.atom);
            if (!tc.functional) throw NegatedNonFunctionalTransducer(tc.name);
            VarId z = pool.fresh("nt");
            append_everywhere({TransConstraint{tc.t, tc.name, tc.in, {z}, true}, true});
            branch_with(detail::expand_disequation({z}, tc.out, pool, lia, sigma));
        }
    }
    return cubes;
}

// ---------------------------------------------------------------------------
// Regular-constraint normalization
// ---------------------------------------------------------------------------

/// The positive cube handed to the decision procedure.
struct PositiveCube {
    std::vector<Constraint> eqtr;
    LangMap lang;  // exactly one language per variable in scope
    std::vector<LengthAtom> lengths;
    std::vector<CodeAtom> codes;
};

/// Intersect all membership constraints per variable; unconstrained
/// variables get Sigma*. The cube must already be positive.
inline PositiveCube normalize_regular(const InputCube& cube, VarPool& pool, const Alphabet& sigma) {
    PositiveCube out;
    std::map<VarId, Nfa> langs;
    std::vector<VarId> scope;

    auto touch = [&](VarId v) {
        if (!langs.count(v)) {
            langs.emplace(v, sigma_star(sigma));
            scope.push_back(v);
        }
    };

    for (const auto& lit : cube) {
        if (!lit.positive) throw std::logic_error("normalize_regular: cube is not positive");
        if (auto* eq = std::get_if<Equation>(&lit.atom)) {
            for (VarId v : eq->lhs) touch(v);
            for (VarId v : eq->rhs) touch(v);
            out.eqtr.push_back(*eq);
        } else if (auto* tc = std::get_if<TransConstraint>(&lit.atom)) {
            for (VarId v : tc->in) touch(v);
            for (VarId v : tc->out) touch(v);
            out.eqtr.push_back(*tc);
        } else if (auto* r = std::get_if<RegAtom>(&lit.atom)) {
            touch(r->var);
            langs.at(r->var) = intersect(langs.at(r->var), *r->lang);
        } else if (auto* l = std::get_if<LengthAtom>(&lit.atom)) {
            out.lengths.push_back(*l);
        } else {
            const auto& cd = std::get<CodeAtom>(lit.atom);
            touch(cd.a);
            touch(cd.b);
            out.codes.push_back(cd);
        }
    }
    // length atoms may mention variables that have no string constraint;
    // they still need a language entry
    (void)pool;
    for (auto& [v, a] : langs) out.lang[v] = make_lang(reduce(a));
    return out;
}

// ---------------------------------------------------------------------------
// to_code LIA encoding
// ---------------------------------------------------------------------------

/// LIA encoding of a code-point comparison: each side's code variable is
/// bound to the codepoint of some member of the variable's language
/// (a single-character language), tied to |a| = 1, and the comparison itself
/// becomes a pure LIA atom.
inline LiaFormula code_point_lia(const CodeAtom& atom, const LangMap& lang, const VarPool& pool,
                                 LiaVarPool& lia, const Alphabet& sigma) {
    auto bind = [&](VarId v) {
        LiaVar code = lia.code_of(pool.name(v));
        LiaVar len = lia.length_of(pool.name(v));
        std::vector<LiaFormula> options;
        const Nfa& l = *lang.at(v);
        for (Symbol c : sigma.letters()) {
            if (member(l, {c})) {
                options.push_back(LiaFormula::compare(LinExpr::of(code), LiaCmp::Eq,
                                                      LinExpr::lit(static_cast<int64_t>(c))));
            }
        }
        if (options.empty()) return LiaFormula::bottom();
        return LiaFormula::conj({LiaFormula::disj(std::move(options)),
                                 LiaFormula::compare(LinExpr::of(len), LiaCmp::Eq, LinExpr::lit(1))});
    };
    LinExpr diff = LinExpr::of(lia.code_of(pool.name(atom.a)));
    diff.add(LinExpr::of(lia.code_of(pool.name(atom.b))), -1);
    return LiaFormula::conj({bind(atom.a), bind(atom.b),
                             LiaFormula::atom(diff, atom.distinct ? LiaCmp::Ne : LiaCmp::Eq)});
}

// ---------------------------------------------------------------------------
// Direct semantic evaluation (used by model checking and the test oracles)
// ---------------------------------------------------------------------------

struct Assignment {
    std::map<VarId, Word> strings;
    std::map<std::string, int64_t> ints;
};

inline Word eval_term(const Term& t, const Assignment& nu) {
    Word w;
    for (VarId v : t) {
        const Word& piece = nu.strings.at(v);
        w.insert(w.end(), piece.begin(), piece.end());
    }
    return w;
}

/// Build the LIA model induced by an assignment (lengths, codes, ints).
inline LiaModel induced_lia_model(const Assignment& nu, const VarPool& pool, LiaVarPool& lia) {
    LiaModel m;
    for (const auto& [v, w] : nu.strings) {
        m[lia.length_of(pool.name(v))] = static_cast<int64_t>(w.size());
        if (w.size() == 1) m[lia.code_of(pool.name(v))] = static_cast<int64_t>(w[0]);
    }
    for (const auto& [name, val] : nu.ints) m[lia.int_var(name)] = val;
    return m;
}

inline bool eval_atom(const AtomVariant& atom, const Assignment& nu, const VarPool& pool,
                      LiaVarPool& lia) {
    if (auto* eq = std::get_if<Equation>(&atom)) {
        return eval_term(eq->lhs, nu) == eval_term(eq->rhs, nu);
    }
    if (auto* tc = std::get_if<TransConstraint>(&atom)) {
        return accepts_tuple(*tc->t, {eval_term(tc->in, nu), eval_term(tc->out, nu)});
    }
    if (auto* r = std::get_if<RegAtom>(&atom)) {
        return member(*r->lang, nu.strings.at(r->var));
    }
    if (auto* l = std::get_if<LengthAtom>(&atom)) {
        return eval_lia(l->formula, induced_lia_model(nu, pool, lia));
    }
    const auto& cd = std::get<CodeAtom>(atom);
    const Word& a = nu.strings.at(cd.a);
    const Word& b = nu.strings.at(cd.b);
    if (a.size() != 1 || b.size() != 1) return false;
    return cd.distinct ? a[0] != b[0] : a[0] == b[0];
}

inline bool eval_cube(const InputCube& cube, const Assignment& nu, const VarPool& pool,
                      LiaVarPool& lia) {
    for (const auto& lit : cube) {
        if (eval_atom(lit.atom, nu, pool, lia) != lit.positive) return false;
    }
    return true;
}

}  // namespace strand

#endif
