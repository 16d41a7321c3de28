// solver.hpp -- the worklist decision procedure: rules RSubst, LSubst, Skip,
// RefineSt, CombNL, RefineCF and LenImage, plus the RedTrans / HomTrans /
// intersection-emptiness heuristics and model construction.

#ifndef STRAND_SOLVER_HPP
#define STRAND_SOLVER_HPP

#include <chrono>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "strand/constraint.hpp"
#include "strand/inclusion_graph.hpp"
#include "strand/length_image.hpp"
#include "strand/noodles.hpp"

namespace strand {

enum class Verdict { Sat, Unsat, Unknown };

struct SolverStats {
    uint64_t vertices_explored = 0;
    uint64_t rule_applications = 0;
    uint64_t conclusions = 0;
    uint64_t lia_queries = 0;
    uint64_t red_trans_fires = 0;
    uint64_t hom_trans_fires = 0;
    uint64_t hom_candidates_declined = 0;
    uint64_t intersection_runs = 0;
    uint64_t model_validation_failures = 0;
};

struct SolverConfig {
    bool hom_heuristic = true;
    bool intersect_heuristic = true;
    bool literal_reduction = true;
    int intersect_bound = 4;  // tape-length threshold of the intersection heuristic
    size_t dualize_budget = 4096;
    uint64_t max_steps = 100000;
    int64_t timeout_ms = -1;
    LiaBackendConfig lia;
    bool produce_model = false;
    uint64_t model_budget = 500000;
    std::ostream* trace = nullptr;
};

struct SolveResult {
    Verdict verdict = Verdict::Unknown;
    std::optional<Assignment> model;
    SolverStats stats;
    std::string reason;
};

/// A proof-tree vertex: constraints, the exploration frontier in topological
/// order, the language assignment, solved equations, length-aware variables.
struct ProofVertex {
    std::vector<Constraint> n;
    std::deque<Constraint> frontier;
    LangMap lang;
    std::vector<Equation> seq;
    std::set<VarId> lvar;
};

// ---------------------------------------------------------------------------
// Length propagation
// ---------------------------------------------------------------------------

inline std::set<VarId> len_fw(const std::vector<Constraint>& cs, std::set<VarId> lvar) {
    std::set<VarId> out = lvar;
    for (const auto& c : cs) {
        bool hit = false;
        for (VarId v : input_term(c))
            if (lvar.count(v)) hit = true;
        if (hit)
            for (VarId v : output_term(c)) out.insert(v);
    }
    return out;
}

inline std::set<VarId> len_bw(const std::vector<Constraint>& cs, std::set<VarId> lvar) {
    std::set<VarId> out = lvar;
    for (const auto& c : cs) {
        bool hit = false;
        for (VarId v : output_term(c))
            if (lvar.count(v)) hit = true;
        if (hit)
            for (VarId v : input_term(c)) out.insert(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Intersection-emptiness heuristic
// ---------------------------------------------------------------------------

struct EqualTapesResult {
    Verdict verdict = Verdict::Unknown;
    Word agreed;    // common content of the two equated tapes
    Word recorded;  // content of the recorded tape, when requested
};

/// Breadth-first exploration of a multi-tape machine tracking the pending
/// difference between two tapes. Prunes configurations whose tapes are not
/// prefix-compatible; reports Unknown when a pending difference would exceed
/// the bound; Sat on an accepting configuration with equal tapes.
inline EqualTapesResult search_equal_tapes(const Transducer& m, uint32_t tape_a, uint32_t tape_b,
                                           std::optional<uint32_t> record, size_t bound) {
    struct Conf {
        State q;
        bool a_ahead;
        Word pend;
        auto operator<=>(const Conf&) const = default;
    };
    struct Item {
        Conf conf;
        size_t parent;
        Word agreed_step;
        Word recorded_step;
    };
    EqualTapesResult out;
    Transducer t = normalize(m);
    if (t.num_states == 0) {
        out.verdict = Verdict::Unsat;
        return out;
    }
    auto fwd = detail::forward_index(t);
    std::vector<Item> items;
    std::set<Conf> seen;
    std::deque<size_t> work;
    for (State q : t.initial) {
        Conf c{q, true, {}};
        if (seen.insert(c).second) {
            items.push_back({c, SIZE_MAX, {}, {}});
            work.push_back(items.size() - 1);
        }
    }
    bool exceeded = false;
    while (!work.empty()) {
        size_t cur = work.front();
        work.pop_front();
        Conf c = items[cur].conf;
        if (t.is_final(c.q) && c.pend.empty()) {
            for (size_t i = cur; i != SIZE_MAX; i = items[i].parent) {
                out.agreed.insert(out.agreed.end(), items[i].agreed_step.rbegin(),
                                  items[i].agreed_step.rend());
                out.recorded.insert(out.recorded.end(), items[i].recorded_step.rbegin(),
                                    items[i].recorded_step.rend());
            }
            std::reverse(out.agreed.begin(), out.agreed.end());
            std::reverse(out.recorded.begin(), out.recorded.end());
            out.verdict = Verdict::Sat;
            return out;
        }
        for (size_t i : fwd[c.q]) {
            const auto& tr = t.transitions[i];
            if (label_is_delim(tr.label)) continue;
            // extend the two tracked tapes and cancel the common prefix
            Word wa, wb;
            if (c.a_ahead)
                wa = c.pend;
            else
                wb = c.pend;
            if (tr.label[tape_a - 1] != eps_symbol) wa.push_back(tr.label[tape_a - 1]);
            if (tr.label[tape_b - 1] != eps_symbol) wb.push_back(tr.label[tape_b - 1]);
            size_t k = 0;
            while (k < wa.size() && k < wb.size() && wa[k] == wb[k]) ++k;
            Word agreed(wa.begin(), wa.begin() + k);
            wa.erase(wa.begin(), wa.begin() + k);
            wb.erase(wb.begin(), wb.begin() + k);
            if (!wa.empty() && !wb.empty()) continue;  // divergence, prune
            Conf n{tr.dst, wb.empty(), wa.empty() ? wb : wa};
            if (n.pend.size() > bound) {
                exceeded = true;
                continue;
            }
            if (seen.insert(n).second) {
                Word rec;
                if (record && tr.label[*record - 1] != eps_symbol)
                    rec.push_back(tr.label[*record - 1]);
                items.push_back({n, cur, std::move(agreed), std::move(rec)});
                work.push_back(items.size() - 1);
            }
        }
    }
    out.verdict = exceeded ? Verdict::Unknown : Verdict::Unsat;
    return out;
}

// ---------------------------------------------------------------------------
// The decision engine
// ---------------------------------------------------------------------------

class Solver {
  public:
    Solver(PositiveCube cube, VarPool& vars, LiaVarPool& lia, const Alphabet& sigma,
           SolverConfig cfg)
        : cube_(std::move(cube)), vars_(vars), lia_(lia), sigma_(sigma), cfg_(std::move(cfg)) {
        original_ = cube_;
        deadline_ = cfg_.timeout_ms >= 0
                        ? std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg_.timeout_ms)
                        : std::chrono::steady_clock::time_point::max();
    }

    SolverStats& stats() { return stats_; }

    /// String variables mentioned by the length atoms.
    std::set<VarId> length_vars() const {
        std::set<VarId> out;
        std::vector<bool> used;
        for (const auto& l : cube_.lengths) l.formula.collect_vars(used);
        for (LiaVar v = 0; v < used.size(); ++v) {
            if (!used[v]) continue;
            const auto& info = lia_.info(v);
            if (info.kind != LiaVarKind::Length) continue;
            auto var = vars_.find(info.name.substr(4));  // strip "len!"
            if (var) out.insert(*var);
        }
        return out;
    }

    ProofVertex initial_vertex() {
        ProofVertex v;
        std::vector<Constraint> uniq;
        for (const auto& c : cube_.eqtr)
            if (std::find(uniq.begin(), uniq.end(), c) == uniq.end()) uniq.push_back(c);
        v.n = toposort_constraints(uniq);
        v.frontier.assign(v.n.begin(), v.n.end());
        v.lang = cube_.lang;
        v.lvar = length_vars();
        return v;
    }

    SolveResult run() {
        SolveResult res;
        // touch languages for all variables (length atoms may mention
        // variables without string constraints)
        for (VarId v : length_vars())
            if (!cube_.lang.count(v)) cube_.lang[v] = make_lang(sigma_star(sigma_));
        for (const auto& cd : cube_.codes) {
            if (!cube_.lang.count(cd.a)) cube_.lang[cd.a] = make_lang(sigma_star(sigma_));
            if (!cube_.lang.count(cd.b)) cube_.lang[cd.b] = make_lang(sigma_star(sigma_));
        }

        // trivially-true equations carry no content and would read as cycles
        std::erase_if(cube_.eqtr, [](const Constraint& c) { return trivial_equation(c); });

        if (!is_directly_chain_free(cube_.eqtr)) {
            auto dual = dualize_search(cube_.eqtr, cfg_.dualize_budget);
            if (dual) {
                cube_.eqtr = *dual;
            } else {
                return run_non_chain_free();
            }
        }

        std::vector<ProofVertex> worklist{initial_vertex()};
        bool unknown_seen = false;
        std::string unknown_reason;

        while (!worklist.empty()) {
            if (stats_.rule_applications >= cfg_.max_steps) {
                res.verdict = Verdict::Unknown;
                res.reason = "step limit reached";
                res.stats = stats_;
                return res;
            }
            if (std::chrono::steady_clock::now() > deadline_) {
                res.verdict = Verdict::Unknown;
                res.reason = "timeout";
                res.stats = stats_;
                return res;
            }
            ProofVertex v = std::move(worklist.back());
            worklist.pop_back();
            ++stats_.vertices_explored;

            if (v.frontier.empty()) {
                auto lia_res = try_len_image(v);
                if (lia_res.status == LiaStatus::Sat) {
                    res.verdict = Verdict::Sat;
                    if (cfg_.produce_model) res.model = build_model(v, lia_res.model);
                    res.stats = stats_;
                    return res;
                }
                if (lia_res.status == LiaStatus::Unknown) {
                    unknown_seen = true;
                    unknown_reason = lia_res.diagnostics;
                }
                continue;
            }

            auto conclusions = apply_first_rule(v);
            if (!conclusions) {
                unknown_seen = true;
                unknown_reason = "no applicable rule";
                continue;
            }
            // depth-first: first conclusion explored next
            for (size_t i = conclusions->size(); i > 0; --i)
                worklist.push_back(std::move((*conclusions)[i - 1]));
        }
        res.verdict = unknown_seen ? Verdict::Unknown : Verdict::Unsat;
        res.reason = unknown_reason;
        res.stats = stats_;
        return res;
    }

    // ----- individual rules (public so the suites can drive them directly)

    std::optional<std::vector<ProofVertex>> rule_rsubst(const ProofVertex& v) const {
        const auto* eq = head_equation(v);
        if (!eq || eq->rhs.size() != 1) return std::nullopt;
        VarId x = eq->rhs[0];
        if (eq->lhs == eq->rhs) return std::nullopt;
        for (VarId u : eq->lhs)
            if (u == x) return std::nullopt;
        if (v.lvar.count(x)) {
            for (VarId u : eq->lhs)
                if (!v.lvar.count(u)) return std::nullopt;
        }
        if (!includes(*v.lang.at(x), term_language(v.lang, eq->lhs))) return std::nullopt;

        ProofVertex out = pop_head(v);
        // H: constraints of N with x on the input, plus concatenation-free
        // transducer constraints with x as output and a length-aware input,
        // when the substitution breaks concatenation-freeness
        std::vector<Constraint> h;
        for (const auto& c : out.n) {
            bool in_input = false;
            for (VarId u : input_term(c))
                if (u == x) in_input = true;
            if (in_input) {
                h.push_back(c);
                continue;
            }
            if (eq->lhs.size() > 1) {
                if (auto* tc = std::get_if<TransConstraint>(&c)) {
                    if (tc->out == Term{x} && tc->in.size() == 1 && v.lvar.count(tc->in[0]))
                        h.push_back(c);
                }
            }
        }
        substitute_vertex(out, x, eq->lhs);
        out.seq.push_back(Equation{{x}, eq->lhs});
        push_reinserted(out, h, x, eq->lhs);
        return std::vector<ProofVertex>{std::move(out)};
    }

    std::optional<std::vector<ProofVertex>> rule_lsubst(const ProofVertex& v) const {
        const auto* eq = head_equation(v);
        if (!eq || eq->lhs.size() != 1) return std::nullopt;
        VarId x = eq->lhs[0];
        if (eq->lhs == eq->rhs) return std::nullopt;
        for (VarId u : eq->rhs)
            if (u == x) return std::nullopt;
        if (!v.lvar.count(x)) return std::nullopt;
        for (VarId u : eq->rhs)
            if (!v.lvar.count(u)) return std::nullopt;
        if (!includes(*v.lang.at(x), term_language(v.lang, eq->rhs))) return std::nullopt;

        ProofVertex out = pop_head(v);
        std::vector<Constraint> h;
        if (eq->rhs.size() > 1) {
            for (const auto& c : out.n) {
                if (auto* tc = std::get_if<TransConstraint>(&c)) {
                    if (tc->out == Term{x} && tc->in.size() == 1 && v.lvar.count(tc->in[0]))
                        h.push_back(c);
                }
            }
        }
        substitute_vertex(out, x, eq->rhs);
        out.seq.push_back(Equation{{x}, eq->rhs});
        push_reinserted(out, h, x, eq->rhs);
        return std::vector<ProofVertex>{std::move(out)};
    }

    std::optional<std::vector<ProofVertex>> rule_red_trans(const ProofVertex& v) {
        const auto* tc = head_transducer(v);
        if (!tc) return std::nullopt;
        Nfa in_lang = term_language(v.lang, tc->in);
        if (auto word = is_singleton(in_lang)) {
            ProofVertex out = pop_head(v);
            remove_from_n(out, v.frontier.front());
            VarId f = vars_.fresh("red");
            out.lang[f] = make_lang(reduce(image(*tc->t, in_lang)));
            Equation eq{{f}, tc->out};
            out.n.push_back(eq);
            out.frontier.push_front(eq);
            ++stats_.red_trans_fires;
            return std::vector<ProofVertex>{std::move(out)};
        }
        Nfa out_lang = term_language(v.lang, tc->out);
        if (auto word = is_singleton(out_lang)) {
            ProofVertex out = pop_head(v);
            remove_from_n(out, v.frontier.front());
            VarId f = vars_.fresh("red");
            out.lang[f] = make_lang(reduce(image(inverse(*tc->t), out_lang)));
            Equation eq{tc->in, {f}};
            out.n.push_back(eq);
            out.frontier.push_front(eq);
            ++stats_.red_trans_fires;
            return std::vector<ProofVertex>{std::move(out)};
        }
        return std::nullopt;
    }

    std::optional<std::vector<ProofVertex>> rule_hom_trans(const ProofVertex& v) {
        const auto* tc = head_transducer(v);
        if (!tc || tc->in.size() < 2) return std::nullopt;
        if (!is_homomorphism_syntactic(*tc->t)) {
            ++stats_.hom_candidates_declined;
            return std::nullopt;
        }
        ProofVertex out = pop_head(v);
        remove_from_n(out, v.frontier.front());
        VarId x1 = vars_.fresh("hom"), x2 = vars_.fresh("hom");
        out.lang[x1] = make_lang(sigma_star(sigma_));
        out.lang[x2] = make_lang(sigma_star(sigma_));
        TransConstraint t1{tc->t, tc->name, {tc->in[0]}, {x1}, tc->functional};
        TransConstraint t2{tc->t, tc->name, Term(tc->in.begin() + 1, tc->in.end()), {x2},
                           tc->functional};
        Equation cat{{x1, x2}, tc->out};
        out.n.push_back(t1);
        out.n.push_back(t2);
        out.n.push_back(cat);
        out.frontier.push_front(cat);
        out.frontier.push_front(t2);
        out.frontier.push_front(t1);
        ++stats_.hom_trans_fires;
        return std::vector<ProofVertex>{std::move(out)};
    }

    std::optional<std::vector<ProofVertex>> rule_skip(const ProofVertex& v) const {
        const Constraint& head = v.frontier.front();
        for (VarId u : input_term(head))
            if (v.lvar.count(u)) return std::nullopt;
        if (!head_stable(v)) return std::nullopt;
        return std::vector<ProofVertex>{pop_head(v)};
    }

    std::optional<std::vector<ProofVertex>> rule_refine_st(const ProofVertex& v) {
        const Constraint& head = v.frontier.front();
        for (VarId u : input_term(head))
            if (v.lvar.count(u)) return std::nullopt;
        std::vector<ProofVertex> out;
        if (const auto* eq = head_equation(v)) {
            for (auto& refined : eq_to_st(v.lang, *eq)) {
                ProofVertex c = pop_head(v);
                remove_from_n(c, head);
                c.lang = std::move(refined);
                out.push_back(std::move(c));
            }
        } else {
            const auto& tc = std::get<TransConstraint>(head);
            if (auto r = tr_to_st(v.lang, tc, vars_)) {
                ProofVertex c = pop_head(v);
                remove_from_n(c, head);
                c.lang = std::move(r->lang);
                for (const auto& t : r->tr) c.n.push_back(t);
                for (auto it = r->in.rbegin(); it != r->in.rend(); ++it) {
                    c.n.push_back(*it);
                    c.frontier.push_front(*it);
                }
                out.push_back(std::move(c));
            }
        }
        stats_.conclusions += out.size();
        return out;
    }

    std::optional<std::vector<ProofVertex>> rule_comb_nl(const ProofVertex& v) {
        const Constraint& head = v.frontier.front();
        const Term& s = input_term(head);
        // uniform(s, LVar): replace maximal blocks of >= 2 non-length vars
        Term s2;
        std::vector<Equation> blocks;
        LangMap fresh_langs;
        size_t i = 0;
        while (i < s.size()) {
            if (v.lvar.count(s[i])) {
                s2.push_back(s[i]);
                ++i;
                continue;
            }
            size_t j = i;
            while (j < s.size() && !v.lvar.count(s[j])) ++j;
            if (j - i >= 2) {
                VarId x = vars_.fresh("blk");
                Term block(s.begin() + i, s.begin() + j);
                blocks.push_back(Equation{block, {x}});
                fresh_langs[x] = make_lang(reduce(term_language(v.lang, block)));
                s2.push_back(x);
            } else {
                s2.push_back(s[i]);
            }
            i = j > i ? j : i + 1;
        }
        if (blocks.empty()) return std::nullopt;

        ProofVertex out = pop_head(v);
        remove_from_n(out, head);
        Constraint replaced = head;
        if (auto* eq = std::get_if<Equation>(&replaced))
            eq->lhs = s2;
        else
            std::get<TransConstraint>(replaced).in = s2;
        out.n.push_back(replaced);
        for (const auto& b : blocks) out.n.push_back(b);
        for (auto& [x, l] : fresh_langs) out.lang[x] = l;
        out.frontier.push_front(replaced);
        return std::vector<ProofVertex>{std::move(out)};
    }

    std::optional<std::vector<ProofVertex>> rule_refine_cf(const ProofVertex& v) {
        const Constraint& head = v.frontier.front();
        std::vector<NoodleResult> results;
        if (const auto* eq = head_equation(v)) {
            results = eq_to_cf(v.lang, *eq, vars_);
        } else {
            results = tr_to_cf(v.lang, std::get<TransConstraint>(head), vars_);
        }
        std::vector<ProofVertex> out;
        for (auto& r : results) {
            ProofVertex c = pop_head(v);
            remove_from_n(c, head);
            c.lang = std::move(r.lang);
            std::vector<Constraint> in_cs, out_cs, tr_cs;
            for (const auto& e : r.in) in_cs.push_back(e);
            for (const auto& e : r.out) out_cs.push_back(e);
            for (const auto& t : r.tr) tr_cs.push_back(t);
            for (const auto& t : tr_cs) c.n.push_back(t);
            // frontier gets the binding equations, inputs before outputs
            for (auto it = out_cs.rbegin(); it != out_cs.rend(); ++it) {
                c.n.push_back(*it);
                c.frontier.push_front(*it);
            }
            for (auto it = in_cs.rbegin(); it != in_cs.rend(); ++it) {
                c.n.push_back(*it);
                c.frontier.push_front(*it);
            }
            // LVar_i = LenFw(Tr, LenFw(in, LVar)) u LenBw(out, LVar)
            std::set<VarId> lv = len_fw(tr_cs, len_fw(in_cs, v.lvar));
            std::set<VarId> bw = len_bw(out_cs, v.lvar);
            lv.insert(bw.begin(), bw.end());
            c.lvar = std::move(lv);
            out.push_back(std::move(c));
        }
        stats_.conclusions += out.size();
        return out;
    }

    /// The LenImage query for a frontier-empty vertex.
    LiaResult try_len_image(const ProofVertex& v) {
        LiaResult fail;
        fail.status = LiaStatus::Unsat;
        for (const auto& [var, lang] : v.lang) {
            if (is_empty(*lang)) return fail;
        }
        std::vector<TransConstraint> phi_m;
        for (const auto& c : v.n) {
            if (const auto* tc = std::get_if<TransConstraint>(&c)) {
                bool lvar_input = false;
                for (VarId u : tc->in)
                    if (v.lvar.count(u)) lvar_input = true;
                if (lvar_input) phi_m.push_back(*tc);
            }
        }

        // builtin backend: flow constraints plus lazy connectivity cuts;
        // external backend: the self-contained depth encoding
        const bool lazy = cfg_.lia.backend == LiaBackend::Builtin;
        std::vector<LiaFormula> parts;
        std::vector<FlowParikh> flows;
        std::set<VarId> on_tapes;
        for (auto& machine : compose_chain(phi_m, v.lang)) {
            std::vector<LiaVar> tape_vars;
            for (VarId var : machine.tapes) {
                tape_vars.push_back(lia_.length_of(vars_.name(var)));
                on_tapes.insert(var);
            }
            Transducer compact = reduce(abstract_to_dummy(machine.machine));
            if (lazy)
                flows.push_back(parikh_flow(compact, tape_vars, lia_));
            else
                parts.push_back(parikh_image(compact, tape_vars, lia_));
        }
        parts.push_back(binding_length_image(v.seq, vars_, lia_));

        // exact length sets for the remaining length-relevant variables
        std::set<VarId> relevant = v.lvar;
        for (const auto& eq : v.seq) {
            relevant.insert(eq.lhs.begin(), eq.lhs.end());
            relevant.insert(eq.rhs.begin(), eq.rhs.end());
        }
        for (const auto& cd : cube_.codes) {
            relevant.insert(cd.a);
            relevant.insert(cd.b);
        }
        for (VarId var : relevant) {
            if (on_tapes.count(var)) continue;
            parts.push_back(
                language_length_set(*v.lang.at(var), lia_.length_of(vars_.name(var)), lia_));
        }
        for (const auto& cd : cube_.codes)
            parts.push_back(code_point_lia(cd, v.lang, vars_, lia_, sigma_));
        for (const auto& l : cube_.lengths) parts.push_back(l.formula);

        ++stats_.lia_queries;
        if (lazy)
            return solve_with_connectivity(LiaFormula::conj(std::move(parts)), std::move(flows),
                                           lia_, cfg_.lia);
        return lia_solve(LiaFormula::conj(std::move(parts)), lia_, cfg_.lia);
    }

    /// Construct a satisfying assignment for the original cube from a
    /// successful vertex and its LIA model.
    std::optional<Assignment> build_model(const ProofVertex& v, const LiaModel& lia_model) {
        Assignment nu;
        for (LiaVar lv = 0; lv < lia_.size(); ++lv) {
            auto it = lia_model.find(lv);
            if (it == lia_model.end()) continue;
            if (lia_.info(lv).kind == LiaVarKind::Int) nu.ints[lia_.info(lv).name] = it->second;
        }
        auto target_len = [&](VarId var) -> std::optional<size_t> {
            auto it = lia_model.find(lia_.length_of(vars_.name(var)));
            if (it == lia_model.end() || it->second < 0) return std::nullopt;
            return static_cast<size_t>(it->second);
        };

        // code-point variables first: their character is pinned by the model
        for (const auto& cd : cube_.codes) {
            for (VarId var : {cd.a, cd.b}) {
                auto it = lia_model.find(lia_.code_of(vars_.name(var)));
                if (it != lia_model.end() && !nu.strings.count(var))
                    nu.strings[var] = Word{static_cast<Symbol>(it->second)};
            }
        }

        // realize machine runs with the Parikh-model tape lengths
        std::vector<TransConstraint> phi_m;
        std::set<Constraint> machine_constraints;
        for (const auto& c : v.n) {
            if (const auto* tc = std::get_if<TransConstraint>(&c)) {
                bool lvar_input = false;
                for (VarId u : tc->in)
                    if (v.lvar.count(u)) lvar_input = true;
                if (lvar_input) {
                    phi_m.push_back(*tc);
                    machine_constraints.insert(c);
                }
            }
        }
        for (auto& machine : compose_chain(phi_m, v.lang)) {
            std::vector<size_t> targets;
            for (VarId var : machine.tapes) {
                auto l = target_len(var);
                if (!l) return std::nullopt;
                targets.push_back(*l);
            }
            auto words = find_run_with_lengths(machine.machine, targets);
            if (!words) return std::nullopt;
            for (size_t i = 0; i < machine.tapes.size(); ++i) {
                if (!nu.strings.count(machine.tapes[i])) nu.strings[machine.tapes[i]] = (*words)[i];
            }
        }

        // stable part: reverse-topological backward propagation
        std::vector<Constraint> stable;
        for (const auto& c : v.n)
            if (!machine_constraints.count(c)) stable.push_back(c);
        std::vector<Constraint> ordered = toposort_constraints(stable);

        auto ensure_value = [&](VarId var) -> bool {
            if (nu.strings.count(var)) return true;
            const Nfa& lang = *v.lang.at(var);
            std::optional<Word> w;
            if (auto len = target_len(var)) w = word_of_length(lang, *len);
            if (!w) w = shortest_word(lang);
            if (!w) return false;
            nu.strings[var] = *w;
            return true;
        };

        for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) {
            const Constraint& c = *it;
            for (VarId var : output_term(c))
                if (!ensure_value(var)) return std::nullopt;
            // target language for the input side
            Word out_val;
            for (VarId var : output_term(c)) {
                const Word& piece = nu.strings.at(var);
                out_val.insert(out_val.end(), piece.begin(), piece.end());
            }
            Nfa target = nfa_word(out_val);
            if (const auto* tc = std::get_if<TransConstraint>(&c))
                target = image(inverse(*tc->t), target);
            if (!assign_input_split(v, c, target, nu)) return std::nullopt;
        }

        // solved equations: every right-hand variable is live now
        for (const auto& eq : v.seq) {
            for (VarId var : eq.rhs)
                if (!ensure_value(var)) return std::nullopt;
            Word val;
            for (VarId var : eq.rhs) {
                const Word& piece = nu.strings.at(var);
                val.insert(val.end(), piece.begin(), piece.end());
            }
            nu.strings[eq.lhs[0]] = val;
        }

        // anything left picks a word from its (refined) language
        for (const auto& [var, lang] : v.lang) {
            (void)lang;
            if (!ensure_value(var)) return std::nullopt;
        }
        // variables of the original cube absent from the final assignment
        for (const auto& [var, lang] : original_.lang) {
            (void)lang;
            if (!nu.strings.count(var)) return std::nullopt;
        }

        if (!validate(nu)) {
            ++stats_.model_validation_failures;
            return std::nullopt;
        }
        return nu;
    }

    /// Direct evaluation of the original cube.
    bool validate(const Assignment& nu) {
        for (const auto& c : original_.eqtr) {
            if (const auto* eq = std::get_if<Equation>(&c)) {
                if (!eval_atom(AtomVariant{*eq}, nu, vars_, lia_)) return false;
            } else if (!eval_atom(AtomVariant{std::get<TransConstraint>(c)}, nu, vars_, lia_)) {
                return false;
            }
        }
        for (const auto& [var, lang] : original_.lang) {
            if (!member(*lang, nu.strings.at(var))) return false;
        }
        LiaModel m = induced_lia_model(nu, vars_, lia_);
        for (const auto& l : original_.lengths)
            if (!eval_lia(l.formula, m)) return false;
        for (const auto& cd : original_.codes)
            if (!eval_atom(AtomVariant{cd}, nu, vars_, lia_)) return false;
        return true;
    }

  private:
    // ----- helpers

    const Equation* head_equation(const ProofVertex& v) const {
        return std::get_if<Equation>(&v.frontier.front());
    }
    const TransConstraint* head_transducer(const ProofVertex& v) const {
        return std::get_if<TransConstraint>(&v.frontier.front());
    }

    static ProofVertex pop_head(const ProofVertex& v) {
        ProofVertex out = v;
        out.frontier.pop_front();
        return out;
    }

    static void remove_from_n(ProofVertex& v, const Constraint& c) {
        auto it = std::find(v.n.begin(), v.n.end(), c);
        if (it != v.n.end()) v.n.erase(it);
    }

    bool head_stable(const ProofVertex& v) const {
        const Constraint& head = v.frontier.front();
        Nfa out_lang = term_language(v.lang, output_term(head));
        if (const auto* tc = std::get_if<TransConstraint>(&head)) {
            return includes(image(*tc->t, term_language(v.lang, tc->in)), out_lang);
        }
        return includes(term_language(v.lang, input_term(head)), out_lang);
    }

    static Term substitute_term(const Term& t, VarId x, const Term& repl) {
        Term out;
        for (VarId u : t) {
            if (u == x)
                out.insert(out.end(), repl.begin(), repl.end());
            else
                out.push_back(u);
        }
        return out;
    }

    static Constraint substitute_constraint(const Constraint& c, VarId x, const Term& repl) {
        if (const auto* eq = std::get_if<Equation>(&c))
            return Equation{substitute_term(eq->lhs, x, repl), substitute_term(eq->rhs, x, repl)};
        auto tc = std::get<TransConstraint>(c);
        tc.in = substitute_term(tc.in, x, repl);
        tc.out = substitute_term(tc.out, x, repl);
        return tc;
    }

    static bool trivial_equation(const Constraint& c) {
        const auto* eq = std::get_if<Equation>(&c);
        return eq && eq->lhs == eq->rhs;
    }

    /// Apply {x -> repl} to N, the frontier and SEq; drop constraints that
    /// become trivial; deduplicate.
    static void substitute_vertex(ProofVertex& v, VarId x, const Term& repl) {
        std::vector<Constraint> n2;
        for (const auto& c : v.n) {
            Constraint s = substitute_constraint(c, x, repl);
            if (trivial_equation(s)) continue;
            if (std::find(n2.begin(), n2.end(), s) == n2.end()) n2.push_back(std::move(s));
        }
        v.n = std::move(n2);
        std::deque<Constraint> f2;
        for (const auto& c : v.frontier) {
            Constraint s = substitute_constraint(c, x, repl);
            if (trivial_equation(s)) continue;
            if (std::find(f2.begin(), f2.end(), s) == f2.end()) f2.push_back(std::move(s));
        }
        v.frontier = std::move(f2);
        for (auto& eq : v.seq) {
            eq.rhs = substitute_term(eq.rhs, x, repl);
        }
    }

    /// Push the reinsertion set H (after substitution, minus constraints
    /// already in the frontier) on top, in topological order.
    static void push_reinserted(ProofVertex& v, const std::vector<Constraint>& h, VarId x,
                                const Term& repl) {
        std::vector<Constraint> subst;
        for (const auto& c : h) {
            Constraint s = substitute_constraint(c, x, repl);
            if (trivial_equation(s)) continue;
            if (std::find(v.frontier.begin(), v.frontier.end(), s) != v.frontier.end()) continue;
            if (std::find(subst.begin(), subst.end(), s) == subst.end()) subst.push_back(std::move(s));
        }
        for (auto it = subst.rbegin(); it != subst.rend(); ++it) v.frontier.push_front(*it);
    }

    /// Split the input term's value so that the concatenation lies in the
    /// target language, honoring already-fixed component values.
    bool assign_input_split(const ProofVertex& v, const Constraint& c, const Nfa& target,
                            Assignment& nu) {
        const Term& s = input_term(c);
        if (s.empty()) return member(target, {});
        Nfa chain = nfa_epsilon();
        for (size_t i = 0; i < s.size(); ++i) {
            Nfa piece = nu.strings.count(s[i]) ? nfa_word(nu.strings.at(s[i])) : *v.lang.at(s[i]);
            chain = i == 0 ? piece : delim_concat(chain, delim_sep, piece);
        }
        Nfa product = delim_product(chain, target, {delim_sep});
        auto w = shortest_word(product);
        if (!w) return false;
        // cut at the separators
        std::vector<Word> pieces{{}};
        for (Symbol sym : *w) {
            if (sym == delim_sep)
                pieces.push_back({});
            else
                pieces.back().push_back(sym);
        }
        if (pieces.size() != s.size()) return false;
        for (size_t i = 0; i < s.size(); ++i) {
            if (!nu.strings.count(s[i])) nu.strings[s[i]] = pieces[i];
        }
        return true;
    }

    /// Find an accepting run whose tape lengths match the targets exactly.
    std::optional<std::vector<Word>> find_run_with_lengths(const Transducer& t,
                                                           const std::vector<size_t>& targets) {
        struct Conf {
            State q;
            std::vector<size_t> consumed;
            auto operator<=>(const Conf&) const = default;
        };
        auto fwd = detail::forward_index(t);
        std::map<Conf, std::pair<Conf, size_t>> parent;  // conf -> (prev, transition)
        std::set<Conf> seen;
        std::deque<Conf> work;
        uint64_t budget = cfg_.model_budget;
        for (State q : t.initial) {
            Conf c{q, std::vector<size_t>(t.arity, 0)};
            if (seen.insert(c).second) work.push_back(c);
        }
        while (!work.empty() && budget-- > 0) {
            Conf c = work.front();
            work.pop_front();
            if (c.consumed == targets && t.is_final(c.q)) {
                std::vector<Word> words(t.arity);
                Conf cur = c;
                std::vector<size_t> path;
                while (parent.count(cur)) {
                    auto& [prev, tr] = parent.at(cur);
                    path.push_back(tr);
                    cur = prev;
                }
                std::reverse(path.begin(), path.end());
                for (size_t tr : path) {
                    for (uint32_t k = 0; k < t.arity; ++k) {
                        Symbol sym = t.transitions[tr].label[k];
                        if (sym != eps_symbol) words[k].push_back(sym);
                    }
                }
                return words;
            }
            for (size_t i : fwd[c.q]) {
                const auto& tr = t.transitions[i];
                Conf n = c;
                n.q = tr.dst;
                bool ok = true;
                for (uint32_t k = 0; k < t.arity; ++k) {
                    if (tr.label[k] == eps_symbol) continue;
                    if (++n.consumed[k] > targets[k]) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                if (seen.insert(n).second) {
                    parent.emplace(n, std::make_pair(c, i));
                    work.push_back(n);
                }
            }
        }
        return std::nullopt;
    }

    void trace_rule(const char* rule, const ProofVertex& v, size_t conclusions) {
        ++stats_.rule_applications;
        if (cfg_.trace) {
            *cfg_.trace << rule << ' ' << constraint_to_string(v.frontier.front(), vars_) << " -> "
                        << conclusions << "\n";
        }
    }

    std::optional<std::vector<ProofVertex>> apply_first_rule(ProofVertex& v) {
        if (auto r = rule_rsubst(v)) {
            trace_rule("RSubst", v, r->size());
            return r;
        }
        if (auto r = rule_lsubst(v)) {
            trace_rule("LSubst", v, r->size());
            return r;
        }
        if (cfg_.literal_reduction) {
            if (auto r = rule_red_trans(v)) {
                trace_rule("RedTrans", v, r->size());
                return r;
            }
        }
        if (cfg_.hom_heuristic) {
            if (auto r = rule_hom_trans(v)) {
                trace_rule("HomTrans", v, r->size());
                return r;
            }
        }
        if (auto r = rule_skip(v)) {
            trace_rule("Skip", v, r->size());
            return r;
        }
        if (auto r = rule_refine_st(v)) {
            trace_rule("RefineSt", v, r->size());
            return r;
        }
        if (auto r = rule_comb_nl(v)) {
            trace_rule("CombNL", v, r->size());
            return r;
        }
        if (auto r = rule_refine_cf(v)) {
            trace_rule("RefineCF", v, r->size());
            return r;
        }
        return std::nullopt;
    }

    /// Non-chain-free inputs: decide the T1(x,y) & T2(x,y) and T(x,x) shapes
    /// with the intersection-emptiness heuristic when enabled.
    SolveResult run_non_chain_free() {
        SolveResult res;
        res.verdict = Verdict::Unknown;
        res.reason = "cube is not chain-free";
        res.stats = stats_;
        if (!cfg_.intersect_heuristic) return res;

        auto restrict2 = [&](const Transducer& t, const Nfa& in_lang, const Nfa& out_lang) {
            Transducer m = sync(t, lift(in_lang), 1, 1);    // tapes: (out, in)
            m = sync(m, lift(out_lang), 1, 1);              // tapes: (in, out)
            return normalize(m);
        };

        const auto& cs = cube_.eqtr;
        ++stats_.intersection_runs;
        if (cs.size() == 1) {
            const auto* tc = std::get_if<TransConstraint>(&cs[0]);
            if (!tc || tc->in.size() != 1 || tc->out.size() != 1 || tc->in[0] != tc->out[0])
                return res;
            VarId x = tc->in[0];
            Transducer m = restrict2(*tc->t, *cube_.lang.at(x), *cube_.lang.at(x));
            auto r = search_equal_tapes(m, 1, 2, std::nullopt,
                                        static_cast<size_t>(cfg_.intersect_bound));
            return finish_heuristic(r, x, x, r.agreed, r.agreed);
        }
        if (cs.size() == 2) {
            const auto* t1 = std::get_if<TransConstraint>(&cs[0]);
            const auto* t2 = std::get_if<TransConstraint>(&cs[1]);
            if (!t1 || !t2 || t1->in.size() != 1 || t1->out.size() != 1 || t2->in.size() != 1 ||
                t2->out.size() != 1 || t1->in != t2->in || t1->out != t2->out ||
                t1->in[0] == t1->out[0])
                return res;
            VarId x = t1->in[0], y = t1->out[0];
            Transducer m1 = restrict2(*t1->t, *cube_.lang.at(x), *cube_.lang.at(y));
            Transducer m2 = restrict2(*t2->t, *cube_.lang.at(x), *cube_.lang.at(y));
            // pair the two relations on the shared input; tapes of the sync
            // are (out1, in, out2)
            Transducer paired = sync(m1, m2, 1, 1);
            auto r = search_equal_tapes(paired, 1, 3, 2,
                                        static_cast<size_t>(cfg_.intersect_bound));
            return finish_heuristic(r, x, y, r.recorded, r.agreed);
        }
        return res;
    }

    SolveResult finish_heuristic(const EqualTapesResult& r, VarId x, VarId y, const Word& x_val,
                                 const Word& y_val) {
        SolveResult res;
        res.stats = stats_;
        switch (r.verdict) {
            case Verdict::Unsat:
                res.verdict = Verdict::Unsat;
                return res;
            case Verdict::Unknown:
                res.verdict = Verdict::Unknown;
                res.reason = "intersection heuristic hit the tape bound";
                return res;
            case Verdict::Sat:
                break;
        }
        Assignment nu;
        nu.strings[x] = x_val;
        nu.strings[y] = y_val;
        for (const auto& [var, lang] : cube_.lang) {
            if (nu.strings.count(var)) continue;
            auto w = shortest_word(*lang);
            if (!w) {
                res.verdict = Verdict::Unsat;  // some language is empty
                return res;
            }
            nu.strings[var] = *w;
        }
        // length constraints are checked under the single witness; a failure
        // leaves the verdict open rather than risking a wrong answer
        LiaModel m = induced_lia_model(nu, vars_, lia_);
        for (const auto& l : cube_.lengths) {
            if (!eval_lia(l.formula, m)) {
                res.verdict = Verdict::Unknown;
                res.reason = "heuristic witness does not satisfy the length constraints";
                return res;
            }
        }
        res.verdict = Verdict::Sat;
        if (cfg_.produce_model) res.model = nu;
        return res;
    }

    PositiveCube cube_;
    PositiveCube original_;
    VarPool& vars_;
    LiaVarPool& lia_;
    Alphabet sigma_;
    SolverConfig cfg_;
    SolverStats stats_;
    std::chrono::steady_clock::time_point deadline_;
};

inline SolveResult solve(PositiveCube cube, VarPool& vars, LiaVarPool& lia, const Alphabet& sigma,
                         const SolverConfig& cfg = {}) {
    Solver s(std::move(cube), vars, lia, sigma, cfg);
    return s.run();
}

}  // namespace strand

#endif
