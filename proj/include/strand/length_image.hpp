// length_image.hpp -- length-image construction: composing concatenation-free
// transducer constraints into multi-tape machines, dummy-symbol abstraction,
// Parikh images as LIA formulas via the flow encoding, binding-equation
// length sums, and the LIA backend dispatch.

#ifndef STRAND_LENGTH_IMAGE_HPP
#define STRAND_LENGTH_IMAGE_HPP

#include <map>
#include <set>
#include <vector>

#include "strand/constraint.hpp"
#include "strand/inclusion_graph.hpp"
#include "strand/lia.hpp"
#include "strand/transducer.hpp"

namespace strand {

// ---------------------------------------------------------------------------
// Backend dispatch
// ---------------------------------------------------------------------------

enum class LiaBackend { Builtin, External };

struct LiaBackendConfig {
    LiaBackend backend = LiaBackend::Builtin;
    std::string external_command;
    size_t node_budget = 50000;
};

inline LiaResult lia_solve(const LiaFormula& f, const LiaVarPool& pool,
                           const LiaBackendConfig& cfg) {
    if (cfg.backend == LiaBackend::External) return lia_solve_external(f, pool, cfg.external_command);
    return lia_solve_builtin(f, pool, LiaSolveOptions{cfg.node_budget});
}

inline constexpr Symbol dummy_symbol = '#';

/// Replace every letter by one dummy symbol; the per-tape epsilon pattern of
/// each transition is preserved, so tape lengths are unchanged.
inline Transducer abstract_to_dummy(const Transducer& t) {
    Transducer out = t;
    for (auto& tr : out.transitions) {
        if (label_is_delim(tr.label)) throw std::logic_error("dummy abstraction on delimited machine");
        for (Symbol& s : tr.label)
            if (s != eps_symbol) s = dummy_symbol;
    }
    return out;
}

/// A composed multi-tape machine together with the variable of each tape.
struct TapedMachine {
    Transducer machine;
    std::vector<VarId> tapes;
};

/// Compose concatenation-free transducer constraints into multi-tape
/// machines, one per connected group, synchronizing each constraint on the
/// tape it shares with the machine built so far, and finally restricting
/// every tape by the variable's regular language.
inline std::vector<TapedMachine> compose_chain(const std::vector<TransConstraint>& constraints,
                                               const LangMap& lang) {
    // chain-freeness precondition: single-variable sides, no repeated
    // inputs, acyclic
    std::set<VarId> inputs;
    std::vector<Constraint> as_constraints;
    for (const auto& tc : constraints) {
        if (tc.in.size() != 1 || tc.out.size() != 1)
            throw std::logic_error("compose_chain: constraint is not concatenation-free");
        if (!inputs.insert(tc.in[0]).second)
            throw std::logic_error("compose_chain: repeated input variable");
        as_constraints.push_back(tc);
    }
    auto order = toposort(build_inclusion_graph(as_constraints));  // throws CycleError on cycles

    std::vector<TapedMachine> machines;
    auto tape_of = [&](VarId v) -> std::pair<size_t, uint32_t> {
        for (size_t m = 0; m < machines.size(); ++m)
            for (uint32_t i = 0; i < machines[m].tapes.size(); ++i)
                if (machines[m].tapes[i] == v) return {m, i + 1};
        return {SIZE_MAX, 0};
    };

    // reverse topological order: a constraint's output variable is already a
    // tape of the machine it feeds
    for (size_t k = order.size(); k > 0; --k) {
        const auto& tc = constraints[order[k - 1]];
        VarId in = tc.in[0], out = tc.out[0];
        auto [mo, to] = tape_of(out);
        auto [mi, ti] = tape_of(in);
        if (mo != SIZE_MAX) {
            auto& m = machines[mo];
            m.machine = sync(m.machine, *tc.t, to, 2);
            // tape `to` is removed, the constraint's (in, out) pair appended
            m.tapes.erase(m.tapes.begin() + (to - 1));
            m.tapes.push_back(in);
            m.tapes.push_back(out);
        } else if (mi != SIZE_MAX) {
            auto& m = machines[mi];
            m.machine = sync(m.machine, *tc.t, ti, 1);
            m.tapes.erase(m.tapes.begin() + (ti - 1));
            m.tapes.push_back(in);
            m.tapes.push_back(out);
        } else {
            machines.push_back({*tc.t, {in, out}});
        }
    }

    // synchronize with the regular constraints tape-wise; syncing moves the
    // restricted tape to the back, so a full rotation restores the order
    for (auto& m : machines) {
        for (size_t round = 0; round < m.tapes.size(); ++round) {
            VarId v = m.tapes.front();
            m.machine = sync(m.machine, lift(*lang.at(v)), 1, 1);
            m.tapes.erase(m.tapes.begin());
            m.tapes.push_back(v);
        }
        m.machine = normalize(m.machine);
    }
    return machines;
}

/// Parikh image of an n-tape machine as an existential LIA formula over the
/// given per-tape length variables: satisfiable for (l1..ln) iff some
/// accepted tuple has those tape lengths.
///
/// Standard flow encoding: one counter per transition, flow conservation per
/// state with a unit source/sink at a chosen initial/final pair (disjunction
/// over pairs), and spanning connectivity via per-state depth variables.
inline LiaFormula parikh_image(const Transducer& t0, const std::vector<LiaVar>& tape_vars,
                               LiaVarPool& pool) {
    Transducer t = normalize(t0);
    if (t.arity != tape_vars.size())
        throw std::logic_error("parikh_image: tape variable count mismatch");
    if (t.num_states == 0) return LiaFormula::bottom();

    std::vector<LiaVar> counters;
    counters.reserve(t.transitions.size());
    for (size_t i = 0; i < t.transitions.size(); ++i) counters.push_back(pool.fresh_counter());
    std::vector<LiaVar> depth;
    for (State q = 0; q < t.num_states; ++q) depth.push_back(pool.fresh_counter());

    // tape lengths are shared by all initial/final choices
    std::vector<LiaFormula> shared;
    for (uint32_t k = 0; k < t.arity; ++k) {
        LinExpr sum;
        for (size_t i = 0; i < t.transitions.size(); ++i)
            if (t.transitions[i].label[k] != eps_symbol) sum.add(LinExpr::of(counters[i]));
        shared.push_back(LiaFormula::compare(LinExpr::of(tape_vars[k]), LiaCmp::Eq, sum));
    }

    std::vector<LiaFormula> options;
    for (State q0 : t.initial) {
        for (State qf : t.final) {
            std::vector<LiaFormula> cs;
            // flow conservation with unit source/sink
            for (State q = 0; q < t.num_states; ++q) {
                LinExpr flow;
                for (size_t i = 0; i < t.transitions.size(); ++i) {
                    if (t.transitions[i].dst == q) flow.add(LinExpr::of(counters[i]));
                    if (t.transitions[i].src == q) flow.add(LinExpr::of(counters[i]), -1);
                }
                int64_t rhs = (q == qf ? 1 : 0) - (q == q0 ? 1 : 0);
                cs.push_back(LiaFormula::compare(flow, LiaCmp::Eq, LinExpr::lit(rhs)));
            }
            // connectivity: used states carry a depth that decreases along
            // some used edge toward the source
            cs.push_back(LiaFormula::compare(LinExpr::of(depth[q0]), LiaCmp::Eq, LinExpr::lit(1)));
            for (State q = 0; q < t.num_states; ++q) {
                if (q == q0) continue;
                LinExpr touched;
                for (size_t i = 0; i < t.transitions.size(); ++i)
                    if (t.transitions[i].dst == q || t.transitions[i].src == q)
                        touched.add(LinExpr::of(counters[i]));
                LiaFormula unused = LiaFormula::conj(
                    {LiaFormula::compare(LinExpr::of(depth[q]), LiaCmp::Eq, LinExpr::lit(0)),
                     LiaFormula::compare(touched, LiaCmp::Eq, LinExpr::lit(0))});
                std::vector<LiaFormula> parents;
                for (size_t i = 0; i < t.transitions.size(); ++i) {
                    if (t.transitions[i].dst != q || t.transitions[i].src == q) continue;
                    LiaVar dp = depth[t.transitions[i].src];
                    LinExpr step = LinExpr::of(depth[q]);
                    step.add(LinExpr::of(dp), -1);
                    parents.push_back(LiaFormula::conj(
                        {LiaFormula::compare(LinExpr::of(counters[i]), LiaCmp::Ge, LinExpr::lit(1)),
                         LiaFormula::compare(LinExpr::of(dp), LiaCmp::Ge, LinExpr::lit(1)),
                         LiaFormula::compare(step, LiaCmp::Eq, LinExpr::lit(1))}));
                }
                parents.insert(parents.begin(), std::move(unused));
                cs.push_back(LiaFormula::disj(std::move(parents)));
            }
            options.push_back(LiaFormula::conj(std::move(cs)));
        }
    }
    if (options.empty()) return LiaFormula::bottom();

    std::vector<LiaFormula> all = shared;
    all.push_back(LiaFormula::disj(std::move(options)));
    return LiaFormula::conj(std::move(all));
}

/// |x| constrained to the length set of a regular language. The length set
/// is computed from the lasso shape of the unary (dummy-abstracted)
/// determinization: a finite prefix plus periodic residues, encoded with one
/// counter per periodic residue. Falls back to the Parikh image if the
/// unary determinization grows past its cap.
inline LiaFormula language_length_set(const Nfa& lang, LiaVar len_var, LiaVarPool& pool) {
    Nfa trimmed = trim(lang);
    if (trimmed.num_states == 0) return LiaFormula::bottom();
    Nfa unary = trimmed;
    for (auto& t : unary.transitions)
        if (t.sym != eps_symbol) t.sym = dummy_symbol;

    auto dfa_opt = determinize_bounded(unary, 2048);
    if (!dfa_opt) {
        Transducer one = reduce(abstract_to_dummy(lift(trimmed)));
        return parikh_image(one, {len_var}, pool);
    }
    const Nfa& dfa = *dfa_opt;  // a unary DFA is a lasso: tail then cycle
    std::vector<State> path{dfa.initial.at(0)};
    std::map<State, size_t> seen{{path[0], 0}};
    auto fwd = detail::forward_index(dfa);
    size_t cycle_start = SIZE_MAX;
    for (;;) {
        State cur = path.back();
        if (fwd[cur].empty()) break;  // finite language: no cycle
        State next = dfa.transitions[fwd[cur][0]].dst;
        auto it = seen.find(next);
        if (it != seen.end()) {
            cycle_start = it->second;
            break;
        }
        seen[next] = path.size();
        path.push_back(next);
    }

    std::vector<LiaFormula> options;
    size_t limit = cycle_start == SIZE_MAX ? path.size() : cycle_start;
    for (size_t i = 0; i < limit; ++i) {
        if (dfa.is_final(path[i]))
            options.push_back(
                LiaFormula::compare(LinExpr::of(len_var), LiaCmp::Eq, LinExpr::lit(i)));
    }
    if (cycle_start != SIZE_MAX) {
        int64_t period = static_cast<int64_t>(path.size() - cycle_start);
        for (size_t i = cycle_start; i < path.size(); ++i) {
            if (!dfa.is_final(path[i])) continue;
            // len = i + period * k for some k >= 0
            LiaVar k = pool.fresh_counter();
            LinExpr e = LinExpr::of(len_var);
            e.add(LinExpr::of(k, -period));
            options.push_back(LiaFormula::compare(e, LiaCmp::Eq, LinExpr::lit(i)));
        }
    }
    return LiaFormula::disj(std::move(options));
}

/// Flow-only Parikh constraints of a machine: counters, Kirchhoff balance
/// with a unit source/sink (disjunction over initial/final pairs), tape
/// lengths. Connectivity of the counter support is NOT encoded; callers
/// enforce it lazily with cut constraints (see solve_with_connectivity).
struct FlowParikh {
    Transducer machine;
    std::vector<LiaVar> counters;   // per transition
    std::vector<LiaVar> selectors;  // per (initial, final) option, 0/1
    std::vector<std::pair<State, State>> options;
    LiaFormula formula;
};

inline FlowParikh parikh_flow(const Transducer& t0, const std::vector<LiaVar>& tape_vars,
                              LiaVarPool& pool) {
    FlowParikh out;
    out.machine = normalize(t0);
    const Transducer& t = out.machine;
    if (t.num_states == 0) {
        out.formula = LiaFormula::bottom();
        return out;
    }
    for (size_t i = 0; i < t.transitions.size(); ++i) out.counters.push_back(pool.fresh_counter());

    std::vector<LiaFormula> shared;
    for (uint32_t k = 0; k < t.arity; ++k) {
        LinExpr sum;
        for (size_t i = 0; i < t.transitions.size(); ++i)
            if (t.transitions[i].label[k] != eps_symbol) sum.add(LinExpr::of(out.counters[i]));
        shared.push_back(LiaFormula::compare(LinExpr::of(tape_vars[k]), LiaCmp::Eq, sum));
    }
    std::vector<LiaFormula> alts;
    LinExpr sel_sum;
    for (State q0 : t.initial) {
        for (State qf : t.final) {
            LiaVar sel = pool.fresh_counter();
            out.selectors.push_back(sel);
            out.options.push_back({q0, qf});
            sel_sum.add(LinExpr::of(sel));
            std::vector<LiaFormula> cs{
                LiaFormula::compare(LinExpr::of(sel), LiaCmp::Eq, LinExpr::lit(1))};
            for (State q = 0; q < t.num_states; ++q) {
                LinExpr flow;
                for (size_t i = 0; i < t.transitions.size(); ++i) {
                    if (t.transitions[i].dst == q) flow.add(LinExpr::of(out.counters[i]));
                    if (t.transitions[i].src == q) flow.add(LinExpr::of(out.counters[i]), -1);
                }
                int64_t rhs = (q == qf ? 1 : 0) - (q == q0 ? 1 : 0);
                cs.push_back(LiaFormula::compare(flow, LiaCmp::Eq, LinExpr::lit(rhs)));
            }
            alts.push_back(LiaFormula::conj(std::move(cs)));
        }
    }
    if (alts.empty()) {
        out.formula = LiaFormula::bottom();
        return out;
    }
    shared.push_back(LiaFormula::compare(sel_sum, LiaCmp::Eq, LinExpr::lit(1)));
    shared.push_back(LiaFormula::disj(std::move(alts)));
    out.formula = LiaFormula::conj(std::move(shared));
    return out;
}

/// Solve `base AND machines' flow formulas`, enforcing connectivity of every
/// counter support lazily: whenever a model uses transitions that are not
/// reachable from the selected source, a cut clause is added and the query
/// is reissued.
inline LiaResult solve_with_connectivity(const LiaFormula& base, std::vector<FlowParikh> machines,
                                         const LiaVarPool& pool, const LiaBackendConfig& cfg,
                                         size_t max_cuts = 128) {
    std::vector<LiaFormula> parts{base};
    for (const auto& m : machines) parts.push_back(m.formula);
    std::vector<LiaFormula> cuts;

    for (size_t round = 0; round <= max_cuts; ++round) {
        std::vector<LiaFormula> all = parts;
        all.insert(all.end(), cuts.begin(), cuts.end());
        LiaResult r = lia_solve(LiaFormula::conj(std::move(all)), pool, cfg);
        if (r.status != LiaStatus::Sat) return r;

        bool all_connected = true;
        for (const auto& m : machines) {
            const Transducer& t = m.machine;
            std::set<size_t> support;
            for (size_t i = 0; i < m.counters.size(); ++i) {
                auto it = r.model.find(m.counters[i]);
                if (it != r.model.end() && it->second > 0) support.insert(i);
            }
            if (support.empty()) continue;
            std::optional<State> source;
            for (size_t o = 0; o < m.selectors.size(); ++o) {
                auto it = r.model.find(m.selectors[o]);
                if (it != r.model.end() && it->second == 1) source = m.options[o].first;
            }
            if (!source) return {LiaStatus::Unknown, {}, "parikh: no selected source"};

            std::set<State> reached{*source};
            bool grew = true;
            while (grew) {
                grew = false;
                for (size_t i : support) {
                    if (reached.count(t.transitions[i].src) && !reached.count(t.transitions[i].dst)) {
                        reached.insert(t.transitions[i].dst);
                        grew = true;
                    }
                }
            }
            bool stranded = false;
            for (size_t i : support)
                if (!reached.count(t.transitions[i].src)) stranded = true;
            if (!stranded) continue;
            all_connected = false;

            // S: states outside the reached set. Any valid run either avoids
            // S entirely, enters it from outside, or starts inside it.
            LinExpr inside, entering, src_inside;
            bool have_src_inside = false;
            for (size_t i = 0; i < t.transitions.size(); ++i) {
                bool src_in = !reached.count(t.transitions[i].src);
                bool dst_in = !reached.count(t.transitions[i].dst);
                if (src_in) inside.add(LinExpr::of(m.counters[i]));
                if (!src_in && dst_in) entering.add(LinExpr::of(m.counters[i]));
            }
            for (size_t o = 0; o < m.selectors.size(); ++o) {
                if (!reached.count(m.options[o].first)) {
                    src_inside.add(LinExpr::of(m.selectors[o]));
                    have_src_inside = true;
                }
            }
            std::vector<LiaFormula> clause{
                LiaFormula::compare(inside, LiaCmp::Eq, LinExpr::lit(0)),
                LiaFormula::compare(entering, LiaCmp::Ge, LinExpr::lit(1))};
            if (have_src_inside)
                clause.push_back(LiaFormula::compare(src_inside, LiaCmp::Ge, LinExpr::lit(1)));
            cuts.push_back(LiaFormula::disj(std::move(clause)));
        }
        if (all_connected) return r;
    }
    return {LiaStatus::Unknown, {}, "parikh: connectivity cut budget exhausted"};
}

/// Binding-equation length sums: |x| = |x1| + ... + |xm| per solved equation.
inline LiaFormula binding_length_image(const std::vector<Equation>& solved, const VarPool& vars,
                                       LiaVarPool& pool) {
    std::vector<LiaFormula> cs;
    for (const auto& eq : solved) {
        if (eq.lhs.size() != 1) throw std::logic_error("binding equation must have a single left var");
        LinExpr sum;
        for (VarId v : eq.rhs) sum.add(LinExpr::of(pool.length_of(vars.name(v))));
        cs.push_back(LiaFormula::compare(LinExpr::of(pool.length_of(vars.name(eq.lhs[0]))),
                                         LiaCmp::Eq, sum));
    }
    return LiaFormula::conj(std::move(cs));
}

}  // namespace strand

#endif
