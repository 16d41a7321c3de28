// noodles.hpp -- noodlification: splitting delimited products into noodles
// and the four procedures EqToSt, EqToCF, TrToSt, TrToCF that refine
// language assignments toward the stable or concatenation-free form.

#ifndef STRAND_NOODLES_HPP
#define STRAND_NOODLES_HPP

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "strand/constraint.hpp"
#include "strand/nfa.hpp"
#include "strand/transducer.hpp"

namespace strand {

/// One segment of a noodle with its (input-level, output-level) coordinates.
struct NoodleSegment {
    Transducer machine;
    uint32_t level_in = 0;
    uint32_t level_out = 0;
};

struct Noodle {
    std::vector<NoodleSegment> segments;  // in path order
};

namespace noodle_detail {

struct Coords {
    uint32_t cin, cout;
    bool operator==(const Coords&) const = default;
};

inline Symbol delim_kind(const TapeLabel& l) { return label_is_delim(l) ? l[0] : eps_symbol; }

/// Per-state delimiter counts; products of delimited chains are layered, so
/// the counts are path-independent.
inline std::vector<Coords> state_coords(const Transducer& t) {
    std::vector<Coords> coords(t.num_states, {UINT32_MAX, UINT32_MAX});
    auto fwd = detail::forward_index(t);
    std::deque<State> work;
    for (State q : t.initial) {
        coords[q] = {0, 0};
        work.push_back(q);
    }
    while (!work.empty()) {
        State q = work.front();
        work.pop_front();
        for (size_t i : fwd[q]) {
            const auto& tr = t.transitions[i];
            Coords next = coords[q];
            Symbol k = delim_kind(tr.label);
            if (k == delim_in) ++next.cin;
            if (k == delim_out) ++next.cout;
            if (coords[tr.dst].cin == UINT32_MAX) {
                coords[tr.dst] = next;
                work.push_back(tr.dst);
            } else if (!(coords[tr.dst] == next)) {
                throw std::logic_error("inconsistent delimiter levels in product");
            }
        }
    }
    return coords;
}

}  // namespace noodle_detail

/// Split a delimited product into noodles: for each delimiter level exactly
/// one of its transitions is kept, the rest are dropped, and the surviving
/// machine is cut at the kept transitions into segments. The union of the
/// noodle languages is the product language. Enumeration order is
/// lexicographic over (level, transition id) per delimiter kind.
inline std::vector<Noodle> split_into_noodles(const Transducer& product) {
    using noodle_detail::Coords;
    Transducer m = normalize(product);
    std::vector<Noodle> out;
    if (m.num_states == 0) return out;
    auto coords = noodle_detail::state_coords(m);

    uint32_t max_in = 0, max_out = 0;
    for (State q : m.final) {
        max_in = std::max(max_in, coords[q].cin);
        max_out = std::max(max_out, coords[q].cout);
    }
    for (State q : m.final) {
        if (coords[q].cin != max_in || coords[q].cout != max_out)
            throw std::logic_error("final states disagree on delimiter levels");
    }

    // group delimiter transitions by (kind, level)
    std::map<std::pair<int, uint32_t>, std::vector<size_t>> levels;
    for (uint32_t l = 0; l < max_in; ++l) levels[{0, l}] = {};
    for (uint32_t l = 0; l < max_out; ++l) levels[{1, l}] = {};
    for (size_t i = 0; i < m.transitions.size(); ++i) {
        Symbol k = noodle_detail::delim_kind(m.transitions[i].label);
        if (k == delim_in) levels[{0, coords[m.transitions[i].src].cin}].push_back(i);
        if (k == delim_out) levels[{1, coords[m.transitions[i].src].cout}].push_back(i);
    }

    std::vector<std::vector<size_t>> choices;
    for (auto& [key, ts] : levels) {
        if (ts.empty()) return out;  // level unreachable: no noodles
        choices.push_back(ts);
    }

    std::vector<size_t> pick(choices.size(), 0);
    for (;;) {
        // build the sub-machine with only the chosen delimiter transitions
        std::set<size_t> chosen;
        for (size_t l = 0; l < choices.size(); ++l) chosen.insert(choices[l][pick[l]]);

        Transducer sub;
        sub.arity = m.arity;
        sub.num_states = m.num_states;
        sub.initial = m.initial;
        sub.final = m.final;
        std::vector<size_t> keep;
        for (size_t i = 0; i < m.transitions.size(); ++i) {
            Symbol k = noodle_detail::delim_kind(m.transitions[i].label);
            if (k == eps_symbol || chosen.count(i)) keep.push_back(i);
        }
        for (size_t i : keep) sub.transitions.push_back(m.transitions[i]);

        if (!is_empty(sub)) {
            // trim, then carve at the chosen delimiters
            Nfa shape;
            shape.num_states = sub.num_states;
            for (const auto& tr : sub.transitions) shape.transitions.push_back({tr.src, 0, tr.dst});
            shape.initial = sub.initial;
            shape.final = sub.final;
            auto ok_fwd = detail::reachable_from(shape, shape.initial, true);
            auto ok_bwd = detail::reachable_from(shape, shape.final, false);
            auto alive = [&](State q) { return ok_fwd[q] && ok_bwd[q]; };

            std::vector<size_t> cut(chosen.begin(), chosen.end());
            std::sort(cut.begin(), cut.end(), [&](size_t a, size_t b) {
                Coords ca = coords[m.transitions[a].src], cb = coords[m.transitions[b].src];
                return std::tie(ca.cin, ca.cout) < std::tie(cb.cin, cb.cout);
            });

            bool live = true;
            for (size_t i : cut)
                if (!alive(m.transitions[i].src) || !alive(m.transitions[i].dst)) live = false;
            if (live) {
                Noodle noodle;
                size_t nseg = cut.size() + 1;
                for (size_t r = 0; r < nseg && live; ++r) {
                    Coords at = r == 0 ? Coords{0, 0} : coords[m.transitions[cut[r - 1]].dst];
                    NoodleSegment seg;
                    seg.level_in = at.cin;
                    seg.level_out = at.cout;
                    seg.machine.arity = m.arity;
                    seg.machine.num_states = m.num_states;
                    for (size_t i : keep) {
                        const auto& tr = m.transitions[i];
                        if (chosen.count(i)) continue;
                        if (coords[tr.src] == at && coords[tr.dst] == at && alive(tr.src) &&
                            alive(tr.dst))
                            seg.machine.transitions.push_back(tr);
                    }
                    if (r == 0) {
                        for (State q : m.initial)
                            if (alive(q)) seg.machine.make_initial(q);
                    } else {
                        seg.machine.make_initial(m.transitions[cut[r - 1]].dst);
                    }
                    if (r + 1 == nseg) {
                        for (State q : m.final)
                            if (alive(q)) seg.machine.make_final(q);
                    } else {
                        seg.machine.make_final(m.transitions[cut[r]].src);
                    }
                    seg.machine = normalize(seg.machine);
                    if (seg.machine.num_states == 0) live = false;
                    noodle.segments.push_back(std::move(seg));
                }
                if (live) out.push_back(std::move(noodle));
            }
        }

        // odometer
        size_t l = 0;
        while (l < pick.size()) {
            if (++pick[l] < choices[l].size()) break;
            pick[l] = 0;
            ++l;
        }
        if (l == pick.size()) break;
    }
    return out;
}

/// The output of a noodlification step: a refined language assignment plus
/// input binding equations (x = s), output binding equations (s = x) and
/// refined transducer constraints.
struct NoodleResult {
    LangMap lang;
    std::vector<Equation> in;
    std::vector<Equation> out;
    std::vector<TransConstraint> tr;
};

namespace noodle_detail {

/// Refine the variables of the left term so that its concatenation language
/// is included in the right term's; one result per noodle, each a sound
/// case split (every solution survives in some branch). Segments of repeated
/// occurrences are intersected left to right.
inline std::vector<LangMap> refine_left(const LangMap& lang, const Term& left, const Term& right) {
    Nfa chain = term_language_delimited(lang, left, delim_in);
    Nfa rconcat = term_language(lang, right);
    Nfa product = delim_product(chain, rconcat, {delim_in});
    std::vector<LangMap> out;
    for (const Noodle& noodle : split_into_noodles(lift(product))) {
        LangMap refined = lang;
        std::map<VarId, Nfa> pieces;
        bool dead = false;
        for (size_t ell = 0; ell < left.size(); ++ell) {
            Nfa seg = to_nfa(noodle.segments.at(ell).machine);
            auto it = pieces.find(left[ell]);
            if (it == pieces.end())
                pieces.emplace(left[ell], std::move(seg));
            else
                it->second = intersect(it->second, seg);
        }
        for (auto& [v, a] : pieces) {
            Nfa r = reduce(a);
            if (is_empty(r)) {
                dead = true;
                break;
            }
            refined[v] = make_lang(std::move(r));
        }
        if (!dead) out.push_back(std::move(refined));
    }
    return out;
}

inline bool term_subset(const LangMap& lang, const Term& small, const Term& big) {
    return includes(term_language(lang, big), term_language(lang, small));
}

}  // namespace noodle_detail

/// Stabilizing noodlification for an equation: case-split refinements of the
/// variable languages under which the equation is stable. Together with the
/// equation, the disjunction of results is equivalent to the input.
inline std::vector<LangMap> eq_to_st(const LangMap& lang, const Equation& eq,
                                     int max_rounds = 16) {
    std::vector<LangMap> done;
    std::vector<std::pair<LangMap, int>> work{{lang, max_rounds}};
    while (!work.empty()) {
        auto [cur, fuel] = std::move(work.back());
        work.pop_back();
        bool fwd = noodle_detail::term_subset(cur, eq.lhs, eq.rhs);
        bool bwd = noodle_detail::term_subset(cur, eq.rhs, eq.lhs);
        if (fwd && bwd) {
            done.push_back(std::move(cur));
            continue;
        }
        if (fuel <= 0) {
            // force the stabilizing direction (output within input) and stop
            for (auto& r : noodle_detail::refine_left(cur, eq.rhs, eq.lhs)) done.push_back(r);
            continue;
        }
        if (!fwd) {
            for (auto& r : noodle_detail::refine_left(cur, eq.lhs, eq.rhs))
                work.push_back({std::move(r), fuel - 1});
        } else {
            for (auto& r : noodle_detail::refine_left(cur, eq.rhs, eq.lhs))
                work.push_back({std::move(r), fuel - 1});
        }
    }
    return done;
}

/// Concatenation-eliminating noodlification for an equation: both sides are
/// marked with distinct delimiters; each noodle induces a split into fresh
/// variables with input and output binding equations.
inline std::vector<NoodleResult> eq_to_cf(const LangMap& lang, const Equation& eq, VarPool& pool) {
    Nfa chain_l = term_language_delimited(lang, eq.lhs, delim_in);
    Nfa chain_r = term_language_delimited(lang, eq.rhs, delim_out);
    Nfa product = delim_product(chain_l, chain_r, {delim_in, delim_out});

    std::vector<NoodleResult> out;
    for (const Noodle& noodle : split_into_noodles(lift(product))) {
        NoodleResult res;
        res.lang = lang;
        std::vector<VarId> fresh;
        bool dead = false;
        for (const auto& seg : noodle.segments) {
            Nfa l = reduce(to_nfa(seg.machine));
            if (is_empty(l)) {
                dead = true;
                break;
            }
            VarId v = pool.fresh("v");
            fresh.push_back(v);
            res.lang[v] = make_lang(std::move(l));
        }
        if (dead) continue;
        for (size_t ell = 0; ell < eq.lhs.size(); ++ell) {
            Term pieces;
            for (size_t r = 0; r < noodle.segments.size(); ++r)
                if (noodle.segments[r].level_in == ell) pieces.push_back(fresh[r]);
            res.in.push_back(Equation{{eq.lhs[ell]}, pieces});
        }
        for (size_t ell = 0; ell < eq.rhs.size(); ++ell) {
            Term pieces;
            for (size_t r = 0; r < noodle.segments.size(); ++r)
                if (noodle.segments[r].level_out == ell) pieces.push_back(fresh[r]);
            res.out.push_back(Equation{pieces, {eq.rhs[ell]}});
        }
        out.push_back(std::move(res));
    }
    return out;
}

/// Stabilizing noodlification for a transducer constraint: rewrite T(s,t)
/// as T(s,z) and z = t with Lang(z) set to the image of the input languages.
/// Returns nothing when the image is empty (the branch dies).
inline std::optional<NoodleResult> tr_to_st(const LangMap& lang, const TransConstraint& tc,
                                            VarPool& pool) {
    Nfa img = reduce(image(*tc.t, term_language(lang, tc.in)));
    if (is_empty(img)) return std::nullopt;
    VarId z = pool.fresh("img");
    NoodleResult res;
    res.lang = lang;
    res.lang[z] = make_lang(std::move(img));
    res.in.push_back(Equation{{z}, tc.out});
    res.tr.push_back(TransConstraint{tc.t, tc.name, tc.in, {z}, tc.functional});
    return res;
}

/// Concatenation-eliminating noodlification for a transducer constraint.
/// The compositional transducer restricts the relation's input and output
/// by the delimited term languages; each noodle yields segment transducer
/// constraints over fresh variables with the induced binding equations.
inline std::vector<NoodleResult> tr_to_cf(const LangMap& lang, const TransConstraint& tc,
                                          VarPool& pool) {
    Nfa chain_in = term_language_delimited(lang, tc.in, delim_in);
    Nfa chain_out = term_language_delimited(lang, tc.out, delim_out);
    Transducer stage1 = sync_delimited(lift(chain_in), *tc.t, 1, 1);
    Transducer tplus = sync_delimited(stage1, lift(chain_out), 2, 1);

    std::vector<NoodleResult> out;
    int noodle_idx = 0;
    for (const Noodle& noodle : split_into_noodles(tplus)) {
        NoodleResult res;
        res.lang = lang;
        std::vector<VarId> zs, zbs;
        bool dead = false;
        for (const auto& seg : noodle.segments) {
            Nfa in_lang = reduce(to_nfa(project_out(seg.machine, {2})));
            Nfa out_lang = reduce(to_nfa(project_out(seg.machine, {1})));
            if (is_empty(in_lang) || is_empty(out_lang)) {
                dead = true;
                break;
            }
            VarId z = pool.fresh("z");
            VarId zb = pool.fresh("zb");
            zs.push_back(z);
            zbs.push_back(zb);
            res.lang[z] = make_lang(std::move(in_lang));
            res.lang[zb] = make_lang(std::move(out_lang));
            std::string seg_name = tc.name + "[" + std::to_string(seg.level_in) + "," +
                                   std::to_string(seg.level_out) + "]";
            res.tr.push_back(TransConstraint{
                std::make_shared<const Transducer>(normalize(seg.machine)), seg_name, {z}, {zb},
                false});
        }
        if (dead) continue;
        for (size_t ell = 0; ell < tc.in.size(); ++ell) {
            Term pieces;
            for (size_t r = 0; r < noodle.segments.size(); ++r)
                if (noodle.segments[r].level_in == ell) pieces.push_back(zs[r]);
            res.in.push_back(Equation{{tc.in[ell]}, pieces});
        }
        for (size_t ell = 0; ell < tc.out.size(); ++ell) {
            Term pieces;
            for (size_t r = 0; r < noodle.segments.size(); ++r)
                if (noodle.segments[r].level_out == ell) pieces.push_back(zbs[r]);
            res.out.push_back(Equation{pieces, {tc.out[ell]}});
        }
        out.push_back(std::move(res));
        ++noodle_idx;
    }
    return out;
}

}  // namespace strand

#endif
