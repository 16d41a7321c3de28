// transducer.hpp -- n-tape finite transducers and the relational algebra on
// them: synchronization (plain and delimiter-preserving), projection,
// composition, image, inversion, bounded functionality checking.

#ifndef STRAND_TRANSDUCER_HPP
#define STRAND_TRANSDUCER_HPP

#include <cassert>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strand/nfa.hpp"

namespace strand {

/// Per-tape symbols of one transition. Invariant: if a delimiter appears on
/// one tape, it is the same delimiter on all tapes.
using TapeLabel = std::vector<Symbol>;

inline bool label_is_delim(const TapeLabel& l) { return !l.empty() && is_delimiter(l[0]); }

inline void check_label(const TapeLabel& l) {
    bool delim = false;
    for (Symbol s : l)
        if (is_delimiter(s)) delim = true;
    if (delim) {
        for (Symbol s : l)
            if (s != l[0]) throw std::logic_error("delimiter must appear on all tapes of a transition");
    }
}

struct TdTransition {
    State src;
    TapeLabel label;
    State dst;

    auto operator<=>(const TdTransition&) const = default;
};

struct Transducer {
    uint32_t arity = 1;
    uint32_t num_states = 0;
    std::vector<TdTransition> transitions;
    std::vector<State> initial;
    std::vector<State> final;

    State add_state() { return num_states++; }

    void add_transition(State src, TapeLabel label, State dst) {
        assert(src < num_states && dst < num_states);
        assert(label.size() == arity);
        check_label(label);
        transitions.push_back({src, std::move(label), dst});
    }

    void make_initial(State q) { Nfa::insert_sorted(initial, q); }
    void make_final(State q) { Nfa::insert_sorted(final, q); }

    bool is_initial(State q) const { return std::binary_search(initial.begin(), initial.end(), q); }
    bool is_final(State q) const { return std::binary_search(final.begin(), final.end(), q); }

    bool has_delimiters() const {
        for (const auto& t : transitions)
            if (label_is_delim(t.label)) return true;
        return false;
    }
};

namespace detail {

inline std::vector<std::vector<size_t>> forward_index(const Transducer& t) {
    std::vector<std::vector<size_t>> idx(t.num_states);
    for (size_t i = 0; i < t.transitions.size(); ++i) idx[t.transitions[i].src].push_back(i);
    return idx;
}

inline bool label_all_eps(const TapeLabel& l) {
    for (Symbol s : l)
        if (s != eps_symbol) return false;
    return true;
}

}  // namespace detail

/// Drop all-epsilon self-loops and unreachable/dead states.
inline Transducer normalize(const Transducer& t) {
    Transducer tmp = t;
    std::erase_if(tmp.transitions, [](const TdTransition& tr) {
        return tr.src == tr.dst && detail::label_all_eps(tr.label);
    });
    // trim via the nfa machinery on the shape
    Nfa shape;
    shape.num_states = tmp.num_states;
    for (const auto& tr : tmp.transitions) shape.transitions.push_back({tr.src, 0, tr.dst});
    shape.initial = tmp.initial;
    shape.final = tmp.final;
    auto fwd = detail::reachable_from(shape, shape.initial, true);
    auto bwd = detail::reachable_from(shape, shape.final, false);
    std::vector<State> remap(tmp.num_states, UINT32_MAX);
    Transducer out;
    out.arity = tmp.arity;
    for (State q = 0; q < tmp.num_states; ++q)
        if (fwd[q] && bwd[q]) remap[q] = out.add_state();
    for (const auto& tr : tmp.transitions)
        if (remap[tr.src] != UINT32_MAX && remap[tr.dst] != UINT32_MAX)
            out.add_transition(remap[tr.src], tr.label, remap[tr.dst]);
    for (State q : tmp.initial)
        if (remap[q] != UINT32_MAX) out.make_initial(remap[q]);
    for (State q : tmp.final)
        if (remap[q] != UINT32_MAX) out.make_final(remap[q]);
    return out;
}

/// Lift a regular language to a 1-tape transducer.
inline Transducer lift(const Nfa& a) {
    Transducer t;
    t.arity = 1;
    t.num_states = a.num_states;
    for (const auto& tr : a.transitions) t.transitions.push_back({tr.src, {tr.sym}, tr.dst});
    t.initial = a.initial;
    t.final = a.final;
    return t;
}

inline Nfa to_nfa(const Transducer& t) {
    assert(t.arity == 1);
    Nfa a;
    a.num_states = t.num_states;
    for (const auto& tr : t.transitions) a.transitions.push_back({tr.src, tr.label[0], tr.dst});
    a.initial = t.initial;
    a.final = t.final;
    return a;
}

inline bool is_empty(const Transducer& t) {
    Nfa shape;
    shape.num_states = t.num_states;
    for (const auto& tr : t.transitions) shape.transitions.push_back({tr.src, 0, tr.dst});
    shape.initial = t.initial;
    shape.final = t.final;
    return is_empty(shape);
}

namespace detail {

/// Shared product machinery for sync and sync_delimited. Tape i of t is
/// synchronized with tape j of u; the result label is t's label minus tape i
/// followed by u's full label. With `delimited`, delimiter transitions of
/// either operand pass through, broadcast to all result tapes.
inline Transducer sync_impl(const Transducer& t, const Transducer& u, uint32_t i, uint32_t j,
                            bool delimited) {
    assert(1 <= i && i <= t.arity && 1 <= j && j <= u.arity);
    const uint32_t out_arity = t.arity + u.arity - 1;
    Transducer out;
    out.arity = out_arity;

    std::map<std::pair<State, State>, State> ids;
    std::deque<std::pair<State, State>> work;
    auto ft = forward_index(t);
    auto fu = forward_index(u);

    auto get = [&](State p, State q) {
        auto [it, fresh] = ids.try_emplace({p, q}, 0);
        if (fresh) {
            it->second = out.add_state();
            work.push_back({p, q});
        }
        return it->second;
    };

    auto merged = [&](const TapeLabel& x, const TapeLabel& y) {
        TapeLabel l;
        l.reserve(out_arity);
        for (uint32_t k = 0; k < t.arity; ++k)
            if (k + 1 != i) l.push_back(x[k]);
        for (uint32_t k = 0; k < u.arity; ++k) l.push_back(y[k]);
        return l;
    };

    const TapeLabel eps_t(t.arity, eps_symbol);
    const TapeLabel eps_u(u.arity, eps_symbol);

    for (State p : t.initial)
        for (State q : u.initial) out.make_initial(get(p, q));

    while (!work.empty()) {
        auto [p, q] = work.front();
        work.pop_front();
        State here = ids[{p, q}];
        if (t.is_final(p) && u.is_final(q)) out.make_final(here);

        for (size_t a : ft[p]) {
            const auto& x = t.transitions[a];
            if (label_is_delim(x.label)) {
                if (delimited) out.add_transition(here, TapeLabel(out_arity, x.label[0]), get(x.dst, q));
                continue;
            }
            if (x.label[i - 1] == eps_symbol) {
                out.add_transition(here, merged(x.label, eps_u), get(x.dst, q));
            }
            for (size_t b : fu[q]) {
                const auto& y = u.transitions[b];
                if (label_is_delim(y.label)) continue;
                if (x.label[i - 1] == y.label[j - 1]) {
                    out.add_transition(here, merged(x.label, y.label), get(x.dst, y.dst));
                }
            }
        }
        for (size_t b : fu[q]) {
            const auto& y = u.transitions[b];
            if (label_is_delim(y.label)) {
                if (delimited) out.add_transition(here, TapeLabel(out_arity, y.label[0]), get(p, y.dst));
                continue;
            }
            if (y.label[j - 1] == eps_symbol) {
                out.add_transition(here, merged(eps_t, y.label), get(p, y.dst));
            }
        }
    }
    return normalize(out);
}

}  // namespace detail

/// Relational synchronization at tapes (i, j); operands must be
/// delimiter-free.
inline Transducer sync(const Transducer& t, const Transducer& u, uint32_t i, uint32_t j) {
    assert(!t.has_delimiters() && !u.has_delimiters());
    return detail::sync_impl(t, u, i, j, false);
}

/// Synchronization of delimited transducers; delimiters of both operands are
/// preserved, broadcast to every tape of the result.
inline Transducer sync_delimited(const Transducer& t, const Transducer& u, uint32_t i, uint32_t j) {
    return detail::sync_impl(t, u, i, j, true);
}

/// Erase the given tape positions (1-based) from every transition.
inline Transducer project_out(const Transducer& t, const std::set<uint32_t>& tapes) {
    assert(tapes.size() < t.arity);
    Transducer out;
    out.arity = t.arity - static_cast<uint32_t>(tapes.size());
    out.num_states = t.num_states;
    out.initial = t.initial;
    out.final = t.final;
    for (const auto& tr : t.transitions) {
        TapeLabel l;
        if (label_is_delim(tr.label)) {
            l.assign(out.arity, tr.label[0]);
        } else {
            for (uint32_t k = 0; k < t.arity; ++k)
                if (!tapes.count(k + 1)) l.push_back(tr.label[k]);
        }
        out.transitions.push_back({tr.src, std::move(l), tr.dst});
    }
    return normalize(out);
}

/// Composition: synchronize tape i of t with tape j of u, then eliminate the
/// shared position (which sits at index n+j-1 of the synchronization).
inline Transducer compose(const Transducer& t, const Transducer& u, uint32_t i, uint32_t j) {
    Transducer s = sync(t, u, i, j);
    return project_out(s, {t.arity + j - 1});
}

/// Image of a regular language under a binary transducer.
inline Nfa image(const Transducer& t, const Nfa& s) {
    assert(t.arity == 2);
    Transducer restricted = sync(lift(s), t, 1, 1);  // tapes: (input, output)
    return trim(to_nfa(project_out(restricted, {1})));
}

/// Swap the two tapes.
inline Transducer inverse(const Transducer& t) {
    assert(t.arity == 2);
    Transducer out = t;
    for (auto& tr : out.transitions) std::swap(tr.label[0], tr.label[1]);
    return out;
}

/// Identity relation on Sigma*.
inline Transducer identity_transducer(const Alphabet& sigma) {
    Transducer t;
    t.arity = 2;
    State q = t.add_state();
    t.make_initial(q);
    t.make_final(q);
    for (Symbol s : sigma.letters()) t.add_transition(q, {s, s}, q);
    return t;
}

/// Finite relation given as a list of word pairs.
inline Transducer pairs_transducer(const std::vector<std::pair<Word, Word>>& pairs) {
    Transducer t;
    t.arity = 2;
    State start = t.add_state();
    State end = t.add_state();
    t.make_initial(start);
    t.make_final(end);
    for (const auto& [u, v] : pairs) {
        State q = start;
        size_t n = std::max(u.size(), v.size());
        if (n == 0) {
            t.add_transition(q, {eps_symbol, eps_symbol}, end);
            continue;
        }
        for (size_t k = 0; k < n; ++k) {
            State r = (k + 1 == n) ? end : t.add_state();
            Symbol a = k < u.size() ? u[k] : eps_symbol;
            Symbol b = k < v.size() ? v[k] : eps_symbol;
            t.add_transition(q, {a, b}, r);
            q = r;
        }
    }
    return t;
}

/// Does the transducer accept the given word tuple.
inline bool accepts_tuple(const Transducer& t, const std::vector<Word>& words) {
    assert(words.size() == t.arity);
    auto fwd = detail::forward_index(t);
    using Conf = std::vector<uint32_t>;  // per-tape positions, then state
    std::set<Conf> seen;
    std::deque<Conf> work;
    auto push = [&](Conf c) {
        if (seen.insert(c).second) work.push_back(std::move(c));
    };
    for (State q : t.initial) {
        Conf c(t.arity + 1, 0);
        c[t.arity] = q;
        push(std::move(c));
    }
    while (!work.empty()) {
        Conf c = work.front();
        work.pop_front();
        State q = c[t.arity];
        bool at_end = true;
        for (uint32_t k = 0; k < t.arity; ++k)
            if (c[k] != words[k].size()) at_end = false;
        if (at_end && t.is_final(q)) return true;
        for (size_t i : fwd[q]) {
            const auto& tr = t.transitions[i];
            if (label_is_delim(tr.label)) continue;
            Conf next = c;
            bool ok = true;
            for (uint32_t k = 0; k < t.arity; ++k) {
                Symbol s = tr.label[k];
                if (s == eps_symbol) continue;
                if (next[k] >= words[k].size() || words[k][next[k]] != s) {
                    ok = false;
                    break;
                }
                ++next[k];
            }
            if (!ok) continue;
            next[t.arity] = tr.dst;
            push(std::move(next));
        }
    }
    return false;
}

/// Enumerate the accepted tuples with every component of length <= max_len.
inline std::set<std::vector<Word>> enumerate_relation(const Transducer& t, size_t max_len) {
    auto fwd = detail::forward_index(t);
    using Conf = std::pair<State, std::vector<Word>>;
    std::set<Conf> seen;
    std::deque<Conf> work;
    std::set<std::vector<Word>> out;
    for (State q : t.initial) {
        Conf c{q, std::vector<Word>(t.arity)};
        if (seen.insert(c).second) work.push_back(c);
    }
    while (!work.empty()) {
        auto [q, words] = work.front();
        work.pop_front();
        if (t.is_final(q)) out.insert(words);
        for (size_t i : fwd[q]) {
            const auto& tr = t.transitions[i];
            if (label_is_delim(tr.label)) continue;
            auto next = words;
            bool ok = true;
            for (uint32_t k = 0; k < t.arity; ++k) {
                if (tr.label[k] == eps_symbol) continue;
                if (next[k].size() >= max_len) {
                    ok = false;
                    break;
                }
                next[k].push_back(tr.label[k]);
            }
            if (!ok) continue;
            Conf c{tr.dst, std::move(next)};
            if (seen.insert(c).second) work.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Functionality checking
// ---------------------------------------------------------------------------

enum class Functionality { Functional, NonFunctional, Unknown };

struct FunctionalityResult {
    Functionality kind = Functionality::Unknown;
    Word witness;  // input with two distinct outputs, for NonFunctional
};

/// Bounded squaring test: pair two copies of the transducer on the same
/// input and track the delay between the two outputs. A divergence in a
/// trimmed pairing witnesses non-functionality; if the configuration graph
/// closes with delays within the bound, the relation is a partial function.
inline FunctionalityResult check_functional(const Transducer& t, size_t bound = 8) {
    assert(t.arity == 2);
    // sync eliminates tape 1 of the first operand and appends the second
    // operand whole, so the pairing has tapes (out1, input, out2)
    Transducer sq = normalize(sync(t, t, 1, 1));
    if (sq.num_states == 0) return {Functionality::Functional, {}};
    auto fwd = detail::forward_index(sq);

    // delay: at most one of the two pending output words is nonempty
    struct Conf {
        State q;
        Word pend1, pend2;
        auto operator<=>(const Conf&) const = default;
    };
    struct Item {
        Conf conf;
        size_t parent;
        Symbol in_sym;
    };
    std::vector<Item> items;
    std::set<Conf> seen;
    std::deque<size_t> work;
    for (State q : sq.initial) {
        Conf c{q, {}, {}};
        if (seen.insert(c).second) {
            items.push_back({c, SIZE_MAX, eps_symbol});
            work.push_back(items.size() - 1);
        }
    }
    bool exceeded = false;

    auto input_of = [&](size_t idx) {
        Word w;
        for (size_t i = idx; i != SIZE_MAX; i = items[i].parent)
            if (items[i].in_sym != eps_symbol) w.push_back(items[i].in_sym);
        std::reverse(w.begin(), w.end());
        return w;
    };

    while (!work.empty()) {
        size_t cur = work.front();
        work.pop_front();
        Conf c = items[cur].conf;
        if (sq.is_final(c.q) && (!c.pend1.empty() || !c.pend2.empty())) {
            return {Functionality::NonFunctional, input_of(cur)};
        }
        for (size_t i : fwd[c.q]) {
            const auto& tr = sq.transitions[i];
            Conf n = c;
            n.q = tr.dst;
            if (tr.label[0] != eps_symbol) n.pend1.push_back(tr.label[0]);
            if (tr.label[2] != eps_symbol) n.pend2.push_back(tr.label[2]);
            size_t k = 0;
            while (k < n.pend1.size() && k < n.pend2.size() && n.pend1[k] == n.pend2[k]) ++k;
            n.pend1.erase(n.pend1.begin(), n.pend1.begin() + k);
            n.pend2.erase(n.pend2.begin(), n.pend2.begin() + k);
            if (!n.pend1.empty() && !n.pend2.empty()) {
                // outputs already differ; the pairing is trimmed, so both
                // runs complete on a common input
                items.push_back({n, cur, tr.label[1]});
                return {Functionality::NonFunctional, input_of(items.size() - 1)};
            }
            if (n.pend1.size() > bound || n.pend2.size() > bound) {
                exceeded = true;
                continue;
            }
            if (seen.insert(n).second) {
                items.push_back({n, cur, tr.label[1]});
                work.push_back(items.size() - 1);
            }
        }
    }
    if (exceeded) return {Functionality::Unknown, {}};
    return {Functionality::Functional, {}};
}

/// Sufficient syntactic condition for the relation being a homomorphism:
/// a single hub state (initial and final) whose outgoing transitions each
/// read one letter, with all other transitions reading epsilon, so that
/// every hub-to-hub loop consumes exactly one input symbol.
inline bool is_homomorphism_syntactic(const Transducer& t0) {
    if (t0.arity != 2 || t0.has_delimiters()) return false;
    Transducer t = normalize(t0);
    if (t.num_states == 0) return false;
    if (t.initial.size() != 1) return false;
    State hub = t.initial[0];
    if (t.final.size() != 1 || t.final[0] != hub) return false;
    for (const auto& tr : t.transitions) {
        if (tr.src == hub) {
            if (!is_letter(tr.label[0])) return false;
        } else {
            if (tr.label[0] != eps_symbol) return false;
        }
    }
    // emission chains must be simple: each non-hub state has exactly one
    // outgoing transition and cycles may pass only through the hub
    auto fwd = detail::forward_index(t);
    for (State q = 0; q < t.num_states; ++q) {
        if (q == hub) continue;
        if (fwd[q].size() != 1) return false;
    }
    std::set<State> on_path;
    for (const auto& tr : t.transitions) {
        if (tr.src == hub) continue;
        if (tr.dst != hub && tr.dst == tr.src) return false;
    }
    // no cycle among non-hub states: follow the unique successor chain
    for (State q = 0; q < t.num_states; ++q) {
        if (q == hub) continue;
        State cur = q;
        size_t steps = 0;
        while (cur != hub) {
            if (steps++ > t.num_states) return false;
            cur = t.transitions[fwd[cur][0]].dst;
        }
    }
    return true;
}

/// Word-map homomorphism (each letter mapped to a word), as a hub transducer.
inline Transducer hom_transducer(const std::map<Symbol, Word>& rules) {
    Transducer t;
    t.arity = 2;
    State hub = t.add_state();
    t.make_initial(hub);
    t.make_final(hub);
    for (const auto& [a, w] : rules) {
        if (w.empty()) {
            t.add_transition(hub, {a, eps_symbol}, hub);
            continue;
        }
        State q = hub;
        for (size_t k = 0; k < w.size(); ++k) {
            State r = (k + 1 == w.size()) ? hub : t.add_state();
            t.add_transition(q, {k == 0 ? a : eps_symbol, w[k]}, r);
            q = r;
        }
    }
    return t;
}

/// Simulation-based reduction: intern labels as opaque symbols, quotient the
/// underlying automaton, and map the labels back. Relation-preserving.
inline Transducer reduce(const Transducer& t) {
    std::map<TapeLabel, Symbol> ids;
    std::vector<TapeLabel> labels;
    Nfa shape;
    shape.num_states = t.num_states;
    for (const auto& tr : t.transitions) {
        auto [it, fresh] = ids.try_emplace(tr.label, static_cast<Symbol>(labels.size()));
        if (fresh) labels.push_back(tr.label);
        shape.transitions.push_back({tr.src, it->second, tr.dst});
    }
    shape.initial = t.initial;
    shape.final = t.final;
    Nfa red = reduce(shape);
    Transducer out;
    out.arity = t.arity;
    out.num_states = red.num_states;
    for (const auto& tr : red.transitions) out.transitions.push_back({tr.src, labels[tr.sym], tr.dst});
    out.initial = red.initial;
    out.final = red.final;
    return out;
}

/// Replace delimiter transitions by all-epsilon labels.
inline Transducer erase_delimiters(const Transducer& t) {
    Transducer out = t;
    for (auto& tr : out.transitions)
        if (label_is_delim(tr.label)) tr.label.assign(t.arity, eps_symbol);
    return normalize(out);
}

inline std::string serialize(const Transducer& t) {
    std::ostringstream os;
    os << "transducer arity " << t.arity << " states " << t.num_states << "\n";
    os << "initial";
    for (State q : t.initial) os << ' ' << q;
    os << "\nfinal";
    for (State q : t.final) os << ' ' << q;
    os << "\n";
    auto ts = t.transitions;
    std::sort(ts.begin(), ts.end());
    for (const auto& tr : ts) {
        os << tr.src << ' ';
        for (uint32_t k = 0; k < t.arity; ++k) {
            if (k) os << '/';
            os << symbol_name(tr.label[k]);
        }
        os << ' ' << tr.dst << "\n";
    }
    return os.str();
}

}  // namespace strand

#endif
