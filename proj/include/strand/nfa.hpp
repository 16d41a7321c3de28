// nfa.hpp -- nondeterministic finite automata over a configurable alphabet.
//
// One automaton type serves plain regular languages as well as the delimited
// languages built by the noodlification products: delimiters are ordinary
// symbols structurally, only delim_product and the noodle splitter treat
// them specially.

#ifndef STRAND_NFA_HPP
#define STRAND_NFA_HPP

#include <cassert>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strand/alphabet.hpp"
#include "strand/regex.hpp"

namespace strand {

using State = uint32_t;

struct NfaTransition {
    State src;
    Symbol sym;
    State dst;

    auto operator<=>(const NfaTransition&) const = default;
};

struct Nfa {
    uint32_t num_states = 0;
    std::vector<NfaTransition> transitions;
    std::vector<State> initial;  // sorted, unique
    std::vector<State> final;    // sorted, unique

    State add_state() { return num_states++; }

    void add_transition(State src, Symbol sym, State dst) {
        assert(src < num_states && dst < num_states);
        transitions.push_back({src, sym, dst});
    }

    void make_initial(State q) { insert_sorted(initial, q); }
    void make_final(State q) { insert_sorted(final, q); }

    bool is_initial(State q) const { return std::binary_search(initial.begin(), initial.end(), q); }
    bool is_final(State q) const { return std::binary_search(final.begin(), final.end(), q); }

    bool has_delimiters() const {
        for (const auto& t : transitions)
            if (is_delimiter(t.sym)) return true;
        return false;
    }

    std::set<Symbol> letters_used() const {
        std::set<Symbol> out;
        for (const auto& t : transitions)
            if (is_letter(t.sym)) out.insert(t.sym);
        return out;
    }

    static void insert_sorted(std::vector<State>& v, State q) {
        auto it = std::lower_bound(v.begin(), v.end(), q);
        if (it == v.end() || *it != q) v.insert(it, q);
    }
};

namespace detail {

inline std::vector<std::vector<size_t>> forward_index(const Nfa& a) {
    std::vector<std::vector<size_t>> idx(a.num_states);
    for (size_t i = 0; i < a.transitions.size(); ++i) idx[a.transitions[i].src].push_back(i);
    return idx;
}

inline std::vector<std::vector<size_t>> backward_index(const Nfa& a) {
    std::vector<std::vector<size_t>> idx(a.num_states);
    for (size_t i = 0; i < a.transitions.size(); ++i) idx[a.transitions[i].dst].push_back(i);
    return idx;
}

inline std::vector<bool> reachable_from(const Nfa& a, const std::vector<State>& seeds, bool forward) {
    auto idx = forward ? forward_index(a) : backward_index(a);
    std::vector<bool> seen(a.num_states, false);
    std::deque<State> work(seeds.begin(), seeds.end());
    for (State q : seeds) seen[q] = true;
    while (!work.empty()) {
        State q = work.front();
        work.pop_front();
        for (size_t i : idx[q]) {
            State next = forward ? a.transitions[i].dst : a.transitions[i].src;
            if (!seen[next]) {
                seen[next] = true;
                work.push_back(next);
            }
        }
    }
    return seen;
}

/// Epsilon closure of a set of states, as a sorted vector.
inline std::vector<State> eps_closure(const Nfa& a, std::vector<State> states,
                                      const std::vector<std::vector<size_t>>& fwd) {
    std::vector<bool> in(a.num_states, false);
    std::deque<State> work;
    for (State q : states) {
        if (!in[q]) {
            in[q] = true;
            work.push_back(q);
        }
    }
    while (!work.empty()) {
        State q = work.front();
        work.pop_front();
        for (size_t i : fwd[q]) {
            const auto& t = a.transitions[i];
            if (t.sym == eps_symbol && !in[t.dst]) {
                in[t.dst] = true;
                work.push_back(t.dst);
            }
        }
    }
    std::vector<State> out;
    for (State q = 0; q < a.num_states; ++q)
        if (in[q]) out.push_back(q);
    return out;
}

}  // namespace detail

/// Restrict to states lying on some initial-to-final path.
inline Nfa trim(const Nfa& a) {
    auto fwd = detail::reachable_from(a, a.initial, true);
    auto bwd = detail::reachable_from(a, a.final, false);
    std::vector<State> remap(a.num_states, UINT32_MAX);
    Nfa out;
    for (State q = 0; q < a.num_states; ++q) {
        if (fwd[q] && bwd[q]) remap[q] = out.add_state();
    }
    for (const auto& t : a.transitions) {
        if (remap[t.src] != UINT32_MAX && remap[t.dst] != UINT32_MAX)
            out.add_transition(remap[t.src], t.sym, remap[t.dst]);
    }
    for (State q : a.initial)
        if (remap[q] != UINT32_MAX) out.make_initial(remap[q]);
    for (State q : a.final)
        if (remap[q] != UINT32_MAX) out.make_final(remap[q]);
    return out;
}

inline bool is_empty(const Nfa& a) {
    auto fwd = detail::reachable_from(a, a.initial, true);
    for (State q : a.final)
        if (fwd[q]) return false;
    return true;
}

/// Word membership; delimiters in the word are matched like any symbol.
inline bool member(const Nfa& a, const Word& w) {
    auto fwd = detail::forward_index(a);
    std::vector<State> cur = detail::eps_closure(a, a.initial, fwd);
    for (Symbol s : w) {
        std::vector<State> next;
        for (State q : cur) {
            for (size_t i : fwd[q]) {
                const auto& t = a.transitions[i];
                if (t.sym == s) Nfa::insert_sorted(next, t.dst);
            }
        }
        cur = detail::eps_closure(a, std::move(next), fwd);
        if (cur.empty()) return false;
    }
    for (State q : cur)
        if (a.is_final(q)) return true;
    return false;
}

inline Nfa nfa_empty() { return Nfa{}; }

inline Nfa nfa_epsilon() {
    Nfa a;
    State q = a.add_state();
    a.make_initial(q);
    a.make_final(q);
    return a;
}

inline Nfa nfa_word(const Word& w) {
    Nfa a;
    State q = a.add_state();
    a.make_initial(q);
    for (Symbol s : w) {
        State r = a.add_state();
        a.add_transition(q, s, r);
        q = r;
    }
    a.make_final(q);
    return a;
}

inline Nfa sigma_star(const Alphabet& sigma) {
    Nfa a;
    State q = a.add_state();
    a.make_initial(q);
    a.make_final(q);
    for (Symbol s : sigma.letters()) a.add_transition(q, s, q);
    return a;
}

namespace detail {

inline void append_disjoint(Nfa& into, const Nfa& other, State& offset) {
    offset = into.num_states;
    into.num_states += other.num_states;
    for (const auto& t : other.transitions)
        into.transitions.push_back({t.src + offset, t.sym, t.dst + offset});
}

}  // namespace detail

/// Concatenation with a linking symbol (epsilon gives plain concatenation).
inline Nfa link_concat(const Nfa& a, Symbol link, const Nfa& b) {
    Nfa out = a;
    out.final.clear();
    State off = 0;
    detail::append_disjoint(out, b, off);
    for (State f : a.final)
        for (State i : b.initial) out.add_transition(f, link, i + off);
    for (State f : b.final) out.make_final(f + off);
    return out;
}

inline Nfa concat(const Nfa& a, const Nfa& b) { return link_concat(a, eps_symbol, b); }

/// #-concatenation: language L(a) . sharp . L(b) via fresh linking transitions.
inline Nfa delim_concat(const Nfa& a, Symbol sharp, const Nfa& b) {
    assert(is_delimiter(sharp));
    return link_concat(a, sharp, b);
}

inline Nfa nfa_union(const Nfa& a, const Nfa& b) {
    Nfa out = a;
    State off = 0;
    detail::append_disjoint(out, b, off);
    for (State q : b.initial) out.make_initial(q + off);
    for (State q : b.final) out.make_final(q + off);
    return out;
}

/// Thompson-style construction. Symbols must lie in the given alphabet.
inline Nfa from_regex(const RegexPtr& re, const Alphabet& sigma) {
    using K = Regex::Kind;
    switch (re->kind) {
        case K::Empty:
            return nfa_empty();
        case K::Epsilon:
            return nfa_epsilon();
        case K::Chars: {
            Nfa a;
            State q = a.add_state(), r = a.add_state();
            a.make_initial(q);
            a.make_final(r);
            for (Symbol s : re->chars) {
                if (!sigma.contains(s))
                    throw AlphabetError("regex symbol '" + symbol_name(s) + "' outside the alphabet");
                a.add_transition(q, s, r);
            }
            return a;
        }
        case K::Concat: {
            Nfa a = nfa_epsilon();
            for (const auto& c : re->children) a = concat(a, from_regex(c, sigma));
            return a;
        }
        case K::Union: {
            Nfa a = nfa_empty();
            for (const auto& c : re->children) a = nfa_union(a, from_regex(c, sigma));
            return a;
        }
        case K::Star: {
            Nfa body = from_regex(re->children[0], sigma);
            Nfa out;
            State hub = out.add_state();
            out.make_initial(hub);
            out.make_final(hub);
            State off = 0;
            detail::append_disjoint(out, body, off);
            for (State i : body.initial) out.add_transition(hub, eps_symbol, i + off);
            for (State f : body.final) out.add_transition(f + off, eps_symbol, hub);
            return out;
        }
        case K::Plus: {
            Nfa body = from_regex(re->children[0], sigma);
            Nfa loop = body;
            for (State f : body.final)
                for (State i : body.initial) loop.add_transition(f, eps_symbol, i);
            return loop;
        }
    }
    return nfa_empty();
}

inline Nfa from_regex(const std::string& text, const Alphabet& sigma) {
    return from_regex(parse_regex(text), sigma);
}

/// Product automaton synchronizing on identical symbols; epsilon moves
/// interleave freely. Delimiters are synchronized like ordinary symbols.
inline Nfa intersect(const Nfa& a, const Nfa& b) {
    Nfa out;
    std::map<std::pair<State, State>, State> ids;
    std::deque<std::pair<State, State>> work;
    auto fa = detail::forward_index(a);
    auto fb = detail::forward_index(b);

    auto get = [&](State p, State q) {
        auto [it, fresh] = ids.try_emplace({p, q}, 0);
        if (fresh) {
            it->second = out.add_state();
            work.push_back({p, q});
        }
        return it->second;
    };

    for (State p : a.initial)
        for (State q : b.initial) out.make_initial(get(p, q));

    while (!work.empty()) {
        auto [p, q] = work.front();
        work.pop_front();
        State here = ids[{p, q}];
        if (a.is_final(p) && b.is_final(q)) out.make_final(here);
        for (size_t i : fa[p]) {
            const auto& t = a.transitions[i];
            if (t.sym == eps_symbol) {
                out.add_transition(here, eps_symbol, get(t.dst, q));
                continue;
            }
            for (size_t j : fb[q]) {
                const auto& u = b.transitions[j];
                if (u.sym == t.sym) out.add_transition(here, t.sym, get(t.dst, u.dst));
            }
        }
        for (size_t j : fb[q]) {
            const auto& u = b.transitions[j];
            if (u.sym == eps_symbol) out.add_transition(here, eps_symbol, get(p, u.dst));
        }
    }
    return trim(out);
}

/// Delimiter-preserving product: symbols synchronize, delimiters of either
/// operand pass through unsynchronized (they act as epsilon for the other
/// operand but are preserved in the product word).
inline Nfa delim_product(const Nfa& a, const Nfa& b, const std::set<Symbol>& delims) {
    Nfa out;
    std::map<std::pair<State, State>, State> ids;
    std::deque<std::pair<State, State>> work;
    auto fa = detail::forward_index(a);
    auto fb = detail::forward_index(b);

    auto get = [&](State p, State q) {
        auto [it, fresh] = ids.try_emplace({p, q}, 0);
        if (fresh) {
            it->second = out.add_state();
            work.push_back({p, q});
        }
        return it->second;
    };

    for (State p : a.initial)
        for (State q : b.initial) out.make_initial(get(p, q));

    while (!work.empty()) {
        auto [p, q] = work.front();
        work.pop_front();
        State here = ids[{p, q}];
        if (a.is_final(p) && b.is_final(q)) out.make_final(here);
        for (size_t i : fa[p]) {
            const auto& t = a.transitions[i];
            if (t.sym == eps_symbol || delims.count(t.sym)) {
                out.add_transition(here, t.sym, get(t.dst, q));
                continue;
            }
            for (size_t j : fb[q]) {
                const auto& u = b.transitions[j];
                if (u.sym == t.sym) out.add_transition(here, t.sym, get(t.dst, u.dst));
            }
        }
        for (size_t j : fb[q]) {
            const auto& u = b.transitions[j];
            if (u.sym == eps_symbol || delims.count(u.sym))
                out.add_transition(here, u.sym, get(p, u.dst));
        }
    }
    return trim(out);
}

/// Subset construction with a state cap; nullopt when the cap is hit.
/// Input must be delimiter-free; the result has no epsilon transitions and
/// exactly one initial state.
inline std::optional<Nfa> determinize_bounded(const Nfa& a, size_t max_states) {
    assert(!a.has_delimiters());
    auto fwd = detail::forward_index(a);
    std::map<std::vector<State>, State> ids;
    std::deque<std::vector<State>> work;
    Nfa out;

    auto get = [&](std::vector<State> set) {
        auto [it, fresh] = ids.try_emplace(set, 0);
        if (fresh) {
            it->second = out.add_state();
            work.push_back(it->first);
        }
        return it->second;
    };

    std::vector<State> start = detail::eps_closure(a, a.initial, fwd);
    out.make_initial(get(start));

    while (!work.empty()) {
        if (out.num_states > max_states) return std::nullopt;
        std::vector<State> cur = work.front();
        work.pop_front();
        State here = ids[cur];
        bool fin = false;
        std::map<Symbol, std::vector<State>> post;
        for (State q : cur) {
            if (a.is_final(q)) fin = true;
            for (size_t i : fwd[q]) {
                const auto& t = a.transitions[i];
                if (t.sym != eps_symbol) Nfa::insert_sorted(post[t.sym], t.dst);
            }
        }
        if (fin) out.make_final(here);
        for (auto& [sym, dsts] : post) {
            out.add_transition(here, sym, get(detail::eps_closure(a, std::move(dsts), fwd)));
        }
    }
    return out;
}

inline Nfa determinize(const Nfa& a) {
    auto d = determinize_bounded(a, SIZE_MAX);
    return std::move(*d);
}

namespace detail {

inline Nfa complement_over(const Nfa& a, const std::set<Symbol>& sigma) {
    Nfa d = determinize(a);
    State sink = d.add_state();
    auto fwd = forward_index(d);
    for (State q = 0; q < d.num_states; ++q) {
        std::set<Symbol> present;
        if (q != sink)
            for (size_t i : fwd[q]) present.insert(d.transitions[i].sym);
        for (Symbol s : sigma)
            if (!present.count(s)) d.add_transition(q, s, sink);
    }
    std::vector<State> new_final;
    for (State q = 0; q < d.num_states; ++q)
        if (!d.is_final(q)) new_final.push_back(q);
    d.final = std::move(new_final);
    return d;
}

}  // namespace detail

/// Complement w.r.t. Sigma* for the given alphabet.
inline Nfa complement(const Nfa& a, const Alphabet& sigma) {
    std::set<Symbol> s(sigma.letters().begin(), sigma.letters().end());
    return detail::complement_over(a, s);
}

/// True iff L(b) is included in L(a). Decided by product with the
/// complement of a over the symbols either automaton uses.
inline bool includes(const Nfa& a, const Nfa& b) {
    std::set<Symbol> sigma = a.letters_used();
    for (Symbol s : b.letters_used()) sigma.insert(s);
    Nfa comp = detail::complement_over(a, sigma);
    return is_empty(intersect(b, comp));
}

inline bool lang_equal(const Nfa& a, const Nfa& b) { return includes(a, b) && includes(b, a); }

/// The unique member of L(a), when |L(a)| = 1. Decided on the determinized,
/// trimmed automaton: a singleton language forms a simple chain.
inline std::optional<Word> is_singleton(const Nfa& a) {
    Nfa d = trim(determinize(trim(a)));
    if (d.initial.size() != 1 || d.final.empty()) return std::nullopt;
    auto fwd = detail::forward_index(d);
    Word w;
    State q = d.initial[0];
    std::vector<bool> seen(d.num_states, false);
    for (;;) {
        if (seen[q]) return std::nullopt;  // cycle: infinitely many words
        seen[q] = true;
        if (d.is_final(q)) {
            if (!fwd[q].empty()) return std::nullopt;  // longer word exists
            return w;
        }
        if (fwd[q].size() != 1) return std::nullopt;
        const auto& t = d.transitions[fwd[q][0]];
        w.push_back(t.sym);
        q = t.dst;
    }
}

/// Shortest accepted word (by BFS over symbol transitions), if any.
inline std::optional<Word> shortest_word(const Nfa& a) {
    struct Item {
        State q;
        size_t parent;
        Symbol sym;
    };
    auto fwd = detail::forward_index(a);
    std::vector<Item> items;
    std::vector<bool> seen(a.num_states, false);
    std::deque<size_t> work;
    Nfa t = a;  // closure over epsilon handled by treating eps as free move
    for (State q : a.initial) {
        if (!seen[q]) {
            seen[q] = true;
            items.push_back({q, SIZE_MAX, eps_symbol});
            work.push_back(items.size() - 1);
        }
    }
    while (!work.empty()) {
        size_t cur = work.front();
        work.pop_front();
        State q = items[cur].q;
        if (a.is_final(q)) {
            Word w;
            for (size_t i = cur; i != SIZE_MAX; i = items[i].parent)
                if (items[i].sym != eps_symbol) w.push_back(items[i].sym);
            std::reverse(w.begin(), w.end());
            return w;
        }
        for (size_t i : fwd[q]) {
            const auto& tr = a.transitions[i];
            if (!seen[tr.dst]) {
                seen[tr.dst] = true;
                items.push_back({tr.dst, cur, tr.sym});
                work.push_back(items.size() - 1);
            }
        }
    }
    return std::nullopt;
}

/// Some accepted word of exactly the given length, if any.
inline std::optional<Word> word_of_length(const Nfa& a, size_t len) {
    // layered reachability over (state, consumed) with epsilon moves free
    auto fwd = detail::forward_index(a);
    std::map<std::pair<State, size_t>, std::pair<std::pair<State, size_t>, Symbol>> parent;
    std::deque<std::pair<State, size_t>> work;
    std::set<std::pair<State, size_t>> seen;
    for (State q : a.initial) {
        auto key = std::make_pair(q, size_t{0});
        if (seen.insert(key).second) work.push_back(key);
    }
    while (!work.empty()) {
        auto [q, n] = work.front();
        work.pop_front();
        if (n == len && a.is_final(q)) {
            Word w;
            auto key = std::make_pair(q, n);
            while (parent.count(key)) {
                auto [prev, sym] = parent[key];
                if (sym != eps_symbol) w.push_back(sym);
                key = prev;
            }
            std::reverse(w.begin(), w.end());
            return w;
        }
        for (size_t i : fwd[q]) {
            const auto& t = a.transitions[i];
            size_t n2 = n + (t.sym == eps_symbol ? 0 : 1);
            if (n2 > len) continue;
            auto key = std::make_pair(t.dst, n2);
            if (seen.insert(key).second) {
                parent[key] = {{q, n}, t.sym};
                work.push_back(key);
            }
        }
    }
    return std::nullopt;
}

/// Simulation-based reduction: quotient by the maximal forward-simulation
/// equivalence, with labels (including epsilon and delimiters) treated as
/// opaque letters. Language-preserving. Large automata are only trimmed;
/// the quotient is an optimization, not a contract.
inline Nfa reduce(const Nfa& a0) {
    Nfa a = trim(a0);
    if (a.num_states == 0) return a;
    if (a.num_states > 120 && !a.has_delimiters()) {
        // products grow large while their languages stay simple; bounded
        // determinization canonicalizes them before the quotient
        if (auto d = determinize_bounded(a, std::max<size_t>(512, 2 * a.num_states))) {
            Nfa t = trim(*d);
            if (t.num_states < a.num_states) a = std::move(t);
        }
    }
    const uint32_t n = a.num_states;
    if (n > 120 || static_cast<size_t>(n) * a.transitions.size() > 60000) return a;

    // successor lists grouped by symbol
    std::vector<std::map<Symbol, std::vector<State>>> post(n);
    for (const auto& t : a.transitions) post[t.src][t.sym].push_back(t.dst);

    // sim[q][p]: p simulates q
    std::vector<std::vector<bool>> sim(n, std::vector<bool>(n, true));
    for (State q = 0; q < n; ++q)
        for (State p = 0; p < n; ++p)
            if (a.is_final(q) && !a.is_final(p)) sim[q][p] = false;

    bool changed = true;
    while (changed) {
        changed = false;
        for (State q = 0; q < n; ++q) {
            for (State p = 0; p < n; ++p) {
                if (!sim[q][p]) continue;
                bool ok = true;
                for (const auto& [sym, dsts] : post[q]) {
                    auto it = post[p].find(sym);
                    if (it == post[p].end()) {
                        ok = false;
                        break;
                    }
                    for (State qd : dsts) {
                        bool matched = false;
                        for (State pd : it->second) {
                            if (sim[qd][pd]) {
                                matched = true;
                                break;
                            }
                        }
                        if (!matched) {
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) break;
                }
                if (!ok) {
                    sim[q][p] = false;
                    changed = true;
                }
            }
        }
    }

    // merge mutually similar states
    std::vector<State> cls(n, UINT32_MAX);
    State next = 0;
    for (State q = 0; q < n; ++q) {
        if (cls[q] != UINT32_MAX) continue;
        cls[q] = next;
        for (State p = q + 1; p < n; ++p)
            if (cls[p] == UINT32_MAX && sim[q][p] && sim[p][q]) cls[p] = next;
        ++next;
    }

    Nfa out;
    out.num_states = next;
    std::set<NfaTransition> uniq;
    for (const auto& t : a.transitions) uniq.insert({cls[t.src], t.sym, cls[t.dst]});
    out.transitions.assign(uniq.begin(), uniq.end());
    for (State q : a.initial) out.make_initial(cls[q]);
    for (State q : a.final) out.make_final(cls[q]);
    return trim(out);
}

/// Replace delimiter transitions by epsilon.
inline Nfa erase_delimiters(const Nfa& a) {
    Nfa out = a;
    for (auto& t : out.transitions)
        if (is_delimiter(t.sym)) t.sym = eps_symbol;
    return out;
}

/// Line-oriented debug serialization; consumed only by the test suite.
inline std::string serialize(const Nfa& a) {
    std::ostringstream os;
    os << "nfa states " << a.num_states << "\n";
    os << "initial";
    for (State q : a.initial) os << ' ' << q;
    os << "\nfinal";
    for (State q : a.final) os << ' ' << q;
    os << "\n";
    std::vector<NfaTransition> ts = a.transitions;
    std::sort(ts.begin(), ts.end());
    for (const auto& t : ts) os << t.src << ' ' << symbol_name(t.sym) << ' ' << t.dst << "\n";
    return os.str();
}

}  // namespace strand

#endif
