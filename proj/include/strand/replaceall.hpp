// replaceall.hpp -- compilation of string transformations (replace,
// replace_all, replace_re, replace_re_all, to_lower, to_upper) into binary
// transducers with leftmost-shortest non-empty match semantics, plus the
// reference scanning implementation and flattening of nested applications.

#ifndef STRAND_REPLACEALL_HPP
#define STRAND_REPLACEALL_HPP

#include <cctype>
#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "strand/constraint.hpp"
#include "strand/nfa.hpp"
#include "strand/transducer.hpp"

namespace strand {

struct ReplaceSpec {
    Nfa pattern;       // match language; empty matches are skipped
    Word replacement;  // fixed replacement word
    bool first_only = false;
};

// ---------------------------------------------------------------------------
// Reference implementation (direct string scanning). This is the semantic
// authority the compiled transducers are tested against, and the evaluator
// check_model uses for replace terms.
// ---------------------------------------------------------------------------

inline Word replace_reference(const Word& input, const Nfa& pattern, const Word& replacement,
                              bool first_only) {
    Word out;
    size_t i = 0;
    bool done = false;
    while (i < input.size()) {
        size_t match_len = 0;
        if (!done) {
            for (size_t len = 1; i + len <= input.size(); ++len) {
                if (member(pattern, Word(input.begin() + i, input.begin() + i + len))) {
                    match_len = len;
                    break;  // shortest
                }
            }
        }
        if (match_len > 0) {
            out.insert(out.end(), replacement.begin(), replacement.end());
            i += match_len;
            if (first_only) done = true;
        } else {
            out.push_back(input[i]);
            ++i;
        }
    }
    return out;
}

inline Word replace_all_reference(const Word& input, const Nfa& pattern, const Word& replacement) {
    return replace_reference(input, pattern, replacement, false);
}

// ---------------------------------------------------------------------------
// Transducer construction
// ---------------------------------------------------------------------------

namespace replace_detail {

/// Complete DFA over the alphabet with an explicit dead marker: state
/// indices into `next`, accepting flags, and a live (co-accessible) mask.
struct ScanDfa {
    std::vector<std::map<Symbol, uint32_t>> next;
    std::vector<bool> accepting;
    std::vector<bool> live;  // can still reach an accepting state
    uint32_t start = 0;
};

inline ScanDfa build_scan_dfa(const Nfa& pattern, const Alphabet& sigma) {
    // restrict to non-empty matches
    Nfa nonempty = intersect(pattern, concat(detail::any_letter(sigma), sigma_star(sigma)));
    Nfa d = determinize(nonempty);
    ScanDfa out;
    if (d.num_states == 0) {
        out.next.push_back({});
        out.accepting.push_back(false);
        out.live.push_back(false);
        out.start = 0;
        return out;
    }
    out.next.assign(d.num_states, {});
    out.accepting.assign(d.num_states, false);
    for (State q : d.final) out.accepting[q] = true;
    for (const auto& t : d.transitions) out.next[t.src][t.sym] = t.dst;
    out.start = d.initial.at(0);
    auto bwd = detail::reachable_from(d, d.final, false);
    out.live.assign(d.num_states, false);
    for (State q = 0; q < d.num_states; ++q) out.live[q] = bwd[q];
    return out;
}

constexpr uint32_t kDead = UINT32_MAX;

inline uint32_t step_dfa(const ScanDfa& d, uint32_t q, Symbol a) {
    if (q == kDead) return kDead;
    auto it = d.next[q].find(a);
    if (it == d.next[q].end() || !d.live[it->second]) return kDead;
    return it->second;
}

/// Obligation set: determinized states of pending no-match claims.
using Claims = std::vector<uint32_t>;  // sorted unique, live states only

inline std::optional<Claims> step_claims(const ScanDfa& d, const Claims& s, Symbol a,
                                         bool add_new_claim) {
    Claims out;
    auto push = [&](uint32_t q) {
        if (q == kDead) return true;
        if (d.accepting[q]) return false;  // a claimed no-match position matched
        auto it = std::lower_bound(out.begin(), out.end(), q);
        if (it == out.end() || *it != q) out.insert(it, q);
        return true;
    };
    for (uint32_t q : s)
        if (!push(step_dfa(d, q, a))) return std::nullopt;
    if (add_new_claim && !push(step_dfa(d, d.start, a))) return std::nullopt;
    return out;
}

}  // namespace replace_detail

/// Compile a replacement specification into a binary transducer whose
/// relation is the (total) replacement function on Sigma*.
///
/// The machine guesses, per position, whether a leftmost-shortest match
/// starts there; wrong guesses are killed by no-match obligations tracked
/// as a determinized claim set, so the relation is exactly the function.
inline Transducer compile(const ReplaceSpec& spec, const Alphabet& sigma) {
    using namespace replace_detail;
    ScanDfa dfa = build_scan_dfa(spec.pattern, sigma);

    Transducer out;
    out.arity = 2;

    if (!dfa.live[dfa.start]) {
        // no non-empty match exists: the identity relation
        State q = out.add_state();
        out.make_initial(q);
        out.make_final(q);
        for (Symbol a : sigma.letters()) out.add_transition(q, {a, a}, q);
        return out;
    }

    // state = (phase, claims) with phase: copy / in-match(d) / post (first_only)
    struct Key {
        int phase;  // 0 = copy, 1 = post-copy, 2+k = match at dfa state k
        Claims claims;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, State> ids;
    std::deque<Key> work;

    auto get = [&](const Key& k) {
        auto [it, fresh] = ids.try_emplace(k, 0);
        if (fresh) {
            it->second = out.add_state();
            if (k.phase <= 1) out.make_final(it->second);  // copy states accept
            work.push_back(k);
        }
        return it->second;
    };

    // emission chain from a match completion back to a copy state
    auto emit_chain = [&](State from, const Key& target) {
        State cur = from;
        for (size_t k = 0; k < spec.replacement.size(); ++k) {
            State nxt = (k + 1 == spec.replacement.size()) ? get(target) : out.add_state();
            out.add_transition(cur, {eps_symbol, spec.replacement[k]}, nxt);
            cur = nxt;
        }
        if (spec.replacement.empty()) out.add_transition(from, {eps_symbol, eps_symbol}, get(target));
    };

    Key start{0, {}};
    out.make_initial(get(start));

    while (!work.empty()) {
        Key k = work.front();
        work.pop_front();
        State here = ids[k];

        if (k.phase == 1) {  // post: plain copy
            for (Symbol a : sigma.letters()) out.add_transition(here, {a, a}, here);
            continue;
        }
        if (k.phase == 0) {  // copy state: copy a char or begin a match
            for (Symbol a : sigma.letters()) {
                if (auto claims = step_claims(dfa, k.claims, a, /*add_new_claim=*/true)) {
                    out.add_transition(here, {a, a}, get({0, *claims}));
                }
                uint32_t d1 = step_dfa(dfa, dfa.start, a);
                if (d1 == kDead) continue;
                auto claims = step_claims(dfa, k.claims, a, /*add_new_claim=*/false);
                if (!claims) continue;
                if (dfa.accepting[d1]) {
                    State mid = out.add_state();
                    out.add_transition(here, {a, eps_symbol}, mid);
                    emit_chain(mid, {spec.first_only ? 1 : 0, *claims});
                } else {
                    out.add_transition(here, {a, eps_symbol}, get({2 + static_cast<int>(d1), *claims}));
                }
            }
            continue;
        }
        // in-match at dfa state (phase - 2)
        uint32_t d = static_cast<uint32_t>(k.phase - 2);
        for (Symbol a : sigma.letters()) {
            uint32_t d2 = step_dfa(dfa, d, a);
            if (d2 == kDead) continue;
            auto claims = step_claims(dfa, k.claims, a, /*add_new_claim=*/false);
            if (!claims) continue;
            if (dfa.accepting[d2]) {
                State mid = out.add_state();
                out.add_transition(here, {a, eps_symbol}, mid);
                emit_chain(mid, {spec.first_only ? 1 : 0, *claims});
            } else {
                out.add_transition(here, {a, eps_symbol}, get({2 + static_cast<int>(d2), *claims}));
            }
        }
    }
    return normalize(out);
}

enum class CaseDirection { Lower, Upper };

/// Single-state letter-to-letter transducer applying ASCII case mapping;
/// the alphabet must be closed under the mapping for letters it contains.
inline Transducer compile_casing(CaseDirection dir, const Alphabet& sigma) {
    Transducer t;
    t.arity = 2;
    State q = t.add_state();
    t.make_initial(q);
    t.make_final(q);
    for (Symbol a : sigma.letters()) {
        Symbol b = a;
        if (a < 128) {
            b = dir == CaseDirection::Lower
                    ? static_cast<Symbol>(std::tolower(static_cast<int>(a)))
                    : static_cast<Symbol>(std::toupper(static_cast<int>(a)));
        }
        if (b != a && !sigma.contains(b))
            throw AlphabetError("alphabet is not closed under case mapping");
        t.add_transition(q, {a, b}, q);
    }
    return t;
}

inline Word casing_reference(const Word& input, CaseDirection dir) {
    Word out = input;
    for (Symbol& s : out) {
        if (s < 128)
            s = dir == CaseDirection::Lower ? static_cast<Symbol>(std::tolower(static_cast<int>(s)))
                                            : static_cast<Symbol>(std::toupper(static_cast<int>(s)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flattening of nested applications
// ---------------------------------------------------------------------------

struct StrApp;
using Subject = std::variant<SugaredTerm, std::shared_ptr<StrApp>>;

/// One application node of a replace/casing function.
struct StrApp {
    enum class Op { ReplaceAll, ReplaceFirst, ToLower, ToUpper };
    Op op;
    Nfa pattern;       // replace ops
    Word replacement;  // replace ops
    Subject subject;
};

/// Flatten a nested application innermost-out into a chain of functional
/// transducer constraints; returns the variable holding the result value.
inline VarId flatten(const StrApp& app, VarPool& pool, const Alphabet& sigma,
                     std::vector<SugaredLiteral>& sink, int* name_counter) {
    SugaredTerm subject_term;
    if (auto* base = std::get_if<SugaredTerm>(&app.subject)) {
        subject_term = *base;
    } else {
        VarId inner = flatten(*std::get<std::shared_ptr<StrApp>>(app.subject), pool, sigma, sink,
                              name_counter);
        subject_term = {SugaredElem::of_var(inner)};
    }

    Transducer t;
    std::string name;
    int n = (*name_counter)++;
    switch (app.op) {
        case StrApp::Op::ReplaceAll:
            t = compile({app.pattern, app.replacement, false}, sigma);
            name = "replace_all#" + std::to_string(n);
            break;
        case StrApp::Op::ReplaceFirst:
            t = compile({app.pattern, app.replacement, true}, sigma);
            name = "replace#" + std::to_string(n);
            break;
        case StrApp::Op::ToLower:
            t = compile_casing(CaseDirection::Lower, sigma);
            name = "to_lower#" + std::to_string(n);
            break;
        case StrApp::Op::ToUpper:
            t = compile_casing(CaseDirection::Upper, sigma);
            name = "to_upper#" + std::to_string(n);
            break;
    }
    VarId result = pool.fresh("app");
    SugaredTrans constraint{std::make_shared<const Transducer>(std::move(t)), name, subject_term,
                            {SugaredElem::of_var(result)}, /*functional=*/true};
    sink.push_back({std::move(constraint), true});
    return result;
}

}  // namespace strand

#endif
