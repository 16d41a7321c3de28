// Test-only brute-force oracles, independent of the solver's noodlification
// and length-image machinery: word enumeration, direct language comparison,
// direct cube evaluation.

#ifndef STRAND_TESTS_ORACLES_HPP
#define STRAND_TESTS_ORACLES_HPP

#include <set>
#include <vector>

#include "strand/nfa.hpp"
#include "strand/transducer.hpp"

namespace strand::oracles {

inline std::vector<Word> all_words(const std::vector<Symbol>& letters, size_t max_len) {
    std::vector<Word> out{{}};
    std::vector<Word> layer{{}};
    for (size_t n = 1; n <= max_len; ++n) {
        std::vector<Word> next;
        for (const Word& w : layer) {
            for (Symbol s : letters) {
                Word v = w;
                v.push_back(s);
                next.push_back(v);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

/// Language slice up to a length bound, via direct membership.
inline std::set<Word> lang_upto(const Nfa& a, const std::vector<Symbol>& letters, size_t max_len) {
    std::set<Word> out;
    for (const Word& w : all_words(letters, max_len))
        if (member(a, w)) out.insert(w);
    return out;
}

inline Word erase_delims(const Word& w) {
    Word out;
    for (Symbol s : w)
        if (!is_delimiter(s)) out.push_back(s);
    return out;
}

/// Members of a language known to be finite with words within max_len.
inline std::set<Word> finite_language(const Nfa& a, size_t max_len) {
    std::set<Symbol> used = a.letters_used();
    std::vector<Symbol> letters(used.begin(), used.end());
    return lang_upto(a, letters, max_len);
}

}  // namespace strand::oracles

#endif
