// alphabet.hpp -- symbols, alphabets and words.
//
// Symbols are small integer codepoints. A few values at the top of the range
// are reserved for epsilon and the three boundary markers used by the
// delimited products (input marker, output marker, separator).

#ifndef STRAND_ALPHABET_HPP
#define STRAND_ALPHABET_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace strand {

using Symbol = uint32_t;

inline constexpr Symbol eps_symbol = 0xFFFFFFFFu;
inline constexpr Symbol delim_in = 0xFFFFFFFEu;   // marks borders on input terms
inline constexpr Symbol delim_out = 0xFFFFFFFDu;  // marks borders on output terms
inline constexpr Symbol delim_sep = 0xFFFFFFFCu;  // generic separator

inline constexpr bool is_delimiter(Symbol s) {
    return s == delim_in || s == delim_out || s == delim_sep;
}

inline constexpr bool is_letter(Symbol s) {
    return s < 0xFFFFFFF0u;
}

/// A word is a sequence of plain letters (no epsilon, no delimiters).
using Word = std::vector<Symbol>;

struct AlphabetError : std::runtime_error {
    explicit AlphabetError(const std::string& what) : std::runtime_error(what) {}
};

/// The finite set of letters a solver instance works over. Kept sorted.
class Alphabet {
  public:
    Alphabet() = default;

    explicit Alphabet(std::vector<Symbol> letters) : letters_(std::move(letters)) {
        std::sort(letters_.begin(), letters_.end());
        letters_.erase(std::unique(letters_.begin(), letters_.end()), letters_.end());
        for (Symbol s : letters_) {
            if (!is_letter(s)) throw AlphabetError("reserved symbol used as a letter");
        }
        if (letters_.empty()) throw AlphabetError("alphabet must contain at least one letter");
    }

    static Alphabet from_string(const std::string& chars) {
        std::vector<Symbol> ls;
        for (unsigned char c : chars) ls.push_back(static_cast<Symbol>(c));
        return Alphabet(std::move(ls));
    }

    bool contains(Symbol s) const {
        return std::binary_search(letters_.begin(), letters_.end(), s);
    }

    size_t size() const { return letters_.size(); }
    const std::vector<Symbol>& letters() const { return letters_; }

    bool operator==(const Alphabet& o) const = default;

  private:
    std::vector<Symbol> letters_;
};

inline Word word_from_string(const std::string& s) {
    Word w;
    w.reserve(s.size());
    for (unsigned char c : s) w.push_back(static_cast<Symbol>(c));
    return w;
}

inline std::string word_to_string(const Word& w) {
    std::string out;
    for (Symbol s : w) {
        if (s >= 0x20 && s < 0x7F) {
            out.push_back(static_cast<char>(s));
        } else {
            out += "\\u{" + std::to_string(s) + "}";
        }
    }
    return out;
}

/// Printable name of a symbol, for traces and the debug serialization.
inline std::string symbol_name(Symbol s) {
    switch (s) {
        case eps_symbol: return "-";
        case delim_in: return "<|";
        case delim_out: return "|>";
        case delim_sep: return "#|";
        default: break;
    }
    if (s >= 0x21 && s < 0x7F) return std::string(1, static_cast<char>(s));
    return "\\u{" + std::to_string(s) + "}";
}

}  // namespace strand

#endif
