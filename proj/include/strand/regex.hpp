// regex.hpp -- a small regex AST and parser used by the native constraint
// format and the tests.
//
// Syntax: literal characters, '\'-escapes, '[...]' character classes with
// 'a-z' ranges, '(...)' groups, postfix '*' and '+', infix '|' for union,
// and '[]' for the empty language. Whitespace is significant.

#ifndef STRAND_REGEX_HPP
#define STRAND_REGEX_HPP

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "strand/alphabet.hpp"

namespace strand {

struct Regex;
using RegexPtr = std::shared_ptr<const Regex>;

struct Regex {
    enum class Kind { Empty, Epsilon, Chars, Concat, Union, Star, Plus };

    Kind kind = Kind::Empty;
    std::set<Symbol> chars;          // Kind::Chars
    std::vector<RegexPtr> children;  // Concat, Union, Star, Plus

    static RegexPtr empty() { return std::make_shared<Regex>(Regex{Kind::Empty, {}, {}}); }
    static RegexPtr epsilon() { return std::make_shared<Regex>(Regex{Kind::Epsilon, {}, {}}); }
    static RegexPtr chars_of(std::set<Symbol> cs) {
        return std::make_shared<Regex>(Regex{Kind::Chars, std::move(cs), {}});
    }
    static RegexPtr character(Symbol c) { return chars_of({c}); }
    static RegexPtr concat(std::vector<RegexPtr> cs) {
        return std::make_shared<Regex>(Regex{Kind::Concat, {}, std::move(cs)});
    }
    static RegexPtr alternation(std::vector<RegexPtr> cs) {
        return std::make_shared<Regex>(Regex{Kind::Union, {}, std::move(cs)});
    }
    static RegexPtr star(RegexPtr c) {
        return std::make_shared<Regex>(Regex{Kind::Star, {}, {std::move(c)}});
    }
    static RegexPtr plus(RegexPtr c) {
        return std::make_shared<Regex>(Regex{Kind::Plus, {}, {std::move(c)}});
    }
    static RegexPtr literal(const std::string& s) {
        std::vector<RegexPtr> cs;
        for (unsigned char c : s) cs.push_back(character(c));
        if (cs.empty()) return epsilon();
        if (cs.size() == 1) return cs[0];
        return concat(std::move(cs));
    }
};

struct RegexParseError : std::runtime_error {
    explicit RegexParseError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

class RegexParser {
  public:
    explicit RegexParser(const std::string& text) : text_(text) {}

    RegexPtr parse() {
        if (text_.empty()) return Regex::epsilon();
        RegexPtr r = parse_union();
        if (pos_ != text_.size()) fail("trailing input");
        return r;
    }

  private:
    RegexPtr parse_union() {
        std::vector<RegexPtr> alts{parse_concat()};
        while (peek() == '|') {
            ++pos_;
            alts.push_back(parse_concat());
        }
        if (alts.size() == 1) return alts[0];
        return Regex::alternation(std::move(alts));
    }

    RegexPtr parse_concat() {
        std::vector<RegexPtr> parts;
        while (pos_ < text_.size() && peek() != '|' && peek() != ')') {
            parts.push_back(parse_postfix());
        }
        if (parts.empty()) return Regex::epsilon();
        if (parts.size() == 1) return parts[0];
        return Regex::concat(std::move(parts));
    }

    RegexPtr parse_postfix() {
        RegexPtr r = parse_primary();
        for (;;) {
            char c = peek();
            if (c == '*') {
                ++pos_;
                r = Regex::star(r);
            } else if (c == '+') {
                ++pos_;
                r = Regex::plus(r);
            } else {
                return r;
            }
        }
    }

    RegexPtr parse_primary() {
        char c = peek();
        if (c == '\0') fail("unexpected end of regex");
        if (c == '(') {
            ++pos_;
            if (peek() == ')') {  // "()" is the empty word
                ++pos_;
                return Regex::epsilon();
            }
            RegexPtr r = parse_union();
            expect(')');
            return r;
        }
        if (c == '[') {
            ++pos_;
            return parse_class();
        }
        // UTF-8 empty-set sign (3 bytes)
        if (text_.compare(pos_, 3, "\xe2\x88\x85") == 0) {
            pos_ += 3;
            return Regex::empty();
        }
        if (c == '\\') {
            ++pos_;
            if (pos_ >= text_.size()) fail("dangling escape");
            return Regex::character(static_cast<unsigned char>(text_[pos_++]));
        }
        if (c == '*' || c == '+' || c == '|' || c == ')' || c == ']') {
            fail(std::string("unexpected '") + c + "'");
        }
        ++pos_;
        return Regex::character(static_cast<unsigned char>(c));
    }

    RegexPtr parse_class() {
        std::set<Symbol> cs;
        if (peek() == ']') {  // "[]" is the empty language
            ++pos_;
            return Regex::empty();
        }
        while (peek() != ']') {
            if (peek() == '\0') fail("unterminated character class");
            unsigned char lo;
            if (peek() == '\\') {
                ++pos_;
                if (pos_ >= text_.size()) fail("dangling escape");
                lo = static_cast<unsigned char>(text_[pos_++]);
            } else {
                lo = static_cast<unsigned char>(text_[pos_++]);
            }
            if (peek() == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] != ']') {
                ++pos_;
                unsigned char hi = static_cast<unsigned char>(text_[pos_++]);
                if (hi < lo) fail("inverted range in character class");
                for (unsigned c = lo; c <= hi; ++c) cs.insert(c);
            } else {
                cs.insert(lo);
            }
        }
        ++pos_;
        return Regex::chars_of(std::move(cs));
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw RegexParseError(msg + " at offset " + std::to_string(pos_) + " in /" + text_ + "/");
    }

    const std::string& text_;
    size_t pos_ = 0;
};

}  // namespace detail

inline RegexPtr parse_regex(const std::string& text) {
    return detail::RegexParser(text).parse();
}

}  // namespace strand

#endif
