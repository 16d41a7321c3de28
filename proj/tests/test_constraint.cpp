#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "strand/constraint.hpp"

using namespace strand;

namespace {

const Alphabet kAb = Alphabet::from_string("ab");
const Alphabet kHtml = Alphabet::from_string("a<&lt;;");

Word w(const std::string& s) { return word_from_string(s); }

}  // namespace

TEST_CASE("desugar_literals") {
    VarPool pool;
    VarId x = pool.user("x"), y = pool.user("y");

    SECTION("literal inside a term becomes a fresh var with singleton language") {
        SugaredCube cube{{SugaredEquation{{SugaredElem::of_var(x), SugaredElem::of_lit(w("ab"))},
                                          {SugaredElem::of_var(y)}},
                          true}};
        InputCube out = desugar_literals(cube, pool);
        REQUIRE(out.size() == 2);  // the reg atom + the equation
        const auto* reg = std::get_if<RegAtom>(&out[0].atom);
        REQUIRE(reg != nullptr);
        CHECK(is_singleton(*reg->lang) == w("ab"));
        const auto* eq = std::get_if<Equation>(&out[1].atom);
        REQUIRE(eq != nullptr);
        REQUIRE(eq->lhs.size() == 2);
        CHECK(eq->lhs[0] == x);
        CHECK(eq->lhs[1] == reg->var);
        CHECK(pool.is_fresh(reg->var));
        CHECK(eq->rhs == Term{y});
    }

    SECTION("empty literal gets language {epsilon}") {
        SugaredCube cube{{SugaredEquation{{SugaredElem::of_lit({})}, {SugaredElem::of_var(x)}}, true}};
        InputCube out = desugar_literals(cube, pool);
        const auto* reg = std::get_if<RegAtom>(&out[0].atom);
        REQUIRE(reg != nullptr);
        CHECK(is_singleton(*reg->lang) == Word{});
    }

    SECTION("the escaping-example pattern literal is a singleton") {
        SugaredCube cube{{SugaredEquation{{SugaredElem::of_lit(w("<"))}, {SugaredElem::of_var(x)}}, true}};
        InputCube out = desugar_literals(cube, pool);
        const auto* reg = std::get_if<RegAtom>(&out[0].atom);
        REQUIRE(reg != nullptr);
        CHECK(is_singleton(*reg->lang) == w("<"));
    }
}

TEST_CASE("normalize_regular") {
    VarPool pool;
    VarId x = pool.user("x");

    SECTION("per-variable intersection") {
        InputCube cube{{RegAtom{x, make_lang(from_regex("a*", kAb))}, true},
                       {RegAtom{x, make_lang(from_regex("(a|b)*", kAb))}, true}};
        PositiveCube pc = normalize_regular(cube, pool, kAb);
        CHECK(lang_equal(*pc.lang.at(x), from_regex("a*", kAb)));
    }

    SECTION("negated membership goes through complement first") {
        VarPool p2;
        VarId v = p2.user("x");
        LiaVarPool lia;
        InputCube cube{{RegAtom{v, make_lang(from_regex("a*", kAb))}, false}};
        auto cubes = eliminate_negation(cube, p2, lia, kAb);
        REQUIRE(cubes.size() == 1);
        PositiveCube pc = normalize_regular(cubes[0], p2, kAb);
        CHECK(lang_equal(*pc.lang.at(v), complement(from_regex("a*", kAb), kAb)));
    }

    SECTION("unconstrained variables get Sigma*") {
        VarPool p2;
        VarId u = p2.user("u"), v = p2.user("v");
        InputCube cube{{Equation{{u}, {v}}, true}};
        PositiveCube pc = normalize_regular(cube, p2, kAb);
        CHECK(lang_equal(*pc.lang.at(u), sigma_star(kAb)));
        CHECK(lang_equal(*pc.lang.at(v), sigma_star(kAb)));
    }

    SECTION("already-normalized constraints pass through unchanged") {
        VarPool p2;
        VarId xx = p2.user("x"), yy = p2.user("y"), vv = p2.user("v"), zz = p2.user("z");
        InputCube cube{{RegAtom{xx, make_lang(from_regex("[alt]+<*", kHtml))}, true},
                       {RegAtom{yy, make_lang(from_regex("<*[;&]*", kHtml))}, true},
                       {RegAtom{vv, make_lang(from_regex("(at)*(&lt)+", kHtml))}, true},
                       {RegAtom{zz, make_lang(from_regex(";*&*", kHtml))}, true}};
        PositiveCube pc = normalize_regular(cube, p2, kHtml);
        CHECK(lang_equal(*pc.lang.at(xx), from_regex("[alt]+<*", kHtml)));
        CHECK(lang_equal(*pc.lang.at(yy), from_regex("<*[;&]*", kHtml)));
        CHECK(lang_equal(*pc.lang.at(vv), from_regex("(at)*(&lt)+", kHtml)));
        CHECK(lang_equal(*pc.lang.at(zz), from_regex(";*&*", kHtml)));
    }
}

TEST_CASE("eliminate_negation shapes") {
    VarPool pool;
    LiaVarPool lia;
    VarId x = pool.user("x"), y = pool.user("y");

    SECTION("negated equation expands to the two-disjunct form") {
        InputCube cube{{Equation{{x}, {y}}, false}};
        auto cubes = eliminate_negation(cube, pool, lia, kAb);
        REQUIRE(cubes.size() == 2);
        // first disjunct: a single length-disequality atom
        REQUIRE(cubes[0].size() == 1);
        const auto* len = std::get_if<LengthAtom>(&cubes[0][0].atom);
        REQUIRE(len != nullptr);
        CHECK(len->formula.cmp == LiaCmp::Ne);
        // second disjunct: two split equations, |x1|=|y1|, two letter
        // memberships, and a code disequality
        REQUIRE(cubes[1].size() == 6);
        int eqs = 0, regs = 0, lens = 0, codes = 0;
        for (const auto& lit : cubes[1]) {
            CHECK(lit.positive);
            if (std::holds_alternative<Equation>(lit.atom)) ++eqs;
            if (std::holds_alternative<RegAtom>(lit.atom)) ++regs;
            if (std::holds_alternative<LengthAtom>(lit.atom)) ++lens;
            if (std::holds_alternative<CodeAtom>(lit.atom)) ++codes;
        }
        CHECK(eqs == 2);
        CHECK(regs == 2);
        CHECK(lens == 1);
        CHECK(codes == 1);
        // orientation: the original term is the input side
        const auto* eq0 = std::get_if<Equation>(&cubes[1][0].atom);
        REQUIRE(eq0 != nullptr);
        CHECK(eq0->lhs == Term{x});
        REQUIRE(eq0->rhs.size() == 3);
    }

    SECTION("negated functional transducer introduces a fresh output") {
        auto t = std::make_shared<const Transducer>(identity_transducer(kAb));
        InputCube cube{{TransConstraint{t, "Id", {x}, {y}, true}, false}};
        auto cubes = eliminate_negation(cube, pool, lia, kAb);
        REQUIRE(cubes.size() == 2);
        const auto* tc = std::get_if<TransConstraint>(&cubes[0][0].atom);
        REQUIRE(tc != nullptr);
        CHECK(tc->in == Term{x});
        REQUIRE(tc->out.size() == 1);
        CHECK(pool.is_fresh(tc->out[0]));
    }

    SECTION("negated non-functional transducer is rejected") {
        auto t = std::make_shared<const Transducer>(
            pairs_transducer({{w("a"), w("a")}, {w("a"), w("b")}}));
        InputCube cube{{TransConstraint{t, "R", {x}, {y}, false}, false}};
        CHECK_THROWS_AS(eliminate_negation(cube, pool, lia, kAb), NegatedNonFunctionalTransducer);
    }

    SECTION("output cubes contain no negated string atoms") {
        InputCube cube{{Equation{{x}, {y}}, false},
                       {RegAtom{x, make_lang(from_regex("a*", kAb))}, false}};
        auto cubes = eliminate_negation(cube, pool, lia, kAb);
        for (const auto& c : cubes)
            for (const auto& lit : c) CHECK(lit.positive);
    }
}

TEST_CASE("eliminate_negation preserves satisfiability on finite instances") {
    // x != y with x in {a, ab}, y in {a, b}: enumerate assignments; for the
    // split disjunct, enumerate the split positions of the two values
    VarPool pool;
    LiaVarPool lia;
    VarId x = pool.user("x"), y = pool.user("y");
    Nfa lx = nfa_union(nfa_word(w("a")), nfa_word(w("ab")));
    Nfa ly = nfa_union(nfa_word(w("a")), nfa_word(w("b")));

    InputCube original{{Equation{{x}, {y}}, false},
                       {RegAtom{x, make_lang(lx)}, true},
                       {RegAtom{y, make_lang(ly)}, true}};
    auto cubes = eliminate_negation(original, pool, lia, kAb);
    REQUIRE(cubes.size() == 2);

    auto lx_words = oracles::finite_language(lx, 2);
    auto ly_words = oracles::finite_language(ly, 2);

    for (const Word& vx : lx_words) {
        for (const Word& vy : ly_words) {
            Assignment nu;
            nu.strings[x] = vx;
            nu.strings[y] = vy;
            bool orig = eval_cube(original, nu, pool, lia);
            CHECK(orig == (vx != vy));

            // disjunct 1 needs no fresh assignment beyond nu
            bool transformed = eval_cube(cubes[0], nu, pool, lia);
            // disjunct 2: extend nu over all split positions
            const auto& split_cube = cubes[1];
            std::vector<VarId> fresh;
            for (const auto& lit : split_cube) {
                if (auto* eq = std::get_if<Equation>(&lit.atom)) {
                    if (eq->rhs.size() == 3)
                        for (VarId v : eq->rhs) fresh.push_back(v);
                }
            }
            REQUIRE(fresh.size() == 6);
            for (size_t i = 0; i < vx.size() && !transformed; ++i) {
                for (size_t j = 0; j < vy.size() && !transformed; ++j) {
                    Assignment ext = nu;
                    ext.strings[fresh[0]] = Word(vx.begin(), vx.begin() + i);
                    ext.strings[fresh[1]] = Word{vx[i]};
                    ext.strings[fresh[2]] = Word(vx.begin() + i + 1, vx.end());
                    ext.strings[fresh[3]] = Word(vy.begin(), vy.begin() + j);
                    ext.strings[fresh[4]] = Word{vy[j]};
                    ext.strings[fresh[5]] = Word(vy.begin() + j + 1, vy.end());
                    if (eval_cube(split_cube, ext, pool, lia)) transformed = true;
                }
            }
            CAPTURE(word_to_string(vx), word_to_string(vy));
            CHECK(orig == transformed);
        }
    }
}

TEST_CASE("code_point_lia") {
    VarPool pool;
    LiaVarPool lia;
    VarId a = pool.user("a"), b = pool.user("b");

    SECTION("singleton language pins the code") {
        LangMap lang;
        lang[a] = make_lang(nfa_word({'x' - 0}));  // codepoint of 'x' = 120
        lang[b] = make_lang(detail::any_letter(Alphabet::from_string("xy")));
        Alphabet sigma = Alphabet::from_string("xy");
        LiaFormula f = code_point_lia(CodeAtom{a, b, true}, lang, pool, lia, sigma);
        auto r = lia_solve_builtin(f, lia);
        REQUIRE(r.status == LiaStatus::Sat);
        CHECK(r.model[lia.code_of("a")] == 120);
        CHECK(r.model[lia.code_of("b")] == 'y');
        CHECK(r.model[lia.length_of("a")] == 1);
    }

    SECTION("full alphabet gives one option per letter") {
        Alphabet sigma3 = Alphabet::from_string("abc");
        LangMap lang;
        lang[a] = make_lang(detail::any_letter(sigma3));
        lang[b] = make_lang(detail::any_letter(sigma3));
        LiaFormula f = code_point_lia(CodeAtom{a, b, false}, lang, pool, lia, sigma3);
        // the binding disjunction for each side has exactly 3 options
        REQUIRE(f.children.size() == 3);
        CHECK(f.children[0].children[0].children.size() == 3);
        auto r = lia_solve_builtin(f, lia);
        REQUIRE(r.status == LiaStatus::Sat);
        CHECK(r.model[lia.code_of("a")] == r.model[lia.code_of("b")]);
    }

    SECTION("the escaping-example alphabet gives a 6-way disjunction") {
        LangMap lang;
        lang[a] = make_lang(detail::any_letter(kHtml));
        lang[b] = make_lang(detail::any_letter(kHtml));
        LiaFormula f = code_point_lia(CodeAtom{a, b, true}, lang, pool, lia, kHtml);
        REQUIRE(kHtml.size() == 6);
        CHECK(f.children[0].children[0].children.size() == 6);
        CHECK(lia_solve_builtin(f, lia).status == LiaStatus::Sat);
    }

    SECTION("empty candidate set is unsatisfiable") {
        LangMap lang;
        lang[a] = make_lang(nfa_empty());
        lang[b] = make_lang(detail::any_letter(kAb));
        LiaFormula f = code_point_lia(CodeAtom{a, b, true}, lang, pool, lia, kAb);
        CHECK(lia_solve_builtin(f, lia).status == LiaStatus::Unsat);
    }
}
