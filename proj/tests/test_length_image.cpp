#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "strand/length_image.hpp"
#include "strand/replaceall.hpp"

using namespace strand;

namespace {

const Alphabet kAb = Alphabet::from_string("ab");
const Alphabet kHtml = Alphabet::from_string("a<&lt;;");

Word w(const std::string& s) { return word_from_string(s); }

/// The 3-tape single-dummy machine whose Parikh image is
/// exists n1,n2,n3 >= 0: |x|=n2, |y|=n2+n3, |z|=n1+n2, n1+n3=n2.
Transducer lenimg_example_machine() {
    Transducer t;
    t.arity = 3;
    State q0 = t.add_state(), q1 = t.add_state();
    t.make_initial(q0);
    t.make_final(q0);
    t.add_transition(q0, {eps_symbol, eps_symbol, dummy_symbol}, q1);  // lower, n1
    t.add_transition(q1, {dummy_symbol, dummy_symbol, dummy_symbol}, q0);  // middle, n2
    t.add_transition(q0, {eps_symbol, dummy_symbol, eps_symbol}, q1);  // upper, n3
    return t;
}

bool lengths_satisfiable(const LiaFormula& f, LiaVarPool& pool, const std::vector<LiaVar>& vars,
                         const std::vector<int64_t>& values) {
    std::vector<LiaFormula> cs{f};
    for (size_t i = 0; i < vars.size(); ++i)
        cs.push_back(LiaFormula::compare(LinExpr::of(vars[i]), LiaCmp::Eq, LinExpr::lit(values[i])));
    return lia_solve_builtin(LiaFormula::conj(cs), pool).status == LiaStatus::Sat;
}

std::set<std::vector<int64_t>> length_vectors(const Transducer& t, size_t bound) {
    std::set<std::vector<int64_t>> out;
    for (const auto& tup : enumerate_relation(t, bound)) {
        std::vector<int64_t> v;
        for (const auto& word : tup) v.push_back(static_cast<int64_t>(word.size()));
        out.insert(v);
    }
    return out;
}

Transducer random_machine(std::mt19937& rng, int arity) {
    std::uniform_int_distribution<int> nstates(1, 3), ntrans(1, 5), st(0, 0), pickeps(0, 2);
    Transducer t;
    t.arity = arity;
    int n = nstates(rng);
    for (int i = 0; i < n; ++i) t.add_state();
    std::uniform_int_distribution<int> s(0, n - 1);
    int m = ntrans(rng);
    for (int i = 0; i < m; ++i) {
        TapeLabel l;
        for (int k = 0; k < arity; ++k)
            l.push_back(pickeps(rng) == 0 ? eps_symbol : dummy_symbol);
        t.add_transition(s(rng), l, s(rng));
    }
    t.make_initial(s(rng));
    t.make_final(s(rng));
    return t;
}

}  // namespace

TEST_CASE("compose_chain") {
    VarPool vars;
    VarId x = vars.user("x"), y = vars.user("y"), z = vars.user("z");

    SECTION("a single constraint composes to itself restricted by Reg") {
        auto t = std::make_shared<const Transducer>(pairs_transducer({{w("a"), w("b")}}));
        LangMap lang{{x, make_lang(sigma_star(kAb))}, {y, make_lang(sigma_star(kAb))}};
        auto machines = compose_chain({TransConstraint{t, "S", {x}, {y}, false}}, lang);
        REQUIRE(machines.size() == 1);
        CHECK(machines[0].tapes == std::vector<VarId>{x, y});
        CHECK(enumerate_relation(machines[0].machine, 2) == enumerate_relation(*t, 2));
    }

    SECTION("a two-constraint chain matches the conjunction by enumeration") {
        auto s1 = std::make_shared<const Transducer>(
            pairs_transducer({{w("a"), w("bb")}, {w("b"), w("a")}}));
        auto s2 = std::make_shared<const Transducer>(
            pairs_transducer({{w("bb"), w("a")}, {w("a"), w("ab")}}));
        LangMap lang{{x, make_lang(sigma_star(kAb))},
                     {y, make_lang(sigma_star(kAb))},
                     {z, make_lang(sigma_star(kAb))}};
        std::vector<TransConstraint> cs{TransConstraint{s1, "S1", {x}, {y}, false},
                                        TransConstraint{s2, "S2", {y}, {z}, false}};
        auto machines = compose_chain(cs, lang);
        REQUIRE(machines.size() == 1);
        REQUIRE(machines[0].tapes.size() == 3);

        std::map<VarId, size_t> at;
        for (size_t i = 0; i < machines[0].tapes.size(); ++i) at[machines[0].tapes[i]] = i;
        auto rel1 = enumerate_relation(*s1, 4);
        auto rel2 = enumerate_relation(*s2, 4);
        std::set<std::vector<Word>> expect;
        for (const auto& p : rel1) {
            for (const auto& q : rel2) {
                if (p[1] != q[0]) continue;
                std::vector<Word> tup(3);
                tup[at[x]] = p[0];
                tup[at[y]] = p[1];
                tup[at[z]] = q[1];
                if (tup[0].size() <= 4 && tup[1].size() <= 4 && tup[2].size() <= 4)
                    expect.insert(tup);
            }
        }
        CHECK(enumerate_relation(machines[0].machine, 4) == expect);
    }

    SECTION("empty regular language empties the machine") {
        auto t = std::make_shared<const Transducer>(identity_transducer(kAb));
        LangMap lang{{x, make_lang(nfa_empty())}, {y, make_lang(sigma_star(kAb))}};
        auto machines = compose_chain({TransConstraint{t, "Id", {x}, {y}, false}}, lang);
        REQUIRE(machines.size() == 1);
        CHECK(is_empty(machines[0].machine));
    }

    SECTION("independent constraints form separate machines") {
        auto t = std::make_shared<const Transducer>(identity_transducer(kAb));
        VarId u = vars.user("u");
        LangMap lang{{x, make_lang(sigma_star(kAb))},
                     {y, make_lang(sigma_star(kAb))},
                     {z, make_lang(sigma_star(kAb))},
                     {u, make_lang(sigma_star(kAb))}};
        auto machines = compose_chain({TransConstraint{t, "A", {x}, {y}, false},
                                       TransConstraint{t, "B", {z}, {u}, false}},
                                      lang);
        CHECK(machines.size() == 2);
    }

    SECTION("cyclic systems are rejected") {
        auto t = std::make_shared<const Transducer>(identity_transducer(kAb));
        LangMap lang{{x, make_lang(sigma_star(kAb))}, {y, make_lang(sigma_star(kAb))}};
        std::vector<TransConstraint> cs{TransConstraint{t, "A", {x}, {y}, false},
                                        TransConstraint{t, "B", {y}, {x}, false}};
        CHECK_THROWS_AS(compose_chain(cs, lang), CycleError);
    }
}

TEST_CASE("abstract_to_dummy") {
    SECTION("epsilon patterns are preserved per transition") {
        Transducer t = compile({from_regex("<", kHtml), w("&lt;"), false}, kHtml);
        Transducer d = abstract_to_dummy(t);
        REQUIRE(d.transitions.size() == t.transitions.size());
        for (size_t i = 0; i < t.transitions.size(); ++i) {
            for (uint32_t k = 0; k < t.arity; ++k) {
                bool was_eps = t.transitions[i].label[k] == eps_symbol;
                bool is_eps = d.transitions[i].label[k] == eps_symbol;
                REQUIRE(was_eps == is_eps);
                if (!is_eps) REQUIRE(d.transitions[i].label[k] == dummy_symbol);
            }
        }
    }

    SECTION("abstraction plus reduction keeps the length vectors") {
        Transducer t = compile({from_regex("<", kHtml), w("&lt;"), false}, kHtml);
        Transducer small = reduce(abstract_to_dummy(t));
        CHECK(small.num_states <= t.num_states);
        // compare length-pair sets up to 6 on both machines via enumeration
        std::set<std::vector<int64_t>> before, after;
        for (const auto& tup : enumerate_relation(t, 6))
            before.insert({(int64_t)tup[0].size(), (int64_t)tup[1].size()});
        for (const auto& tup : enumerate_relation(small, 6))
            after.insert({(int64_t)tup[0].size(), (int64_t)tup[1].size()});
        CHECK(before == after);
    }

    SECTION("the running example machine shrinks under reduction") {
        Transducer t = lenimg_example_machine();
        Transducer small = reduce(abstract_to_dummy(t));
        CHECK(small.num_states <= t.num_states);
        CHECK(length_vectors(small, 6) == length_vectors(t, 6));
    }
}

TEST_CASE("parikh_image") {
    SECTION("golden formula for the 3-tape running example") {
        Transducer t = lenimg_example_machine();
        LiaVarPool pool;
        std::vector<LiaVar> lv{pool.length_of("x"), pool.length_of("y"), pool.length_of("z")};
        LiaFormula f = parikh_image(t, lv, pool);
        for (int64_t lx = 0; lx <= 5; ++lx) {
            for (int64_t ly = 0; ly <= 5; ++ly) {
                for (int64_t lz = 0; lz <= 5; ++lz) {
                    bool expect = (ly >= lx) && (lz >= lx) && (ly + lz == 3 * lx);
                    CAPTURE(lx, ly, lz);
                    REQUIRE(lengths_satisfiable(f, pool, lv, {lx, ly, lz}) == expect);
                }
            }
        }
    }

    SECTION("the epsilon-tuple machine admits only zero lengths") {
        Transducer t;
        t.arity = 2;
        State q = t.add_state();
        t.make_initial(q);
        t.make_final(q);
        LiaVarPool pool;
        std::vector<LiaVar> lv{pool.length_of("x"), pool.length_of("y")};
        LiaFormula f = parikh_image(t, lv, pool);
        CHECK(lengths_satisfiable(f, pool, lv, {0, 0}));
        CHECK_FALSE(lengths_satisfiable(f, pool, lv, {1, 0}));
        CHECK_FALSE(lengths_satisfiable(f, pool, lv, {0, 2}));
    }

    SECTION("random machines agree with path enumeration") {
        std::mt19937 rng(4096);
        for (int round = 0; round < 30; ++round) {
            Transducer t = random_machine(rng, 2);
            LiaVarPool pool;
            std::vector<LiaVar> lv{pool.length_of("x"), pool.length_of("y")};
            LiaFormula f = parikh_image(t, lv, pool);
            auto expect = length_vectors(t, 3);
            for (int64_t a = 0; a <= 3; ++a) {
                for (int64_t b = 0; b <= 3; ++b) {
                    CAPTURE(round, a, b);
                    REQUIRE(lengths_satisfiable(f, pool, lv, {a, b}) == (expect.count({a, b}) == 1));
                }
            }
        }
    }
}

TEST_CASE("language_length_set") {
    LiaVarPool pool;
    LiaVar lv = pool.length_of("x");
    LiaFormula f = language_length_set(from_regex("a(aa)*", kAb), lv, pool);
    for (int64_t n = 0; n <= 7; ++n) {
        CAPTURE(n);
        REQUIRE(lengths_satisfiable(f, pool, {lv}, {n}) == (n % 2 == 1));
    }
    CHECK(lia_solve_builtin(language_length_set(nfa_empty(), lv, pool), pool).status ==
          LiaStatus::Unsat);
}

TEST_CASE("binding_length_image") {
    VarPool vars;
    LiaVarPool pool;
    VarId x = vars.user("x"), y = vars.user("y"), z = vars.user("z");

    SECTION("x = yz gives one sum atom") {
        LiaFormula f = binding_length_image({Equation{{x}, {y, z}}}, vars, pool);
        LiaModel good{{pool.length_of("x"), 5}, {pool.length_of("y"), 2}, {pool.length_of("z"), 3}};
        LiaModel bad{{pool.length_of("x"), 4}, {pool.length_of("y"), 2}, {pool.length_of("z"), 3}};
        CHECK(eval_lia(f, good));
        CHECK_FALSE(eval_lia(f, bad));
    }

    SECTION("empty set of solved equations is true") {
        LiaFormula f = binding_length_image({}, vars, pool);
        CHECK(eval_lia(f, {}));
    }

    SECTION("the golden equation split yields five sum atoms") {
        // in: x = v1 v2, y = v3, u = v4 ; out: v1 = w, v2v3v4 = z
        VarId u = vars.user("u"), wv = vars.user("w");
        VarId v1 = vars.user("v1"), v2 = vars.user("v2"), v3 = vars.user("v3"),
              v4 = vars.user("v4");
        std::vector<Equation> solved{Equation{{x}, {v1, v2}}, Equation{{y}, {v3}},
                                     Equation{{u}, {v4}}, Equation{{wv}, {v1}},
                                     Equation{{z}, {v2, v3, v4}}};
        LiaFormula f = binding_length_image(solved, vars, pool);
        REQUIRE(f.children.size() == 5);
        LiaModel m{{pool.length_of("v1"), 1}, {pool.length_of("v2"), 2}, {pool.length_of("v3"), 3},
                   {pool.length_of("v4"), 4}, {pool.length_of("x"), 3},  {pool.length_of("y"), 3},
                   {pool.length_of("u"), 4},  {pool.length_of("w"), 1},  {pool.length_of("z"), 9}};
        CHECK(eval_lia(f, m));
    }
}
