#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "strand/lia.hpp"

using namespace strand;

namespace {

LiaFormula eq(LinExpr l, LinExpr r) { return LiaFormula::compare(l, LiaCmp::Eq, r); }
LiaFormula le(LinExpr l, LinExpr r) { return LiaFormula::compare(l, LiaCmp::Le, r); }

}  // namespace

TEST_CASE("divisibility: 3k = 8 is unsat over the integers") {
    LiaVarPool pool;
    LiaVar k = pool.int_var("k");
    auto f = eq(LinExpr::of(k, 3), LinExpr::lit(8));
    auto r = lia_solve_builtin(f, pool);
    CHECK(r.status == LiaStatus::Unsat);
}

TEST_CASE("trivially true formula is sat with empty model") {
    LiaVarPool pool;
    auto r = lia_solve_builtin(LiaFormula::top(), pool);
    REQUIRE(r.status == LiaStatus::Sat);
    CHECK(r.model.empty());
}

TEST_CASE("negative solutions for plain integer variables") {
    LiaVarPool pool;
    LiaVar k = pool.int_var("k");
    auto f = le(LinExpr::of(k), LinExpr::lit(-5));
    auto r = lia_solve_builtin(f, pool);
    REQUIRE(r.status == LiaStatus::Sat);
    CHECK(r.model[k] <= -5);
}

TEST_CASE("length variables stay non-negative") {
    LiaVarPool pool;
    LiaVar x = pool.length_of("x");
    auto f = le(LinExpr::of(x), LinExpr::lit(-1));
    CHECK(lia_solve_builtin(f, pool).status == LiaStatus::Unsat);
}

TEST_CASE("conjunction, disjunction and disequality") {
    LiaVarPool pool;
    LiaVar a = pool.int_var("a"), b = pool.int_var("b");
    // a + b = 4 and a != b and (a <= 0 or b <= 1)
    auto f = LiaFormula::conj({
        eq(LinExpr().add(LinExpr::of(a)).add(LinExpr::of(b)), LinExpr::lit(4)),
        LiaFormula::compare(LinExpr::of(a), LiaCmp::Ne, LinExpr::of(b)),
        LiaFormula::disj({le(LinExpr::of(a), LinExpr::lit(0)), le(LinExpr::of(b), LinExpr::lit(1))}),
    });
    auto r = lia_solve_builtin(f, pool);
    REQUIRE(r.status == LiaStatus::Sat);
    int64_t va = r.model[a], vb = r.model[b];
    CHECK(va + vb == 4);
    CHECK(va != vb);
    CHECK((va <= 0 || vb <= 1));
}

TEST_CASE("negation handling through nnf") {
    LiaVarPool pool;
    LiaVar a = pool.int_var("a");
    auto f = LiaFormula::negate(le(LinExpr::of(a), LinExpr::lit(3)));
    auto r = lia_solve_builtin(LiaFormula::conj({f, le(LinExpr::of(a), LinExpr::lit(4))}), pool);
    REQUIRE(r.status == LiaStatus::Sat);
    CHECK(r.model[a] == 4);
}

TEST_CASE("random small systems against enumeration") {
    std::mt19937 rng(321);
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<int> cst(-6, 6);
    std::uniform_int_distribution<int> natoms(1, 4);
    std::uniform_int_distribution<int> kind(0, 2);

    for (int round = 0; round < 120; ++round) {
        LiaVarPool pool;
        LiaVar x = pool.int_var("x"), y = pool.int_var("y");
        std::vector<LiaFormula> atoms;
        // bound the space so enumeration is exact
        atoms.push_back(le(LinExpr::of(x), LinExpr::lit(5)));
        atoms.push_back(le(LinExpr::lit(-5), LinExpr::of(x)));
        atoms.push_back(le(LinExpr::of(y), LinExpr::lit(5)));
        atoms.push_back(le(LinExpr::lit(-5), LinExpr::of(y)));
        int n = natoms(rng);
        std::vector<std::tuple<int, int, int, int>> rows;
        for (int i = 0; i < n; ++i) {
            int cx = coef(rng), cy = coef(rng), c = cst(rng), k = kind(rng);
            rows.push_back({cx, cy, c, k});
            LinExpr e;
            e.add(LinExpr::of(x, cx)).add(LinExpr::of(y, cy));
            LiaCmp cmp = k == 0 ? LiaCmp::Le : (k == 1 ? LiaCmp::Eq : LiaCmp::Ne);
            atoms.push_back(LiaFormula::compare(e, cmp, LinExpr::lit(c)));
        }
        auto r = lia_solve_builtin(LiaFormula::conj(atoms), pool);
        REQUIRE(r.status != LiaStatus::Unknown);

        bool expect = false;
        for (int vx = -5; vx <= 5 && !expect; ++vx) {
            for (int vy = -5; vy <= 5 && !expect; ++vy) {
                bool ok = true;
                for (auto& [cx, cy, c, k] : rows) {
                    int lhs = cx * vx + cy * vy;
                    if (k == 0 && !(lhs <= c)) ok = false;
                    if (k == 1 && !(lhs == c)) ok = false;
                    if (k == 2 && !(lhs != c)) ok = false;
                }
                if (ok) expect = true;
            }
        }
        CAPTURE(round);
        REQUIRE((r.status == LiaStatus::Sat) == expect);
        if (r.status == LiaStatus::Sat) {
            int64_t vx = r.model[x], vy = r.model[y];
            for (auto& [cx, cy, c, k] : rows) {
                int64_t lhs = cx * vx + cy * vy;
                if (k == 0) REQUIRE(lhs <= c);
                if (k == 1) REQUIRE(lhs == c);
                if (k == 2) REQUIRE(lhs != c);
            }
        }
    }
}

TEST_CASE("smtlib2 emission follows the fixed contract") {
    LiaVarPool pool;
    LiaVar x = pool.length_of("x");
    LiaVar k = pool.int_var("k");
    auto f = eq(LinExpr::of(x), LinExpr().add(LinExpr::of(k, 3)).add(LinExpr::lit(8)));
    std::string text = to_smtlib2(f, pool);
    CHECK(text ==
          "(set-logic LIA)\n"
          "(declare-fun |len!x| () Int)\n"
          "(declare-fun k () Int)\n"
          "(assert (and (= (+ |len!x| (* (- 3) k) (- 8)) 0) (<= (* (- 1) |len!x|) 0)))\n"
          "(check-sat)\n"
          "(get-value (|len!x| k))\n");
}

TEST_CASE("external backend round-trips through a stub solver") {
    // the stub reads nothing and answers a fixed model
    std::string script = "/tmp/strand_fake_solver.sh";
    {
        FILE* f = fopen(script.c_str(), "w");
        REQUIRE(f != nullptr);
        fputs("#!/bin/sh\necho sat\necho '((|len!x| 8) (k 0))'\n", f);
        fclose(f);
    }
    REQUIRE(system(("chmod +x " + script).c_str()) == 0);

    LiaVarPool pool;
    LiaVar x = pool.length_of("x");
    LiaVar k = pool.int_var("k");
    auto f = eq(LinExpr::of(x), LinExpr::lit(8));
    (void)k;
    auto r = lia_solve_external(f, pool, script);
    REQUIRE(r.status == LiaStatus::Sat);
    CHECK(r.model[x] == 8);
}
