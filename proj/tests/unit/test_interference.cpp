#include "alpnet/errors.hpp"
#include "alpnet/interference.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace alpnet;

namespace {

std::shared_ptr<AffineModel> symmetric() {
    Eigen::MatrixXd v(2, 2);
    v << 0, 0.5, 0.5, 0;
    return std::make_shared<AffineModel>(v, Eigen::Vector2d(1, 1));
}

MinStrategyModel orthogonal_pair() {
    std::vector<std::vector<Eigen::VectorXcd>> ch(2, std::vector<Eigen::VectorXcd>(2));
    Eigen::VectorXcd e1(2), e2(2);
    e1 << 1, 0;
    e2 << 0, 1;
    ch[0][0] = e1;
    ch[0][1] = e2;
    ch[1][0] = e1;
    ch[1][1] = e2;
    return MinStrategyModel(ch, Eigen::Vector2d(1, 1));
}

MinStrategyModel random_min_strategy(std::mt19937_64& rng, std::size_t k, Eigen::Index n) {
    std::vector<std::vector<Eigen::VectorXcd>> ch(k);
    for (auto& row : ch)
        for (std::size_t l = 0; l < k; ++l) row.push_back(oracle::random_complex(rng, n));
    return MinStrategyModel(ch, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k)));
}

}  // namespace

TEST_CASE("affine evaluation by hand") {
    const auto m = symmetric();
    CHECK(m->evaluate(Eigen::Vector2d(2, 2)).isApprox(Eigen::Vector2d(2, 2)));
    CHECK(m->evaluate(Eigen::Vector2d(0, 0)).isApprox(Eigen::Vector2d(1, 1)));
}

TEST_CASE("evaluate rejects bad input") {
    const auto m = symmetric();
    CHECK_THROWS_AS(m->evaluate(Eigen::Vector3d(1, 1, 1)), InputError);
    CHECK_THROWS_AS(m->evaluate(Eigen::Vector2d(1, std::numeric_limits<double>::quiet_NaN())), InputError);
    CHECK_THROWS_AS(m->evaluate(Eigen::Vector2d(1, -1)), InputError);
}

TEST_CASE("affine model validation") {
    Eigen::MatrixXd v(2, 2);
    v << 0.1, 0.5, 0.5, 0;
    CHECK_THROWS_AS(AffineModel(v, Eigen::Vector2d(1, 1)), InputError);
    v(0, 0) = 0;
    v(0, 1) = -0.1;
    CHECK_THROWS_AS(AffineModel(v, Eigen::Vector2d(1, 1)), InputError);
    v(0, 1) = 0.5;
    CHECK_THROWS_AS(AffineModel(v, Eigen::Vector2d(1, 0)), InputError);
}

TEST_CASE("weighted evaluation") {
    const auto m = symmetric();
    const Eigen::Vector2d p(2, 2);
    CHECK(evaluate_weighted(*m, SirTargets(Eigen::Vector2d(1, 1), 1.5), p).isApprox(Eigen::Vector2d(2, 2)));
    CHECK(evaluate_weighted(*m, SirTargets(Eigen::Vector2d(2, 2), 1.5), p).isApprox(Eigen::Vector2d(4, 4)));
    CHECK(evaluate_weighted(*m, SirTargets(Eigen::Vector2d(1, 3), 1.5), p).isApprox(Eigen::Vector2d(2, 6)));
}

TEST_CASE("SIR target met iff p >= weighted interference") {
    const auto m = symmetric();
    const SirTargets t(Eigen::Vector2d(1.2, 0.7), 1.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 10);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d p(u(rng), u(rng));
        const Eigen::VectorXd s = sirs(*m, p);
        const Eigen::VectorXd w = evaluate_weighted(*m, t, p);
        for (int k = 0; k < 2; ++k) CHECK((s[k] >= t.gamma[k]) == (p[k] >= w[k]));
    }
}

TEST_CASE("min-strategy: nulled interference") {
    const auto m = orthogonal_pair();
    CHECK(m.evaluate(Eigen::Vector2d(5, 100))[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("min-strategy closed form is the minimum over the unit circle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_min_strategy(rng, 3, 2);
        const Eigen::Vector3d p(0.5 + trial, 2.0, 0.3);
        const Eigen::VectorXd i = m.evaluate(p);
        for (std::size_t k = 0; k < 3; ++k) {
            // A coarse grid never beats the closed form.
            for (int a = 0; a <= 24; ++a)
                for (int b = 0; b < 48; ++b) {
                    Eigen::VectorXcd u(2);
                    u << std::cos(a * M_PI / 48), std::polar(std::sin(a * M_PI / 48), b * M_PI / 24);
                    CHECK(i[static_cast<Eigen::Index>(k)] <= m.strategy_cost(k, p, u) * (1 + 1e-12));
                }
            // And the optimal receiver attains it.
            const Eigen::VectorXcd u = m.optimal_receiver(k, p);
            CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(m.strategy_cost(k, p, u) == doctest::Approx(i[static_cast<Eigen::Index>(k)]).epsilon(1e-9));
        }
    }
}

TEST_CASE("min-strategy grid variant never goes below the closed form") {
    std::mt19937_64 rng(5);
    const auto m = random_min_strategy(rng, 2, 2);
    std::vector<Eigen::VectorXcd> grid;
    for (int a = 0; a <= 30; ++a)
        for (int b = 0; b < 60; ++b) {
            Eigen::VectorXcd u(2);
            u << std::cos(a * M_PI / 60), std::polar(std::sin(a * M_PI / 60), b * M_PI / 30);
            grid.push_back(u);
        }
    const auto g = m.with_grid(grid);
    CHECK(g.uses_grid());
    const Eigen::Vector2d p(1.5, 0.7);
    const Eigen::VectorXd exact = m.evaluate(p), coarse = g.evaluate(p);
    for (int k = 0; k < 2; ++k) {
        CHECK(coarse[k] >= exact[k] * (1 - 1e-12));
        CHECK(coarse[k] <= exact[k] * 1.01);
    }
}

TEST_CASE("worst-case model is the pointwise maximum") {
    Eigen::MatrixXd v1(2, 2), v2(2, 2);
    v1 << 0, 0.5, 0.1, 0;
    v2 << 0, 0.2, 0.6, 0;
    auto a = std::make_shared<AffineModel>(v1, Eigen::Vector2d(1, 2));
    auto b = std::make_shared<AffineModel>(v2, Eigen::Vector2d(1.5, 1));
    const WorstCaseModel w({a, b});
    const Eigen::Vector2d p(3, 4);
    const Eigen::VectorXd e = a->evaluate(p).cwiseMax(b->evaluate(p));
    CHECK(w.evaluate(p).isApprox(e));
    CHECK(check_axioms(w).all_pass());
}

TEST_CASE("axiom checker") {
    SUBCASE("affine passes") {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 5; ++i) {
            const auto d = oracle::random_affine(rng, 4, 0.5);
            CHECK(check_axioms(AffineModel(d.v, d.z)).all_pass());
        }
    }
    SUBCASE("min-strategy passes") {
        std::mt19937_64 rng(2);
        CHECK(check_axioms(random_min_strategy(rng, 4, 2)).all_pass());
    }
    SUBCASE("noiseless map fails strict scalability") {
        const auto m = symmetric();
        const FunctionModel f(2, [m](const Eigen::VectorXd& p) { return Eigen::VectorXd(m->gain() * p); });
        const auto r = check_axioms(f);
        CHECK_FALSE(r.scalability);
        REQUIRE(r.counterexample);
    }
    SUBCASE("the ALP map min{p, I(p)} is not standard") {
        const auto m = symmetric();
        const FunctionModel t(2, [m](const Eigen::VectorXd& p) { return Eigen::VectorXd(p.cwiseMin(m->evaluate(p))); });
        const auto r = check_axioms(t);
        CHECK((!r.positivity || !r.scalability));
        REQUIRE(r.counterexample);
        CHECK(to_string(r.counterexample->axiom).front() == 'A');
    }
    SUBCASE("decreasing map fails monotonicity") {
        const FunctionModel f(2, [](const Eigen::VectorXd& p) {
            return Eigen::VectorXd((1.0 + p.reverse().array()).inverse() + 1.0);
        });
        CHECK_FALSE(check_axioms(f).monotonicity);
    }
}

TEST_CASE("continuity under shrinking perturbations") {
    std::mt19937_64 rng(8);
    const auto d = oracle::random_affine(rng, 3, 0.4);
    const AffineModel a(d.v, d.z);
    const auto ms = random_min_strategy(rng, 3, 2);
    const Eigen::Vector3d p(1, 2, 3), dir(0.3, -0.2, 0.5);
    for (const InterferenceModel* m : {static_cast<const InterferenceModel*>(&a), static_cast<const InterferenceModel*>(&ms)}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int h = 0; h < 30; ++h) {
            const double diff = (m->evaluate(p + std::ldexp(1.0, -h) * dir) - m->evaluate(p)).cwiseAbs().maxCoeff();
            CHECK(diff <= prev * (1 + 1e-9) + 1e-15);
            prev = diff;
        }
        CHECK(prev < 1e-7);
    }
}

TEST_CASE("asymptotic limit") {
    const auto m = symmetric();
    const AsymptoticModel j(m, Eigen::Vector2d(1, 1));
    CHECK(asymptotic_limit(j, Eigen::Vector2d(1, 1), 1e-8).isApprox(Eigen::Vector2d(0.5, 0.5), 1e-7));
    CHECK(asymptotic_limit(j, Eigen::Vector2d(2, 4), 1e-8).isApprox(Eigen::Vector2d(2, 1), 1e-7));
    const Eigen::Vector2d p(0.7, 1.9);
    CHECK(asymptotic_limit(j, 3 * p, 1e-8).isApprox(3 * asymptotic_limit(j, p, 1e-8), 1e-7));
    CHECK_THROWS_AS(asymptotic_limit(j, Eigen::Vector2d(0, 1), 1e-8), InputError);
}

TEST_CASE("asymptotic limit of affine maps is Gamma V p") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 10; ++i) {
        const auto d = oracle::random_affine(rng, 4, 0.5);
        const Eigen::Vector4d g(1, 2, 0.5, 3);
        const AsymptoticModel j(std::make_shared<AffineModel>(d.v, d.z), g);
        const Eigen::Vector4d p(1, 0.3, 2, 5);
        CHECK(asymptotic_limit(j, p, 1e-8).isApprox(g.cwiseProduct(d.v * p), 1e-7));
    }
}

TEST_CASE("asymptotic limit is homogeneous, monotone and nonnegative") {
    std::mt19937_64 rng(4);
    const auto ms = std::make_shared<MinStrategyModel>(random_min_strategy(rng, 3, 2));
    const AsymptoticModel j(ms, Eigen::Vector3d(1, 1, 1));
    std::uniform_real_distribution<double> u(0.1, 5);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector3d p(u(rng), u(rng), u(rng));
        const Eigen::VectorXd jp = asymptotic_limit(j, p, 1e-8);
        CHECK((jp.array() >= 0).all());
        CHECK(asymptotic_limit(j, 2.5 * p, 1e-8).isApprox(2.5 * jp, 1e-6));
        const Eigen::Vector3d q = p + Eigen::Vector3d(u(rng), 0, u(rng));
        CHECK((asymptotic_limit(j, q, 1e-8).array() >= jp.array() * (1 - 1e-6)).all());
    }
}

TEST_CASE("asymptotic limit with a short schedule runs out of probes") {
    const FunctionModel slow(1, [](const Eigen::VectorXd& p) { return Eigen::VectorXd(p.array().sqrt() + 1.0); });
    const AsymptoticModel j(std::make_shared<FunctionModel>(slow), Eigen::VectorXd::Ones(1), {1, 10, 100});
    CHECK_THROWS_AS(asymptotic_limit(j, Eigen::VectorXd::Ones(1), 1e-8), BudgetError);
}

TEST_CASE("restricted asymptotic map over the active users") {
    const auto j = std::make_shared<AsymptoticModel>(symmetric(), Eigen::Vector2d(1, 1));
    const auto r = restrict_active(j, {true, false}, Eigen::VectorXd::Constant(1, 2.0));
    CHECK(r->users() == 1);
    CHECK(r->evaluate(Eigen::VectorXd::Constant(1, 0.3))[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r->evaluate(Eigen::VectorXd::Constant(1, 30.0))[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(check_axioms(*r).all_pass());

    const auto empty = restrict_active(j, {false, false}, Eigen::Vector2d(1, 1));
    CHECK(empty->users() == 0);
    CHECK(check_axioms(*empty).all_pass());

    CHECK_THROWS_AS(restrict_active(j, {true, false}, Eigen::VectorXd::Zero(1)), InputError);
}

TEST_CASE("partition helpers round-trip") {
    const UserMask m{true, false, true, false};
    const Eigen::Vector4d v(1, 2, 3, 4);
    CHECK(merge_partition(m, select(v, m, true), select(v, m, false)) == v);
}
