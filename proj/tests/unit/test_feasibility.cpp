#include "alpnet/errors.hpp"
#include "alpnet/feasibility.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace alpnet;

namespace {

Eigen::MatrixXd sym_gain() {
    Eigen::MatrixXd v(2, 2);
    v << 0, 0.5, 0.5, 0;
    return v;
}

AffineModel symmetric() { return AffineModel(sym_gain(), Eigen::Vector2d(1, 1)); }

MinStrategyModel orthogonal_pair() {
    Eigen::VectorXcd e1(2), e2(2);
    e1 << 1, 0;
    e2 << 0, 1;
    return MinStrategyModel({{e1, e2}, {e1, e2}}, Eigen::Vector2d(1, 1));
}

}  // namespace

TEST_CASE("spectral index of the symmetric pair") {
    const auto m = symmetric();
    CHECK(c_gamma_affine(m, SirTargets::common(2, 1, 1.5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c_gamma_affine(m, SirTargets::common(2, 3, 1.5)) == doctest::Approx(1.5).epsilon(1e-12));
    const AffineModel zero(Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d(1, 1, 1));
    CHECK(c_gamma_affine(zero, SirTargets::common(3, 2, 1.5)) == doctest::Approx(0.0));
}

TEST_CASE("spectral index matches a dense eigen solve") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> g(0.2, 3.0);
    for (int i = 0; i < 50; ++i) {
        const Eigen::Index k = 2 + i % 6;
        const auto d = oracle::random_affine(rng, k, 0.6);
        Eigen::VectorXd gamma(k);
        for (auto& x : gamma) x = g(rng);
        const double rho = oracle::spectral_radius(gamma.asDiagonal() * d.v);
        CHECK(c_gamma_affine(AffineModel(d.v, d.z), SirTargets(gamma, 1.5)) ==
              doctest::Approx(rho).epsilon(1e-9));
    }
}

TEST_CASE("reducible gain matrix still gets a value") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
    v(0, 1) = 0.4;  // user 2 is decoupled, 0 and 1 form a chain
    const AffineModel m(v, Eigen::Vector3d(1, 1, 1));
    CHECK(c_gamma_affine(m, SirTargets::common(3, 1, 1.5)) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("general feasibility agrees with the spectral value") {
    const auto m = symmetric();
    const auto g1 = c_gamma_general(m, SirTargets::common(2, 1, 1.5));
    CHECK(g1.verdict == Verdict::feasible);
    CHECK(g1.value == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(c_gamma_general(m, SirTargets::common(2, 3, 1.5)).verdict == Verdict::infeasible);
    CHECK(decide_feasible(orthogonal_pair(), Eigen::Vector2d(1e6, 1e6)) == Verdict::feasible);
}

TEST_CASE("orthogonal min-strategy is feasible at every scale") {
    const auto r = c_gamma_general(orthogonal_pair(), SirTargets::common(2, 50, 1.5));
    CHECK(r.verdict == Verdict::feasible);
    CHECK(r.value == doctest::Approx(0.0));
}

TEST_CASE("Yates fixed point") {
    const auto m = symmetric();
    const auto t = SirTargets::common(2, 1, 1.5);
    CHECK(yates_fixed_point(m, t, Eigen::Vector2d(0, 0)).isApprox(Eigen::Vector2d(2, 2), 1e-9));
    CHECK(yates_fixed_point(m, t, Eigen::Vector2d(100, 1)).isApprox(Eigen::Vector2d(2, 2), 1e-9));
    CHECK(yates_fixed_point(m, t.with_margin(), Eigen::Vector2d(0, 0)).isApprox(Eigen::Vector2d(6, 6), 1e-9));

    SolverOptions few;
    few.max_iter = 3;
    try {
        yates_fixed_point(m, t, Eigen::Vector2d(0, 0), few);
        FAIL("expected a budget error");
    } catch (const BudgetError& e) {
        CHECK(e.last_iterate().size() == 2);
    }
}

TEST_CASE("Yates fixed point ignores the starting point and matches the linear solve") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 10; ++i) {
        const auto d = oracle::random_affine(rng, 5, 0.3);
        const AffineModel m(d.v, d.z);
        const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(5, 0.8);
        if (oracle::spectral_radius(gamma.asDiagonal() * d.v) >= 0.95) continue;
        const Eigen::VectorXd exact = oracle::affine_fixed_point(d.v, d.z, gamma);
        const PowerVector ref = yates_fixed_point(m, gamma, Eigen::VectorXd::Zero(5));
        CHECK(((ref - exact).cwiseAbs().maxCoeff() / exact.maxCoeff()) < 1e-8);
        for (int j = 0; j < 100; ++j) {
            Eigen::VectorXd p0(5);
            for (auto& x : p0) x = u(rng);
            const PowerVector p = yates_fixed_point(m, gamma, p0);
            CHECK((p - ref).cwiseAbs().maxCoeff() <= 10 * 1e-10 * ref.maxCoeff());
        }
    }
}

TEST_CASE("constrained fixed point") {
    const auto m = symmetric();
    const auto t = SirTargets::common(2, 1, 1.5);
    CHECK(constrained_fixed_point(m, t, PowerConstraints(Eigen::Vector2d(8, 8))).isApprox(Eigen::Vector2d(6, 6), 1e-9));
    CHECK(constrained_fixed_point(m, t, PowerConstraints(Eigen::Vector2d(4, 4))).isApprox(Eigen::Vector2d(4, 4), 1e-12));
    CHECK(constrained_fixed_point(m, t, PowerConstraints(Eigen::Vector2d(1e9, 1e9))).isApprox(Eigen::Vector2d(6, 6), 1e-9));
}

TEST_CASE("constrained fixed point stays inside [min{delta Gamma I(0), p_hat}, p_hat]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> cap(0.5, 20.0);
    for (int i = 0; i < 30; ++i) {
        const auto d = oracle::random_affine(rng, 4, 0.8);
        const AffineModel m(d.v, d.z);
        const auto t = SirTargets::common(4, 1.3, 1.4);
        Eigen::Vector4d hat(cap(rng), cap(rng), cap(rng), cap(rng));
        const PowerVector q = constrained_fixed_point(m, t, PowerConstraints(hat));
        const Eigen::VectorXd floor = (t.delta * t.gamma.cwiseProduct(d.z)).cwiseMin(hat);
        CHECK((q.array() <= hat.array()).all());
        CHECK((q.array() >= floor.array() * (1 - 1e-12)).all());
    }
}

TEST_CASE("vectors below delta Gamma I lie below the margin fixed point") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto m = symmetric();
    const auto t = SirTargets::common(2, 1, 1.5);
    const PowerVector pc = constrained_fixed_point(m, t, PowerConstraints(Eigen::Vector2d(8, 8)));
    int tested = 0;
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector2d p(8 * u(rng), 8 * u(rng));
        if (!(p.array() <= (t.delta * evaluate_weighted(m, t, p)).array()).all()) continue;
        ++tested;
        CHECK((p.array() <= pc.array() * (1 + 1e-9)).all());
    }
    CHECK(tested > 100);
}

TEST_CASE("constrained feasibility index") {
    const auto m = symmetric();
    const PowerConstraints four(Eigen::Vector2d(4, 4));
    const auto a = c_gamma_constrained(m, SirTargets::common(2, 1, 1.5), four);
    CHECK(a.value == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(a.minimizer.isApprox(Eigen::Vector2d(4, 4), 1e-6));
    CHECK(c_gamma_constrained(m, SirTargets::common(2, 1.5, 1.5), four).value == doctest::Approx(1.125).epsilon(1e-8));
    CHECK(c_gamma_constrained(m, SirTargets::common(2, 1.5, 1.5), PowerConstraints(Eigen::Vector2d(8, 8))).value <= 1.0);
}

TEST_CASE("constrained index against a grid search on two users") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> cap(0.5, 10.0), g(0.3, 2.0);
    for (int i = 0; i < 10; ++i) {
        const auto d = oracle::random_affine(rng, 2, 0.9);
        const AffineModel m(d.v, d.z);
        const SirTargets t(Eigen::Vector2d(g(rng), g(rng)), 1.5);
        const Eigen::Vector2d hat(cap(rng), cap(rng));
        const double grid = oracle::grid_constrained_index(
            [&](const Eigen::VectorXd& p) { return evaluate_weighted(m, t, p); }, hat);
        CHECK(c_gamma_constrained(m, t, PowerConstraints(hat)).value == doctest::Approx(grid).epsilon(1e-5));
    }
}

TEST_CASE("regime classification") {
    const auto m = symmetric();
    auto r = classify(m, SirTargets::common(2, 1, 1.5));
    CHECK(r.regime == Regime::fully_admissible);
    CHECK(r.value_source == "spectral-radius");
    REQUIRE(r.fixed_point);
    CHECK(r.fixed_point->isApprox(Eigen::Vector2d(2, 2), 1e-9));
    REQUIRE(r.margin_fixed_point);
    CHECK(r.margin_fixed_point->isApprox(Eigen::Vector2d(6, 6), 1e-9));

    CHECK(classify(m, SirTargets::common(2, 1, 2.2)).regime == Regime::delta_incompatible);
    CHECK(classify(m, SirTargets::common(2, 3, 1.5)).regime == Regime::totally_inadmissible);
    CHECK(regime_name(Regime::delta_incompatible, false) == "C2");
    CHECK(regime_name(Regime::fully_admissible, true) == "C1'");
}

TEST_CASE("a value of exactly one counts as infeasible") {
    // C(delta Gamma) = 0.5 * 2 = 1.
    CHECK(classify(symmetric(), SirTargets::common(2, 1, 2.0)).regime == Regime::delta_incompatible);
}

TEST_CASE("constrained regimes") {
    const auto m = symmetric();
    const auto t = SirTargets::common(2, 1, 1.5);
    const auto c1 = classify(m, t, PowerConstraints(Eigen::Vector2d(8, 8)));
    CHECK(c1.has_constraints);
    CHECK(c1.regime_caps == Regime::fully_admissible);
    REQUIRE(c1.p_circle);
    CHECK(c1.p_circle->isApprox(Eigen::Vector2d(6, 6), 1e-9));
    CHECK((c1.p_circle->array() <= 8.0).all());

    const auto c2 = classify(m, t, PowerConstraints(Eigen::Vector2d(4, 4)));
    CHECK(c2.regime_caps == Regime::delta_incompatible);
    CHECK_FALSE(c2.p_circle);
    REQUIRE(c2.p_prime);

    CHECK(classify(m, SirTargets::common(2, 3, 1.5), PowerConstraints(Eigen::Vector2d(8, 8))).regime_caps ==
          Regime::totally_inadmissible);
}

TEST_CASE("fully admissible is preserved by lowering targets and margin") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> shrink(0.3, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto d = oracle::random_affine(rng, 4, 0.3);
        const AffineModel m(d.v, d.z);
        const auto t = SirTargets::common(4, 1.0, 1.5);
        if (classify(m, t).regime != Regime::fully_admissible) continue;
        const double s = shrink(rng);
        const SirTargets lower(t.gamma * s, 1.0 + (t.delta - 1.0) * shrink(rng));
        CHECK(classify(m, lower).regime == Regime::fully_admissible);
    }
}

TEST_CASE("general models go through the bisection estimate") {
    Eigen::VectorXcd a(2), b(2);
    a << 1, 0.3;
    b << 0.2, 1;
    const MinStrategyModel m({{a, b}, {a, b}}, Eigen::Vector2d(1, 1));
    const auto r = classify(m, SirTargets::common(2, 1, 1.5));
    CHECK(r.value_source == "bisection-estimate");
    CHECK(r.regime != Regime::undecided);
}

TEST_CASE("report renders as JSON") {
    const auto js = to_json(classify(symmetric(), SirTargets::common(2, 1, 1.5), PowerConstraints(Eigen::Vector2d(8, 8))));
    CHECK(js.find("\"C1\"") != std::string::npos);
    CHECK(js.find("\"C1'\"") != std::string::npos);
}
