#include <doctest.h>

#include <random>

#include "ipi/bellman.hpp"
#include "ipi/errors.hpp"
#include "ipi/generators.hpp"
#include "oracles.hpp"

using namespace ipi;

namespace {

/// Two states, two actions, both actions leave every state in place.
MdpInstance identity_pair(double gamma = 0.9) {
    MdpInstance mdp;
    mdp.n = 2;
    mdp.m = 2;
    mdp.gamma = gamma;
    mdp.stage_cost = DenseMatrix(2, 2);
    mdp.stage_cost(0, 1) = 1.0;
    mdp.stage_cost(1, 0) = 1.0;
    CsrBuilder b(4, 2);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
            const double one = 1.0;
            b.add_row(std::span(&s, 1), std::span(&one, 1));
        }
    }
    mdp.transitions = std::move(b).finish();
    return mdp;
}

MdpInstance unit_toy() {
    return build_from_callbacks(
        1, 1, 0.5, [](std::size_t, std::size_t) { return 1.0; },
        [](std::size_t, std::size_t) { return TransitionRow{{0}, {1.0}}; });
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale = 10.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

} // namespace

TEST_SUITE("bellman") {

TEST_CASE("greedy_policy examples") {
    const MdpInstance mdp = identity_pair();
    const GreedyResult g = greedy_policy(mdp, std::vector<double>{0.0, 0.0});
    CHECK(g.policy.actions == std::vector<std::size_t>{0, 1});
    CHECK(g.applied.values == std::vector<double>{0.0, 0.0});

    MdpInstance flat = gen_random({.n = 5, .m = 4, .nnz_per_row = 3, .gamma = 0.9, .seed = 2});
    flat.stage_cost = DenseMatrix(5, 4, 3.0);
    // V = 0 and constant costs: every action ties exactly, ties go to action 0
    const GreedyResult t = greedy_policy(flat, std::vector<double>(5, 0.0));
    CHECK(t.policy.actions == std::vector<std::size_t>(5, 0));
}

TEST_CASE("greedy_policy matches the double-loop oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MdpInstance mdp = gen_random({.n = 6, .m = 3, .nnz_per_row = 3, .gamma = 0.9, .seed = seed});
        const auto d = oracle::densify(mdp);
        const auto V = random_values(6, seed + 100);
        const GreedyResult g = greedy_policy(mdp, V);
        CHECK(g.policy.actions == oracle::greedy(d, V));
        const auto TV = oracle::bellman(d, V);
        for (std::size_t s = 0; s < 6; ++s) CHECK(g.applied[s] == doctest::Approx(TV[s]).epsilon(1e-14));
    }
}

TEST_CASE("max mode takes the row maximum") {
    MdpInstance mdp = gen_random({.n = 6, .m = 3, .nnz_per_row = 2, .gamma = 0.8, .seed = 4});
    mdp.mode = Mode::Max;
    const auto d = oracle::densify(mdp);
    const auto V = random_values(6, 5);
    CHECK(greedy_policy(mdp, V).policy.actions == oracle::greedy(d, V));
    // stored costs are not touched
    CHECK(mdp.stage_cost == gen_random({.n = 6, .m = 3, .nnz_per_row = 2, .gamma = 0.8, .seed = 4}).stage_cost);
}

TEST_CASE("greedy result is independent of the worker count") {
    const MdpInstance mdp = gen_random({.n = 300, .m = 7, .nnz_per_row = 4, .gamma = 0.9, .seed = 6});
    const auto V = random_values(300, 7);
    const GreedyResult ref = greedy_policy(mdp, V);
    for (std::size_t R : {2u, 4u, 5u}) {
        Executor exec(R);
        const GreedyResult g = greedy_policy(mdp, V, exec);
        CHECK(g.policy == ref.policy);
        CHECK(g.applied == ref.applied);
    }
}

TEST_CASE("bellman_residual examples") {
    const Residual r = bellman_residual(unit_toy(), std::vector<double>{0.0});
    CHECK(r.vector == std::vector<double>{-1.0});
    CHECK(r.inf_norm == 1.0);

    const MdpInstance mdp = gen_random({.n = 5, .m = 3, .nnz_per_row = 2, .gamma = 0.9, .seed = 13});
    const Residual r0 = bellman_residual(mdp, std::vector<double>(5, 0.0));
    for (std::size_t s = 0; s < 5; ++s) {
        double lo = mdp.stage_cost(s, 0);
        for (std::size_t a = 1; a < 3; ++a) lo = std::min(lo, mdp.stage_cost(s, a));
        CHECK(r0.vector[s] == -lo);
    }

    const auto d = oracle::densify(mdp);
    const auto vstar = oracle::brute_force(d);
    CHECK(bellman_residual(mdp, vstar).inf_norm <= 1e-10);
}

TEST_CASE("policy_residual examples") {
    const Residual r = policy_residual(unit_toy(), Policy{{0}}, std::vector<double>{2.0});
    CHECK(r.vector == std::vector<double>{0.0});

    const MdpInstance mdp = gen_random({.n = 6, .m = 3, .nnz_per_row = 3, .gamma = 0.95, .seed = 14});
    const auto d = oracle::densify(mdp);
    const Policy pi{{2, 1, 0, 0, 1, 2}};
    const auto vpi = oracle::evaluate(d, pi.actions);
    CHECK(policy_residual(mdp, pi, vpi).inf_norm <= 1e-10);

    const auto V = random_values(6, 15);
    const auto tv = oracle::apply_policy(d, pi.actions, V);
    const Residual rv = policy_residual(mdp, pi, V);
    for (std::size_t s = 0; s < 6; ++s) CHECK(rv.vector[s] == doctest::Approx(V[s] - tv[s]).epsilon(1e-13));
}

TEST_CASE("policy_cost_exact examples") {
    CHECK(policy_cost_exact(unit_toy(), Policy{{0}}).values[0] == doctest::Approx(2.0).epsilon(1e-15));

    const MdpInstance twin = build_from_callbacks(
        2, 1, 0.7, [](std::size_t, std::size_t) { return 3.0; },
        [](std::size_t s, std::size_t) { return TransitionRow{{s}, {1.0}}; });
    const CostVector v = policy_cost_exact(twin, Policy{{0, 0}});
    CHECK(v[0] == v[1]);

    const MdpInstance mdp = gen_random({.n = 4, .m = 2, .nnz_per_row = 3, .gamma = 0.9, .seed = 16});
    const Policy pi{{1, 0, 1, 1}};
    const CostVector exact = policy_cost_exact(mdp, pi);
    // fixed-point iteration of T_pi to convergence
    std::vector<double> x(4, 0.0);
    for (int k = 0; k < 2000; ++k) x = apply_policy_operator(mdp, pi, x);
    for (std::size_t s = 0; s < 4; ++s) CHECK(exact[s] == doctest::Approx(x[s]).epsilon(1e-12));

    const auto d = oracle::densify(mdp);
    const auto g = oracle::policy_cost(d, pi.actions);
    auto P = oracle::policy_matrix(d, pi.actions);
    double worst = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = exact[i];
        for (std::size_t j = 0; j < 4; ++j) acc -= 0.9 * P[i][j] * exact[j];
        worst = std::max(worst, std::abs(acc - g[i]));
        gmax = std::max(gmax, std::abs(g[i]));
    }
    CHECK(worst <= 1e-10 * std::max(1.0, gmax));
}

TEST_CASE("policy_cost_exact refuses oversized problems") {
    const MdpInstance mdp = gen_random({.n = 50, .m = 1, .nnz_per_row = 2, .gamma = 0.9, .seed = 1});
    CHECK_THROWS_AS(policy_cost_exact(mdp, Policy{std::vector<std::size_t>(50, 0)}, 40), ResourceError);
}

TEST_CASE("greedy value never exceeds any policy's value (min mode)") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const MdpInstance mdp = gen_random({.n = 12, .m = 4, .nnz_per_row = 3, .gamma = 0.9, .seed = seed});
        const auto V = random_values(12, seed + 1);
        const auto TV = greedy_policy(mdp, V).applied;
        std::mt19937_64 rng(seed);
        for (int k = 0; k < 5; ++k) {
            Policy pi{std::vector<std::size_t>(12)};
            for (auto& a : pi.actions) a = rng() % 4;
            const auto tpi = apply_policy_operator(mdp, pi, V);
            for (std::size_t s = 0; s < 12; ++s) CHECK(TV[s] <= tpi[s]);
        }
    }
}

TEST_CASE("bellman operator is a gamma contraction") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double gamma = seed % 2 ? 0.99 : 0.7;
        const MdpInstance mdp = gen_random({.n = 15, .m = 3, .nnz_per_row = 4, .gamma = gamma, .seed = seed});
        const auto V = random_values(15, seed + 2);
        const auto W = random_values(15, seed + 3);
        const auto TV = greedy_policy(mdp, V).applied;
        const auto TW = greedy_policy(mdp, W).applied;
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t s = 0; s < 15; ++s) {
            lhs = std::max(lhs, std::abs(TV[s] - TW[s]));
            rhs = std::max(rhs, std::abs(V[s] - W[s]));
        }
        CHECK(lhs <= gamma * rhs + 1e-12);
    }
}

TEST_CASE("adding a constant shifts the greedy value by gamma times it") {
    const MdpInstance mdp = gen_random({.n = 10, .m = 3, .nnz_per_row = 10, .gamma = 0.5, .seed = 3});
    const std::vector<double> V{0.0, 0.25, -0.5, 0.75, 1.0, -1.0, 0.5, 0.125, 0.0, -0.25};
    const double c = 4.0;
    std::vector<double> W = V;
    for (double& x : W) x += c;
    const GreedyResult a = greedy_policy(mdp, V);
    const GreedyResult b = greedy_policy(mdp, W);
    CHECK(a.policy == b.policy);
    for (std::size_t s = 0; s < 10; ++s) CHECK(b.applied[s] - a.applied[s] == doctest::Approx(0.5 * c).epsilon(1e-12));
}

TEST_CASE("policy residual of the greedy policy equals the bellman residual") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MdpInstance mdp = gen_random({.n = 20, .m = 5, .nnz_per_row = 4, .gamma = 0.9, .seed = seed});
        const auto V = random_values(20, seed);
        const Policy pi = greedy_policy(mdp, V).policy;
        CHECK(policy_residual(mdp, pi, V).vector == bellman_residual(mdp, V).vector);
    }
}

} // TEST_SUITE
