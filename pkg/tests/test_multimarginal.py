import numpy as np
import pytest

from partial_ot.analytic1d import dirac_marginals
from partial_ot.measure import DiscreteMeasure, is_submeasure
from partial_ot.multimarginal import (
    CostSpec,
    TensorSizeError,
    average_point,
    barycentric_identity_check,
    generalized_cost,
    pairwise_quadratic_cost,
    probe_partial_plans,
    solve_mm,
    solve_mm_partial,
)
from partial_ot.transport import solve_ot

from _oracles import enumerate_vertex_optimum, min_single_tuple_cost, pair_cost, random_discrete


def deltas(*pairs):
    return DiscreteMeasure(np.array([[x] for x, _ in pairs], dtype=float), [w for _, w in pairs])


class TestPairwiseCost:
    def test_two_points(self):
        assert pairwise_quadratic_cost([0.0, 1.0]) == pytest.approx(2.0)

    def test_dirac_triple(self):
        assert pairwise_quadratic_cost([-3.0, 0.0, 3.0]) == pytest.approx(108.0)

    def test_coincident_points(self):
        assert pairwise_quadratic_cost([2.0, 2.0, 2.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pairwise_quadratic_cost([np.array([0.0]), np.array([0.0, 1.0])])

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            pts = rng.normal(size=(int(rng.integers(2, 5)), 2))
            assert pairwise_quadratic_cost(pts) == pytest.approx(pair_cost(pts), rel=1e-12)


class TestAveragePoint:
    def test_triple(self):
        assert average_point([-3.0, 0.0, 3.0])[0] == 0.0

    def test_constant(self):
        assert np.allclose(average_point([[2.0, 1.0]] * 4), [2.0, 1.0])

    def test_pair_is_midpoint(self):
        assert average_point([0.0, 1.0])[0] == pytest.approx(0.5)


class TestBarycentricIdentity:
    def test_dirac_triple(self):
        lhs, rhs = barycentric_identity_check([-3.0, 0.0, 3.0])
        assert lhs == pytest.approx(108.0)
        assert rhs == pytest.approx(108.0)

    def test_pair_algebraic(self):
        lhs, rhs = barycentric_identity_check([0.5, 2.5])
        assert lhs == pytest.approx(2 * 2.0**2)
        assert rhs == pytest.approx(lhs, rel=1e-12)

    def test_hundred_random_triples(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            pts = rng.normal(scale=3.0, size=(3, 2))
            cands = rng.normal(scale=3.0, size=(4, 2))
            lhs, rhs = barycentric_identity_check(pts, candidates=list(cands))
            assert abs(lhs - rhs) <= 1e-9 * max(lhs, 1.0)


class TestSolveMm:
    def test_all_diracs_at_same_point(self):
        mu = deltas((2, 1.0))
        plan = solve_mm([mu, mu, mu])
        assert len(plan) == 1
        assert plan.cost == pytest.approx(0.0, abs=1e-12)

    def test_two_marginals_doubles_transport_cost(self):
        rng = np.random.default_rng(2)
        mu = random_discrete(rng, 5)
        nu = random_discrete(rng, 5)
        nu = DiscreteMeasure(nu.points, nu.weights * (mu.mass / nu.mass))
        _plan, ot_cost = solve_ot(mu, nu)
        plan = solve_mm([mu, nu])
        # both ordered pairs count, so the tensor cost is twice the OT cost
        assert plan.cost == pytest.approx(2.0 * ot_cost, abs=1e-8 * (1 + ot_cost))

    def test_mass_mismatch_rejected(self):
        with pytest.raises(ValueError):
            solve_mm([deltas((0, 1.0)), deltas((1, 2.0))])

    def test_tensor_cap(self, monkeypatch):
        monkeypatch.setenv("PARTIAL_OT_MAX_TENSOR", "4")
        rho = deltas((0, 1.0), (1, 1.0), (2, 1.0))
        with pytest.raises(TensorSizeError):
            solve_mm([rho, rho])
        monkeypatch.setenv("PARTIAL_OT_MAX_TENSOR", "9")
        assert solve_mm([rho, rho]).cost == pytest.approx(0.0, abs=1e-12)


class TestSolveMmPartial:
    def test_dirac_mass_one(self):
        rho = dirac_marginals()
        plan = solve_mm_partial(rho, 1.0)
        assert len(plan) == 1
        (t, w), = plan.entries
        coords = [rho[j].points[t[j], 0] for j in range(3)]
        assert coords == [-3.0, 0.0, 3.0]
        assert w == pytest.approx(1.0, abs=1e-8)
        assert plan.cost == pytest.approx(min_single_tuple_cost(rho), abs=1e-8)

    def test_dirac_mass_two_matches_enumeration(self):
        rho = dirac_marginals()
        plan = solve_mm_partial(rho, 2.0)
        assert plan.cost == pytest.approx(enumerate_vertex_optimum(rho, 2.0), abs=1e-8)
        supports = sorted(tuple(rho[j].points[t[j], 0] for j in range(3)) for t, _ in plan.entries)
        assert supports == [(-5.0, -1.0, 3.0), (-3.0, 1.0, 5.0)]

    def test_diagonal_feasible_below_overlap_mass(self):
        rho = deltas((0, 1.0), (1, 1.0))
        plan = solve_mm_partial([rho, rho, rho], 1.5)
        assert plan.cost == pytest.approx(0.0, abs=1e-9)

    def test_domination_and_mass(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            rho = [random_discrete(rng, 4) for _ in range(3)]
            m = float(rng.uniform(0.2, 1.0)) * min(r.mass for r in rho)
            plan = solve_mm_partial(rho, m)
            assert plan.mass == pytest.approx(m, abs=1e-8)
            for j in range(3):
                assert is_submeasure(plan.marginal(j), rho[j], 1e-8)

    def test_value_monotone_in_m(self):
        rng = np.random.default_rng(55)
        rho = [random_discrete(rng, 4) for _ in range(3)]
        cap = min(r.mass for r in rho)
        values = [solve_mm_partial(rho, t * cap).cost for t in np.linspace(0.1, 1.0, 6)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_matches_enumeration_on_small_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(5):
            rho = [random_discrete(rng, 3, weight_lo=0.5) for _ in range(3)]
            m = 0.8 * min(r.mass for r in rho)
            plan = solve_mm_partial(rho, m)
            oracle = enumerate_vertex_optimum(rho, m)
            assert plan.cost == pytest.approx(oracle, abs=1e-8 * (1 + oracle))

    def test_entrywise_average_identity(self):
        rho = dirac_marginals()
        plan = solve_mm_partial(rho, 2.0)
        for t, _w in plan.entries:
            pts = [rho[j].points[t[j]] for j in range(3)]
            lhs, rhs = barycentric_identity_check(pts)
            assert abs(lhs - rhs) <= 1e-9 * (1 + lhs)

    def test_m_out_of_range(self):
        rho = dirac_marginals()
        with pytest.raises(ValueError):
            solve_mm_partial(rho, 5.0)


class TestGeneralizedCost:
    def test_quadratic_candidates_recover_identity(self):
        fns = [lambda x, y: float(np.sum((x - y) ** 2))] * 3
        pts = [-3.0, 0.0, 3.0]
        spec = CostSpec.generalized(fns, [[0.0], [1.0], [-2.0]])
        cost, argmin = generalized_cost(pts, spec)
        # the mean is among the candidates, so 2N * cost is the pairwise cost
        assert 2 * 3 * cost == pytest.approx(pairwise_quadratic_cost(pts))
        assert argmin[0] == 0.0

    def test_zero_on_diagonal(self):
        fns = [lambda x, y: float(np.abs(x - y).sum())] * 2
        spec = CostSpec.generalized(fns, [[4.0]], zero_on_diagonal=True)
        cost, argmin = generalized_cost([4.0, 4.0], spec)
        assert cost == 0.0
        assert argmin[0] == 4.0

    def test_singleton_candidate_set(self):
        fns = [lambda x, y: float(np.sum((x - y) ** 2))] * 2
        spec = CostSpec.generalized(fns, [[1.0]])
        cost, _ = generalized_cost([0.0, 3.0], spec)
        assert cost == pytest.approx(1.0 + 4.0)

    def test_tie_broken_lexicographically(self):
        fns = [lambda x, y: 0.0]
        spec = CostSpec.generalized(fns, [[2.0], [-1.0]])
        _cost, argmin = generalized_cost([0.0], spec)
        assert argmin[0] == -1.0

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            CostSpec.generalized([lambda x, y: 0.0], np.zeros((0, 1)))

    def test_solver_accepts_generalized_kind(self):
        fns = [lambda x, y: float(np.sum((x - y) ** 2))] * 2
        spec = CostSpec.generalized(fns, [[0.0], [0.5], [1.0]])
        mu = deltas((0, 1.0))
        nu = deltas((1, 1.0))
        plan = solve_mm([mu, nu], spec)
        # best anchor is the midpoint: 0.25 + 0.25
        assert plan.cost == pytest.approx(0.5, abs=1e-9)


class TestProbePlans:
    def test_deterministic(self):
        rho = deltas((0, 1.0), (1, 1.0))
        a = probe_partial_plans([rho, rho, rho], 1.0, probes=6, seed=3)
        b = probe_partial_plans([rho, rho, rho], 1.0, probes=6, seed=3)
        assert [p.entries for p in a] == [p.entries for p in b]
