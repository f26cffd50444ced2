import numpy as np
import pytest

from partial_ot.linprog import (
    CscMatrix,
    LinearProgram,
    LpStallError,
    available_backends,
    probe_optimal_face,
    solve_lp,
)


def lp_min_x_geq_1():
    return LinearProgram(np.array([1.0]), a_ub=CscMatrix.from_dense([[-1.0]]), b_ub=np.array([-1.0]))


def random_lp(rng, n=6, m_eq=2, m_ub=3):
    a_eq = rng.normal(size=(m_eq, n))
    x0 = rng.uniform(0.1, 1.0, size=n)  # keeps the program feasible
    a_ub = rng.normal(size=(m_ub, n))
    return LinearProgram(
        rng.normal(size=n),
        a_eq=CscMatrix.from_dense(a_eq),
        b_eq=a_eq @ x0,
        a_ub=CscMatrix.from_dense(a_ub),
        b_ub=a_ub @ x0 + rng.uniform(0.0, 1.0, size=m_ub),
    )


class TestSolve:
    def test_min_x_subject_to_x_geq_1(self):
        sol = solve_lp(lp_min_x_geq_1())
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0, abs=1e-9)

    def test_single_pair_transport(self):
        lp = LinearProgram(
            np.array([1.0]), a_eq=CscMatrix.from_dense([[1.0], [1.0]]), b_eq=np.array([1.0, 1.0])
        )
        sol = solve_lp(lp)
        assert sol.value == pytest.approx(1.0, abs=1e-9)

    def test_infeasible(self):
        lp = LinearProgram(np.array([1.0]), a_ub=CscMatrix.from_dense([[1.0]]), b_ub=np.array([-1.0]))
        assert solve_lp(lp).status == "infeasible"

    def test_unbounded(self):
        lp = LinearProgram(np.array([-1.0]), a_ub=CscMatrix.from_dense([[0.0]]), b_ub=np.array([1.0]))
        assert solve_lp(lp).status == "unbounded"

    def test_iteration_cap_is_hard_error(self):
        rng = np.random.default_rng(0)
        with pytest.raises(LpStallError):
            solve_lp(random_lp(rng), max_iter=1)

    def test_redundant_equalities(self):
        # second row is a copy of the first; phase 1 must cope
        a = CscMatrix.from_dense([[1.0, 1.0], [1.0, 1.0]])
        sol = solve_lp(LinearProgram(np.array([1.0, 2.0]), a_eq=a, b_eq=np.array([1.0, 1.0])))
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(1.0, abs=1e-9)


class TestDeterminism:
    def test_identical_inputs_identical_outputs(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            lp = random_lp(rng)
            a = solve_lp(lp)
            b = solve_lp(lp)
            assert a.status == b.status
            if a.status == "optimal":
                assert np.array_equal(a.x, b.x)
                assert a.iterations == b.iterations
                assert a.value == b.value


class TestCertificates:
    def test_weak_duality(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            if sol.status != "optimal":
                continue
            opt_tol = 1e-9 * (1.0 + float(np.max(np.abs(lp.c))))
            dual_value = float(sol.dual @ np.concatenate([lp.b_eq, lp.b_ub]))
            assert dual_value <= sol.value + opt_tol + 1e-7 * (1.0 + abs(sol.value))

    def test_feasibility_residual(self):
        rng = np.random.default_rng(29)
        lp = random_lp(rng)
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        b_norm = max(np.max(np.abs(lp.b_eq)), np.max(np.abs(lp.b_ub)))
        assert sol.residual <= 1e-9 * (1.0 + b_norm)

    def test_transport_plan_sparsity(self):
        # balanced transportation vertex: at most rows-many nonzeros
        rng = np.random.default_rng(31)
        n1, n2 = 5, 7
        w = rng.uniform(0.5, 1.5, n1)
        v = rng.uniform(0.5, 1.5, n2)
        v *= w.sum() / v.sum()
        cost = rng.uniform(0, 4, size=n1 * n2)
        cols = [(np.array([i, n1 + j]), np.array([1.0, 1.0])) for i in range(n1) for j in range(n2)]
        lp = LinearProgram(cost, a_eq=CscMatrix.from_columns(n1 + n2, cols), b_eq=np.concatenate([w, v]))
        sol = solve_lp(lp)
        assert np.count_nonzero(sol.x > 1e-10) <= n1 + n2


class TestProbe:
    def test_unique_optimum_all_probes_agree(self):
        lp = lp_min_x_geq_1()
        sol = solve_lp(lp)
        out = probe_optimal_face(lp, sol, probes=6, seed=1)
        assert len(out) >= 1
        for v in out:
            assert np.max(np.abs(v.x - sol.x)) <= 1e-9 + 1e-6

    def test_degenerate_objective_exposes_segment(self):
        lp = LinearProgram(np.zeros(2), a_eq=CscMatrix.from_dense([[1.0, 1.0]]), b_eq=np.array([1.0]))
        sol = solve_lp(lp)
        out = probe_optimal_face(lp, sol, probes=8, seed=0)
        assert len(out) >= 2
        for v in out:
            assert v.value <= sol.value + 1e-8

    def test_probe_requires_optimal(self):
        lp = LinearProgram(np.array([1.0]), a_ub=CscMatrix.from_dense([[1.0]]), b_ub=np.array([-1.0]))
        bad = solve_lp(lp)
        with pytest.raises(ValueError):
            probe_optimal_face(lp, bad)


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled kernel not built")
class TestBackendAgreement:
    def test_same_solutions(self):
        from partial_ot import linprog

        rng = np.random.default_rng(17)
        problems = [random_lp(rng) for _ in range(15)] + [lp_min_x_geq_1()]
        results = {}
        for name, kernel in available_backends().items():
            old = linprog._kernel
            linprog._kernel = kernel
            try:
                results[name] = [solve_lp(p) for p in problems]
            finally:
                linprog._kernel = old
        for a, b in zip(results["python"], results["compiled"]):
            assert a.status == b.status
            if a.status == "optimal":
                assert a.value == pytest.approx(b.value, abs=1e-9)
                assert np.max(np.abs(a.x - b.x)) < 1e-8
