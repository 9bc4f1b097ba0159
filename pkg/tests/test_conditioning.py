"""Perturbation operator and the three condition-number families."""
import dataclasses
import math

import numpy as np
import pytest

from tlsekit import (
    TlseProblem,
    Weights,
    apply_k,
    build_k_operator,
    condition_report,
    kappa_mixed_componentwise_exact,
    kappa_mixed_componentwise_upper,
    kappa_normwise_compact,
    kappa_normwise_exact,
    kappa_normwise_upper,
    materialize_k,
    solve_qr_svd,
    tls_specialization,
)
from tlsekit.errors import InputError, ResourceError, UndefinedConditionError

PHI = (1 + math.sqrt(5)) / 2

WEIGHT_GRID = [Weights(1.0, 1.0), Weights(10.0, 1.0), Weights(1.0, 10.0)]


def seeded_problem(seed: int, p: int = 3, n: int = 8, q: int = 15) -> TlseProblem:
    rng = np.random.default_rng(seed)
    return TlseProblem(
        C=rng.standard_normal((p, n)),
        d=rng.standard_normal(p),
        A=rng.standard_normal((q, n)),
        b=rng.standard_normal(q),
    )


def tls_problem(seed: int = 9, n: int = 5, q: int = 12) -> TlseProblem:
    rng = np.random.default_rng(seed)
    return TlseProblem(
        C=np.zeros((0, n)),
        d=np.zeros(0),
        A=rng.standard_normal((q, n)),
        b=rng.standard_normal(q),
    )


def hand_problem():
    return TlseProblem(C=[[1.0, 0.0]], d=[2.0], A=np.eye(2), b=[2.0, 3.0])


def golden_problem():
    return TlseProblem(
        C=np.zeros((0, 1)),
        d=np.zeros(0),
        A=np.array([[1.0], [0.0]]),
        b=np.array([1.0, 1.0]),
    )


def zero_solution_problem():
    # A.T b = 0 with ||b|| below sigma_min(A) puts the optimum at x = 0
    return TlseProblem(
        C=np.zeros((0, 2)),
        d=np.zeros(0),
        A=np.array([[2.0, 0.0], [0.0, 2.0], [0.0, 0.0]]),
        b=np.array([0.0, 0.0, 1.0]),
    )


def vec_stack(dL: np.ndarray, dh: np.ndarray) -> np.ndarray:
    return np.concatenate([dL.reshape(-1, order="F"), dh])


class TestWeights:
    def test_defaults(self):
        w = Weights()
        assert w.alpha == 1.0 and w.beta == 1.0

    @pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, -2.0)])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(InputError):
            Weights(*bad)


class TestOperatorAssembly:
    def test_unconstrained_operator_matches_analytic_form(self):
        # independent reconstruction from the raw data: with
        # P = A.T A - sigma^2 I the gain is -P^{-1}(A.T - 2 x r.T / rho^2)
        # and the materialized operator is
        # [ (x.T kron gain) - P^{-1}(I kron r.T), -gain ]
        problem = tls_problem()
        a, b = problem.A, problem.b
        n = problem.n
        _, s, vt = np.linalg.svd(np.hstack([a, b[:, None]]))
        v = vt.T[:, -1]
        x_oracle = -v[:n] / v[n]
        sigma = s[-1]
        r = a @ x_oracle - b
        rho_sq = 1.0 + float(x_oracle @ x_oracle)
        p_inv = np.linalg.inv(a.T @ a - sigma**2 * np.eye(n))
        gain_oracle = -p_inv @ (a.T - (2.0 / rho_sq) * np.outer(x_oracle, r))
        mat_oracle = np.hstack(
            [
                np.kron(x_oracle[None, :], gain_oracle)
                - p_inv @ np.kron(np.eye(n), r[None, :]),
                -gain_oracle,
            ]
        )

        solution = solve_qr_svd(problem)
        op = build_k_operator(problem, solution)
        np.testing.assert_allclose(solution.x, x_oracle, rtol=1e-10)
        np.testing.assert_allclose(op.adjoint_dir, r, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(op.gain, gain_oracle, rtol=1e-8, atol=1e-12)
        for form in ("combined", "split"):
            np.testing.assert_allclose(
                materialize_k(op, form), mat_oracle, rtol=1e-8, atol=1e-12
            )

    def test_zero_residual_collapses_adjoint(self):
        problem = hand_problem()
        solution = solve_qr_svd(problem)
        op = build_k_operator(problem, solution)
        assert np.linalg.norm(op.adjoint_dir) <= 1e-12
        expected = -np.hstack(
            [solution.constraint_gain, solution.null_gram_inv @ problem.A.T]
        )
        np.testing.assert_allclose(op.gain, expected, atol=1e-12)

    def test_shape_properties(self):
        problem = seeded_problem(0)
        op = build_k_operator(problem, solve_qr_svd(problem))
        assert (op.n, op.p, op.m) == (problem.n, problem.p, problem.m)


class TestApplyAndMaterialize:
    @pytest.mark.parametrize("seed", [0, 1])
    @pytest.mark.parametrize("form", ["combined", "split"])
    def test_apply_matches_materialized_action(self, seed, form):
        problem = seeded_problem(seed)
        op = build_k_operator(problem, solve_qr_svd(problem))
        mat = materialize_k(op, form)
        rng = np.random.default_rng(100 + seed)
        for _ in range(5):
            dl = rng.standard_normal((problem.m, problem.n))
            dh = rng.standard_normal(problem.m)
            direct = apply_k(op, dl, dh)
            via_matrix = mat @ vec_stack(dl, dh)
            assert np.linalg.norm(direct - via_matrix) <= 1e-12 * max(
                np.linalg.norm(direct), 1e-300
            )

    def test_forms_are_identical(self):
        problem = seeded_problem(2)
        op = build_k_operator(problem, solve_qr_svd(problem))
        np.testing.assert_allclose(
            materialize_k(op, "combined"),
            materialize_k(op, "split"),
            atol=1e-13,
        )

    def test_apply_validates_shapes(self):
        problem = seeded_problem(3)
        op = build_k_operator(problem, solve_qr_svd(problem))
        with pytest.raises(InputError):
            apply_k(op, np.zeros((2, 2)), np.zeros(problem.m))
        with pytest.raises(InputError):
            apply_k(op, np.zeros((problem.m, problem.n)), np.zeros(3))

    def test_unknown_form_rejected(self):
        problem = seeded_problem(3)
        op = build_k_operator(problem, solve_qr_svd(problem))
        with pytest.raises(InputError):
            materialize_k(op, "dense")

    def test_materialize_respects_memory_cap(self, monkeypatch):
        problem = seeded_problem(3)
        op = build_k_operator(problem, solve_qr_svd(problem))
        monkeypatch.setenv("TLSE_MEM_CAP", "10")
        with pytest.raises(ResourceError):
            materialize_k(op)


class TestNormwise:
    @pytest.mark.parametrize("weights", WEIGHT_GRID)
    @pytest.mark.parametrize(
        "signs", [(1, 1), (-1, -1), (1, -1), (-1, 1)]
    )
    def test_compact_equals_exact(self, weights, signs):
        problem = seeded_problem(4)
        op = build_k_operator(problem, solve_qr_svd(problem))
        exact = kappa_normwise_exact(op, weights, problem.L, problem.h)
        compact = kappa_normwise_compact(
            op, weights, problem.L, problem.h, signs=signs
        )
        assert compact == pytest.approx(exact, rel=1e-10)

    def test_compact_rejects_bad_signs(self):
        problem = seeded_problem(4)
        op = build_k_operator(problem, solve_qr_svd(problem))
        with pytest.raises(InputError):
            kappa_normwise_compact(op, Weights(), problem.L, problem.h, signs=(2, 1))

    def test_zero_adjoint_branch(self):
        # force an exactly zero adjoint direction; the compact formula then
        # reduces to the gain norm times the weight factor
        problem = hand_problem()
        op = build_k_operator(problem, solve_qr_svd(problem))
        op0 = dataclasses.replace(op, adjoint_dir=np.zeros(op.m))
        for weights in WEIGHT_GRID:
            exact = kappa_normwise_exact(op0, weights, problem.L, problem.h)
            compact = kappa_normwise_compact(op0, weights, problem.L, problem.h)
            assert compact == pytest.approx(exact, rel=1e-12)

    @pytest.mark.parametrize("weights", WEIGHT_GRID)
    def test_upper_bounds_dominate(self, weights):
        problem = seeded_problem(5)
        op = build_k_operator(problem, solve_qr_svd(problem))
        exact = kappa_normwise_exact(op, weights, problem.L, problem.h)
        tight, loose = kappa_normwise_upper(op, weights, problem.L, problem.h)
        assert exact <= tight * (1 + 1e-12)
        assert tight <= loose * (1 + 1e-12)

    def test_zero_solution_is_undefined(self):
        problem = zero_solution_problem()
        op = build_k_operator(problem, solve_qr_svd(problem))
        with pytest.raises(UndefinedConditionError):
            kappa_normwise_exact(op, Weights(), problem.L, problem.h)
        with pytest.raises(UndefinedConditionError):
            kappa_normwise_upper(op, Weights(), problem.L, problem.h)


class TestMixedComponentwise:
    def test_mixed_below_componentwise(self):
        problem = seeded_problem(6)
        op = build_k_operator(problem, solve_qr_svd(problem))
        mixed = kappa_mixed_componentwise_exact(op, problem.L, problem.h)
        assert mixed.kappa_m <= mixed.kappa_c
        assert mixed.kappa_c_finite <= mixed.kappa_c

    def test_upper_bounds_dominate(self):
        problem = seeded_problem(6)
        op = build_k_operator(problem, solve_qr_svd(problem))
        mixed = kappa_mixed_componentwise_exact(op, problem.L, problem.h)
        upper_m, upper_c = kappa_mixed_componentwise_upper(
            op, problem.L, problem.h
        )
        assert mixed.kappa_m <= upper_m * (1 + 1e-12)
        assert mixed.kappa_c <= upper_c * (1 + 1e-12)

    def test_zero_solution_is_undefined(self):
        problem = zero_solution_problem()
        op = build_k_operator(problem, solve_qr_svd(problem))
        with pytest.raises(UndefinedConditionError):
            kappa_mixed_componentwise_exact(op, problem.L, problem.h)
        with pytest.raises(UndefinedConditionError):
            kappa_mixed_componentwise_upper(op, problem.L, problem.h)


class TestFirstOrderFidelity:
    def test_prediction_error_shrinks_linearly(self):
        problem = seeded_problem(7)
        solution = solve_qr_svd(problem)
        op = build_k_operator(problem, solution)
        rng = np.random.default_rng(21)
        dl_dir = rng.standard_normal((problem.m, problem.n))
        dh_dir = rng.standard_normal(problem.m)
        norm = math.sqrt(
            np.linalg.norm(dl_dir, "fro") ** 2 + np.linalg.norm(dh_dir) ** 2
        )
        dl_dir /= norm
        dh_dir /= norm
        etas = []
        for scale in (1e-3, 1e-4, 1e-5):
            perturbed = TlseProblem(
                C=problem.C + scale * dl_dir[: problem.p],
                d=problem.d + scale * dh_dir[: problem.p],
                A=problem.A + scale * dl_dir[problem.p :],
                b=problem.b + scale * dh_dir[problem.p :],
            )
            dx = solve_qr_svd(perturbed).x - solution.x
            predicted = apply_k(op, scale * dl_dir, scale * dh_dir)
            etas.append(
                float(np.linalg.norm(dx - predicted) / np.linalg.norm(dx))
            )
        # second-order remainder: one decade of scale buys one decade of eta
        for prev, nxt in zip(etas, etas[1:]):
            assert nxt < prev
            assert 5.0 <= prev / nxt <= 20.0


class TestTlsSpecialization:
    def test_golden_ratio_sensitivities(self):
        # closed forms for the 2x1 golden problem:
        # kappa_b = sqrt(2), kappa_A = phi + sqrt((5 - sqrt(5))/2)
        problem = golden_problem()
        sens = tls_specialization(problem, solve_qr_svd(problem))
        assert sens.kappa_b == pytest.approx(math.sqrt(2), rel=1e-12)
        assert sens.kappa_A == pytest.approx(
            PHI + math.sqrt((5 - math.sqrt(5)) / 2), rel=1e-12
        )
        assert sens.estimate is None

    def test_estimate_combines_blocks(self):
        problem = golden_problem()
        solution = solve_qr_svd(problem)
        db = np.array([0.1, -0.2])
        sens = tls_specialization(problem, solution, db=db)
        expected = sens.kappa_b * np.linalg.norm(db) / np.linalg.norm(problem.b)
        assert sens.estimate == pytest.approx(expected, rel=1e-12)
        both = tls_specialization(
            problem, solution, dA=np.array([[0.05], [0.0]]), db=db
        )
        assert both.estimate > sens.estimate

    def test_requires_unconstrained_problem(self):
        problem = hand_problem()
        with pytest.raises(InputError):
            tls_specialization(problem, solve_qr_svd(problem))

    def test_zero_solution_is_undefined(self):
        problem = zero_solution_problem()
        with pytest.raises(UndefinedConditionError):
            tls_specialization(problem, solve_qr_svd(problem))


class TestConditionReport:
    def test_exact_and_compact_agree(self):
        problem = seeded_problem(8)
        exact = condition_report(problem, method="exact")
        compact = condition_report(problem, method="compact")
        assert exact.method == "exact-kronecker"
        assert compact.method == "compact"
        assert compact.kappa_n == pytest.approx(exact.kappa_n, rel=1e-10)
        assert compact.kappa_m == exact.kappa_m

    def test_upper_mode_avoids_materialization(self, monkeypatch):
        problem = seeded_problem(8)
        monkeypatch.setenv("TLSE_MEM_CAP", "50")
        report = condition_report(problem, method="upper")
        assert report.method == "bound"
        assert report.kappa_m == report.kappa_m_upper
        assert report.kappa_c == report.kappa_c_upper
        assert report.kappa_c_finite <= report.kappa_c

    def test_report_orderings(self):
        problem = seeded_problem(8)
        report = condition_report(problem)
        assert report.kappa_n <= report.kappa_n_upper * (1 + 1e-12)
        assert report.kappa_n_upper <= report.kappa_n_upper_loose * (1 + 1e-12)
        assert report.kappa_m <= report.kappa_m_upper * (1 + 1e-12)
        assert report.kappa_c <= report.kappa_c_upper * (1 + 1e-12)
        assert report.kappa_m <= report.kappa_c

    def test_rejects_unknown_method(self):
        with pytest.raises(InputError):
            condition_report(seeded_problem(8), method="fast")

    def test_accepts_precomputed_solution(self):
        problem = seeded_problem(8)
        solution = solve_qr_svd(problem)
        report = condition_report(problem, solution=solution)
        assert report.weights == Weights()
        assert report.kappa_n > 0
