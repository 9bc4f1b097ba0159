"""First-order perturbation operator and condition numbers.

For a solved problem, the first-order change of the solution under a
perturbation (dL, dh) of the stacked data ([C; A], [d; b]) is

    dx = gain @ (dL @ x - dh) - null_gram_inv @ dL.T @ adjoint_dir

where gain = (2/rho^2) * (null_gram_inv @ x) adjoint_dir.T -
[constraint_gain, null_gram_inv @ A.T]. apply_k evaluates this matrix-free;
materialize_k builds the explicit n x m(n+1) matrix acting on
vec([dL dh]) in two algebraically identical arrangements ("combined" and
"split"), useful as cross-checks and for the exact condition numbers.

Condition numbers come in three flavors: normwise (weighted Frobenius ball
on the data, Euclidean norm on the solution), mixed (entrywise-bounded
perturbations, max-norm output), and componentwise (entrywise relative
output). Each has an exact value, and Kronecker-free upper bounds; the
normwise one additionally has a compact exact formula that avoids the big
materialized matrix entirely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TlseProblem, TlseSolution, constraint_pinv, solve_qr_svd
from .errors import InputError, UndefinedConditionError
from .linalg import (
    as_matrix,
    as_vector,
    check_guard,
    greville_augment,
    kron,
    spectral_norm,
)


@dataclass(frozen=True)
class Weights:
    """Positive weights (alpha on the matrix block, beta on the right side)."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InputError(
                f"weights must be positive, got ({self.alpha}, {self.beta})"
            )


@dataclass(frozen=True)
class KOperator:
    """First-order perturbation map at a solution.

    gain is n x m, null_gram_inv n x n, constraint_gain n x p, adjoint_dir
    the m-vector [-(aug-data @ aug-constraint-pinv).T @ residual; residual].
    A zero residual forces adjoint_dir = 0 and gain =
    -[constraint_gain, null_gram_inv @ A.T].
    """

    gain: np.ndarray
    null_gram_inv: np.ndarray
    constraint_gain: np.ndarray
    adjoint_dir: np.ndarray
    x: np.ndarray
    rho: float

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.constraint_gain.shape[1]

    @property
    def m(self) -> int:
        return self.adjoint_dir.shape[0]


@dataclass(frozen=True)
class MixedComponentwise:
    """Mixed and componentwise condition numbers.

    kappa_c is inf when some solution component is zero against a nonzero
    numerator (0/0 counts as 0); kappa_c_finite maxes over the nonzero
    components only.
    """

    kappa_m: float
    kappa_c: float
    kappa_c_finite: float


@dataclass(frozen=True)
class TlsSensitivity:
    """Unconstrained-TLS sensitivities and the first-order error estimate."""

    kappa_A: float
    kappa_b: float
    estimate: float | None


@dataclass(frozen=True)
class ConditionReport:
    """All condition numbers of one problem under one weight choice.

    method records how the headline values were obtained:
    "exact-kronecker" (explicit materialized operator), "compact"
    (Kronecker-free exact normwise value, explicit operator only for the
    mixed/componentwise pair), or "bound" (no materialization anywhere;
    kappa_m/kappa_c are then their upper bounds).
    """

    kappa_n: float
    kappa_n_upper: float
    kappa_n_upper_loose: float
    kappa_m: float
    kappa_m_upper: float
    kappa_c: float
    kappa_c_upper: float
    kappa_c_finite: float
    weights: Weights
    method: str


def build_k_operator(problem: TlseProblem, solution: TlseSolution) -> KOperator:
    """Assemble the first-order map from a solved problem.

    The adjoint direction routes the residual through the pseudoinverse of
    the augmented constraint [C d], which is obtained by the rank-one
    Greville update of the already-factored pseudoinverse of C.
    """
    r = solution.residual
    basis = solution.basis
    c_pinv = constraint_pinv(basis)
    aug_pinv = greville_augment(c_pinv, basis.x_feas)
    top = -(aug_pinv.T @ (problem.aug_data().T @ r))
    adjoint_dir = np.concatenate([top, r])
    data_map = np.hstack(
        [solution.constraint_gain, solution.null_gram_inv @ problem.A.T]
    )
    gain = (2.0 / solution.rho**2) * np.outer(
        solution.null_gram_inv @ solution.x, adjoint_dir
    ) - data_map
    return KOperator(
        gain=gain,
        null_gram_inv=solution.null_gram_inv,
        constraint_gain=solution.constraint_gain,
        adjoint_dir=adjoint_dir,
        x=solution.x.copy(),
        rho=solution.rho,
    )


def apply_k(op: KOperator, dL, dh) -> np.ndarray:
    """First-order solution change for a perturbation, matrix-free."""
    dl = as_matrix(dL, "dL")
    dv = as_vector(dh, "dh")
    if dl.shape != (op.m, op.n):
        raise InputError(
            f"dL has shape {dl.shape}, expected {(op.m, op.n)}"
        )
    if dv.shape[0] != op.m:
        raise InputError(f"dh has length {dv.shape[0]}, expected {op.m}")
    return op.gain @ (dl @ op.x - dv) - op.null_gram_inv @ (
        dl.T @ op.adjoint_dir
    )


def materialize_k(op: KOperator, form: str = "combined") -> np.ndarray:
    """Explicit n x m(n+1) matrix acting on vec([dL dh]).

    "combined" assembles gain @ ([x.T -1] kron I_m) minus the lifted adjoint
    term; "split" assembles [(x.T kron gain) - null_gram_inv (I kron t.T),
    -gain]. Both produce the same matrix; keeping the two routes makes the
    equivalence testable. Guarded by the entry cap.
    """
    n, m = op.n, op.m
    check_guard(n * m * (n + 1), "materialized perturbation operator")
    if form == "combined":
        direction = np.append(op.x, -1.0)[None, :]
        lift = kron(direction, np.eye(m))
        selector = np.hstack([np.eye(n), np.zeros((n, 1))])
        adjoint_term = op.null_gram_inv @ kron(
            selector, op.adjoint_dir[None, :]
        )
        return op.gain @ lift - adjoint_term
    if form == "split":
        left = kron(op.x[None, :], op.gain) - op.null_gram_inv @ kron(
            np.eye(n), op.adjoint_dir[None, :]
        )
        return np.hstack([left, -op.gain])
    raise InputError(f"unknown form {form!r}, expected 'combined' or 'split'")


def _flex_norm(L, h, w: Weights) -> float:
    return float(
        np.sqrt(
            w.alpha**2 * np.linalg.norm(L, "fro") ** 2
            + w.beta**2 * np.linalg.norm(h) ** 2
        )
    )


def _solution_norm(op: KOperator) -> float:
    nx = float(np.linalg.norm(op.x))
    if nx == 0.0:
        raise UndefinedConditionError("condition numbers need x != 0")
    return nx


def kappa_normwise_exact(op: KOperator, w: Weights, L, h) -> float:
    """Normwise condition number from the materialized operator.

    Scales the matrix-block columns by 1/alpha and the right-side columns by
    1/beta, takes the spectral norm, and normalizes by the weighted data
    norm over ||x||.
    """
    nx = _solution_norm(op)
    k = materialize_k(op, "combined")
    k[:, : op.m * op.n] /= w.alpha
    k[:, op.m * op.n :] /= w.beta
    return spectral_norm(k) * _flex_norm(L, h, w) / nx


def kappa_normwise_compact(
    op: KOperator, w: Weights, L, h, signs: tuple[int, int] = (1, 1)
) -> float:
    """Normwise condition number without any Kronecker product.

    Evaluates the weighted spectral norm through the (m+n)-column compression
    [-(||x||/beta) gain, (||t||/alpha) null_gram_inv] @ M. The scalars inside
    M admit two sign choices each; every combination gives the same value,
    which tests exercise through `signs`. A zero adjoint direction makes M
    degenerate, and the value reduces to
    ||gain||_2 sqrt(||x||^2/alpha^2 + 1/beta^2) times the usual data factor.
    """
    s1, s2 = signs
    if s1 not in (-1, 1) or s2 not in (-1, 1):
        raise InputError(f"signs must be +-1, got {signs}")
    nx = _solution_norm(op)
    scale = _flex_norm(L, h, w) / nx
    t = op.adjoint_dir
    nt = float(np.linalg.norm(t))
    alpha, beta = w.alpha, w.beta
    if nt == 0.0:
        return (
            spectral_norm(op.gain)
            * np.sqrt(nx**2 / alpha**2 + 1.0 / beta**2)
            * scale
        )
    m, n = op.m, op.n
    c1 = s1 * np.sqrt(beta**2 / alpha**2 + 1.0 / nx**2)
    c2 = c1 + s2 / nx
    block = np.zeros((m + n, m + n))
    block[:m, :m] = c1 * np.eye(m) - (c2 / nt**2) * np.outer(t, t)
    block[:m, m:] = (beta / alpha) * np.outer(t, op.x) / (nt * nx)
    block[m:, m:] = np.eye(n)
    z = np.hstack([-(nx / beta) * op.gain, (nt / alpha) * op.null_gram_inv])
    return spectral_norm(z @ block) * scale


def kappa_normwise_upper(op: KOperator, w: Weights, L, h) -> tuple[float, float]:
    """Kronecker-free upper bounds (tight, loose) on the normwise number.

    tight uses ||gain||_2 directly; loose additionally bounds the gain by
    the sum of its constituent block norms, so tight <= loose and both
    dominate the exact value.
    """
    nx = _solution_norm(op)
    alpha, beta = w.alpha, w.beta
    nt = float(np.linalg.norm(op.adjoint_dir))
    factor = (
        _flex_norm(L, h, w)
        / nx
        * np.sqrt(max(1.0, beta**2 / alpha**2 + 1.0 / nx**2) + beta / alpha)
    )
    k_norm = spectral_norm(op.null_gram_inv)
    tight = (nx / beta * spectral_norm(op.gain) + nt / alpha * k_norm) * factor
    a_block = as_matrix(L)[op.p :, :]
    split_norms = spectral_norm(op.constraint_gain) + spectral_norm(
        op.null_gram_inv @ a_block.T
    )
    loose = (
        nx / beta * split_norms + (2.0 / beta + 1.0 / alpha) * nt * k_norm
    ) * factor
    return float(tight), float(loose)


def _componentwise(target: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    """(max ratio with inf flags, max ratio over nonzero components)."""
    worst = 0.0
    finite = 0.0
    for num, xi in zip(target, np.abs(x)):
        if xi == 0.0:
            if num != 0.0:
                worst = np.inf
            continue
        ratio = num / xi
        worst = max(worst, ratio)
        finite = max(finite, ratio)
    return float(worst), float(finite)


def kappa_mixed_componentwise_exact(op: KOperator, L, h) -> MixedComponentwise:
    """Exact mixed/componentwise condition numbers via the explicit |K|."""
    nx_inf = float(np.abs(op.x).max(initial=0.0))
    if nx_inf == 0.0:
        raise UndefinedConditionError("condition numbers need x != 0")
    k = materialize_k(op, "combined")
    data = np.hstack([np.abs(as_matrix(L)), np.abs(as_vector(h))[:, None]])
    target = np.abs(k) @ data.reshape(-1, order="F")
    kappa_m = float(target.max(initial=0.0)) / nx_inf
    kappa_c, kappa_c_finite = _componentwise(target, op.x)
    return MixedComponentwise(
        kappa_m=kappa_m, kappa_c=kappa_c, kappa_c_finite=kappa_c_finite
    )


def _upper_target(op: KOperator, L, h) -> np.ndarray:
    labs = np.abs(as_matrix(L))
    habs = np.abs(as_vector(h))
    return np.abs(op.gain) @ (labs @ np.abs(op.x) + habs) + np.abs(
        op.null_gram_inv
    ) @ (labs.T @ np.abs(op.adjoint_dir))


def kappa_mixed_componentwise_upper(op: KOperator, L, h) -> tuple[float, float]:
    """Kronecker-free upper bounds on (kappa_m, kappa_c)."""
    nx_inf = float(np.abs(op.x).max(initial=0.0))
    if nx_inf == 0.0:
        raise UndefinedConditionError("condition numbers need x != 0")
    target = _upper_target(op, L, h)
    upper_m = float(target.max(initial=0.0)) / nx_inf
    upper_c, _ = _componentwise(target, op.x)
    return upper_m, upper_c


def tls_specialization(
    problem: TlseProblem,
    solution: TlseSolution,
    dA=None,
    db=None,
) -> TlsSensitivity:
    """Sensitivities of the unconstrained (p = 0) problem.

    kappa_b scales the inverse-Gram-times-data map; kappa_A adds the
    residual term. When perturbations are supplied the first-order estimate
    kappa_b ||db||/||b|| + kappa_A ||dA||_2/||A||_2 is evaluated (missing
    pieces count as zero).
    """
    if problem.p != 0:
        raise InputError("tls_specialization requires a problem with p = 0")
    inv_gram = solution.null_gram_inv
    data_map_norm = spectral_norm(inv_gram @ problem.A.T)
    nx = float(np.linalg.norm(solution.x))
    if nx == 0.0:
        raise UndefinedConditionError("condition numbers need x != 0")
    nb = float(np.linalg.norm(problem.b))
    na = spectral_norm(problem.A)
    nr = float(np.linalg.norm(solution.residual))
    kappa_b = nb / nx * data_map_norm
    kappa_a = na / nx * (nr * spectral_norm(inv_gram) + nx * data_map_norm)
    estimate = None
    if dA is not None or db is not None:
        est = 0.0
        if db is not None and nb > 0:
            est += kappa_b * float(np.linalg.norm(as_vector(db))) / nb
        if dA is not None and na > 0:
            est += kappa_a * spectral_norm(as_matrix(dA)) / na
        estimate = float(est)
    return TlsSensitivity(kappa_A=float(kappa_a), kappa_b=float(kappa_b), estimate=estimate)


def condition_report(
    problem: TlseProblem,
    solution: TlseSolution | None = None,
    weights: Weights | None = None,
    method: str = "exact",
) -> ConditionReport:
    """One-stop condition-number report.

    method "exact" materializes the operator for every headline value;
    "compact" avoids materialization for the normwise number; "upper"
    avoids it everywhere, reporting the upper bounds as the mixed and
    componentwise values. Upper-bound fields are always populated.
    """
    if method not in ("exact", "compact", "upper"):
        raise InputError(
            f"method must be exact|compact|upper, got {method!r}"
        )
    w = weights or Weights()
    sol = solution if solution is not None else solve_qr_svd(problem)
    op = build_k_operator(problem, sol)
    big_l, big_h = problem.L, problem.h
    tight, loose = kappa_normwise_upper(op, w, big_l, big_h)
    upper_m, upper_c = kappa_mixed_componentwise_upper(op, big_l, big_h)
    if method == "exact":
        kappa_n = kappa_normwise_exact(op, w, big_l, big_h)
    else:
        kappa_n = kappa_normwise_compact(op, w, big_l, big_h)
    if method == "upper":
        kappa_m, kappa_c = upper_m, upper_c
        _, kappa_c_finite = _componentwise(_upper_target(op, big_l, big_h), op.x)
        tag = "bound"
    else:
        mixed = kappa_mixed_componentwise_exact(op, big_l, big_h)
        kappa_m, kappa_c = mixed.kappa_m, mixed.kappa_c
        kappa_c_finite = mixed.kappa_c_finite
        tag = "exact-kronecker" if method == "exact" else "compact"
    return ConditionReport(
        kappa_n=float(kappa_n),
        kappa_n_upper=tight,
        kappa_n_upper_loose=loose,
        kappa_m=float(kappa_m),
        kappa_m_upper=float(upper_m),
        kappa_c=float(kappa_c),
        kappa_c_upper=float(upper_c),
        kappa_c_finite=float(kappa_c_finite),
        weights=w,
        method=tag,
    )
