"""Problem model and deterministic solvers for equality-constrained TLS.

The problem: given data A x ~ b subject to an exact constraint C x = d, find
the correction [E f] of minimal Frobenius norm with (A+E) x = b+f and
C x = d. The solver pipeline:

1. QR of C.T splits coordinates into the constraint range and its null space
   and yields the minimum-norm feasible point.
2. The data block is compressed onto an augmented null-space basis; the SVD
   of that core matrix supplies the optimal direction and the shift
   sigma_min that appears everywhere downstream.
3. The solution is read off by normalizing the last component of the lifted
   singular vector to -1 (solve_qr_svd), or equivalently through the shifted
   Gram system on the null space (solve_closed_form).

Well-posedness requires the restricted data matrix (A on the null space of
C) to have its smallest singular value strictly above sigma_min; this gap is
what check_genericity reports and what the conditioning module divides by.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IllPosedError, InputError, NonGenericError, RankError
from .linalg import RANK_TOL, as_matrix, as_vector, singular_values, svd

#: Hard ill-posedness warning when gap <= GAP_WARN_FACTOR * eps * sigma_bar^2.
GAP_WARN_FACTOR = 1e3

#: Soft warning when the relative genericity gap drops below this.
NEAR_DEGENERATE_TOL = 0.1

#: Factor for flagging (near-)multiple smallest singular values.
MULTIPLICITY_FACTOR = 1e3

#: Smallest acceptable magnitude for the normalizing component.
LAST_COMPONENT_TOL = 1e-12


@dataclass(frozen=True)
class TlseProblem:
    """The quadruple (C, d, A, b) with C p x n, A q x n.

    Requires p < n, q >= n - p + 1, and full row rank of C (checked when the
    basis is built). p = 0 is the plain TLS case; C and d are then empty.
    """

    C: np.ndarray
    d: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", as_matrix(self.C, "C"))
        object.__setattr__(self, "d", as_vector(self.d, "d"))
        object.__setattr__(self, "A", as_matrix(self.A, "A"))
        object.__setattr__(self, "b", as_vector(self.b, "b"))
        p, n = self.C.shape
        q, n2 = self.A.shape
        if p == 0 and n != n2:
            object.__setattr__(self, "C", np.zeros((0, n2)))
            n = n2
        if n2 != n:
            raise InputError(f"C has {n} columns but A has {n2}")
        if self.d.shape[0] != p:
            raise InputError(f"d has length {self.d.shape[0]}, expected {p}")
        if self.b.shape[0] != q:
            raise InputError(f"b has length {self.b.shape[0]}, expected {q}")
        if p >= max(n, n2):
            raise InputError(f"need p < n, got p={p}, n={max(n, n2)}")
        if q < n2 - p + 1:
            raise InputError(
                f"need q >= n - p + 1 for a full core spectrum, got "
                f"q={q}, n={n2}, p={p}"
            )

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def q(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.p + self.q

    @property
    def L(self) -> np.ndarray:
        """Stacked coefficient matrix [C; A] of shape m x n."""
        if self.p == 0:
            return self.A
        return np.vstack([self.C, self.A])

    @property
    def h(self) -> np.ndarray:
        """Stacked right-hand side [d; b] of length m."""
        return np.concatenate([self.d, self.b])

    def aug_data(self) -> np.ndarray:
        """[A b], q x (n+1)."""
        return np.hstack([self.A, self.b[:, None]])

    def aug_constraint(self) -> np.ndarray:
        """[C d], p x (n+1)."""
        return np.hstack([self.C, self.d[:, None]])


@dataclass(frozen=True)
class ConstraintBasis:
    """QR-derived geometry of the constraint C x = d.

    q1/r1 are the thin QR factors of C.T, null_basis the orthonormal basis
    of ker(C), x_feas the minimum-norm point with C x_feas = d, and
    feas_residual = A x_feas - b. aug_null_basis is the (n+1) x (n-p+1)
    orthonormal basis of ker([C d]) built from null_basis and the scaled
    feasible point (aug_scale = 1/sqrt(1 + ||x_feas||^2)).
    """

    q1: np.ndarray
    null_basis: np.ndarray
    r1: np.ndarray
    x_feas: np.ndarray
    feas_residual: np.ndarray
    aug_scale: float
    aug_null_basis: np.ndarray


@dataclass(frozen=True)
class CoreSvd:
    """SVD of the core matrix [A @ null_basis, aug_scale * feas_residual].

    sigma holds the n-p+1 core singular values, nonincreasing.
    restricted_min_sv is the smallest singular value of A restricted to
    ker(C); genericity means restricted_min_sv > sigma[-1]. gap is the
    difference of their squares, rel_gap the gap relative to
    restricted_min_sv**2.
    """

    left: np.ndarray
    sigma: np.ndarray
    right: np.ndarray
    restricted_min_sv: float
    gap: float
    rel_gap: float
    satisfied: bool
    warnings: tuple = field(default_factory=tuple)

    @property
    def sigma_min(self) -> float:
        return float(self.sigma[-1])


@dataclass(frozen=True)
class TlseSolution:
    """Solution vector with the spectral byproducts conditioning needs.

    gram_inv inverts null_basis.T (A.T A - sigma_min^2 I) null_basis;
    null_gram_inv lifts it back to n x n; constraint_gain maps constraint
    right-hand-side perturbations to first-order solution changes.
    """

    x: np.ndarray
    rho: float
    residual: np.ndarray
    sigma_min: float
    basis: ConstraintBasis
    core: CoreSvd
    gram_inv: np.ndarray
    null_gram_inv: np.ndarray
    constraint_gain: np.ndarray


@dataclass(frozen=True)
class StationarityReport:
    """Residual norms of the three block rows of the optimality system."""

    multiplier: np.ndarray
    grad_norm: float
    coupling_norm: float
    constraint_norm: float


def build_basis(problem: TlseProblem) -> ConstraintBasis:
    """QR of C.T plus the feasible-point quantities derived from it.

    For p = 0 the null basis is the identity, x_feas = 0, aug_scale = 1 and
    the augmented basis is [[I, 0], [0, -1]].
    """
    n = problem.n
    p = problem.p
    if p == 0:
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = np.eye(n)
        aug[n, n] = -1.0
        return ConstraintBasis(
            q1=np.zeros((n, 0)),
            null_basis=np.eye(n),
            r1=np.zeros((0, 0)),
            x_feas=np.zeros(n),
            feas_residual=-problem.b.copy(),
            aug_scale=1.0,
            aug_null_basis=aug,
        )
    q, r = np.linalg.qr(problem.C.T, mode="complete")
    q1, null_basis = q[:, :p], q[:, p:]
    r1 = r[:p, :]
    diag = np.abs(np.diag(r1))
    scale = diag.max(initial=0.0)
    bad = np.nonzero(diag <= RANK_TOL * max(scale, np.finfo(float).tiny))[0]
    if bad.size:
        raise RankError(
            f"C is rank deficient: triangular diagonal {bad[0]} is "
            f"{diag[bad[0]]:.3e} against scale {scale:.3e}"
        )
    x_feas = q1 @ scipy.linalg.solve_triangular(r1, problem.d, trans="T")
    feas_residual = problem.A @ x_feas - problem.b
    aug_scale = 1.0 / np.sqrt(1.0 + float(x_feas @ x_feas))
    aug = np.zeros((n + 1, n - p + 1))
    aug[:n, : n - p] = null_basis
    aug[:n, n - p] = aug_scale * x_feas
    aug[n, n - p] = -aug_scale
    return ConstraintBasis(
        q1=q1,
        null_basis=null_basis,
        r1=r1,
        x_feas=x_feas,
        feas_residual=feas_residual,
        aug_scale=aug_scale,
        aug_null_basis=aug,
    )


def constraint_pinv(basis: ConstraintBasis) -> np.ndarray:
    """Pseudoinverse of C assembled from the already-built QR factors."""
    p = basis.q1.shape[1]
    if p == 0:
        return np.zeros((basis.null_basis.shape[0], 0))
    inv_rt = scipy.linalg.solve_triangular(
        basis.r1, np.eye(p), trans="T", lower=False
    )
    return basis.q1 @ inv_rt


def core_matrix(problem: TlseProblem, basis: ConstraintBasis) -> np.ndarray:
    """The q x (n-p+1) compression [A @ null_basis, aug_scale * feas_residual]."""
    return np.hstack(
        [
            problem.A @ basis.null_basis,
            (basis.aug_scale * basis.feas_residual)[:, None],
        ]
    )


def check_genericity(
    basis: ConstraintBasis,
    problem: TlseProblem,
    warn_gap_factor: float = GAP_WARN_FACTOR,
    near_degenerate_tol: float = NEAR_DEGENERATE_TOL,
) -> CoreSvd:
    """SVD of the core matrix plus the well-posedness diagnostics.

    satisfied means the strict spectral gap holds. Warnings carried in the
    result (never raised here):

    - "ill-posed" when the gap is at or below warn_gap_factor * eps *
      restricted_min_sv**2 (includes every unsatisfied case),
    - "near-degenerate" when satisfied but rel_gap < near_degenerate_tol,
    - "non-unique" when the two smallest core singular values nearly
      coincide, so the minimizing direction is not well determined.
    """
    restricted = problem.A @ basis.null_basis
    restricted_min_sv = float(singular_values(restricted)[-1])
    res = svd(core_matrix(problem, basis))
    sig = res.s
    gap = restricted_min_sv**2 - float(sig[-1]) ** 2
    rel_gap = gap / max(restricted_min_sv**2, np.finfo(float).tiny)
    satisfied = restricted_min_sv > float(sig[-1])
    warnings = []
    eps = np.finfo(float).eps
    if gap <= warn_gap_factor * eps * restricted_min_sv**2:
        warnings.append("ill-posed")
    elif rel_gap < near_degenerate_tol:
        warnings.append("near-degenerate")
    if sig.size >= 2 and sig[-2] - sig[-1] <= MULTIPLICITY_FACTOR * eps * sig[0]:
        warnings.append("non-unique")
    return CoreSvd(
        left=res.u,
        sigma=sig,
        right=res.v,
        restricted_min_sv=restricted_min_sv,
        gap=gap,
        rel_gap=rel_gap,
        satisfied=satisfied,
        warnings=tuple(warnings),
    )


def fast_gram_inverse(core: CoreSvd):
    """Shifted-Gram inverse assembled from the core SVD factors alone.

    Uses the identity gram_inv = W.T @ diag(1/(sigma_i^2 - sigma_min^2)) @ W
    with W the inverse of the leading (n-p) x (n-p) block of the right
    singular vectors. Returns None (fallback signal) when that block is
    singular to tolerance or the spectral shifts are not strictly positive;
    the caller then inverts the shifted Gram matrix directly.
    """
    k = core.sigma.size
    nm = k - 1
    if nm == 0:
        return None
    v11 = core.right[:nm, :nm]
    smin = singular_values(v11)[-1] if nm else 0.0
    if smin <= 1e-8:
        return None
    shifts = core.sigma[:nm] ** 2 - core.sigma[-1] ** 2
    if shifts.min(initial=np.inf) <= 0.0:
        return None
    w = scipy.linalg.solve(v11, np.eye(nm))
    return w.T @ (w / shifts[:, None])


def _direct_gram_inverse(problem, basis, core):
    restricted = problem.A @ basis.null_basis
    shifted = restricted.T @ restricted - core.sigma_min**2 * np.eye(
        restricted.shape[1]
    )
    try:
        return scipy.linalg.solve(shifted, np.eye(shifted.shape[0]), assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise IllPosedError(
            f"shifted Gram matrix is not positive definite: {exc}"
        ) from exc


def solve_qr_svd(problem: TlseProblem) -> TlseSolution:
    """Solve by lifting the trailing core singular vector and normalizing.

    Sign convention: the lifted vector is flipped so its last component is
    negative, and rho = +sqrt(1 + ||x||^2). Raises IllPosedError when the
    genericity gap fails, NonGenericError when the normalizing component is
    numerically zero.
    """
    basis = build_basis(problem)
    core = check_genericity(basis, problem)
    if not core.satisfied:
        raise IllPosedError(
            "genericity gap violated: restricted data spectrum "
            f"{core.restricted_min_sv:.6e} does not exceed core sigma_min "
            f"{core.sigma_min:.6e}"
        )
    lifted = basis.aug_null_basis @ core.right[:, -1]
    if abs(lifted[-1]) < LAST_COMPONENT_TOL:
        raise NonGenericError(
            f"normalizing component {lifted[-1]:.3e} is below "
            f"{LAST_COMPONENT_TOL:g}; solution direction is not generic"
        )
    if lifted[-1] > 0:
        lifted = -lifted
    x = lifted[:-1] / (-lifted[-1])
    rho = float(np.sqrt(1.0 + x @ x))
    gram_inv = fast_gram_inverse(core)
    if gram_inv is None:
        gram_inv = _direct_gram_inverse(problem, basis, core)
    null_gram_inv = basis.null_basis @ gram_inv @ basis.null_basis.T
    gram = problem.A.T @ problem.A
    constraint_gain = (
        np.eye(problem.n) - null_gram_inv @ gram
    ) @ constraint_pinv(basis)
    return TlseSolution(
        x=x,
        rho=rho,
        residual=problem.A @ x - problem.b,
        sigma_min=core.sigma_min,
        basis=basis,
        core=core,
        gram_inv=gram_inv,
        null_gram_inv=null_gram_inv,
        constraint_gain=constraint_gain,
    )


def solve_closed_form(problem: TlseProblem) -> np.ndarray:
    """Solve through the shifted Gram system on the constraint null space.

    x = x_feas - null_basis @ solve(S, restricted.T @ feas_residual) with
    S = restricted.T @ restricted - sigma_min^2 I. Independent of the
    normalization route in solve_qr_svd apart from the shared sigma_min, so
    the two act as cross-checks. Returns the solution vector only.
    """
    basis = build_basis(problem)
    core = check_genericity(basis, problem)
    if not core.satisfied:
        raise IllPosedError(
            "genericity gap violated: cannot invert the shifted Gram matrix"
        )
    restricted = problem.A @ basis.null_basis
    shifted = restricted.T @ restricted - core.sigma_min**2 * np.eye(
        restricted.shape[1]
    )
    try:
        y = scipy.linalg.solve(
            shifted, restricted.T @ basis.feas_residual, assume_a="pos"
        )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise IllPosedError(
            f"shifted Gram matrix is not positive definite: {exc}"
        ) from exc
    return basis.x_feas - basis.null_basis @ y


def validate_stationarity(
    problem: TlseProblem, solution: TlseSolution
) -> StationarityReport:
    """Residuals of the constrained optimality system at the solution.

    Recovers the multiplier by least squares from the gradient block
    A.T A x - A.T b + C.T lam = sigma_min^2 x, then reports the norms of all
    three block rows (gradient, the scalar coupling row
    b.T A x - b.T b + d.T lam + sigma_min^2, and the constraint row C x - d).
    Always returns; this is a diagnostic, not a gate.
    """
    x = solution.x
    a, b, c, d = problem.A, problem.b, problem.C, problem.d
    s2 = solution.sigma_min**2
    grad_rhs = s2 * x - a.T @ (a @ x) + a.T @ b
    if problem.p:
        multiplier = np.linalg.lstsq(c.T, grad_rhs, rcond=None)[0]
    else:
        multiplier = np.zeros(0)
    grad = a.T @ (a @ x) - a.T @ b + c.T @ multiplier - s2 * x
    coupling = float(b @ (a @ x) - b @ b + d @ multiplier + s2)
    constraint = c @ x - d
    return StationarityReport(
        multiplier=multiplier,
        grad_norm=float(np.linalg.norm(grad)),
        coupling_norm=abs(coupling),
        constraint_norm=float(np.linalg.norm(constraint)),
    )
