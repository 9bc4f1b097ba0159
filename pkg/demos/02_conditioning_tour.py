"""Tour of the condition-number toolkit on one seeded problem.

Builds the first-order perturbation operator for a solved problem, then
compares the exact normwise condition number against the compact
closed-form evaluation and the cheap upper bounds, across several
weightings of the two data blocks. Finishes by checking the numbers
against an actual finite perturbation.
"""
import numpy as np

from tlsekit import (
    TlseProblem,
    Weights,
    apply_sample,
    build_k_operator,
    condition_report,
    kappa_mixed_componentwise_exact,
    kappa_mixed_componentwise_upper,
    kappa_normwise_compact,
    kappa_normwise_exact,
    kappa_normwise_upper,
    perturb,
    solve_qr_svd,
)


def make_problem(seed=7, p=3, n=8, q=15):
    rng = np.random.default_rng(seed)
    return TlseProblem(
        C=rng.standard_normal((p, n)),
        d=rng.standard_normal(p),
        A=rng.standard_normal((q, n)),
        b=rng.standard_normal(q),
    )


def main():
    problem = make_problem()
    solution = solve_qr_svd(problem)
    op = build_k_operator(problem, solution)
    print("operator maps %d x %d stacked perturbations to %d coordinates"
          % (op.m, op.n + 1, op.n))

    print("\nnormwise condition number under three weightings")
    print("%-12s %-14s %-14s %-14s" % ("weights", "exact", "compact", "upper"))
    for alpha, beta in ((1, 1), (10, 1), (1, 10)):
        w = Weights(alpha, beta)
        exact = kappa_normwise_exact(op, w, problem.L, problem.h)
        compact = kappa_normwise_compact(op, w, problem.L, problem.h)
        tight, loose = kappa_normwise_upper(op, w, problem.L, problem.h)
        print("%-12s %-14.6e %-14.6e %-14.6e"
              % ("(%g,%g)" % (alpha, beta), exact, compact, tight))
        assert exact <= tight <= loose * (1 + 1e-12)

    print("\nmixed and componentwise measures")
    mc = kappa_mixed_componentwise_exact(op, problem.L, problem.h)
    upper_m, upper_c = kappa_mixed_componentwise_upper(op, problem.L, problem.h)
    print("mixed:         %.6e  (upper %.6e)" % (mc.kappa_m, upper_m))
    print("componentwise: %.6e  (upper %.6e)" % (mc.kappa_c, upper_c))

    # One call bundles everything; method picks the evaluation strategy.
    report = condition_report(problem, method="compact")
    print("\nbundled report: kappa_n=%.4e kappa_m=%.4e kappa_c=%.4e"
          % (report.kappa_n, report.kappa_m, report.kappa_c))

    # Sanity-check the first-order prediction with a real perturbation.
    scale = 1e-8
    sample = perturb(problem, "normwise", scale, seed=3)
    perturbed = solve_qr_svd(apply_sample(problem, sample))
    fwd = np.linalg.norm(perturbed.x - solution.x) / np.linalg.norm(solution.x)
    eps = np.sqrt(
        np.linalg.norm(sample.dL, "fro") ** 2 + np.linalg.norm(sample.dh) ** 2
    ) / np.sqrt(
        np.linalg.norm(problem.L, "fro") ** 2 + np.linalg.norm(problem.h) ** 2
    )
    exact = kappa_normwise_exact(op, Weights(), problem.L, problem.h)
    print("\nperturbation of relative size %.2e" % eps)
    print("observed forward error:  %.6e" % fwd)
    print("first-order bound:       %.6e" % (exact * eps))
    assert fwd <= 1.1 * exact * eps


if __name__ == "__main__":
    main()
