"""Checking the expectation formulas two independent ways.

* :func:`enumerate_moments` walks every column/row index sequence of length
  ``k`` with its exact probability, giving exact expectations on tiny systems.
* :func:`simulate` runs many seeded REK (or RK) trajectories; :func:`summarize`
  turns them into means with standard errors next to the predicted curves.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import as_vector
from .problem import ProblemInstance
from .sampling import build_col_sampler, build_row_sampler, derive_stream
from .solvers import initial_state, run_batch
from .theory import du_bound, lemma1_curve, theorem2_curve, theorem3_rhs

ENUMERATION_BUDGET = 10**6
TRIAL_CHUNK = 1024
NSIGMA = 4.0


class EnumerationBudgetError(ValueError):
    pass


def worker_count() -> int:
    """Worker threads from ``KLAB_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("KLAB_THREADS", "0").strip() or "0"
    requested = int(raw)
    if requested < 0:
        raise ValueError("KLAB_THREADS must be >= 0")
    return requested or (os.cpu_count() or 1)


def log_grid(K: int) -> list[int]:
    """1, 2, 5, 10, 20, 50, ... up to and including K."""
    grid = set()
    decade = 1
    while decade <= K:
        grid.update(k for k in (decade, 2 * decade, 5 * decade) if k <= K)
        decade *= 10
    if K >= 1:
        grid.add(K)
    return sorted(grid)


# --- exact enumeration -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnumerationResult:
    """Exact moments for k = 0..k_max.

    ``x_mean[k] = E[x_k - x*]``, ``z_mean[k] = E[z_k - (b - A x*)]``,
    ``err_sq[k] = E||x_k - x*||^2`` and
    ``contracted[k] = E[||e_k||^2 - ||A e_k||^2 / ||A||_F^2]``.
    """

    x_mean: np.ndarray
    z_mean: np.ndarray
    err_sq: np.ndarray
    contracted: np.ndarray
    paths: int


def enumeration_paths(problem: ProblemInstance, k_max: int) -> int:
    row_s = build_row_sampler(problem.a)
    col_s = build_col_sampler(problem.a)
    return (row_s.support.size * col_s.support.size) ** k_max


def enumerate_moments(problem: ProblemInstance, x0, z0, k_max: int) -> EnumerationResult:
    """Exact expectations by propagating every sample path with its probability.

    Zero rows and columns are never branched on (probability zero).
    """
    required = enumeration_paths(problem, k_max)
    if required > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"enumeration needs {required} paths, budget is {ENUMERATION_BUDGET}"
        )
    a, b = problem.a, problem.b
    row_s = build_row_sampler(a)
    col_s = build_col_sampler(a)
    rows, cols = row_s.support, col_s.support
    p_rows = row_s.probabilities[rows]
    p_cols = col_s.probabilities[cols]
    a_rows = a[rows]  # (mi, n)
    a_cols = a[:, cols].T  # (nj, m)
    fro2 = problem.fro2

    start = initial_state(problem, x0, z0)
    prob = np.ones(1)
    xs = start.x[None, :]
    zs = start.z[None, :]

    x_mean, z_mean, err_sq, contracted = [], [], [], []

    def record():
        e = xs - problem.x_star
        e2 = np.einsum("ij,ij->i", e, e)
        ae = e @ a.T
        x_mean.append(prob @ e)
        z_mean.append(prob @ (zs - problem.residual))
        err_sq.append(float(prob @ e2))
        contracted.append(float(prob @ (e2 - np.einsum("ij,ij->i", ae, ae) / fro2)))

    record()
    for _ in range(k_max):
        s = prob.shape[0]
        # z-branch over columns: (s, nj, m)
        coef = (zs @ a_cols.T) / col_s.weights[cols]
        z_new = zs[:, None, :] - coef[:, :, None] * a_cols[None, :, :]
        # x-branch over rows using the updated z: (s, nj, mi, n)
        resid = (xs @ a_rows.T)[:, None, :] - b[rows][None, None, :] + z_new[:, :, rows]
        step = resid / row_s.weights[rows]
        x_new = xs[:, None, None, :] - step[:, :, :, None] * a_rows[None, None, :, :]

        nj, mi = cols.size, rows.size
        prob = (prob[:, None, None] * p_cols[None, :, None] * p_rows[None, None, :]).reshape(-1)
        xs = x_new.reshape(s * nj * mi, -1)
        zs = np.broadcast_to(z_new[:, :, None, :], (s, nj, mi, z_new.shape[-1])).reshape(s * nj * mi, -1)
        record()

    return EnumerationResult(
        x_mean=np.array(x_mean),
        z_mean=np.array(z_mean),
        err_sq=np.array(err_sq),
        contracted=np.array(contracted),
        paths=required,
    )


def enumerate_expectation(problem: ProblemInstance, x0, z0, k_max: int, ell: int) -> np.ndarray:
    """Exact ``E<x_k - x*, v_ell>`` for k = 0..k_max."""
    res = enumerate_moments(problem, x0, z0, k_max)
    return res.x_mean @ problem.svd.right_vector(ell)


def enumerate_z_expectation(problem: ProblemInstance, x0, z0, k_max: int, ell: int) -> np.ndarray:
    """Exact ``E<z_k - (b - A x*), A v_ell>`` for k = 0..k_max."""
    res = enumerate_moments(problem, x0, z0, k_max)
    return res.z_mean @ (problem.a @ problem.svd.right_vector(ell))


# --- Monte Carlo -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class McRun:
    """Per-trial snapshots: ``x_err[t, g] = x_k - x*`` and ``z_err[t, g] = z_k - (b - A x*)``
    for ``k = k_grid[g]``."""

    problem: ProblemInstance
    k_grid: np.ndarray
    x_err: np.ndarray
    z_err: np.ndarray
    x0: np.ndarray
    z0: np.ndarray
    method: str
    seed: int

    @property
    def trials(self) -> int:
        return self.x_err.shape[0]


@dataclass(frozen=True, eq=False)
class McSummary:
    ell: int
    k_grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int
    theory: np.ndarray

    def within(self, nsigma: float = NSIGMA, atol: float = 1e-12) -> np.ndarray:
        """Pointwise ``|mean - theory| <= nsigma * stderr`` (plus a rounding floor)."""
        return np.abs(self.mean - self.theory) <= nsigma * self.stderr + atol * np.maximum(
            1.0, np.abs(self.theory)
        )


def _mean_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over axis 0."""
    t = samples.shape[0]
    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1) if t > 1 else np.zeros_like(mean)
    return mean, std / np.sqrt(t)


def simulate(
    problem: ProblemInstance,
    k_grid,
    trials: int,
    seed: int,
    x0=None,
    z0=None,
    method: str = "rek",
    workers: int | None = None,
) -> McRun:
    """Run ``trials`` independent trajectories; trial ``t`` uses ``derive_stream(seed, t)``.

    Trials are processed in fixed-size chunks so results do not depend on the
    number of worker threads.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    k_grid = np.array(sorted(set(int(k) for k in k_grid)), dtype=np.int64)
    start = initial_state(problem, x0, z0 if method == "rek" else None)
    k_max = int(k_grid[-1]) if k_grid.size else 0
    per_iter = 2 if method == "rek" else 1

    def chunk(lo: int) -> tuple[np.ndarray, np.ndarray]:
        hi = min(lo + TRIAL_CHUNK, trials)
        uniforms = np.vstack([derive_stream(seed, t).uniforms(per_iter * k_max) for t in range(lo, hi)])
        return run_batch(problem, uniforms, k_grid, start.x, start.z, method=method)

    starts = range(0, trials, TRIAL_CHUNK)
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    xs = np.concatenate([p[0] for p in parts])
    zs = np.concatenate([p[1] for p in parts])
    return McRun(
        problem=problem,
        k_grid=k_grid,
        x_err=xs - problem.x_star,
        z_err=zs - problem.residual if method == "rek" else zs,
        x0=start.x,
        z0=start.z,
        method=method,
        seed=seed,
    )


def summarize(run: McRun, ells, quantity: str = "x") -> list[McSummary]:
    """Per-ell empirical means next to the predicted curve.

    ``quantity="x"`` tracks ``<x_k - x*, v_ell>``; ``"z"`` tracks
    ``<z_k - (b - A x*), A v_ell>``.  For plain RK the prediction is the
    geometric decay ``rho_ell^k <x_0 - x*, v_ell>``.
    """
    p = run.problem
    f = p.svd
    k_max = int(run.k_grid[-1]) if run.k_grid.size else 0
    out = []
    for ell in ells:
        v = f.right_vector(ell)
        if quantity == "x":
            samples = run.x_err @ v
            z0 = run.z0 if run.method == "rek" else np.zeros(p.m)
            curve = theorem2_curve(f, p, run.x0, z0, ell, k_max)
        elif quantity == "z":
            if run.method != "rek":
                raise ValueError("z-chain is only defined for REK runs")
            samples = run.z_err @ (p.a @ v)
            curve = lemma1_curve(f, p, run.z0, ell, k_max)
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        mean, stderr = _mean_stderr(samples)
        out.append(
            McSummary(
                ell=ell,
                k_grid=run.k_grid,
                mean=mean,
                stderr=stderr,
                trials=run.trials,
                theory=curve.at(run.k_grid),
            )
        )
    return out


def squared_error(run: McRun) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of ``||x_k - x*||^2`` on the run's grid."""
    return _mean_stderr(np.einsum("tgn,tgn->tg", run.x_err, run.x_err))


def du_bound_check(run: McRun, nsigma: float = NSIGMA) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(bound, mean, stderr, passed)`` on the run's grid."""
    p = run.problem
    k_max = int(run.k_grid[-1]) if run.k_grid.size else 0
    bound = du_bound(p.svd, p, run.x0, run.z0, k_max).at(run.k_grid)
    mean, stderr = squared_error(run)
    # k = 0 is an equality; allow the same rounding floor as the sigma bands
    return bound, mean, stderr, mean <= bound + nsigma * stderr + 1e-12 * np.maximum(1.0, bound)


def theorem3_check(run: McRun, nsigma: float = NSIGMA):
    """One-step bound at every grid ``k`` whose predecessor ``k - 1`` is also on the grid.

    Returns ``(ks, rhs_z_term, mean_diff, stderr, passed)`` where ``mean_diff``
    estimates ``E||e_k||^2 - E[||e_{k-1}||^2 - ||A e_{k-1}||^2/||A||_F^2]``,
    which must not exceed the z-dependent term of the bound.
    """
    p = run.problem
    fro2 = p.fro2
    index = {int(k): g for g, k in enumerate(run.k_grid)}
    ks, z_terms, means, errs = [], [], [], []
    for k, g in index.items():
        if k < 1 or k - 1 not in index:
            continue
        prev = run.x_err[:, index[k - 1]]
        ae = prev @ p.a.T
        contracted = np.einsum("tn,tn->t", prev, prev) - np.einsum("tm,tm->t", ae, ae) / fro2
        cur = np.einsum("tn,tn->t", run.x_err[:, g], run.x_err[:, g])
        mean, stderr = _mean_stderr(cur - contracted)
        ks.append(k)
        z_terms.append(theorem3_rhs(p, run.z0, k, 0.0))
        means.append(float(mean))
        errs.append(float(stderr))
    ks, z_terms, means, errs = map(np.array, (ks, z_terms, means, errs))
    return ks, z_terms, means, errs, means <= z_terms + nsigma * errs


def run_monte_carlo(
    problem: ProblemInstance,
    ells,
    K: int,
    trials: int,
    seed: int,
    k_grid=None,
    x0=None,
    z0=None,
    method: str = "rek",
) -> list[McSummary]:
    """Empirical ``E<x_k - x*, v_ell>`` on ``k_grid`` (default: log grid up to K)."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    grid = log_grid(K) if k_grid is None else k_grid
    run = simulate(problem, grid, trials, seed, x0=x0, z0=z0, method=method)
    return summarize(run, ells)


def default_start(problem: ProblemInstance, x0=None, z0=None) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.zeros(problem.n) if x0 is None else as_vector(x0, problem.n)
    z0 = problem.b.copy() if z0 is None else as_vector(z0, problem.m)
    return x0, z0


# --- tabular reports -------------------------------------------------------

REPORT_COLUMNS = ("ell", "k", "theory", "estimate", "stderr", "pass")


def enumeration_report(problem: ProblemInstance, x0, z0, k_max: int, ells=None, tol: float = 1e-12) -> dict:
    """Exact oracle against every formula; rows keyed by check name.

    Equalities pass when ``|estimate - theory| <= tol``; the two bounds pass
    when ``estimate <= theory + tol * max(1, theory)``.
    """
    x0, z0 = default_start(problem, x0, z0)
    f = problem.svd
    ells = range(1, f.rank + 1) if ells is None else ells
    res = enumerate_moments(problem, x0, z0, k_max)
    report = {"theorem2": [], "lemma1": [], "du_bound": [], "theorem3": []}
    for ell in ells:
        v = f.right_vector(ell)
        t2 = theorem2_curve(f, problem, x0, z0, ell, k_max).values
        l1 = lemma1_curve(f, problem, z0, ell, k_max).values
        ex, ez = res.x_mean @ v, res.z_mean @ (problem.a @ v)
        for k in range(k_max + 1):
            report["theorem2"].append((ell, k, t2[k], ex[k], 0.0, abs(ex[k] - t2[k]) <= tol))
            report["lemma1"].append((ell, k, l1[k], ez[k], 0.0, abs(ez[k] - l1[k]) <= tol))
    bound = du_bound(f, problem, x0, z0, k_max).values
    for k in range(k_max + 1):
        ok = res.err_sq[k] <= bound[k] + tol * max(1.0, bound[k])
        report["du_bound"].append((f.rank, k, bound[k], res.err_sq[k], 0.0, ok))
    for k in range(1, k_max + 1):
        rhs = theorem3_rhs(problem, z0, k, res.contracted[k - 1])
        ok = res.err_sq[k] <= rhs + tol * max(1.0, rhs)
        report["theorem3"].append((f.rank, k, rhs, res.err_sq[k], 0.0, ok))
    return report


def montecarlo_report(run: McRun, ells, nsigma: float = NSIGMA) -> dict:
    """Sigma-band checks of a Monte Carlo run; rows keyed by check name."""
    report = {"theorem2": []}
    for s in summarize(run, ells, "x"):
        for g, k in enumerate(s.k_grid):
            report["theorem2"].append(
                (s.ell, int(k), s.theory[g], s.mean[g], s.stderr[g], bool(s.within(nsigma)[g]))
            )
    if run.method == "rek":
        report["lemma1"] = []
        for s in summarize(run, ells, "z"):
            for g, k in enumerate(s.k_grid):
                report["lemma1"].append(
                    (s.ell, int(k), s.theory[g], s.mean[g], s.stderr[g], bool(s.within(nsigma)[g]))
                )
        bound, mean, stderr, passed = du_bound_check(run, nsigma)
        rank = run.problem.rank
        report["du_bound"] = [
            (rank, int(k), bound[g], mean[g], stderr[g], bool(passed[g])) for g, k in enumerate(run.k_grid)
        ]
        ks, z_terms, means, errs, ok = theorem3_check(run, nsigma)
        if ks.size:
            report["theorem3"] = [
                (rank, int(k), z_terms[g], means[g], errs[g], bool(ok[g])) for g, k in enumerate(ks)
            ]
    return report


def report_passed(report: dict) -> bool:
    return all(row[-1] for rows in report.values() for row in rows)
