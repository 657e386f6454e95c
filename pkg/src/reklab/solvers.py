"""Randomized Kaczmarz (RK) and randomized extended Kaczmarz (REK) iterations.

One REK iteration draws a column ``j`` (probability ``||A_(j)||^2 / ||A||_F^2``),
projects ``z`` onto the hyperplane orthogonal to that column, then draws a row
``i`` and projects ``x`` onto ``{x : A^(i) x = b_i - z_i}`` using the *updated*
``z``.  After ``k`` iterations the state holds ``x_k`` and ``z_k``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_vector, frobenius_norm, project_range, project_row_space
from .metrics import MetricUndefined, metric_alignment, metric_rayleigh
from .problem import ProblemInstance
from .sampling import (
    DiscreteSampler,
    RngStream,
    build_col_sampler,
    build_row_sampler,
    sample,
)

Observer = Callable[[int, np.ndarray, np.ndarray], None]


class ZeroRowError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RekState:
    x: np.ndarray
    z: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class SolveConfig:
    """``max_iters`` iterations are run unless the residual rule fires first.

    ``resid_tol = 0`` disables the residual rule.  ``track_ells`` lists the
    1-based singular indices whose coefficients are recorded.
    """

    max_iters: int = 1000
    resid_tol: float = 0.0
    record_every: int = 1
    track_ells: tuple[int, ...] = ()

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.resid_tol < 0:
            raise ValueError("resid_tol must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(eq=False)
class TrajectoryRecord:
    ks: np.ndarray
    alignment: np.ndarray
    rayleigh: np.ndarray
    err_norm: np.ndarray
    coeffs: dict[int, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.ks.shape[0]


class _Recorder:
    def __init__(self, problem: ProblemInstance, track_ells: Sequence[int]):
        for ell in track_ells:
            if not 1 <= ell <= problem.n:
                raise ValueError(f"tracked index {ell} outside 1..{problem.n}")
        self.a = problem.a
        self.x_star = problem.x_star
        self.v_r = problem.svd.right_vector(max(problem.rank, 1))
        self.track = {ell: problem.svd.right_vector(ell) for ell in track_ells}
        self.rows: list[tuple] = []

    def __call__(self, k: int, x: np.ndarray) -> None:
        e = x - self.x_star
        try:
            align = metric_alignment(x, self.x_star, self.v_r)
            ray = metric_rayleigh(self.a, x, self.x_star)
        except MetricUndefined:
            align = ray = np.nan
        coeffs = tuple(float(e @ v) for v in self.track.values())
        self.rows.append((k, align, ray, float(np.linalg.norm(e)), coeffs))

    def finish(self) -> TrajectoryRecord:
        ks, align, ray, err, coeffs = zip(*self.rows)
        per_ell = np.array(coeffs, dtype=np.float64).reshape(len(self.rows), len(self.track))
        return TrajectoryRecord(
            ks=np.array(ks, dtype=np.int64),
            alignment=np.array(align),
            rayleigh=np.array(ray),
            err_norm=np.array(err),
            coeffs={ell: per_ell[:, c] for c, ell in enumerate(self.track)},
        )


def rk_row_step(a, rhs, x, i: int) -> np.ndarray:
    """Project ``x`` onto the hyperplane ``A^(i) x = rhs_i``."""
    row = a[i]
    norm2 = float(row @ row)
    if norm2 == 0.0:
        raise ZeroRowError(f"row {i} is zero")
    return x - ((row @ x - rhs[i]) / norm2) * row


def rk_col_step(a, z, j: int) -> np.ndarray:
    """RK step for ``A^T z = 0``: remove the component of ``z`` along column ``j``."""
    col = a[:, j]
    norm2 = float(col @ col)
    if norm2 == 0.0:
        raise ZeroRowError(f"column {j} is zero")
    return z - ((col @ z) / norm2) * col


def rek_iterate(
    state: RekState,
    problem: ProblemInstance,
    row_s: DiscreteSampler,
    col_s: DiscreteSampler,
    rng: RngStream,
) -> RekState:
    """One REK iteration; consumes exactly two uniforms (column first, then row)."""
    j = sample(col_s, rng)
    z = rk_col_step(problem.a, state.z, j)
    i = sample(row_s, rng)
    x = rk_row_step(problem.a, problem.b - z, state.x, i)
    return RekState(x=x, z=z, k=state.k + 1)


def initial_state(problem: ProblemInstance, x0=None, z0=None, check: bool = True) -> RekState:
    """Defaults ``x0 = 0`` and ``z0 = b``.

    With ``check`` the memberships ``x0 in range(A^T)`` and
    ``z0 in b + range(A)`` are verified to 1e-8 relative.
    """
    x0 = np.zeros(problem.n) if x0 is None else as_vector(x0, problem.n)
    z0 = problem.b.copy() if z0 is None else as_vector(z0, problem.m)
    if check:
        f = problem.svd
        dx = np.linalg.norm(x0 - project_row_space(f, x0))
        if dx > 1e-8 * max(1.0, np.linalg.norm(x0)):
            raise ValueError(f"x0 is not in range(A^T) (distance {dx:.3e})")
        shift = z0 - problem.b
        dz = np.linalg.norm(shift - project_range(f, shift))
        if dz > 1e-8 * max(1.0, np.linalg.norm(z0)):
            raise ValueError(f"z0 is not in b + range(A) (distance {dz:.3e})")
    return RekState(x=x0, z=z0, k=0)


def _residuals_small(problem: ProblemInstance, fro: float, x, z, tol: float) -> bool:
    scale = max(1.0, float(np.linalg.norm(x)))
    at_z = np.linalg.norm(problem.a.T @ z)
    fit = np.linalg.norm(problem.a @ x - problem.b + z)
    return at_z <= tol * fro * fro * scale and fit <= tol * fro * scale


def rek_solve(
    problem: ProblemInstance,
    cfg: SolveConfig,
    rng: RngStream,
    observer: Observer | None = None,
    x0=None,
    z0=None,
) -> tuple[RekState, TrajectoryRecord]:
    """Run REK for ``cfg.max_iters`` iterations; the result is ``x_l`` after exactly l steps.

    The state is recorded (and ``observer`` called) at ``k = 0``, at every
    multiple of ``cfg.record_every`` and at the final iteration.
    """
    row_s = build_row_sampler(problem.a)
    col_s = build_col_sampler(problem.a)
    fro = frobenius_norm(problem.a)
    state = initial_state(problem, x0, z0)
    recorder = _Recorder(problem, cfg.track_ells)

    def emit(s: RekState) -> None:
        recorder(s.k, s.x)
        if observer is not None:
            observer(s.k, s.x, s.z)

    emit(state)
    last_emitted = 0
    while state.k < cfg.max_iters:
        state = rek_iterate(state, problem, row_s, col_s, rng)
        if state.k % cfg.record_every == 0:
            emit(state)
            last_emitted = state.k
        if cfg.resid_tol > 0 and _residuals_small(problem, fro, state.x, state.z, cfg.resid_tol):
            break
    if last_emitted != state.k:
        emit(state)
    return state, recorder.finish()


def rk_solve(
    problem: ProblemInstance,
    cfg: SolveConfig,
    rng: RngStream,
    observer: Observer | None = None,
    x0=None,
) -> tuple[np.ndarray, TrajectoryRecord]:
    """Plain RK on ``A x = b``: one row draw per iteration, no z-correction.

    Converges to ``x*`` only for consistent systems.  The observer receives
    ``z = 0`` for interface compatibility.
    """
    row_s = build_row_sampler(problem.a)
    fro = frobenius_norm(problem.a)
    x = initial_state(problem, x0, None).x
    zero_z = np.zeros(problem.m)
    recorder = _Recorder(problem, cfg.track_ells)

    def emit(k: int, x: np.ndarray) -> None:
        recorder(k, x)
        if observer is not None:
            observer(k, x, zero_z)

    emit(0, x)
    k = last_emitted = 0
    while k < cfg.max_iters:
        x = rk_row_step(problem.a, problem.b, x, sample(row_s, rng))
        k += 1
        if k % cfg.record_every == 0:
            emit(k, x)
            last_emitted = k
        if cfg.resid_tol > 0 and np.linalg.norm(problem.a @ x - problem.b) <= cfg.resid_tol * fro * max(
            1.0, float(np.linalg.norm(x))
        ):
            break
    if last_emitted != k:
        emit(k, x)
    return x, recorder.finish()


def run_batch(
    problem: ProblemInstance,
    uniforms: np.ndarray,
    k_grid: Sequence[int],
    x0=None,
    z0=None,
    method: str = "rek",
) -> tuple[np.ndarray, np.ndarray]:
    """Advance many independent trajectories at once.

    ``uniforms`` has one row per trial holding that trial's draws in stream
    order (REK: column then row per iteration; RK: one row draw per
    iteration), so each row reproduces :func:`rek_solve` / :func:`rk_solve`
    driven by the same stream.  Returns snapshots ``X`` of shape
    ``(trials, len(k_grid), n)`` and ``Z`` of shape ``(trials, len(k_grid), m)``
    taken after ``k`` iterations for each ``k`` in ``k_grid``.
    """
    if method not in ("rek", "rk"):
        raise ValueError(f"unknown method {method!r}")
    a = problem.a
    at = np.ascontiguousarray(a.T)
    row_s = build_row_sampler(a)
    trials = uniforms.shape[0]
    grid = sorted(set(int(k) for k in k_grid))
    if list(k_grid) != grid:
        raise ValueError("k_grid must be strictly increasing")
    k_max = grid[-1] if grid else 0
    per_iter = 2 if method == "rek" else 1
    if uniforms.shape[1] < per_iter * k_max:
        raise ValueError("not enough uniforms for the requested k_grid")

    start = initial_state(problem, x0, z0 if method == "rek" else None)
    x = np.tile(start.x, (trials, 1))
    z = np.tile(start.z, (trials, 1)) if method == "rek" else np.zeros((trials, problem.m))
    rows = row_s.index_of(uniforms[:, per_iter - 1 :: per_iter][:, :k_max])
    if method == "rek":
        col_s = build_col_sampler(a)
        cols = col_s.index_of(uniforms[:, 0::2][:, :k_max])
        col_norm2 = col_s.weights
    row_norm2 = row_s.weights
    b = problem.b

    xs = np.empty((trials, len(grid), problem.n))
    zs = np.empty((trials, len(grid), problem.m))
    slot = 0
    for k in range(k_max + 1):
        if k > 0:
            if method == "rek":
                cj = at[cols[:, k - 1]]
                z = z - (np.einsum("ij,ij->i", cj, z) / col_norm2[cols[:, k - 1]])[:, None] * cj
            i = rows[:, k - 1]
            ai = a[i]
            resid = np.einsum("ij,ij->i", ai, x) - b[i] + z[np.arange(trials), i]
            x = x - (resid / row_norm2[i])[:, None] * ai
        if slot < len(grid) and grid[slot] == k:
            xs[:, slot] = x
            zs[:, slot] = z
            slot += 1
    return xs, zs
