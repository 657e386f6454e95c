"""Single-run alignment and Rayleigh-quotient traces on the near-rank-deficient test matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generators import DESK_DEFAULTS, PAPER_DEFAULTS, gen_paper_problem
from .problem import ProblemInstance
from .sampling import derive_stream
from .solvers import SolveConfig, TrajectoryRecord, rek_solve

SCALES = {"desk": DESK_DEFAULTS, "paper": PAPER_DEFAULTS}
DEFAULT_ITERS = 200_000
# stream ids derived from the single user seed
PROBLEM_STREAM = 0
SOLVE_STREAM = 1


@dataclass(frozen=True, eq=False)
class FigureData:
    problem: ProblemInstance
    record: TrajectoryRecord
    iters: int

    @property
    def sigma_r(self) -> float:
        return self.problem.svd.sigma_r

    def window_median(self, values: np.ndarray, start: float, stop: float) -> float:
        """Median of ``values`` over recorded ``k`` in ``[start * iters, stop * iters]``."""
        ks = self.record.ks
        mask = (ks >= start * self.iters) & (ks <= stop * self.iters)
        return float(np.nanmedian(values[mask]))

    def alignment_windows(self) -> tuple[float, float]:
        """(first-1% median, final-10% median) of the alignment metric."""
        a = self.record.alignment
        return self.window_median(a, 0.0, 0.01), self.window_median(a, 0.9, 1.0)

    def rayleigh_windows(self) -> tuple[float, float]:
        r = self.record.rayleigh
        return self.window_median(r, 0.0, 0.01), self.window_median(r, 0.9, 1.0)


def reproduce_figures(
    scale: str = "desk",
    seed: int = 3,
    iters: int = DEFAULT_ITERS,
    record_every: int = 1,
    problem: ProblemInstance | None = None,
) -> FigureData:
    """Build the test matrix at ``scale`` and run REK from ``x0 = 0``, ``z0 = b``."""
    if problem is None:
        if scale not in SCALES:
            raise ValueError(f"scale must be one of {sorted(SCALES)}")
        problem = gen_paper_problem(**SCALES[scale], rng=derive_stream(seed, PROBLEM_STREAM))
    cfg = SolveConfig(max_iters=iters, record_every=record_every)
    _, record = rek_solve(problem, cfg, derive_stream(seed, SOLVE_STREAM))
    return FigureData(problem=problem, record=record, iters=iters)
