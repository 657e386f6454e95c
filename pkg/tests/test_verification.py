import numpy as np
import pytest

from conftest import random_start
from reklab.generators import gen_synthetic
from reklab.problem import make_problem
from reklab.sampling import RngStream
from reklab.theory import decay_factor, lemma1_curve, theorem2_curve
from reklab.verification import (
    EnumerationBudgetError,
    enumerate_expectation,
    enumerate_moments,
    enumerate_z_expectation,
    enumeration_paths,
    enumeration_report,
    log_grid,
    montecarlo_report,
    report_passed,
    run_monte_carlo,
    simulate,
    summarize,
    theorem3_check,
)

TINY = [
    ("2x2 consistent", dict(m=2, n=2, spectrum=[1.5, 0.6], inconsistent=False)),
    ("3x2 consistent", dict(m=3, n=2, spectrum=[2.0, 0.7], inconsistent=False)),
    ("3x2 inconsistent", dict(m=3, n=2, spectrum=[2.0, 0.7], inconsistent=True)),
    ("2x3 consistent", dict(m=2, n=3, spectrum=[1.2, 0.9], inconsistent=False)),
    ("2x2 rank-1 inconsistent", dict(m=2, n=2, spectrum=[1.0], inconsistent=True)),
    ("3x3 rank-2 consistent", dict(m=3, n=3, spectrum=[1.4, 0.5], inconsistent=False)),
    ("3x3 rank-2 inconsistent", dict(m=3, n=3, spectrum=[1.4, 0.5], inconsistent=True)),
]


def tiny_instances():
    return [gen_synthetic(**kw, rng=RngStream(100 + i)) for i, (_, kw) in enumerate(TINY)]


@pytest.mark.parametrize("index", range(len(TINY)), ids=[name for name, _ in TINY])
@pytest.mark.parametrize("start", ["default", "random"])
def test_enumeration_equals_formulas(index, start):
    p = tiny_instances()[index]
    x0, z0 = (np.zeros(p.n), p.b) if start == "default" else random_start(p, seed=index)
    for ell in range(1, p.rank + 1):
        exact = enumerate_expectation(p, x0, z0, 3, ell)
        np.testing.assert_allclose(exact, theorem2_curve(p.svd, p, x0, z0, ell, 3).values, atol=1e-12, rtol=0)
        exact_z = enumerate_z_expectation(p, x0, z0, 3, ell)
        np.testing.assert_allclose(exact_z, lemma1_curve(p.svd, p, z0, ell, 3).values, atol=1e-12, rtol=0)


def test_enumeration_report_all_pass_including_bounds():
    for p in tiny_instances():
        report = enumeration_report(p, None, None, 3)
        assert set(report) == {"theorem2", "lemma1", "du_bound", "theorem3"}
        assert report_passed(report)


def test_enumeration_k0_and_one_by_one():
    p = make_problem(np.array([[2.0]]), [0.5], [0.0])
    res = enumerate_moments(p, np.zeros(1), p.b, 4)
    assert res.paths == 1
    # one path: z is killed by the column step, x lands on the solution (means are errors)
    np.testing.assert_allclose(res.x_mean[:, 0], [-0.5, 0.0, 0.0, 0.0, 0.0])
    q = gen_synthetic(3, 2, [1.0, 0.3], True, RngStream(1))
    x0, _ = random_start(q)
    assert enumerate_expectation(q, x0, q.b, 0, 2)[0] == pytest.approx((x0 - q.x_star) @ q.svd.right_vector(2))


def test_enumeration_skips_zero_rows():
    a = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    p = make_problem(a, [1.0, -1.0], [0.0, 0.0, 1.0])
    assert enumeration_paths(p, 2) == 16
    exact = enumerate_expectation(p, np.zeros(2), p.b, 2, 1)
    np.testing.assert_allclose(exact, theorem2_curve(p.svd, p, np.zeros(2), p.b, 1, 2).values, atol=1e-14)


def test_budget_exceeded_reports_required_paths():
    p = gen_synthetic(6, 5, [1, 1, 1, 1, 1], rng=RngStream(0))
    with pytest.raises(EnumerationBudgetError, match=str(30**5)):
        enumerate_moments(p, np.zeros(5), p.b, 5)


def test_log_grid():
    assert log_grid(50) == [1, 2, 5, 10, 20, 50]
    assert log_grid(7) == [1, 2, 5, 7]


def test_started_at_solution_means_are_exactly_zero():
    p = gen_synthetic(5, 3, [1.5, 1.0, 0.4], rng=RngStream(6))
    for s in run_monte_carlo(p, [1, 3], 20, trials=200, seed=0, x0=p.x_star, z0=p.residual):
        # zero up to rounding in the fixed-point projections
        assert np.all(np.abs(s.mean) <= 1e-14) and np.all(s.theory == 0.0)


def test_monte_carlo_within_bands_small():
    p = gen_synthetic(6, 4, [2.0, 1.0, 0.5], inconsistent=True, rng=RngStream(4))
    run = simulate(p, [0, 1, 3, 10, 30], 4000, seed=2)
    report = montecarlo_report(run, [1, 2, 3])
    assert report_passed(report)
    assert set(report) == {"theorem2", "lemma1", "du_bound", "theorem3"}


def test_monte_carlo_minimum_trials():
    p = gen_synthetic(3, 2, [1.0, 0.5], rng=RngStream(4))
    with pytest.raises(ValueError, match="100"):
        run_monte_carlo(p, [1], 5, trials=99, seed=0)


def test_stderr_shrinks_like_inverse_sqrt_trials():
    p = gen_synthetic(6, 4, [2.0, 1.0, 0.5], inconsistent=True, rng=RngStream(4))
    small = summarize(simulate(p, [5, 10], 4000, seed=8), [2])[0]
    large = summarize(simulate(p, [5, 10], 8000, seed=9), [2])[0]
    ratio = small.stderr / large.stderr
    np.testing.assert_allclose(ratio, np.sqrt(2), rtol=0.1)


def test_trials_independent_of_thread_count(monkeypatch):
    p = gen_synthetic(5, 3, [1.5, 1.0, 0.4], inconsistent=True, rng=RngStream(6))
    monkeypatch.setenv("KLAB_THREADS", "1")
    one = simulate(p, [1, 4, 9], 2500, seed=5)
    monkeypatch.setenv("KLAB_THREADS", "4")
    many = simulate(p, [1, 4, 9], 2500, seed=5)
    assert np.array_equal(one.x_err, many.x_err) and np.array_equal(one.z_err, many.z_err)
    # the first trials do not depend on how many trials follow
    prefix = simulate(p, [1, 4, 9], 1000, seed=5, workers=1)
    assert np.array_equal(prefix.x_err, one.x_err[:1000])


def test_order_of_decay_well_separated_spectrum():
    p = gen_synthetic(8, 4, [2.0, 1.0, 0.5, 0.25], rng=RngStream(12))
    x0 = p.x_star + p.svd.v[:, :4].sum(axis=1)
    summaries = summarize(simulate(p, [0, 5, 10], 5000, seed=1, x0=x0, z0=np.zeros(8)), [1, 2, 3, 4])
    for g in (1, 2):
        norm = [s.mean[g] / s.mean[0] for s in summaries]
        slack = [4 * s.stderr[g] / abs(s.mean[0]) for s in summaries]
        for lo in range(3):
            assert norm[lo] <= norm[lo + 1] + slack[lo] + slack[lo + 1]


def test_consistent_with_z0_b_is_not_pure_geometric_decay():
    """With z0 = b on a consistent system the drift term k/F rho^k <-A^T b, v>
    does not vanish, so the mean departs from rho^k <x0 - x*, v> while the
    full formula still holds exactly."""
    p = gen_synthetic(3, 2, [1.5, 0.4], rng=RngStream(3))
    ell = 2
    exact = enumerate_expectation(p, np.zeros(2), p.b, 3, ell)
    full = theorem2_curve(p.svd, p, np.zeros(2), p.b, ell, 3).values
    rho = decay_factor(p.svd, p.fro2, ell)
    geometric = rho ** np.arange(4) * (-p.x_star @ p.svd.right_vector(ell))
    np.testing.assert_allclose(exact, full, atol=1e-12, rtol=0)
    assert np.max(np.abs(exact - geometric)) > 1e-3


def test_theorem3_check_on_monte_carlo():
    p = gen_synthetic(6, 4, [2.0, 1.0, 0.5], inconsistent=True, rng=RngStream(4))
    ks, z_terms, means, errs, ok = theorem3_check(simulate(p, [0, 1, 2, 5, 6], 3000, seed=3))
    assert list(ks) == [1, 2, 6]
    assert ok.all()
