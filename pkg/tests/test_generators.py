import numpy as np
import pytest

from reklab.generators import DESK_DEFAULTS, gen_paper_problem, gen_synthetic
from reklab.linalg import svd
from reklab.problem import check_problem
from reklab.sampling import RngStream
from reklab.theory import decay_factor
from reklab.verification import enumerate_expectation
from reklab.theory import theorem2_curve


def test_zero_perturbation_gives_exact_duplicate_row():
    p = gen_paper_problem(n=20, shift=5.0, perturb=0.0, zero_rows=3, rng=RngStream(1))
    assert p.rank == 19
    assert np.array_equal(p.a[18], p.a[19])
    assert not p.consistent


def test_desk_instance():
    p = gen_paper_problem(**DESK_DEFAULTS, rng=RngStream(3))
    assert p.a.shape == (110, 100)
    np.testing.assert_allclose(np.linalg.norm(p.a[:100], axis=1), 1.0, atol=1e-14)
    assert np.all(p.a[100:] == 0.0)
    check_problem(p)
    assert p.rank == 100
    assert p.svd.sigma_r < 0.1 * p.svd.sigma[p.rank - 2]
    np.testing.assert_allclose(np.linalg.norm(p.z), 1.0)


def test_small_n_rejected():
    with pytest.raises(ValueError, match="n must be"):
        gen_paper_problem(n=2, rng=RngStream(0))


@pytest.mark.parametrize("m, n, spectrum, inconsistent", [
    (6, 4, [2.0, 1.0, 0.5], True),
    (4, 6, [3.0, 2.0, 1.0, 0.25], False),
    (20, 10, [5, 4, 3, 2.5, 2, 1.5, 1, 0.5], True),
    (5, 5, [], False),
])
def test_spectrum_roundtrip(m, n, spectrum, inconsistent):
    p = gen_synthetic(m, n, spectrum, inconsistent, RngStream(7))
    check_problem(p)
    assert p.rank == len(spectrum)
    np.testing.assert_allclose(p.svd.sigma[: len(spectrum)], spectrum, atol=1e-10)
    np.testing.assert_allclose(np.linalg.svd(p.a, compute_uv=False)[: len(spectrum)], spectrum, atol=1e-10)
    assert p.consistent is (not inconsistent)


def test_inconsistent_requires_rank_deficient_rows():
    with pytest.raises(ValueError, match="full row rank"):
        gen_synthetic(3, 3, [1.0, 1.0, 1.0], inconsistent=True, rng=RngStream(0))


def test_bad_spectrum_rejected():
    with pytest.raises(ValueError):
        gen_synthetic(3, 2, [1.0, 2.0], rng=RngStream(0))
    with pytest.raises(ValueError):
        gen_synthetic(3, 2, [1.0, 0.5, 0.2], rng=RngStream(0))


def test_rank_one_square():
    p = gen_synthetic(2, 2, [1.0], rng=RngStream(4))
    assert p.rank == 1
    assert decay_factor(p.svd, p.fro2, 1) == pytest.approx(0.0, abs=1e-15)


def test_repeated_singular_value_basis_satisfies_formula():
    p = gen_synthetic(3, 2, [1.0, 1.0], inconsistent=True, rng=RngStream(9))
    for ell in (1, 2):
        exact = enumerate_expectation(p, np.zeros(2), p.b, 3, ell)
        theory = theorem2_curve(p.svd, p, np.zeros(2), p.b, ell, 3).values
        np.testing.assert_allclose(exact, theory, atol=1e-12, rtol=0)


def test_generation_is_reproducible():
    a = gen_synthetic(5, 3, [1.0, 0.5], True, RngStream(3, 1))
    b = gen_synthetic(5, 3, [1.0, 0.5], True, RngStream(3, 1))
    assert np.array_equal(a.a, b.a) and np.array_equal(a.b, b.b)
    assert np.array_equal(svd(a.a).sigma, a.svd.sigma)
