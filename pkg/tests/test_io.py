import numpy as np
import pytest

from reklab.generators import gen_synthetic
from reklab.io import load_problem, read_manifest, read_mtx, save_problem, write_manifest, write_mtx
from reklab.problem import ProblemInvariantError
from reklab.sampling import RngStream


def test_mtx_roundtrip_is_exact(tmp_path, rng):
    a = rng.standard_normal((7, 4)) * 10.0 ** rng.integers(-8, 8, (7, 4))
    write_mtx(tmp_path / "a.mtx", a)
    assert np.array_equal(read_mtx(tmp_path / "a.mtx"), a)
    v = rng.standard_normal(5)
    write_mtx(tmp_path / "v.mtx", v)
    assert np.array_equal(read_mtx(tmp_path / "v.mtx", vector=True), v)


def test_matrix_read_as_vector_rejected(tmp_path):
    write_mtx(tmp_path / "a.mtx", np.ones((2, 2)))
    with pytest.raises(ValueError, match="column vector"):
        read_mtx(tmp_path / "a.mtx", vector=True)


def test_manifest_roundtrip(tmp_path):
    write_manifest(tmp_path / "m.txt", {"seed": 3, "tol": 1e-12, "spectrum": [2.0, 0.5], "flag": True})
    got = read_manifest(tmp_path / "m.txt")
    assert got["seed"] == "3"
    assert float(got["tol"]) == 1e-12
    assert [float(s) for s in got["spectrum"].split(",")] == [2.0, 0.5]


def test_problem_directory_roundtrip(tmp_path):
    p = gen_synthetic(6, 4, [2.0, 1.0, 0.5], inconsistent=True, rng=RngStream(2))
    save_problem(p, tmp_path / "prob", {"seed": 2})
    assert sorted(f.name for f in (tmp_path / "prob").iterdir()) == [
        "A.mtx", "b.mtx", "manifest.txt", "xstar.mtx", "z.mtx",
    ]
    q = load_problem(tmp_path / "prob")
    for name in ("a", "b", "x_star", "z"):
        assert np.array_equal(getattr(p, name), getattr(q, name))
    np.testing.assert_allclose(q.svd.sigma, p.svd.sigma, atol=1e-14)
    manifest = read_manifest(tmp_path / "prob" / "manifest.txt")
    assert (manifest["m"], manifest["n"], manifest["rank"]) == ("6", "4", "3")


def test_corrupted_rhs_fails_invariant_check(tmp_path):
    p = gen_synthetic(6, 4, [2.0, 1.0, 0.5], inconsistent=True, rng=RngStream(2))
    save_problem(p, tmp_path)
    b = p.b.copy()
    b[0] += 1e-3
    write_mtx(tmp_path / "b.mtx", b)
    with pytest.raises(ProblemInvariantError):
        load_problem(tmp_path)
    assert load_problem(tmp_path, check=False).b[0] == b[0]


def test_missing_file_and_dimension_mismatch(tmp_path):
    p = gen_synthetic(3, 2, [1.0, 0.5], rng=RngStream(1))
    save_problem(p, tmp_path)
    write_mtx(tmp_path / "z.mtx", np.zeros(4))
    with pytest.raises(ValueError):
        load_problem(tmp_path)
    (tmp_path / "z.mtx").unlink()
    with pytest.raises(FileNotFoundError, match="z.mtx"):
        load_problem(tmp_path)
