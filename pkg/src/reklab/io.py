"""MatrixMarket array files, key=value manifests, and problem directories.

A problem directory holds ``A.mtx``, ``b.mtx``, ``xstar.mtx``, ``z.mtx`` and
``manifest.txt``.  Vectors are stored as ``len x 1`` arrays.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io

from .problem import ProblemInstance, load_arrays

MM_PRECISION = 17
PROBLEM_FILES = ("A.mtx", "b.mtx", "xstar.mtx", "z.mtx")
MANIFEST = "manifest.txt"


def write_mtx(path, array) -> None:
    array = np.asarray(array, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, array, precision=MM_PRECISION)


def read_mtx(path, vector: bool = False) -> np.ndarray:
    data = scipy.io.mmread(str(path))
    if hasattr(data, "toarray"):
        data = data.toarray()
    data = np.asarray(data, dtype=np.float64)
    if vector:
        if data.ndim == 2 and data.shape[1] != 1:
            raise ValueError(f"{path}: expected a column vector, got shape {data.shape}")
        return data.reshape(-1)
    return data


def write_manifest(path, entries: dict) -> None:
    lines = [f"{key}={_format_value(value)}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    entries = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: malformed manifest line {raw!r}")
        entries[key.strip()] = value.strip()
    return entries


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def save_problem(problem: ProblemInstance, directory, manifest: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, array in zip(PROBLEM_FILES, (problem.a, problem.b, problem.x_star, problem.z)):
        write_mtx(directory / name, array)
    entries = {"m": problem.m, "n": problem.n, "rank": problem.rank}
    entries.update(manifest or {})
    write_manifest(directory / MANIFEST, entries)
    return directory


def load_problem(directory, check: bool = True) -> ProblemInstance:
    """Read a problem directory; invariants are checked before returning."""
    directory = Path(directory)
    missing = [name for name in PROBLEM_FILES if not (directory / name).is_file()]
    if missing:
        raise FileNotFoundError(f"{directory}: missing {', '.join(missing)}")
    a = read_mtx(directory / "A.mtx")
    b, x_star, z = (read_mtx(directory / name, vector=True) for name in PROBLEM_FILES[1:])
    m, n = a.shape
    if b.shape[0] != m or z.shape[0] != m or x_star.shape[0] != n:
        raise ValueError(
            f"{directory}: dimension mismatch (A {m}x{n}, b {b.shape[0]}, "
            f"xstar {x_star.shape[0]}, z {z.shape[0]})"
        )
    return load_arrays(a, b, x_star, z, check=check)
