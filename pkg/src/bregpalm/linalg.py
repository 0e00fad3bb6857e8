"""Dense vector/matrix helpers: spectral estimation, seeded sampling, text I/O.

Vectors are 1-d and matrices 2-d float64 ``numpy`` arrays throughout the
package. Exported operations validate finiteness on the way in so that no
NaN/inf ever enters a solver through this module.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MatrixParseError, ParameterError

__all__ = [
    "as_matrix",
    "as_vector",
    "spectral_norm_sq",
    "gaussian_matrix",
    "normalize_for_contraction",
    "save_matrix",
    "load_matrix",
]

# Relative safety shrink applied when rescaling to unit spectral norm, so the
# contract ||A|| <= 1 survives the spectral estimate's own error; the estimate
# is tightened below the guard, keeping the result within 1e-6 of unit norm.
_CONTRACTION_GUARD = 1e-9
_CONTRACTION_TOL = 1e-13


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite 1-d float64 array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ParameterError(f"expected a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("vector contains NaN or infinite entries")
    return arr


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-d float64 array."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ParameterError(f"expected a 2-d matrix, got shape {arr.shape}")
    if arr.size == 0:
        raise ParameterError("matrix must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("matrix contains NaN or infinite entries")
    return arr


def spectral_norm_sq(m, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of M^T M (the squared operator 2-norm of M).

    Power iteration on M^T M, applied as x -> M^T (M x) so the Gram matrix is
    never formed. The start vector is all-ones, which keeps the estimate
    deterministic; if that vector is annihilated (or lies in the nullspace at
    any point) the iteration deterministically restarts from coordinate basis
    vectors. Iteration stops once the Rayleigh quotient changes by a relative
    amount <= ``tol``.
    """
    a = as_matrix(m)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if not np.any(a):
        return 0.0

    def iterate(v0: np.ndarray) -> float | None:
        v = v0 / np.linalg.norm(v0)
        lam = 0.0
        for _ in range(max_iter):
            w = a.T @ (a @ v)
            norm_w = np.linalg.norm(w)
            if norm_w == 0.0:
                return None  # v is in the nullspace; caller restarts
            lam_new = float(v @ w)
            v = w / norm_w
            if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
                return lam_new
            lam = lam_new
        return lam

    lam = iterate(np.ones(a.shape[1]))
    if lam is None:
        for j in range(a.shape[1]):
            e = np.zeros(a.shape[1])
            e[j] = 1.0
            if np.any(a @ e):
                lam = iterate(e)
                break
    return max(float(lam or 0.0), 0.0)


def gaussian_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """Deterministic matrix of i.i.d. standard normal entries.

    Drawn from numpy's PCG64 generator via ``standard_normal`` (ziggurat), so
    a fixed ``(rows, cols, seed)`` always reproduces the same matrix.
    """
    if rows < 1 or cols < 1:
        raise ParameterError("rows and cols must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, cols))


def normalize_for_contraction(a) -> np.ndarray:
    """Rescale ``a`` so its operator 2-norm is <= 1 (and within 1e-6 of 1).

    Matrices whose norm is already <= 1 are returned unchanged (as a copy).
    Scaling uses the global spectral norm, not any column-wise rule, so the
    contraction property holds for the whole operator.
    """
    a = as_matrix(a)
    s = spectral_norm_sq(a, tol=_CONTRACTION_TOL)
    if s == 0.0:
        raise ParameterError("cannot normalize the zero matrix")
    if s <= 1.0:
        return a.copy()
    return a / math.sqrt(s * (1.0 + _CONTRACTION_GUARD))


def save_matrix(m, path) -> None:
    """Write a matrix in the text format: header ``rows cols``, row-major values.

    Values are printed with shortest round-trip precision so ``load_matrix``
    recovers them exactly.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{rows} {cols}\n")
        for i in range(rows):
            fh.write(" ".join(repr(float(x)) for x in a[i]) + "\n")


def load_matrix(path) -> np.ndarray:
    """Parse a matrix from the text format written by :func:`save_matrix`.

    Lines starting with ``#`` are comments. Rejects malformed headers,
    entry-count mismatches, non-numeric tokens and non-finite values, naming
    the offending line and column.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()

    tokens: list[tuple[str, int, int]] = []
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0]
        col = 1
        for raw in body.split():
            col = body.index(raw, col - 1) + 1
            tokens.append((raw, lineno, col))
            col += len(raw)

    if len(tokens) < 2:
        raise MatrixParseError("missing 'rows cols' header")

    def parse_count(tok):
        raw, lineno, col = tok
        try:
            n = int(raw)
        except ValueError:
            raise MatrixParseError(f"header token {raw!r} is not an integer", lineno, col) from None
        if n < 1:
            raise MatrixParseError(f"header dimension {n} must be >= 1", lineno, col)
        return n

    rows = parse_count(tokens[0])
    cols = parse_count(tokens[1])
    values = tokens[2:]
    if len(values) != rows * cols:
        raise MatrixParseError(
            f"expected {rows * cols} values for a {rows}x{cols} matrix, found {len(values)}"
        )

    out = np.empty(rows * cols)
    for i, (raw, lineno, col) in enumerate(values):
        try:
            x = float(raw)
        except ValueError:
            raise MatrixParseError(f"token {raw!r} is not a number", lineno, col) from None
        if not math.isfinite(x):
            raise MatrixParseError(f"non-finite value {raw!r}", lineno, col)
        out[i] = x
    return out.reshape(rows, cols)
