"""Dense max-plus (tropical) linear algebra.

Scalars are Python floats and matrices/vectors are read-only ``float64``
numpy arrays. The bottom element ``EPS`` is backed by IEEE ``-inf``; ``+inf``
and ``nan`` are rejected at construction so ``-inf`` can only enter as ε.
"""

from __future__ import annotations

import math
from typing import Iterable, TextIO

import numpy as np

EPS = float("-inf")
"""ε, the neutral element of ⊕ and absorbing element of ⊗."""

E = 0.0
"""e, the neutral element of ⊗."""

EPS_TOKEN = "eps"


class ShapeError(ValueError):
    """Operands have incompatible or non-square shapes."""


class ParseError(ValueError):
    """Malformed matrix text. Carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


def is_eps(x: float) -> bool:
    return x == EPS


def oplus(x: float, y: float) -> float:
    return x if x >= y else y


def otimes(x: float, y: float) -> float:
    if x == EPS or y == EPS:
        return EPS
    return x + y


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_tropical(data, ndim: int | None = None) -> np.ndarray:
    """Validate ``data`` as a max-plus array and return a read-only copy.

    ``None`` and the string ``"eps"`` are accepted as ε inside nested lists.
    """
    if isinstance(data, np.ndarray):
        a = np.array(data, dtype=float)
    else:
        a = np.array(_replace_eps(data), dtype=float)
    if ndim is not None and a.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-d array, got shape {a.shape}")
    if np.isnan(a).any() or np.isposinf(a).any():
        raise ValueError("max-plus entries must be finite or eps (-inf)")
    return _freeze(a)


def _replace_eps(data):
    if isinstance(data, (list, tuple)):
        return [_replace_eps(x) for x in data]
    if data is None or data == EPS_TOKEN:
        return EPS
    return data


def zeros(n: int, m: int | None = None) -> np.ndarray:
    """The all-ε matrix ℰ (n×m, square when ``m`` is omitted)."""
    return _freeze(np.full((n, n if m is None else m), EPS))


def identity(n: int) -> np.ndarray:
    """E_n: e on the diagonal, ε elsewhere."""
    a = np.full((n, n), EPS)
    np.fill_diagonal(a, E)
    return _freeze(a)


def _require_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")


def mat_add(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape:
        raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}")
    return _freeze(np.maximum(a, b))


def mat_mul(a, b) -> np.ndarray:
    """(A ⊗ B)_ij = max_k (A_ik + B_kj).

    A 1-d ``b`` is treated as a column vector and a 1-d result is returned.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    if a.shape[1] == 0:
        out = np.full((a.shape[0], b.shape[1]), EPS)
    else:
        # -inf + finite stays -inf and +inf is excluded, so no nan can appear
        out = (a[:, :, None] + b[None, :, :]).max(axis=1)
    return _freeze(out[:, 0] if vector else out)


def scale(c: float, a) -> np.ndarray:
    """c ⊗ A, entrywise."""
    a = np.asarray(a, float)
    if c == EPS:
        return _freeze(np.full(a.shape, EPS))
    return _freeze(a + c)


def mat_pow(a, k: int) -> np.ndarray:
    """A^⊗k by repeated squaring; ``k = 0`` gives E_n."""
    a = np.asarray(a, float)
    _require_square(a)
    if k < 0:
        raise ValueError("power must be non-negative")
    result = identity(a.shape[0])
    base = a
    while k:
        if k & 1:
            result = mat_mul(result, base)
        k >>= 1
        if k:
            base = mat_mul(base, base)
    return result


def trace(a) -> float:
    """Tropical trace: ⊕ of the diagonal."""
    a = np.asarray(a, float)
    _require_square(a)
    if a.shape[0] == 0:
        return EPS
    return float(np.max(np.diag(a)))


def is_admissible_eigenvector(v) -> bool:
    return bool(np.any(np.asarray(v) > EPS))


def tropical_close(x, y, atol: float = 1e-9) -> bool:
    """Equality with exact ε matching and ``atol`` on finite entries."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        return False
    ex, ey = np.isneginf(x), np.isneginf(y)
    if not np.array_equal(ex, ey):
        return False
    return bool(np.all(np.abs(x[~ex] - y[~ey]) <= atol))


def format_scalar(x: float) -> str:
    return EPS_TOKEN if x == EPS else repr(float(x))


def parse_scalar(token: str) -> float:
    if token == EPS_TOKEN:
        return EPS
    x = float(token)
    if not math.isfinite(x):
        raise ValueError(f"non-finite literal {token!r}; use {EPS_TOKEN!r} for ε")
    return x


def dumps(a) -> str:
    """Serialize a matrix: header ``"n m"`` then one row per line."""
    a = np.asarray(a, float)
    if a.ndim == 1:
        a = a[None, :]
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(format_scalar(x) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def loads(text: str) -> np.ndarray:
    """Parse the text format written by :func:`dumps`.

    Blank lines and ``#`` comments are skipped. Errors report the 1-based
    line and column of the offending token.
    """
    rows: list[list[float]] = []
    header = None
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 2:
                raise ParseError("header must be 'n m'", lineno)
            try:
                header = (int(tokens[0]), int(tokens[1]))
            except ValueError:
                raise ParseError("header dimensions must be integers", lineno) from None
            if min(header) < 0:
                raise ParseError("negative dimension", lineno)
            continue
        if len(rows) == header[0]:
            raise ParseError(f"more than {header[0]} rows", lineno)
        if len(tokens) != header[1]:
            raise ParseError(f"expected {header[1]} entries, got {len(tokens)}", lineno)
        row = []
        col = 1
        for tok in tokens:
            col = raw.index(tok, col - 1) + 1
            try:
                row.append(parse_scalar(tok))
            except ValueError as exc:
                raise ParseError(str(exc), lineno, col) from None
            col += len(tok)
        rows.append(row)
    if header is None:
        raise ParseError("empty input", lineno + 1)
    if len(rows) != header[0]:
        raise ParseError(f"expected {header[0]} rows, got {len(rows)}", lineno + 1)
    return as_tropical(np.array(rows, dtype=float).reshape(header))


def load(fp: TextIO | str) -> np.ndarray:
    if isinstance(fp, str):
        with open(fp) as fh:
            return loads(fh.read())
    return loads(fp.read())


def dump(a, fp: TextIO | str) -> None:
    if isinstance(fp, str):
        with open(fp, "w") as fh:
            fh.write(dumps(a))
    else:
        fp.write(dumps(a))


def from_conventional(a: Iterable, zero: float = 0.0) -> np.ndarray:
    """Map a conventional matrix into max-plus, sending ``zero`` entries to ε."""
    a = np.array(a, dtype=float)
    a[a == zero] = EPS
    return as_tropical(a)
