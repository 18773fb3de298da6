"""Trust matrices, Eigentrust and MaxTrust."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from maxtrust import maxplus as mp
from maxtrust.maxplus import EPS
from maxtrust.spectral import (
    DomainError,
    MAXPLUS,
    EigenPair,
    NonTerminationError,
    NormalForm,
    default_iteration_cap,
    dominant_eigenpair_conventional,
    pattern_key,
    is_irreducible,
    max_power,
    normal_form,
)

VECTOR_RULES = ("trajectory", "closed_form", "closed_form_no_exponent")


class NonConvergenceError(RuntimeError):
    """Eigentrust hit ``max_iters``. ``iterates`` holds the last two vectors."""

    def __init__(self, message: str, iterates: tuple[np.ndarray, np.ndarray], iterations: int):
        super().__init__(message)
        self.iterates = iterates
        self.iterations = iterations


class UnreachableBlockError(DomainError):
    """A non-final ε block has no coupling, so its trust is undefined."""


@dataclass
class InteractionLedger:
    """Satisfaction balances s_ij and the mask of pairs with any history.

    ``s`` is usually an integer count but real-valued balances are accepted.
    """

    s: np.ndarray
    known: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.known = np.asarray(self.known, dtype=bool)
        if self.s.ndim != 2 or self.s.shape[0] != self.s.shape[1] or self.s.shape != self.known.shape:
            raise mp.ShapeError("ledger grids must be square and of equal shape")

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @classmethod
    def empty(cls, n: int) -> "InteractionLedger":
        return cls(np.zeros((n, n)), np.zeros((n, n), dtype=bool))

    @classmethod
    def from_dense(cls, s) -> "InteractionLedger":
        s = np.asarray(s, dtype=float)
        return cls(s, np.ones(s.shape, dtype=bool))

    def record(self, i: int, j: int, delta: float = 1.0) -> None:
        self.s[i, j] += delta
        self.known[i, j] = True

    def dumps(self) -> str:
        lines = [str(self.n)]
        for i, j in zip(*np.nonzero(self.known)):
            v = self.s[i, j]
            lines.append(f"{i} {j} {int(v) if float(v).is_integer() else repr(float(v))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "InteractionLedger":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty ledger")
        ledger = cls.empty(int(lines[0]))
        for ln in lines[1:]:
            i, j, v = ln.split()
            ledger.record(int(i), int(j), float(v))
        return ledger


@dataclass(frozen=True)
class TrustMatrix:
    conventional: np.ndarray
    tropical: np.ndarray
    degenerate: np.ndarray  # rows with no positive balance

    @classmethod
    def from_conventional(cls, c) -> "TrustMatrix":
        """Wrap a plain local-trust matrix; zeros are read as 'no edge'."""
        c = np.asarray(c, dtype=float)
        return cls(c, mp.from_conventional(c), ~(c > 0).any(axis=1))


@dataclass(frozen=True)
class TrustVector:
    values: np.ndarray
    iterations: int = 0
    converged: bool = True
    dominant: bool = True

    @property
    def ranking(self) -> np.ndarray:
        """Agent ids by descending value; ties keep id order."""
        return np.argsort(-self.values, kind="stable")

    def to_csv(self) -> str:
        ranks = np.empty(len(self.values), dtype=int)
        ranks[self.ranking] = np.arange(1, len(self.values) + 1)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["agent_id", "value", "rank"])
        for i, v in enumerate(self.values):
            w.writerow([i, mp.format_scalar(v), ranks[i]])
        return buf.getvalue()


@dataclass(frozen=True)
class MaxTrustSolution:
    xi: tuple[float, ...]  # one growth rate per block
    lambdas: tuple[float, ...]
    v: np.ndarray  # per agent, original indexing
    T: int
    t: TrustVector
    normal_form: NormalForm
    block_pairs: dict = field(default_factory=dict)

    def agent_xi(self) -> np.ndarray:
        out = np.empty(len(self.v))
        for b, rate in enumerate(self.xi):
            out[list(self.normal_form.block_indices(b))] = rate
        return out


def normalize_local_trust(ledger: InteractionLedger) -> TrustMatrix:
    """c_ij = max(s_ij, 0) / Σ_k max(s_ik, 0) over known pairs.

    A row without any positive balance is uniform 1/n in the conventional
    grid and all-ε in the tropical grid: "no evidence" and "distrust" are
    kept apart rather than guessed.
    """
    pos = np.where(ledger.known, np.maximum(ledger.s, 0.0), 0.0)
    totals = pos.sum(axis=1)
    degenerate = totals <= 0
    n = ledger.n
    conv = np.empty((n, n))
    conv[~degenerate] = pos[~degenerate] / totals[~degenerate, None]
    conv[degenerate] = 1.0 / n
    trop = np.where(ledger.known, conv, EPS)
    trop[degenerate] = EPS
    conv.setflags(write=False)
    degenerate.setflags(write=False)
    return TrustMatrix(conv, mp.as_tropical(trop), degenerate)


def _conventional(c) -> np.ndarray:
    return c.conventional if isinstance(c, TrustMatrix) else np.asarray(c, dtype=float)


def _tropical(c) -> np.ndarray:
    return c.tropical if isinstance(c, TrustMatrix) else mp.as_tropical(c)


def eigentrust(
    c,
    r=None,
    epsilon: float = 1e-6,
    max_iters: int = 10000,
    check_dominance: bool = True,
) -> TrustVector:
    """Power iteration t ← C^T t, renormalized to unit 1-norm each step,
    until ‖t_{k+1} − t_k‖₁ < ``epsilon``.

    ``check_dominance`` additionally asks whether the fixed point is
    start-independent and records the answer in ``dominant``.
    Raises :class:`NonConvergenceError` after ``max_iters`` updates.
    """
    cm = _conventional(c)
    n = cm.shape[0]
    t = np.full(n, 1.0 / n) if r is None else np.asarray(r, dtype=float)
    t = t / t.sum()
    ct = np.ascontiguousarray(cm.T)
    for k in range(1, max_iters + 1):
        nxt = ct @ t
        nxt /= nxt.sum()
        delta = np.abs(nxt - t).sum()
        prev, t = t, nxt
        if delta < epsilon:
            dominant = True
            if check_dominance:
                dominant = dominant_eigenpair_conventional(cm, strict=False).dominant
            t.setflags(write=False)
            return TrustVector(t, iterations=k, converged=True, dominant=dominant)
    raise NonConvergenceError(
        f"eigentrust did not converge in {max_iters} iterations", (prev, t), max_iters
    )


def recurrence_oracle(d, w, k: int) -> np.ndarray:
    """k steps of t(k+1) = D ⊗ t(k) from t(0) = w."""
    d = np.asarray(d, dtype=float)
    t = mp.as_tropical(w, ndim=1)
    if d.shape != (len(t), len(t)):
        raise mp.ShapeError(f"matrix {d.shape} does not match vector of length {len(t)}")
    for _ in range(k):
        t = mp.mat_mul(d, t)
    return t


def growth_rates(nf: NormalForm, block_lambdas: Sequence[float]) -> list[float]:
    """ξ_i = λ_i ⊕ ⊕_{j ∈ H} ξ_j, back to front, H = {j > i : D_ij ≠ ℰ}."""
    q = len(nf.blocks)
    if len(block_lambdas) != q:
        raise ValueError("need one eigenvalue per block")
    if block_lambdas[-1] == EPS:
        raise UnreachableBlockError("the final block must have a finite eigenvalue")
    xi = [EPS] * q
    for i in range(q - 1, -1, -1):
        rate = block_lambdas[i]
        for j in nf.coupled(i):
            rate = max(rate, xi[j])
        if rate == EPS:
            raise UnreachableBlockError(f"block {i} has no cycle and no coupling to later blocks")
        xi[i] = rate
    return xi


def _block_eigenpair(block: np.ndarray, w_block: np.ndarray) -> EigenPair | None:
    if not is_irreducible(block, MAXPLUS):
        return None
    # max_power iterates its argument transposed; pass D_jj^T to iterate D_jj
    return max_power(block.T, w_block)


def _trajectory_vector(d: np.ndarray, w: np.ndarray, rates: np.ndarray, T: int, tol: float, max_steps: int):
    """v with t(T) = v ⊗ ξ^T matching the exact iterate of t(k+1) = D ⊗ t(k).

    Tracks y(k) = t(k) − ξ k until it is certifiably periodic, then reads v
    off at the phase of T.
    """
    # edges whose target grows strictly slower than the source row
    falling = (d > EPS) & (rates[None, :] < rates[:, None] - tol)
    # smallest rate deficit per row; rows without falling edges never use it
    gap = np.where(falling, rates[:, None] - rates[None, :], np.inf).min(axis=1)
    gap[~np.isfinite(gap)] = 0.0
    if T == 0:
        return w.copy()
    ys = [w.copy()]
    seen = {pattern_key(w): 0}
    x = w.copy()
    for k in range(1, max_steps + 1):
        x = np.asarray(mp.mat_mul(d, x))
        y = x - rates * k
        ys.append(y)
        if k == T:
            return y
        key = pattern_key(y)
        k0 = seen.get(key)
        seen[key] = k
        if k0 is None or not np.allclose(y, ys[k0], rtol=0, atol=tol):
            continue
        window = np.array(ys[k0:k])
        hi, lo = window.max(axis=0), window.min(axis=0)
        # from k0 on, no term along a falling edge can reach the realized values
        bound = np.where(falling, d - rates[:, None] + hi[None, :], EPS).max(axis=1)
        reach = np.where(np.isfinite(bound), bound - gap * k0, EPS)
        if np.all(reach < lo - tol):
            return ys[k0 + (T - k0) % (k - k0)]
    raise NonTerminationError(f"trajectory not periodic within {max_steps} steps", ys)


def maxtrust(
    c,
    w=None,
    T: int = 100,
    vector_rule: str = "trajectory",
    tol: float = 1e-9,
    max_steps: int | None = None,
) -> MaxTrustSolution:
    """Trust at terminal time ``T`` in max-plus, t_i(T) = v_i ⊗ ξ_i^⊗T.

    The transposed tropical trust matrix D = C^T is brought to normal form;
    each irreducible diagonal block gets its eigenvalue from the max-plus
    power method and the per-block growth rates ξ follow by back
    substitution. ``vector_rule`` picks how v is assembled:

    ``trajectory``
        v is read off the periodic regime of y(k) = t(k) − ξk, so t(T)
        equals the exact T-step iterate.
    ``closed_form`` / ``closed_form_no_exponent``
        the closed-form block rules v_j = ⊕_k D_jk ⊗ w_k ⊗ λ_j^(j−1),
        shifted by ξ_j^-1 when a later block dominates; the second variant
        drops the λ_j^(j−1) factor.
    """
    if vector_rule not in VECTOR_RULES:
        raise ValueError(f"vector_rule must be one of {VECTOR_RULES}")
    if T < 0:
        raise ValueError("T must be non-negative")
    d = np.ascontiguousarray(_tropical(c).T)
    n = d.shape[0]
    dead = np.flatnonzero(~(d > EPS).any(axis=1))
    if dead.size:
        raise DomainError(
            f"trust matrix is not regular: agents {dead.tolist()} receive no finite trust "
            "(all-eps rows of C^T)"
        )
    w = np.zeros(n) if w is None else np.asarray(w, dtype=float)
    if w.shape != (n,) or not np.all(np.isfinite(w)):
        raise DomainError("initial trust vector must be finite")
    nf = normal_form(d)
    perm = list(nf.permutation)
    wp = w[perm]
    q = len(nf.blocks)

    lambdas: list[float] = []
    pairs: dict[int, EigenPair] = {}
    for b in range(q):
        a, z = nf.blocks[b]
        try:
            pair = _block_eigenpair(nf.block(b), wp[a:z])
        except NonTerminationError as exc:
            raise NonTerminationError(f"power method failed on block {b}: {exc}", exc.trajectory) from exc
        if pair is None:
            lambdas.append(EPS)
        else:
            pairs[b] = pair
            lambdas.append(pair.value)
    xi = growth_rates(nf, lambdas)
    rates = np.empty(n)
    for b, (a, z) in enumerate(nf.blocks):
        rates[a:z] = xi[b]

    if vector_rule == "trajectory":
        steps = max_steps if max_steps is not None else max(T, default_iteration_cap(n))
        vp = _trajectory_vector(nf.matrix, wp, rates, T, tol, steps)
    else:
        vp = _closed_form_vectors(nf, wp, lambdas, xi, pairs, vector_rule == "closed_form")

    v = np.empty(n)
    v[perm] = vp
    t = np.where(np.isfinite(v), v + rates_unpermute(rates, perm) * T, EPS)
    v.setflags(write=False)
    t.setflags(write=False)
    return MaxTrustSolution(
        xi=tuple(xi),
        lambdas=tuple(lambdas),
        v=v,
        T=T,
        t=TrustVector(t),
        normal_form=nf,
        block_pairs=pairs,
    )


def rates_unpermute(rates: np.ndarray, perm: list[int]) -> np.ndarray:
    out = np.empty_like(rates)
    out[perm] = rates
    return out


def _closed_form_vectors(nf, wp, lambdas, xi, pairs, with_exponent: bool) -> np.ndarray:
    q = len(nf.blocks)
    n = len(wp)
    vp = np.full(n, EPS)
    a, z = nf.blocks[-1]
    vp[a:z] = pairs[q - 1].vector
    for j in range(q - 2, -1, -1):
        a, z = nf.blocks[j]
        acc = np.asarray(mp.mat_mul(nf.matrix[a:z, :], wp))
        # 0-based j is the 1-based exponent j−1
        if with_exponent:
            acc = np.asarray(mp.scale(j * lambdas[j] if lambdas[j] != EPS else (0.0 if j == 0 else EPS), acc))
        if not lambdas[j] > max([xi[h] for h in nf.coupled(j)], default=EPS):
            acc = np.asarray(mp.scale(-xi[j], acc))
        vp[a:z] = acc
    return vp
