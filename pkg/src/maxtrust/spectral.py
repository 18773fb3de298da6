"""Graph structure and spectra of trust matrices.

Covers irreducibility, the block upper-triangular normal form obtained by
condensing strongly connected components, the max-plus power method and
trace formula, and a conventional power-iteration eigen solver used as the
reference in experiments.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from maxtrust import maxplus as mp
from maxtrust.maxplus import EPS, ShapeError

MAXPLUS = "maxplus"
CONVENTIONAL = "conventional"


class DomainError(ValueError):
    """Input violates a structural precondition (e.g. reducibility)."""


class NonTerminationError(RuntimeError):
    """An iteration hit its cap. ``trajectory`` holds the iterates seen."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DominanceError(RuntimeError):
    """Power iteration found no dominant eigenvalue. ``report`` says why."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class PrecedenceGraph:
    n: int
    edges: frozenset  # of (i, j)

    def successors(self, i: int) -> list[int]:
        return sorted(j for (a, j) in self.edges if a == i)


@dataclass(frozen=True)
class NormalForm:
    """Simultaneous row/column permutation into block upper-triangular form.

    ``permutation[k]`` is the source index placed at position ``k``;
    ``blocks`` are half-open ``(start, stop)`` ranges over positions.
    """

    permutation: tuple[int, ...]
    blocks: tuple[tuple[int, int], ...]
    matrix: np.ndarray

    def block(self, i: int, j: int | None = None) -> np.ndarray:
        j = i if j is None else j
        (a, b), (c, d) = self.blocks[i], self.blocks[j]
        return self.matrix[a:b, c:d]

    def block_indices(self, i: int) -> tuple[int, ...]:
        a, b = self.blocks[i]
        return self.permutation[a:b]

    def coupled(self, i: int) -> list[int]:
        """Later blocks j with D_ij ≠ ℰ."""
        return [
            j
            for j in range(i + 1, len(self.blocks))
            if np.any(self.block(i, j) > EPS)
        ]

    def restore(self) -> np.ndarray:
        """Undo the permutation, giving back the source matrix."""
        n = len(self.permutation)
        inv = np.empty(n, dtype=int)
        inv[list(self.permutation)] = np.arange(n)
        return self.matrix[np.ix_(inv, inv)]

    def dumps(self) -> str:
        lines = ["permutation " + " ".join(map(str, self.permutation))]
        lines.append("blocks " + " ".join(f"{a}:{b}" for a, b in self.blocks))
        return "\n".join(lines) + "\n" + mp.dumps(self.matrix)

    @classmethod
    def loads(cls, text: str) -> "NormalForm":
        perm_line, block_line, rest = text.split("\n", 2)
        perm = tuple(int(x) for x in perm_line.split()[1:])
        blocks = tuple(
            tuple(int(x) for x in tok.split(":")) for tok in block_line.split()[1:]
        )
        return cls(perm, blocks, mp.loads(rest))


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    iterations: int = 0
    transient: int | None = None
    period: int | None = None
    dominant: bool = True
    report: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Classification:
    positive: bool
    nonnegative: bool
    stochastic: bool
    irreducible: bool


def _zero_of(algebra: str) -> float:
    if algebra == MAXPLUS:
        return EPS
    if algebra == CONVENTIONAL:
        return 0.0
    raise ValueError(f"unknown algebra {algebra!r}")


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    return a


def _infer_algebra(a: np.ndarray) -> str:
    return MAXPLUS if np.isneginf(a).any() else CONVENTIONAL


def precedence_graph(a, zero_is: str = MAXPLUS) -> PrecedenceGraph:
    a = _square(a)
    zero = _zero_of(zero_is)
    ii, jj = np.nonzero(a != zero)
    return PrecedenceGraph(a.shape[0], frozenset(zip(ii.tolist(), jj.tolist())))


def _adjacency(a: np.ndarray, zero: float) -> list[list[int]]:
    mask = a != zero
    return [np.flatnonzero(row).tolist() for row in mask]


def strongly_connected_components(adj: list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out in reverse
    topological order (sinks first); members are sorted."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def is_irreducible(a, zero_is: str | None = None) -> bool:
    """True iff the precedence graph is strongly connected.

    A 1×1 matrix counts as irreducible only when its entry is not the zero
    of the algebra. ``zero_is`` defaults to max-plus if any entry is -inf.
    """
    a = _square(a)
    if a.shape[0] == 0:
        return False
    zero = _zero_of(zero_is or _infer_algebra(a))
    if a.shape[0] == 1:
        return bool(a[0, 0] != zero)
    return len(strongly_connected_components(_adjacency(a, zero))) == 1


def is_irreducible_bruteforce(a, zero_is: str | None = None) -> bool:
    """Direct check of the definition: no permutation puts a zero block
    in the lower-left corner. Exponential; for tests on small n."""
    a = _square(a)
    n = a.shape[0]
    zero = _zero_of(zero_is or _infer_algebra(a))
    if n == 1:
        return bool(a[0, 0] != zero)
    nz = a != zero
    for perm in permutations(range(n)):
        p = nz[np.ix_(perm, perm)]
        for k in range(1, n):
            if not p[k:, :k].any():
                return False
    return True


def normal_form(a, zero_is: str = MAXPLUS) -> NormalForm:
    """Block upper-triangular normal form via SCC condensation.

    Blocks follow a topological order of the condensation (an edge i→j
    for every non-zero a_ij), so every coupling sits above the diagonal.
    Ties go to the component holding the smallest source index and members
    keep their original relative order, which makes the result unique.
    """
    a = _square(a)
    zero = _zero_of(zero_is)
    n = a.shape[0]
    adj = _adjacency(a, zero)
    comps = strongly_connected_components(adj)
    comp_of = [0] * n
    for c, members in enumerate(comps):
        for v in members:
            comp_of[v] = c
    succ: list[set[int]] = [set() for _ in comps]
    indeg = [0] * len(comps)
    for v in range(n):
        for w in adj[v]:
            cv, cw = comp_of[v], comp_of[w]
            if cv != cw and cw not in succ[cv]:
                succ[cv].add(cw)
                indeg[cw] += 1
    heap = [(comps[c][0], c) for c in range(len(comps)) if indeg[c] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        for d in succ[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(heap, (comps[d][0], d))
    perm: list[int] = []
    blocks = []
    for c in order:
        blocks.append((len(perm), len(perm) + len(comps[c])))
        perm.extend(comps[c])
    permuted = a[np.ix_(perm, perm)]
    permuted.setflags(write=False)
    return NormalForm(tuple(perm), tuple(blocks), permuted)


def pattern_key(x: np.ndarray, quantum: float = 1e-7) -> bytes:
    """Hashable fingerprint of ``x`` on a ``quantum`` grid, ε kept apart."""
    fin = np.isfinite(x)
    q = np.where(fin, np.round(np.where(fin, x, 0.0) / quantum), np.iinfo(np.int64).min)
    return q.astype(np.int64).tobytes()


def _shift_of(x: np.ndarray, y: np.ndarray, tol: float) -> float | None:
    """c with x = c ⊗ y (ε patterns equal, finite part a constant shift)."""
    fx, fy = np.isfinite(x), np.isfinite(y)
    if not np.array_equal(fx, fy) or not fx.any():
        return None
    d = x[fx] - y[fy]
    c = float(d[0])
    if np.all(np.abs(d - c) <= tol):
        return c
    return None


def landau(n: int) -> int:
    """Landau's g(n), the largest lcm of a partition of n.

    Bounds the cyclicity of an n×n max-plus matrix. Knapsack over prime
    powers: each prime contributes at most one power to the lcm.
    """
    best = [1] * (n + 1)
    for p in range(2, n + 1):
        if any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
            continue
        for m in range(n, p - 1, -1):
            pk = p
            while pk <= m:
                best[m] = max(best[m], best[m - pk] * pk)
                pk *= p
    return best[n]


def default_iteration_cap(n: int) -> int:
    # transients grow like 1/(λ - second cycle mean), so n**3 + 100 alone is
    # too tight for near-tied cycles
    return max(n**3 + 100, 200_000)


def max_power(c, r, tol: float = 1e-9, max_iter: int | None = None) -> EigenPair:
    """Max-plus power method on C^T.

    Iterates v_{p+1} = C^T ⊗ v_p from the finite start ``r`` until some
    earlier iterate satisfies v_p = c ⊗ v_q. Then λ = c/(p−q) and the
    returned vector ⊕_i λ^(p−q−i) ⊗ v_{q+i−1} solves C^T ⊗ v = λ ⊗ v.
    """
    c = _square(c)
    n = c.shape[0]
    if not is_irreducible(c, MAXPLUS):
        raise DomainError("max_power requires an irreducible matrix")
    r = np.asarray(r, dtype=float)
    if r.shape != (n,) or not np.all(np.isfinite(r)):
        raise DomainError("max_power requires a finite start vector of matching length")
    if max_iter is None:
        max_iter = default_iteration_cap(n)
    d = c.T
    longest = landau(n)
    traj = [r]
    # iterates are compared after shifting their max to 0, so v_p = c ⊗ v_q
    # becomes a hash hit; candidates are then confirmed at ``tol``
    seen: dict[bytes, list[int]] = {pattern_key(r - r.max()): [0]}
    for p in range(1, max_iter + 1):
        vp = np.asarray(mp.mat_mul(d, traj[-1]))
        traj.append(vp)
        key = pattern_key(vp - vp.max())
        for q in seen.get(key, ()):
            if p - q > longest:
                continue
            shift = _shift_of(vp, traj[q], tol)
            if shift is None:
                continue
            period = p - q
            lam = shift / period
            v = np.full(n, EPS)
            for i in range(1, period + 1):
                v = np.maximum(v, (period - i) * lam + traj[q + i - 1])
            v.setflags(write=False)
            return EigenPair(lam, v, iterations=p, transient=q, period=period)
        seen.setdefault(key, []).append(p)
    raise NonTerminationError(
        f"no periodic regime within {max_iter} iterations", trajectory=traj
    )


def eigenvalue_by_traces(a) -> float:
    """λ = max over i = 1..n of tr(A^⊗i)/i for an irreducible A."""
    a = _square(a)
    if not is_irreducible(a, MAXPLUS):
        raise DomainError("the trace formula needs an irreducible matrix")
    best = EPS
    power = mp.identity(a.shape[0])
    for i in range(1, a.shape[0] + 1):
        power = mp.mat_mul(power, a)
        tr = mp.trace(power)
        if tr != EPS:
            best = max(best, tr / i)
    return best


def max_cycle_mean_bruteforce(a) -> float:
    """Maximum mean weight over elementary cycles, by exhaustive search.

    Independent of the power method and of matrix powers; exponential in n.
    """
    a = _square(a)
    n = a.shape[0]
    best = EPS
    # every elementary cycle is enumerated once, rooted at its smallest node
    for root in range(n):
        stack = [(root, [root], 0.0)]
        while stack:
            v, path, weight = stack.pop()
            for w in range(root, n):
                if a[v, w] == EPS:
                    continue
                if w == root:
                    best = max(best, (weight + a[v, w]) / len(path))
                elif w not in path:
                    stack.append((w, path + [w], weight + a[v, w]))
    return best


def classify_matrix(a, tol: float = 1e-9) -> Classification:
    a = _square(a)
    nonneg = bool(np.all(a >= 0))
    return Classification(
        positive=bool(np.all(a > 0)),
        nonnegative=nonneg,
        stochastic=nonneg and bool(np.all(np.abs(a.sum(axis=1) - 1.0) <= tol)),
        irreducible=is_irreducible(a, CONVENTIONAL),
    )


def _power_iterate(at: np.ndarray, x: np.ndarray, tol: float, max_iter: int, window: int):
    """Normalized power iteration on ``at``. Returns (x, λ, iterations, status)."""
    stalled = 0
    prev_delta = np.inf
    lam = 0.0
    for k in range(1, max_iter + 1):
        y = at @ x
        lam = float(x @ y / (x @ x))
        norm = np.abs(y).sum()
        if norm == 0.0:
            return y, 0.0, k, "nilpotent"
        y = y / norm
        delta = float(np.abs(y - x).sum())
        x = y
        if delta < tol:
            return x, lam, k, "converged"
        stalled = stalled + 1 if delta >= prev_delta * (1 - 1e-12) else 0
        prev_delta = delta
        if stalled >= window:
            return x, lam, k, "oscillating"
    return x, lam, max_iter, "max_iter"


def _newton_refine(a: np.ndarray, lam: float, steps: int = 20) -> float:
    # Newton on det(A - λI): λ ← λ + 1/tr((A - λI)^-1)
    n = a.shape[0]
    for _ in range(steps):
        try:
            tr = np.trace(np.linalg.inv(a - lam * np.eye(n)))
        except np.linalg.LinAlgError:
            break
        if not np.isfinite(tr) or tr == 0:
            break
        step = 1.0 / tr
        lam += step
        if abs(step) < 1e-15 * max(1.0, abs(lam)):
            break
    return lam


def dominant_eigenpair_conventional(
    a,
    tol: float = 1e-12,
    max_iter: int = 10000,
    window: int = 50,
    newton: bool = False,
    strict: bool = True,
    seed: int = 0,
) -> EigenPair:
    """Dominant eigenvalue and eigenvector of A^T by power iteration.

    Two starts are run: the uniform vector and a seeded random positive
    vector. Dominance is declared failed if either run stalls (the update
    norm stops shrinking for ``window`` iterations) or the two runs settle on
    different vectors. With ``strict`` the failure raises
    :class:`DominanceError`; otherwise a null vector of A^T − ρI is returned
    flagged ``dominant=False``.
    """
    a = _square(a)
    if np.any(a < 0):
        raise DomainError("expected a non-negative matrix")
    n = a.shape[0]
    at = a.T
    starts = [np.full(n, 1.0 / n), np.random.default_rng(seed).uniform(0.5, 1.5, n)]
    runs = [_power_iterate(at, s / s.sum(), tol, max_iter, window) for s in starts]
    (x, lam, its, status), (x2, _, _, status2) = runs
    report = {"status": (status, status2)}
    ok = status == status2 == "converged"
    if ok:
        gap = float(np.abs(x - x2).sum())
        report["start_gap"] = gap
        ok = gap <= max(1e-6, 1e3 * tol)
    if newton and ok:
        lam = _newton_refine(at, lam)
    x = np.abs(x)
    if x.sum() > 0:
        x = x / x.sum()
        x.setflags(write=False)
    if not ok:
        report["reason"] = "no dominant eigenvalue"
        if strict:
            raise DominanceError("no dominant eigenvalue: power iteration is start dependent or does not settle", report)
        lam, x = _null_vector_fallback(at)
    return EigenPair(lam, x, iterations=its, dominant=ok, report=report)


def _null_vector_fallback(at: np.ndarray) -> tuple[float, np.ndarray]:
    # spectral radius, then a vector spanning ker(A^T − ρI) via SVD; for a
    # periodic irreducible chain this is the Perron vector the iteration
    # oscillates around
    rho = float(np.max(np.abs(np.linalg.eigvals(at))))
    _, _, vt = np.linalg.svd(at - rho * np.eye(at.shape[0]))
    x = np.abs(vt[-1])
    x = x / x.sum()
    x.setflags(write=False)
    return rho, x


def stationary_distribution(a) -> np.ndarray:
    """Solve πA = π, Σπ = 1 by least squares. Linear-solve oracle."""
    a = _square(a)
    n = a.shape[0]
    m = np.vstack([a.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    return pi
