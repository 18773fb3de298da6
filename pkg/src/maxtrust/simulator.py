"""Router-network simulation comparing Eigentrust and MaxTrust.

A world is a set of routers on a tree, torus or random topology. Routers
repeatedly interact with their most trusted neighbour, nudging their direct
trust up (honest neighbour) or down (malicious neighbour), and broadcast
trust vectors from which a global trust matrix is built every time step.
Each algorithm's global trust vector is scored by its distance to the
dominant eigenvector of the trust matrix reached at the end of the run.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from maxtrust.maxplus import EPS
from maxtrust.spectral import dominant_eigenpair_conventional
from maxtrust.trust import (
    InteractionLedger,
    NonConvergenceError,
    TrustMatrix,
    eigentrust,
    maxtrust,
    normalize_local_trust,
)

log = logging.getLogger(__name__)

TOPOLOGIES = ("tree", "torus", "random")
SCENARIOS = (1, 2, 3)
ALGORITHMS = ("ET", "MT")


class TopologyError(ValueError):
    """Infeasible topology request; ``repaired`` is the nearest valid size."""

    def __init__(self, message: str, repaired: int):
        super().__init__(f"{message} (nearest feasible size: {repaired})")
        self.repaired = repaired


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "tree"
    size: int = 4
    torus_cols: int = 2  # the torus grows by whole rows of this width
    random_links: int = 4  # undirected edges of the initial random graph
    attach: int = 2  # links per router added to a random network


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int = 1
    topology: str = "tree"
    timesteps: int = 100
    interactions: int = 10
    trust_delta: float = 0.0001
    miscategorisation: float = 0.0025
    growth_every: int = 5
    growth_min: int = 2
    growth_max: int = 6
    malicious_fraction: float = 0.5  # scenario 2, per growth batch (floored)
    malicious_probability: float = 1 / 3  # scenario 3, per new router
    initial_malicious_fraction: float = 0.5  # scenario 2 only
    zero_mode_probability: float = 0.5
    decay: float = 0.99
    initial_size: int = 4
    torus_cols: int = 2
    maxtrust_T: int = 100
    eigentrust_epsilon: float = 1e-6
    eigentrust_max_iters: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if not 1 <= self.growth_min <= self.growth_max:
            raise ValueError("need 1 <= growth_min <= growth_max")

    @property
    def topology_spec(self) -> TopologySpec:
        return TopologySpec(self.topology, self.initial_size, self.torus_cols)


@dataclass
class World:
    kind: str
    adj: list[set[int]]
    malicious: np.ndarray
    zero_mode: np.ndarray
    contacts: np.ndarray
    trust: np.ndarray
    known: np.ndarray
    torus_cols: int = 2
    timestep: int = 0

    @property
    def n(self) -> int:
        return len(self.adj)

    def links(self) -> int:
        """Directed adjacency count."""
        return sum(len(a) for a in self.adj)

    def broadcast(self, decay: float) -> InteractionLedger:
        """What every router announces: honest routers their true trust,
        malicious ones 0 or a value decaying from 0.5."""
        s = self.trust.copy()
        bad = np.flatnonzero(self.malicious)
        for i in bad:
            s[i] = 0.0 if self.zero_mode[i] else 0.5 * decay ** self.contacts[i]
        return InteractionLedger(np.where(self.known, s, 0.0), self.known.copy())

    def trust_matrix(self, decay: float) -> TrustMatrix:
        return normalize_local_trust(self.broadcast(decay))


# -- topology ---------------------------------------------------------------

def _torus_neighbours(k: int, n: int, cols: int) -> set[int]:
    rows = n // cols
    r, c = divmod(k, cols)
    cand = {
        ((r + 1) % rows) * cols + c,
        ((r - 1) % rows) * cols + c,
        r * cols + (c + 1) % cols,
        r * cols + (c - 1) % cols,
    }
    cand.discard(k)
    return cand


def torus_adjacency(n: int, cols: int) -> list[set[int]]:
    if n % cols or n < cols:
        repaired = max(cols, cols * round(n / cols))
        raise TopologyError(f"{n} routers do not fill a torus with {cols} columns", repaired)
    return [_torus_neighbours(k, n, cols) for k in range(n)]


def _link(adj: list[set[int]], i: int, j: int) -> None:
    adj[i].add(j)
    adj[j].add(i)


def build_topology(spec: TopologySpec, seed=None) -> list[set[int]]:
    """Undirected simple graph as adjacency sets, deterministic in ``seed``."""
    n = spec.size
    if n < 1:
        raise TopologyError("need at least one router", 1)
    if spec.kind == "tree":
        adj: list[set[int]] = [set() for _ in range(n)]
        for k in range(1, n):
            _link(adj, k, (k - 1) // 2)
        return adj
    if spec.kind == "torus":
        return torus_adjacency(n, spec.torus_cols)
    if spec.kind == "random":
        rng = np.random.default_rng(seed)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        if spec.random_links > len(pairs):
            raise TopologyError(f"{spec.random_links} links exceed a simple graph on {n} nodes", n)
        adj = [set() for _ in range(n)]
        for idx in rng.choice(len(pairs), size=spec.random_links, replace=False):
            _link(adj, *pairs[idx])
        return adj
    raise ValueError(f"unknown topology {spec.kind!r}")


def attach_routers(kind: str, adj: list[set[int]], count: int, rng, torus_cols: int = 2, attach: int = 2) -> list[set[int]]:
    """Add ``count`` routers keeping the topology's defining property."""
    n = len(adj)
    adj = [set(a) for a in adj] + [set() for _ in range(count)]
    if kind == "tree":
        for k in range(n, n + count):
            _link(adj, k, (k - 1) // 2)
    elif kind == "torus":
        new = torus_adjacency(n + count, torus_cols)
        # existing routers keep their ids; only the wraparound seam is rewired
        adj = new
    elif kind == "random":
        for k in range(n, n + count):
            m = min(attach, k)
            for j in rng.choice(k, size=m, replace=False):
                _link(adj, k, int(j))
    else:
        raise ValueError(f"unknown topology {kind!r}")
    return adj


def validate_topology(kind: str, adj: list[set[int]], torus_cols: int = 2) -> None:
    """Raise AssertionError if ``adj`` is not a valid graph of ``kind``."""
    n = len(adj)
    for i, a in enumerate(adj):
        assert i not in a, f"self-loop at {i}"
        for j in a:
            assert i in adj[j], f"asymmetric link {i}-{j}"
    edges = sum(len(a) for a in adj) // 2
    if kind == "tree":
        assert edges == n - 1, "tree must have n-1 edges"
        seen, stack = {0}, [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        assert len(seen) == n, "tree must be connected"
        for k in range(n):
            children = [j for j in adj[k] if j > k]
            assert len(children) <= 2, f"router {k} has more than 2 children"
    elif kind == "torus":
        assert adj == torus_adjacency(n, torus_cols), "not a torus layout"
        assert len({len(a) for a in adj}) == 1, "torus must be degree-regular"


# -- world dynamics -----------------------------------------------------------

def _empty_world(kind: str, adj, torus_cols: int) -> World:
    n = len(adj)
    return World(
        kind=kind,
        adj=adj,
        malicious=np.zeros(n, dtype=bool),
        zero_mode=np.zeros(n, dtype=bool),
        contacts=np.zeros(n, dtype=int),
        trust=np.zeros((n, n)),
        known=np.zeros((n, n), dtype=bool),
        torus_cols=torus_cols,
    )


def _impute(world: World, routers, rng) -> None:
    # routers start with a random level of trust in each current neighbour
    for i in routers:
        for j in sorted(world.adj[i]):
            if not world.known[i, j]:
                world.known[i, j] = True
                world.trust[i, j] = rng.uniform()


def init_world(config: ScenarioConfig, rng) -> World:
    adj = build_topology(
        replace(config.topology_spec, size=config.initial_size),
        seed=int(rng.integers(2**32)),
    )
    world = _empty_world(config.topology, adj, config.torus_cols)
    n = world.n
    if config.scenario == 2:
        k = int(np.floor(n * config.initial_malicious_fraction))
        world.malicious[rng.permutation(n)[:k]] = True
    world.zero_mode[:] = rng.random(n) < config.zero_mode_probability
    world.zero_mode &= world.malicious
    _impute(world, range(n), rng)
    return world


def most_trusted_neighbour(world: World, i: int) -> int | None:
    best, best_val = None, EPS
    for j in sorted(world.adj[i]):
        val = world.trust[i, j] if world.known[i, j] else EPS
        if best is None or val > best_val:
            best, best_val = j, val
    return best


def interact(world: World, i: int, j: int, config: ScenarioConfig, rng) -> None:
    """Router ``i`` deals with ``j`` and adjusts its direct trust in it."""
    up = not world.malicious[j]
    if up and rng.random() < config.miscategorisation:
        up = False
    delta = config.trust_delta if up else -config.trust_delta
    world.trust[i, j] = min(1.0, max(0.0, world.trust[i, j] + delta))
    world.known[i, j] = True
    if not world.known[j, i]:
        # first contact: j learns of i and imputes a random level of trust
        world.known[j, i] = True
        world.trust[j, i] = rng.uniform()
    world.contacts[i] += 1
    world.contacts[j] += 1


def step(world: World, config: ScenarioConfig, rng) -> World:
    """One time step of interaction rounds (in place; returns ``world``)."""
    for _ in range(config.interactions):
        for i in range(world.n):
            j = most_trusted_neighbour(world, i)
            if j is not None:
                interact(world, i, j, config, rng)
    world.timestep += 1
    return world


def batch_size(config: ScenarioConfig, rng) -> int:
    k = int(rng.integers(config.growth_min, config.growth_max + 1))
    if config.topology == "torus":
        # whole rows only
        k = -(-k // config.torus_cols) * config.torus_cols
    return k


def grow(world: World, config: ScenarioConfig, rng) -> World:
    """Add a batch of routers; maliciousness follows the scenario."""
    if config.scenario == 1:
        raise RuntimeError("scenario 1 keeps the network fixed")
    k = batch_size(config, rng)
    n = world.n
    if config.scenario == 2:
        bad = np.zeros(k, dtype=bool)
        bad[rng.permutation(k)[: int(np.floor(k * config.malicious_fraction))]] = True
    else:
        bad = rng.random(k) < config.malicious_probability
    zero = (rng.random(k) < config.zero_mode_probability) & bad
    adj = attach_routers(world.kind, world.adj, k, rng, world.torus_cols)
    m = n + k
    trust = np.zeros((m, m))
    known = np.zeros((m, m), dtype=bool)
    trust[:n, :n] = world.trust
    known[:n, :n] = world.known
    world.adj = adj
    world.trust = trust
    world.known = known
    world.malicious = np.concatenate([world.malicious, bad])
    world.zero_mode = np.concatenate([world.zero_mode, zero])
    world.contacts = np.concatenate([world.contacts, np.zeros(k, dtype=int)])
    # newcomers know their neighbours; incumbents learn of them on contact
    _impute(world, range(n, m), rng)
    return world


# -- scoring -------------------------------------------------------------------

def tropical_to_probability(t) -> np.ndarray:
    """exp(t − max t) normalized to unit 1-norm; ε maps to 0."""
    t = np.asarray(t, dtype=float)
    fin = np.isfinite(t)
    if not fin.any():
        raise ValueError("tropical vector has no finite entry")
    p = np.zeros_like(t)
    p[fin] = np.exp(t[fin] - t[fin].max())
    return p / p.sum()


def convergence_distance(v, reference) -> float:
    """Euclidean distance, zero-padding ``v`` up to the reference length."""
    v = np.asarray(v, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if len(v) > len(reference):
        raise ValueError(f"vector of length {len(v)} is longer than the reference ({len(reference)})")
    padded = np.zeros(len(reference))
    padded[: len(v)] = v
    return float(np.linalg.norm(padded - reference))


def eigentrust_vector(tm: TrustMatrix, config: ScenarioConfig) -> np.ndarray:
    try:
        return eigentrust(
            tm,
            epsilon=config.eigentrust_epsilon,
            max_iters=config.eigentrust_max_iters,
            check_dominance=False,
        ).values
    except NonConvergenceError as exc:
        # periodic chains never settle; the last iterate is what a router holds
        return exc.iterates[-1]


def reachable_agents(tropical: np.ndarray) -> np.ndarray:
    """Agents that end up with finite trust: repeatedly drop anyone whom no
    remaining agent trusts with a finite value."""
    alive = np.ones(len(tropical), dtype=bool)
    while True:
        sub = tropical[np.ix_(alive, alive)]
        keep = (sub > EPS).any(axis=0)
        if keep.all():
            return alive
        alive[np.flatnonzero(alive)[~keep]] = False


def maxtrust_vector(tm: TrustMatrix, config: ScenarioConfig) -> np.ndarray:
    """MaxTrust on the agents that receive any finite trust; the rest stay ε."""
    alive = reachable_agents(tm.tropical)
    t = np.full(len(alive), EPS)
    if alive.any():
        idx = np.flatnonzero(alive)
        sol = maxtrust(tm.tropical[np.ix_(idx, idx)], T=config.maxtrust_T)
        t[idx] = sol.t.values
    return t


# -- experiments ---------------------------------------------------------------

@dataclass
class RunRecord:
    config: ScenarioConfig
    run_id: int
    distances: dict[str, list[float]] = field(default_factory=dict)
    final_matrix: np.ndarray | None = None
    reference: np.ndarray | None = None
    sizes: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    error: str | None = None

    def rows(self):
        for alg in ALGORITHMS:
            for k, d in enumerate(self.distances.get(alg, []), start=1):
                yield self.run_id, k, alg, d


def run_rng(config: ScenarioConfig, run_id: int) -> np.random.Generator:
    """Independent stream per (seed, scenario, topology, run)."""
    ss = np.random.SeedSequence([config.seed, config.scenario, TOPOLOGIES.index(config.topology), run_id])
    return np.random.default_rng(ss)


def run_experiment(config: ScenarioConfig, run_id: int = 0) -> RunRecord:
    """Simulate one run and score both algorithms at every time step."""
    rng = run_rng(config, run_id)
    record = RunRecord(config, run_id)
    start = time.perf_counter()
    try:
        world = init_world(config, rng)
        vectors: dict[str, list[np.ndarray]] = {a: [] for a in ALGORITHMS}
        for k in range(1, config.timesteps + 1):
            if config.scenario != 1 and k % config.growth_every == 0:
                grow(world, config, rng)
            step(world, config, rng)
            tm = world.trust_matrix(config.decay)
            vectors["ET"].append(eigentrust_vector(tm, config))
            vectors["MT"].append(tropical_to_probability(maxtrust_vector(tm, config)))
            record.sizes.append(world.n)
        final = world.trust_matrix(config.decay).conventional
        ref = dominant_eigenpair_conventional(final, strict=False).vector
        record.final_matrix = final
        record.reference = ref
        for alg, vs in vectors.items():
            record.distances[alg] = [convergence_distance(v, ref) for v in vs]
    except Exception as exc:  # recorded with the seed for replay
        log.exception("run %d of %s failed", run_id, config)
        record.error = f"{type(exc).__name__}: {exc}"
    record.wall_time = time.perf_counter() - start
    return record


@dataclass(frozen=True)
class SummaryRow:
    scenario: int
    topology: str
    algorithm: str
    mean: float
    std: float
    lo95: float
    hi95: float
    runs: int
    failed: int


def aggregate(records: list[RunRecord]) -> list[SummaryRow]:
    """Mean, standard deviation and 2.5/97.5 percentiles of the pooled
    per-timestep distances, one row per condition and algorithm."""
    groups: dict[tuple[int, str], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.config.scenario, rec.config.topology), []).append(rec)
    rows = []
    for (scenario, topology), recs in groups.items():
        ok = [r for r in recs if r.error is None]
        for alg in ALGORITHMS:
            pooled = np.array([d for r in ok for d in r.distances.get(alg, [])])
            if pooled.size:
                stats = (pooled.mean(), pooled.std(), *np.percentile(pooled, [2.5, 97.5]))
            else:
                stats = (np.nan,) * 4
            rows.append(SummaryRow(scenario, topology, alg, *map(float, stats), len(recs), len(recs) - len(ok)))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def records_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_id", "timestep", "algorithm", "distance"])
    for rec in sorted(records, key=lambda r: r.run_id):
        for run_id, k, alg, d in rec.rows():
            w.writerow([run_id, k, alg, _fmt(d)])
    return buf.getvalue()


def summary_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(asdict(rows[0]).keys()) if rows else ["scenario", "topology", "algorithm", "mean", "std", "lo95", "hi95", "runs", "failed"]
    w.writerow(names)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in asdict(row).values()])
    return buf.getvalue()


def _run_one(args):
    config, run_id = args
    return run_experiment(config, run_id)


def run_conditions(configs: list[ScenarioConfig], runs: int, jobs: int = 1) -> list[RunRecord]:
    """All runs of all conditions, optionally across worker processes.

    Results come back in (condition, run_id) order whatever ``jobs`` is.
    """
    tasks = [(c, r) for c in configs for r in range(runs)]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks, chunksize=1))
