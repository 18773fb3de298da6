import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxtrust import simulator as sim
from maxtrust.maxplus import EPS


def _world(kind="tree", size=4, malicious=(), zero=()):
    adj = sim.build_topology(sim.TopologySpec(kind, size), seed=0)
    w = sim._empty_world(kind, adj, 2)
    w.malicious[list(malicious)] = True
    w.zero_mode[list(zero)] = True
    return w


# -- topology ----------------------------------------------------------------

def test_tree_seven_nodes_is_complete_binary():
    adj = sim.build_topology(sim.TopologySpec("tree", 7))
    assert adj[0] == {1, 2} and adj[1] == {0, 3, 4} and adj[2] == {0, 5, 6}
    assert max(len(a) for a in adj) <= 3
    sim.validate_topology("tree", adj)


def test_torus_two_by_two_has_eight_directed_links():
    adj = sim.build_topology(sim.TopologySpec("torus", 4))
    assert sum(len(a) for a in adj) == 8
    sim.validate_topology("torus", adj)


def test_torus_infeasible_size_reports_repair():
    with pytest.raises(sim.TopologyError) as info:
        sim.torus_adjacency(5, 2)
    assert info.value.repaired in (4, 6)


def test_random_topology_is_deterministic():
    spec = sim.TopologySpec("random", 4)
    a, b = sim.build_topology(spec, seed=7), sim.build_topology(spec, seed=7)
    assert a == b
    assert sum(len(x) for x in a) == 8
    sim.validate_topology("random", a)


def test_random_topology_too_many_links():
    with pytest.raises(sim.TopologyError):
        sim.build_topology(sim.TopologySpec("random", 3, random_links=4), seed=0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sim.TOPOLOGIES), st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_growth_preserves_topology(kind, seed, rounds):
    rng = np.random.default_rng(seed)
    cfg = sim.ScenarioConfig(scenario=3, topology=kind)
    adj = sim.build_topology(cfg.topology_spec, seed=seed)
    for _ in range(rounds):
        adj = sim.attach_routers(kind, adj, sim.batch_size(cfg, rng), rng)
        sim.validate_topology(kind, adj)


# -- dynamics ------------------------------------------------------------------

def test_most_trusted_neighbour_ties_to_lowest_id():
    w = _world()
    assert sim.most_trusted_neighbour(w, 0) == 1
    w.known[0, 2] = True
    w.trust[0, 2] = 0.3
    assert sim.most_trusted_neighbour(w, 0) == 2


def test_zero_mode_neighbour_loses_trust():
    cfg = sim.ScenarioConfig(miscategorisation=0.0)
    w = _world("tree", 2, malicious=[1], zero=[1])
    w.known[0, 1] = w.known[1, 0] = True
    w.trust[0, 1] = 0.5
    sim.step(w, cfg, np.random.default_rng(0))
    assert w.trust[0, 1] == pytest.approx(0.5 - 10 * cfg.trust_delta)
    assert w.contacts[1] == 20


def test_honest_pair_step_is_reproducible():
    cfg = sim.ScenarioConfig()
    runs = []
    for _ in range(2):
        w = _world("tree", 2)
        w.known[0, 1] = w.known[1, 0] = True
        w.trust[0, 1] = w.trust[1, 0] = 0.5
        sim.step(w, cfg, np.random.default_rng(3))
        runs.append(w.trust.copy())
    assert np.array_equal(runs[0], runs[1])
    assert runs[0][0, 1] <= 0.5 + 10 * cfg.trust_delta + 1e-15
    assert runs[0][0, 1] >= 0.5 - 10 * cfg.trust_delta - 1e-15


def test_decay_broadcast_is_non_increasing():
    w = _world("tree", 2, malicious=[1])
    w.known[1, 0] = True
    seen = []
    for k in range(30):
        w.contacts[1] = k
        seen.append(w.broadcast(0.99).s[1, 0])
    assert seen[0] == 0.5
    assert all(a >= b for a, b in zip(seen, seen[1:]))


def test_zero_mode_broadcast():
    w = _world("tree", 2, malicious=[1], zero=[1])
    w.known[1, 0] = True
    w.trust[1, 0] = 0.9
    assert w.broadcast(0.99).s[1, 0] == 0.0


@pytest.mark.parametrize("added,bad", [(4, 2), (5, 2), (2, 1), (6, 3)])
def test_scenario2_growth_floors_half(added, bad):
    cfg = sim.ScenarioConfig(scenario=2, topology="random", growth_min=added, growth_max=added)
    w = sim.init_world(cfg, np.random.default_rng(0))
    before = int(w.malicious.sum())
    sim.grow(w, cfg, np.random.default_rng(1))
    assert w.n == 4 + added
    assert int(w.malicious.sum()) - before == bad


def test_scenario3_growth_is_reproducible():
    cfg = sim.ScenarioConfig(scenario=3, topology="tree", growth_min=3, growth_max=3)
    counts = []
    for _ in range(2):
        w = sim.init_world(cfg, np.random.default_rng(5))
        assert not w.malicious.any()
        sim.grow(w, cfg, np.random.default_rng(9))
        counts.append(w.malicious.copy())
    assert np.array_equal(counts[0], counts[1])


def test_scenario1_never_grows():
    cfg = sim.ScenarioConfig(scenario=1)
    w = sim.init_world(cfg, np.random.default_rng(0))
    with pytest.raises(RuntimeError):
        sim.grow(w, cfg, np.random.default_rng(0))


def test_torus_grows_by_whole_rows():
    cfg = sim.ScenarioConfig(scenario=3, topology="torus", growth_min=3, growth_max=3)
    assert sim.batch_size(cfg, np.random.default_rng(0)) == 4


def test_config_validation():
    with pytest.raises(ValueError):
        sim.ScenarioConfig(scenario=4)
    with pytest.raises(ValueError):
        sim.ScenarioConfig(topology="ring")
    with pytest.raises(ValueError):
        sim.ScenarioConfig(growth_min=5, growth_max=2)


def test_honest_world_trust_bounds():
    cfg = sim.ScenarioConfig(scenario=1, topology="torus")
    rng = np.random.default_rng(11)
    w = sim.init_world(cfg, rng)
    start = w.trust.copy()
    known0 = w.known.copy()
    for k in range(1, 6):
        sim.step(w, cfg, rng)
        assert np.all((w.trust >= 0) & (w.trust <= 1))
        bound = k * cfg.interactions * cfg.trust_delta + 1e-12
        assert np.all(np.abs(w.trust - start)[known0] <= bound)


# -- scoring -----------------------------------------------------------------------

def test_convergence_distance_examples():
    assert sim.convergence_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert sim.convergence_distance([1, 0, 0], [0, 1, 0]) == pytest.approx(math.sqrt(2))
    assert sim.convergence_distance([1.0], [1.0, 0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        sim.convergence_distance([1, 0, 0], [1, 0])


@given(st.floats(-1e6, 1e6))
def test_tropical_uniform_maps_to_uniform(a):
    assert np.allclose(sim.tropical_to_probability([a, a, a]), 1 / 3)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8), st.floats(-1e3, 1e3))
def test_tropical_map_is_shift_invariant(t, a):
    p = sim.tropical_to_probability(t)
    assert abs(p.sum() - 1) < 1e-12
    assert np.allclose(p, sim.tropical_to_probability(np.asarray(t) + a), atol=1e-9)


def test_tropical_map_eps():
    assert list(sim.tropical_to_probability([EPS, 0.0])) == [0.0, 1.0]
    with pytest.raises(ValueError):
        sim.tropical_to_probability([EPS])


def test_reachable_agents_prunes_chains():
    t = np.array([[EPS, 1.0, EPS], [1.0, EPS, 1.0], [EPS, EPS, EPS]])
    # agent 2 trusts nobody but is trusted by 1, so stays
    assert list(sim.reachable_agents(t)) == [True, True, True]
    t = np.array([[EPS, 1.0, 1.0], [1.0, EPS, EPS], [EPS, EPS, EPS]])
    t[:, 2] = EPS
    t[2, 0] = 1.0
    assert list(sim.reachable_agents(t)) == [True, True, False]


# -- experiments -------------------------------------------------------------------

def _short(**kw):
    return sim.ScenarioConfig(**{"timesteps": 6, "seed": 3, **kw})


def test_run_is_deterministic():
    cfg = _short(scenario=2, topology="random")
    a, b = sim.run_experiment(cfg, 1), sim.run_experiment(cfg, 1)
    assert a.error is None
    assert a.distances == b.distances
    assert np.array_equal(a.final_matrix, b.final_matrix)
    assert sim.records_csv([a]) == sim.records_csv([b])


def test_run_record_shape():
    rec = sim.run_experiment(_short(scenario=3, topology="tree"))
    assert rec.error is None
    for alg in sim.ALGORITHMS:
        assert len(rec.distances[alg]) == 6
        assert all(d >= 0 for d in rec.distances[alg])
    assert rec.sizes[-1] == len(rec.reference)
    assert abs(rec.reference.sum() - 1) < 1e-9


def test_aggregate_single_sample():
    rec = sim.run_experiment(_short(timesteps=1))
    (et, mt) = sim.aggregate([rec])
    assert et.mean == rec.distances["ET"][0] and et.std == 0.0
    assert mt.mean == rec.distances["MT"][0] and mt.std == 0.0
    assert et.lo95 == et.hi95 == et.mean


def test_aggregate_counts_failures():
    good = sim.run_experiment(_short(timesteps=2))
    bad = sim.RunRecord(good.config, 1, error="boom")
    rows = sim.aggregate([good, bad])
    assert all(r.runs == 2 and r.failed == 1 for r in rows)


def test_summary_csv_columns():
    rows = sim.aggregate([sim.run_experiment(_short(timesteps=2))])
    header = sim.summary_csv(rows).splitlines()[0]
    assert header == "scenario,topology,algorithm,mean,std,lo95,hi95,runs,failed"


def test_run_conditions_order_independent_of_jobs():
    cfgs = [_short(timesteps=3), _short(timesteps=3, topology="torus")]
    one = sim.run_conditions(cfgs, runs=2, jobs=1)
    two = sim.run_conditions(cfgs, runs=2, jobs=2)
    assert [r.distances for r in one] == [r.distances for r in two]
