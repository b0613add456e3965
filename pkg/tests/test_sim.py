import json
import math
from concurrent.futures import ThreadPoolExecutor

import pytest

from coopamc.analytic import eta_cooperative, event_probabilities
from coopamc.channel import AmcMode, ConfigError, ModeTable, Topology, derive_topology, sr_packet_error
from coopamc.design import LinkDesign, design_link, fixed_link
from coopamc.sim import (
    BACKEND,
    Adaptive,
    Fixed,
    SimConfig,
    SimStats,
    backends,
    empty_stats,
    merge_stats,
    simulate,
    simulate_designs,
    simulate_range,
)


def link_pair(table, pbar_db=10.0, p_sd=0.3, p_rd=0.05):
    g1, g2, gsr = derive_topology(Topology.from_db(pbar_db))
    d_sd, d_rd = design_link(table, g1, p_sd), design_link(table, g2, p_rd)
    eps = [sr_packet_error(m, gsr) for m in table]
    return d_sd, d_rd, eps


def test_perfect_code_never_loses():
    modes = tuple(AmcMode(k, float(k), 0.0, 1.0, 0.5 * k) for k in (1, 2, 3))
    table = ModeTable(modes)
    d_sd, d_rd, eps = design_link(table, 2.0, 0.1), design_link(table, 2.0, 0.1), [0.0] * 3
    stats = simulate_designs(d_sd, d_rd, eps, SimConfig(20000, seed=3))
    assert stats.plr_hat == 0.0 and stats.losses == 0
    assert stats.counts["source_outage"] > 0


def test_all_outage_source_gives_zero_eta():
    m1 = AmcMode(1, 1.0, 1.0, 1.0, 0.0)
    table = ModeTable((m1,))
    never = LinkDesign(table, (math.inf,), (1.0, 0.0), (0.0,), (False,), 0.1, 1.0)
    always = fixed_link(table, 1, 1.0)
    stats = simulate_designs(never, always, [0.0], SimConfig(5000))
    assert stats.eta_hat == 0.0 and stats.transmitted == 0
    assert math.isnan(stats.plr_hat)


@pytest.mark.parametrize("nr", [1, 2, 3])
def test_matches_analytic(table, nr):
    d_sd, d_rd, eps = link_pair(table)
    stats = simulate_designs(d_sd, d_rd, eps, SimConfig(400_000, seed=11, nr=nr))
    eta = eta_cooperative(d_sd, d_rd, eps, nr)
    assert abs(stats.eta_hat - eta) <= 4 * stats.eta_se
    ev = event_probabilities(d_sd, d_rd, eps, nr)
    loss = ev["relay_decode_fail"] + ev["exhausted_loss"]
    # Binomial SE at the analytic value; the plug-in SE is 0 when no loss occurs.
    assert abs(stats.plr_hat - loss) <= 4 * math.sqrt(loss * (1 - loss) / stats.transmitted)


def test_count_attempt_policy_matches_its_law(table):
    d_sd, d_rd, eps = link_pair(table, pbar_db=3.0, p_sd=0.3, p_rd=0.01)
    assert d_rd.outage_prob > 0.05
    cfg = SimConfig(400_000, seed=5, nr=2, outage_policy="count-attempt")
    stats = simulate_designs(d_sd, d_rd, eps, cfg)
    eta = eta_cooperative(d_sd, d_rd, eps, 2, relay_law="count-attempt")
    assert abs(stats.eta_hat - eta) <= 4 * stats.eta_se
    assert abs(stats.eta_hat - eta_cooperative(d_sd, d_rd, eps, 2)) > 4 * stats.eta_se


def test_event_counts_are_consistent(table):
    d_sd, d_rd, eps = link_pair(table)
    stats = simulate_designs(d_sd, d_rd, eps, SimConfig(50_000, seed=2, nr=3))
    c = stats.counts
    total = c["source_outage"] + c["source_success"] + c["relay_decode_fail"]
    total += sum(c["success_at_attempt"]) + c["budget_exhausted_loss"]
    assert total == stats.cycles == 50_000
    assert stats.transmitted == stats.cycles - c["source_outage"]
    assert 0.0 <= stats.goodput <= stats.eta_hat


def test_partitions_reproduce_serial(table):
    d_sd, d_rd, eps = link_pair(table)
    cfg = SimConfig(100_003, seed=42, nr=2)
    serial = simulate_designs(d_sd, d_rd, eps, cfg)
    with ThreadPoolExecutor(4) as pool:
        split = simulate_designs(d_sd, d_rd, eps, cfg, partitions=8, executor=pool)
    assert split.histogram == serial.histogram
    assert split.to_dict() == serial.to_dict()


def test_merge_identity_and_associativity(table):
    d_sd, d_rd, eps = link_pair(table)
    parts = [simulate_range(d_sd, d_rd, eps, 1, 9, lo, lo + 3000) for lo in (0, 3000, 6000)]
    a, b, c = parts
    empty = empty_stats(table.rates, 1, seed=9)
    assert merge_stats(empty, a).histogram == a.histogram
    left = merge_stats(merge_stats(a, b), c)
    right = merge_stats(a, merge_stats(b, c))
    assert left.to_dict() == right.to_dict()
    assert left.histogram == simulate_range(d_sd, d_rd, eps, 1, 9, 0, 9000).histogram


def test_merge_rejects_mismatched_shapes(table):
    with pytest.raises(ValueError):
        merge_stats(empty_stats(table.rates, 1), empty_stats(table.rates, 2))


@pytest.mark.skipif("cython" not in backends(), reason="compiled kernel not built")
@pytest.mark.parametrize("policy", ["wait", "count-attempt"])
def test_backends_agree(table, policy):
    d_sd, d_rd, eps = link_pair(table, pbar_db=5.0)
    args = (d_sd, d_rd, eps, 3, 123, 1000, 41000, policy)
    fast = simulate_range(*args, backend="cython")
    slow = simulate_range(*args, backend="python")
    assert fast.histogram == slow.histogram


def test_seeds_differ(table):
    d_sd, d_rd, eps = link_pair(table)
    a = simulate_designs(d_sd, d_rd, eps, SimConfig(10_000, seed=1))
    b = simulate_designs(d_sd, d_rd, eps, SimConfig(10_000, seed=2))
    assert a.histogram != b.histogram


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(0)
    with pytest.raises(ConfigError):
        SimConfig(10, outage_policy="skip")
    with pytest.raises(ConfigError):
        SimConfig(10, seed=-1)


def test_stats_json_round_trip(table):
    d_sd, d_rd, eps = link_pair(table)
    stats = simulate_designs(d_sd, d_rd, eps, SimConfig(20_000, seed=7, nr=2))
    back = SimStats.from_dict(json.loads(json.dumps(stats.to_dict())))
    assert back == stats
    assert back.eta_hat == stats.eta_hat


def test_fixed_mode_simulation(table):
    topo = Topology.from_db(20.0)
    stats = simulate(table, topo, SimConfig(50_000, seed=1, mode=Fixed(3, 4)))
    assert {k.source_mode for k in stats.histogram} == {3}
    assert all(set(k.relay_modes) <= {4} for k in stats.histogram)


def test_adaptive_designs_rescaled_to_topology(table):
    d_sd, d_rd, _ = link_pair(table)
    topo = Topology.from_db(10.0)
    stats = simulate(table, topo, SimConfig(50_000, seed=1, mode=Adaptive(d_sd, d_rd)))
    g1, g2, gsr = derive_topology(topo)
    eps = [sr_packet_error(m, gsr) for m in table]
    assert abs(stats.eta_hat - eta_cooperative(d_sd, d_rd, eps, 1)) <= 4 * stats.eta_se


def test_relay_stuck_in_outage_is_rejected():
    m1 = AmcMode(1, 1.0, 1.0, 1.0, 0.0)
    table = ModeTable((m1,))
    never = LinkDesign(table, (math.inf,), (1.0, 0.0), (0.0,), (False,), 0.1, 1.0)
    with pytest.raises(ConfigError):
        simulate_designs(fixed_link(table, 1, 1.0), never, [0.0], SimConfig(10))


def test_backend_name():
    assert BACKEND in backends()
