import itertools
import math

import numpy as np
import pytest

from coopamc.analytic import (
    eta_amc_only,
    eta_cooperative,
    eta_fixed,
    eta_traditional,
    event_probabilities,
    plr_cooperative,
    plr_fixed,
)
from coopamc.channel import AmcMode, ConfigError, ModeTable, sr_packet_error
from coopamc.design import LinkDesign, design_link, fixed_link

from conftest import random_table


def brute_eta(d_sd, d_rd, eps, nr):
    """Oracle: explicit recursion over every attempt path, one path at a time."""
    rates = d_sd.table.rates
    q_total = d_rd.transmit_prob
    q = [p / q_total for p in d_rd.mode_prob[1:]]

    def relay(symbols, depth, weight):
        out = 0.0
        for m in range(len(q)):
            if q[m] == 0.0:
                continue
            w = weight * q[m]
            s = symbols + 1.0 / rates[m]
            per = d_rd.mode_avg_per[m]
            if depth == nr:
                out += w / s
            else:
                out += w * (1 - per) / s + relay(s, depth + 1, w * per)
        return out

    total = 0.0
    for n, p in enumerate(d_sd.mode_prob[1:]):
        per, e, r = d_sd.mode_avg_per[n], eps[n], rates[n]
        total += p * (1 - (1 - e) * per) * r
        if nr:
            total += p * (1 - e) * per * relay(1.0 / r, 1, 1.0)
        else:
            total += p * (1 - e) * per * r
    return total


def degenerate(rng):
    table = random_table(rng, 3)
    n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    g1, g2 = 10 ** rng.uniform(0, 2), 10 ** rng.uniform(0, 2)
    gsr = 10 ** rng.uniform(0, 2)
    return table, n, m, g1, g2, gsr


def test_enumeration_matches_brute_force(rng):
    for _ in range(10):
        table = random_table(rng, 4)
        d_sd = design_link(table, 10 ** rng.uniform(0.5, 2), 10 ** rng.uniform(-2, -0.3))
        d_rd = design_link(table, 10 ** rng.uniform(0.5, 2), 10 ** rng.uniform(-2, -0.3))
        eps = rng.uniform(0, 0.5, 4).tolist()
        for nr in range(0, 5):
            assert eta_cooperative(d_sd, d_rd, eps, nr) == pytest.approx(brute_eta(d_sd, d_rd, eps, nr), rel=1e-12)


def test_eta_with_perfect_source_link(table):
    d_sd = design_link(table, 50.0, 0.01)
    clean = LinkDesign(table, d_sd.thresholds, d_sd.mode_prob, (0.0,) * 6, d_sd.active, 0.01, 50.0)
    d_rd = design_link(table, 50.0, 0.01)
    expected = math.fsum(r * p for r, p in zip(table.rates, clean.mode_prob[1:]))
    assert eta_cooperative(clean, d_rd, [0.3] * 6, 3) == pytest.approx(expected, rel=1e-14)


def test_eta_when_relay_never_decodes(table):
    d_sd = design_link(table, 20.0, 0.1)
    d_rd = design_link(table, 20.0, 0.1)
    assert eta_cooperative(d_sd, d_rd, [1.0] * 6, 2) == pytest.approx(eta_amc_only(d_sd), rel=1e-14)


def test_single_mode_example():
    # R_n = 2, R_m = 1, eps = 0, PER_sd = 0.1 over the whole axis.
    m1 = AmcMode(1, 1.0, 1.0, 1.0, 0.0)
    m2 = AmcMode(2, 2.0, 1.0, 1.0, 0.0)
    table = ModeTable((m1, m2))
    sd = LinkDesign(table, (0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.1), (False, True), math.nan, 1.0)
    rd = LinkDesign(table, (0.0, math.inf), (0.0, 1.0, 0.0), (0.3, 0.0), (True, False), math.nan, 1.0)
    assert eta_cooperative(sd, rd, [0.0, 0.0], 1) == pytest.approx(2 * (1 - 0.1 * 2 / 3), rel=1e-14)
    assert eta_cooperative(sd, rd, [0.0, 0.0], 1) == pytest.approx(1.8666666666666667, rel=1e-14)


def test_single_mode_reduction(rng):
    for _ in range(100):
        table, n, m, g1, g2, gsr = degenerate(rng)
        sd, rd = fixed_link(table, n, g1), fixed_link(table, m, g2)
        eps = [sr_packet_error(mode, gsr) for mode in table]
        assert eta_cooperative(sd, rd, eps, 1) == pytest.approx(eta_fixed(n, m, g1, g2, gsr, table), abs=1e-12)
        assert plr_cooperative(sd, rd, eps) == pytest.approx(plr_fixed(n, m, g1, g2, gsr, table), abs=1e-12)


def test_traditional_is_cooperative_with_clean_relay(table):
    d = design_link(table, 15.0, 0.05)
    for nr in range(4):
        assert eta_traditional(d, nr) == eta_cooperative(d, d, [0.0] * 6, nr)


def test_amc_only_examples(table):
    d = design_link(table, 15.0, 0.05)
    assert eta_amc_only(d) == pytest.approx(eta_cooperative(d, d, [0.2] * 6, 0), rel=1e-14)
    assert eta_traditional(d, 0) == pytest.approx(eta_amc_only(d), rel=1e-14)
    single = fixed_link(table, 2, 5.0)
    assert eta_amc_only(single) == 1.0
    outage = LinkDesign(table, (math.inf,) * 6, (1.0,) + (0.0,) * 6, (0.0,) * 6, (False,) * 6, 0.1, 1.0)
    assert eta_amc_only(outage) == 0.0


def test_event_probabilities_sum_to_one(rng):
    for _ in range(20):
        table = random_table(rng, 4)
        d_sd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        d_rd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        eps = rng.uniform(0, 1, 4).tolist()
        for nr in range(5):
            for law in ("wait", "count-attempt"):
                ev = event_probabilities(d_sd, d_rd, eps, nr, law)
                total = ev["source_success"] + ev["relay_decode_fail"] + sum(ev["success_at"]) + ev["exhausted_loss"]
                assert total == pytest.approx(1.0, abs=1e-12)


def test_eta_bounded(rng):
    for _ in range(30):
        table = random_table(rng, 4)
        d_sd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        d_rd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        eps = rng.uniform(0, 1, 4).tolist()
        for nr in range(4):
            eta = eta_cooperative(d_sd, d_rd, eps, nr)
            assert 0.0 <= eta <= max(table.rates)


def test_plr_examples(table):
    d_sd = design_link(table, 10.0, 0.2)
    d_rd = design_link(table, 30.0, 0.05)
    a = sum(p * e for p, e in zip(d_sd.mode_prob[1:], d_sd.mode_avg_per)) / d_sd.transmit_prob
    b = sum(p * e for p, e in zip(d_rd.mode_prob[1:], d_rd.mode_avg_per)) / d_rd.transmit_prob
    assert plr_cooperative(d_sd, d_rd, [0.0] * 6) == pytest.approx(a * b, rel=1e-13)
    assert plr_cooperative(d_sd, d_rd, [1.0] * 6) == pytest.approx(a, rel=1e-13)


def test_plr_handoff_form_is_identical(rng):
    # E[eps PER] + E[(1 - eps) PER] B, conditioning on the relay first.
    for _ in range(20):
        table = random_table(rng, 4)
        d_sd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        d_rd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        eps = rng.uniform(0, 1, 4)
        p = np.array(d_sd.mode_prob[1:]) / d_sd.transmit_prob
        per = np.array(d_sd.mode_avg_per)
        b = np.dot(np.array(d_rd.mode_prob[1:]) / d_rd.transmit_prob, d_rd.mode_avg_per)
        handoff = np.dot(p, eps * per) + np.dot(p, (1 - eps) * per) * b
        assert plr_cooperative(d_sd, d_rd, eps.tolist()) == pytest.approx(handoff, rel=1e-12)


def test_plr_monotone_in_link_pers(rng):
    for _ in range(30):
        table = random_table(rng, 3)
        d_sd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        d_rd = design_link(table, 10 ** rng.uniform(0, 2), 10 ** rng.uniform(-3, -0.2))
        eps = rng.uniform(0, 1, 3).tolist()
        base = plr_cooperative(d_sd, d_rd, eps)
        for which, k in itertools.product(("sd", "rd"), range(3)):
            d = d_sd if which == "sd" else d_rd
            if not d.active[k]:
                continue
            pers = list(d.mode_avg_per)
            pers[k] = min(1.0, pers[k] + 1e-3)
            bumped = LinkDesign(d.table, d.thresholds, d.mode_prob, tuple(pers), d.active, d.target_per, d.mean_snr)
            args = (bumped, d_rd) if which == "sd" else (d_sd, bumped)
            assert plr_cooperative(*args, eps) >= base - 1e-15


def test_fixed_examples():
    # Full-axis average PER is a / (1 + g * mean) with zero cutoff: 0.1 and 0.2 here.
    m1 = AmcMode(1, 1.0, 0.4, 1.0, 0.0)
    m2 = AmcMode(2, 2.0, 0.2, 1.0, 0.0)
    table = ModeTable((m1, m2))
    assert eta_fixed(2, 1, 1.0, 1.0, math.inf, table) == pytest.approx(1.8666666666666667, rel=1e-14)
    assert plr_fixed(2, 1, 1.0, 1.0, math.inf, table) == pytest.approx(0.02, rel=1e-14)
    # S-R SNR ln 4 gives eps = 0.2 / 4 = 0.05 for mode 2.
    assert plr_fixed(2, 1, 1.0, 1.0, math.log(4.0), table) == pytest.approx(0.024, rel=1e-13)


def test_fixed_eps_limits():
    m1 = AmcMode(1, 1.0, 30.0, 1.0, math.log(30.0))
    m2 = AmcMode(2, 2.0, 50.0, 0.5, math.log(50.0) / 0.5)
    table = ModeTable((m1, m2))
    # S-R SNR below mode 2's cutoff: eps = 1.
    assert eta_fixed(2, 1, 5.0, 8.0, 1.0, table) == 2.0
    from coopamc.channel import full_avg_per

    assert plr_fixed(2, 1, 5.0, 8.0, 1.0, table) == pytest.approx(full_avg_per(m2, 5.0), rel=1e-14)
    per_sd, per_rd = full_avg_per(m2, 5.0), full_avg_per(m1, 8.0)
    assert plr_fixed(2, 1, 5.0, 8.0, math.inf, table) == pytest.approx(per_sd * per_rd, rel=1e-14)


def test_relay_outage_raises(table):
    d_sd = design_link(table, 10.0, 0.1)
    dead = LinkDesign(table, (math.inf,) * 6, (1.0,) + (0.0,) * 6, (0.0,) * 6, (False,) * 6, 0.1, 1.0)
    with pytest.raises(ConfigError):
        eta_cooperative(d_sd, dead, [0.0] * 6, 1)
    # Counting outage frames as failed attempts is well defined.
    assert eta_cooperative(d_sd, dead, [0.0] * 6, 2, relay_law="count-attempt") == pytest.approx(
        eta_amc_only(d_sd), rel=1e-14
    )


def test_literal_law_differs_from_wait(table):
    d_sd = design_link(table, 10.0, 0.3)
    d_rd = design_link(table, 10.0, 0.05)
    wait = eta_cooperative(d_sd, d_rd, [0.0] * 6, 2)
    literal = eta_cooperative(d_sd, d_rd, [0.0] * 6, 2, relay_law="literal")
    assert literal < wait
