"""Closed-form spectral efficiency and packet loss rate.

Spectral efficiency is E[1/L], where L is the reciprocal-rate sum (symbols
per bit) spent on one packet cycle: the source frame plus every relay frame
actually transmitted. It counts transmitted bits, including those of packets
that end up lost.

Relay attempts draw their mode from one of three laws (``relay_law``):

``"wait"``
    The relay waits out R-D outage without spending symbols or attempts, so
    each attempt uses the mode law conditioned on non-outage. Default.
``"count-attempt"``
    An outage frame uses up one attempt, sends nothing and always fails.
``"literal"``
    Unnormalized R-D mode probabilities with no outage term. The event
    probabilities then sum to less than 1. Kept only for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ConfigError, ModeTable, full_avg_per, sr_packet_error
from .design import LinkDesign, avg_sr_eps

RELAY_LAWS = ("wait", "count-attempt", "literal")
PLR_VARIANTS = ("unweighted", "weighted")
MAX_ENUMERATION = 2_000_000


@dataclass(frozen=True)
class PerformanceReport:
    eta: float
    plr: float
    feasible: bool
    nr: int
    eps_bar: float
    p_loss: float = math.nan

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "plr": self.plr,
            "feasible": self.feasible,
            "nr": self.nr,
            "eps_bar": self.eps_bar,
            "p_loss": self.p_loss,
        }


def _source_arrays(design: LinkDesign, eps: Sequence[float]):
    if len(eps) != design.n_modes:
        raise ValueError("need one S-R error probability per mode")
    prob = np.array(design.mode_prob[1:], dtype=np.float64)
    per = np.array(design.mode_avg_per, dtype=np.float64)
    e = np.asarray(eps, dtype=np.float64)
    if np.any((e < 0.0) | (e > 1.0)):
        raise ValueError("S-R error probabilities must lie in [0, 1]")
    inv = 1.0 / design.table.rates
    return prob, per, e, inv


def relay_attempt_law(design_rd: LinkDesign, relay_law: str = "wait"):
    """Per-attempt relay states as arrays ``(prob, per, symbols_per_bit)``.

    Only active modes appear; ``count-attempt`` adds a silent outage state.
    """
    if relay_law not in RELAY_LAWS:
        raise ValueError(f"relay_law must be one of {RELAY_LAWS}")
    on = np.array(design_rd.active, dtype=bool)
    prob = np.array(design_rd.mode_prob[1:], dtype=np.float64)[on]
    per = np.array(design_rd.mode_avg_per, dtype=np.float64)[on]
    inv = (1.0 / design_rd.table.rates)[on]
    if relay_law == "wait":
        total = design_rd.transmit_prob
        if total == 0.0:
            return prob[:0], per[:0], inv[:0]
        prob = prob / total
    elif relay_law == "count-attempt":
        prob = np.append(prob, design_rd.outage_prob)
        per = np.append(per, 1.0)
        inv = np.append(inv, 0.0)
    return prob, per, inv


def _relay_terminals(q, per, inv, nr):
    """Flattened (weight, symbols) of every terminal relay-attempt sequence."""
    k = len(q)
    if k ** nr > MAX_ENUMERATION:
        raise ValueError(f"{k}^{nr} relay sequences exceed the enumeration budget")
    weights, sums = [], []
    reach = np.ones(1)
    acc = np.zeros(1)
    for level in range(1, nr + 1):
        step = (reach[:, None] * q[None, :]).ravel()
        acc = (acc[:, None] + inv[None, :]).ravel()
        if level < nr:
            weights.append(step * np.tile(1.0 - per, len(reach)))
            sums.append(acc)
            reach = step * np.tile(per, len(reach))
        else:
            weights.append(step)
            sums.append(acc)
    if not weights:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(weights), np.concatenate(sums)


def eta_cooperative(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps: Sequence[float],
    nr: int,
    relay_law: str = "wait",
) -> float:
    """Average spectral efficiency of adaptive cooperative ARQ with ``nr`` relay attempts."""
    if nr < 0:
        raise ValueError("nr must be >= 0")
    prob, per_sd, e, inv_sd = _source_arrays(design_sd, eps)
    handoff = (1.0 - e) * per_sd
    direct = float(np.sum(prob * (1.0 - handoff) / inv_sd))
    if nr == 0:
        return direct + float(np.sum(prob * handoff / inv_sd))
    q, per_rd, inv_rd = relay_attempt_law(design_rd, relay_law)
    if len(q) == 0:
        if np.any(prob * handoff > 0.0):
            raise ConfigError("R-D design is always in outage but the relay must retransmit")
        return direct
    w, s = _relay_terminals(q, per_rd, inv_rd, nr)
    # relay_part[n] = sum_j w_j / (1/R_n + s_j)
    relay_part = (w[None, :] / (inv_sd[:, None] + s[None, :])).sum(axis=1)
    return direct + float(np.sum(prob * handoff * relay_part))


def event_probabilities(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps: Sequence[float],
    nr: int,
    relay_law: str = "wait",
) -> dict[str, object]:
    """Probabilities of how a transmitted packet's cycle ends.

    Conditioned on the source frame not being in outage. Keys:
    ``source_success``, ``relay_decode_fail``, ``success_at`` (list, attempts
    1..nr) and ``exhausted_loss``.
    """
    prob, per_sd, e, _ = _source_arrays(design_sd, eps)
    total = prob.sum()
    if total == 0.0:
        raise ConfigError("S-D design is always in outage")
    p = prob / total
    handoff = float(np.sum(p * per_sd * (1.0 - e)))
    q, per_rd, _ = relay_attempt_law(design_rd, relay_law)
    fail = float(np.sum(q * per_rd))
    ok = float(np.sum(q * (1.0 - per_rd)))
    return {
        "source_success": float(np.sum(p * (1.0 - per_sd))),
        "relay_decode_fail": float(np.sum(p * per_sd * e)),
        "success_at": [handoff * ok * fail ** (l - 1) for l in range(1, nr + 1)],
        "exhausted_loss": handoff * fail**nr,
    }


def _link_avg_per(design: LinkDesign, weights: Sequence[float] | None = None) -> float:
    total = design.transmit_prob
    if total == 0.0:
        raise ConfigError("design is always in outage")
    w = [1.0] * design.n_modes if weights is None else weights
    return math.fsum(
        wk * per * p for wk, per, p in zip(w, design.mode_avg_per, design.mode_prob[1:])
    ) / total


def plr_cooperative(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps: Sequence[float],
    variant: str = "unweighted",
) -> float:
    """Packet loss rate with one relay retransmission.

    Both link averages are taken over non-outage frames. ``"unweighted"`` is
    the exact expression. ``"weighted"`` also weights the S-D factor of the
    first product by ``1 - eps_n`` and is kept for comparison only. Writing
    the loss as E[eps PER] + E[(1 - eps) PER] * B, conditioning on the relay
    first, gives the same value as ``"unweighted"``.
    """
    if variant not in PLR_VARIANTS:
        raise ValueError(f"variant must be one of {PLR_VARIANTS}")
    if len(eps) != design_sd.n_modes:
        raise ValueError("need one S-R error probability per mode")
    b = _link_avg_per(design_rd)
    e_part = _link_avg_per(design_sd, eps)
    if variant == "unweighted":
        a = _link_avg_per(design_sd)
    else:
        a = _link_avg_per(design_sd, [1.0 - x for x in eps])
    return min(1.0, max(0.0, a * b + e_part * (1.0 - b)))


def eta_traditional(design: LinkDesign, nr: int) -> float:
    """Direct retransmissions over independent draws of the same channel."""
    return eta_cooperative(design, design, [0.0] * design.n_modes, nr)


def eta_amc_only(design_sd: LinkDesign) -> float:
    rates = design_sd.table.rates
    return math.fsum(r * p for r, p in zip(rates, design_sd.mode_prob[1:]))


def eta_fixed(
    n: int, m: int, gamma1_mean: float, gamma2_mean: float, gamma_sr: float, table: ModeTable
) -> float:
    """Fixed modes ``n`` at the source and ``m`` at the relay, one retransmission."""
    mode_n, mode_m = table[n], table[m]
    r_n, r_m = mode_n.rate, mode_m.rate
    eps_n = sr_packet_error(mode_n, gamma_sr)
    per_sd = full_avg_per(mode_n, gamma1_mean)
    return r_n * (1.0 - (1.0 - eps_n) * r_n / (r_n + r_m) * per_sd)


def plr_fixed(
    n: int, m: int, gamma1_mean: float, gamma2_mean: float, gamma_sr: float, table: ModeTable
) -> float:
    eps_n = sr_packet_error(table[n], gamma_sr)
    per_sd = full_avg_per(table[n], gamma1_mean)
    per_rd = full_avg_per(table[m], gamma2_mean)
    return per_sd * per_rd + eps_n * per_sd * (1.0 - per_rd)


def evaluate(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps: Sequence[float],
    nr: int = 1,
    p_loss: float = math.nan,
    relay_law: str = "wait",
) -> PerformanceReport:
    """η for ``nr`` attempts and the one-retransmission PLR, with the verdict.

    For ``nr > 1`` the reported PLR is the one-attempt value, an upper bound.
    """
    eta = eta_cooperative(design_sd, design_rd, eps, nr, relay_law)
    plr = plr_cooperative(design_sd, design_rd, eps) if nr >= 1 else _link_avg_per(design_sd)
    return PerformanceReport(
        eta=eta,
        plr=plr,
        feasible=bool(plr <= p_loss),
        nr=nr,
        eps_bar=avg_sr_eps(design_sd, eps),
        p_loss=p_loss,
    )
