"""Target-PER split search, fixed-rate mode selection and the power threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analytic import (
    PerformanceReport,
    eta_cooperative,
    eta_traditional,
    plr_cooperative,
    eta_fixed,
    plr_fixed,
)
from .channel import (
    ConfigError,
    ModeTable,
    Topology,
    db_to_linear,
    derive_topology,
    sr_packet_error,
)
from .design import LinkDesign, avg_sr_eps, design_link


@dataclass(frozen=True)
class TracePoint:
    p_t_sd: float
    p_t_rd: float
    eta: float
    feasible: bool


@dataclass
class OptimizedSystem:
    """Result of the split search. ``feasible`` is False when no candidate passed."""

    p_t_sd_star: float
    p_t_rd_star: float
    design_sd: LinkDesign | None
    design_rd: LinkDesign | None
    report: PerformanceReport
    eps: tuple[float, ...]
    search_trace: list[TracePoint] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.report.feasible


@dataclass(frozen=True)
class FixedChoice:
    n_star: int
    m_star: int
    eta: float
    plr: float
    feasible: bool


def default_grid(p_loss: float, points: int = 200) -> np.ndarray:
    """``points`` log-spaced targets strictly inside ``(p_loss, 1)``."""
    if points < 2:
        raise ConfigError("search grid needs at least 2 points")
    if not 0.0 < p_loss < 1.0:
        raise ConfigError(f"p_loss must lie in (0, 1), got {p_loss}")
    return np.logspace(math.log10(p_loss), 0.0, points + 2)[1:-1]


def relay_target(p_loss: float, eps_bar: float, p_t_sd: float) -> float:
    """R-D target that meets ``p_loss`` with equality given the S-D target."""
    if eps_bar >= 1.0:
        return -math.inf
    return (p_loss - eps_bar * p_t_sd) / (p_t_sd * (1.0 - eps_bar))


def search_split(
    table: ModeTable,
    mean_sd: float,
    mean_rd: float,
    eps: Sequence[float],
    p_loss: float,
    grid: int | Sequence[float] = 200,
    nr: int = 1,
) -> OptimizedSystem:
    """Scan S-D targets, derive the matching R-D target and keep the best η.

    Each candidate is accepted only if its exact one-retransmission PLR is at
    most ``p_loss``. Ties keep the earliest grid point.
    """
    if nr < 1:
        raise ConfigError("cooperative ARQ needs nr >= 1")
    candidates = default_grid(p_loss, grid) if isinstance(grid, int) else np.asarray(grid, float)
    eps = tuple(float(e) for e in eps)
    trace: list[TracePoint] = []
    best = None
    for p_sd in candidates:
        p_sd = float(p_sd)
        if not p_loss < p_sd < 1.0:
            continue
        d_sd = design_link(table, mean_sd, p_sd)
        if d_sd.transmit_prob == 0.0:
            continue
        eps_bar = avg_sr_eps(d_sd, eps)
        p_rd = relay_target(p_loss, eps_bar, p_sd)
        if not 0.0 < p_rd < 1.0:
            trace.append(TracePoint(p_sd, p_rd, math.nan, False))
            continue
        d_rd = design_link(table, mean_rd, p_rd)
        if d_rd.transmit_prob == 0.0:
            trace.append(TracePoint(p_sd, p_rd, math.nan, False))
            continue
        eta = eta_cooperative(d_sd, d_rd, eps, nr)
        plr = plr_cooperative(d_sd, d_rd, eps)
        ok = plr <= p_loss
        trace.append(TracePoint(p_sd, p_rd, eta, ok))
        if ok and (best is None or eta > best[0]):
            best = (eta, p_sd, p_rd, d_sd, d_rd, plr, eps_bar)
    if best is None:
        report = PerformanceReport(0.0, 1.0, False, nr, math.nan, p_loss)
        return OptimizedSystem(math.nan, math.nan, None, None, report, eps, trace)
    eta, p_sd, p_rd, d_sd, d_rd, plr, eps_bar = best
    report = PerformanceReport(eta, plr, True, nr, eps_bar, p_loss)
    return OptimizedSystem(p_sd, p_rd, d_sd, d_rd, report, eps, trace)


def optimize_adaptive(
    table: ModeTable,
    topology: Topology,
    p_loss: float,
    grid: int | Sequence[float] = 200,
    nr: int = 1,
) -> OptimizedSystem:
    gamma1, gamma2, gamma_sr = derive_topology(topology)
    eps = [sr_packet_error(mode, gamma_sr) for mode in table]
    return search_split(table, gamma1, gamma2, eps, p_loss, grid, nr)


def optimize_traditional(
    table: ModeTable,
    pbar: float,
    p_loss: float,
    grid: int | Sequence[float] = 200,
    nr: int = 1,
) -> OptimizedSystem:
    """Optimized split when the source itself retransmits over the same channel."""
    return search_split(table, pbar, pbar, [0.0] * len(table), p_loss, grid, nr)


def optimize_fixed(table: ModeTable, topology: Topology, p_loss: float) -> FixedChoice:
    """Best fixed mode pair by exhaustive search; ties keep the smallest (n, m)."""
    gamma1, gamma2, gamma_sr = derive_topology(topology)
    best = None
    best_plr_any = (math.inf, 1, 1)
    for n in range(1, len(table) + 1):
        for m in range(1, len(table) + 1):
            plr = plr_fixed(n, m, gamma1, gamma2, gamma_sr, table)
            if plr < best_plr_any[0]:
                best_plr_any = (plr, n, m)
            if plr > p_loss:
                continue
            eta = eta_fixed(n, m, gamma1, gamma2, gamma_sr, table)
            if best is None or eta > best.eta:
                best = FixedChoice(n, m, eta, plr, True)
    if best is None:
        plr, n, m = best_plr_any
        return FixedChoice(n, m, 0.0, plr, False)
    return best


def power_threshold(
    table: ModeTable,
    n: int,
    m: int,
    d: float,
    alpha: float,
    p_loss: float,
    bracket_db: tuple[float, float] = (-20.0, 80.0),
    tol_db: float = 1e-6,
) -> float:
    """Smallest transmit SNR (linear) at which the fixed pair meets ``p_loss``.

    Bisection in dB; the returned point is the upper end of the final
    bracket, so the pair is feasible there.
    """

    def excess(x_db: float) -> float:
        g1, g2, gsr = derive_topology(Topology(db_to_linear(x_db), d, alpha))
        return plr_fixed(n, m, g1, g2, gsr, table) - p_loss

    lo, hi = bracket_db
    if not lo < hi:
        raise ConfigError("bracket must satisfy lo < hi")
    if excess(lo) <= 0.0:
        return db_to_linear(lo)
    if excess(hi) > 0.0:
        raise ConfigError(
            f"pair ({n}, {m}) misses p_loss={p_loss} even at {hi} dB; widen the bracket"
        )
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if excess(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return db_to_linear(hi)


def equal_target(p_loss: float, nr: int) -> float:
    return p_loss ** (1.0 / (nr + 1))


def baseline_equal_target(
    table: ModeTable, topology: Topology, p_loss: float, nr: int
) -> tuple[LinkDesign, PerformanceReport]:
    """One common target PER for the first transmission and every retransmission."""
    p_t = equal_target(p_loss, nr)
    design = design_link(table, topology.pbar, p_t)
    eta = eta_traditional(design, nr)
    if design.transmit_prob == 0.0:
        return design, PerformanceReport(0.0, math.nan, False, nr, 0.0, p_loss)
    per = math.fsum(p * e for p, e in zip(design.mode_prob[1:], design.mode_avg_per)) / design.transmit_prob
    plr = per ** (nr + 1)
    return design, PerformanceReport(eta, plr, bool(plr <= p_loss), nr, 0.0, p_loss)

