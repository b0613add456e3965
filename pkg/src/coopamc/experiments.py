"""SNR sweeps over the competing schemes, with optional Monte Carlo columns."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import eta_amc_only, plr_cooperative
from .channel import (
    ConfigError,
    ModeTable,
    Topology,
    db_to_linear,
    derive_topology,
    sr_packet_error,
)
from .design import LinkDesign, design_link, fixed_link
from .optimizer import (
    baseline_equal_target,
    equal_target,
    optimize_adaptive,
    optimize_fixed,
    optimize_traditional,
)
from .sim import SimConfig, simulate_designs

SCHEMES = ("joint-adaptive", "amc-only", "fixed-coop", "traditional", "baseline-equal-target")

COLUMNS = (
    "pbar_db",
    "scheme",
    "eta_bits_per_symbol",
    "plr",
    "feasible",
    "p_t_sd",
    "p_t_rd",
    "n_star",
    "m_star",
    "eta_hat",
    "eta_se",
    "plr_hat",
    "plr_se",
)


@dataclass(frozen=True)
class SweepSpec:
    pbar_db_start: float = 0.0
    pbar_db_stop: float = 30.0
    pbar_db_step: float = 0.5
    d: float = 0.2
    alpha: float = 4.0
    p_loss: float = 1e-3
    nr: int = 1
    schemes: tuple[str, ...] = ("joint-adaptive", "amc-only")
    grid: int = 200
    sim_packets: int | None = None
    seed: int = 0
    outage_policy: str = "wait"

    def __post_init__(self) -> None:
        if not self.pbar_db_start <= self.pbar_db_stop:
            raise ConfigError("sweep needs start <= stop")
        if not self.pbar_db_step > 0.0:
            raise ConfigError("sweep step must be positive")
        if not self.schemes:
            raise ConfigError("select at least one scheme")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        if not 0.0 < self.p_loss < 1.0:
            raise ConfigError("p_loss must lie in (0, 1)")
        if self.nr < 1:
            raise ConfigError("nr must be >= 1")
        if self.sim_packets is not None and self.sim_packets < 1:
            raise ConfigError("sim packets must be >= 1")

    def points_db(self) -> list[float]:
        n = int(math.floor((self.pbar_db_stop - self.pbar_db_start) / self.pbar_db_step + 1e-9))
        return [round(self.pbar_db_start + k * self.pbar_db_step, 10) for k in range(n + 1)]


@dataclass
class SweepRow:
    pbar_db: float
    scheme: str
    eta: float
    plr: float
    feasible: bool
    p_t_sd: float = math.nan
    p_t_rd: float = math.nan
    n_star: int | None = None
    m_star: int | None = None
    nr: int = 1
    eps: tuple[float, ...] = ()
    design_sd: LinkDesign | None = None
    design_rd: LinkDesign | None = None
    sim: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {
            "pbar_db": self.pbar_db,
            "scheme": self.scheme,
            "eta_bits_per_symbol": self.eta,
            "plr": self.plr,
            "feasible": self.feasible,
            "p_t_sd": self.p_t_sd,
            "p_t_rd": self.p_t_rd,
            "n_star": self.n_star,
            "m_star": self.m_star,
            "eta_hat": self.sim.get("eta_hat", math.nan),
            "eta_se": self.sim.get("eta_se", math.nan),
            "plr_hat": self.sim.get("plr_hat", math.nan),
            "plr_se": self.sim.get("plr_se", math.nan),
        }

    def to_dict(self) -> dict:
        out = self.as_record()
        out["nr"] = self.nr
        out["eps"] = list(self.eps)
        out["design_sd"] = None if self.design_sd is None else self.design_sd.to_dict()
        out["design_rd"] = None if self.design_rd is None else self.design_rd.to_dict()
        return out


def _avg_per(design: LinkDesign) -> float:
    if design.transmit_prob == 0.0:
        return math.nan  # never transmits, so no packet is ever lost or delivered
    return math.fsum(p * e for p, e in zip(design.mode_prob[1:], design.mode_avg_per)) / design.transmit_prob


def _scheme_row(table: ModeTable, spec: SweepSpec, pbar_db: float, scheme: str) -> SweepRow:
    pbar = db_to_linear(pbar_db)
    topo = Topology(pbar, spec.d, spec.alpha)
    gamma1, gamma2, gamma_sr = derive_topology(topo)
    eps = tuple(sr_packet_error(mode, gamma_sr) for mode in table)
    nr = spec.nr

    if scheme in ("joint-adaptive", "traditional"):
        if scheme == "joint-adaptive":
            opt = optimize_adaptive(table, topo, spec.p_loss, spec.grid, nr)
        else:
            opt = optimize_traditional(table, pbar, spec.p_loss, spec.grid, nr)
        return SweepRow(
            pbar_db, scheme, opt.report.eta, opt.report.plr, opt.feasible,
            opt.p_t_sd_star, opt.p_t_rd_star, nr=nr, eps=opt.eps,
            design_sd=opt.design_sd, design_rd=opt.design_rd,
        )
    if scheme == "amc-only":
        design = design_link(table, gamma1, spec.p_loss)
        plr = _avg_per(design)
        return SweepRow(
            pbar_db, scheme, eta_amc_only(design), plr, bool(plr <= spec.p_loss),
            spec.p_loss, math.nan, nr=0, eps=eps, design_sd=design, design_rd=design,
        )
    if scheme == "fixed-coop":
        choice = optimize_fixed(table, topo, spec.p_loss)
        return SweepRow(
            pbar_db, scheme, choice.eta, choice.plr, choice.feasible,
            n_star=choice.n_star, m_star=choice.m_star, nr=1, eps=eps,
            design_sd=fixed_link(table, choice.n_star, gamma1) if choice.feasible else None,
            design_rd=fixed_link(table, choice.m_star, gamma2) if choice.feasible else None,
        )
    design, report = baseline_equal_target(table, Topology(pbar, 0.0, spec.alpha), spec.p_loss, nr)
    p_t = equal_target(spec.p_loss, nr)
    return SweepRow(
        pbar_db, scheme, report.eta, report.plr, report.feasible, p_t, p_t,
        nr=nr, eps=(0.0,) * len(table), design_sd=design, design_rd=design,
    )


def _row_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % 2**64


def run_sweep(table: ModeTable, spec: SweepSpec) -> list[SweepRow]:
    """One row per (P̄, scheme) in P̄-major, scheme-minor order."""
    rows = []
    for pbar_db in spec.points_db():
        for scheme in spec.schemes:
            rows.append(_scheme_row(table, spec, pbar_db, scheme))
    if spec.sim_packets:
        for index, row in enumerate(rows):
            if row.design_sd is None:
                continue
            cfg = SimConfig(
                spec.sim_packets, _row_seed(spec.seed, index), row.nr, spec.outage_policy
            )
            stats = simulate_designs(row.design_sd, row.design_rd, row.eps, cfg)
            row.sim = {
                "eta_hat": stats.eta_hat,
                "eta_se": stats.eta_se,
                "plr_hat": stats.plr_hat,
                "plr_se": stats.plr_se,
            }
    return rows


def recompute(row_dict: dict) -> tuple[float, float]:
    """Analytic (η, PLR) of a serialized row from its designs alone."""
    from .analytic import eta_cooperative

    d_sd = LinkDesign.from_dict(row_dict["design_sd"])
    d_rd = LinkDesign.from_dict(row_dict["design_rd"])
    eps = row_dict["eps"]
    nr = row_dict["nr"]
    eta = eta_cooperative(d_sd, d_rd, eps, nr)
    if nr == 0:
        return eta, _avg_per(d_sd)
    if row_dict["scheme"] == "baseline-equal-target":
        return eta, _avg_per(d_sd) ** (nr + 1)
    return eta, plr_cooperative(d_sd, d_rd, eps)


def gap_summary(rows: list[SweepRow], a: str = "joint-adaptive", b: str = "amc-only") -> dict | None:
    """Gap in η between two schemes over the points where both are feasible."""
    by_point: dict[float, dict[str, SweepRow]] = {}
    for row in rows:
        by_point.setdefault(row.pbar_db, {})[row.scheme] = row
    gaps = [
        pt[a].eta - pt[b].eta
        for pt in by_point.values()
        if a in pt and b in pt and pt[a].feasible and pt[b].feasible
    ]
    if not gaps:
        return None
    return {"schemes": [a, b], "mean_gap": float(np.mean(gaps)), "max_gap": max(gaps), "min_gap": min(gaps)}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        rec = row.as_record()
        writer.writerow([_fmt(rec[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[SweepRow], spec: SweepSpec) -> str:
    payload = {
        "kind": "sweep",
        "units": {"pbar_db": "dB", "eta_bits_per_symbol": "bits/symbol"},
        "spec": {
            "pbar_db": [spec.pbar_db_start, spec.pbar_db_stop, spec.pbar_db_step],
            "d": spec.d,
            "alpha": spec.alpha,
            "p_loss": spec.p_loss,
            "nr": spec.nr,
            "schemes": list(spec.schemes),
            "grid": spec.grid,
            "sim_packets": spec.sim_packets,
            "seed": spec.seed,
            "outage_policy": spec.outage_policy,
        },
        "summary": gap_summary(rows),
        "rows": [row.to_dict() for row in rows],
    }
    return json.dumps(payload, indent=1, allow_nan=True)
