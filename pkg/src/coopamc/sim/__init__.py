"""Frame-level Monte Carlo simulation of adaptive cooperative ARQ.

Each packet cycle owns a counter-based random stream derived from
``(seed, cycle index)``, so any partition of the cycle range reproduces the
serial run exactly. Results are kept as an integer histogram of cycle
outcomes; every estimate is a deterministic function of that histogram and
merging two runs is exact.

The cycle kernel is compiled from Cython when the extension is available and
falls back to a vectorized numpy version otherwise. ``BACKEND`` names the one
in use; ``COOPAMC_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..channel import ConfigError, ModeTable, Topology, derive_topology, sr_packet_error
from ..design import LinkDesign, fixed_link
from . import _fallback

try:
    if os.environ.get("COOPAMC_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced")
    from . import _kernel  # type: ignore[attr-defined]

    _run_cycles = _kernel.run_cycles
    BACKEND = "cython"
except ImportError:
    _kernel = None
    _run_cycles = _fallback.run_cycles
    BACKEND = "python"

POLICIES = ("wait", "count-attempt")
CHUNK = 1 << 20

OUTAGE, SOURCE_SUCCESS, RELAY_DECODE_FAIL, EXHAUSTED_LOSS = 0, 1, 2, 3
EVENT_NAMES = {
    OUTAGE: "source_outage",
    SOURCE_SUCCESS: "source_success",
    RELAY_DECODE_FAIL: "relay_decode_fail",
    EXHAUSTED_LOSS: "budget_exhausted_loss",
}


def backends() -> dict:
    """Available kernels keyed by name."""
    found = {"python": _fallback.run_cycles}
    if _kernel is not None:
        found["cython"] = _kernel.run_cycles
    return found


@dataclass(frozen=True)
class Adaptive:
    design_sd: LinkDesign
    design_rd: LinkDesign


@dataclass(frozen=True)
class Fixed:
    n: int
    m: int


@dataclass(frozen=True)
class SimConfig:
    packets: int
    seed: int = 0
    nr: int = 1
    outage_policy: str = "wait"
    mode: Union[Adaptive, Fixed, None] = None

    def __post_init__(self) -> None:
        if self.packets < 1:
            raise ConfigError("packets must be >= 1")
        if self.nr < 0:
            raise ConfigError("nr must be >= 0")
        if self.outage_policy not in POLICIES:
            raise ConfigError(f"outage_policy must be one of {POLICIES}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")


@dataclass(frozen=True)
class CycleKey:
    """Outcome class of one cycle: how it ended and which modes it used."""

    event: int
    source_mode: int
    relay_modes: tuple[int, ...]


@dataclass
class SimStats:
    """Histogram of cycle outcomes plus the shape needed to interpret it."""

    rates: tuple[float, ...]
    nr: int
    outage_policy: str
    seed: int | None = None
    histogram: Counter = field(default_factory=Counter)

    # -- shape ---------------------------------------------------------------
    def _check_compatible(self, other: "SimStats") -> None:
        if (self.rates, self.nr, self.outage_policy) != (other.rates, other.nr, other.outage_policy):
            raise ValueError("cannot merge statistics of differently shaped runs")

    # -- counts --------------------------------------------------------------
    @property
    def cycles(self) -> int:
        return sum(self.histogram.values())

    @property
    def transmitted(self) -> int:
        return self.cycles - self.counts["source_outage"]

    @property
    def counts(self) -> dict:
        by_event = Counter()
        for key, c in self.histogram.items():
            by_event[key.event] += c
        out = {name: by_event.get(ev, 0) for ev, name in EVENT_NAMES.items()}
        out["success_at_attempt"] = [by_event.get(EXHAUSTED_LOSS + l, 0) for l in range(1, self.nr + 1)]
        return out

    @property
    def losses(self) -> int:
        c = self.counts
        return c["relay_decode_fail"] + c["budget_exhausted_loss"]

    # -- estimates -----------------------------------------------------------
    def _value(self, key: CycleKey) -> float:
        if key.event == OUTAGE:
            return 0.0
        symbols = 1.0 / self.rates[key.source_mode - 1]
        symbols += math.fsum(1.0 / self.rates[m - 1] for m in key.relay_modes)
        return 1.0 / symbols

    def _moments(self, delivered_only: bool = False) -> tuple[float, float]:
        first, second = [], []
        for key in sorted(self.histogram, key=_sort_key):
            c = self.histogram[key]
            if delivered_only and not _delivered(key):
                continue
            x = self._value(key)
            first.append(c * x)
            second.append(c * x * x)
        return math.fsum(first), math.fsum(second)

    @property
    def eta_hat(self) -> float:
        n = self.cycles
        return self._moments()[0] / n if n else math.nan

    @property
    def eta_se(self) -> float:
        n = self.cycles
        if n < 2:
            return math.nan
        s1, s2 = self._moments()
        var = max(0.0, (s2 - s1 * s1 / n) / (n - 1))
        return math.sqrt(var / n)

    @property
    def goodput(self) -> float:
        n = self.cycles
        return self._moments(delivered_only=True)[0] / n if n else math.nan

    @property
    def plr_hat(self) -> float:
        tx = self.transmitted
        return self.losses / tx if tx else math.nan

    @property
    def plr_se(self) -> float:
        tx = self.transmitted
        if not tx:
            return math.nan
        p = self.losses / tx
        return math.sqrt(p * (1.0 - p) / tx)

    def plr_interval(self, z: float) -> tuple[float, float]:
        """Normal-approximation confidence interval ``plr_hat ± z·SE``."""
        p, se = self.plr_hat, self.plr_se
        return max(0.0, p - z * se), min(1.0, p + z * se)

    def to_dict(self) -> dict:
        return {
            "kind": "sim_stats",
            "backend": BACKEND,
            "seed": self.seed,
            "nr": self.nr,
            "outage_policy": self.outage_policy,
            "rates": list(self.rates),
            "cycles": self.cycles,
            "transmitted": self.transmitted,
            "eta_hat": self.eta_hat,
            "eta_se": self.eta_se,
            "plr_hat": self.plr_hat,
            "plr_se": self.plr_se,
            "goodput": self.goodput,
            "counts": self.counts,
            "histogram": [
                [k.event, k.source_mode, list(k.relay_modes), self.histogram[k]]
                for k in sorted(self.histogram, key=_sort_key)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimStats":
        hist = Counter()
        for event, n, relay, c in data["histogram"]:
            hist[CycleKey(int(event), int(n), tuple(int(m) for m in relay))] = int(c)
        return cls(
            rates=tuple(float(r) for r in data["rates"]),
            nr=int(data["nr"]),
            outage_policy=str(data["outage_policy"]),
            seed=data.get("seed"),
            histogram=hist,
        )


def _sort_key(key: CycleKey):
    return (key.event, key.source_mode, key.relay_modes)


def _delivered(key: CycleKey) -> bool:
    return key.event == SOURCE_SUCCESS or key.event > EXHAUSTED_LOSS


def merge_stats(a: SimStats, b: SimStats) -> SimStats:
    a._check_compatible(b)
    seed = a.seed if a.seed == b.seed else None
    return SimStats(a.rates, a.nr, a.outage_policy, seed, a.histogram + b.histogram)


def empty_stats(rates, nr: int, outage_policy: str = "wait", seed: int | None = None) -> SimStats:
    return SimStats(tuple(float(r) for r in rates), nr, outage_policy, seed, Counter())


def seed_key(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _decode(codes: np.ndarray, counts: np.ndarray, n_modes: int, nr: int) -> Counter:
    base = nr + 1
    span = base**n_modes
    out = Counter()
    for code, c in zip(codes.tolist(), counts.tolist()):
        head, relay = divmod(code, span)
        event, src = divmod(head, n_modes + 1)
        used = []
        for m in range(1, n_modes + 1):
            relay, k = divmod(relay, base)
            used.extend([m] * k)
        out[CycleKey(event, src, tuple(used))] += c
    return out


def _kernel_args(design_sd: LinkDesign, design_rd: LinkDesign, eps, nr: int, policy: str):
    table = design_sd.table
    if design_rd.table.rates.tolist() != table.rates.tolist():
        raise ConfigError("S-D and R-D designs use different mode tables")
    n_modes = len(table)
    if (4 + nr) * (n_modes + 1) * (nr + 1) ** n_modes >= 2**62:
        raise ConfigError("nr too large to encode cycle outcomes")
    if len(eps) != n_modes:
        raise ConfigError("need one S-R error probability per mode")
    if nr >= 1 and policy == "wait" and design_rd.transmit_prob < 1e-9:
        raise ConfigError("R-D design is (almost) always in outage; the relay would wait forever")
    from ..channel import mode_arrays

    _, a, g, cut = mode_arrays(table.modes)
    return dict(
        mean_sd=float(design_sd.mean_snr),
        thr_sd=np.ascontiguousarray(design_sd.thresholds, dtype=np.float64),
        mean_rd=float(design_rd.mean_snr),
        thr_rd=np.ascontiguousarray(design_rd.thresholds, dtype=np.float64),
        a=a,
        g=g,
        cut=cut,
        eps=np.ascontiguousarray(eps, dtype=np.float64),
        nr=int(nr),
        policy=0 if policy == "wait" else 1,
    )


def simulate_range(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps,
    nr: int,
    seed: int,
    start: int,
    stop: int,
    outage_policy: str = "wait",
    backend: str | None = None,
) -> SimStats:
    """Simulate cycles ``start .. stop-1`` of the stream identified by ``seed``."""
    if not 0 <= start <= stop:
        raise ValueError("need 0 <= start <= stop")
    kwargs = _kernel_args(design_sd, design_rd, eps, nr, outage_policy)
    run = _run_cycles if backend is None else backends()[backend]
    key = seed_key(seed)
    n_modes = len(design_sd.table)
    hist = Counter()
    for lo in range(start, stop, CHUNK):
        hi = min(stop, lo + CHUNK)
        codes = np.asarray(run(key, lo, hi, **kwargs))
        uniq, cnt = np.unique(codes, return_counts=True)
        hist.update(_decode(uniq, cnt, n_modes, nr))
    return SimStats(tuple(design_sd.table.rates.tolist()), nr, outage_policy, seed, hist)


def simulate_designs(
    design_sd: LinkDesign,
    design_rd: LinkDesign,
    eps,
    config: SimConfig,
    partitions: int = 1,
    executor: Executor | None = None,
    backend: str | None = None,
) -> SimStats:
    """Run ``config.packets`` cycles, optionally split into ``partitions`` ranges.

    The result does not depend on ``partitions`` or on the executor.
    """
    bounds = np.linspace(0, config.packets, partitions + 1).astype(int).tolist()
    jobs = [
        (design_sd, design_rd, tuple(eps), config.nr, config.seed, lo, hi, config.outage_policy, backend)
        for lo, hi in zip(bounds, bounds[1:])
    ]
    if executor is None:
        parts = [simulate_range(*job) for job in jobs]
    else:
        parts = list(executor.map(_run_job, jobs))
    total = empty_stats(design_sd.table.rates, config.nr, config.outage_policy, config.seed)
    for part in parts:
        total = merge_stats(total, part)
    return total


def _run_job(job):
    return simulate_range(*job)


def designs_for(table: ModeTable, topology: Topology, config: SimConfig) -> tuple[LinkDesign, LinkDesign]:
    """Designs the simulator runs for ``config.mode`` at ``topology``'s mean SNRs."""
    gamma1, gamma2, _ = derive_topology(topology)
    mode = config.mode
    if isinstance(mode, Fixed):
        return fixed_link(table, mode.n, gamma1), fixed_link(table, mode.m, gamma2)
    if isinstance(mode, Adaptive):
        from ..design import design_from_thresholds

        d_sd = design_from_thresholds(table, gamma1, mode.design_sd.thresholds, mode.design_sd.target_per)
        d_rd = design_from_thresholds(table, gamma2, mode.design_rd.thresholds, mode.design_rd.target_per)
        return d_sd, d_rd
    raise ConfigError("SimConfig.mode must be Adaptive or Fixed")


def simulate(
    table: ModeTable,
    topology: Topology,
    config: SimConfig,
    partitions: int = 1,
    executor: Executor | None = None,
) -> SimStats:
    """Simulate the protocol at ``topology`` with the designs or fixed pair in ``config``."""
    d_sd, d_rd = designs_for(table, topology, config)
    _, _, gamma_sr = derive_topology(topology)
    eps = [sr_packet_error(mode, gamma_sr) for mode in table]
    return simulate_designs(d_sd, d_rd, eps, config, partitions, executor)
