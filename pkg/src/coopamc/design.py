"""Switching-threshold design for one link under a per-mode target PER."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import (
    INF,
    ConfigError,
    ModeTable,
    interval_avg_per,
    linear_to_db,
    rayleigh_interval_prob,
)


@dataclass(frozen=True)
class LinkDesign:
    """Thresholds for one link and the mode statistics they induce.

    ``thresholds[k]`` is the lower SNR edge of mode ``k + 1``; the outage
    region is ``[0, thresholds[0])``. ``mode_prob`` has N + 1 entries with the
    outage probability first, ``mode_avg_per`` and ``active`` have N entries.
    A dominated mode has an empty interval, zero probability and average PER 0.
    """

    table: ModeTable
    thresholds: tuple[float, ...]
    mode_prob: tuple[float, ...]
    mode_avg_per: tuple[float, ...]
    active: tuple[bool, ...]
    target_per: float
    mean_snr: float

    @property
    def n_modes(self) -> int:
        return len(self.thresholds)

    @property
    def outage_prob(self) -> float:
        return self.mode_prob[0]

    @property
    def transmit_prob(self) -> float:
        """Probability of a non-outage frame, summed over modes."""
        return math.fsum(self.mode_prob[1:])

    def edges(self) -> list[tuple[float, float]]:
        """``[lo, hi)`` SNR interval of every mode."""
        upper = list(self.thresholds[1:]) + [INF]
        return list(zip(self.thresholds, upper))

    def to_dict(self) -> dict:
        return {
            "kind": "link_design",
            "target_per": self.target_per,
            "mean_snr": self.mean_snr,
            "mean_snr_db": linear_to_db(self.mean_snr),
            "thresholds": list(self.thresholds),
            "thresholds_db": [linear_to_db(t) for t in self.thresholds],
            "mode_prob": list(self.mode_prob),
            "mode_avg_per": list(self.mode_avg_per),
            "active": list(self.active),
            "table": self.table.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinkDesign":
        try:
            table = ModeTable.from_dict(data["table"], source="design.table")
            design = cls(
                table=table,
                thresholds=tuple(float(t) for t in data["thresholds"]),
                mode_prob=tuple(float(p) for p in data["mode_prob"]),
                mode_avg_per=tuple(float(p) for p in data["mode_avg_per"]),
                active=tuple(bool(a) for a in data["active"]),
                target_per=float(data["target_per"]),
                mean_snr=float(data["mean_snr"]),
            )
        except KeyError as exc:
            raise ConfigError(f"design file: missing field {exc}") from None
        check_design(design)
        return design


def threshold_for_target(mode, p_t: float) -> float:
    """Smallest SNR at which the fitted PER of ``mode`` is at most ``p_t``."""
    if not 0.0 < p_t < 1.0:
        raise ConfigError(f"target PER must lie in (0, 1), got {p_t}")
    if mode.fit_a <= p_t:
        return mode.cutoff
    return max(mode.cutoff, math.log(mode.fit_a / p_t) / mode.fit_g)


def _repair(raw: Sequence[float]) -> tuple[list[float], list[bool]]:
    # A mode whose threshold is not below every higher mode's threshold is
    # never selected: the higher rate is already allowed there.
    n = len(raw)
    fixed = list(raw)
    for k in range(n - 2, -1, -1):
        fixed[k] = min(fixed[k], fixed[k + 1])
    upper = fixed[1:] + [INF]
    active = [lo < hi for lo, hi in zip(fixed, upper)]
    return fixed, active


def design_from_thresholds(
    table: ModeTable,
    mean_snr: float,
    thresholds: Sequence[float],
    target_per: float = math.nan,
    per_override: dict[int, float] | None = None,
) -> LinkDesign:
    """Build a LinkDesign from explicit thresholds (non-decreasing after repair).

    Every active mode's lower edge must be at or above its cutoff unless
    ``per_override`` supplies that mode's average PER directly.
    """
    if not mean_snr > 0.0:
        raise ConfigError("mean SNR must be positive")
    if len(thresholds) != len(table):
        raise ConfigError("need one threshold per mode")
    fixed, active = _repair([float(t) for t in thresholds])
    if fixed[0] < 0.0:
        raise ConfigError("thresholds must be non-negative")
    probs = [rayleigh_interval_prob(mean_snr, 0.0, fixed[0])]
    pers = []
    for k, ((lo, hi), on) in enumerate(zip(zip(fixed, fixed[1:] + [INF]), active)):
        mode = table.modes[k]
        if not on:
            probs.append(0.0)
            pers.append(0.0)
            continue
        probs.append(rayleigh_interval_prob(mean_snr, lo, hi))
        if per_override and mode.index in per_override:
            pers.append(per_override[mode.index])
        else:
            if lo < mode.cutoff:
                raise ConfigError(
                    f"mode {mode.index}: threshold {lo:.6g} below cutoff {mode.cutoff:.6g}"
                )
            pers.append(interval_avg_per(mode, mean_snr, lo, hi))
    return LinkDesign(
        table=table,
        thresholds=tuple(fixed),
        mode_prob=tuple(probs),
        mode_avg_per=tuple(pers),
        active=tuple(active),
        target_per=target_per,
        mean_snr=mean_snr,
    )


def design_link(table: ModeTable, mean_snr: float, p_t: float) -> LinkDesign:
    """Set every mode's threshold where its instantaneous PER drops to ``p_t``.

    The resulting per-mode average PER is at most ``p_t``; the downstream
    formulas consume the exact averages, not the target.
    """
    if not 0.0 < p_t < 1.0:
        raise ConfigError(f"target PER must lie in (0, 1), got {p_t}")
    if not mean_snr > 0.0:
        raise ConfigError("mean SNR must be positive")
    raw = [threshold_for_target(mode, p_t) for mode in table]
    design = design_from_thresholds(table, mean_snr, raw, target_per=p_t)
    if not any(design.active):
        raise ConfigError("every mode is dominated; degenerate table")
    return design


def fixed_link(table: ModeTable, n: int, mean_snr: float) -> LinkDesign:
    """Mode ``n`` over the whole SNR axis: no outage, no adaptation.

    Its average PER includes the below-cutoff region where PER is 1.
    """
    from .channel import full_avg_per

    mode = table[n]
    thresholds = [0.0] * n + [INF] * (len(table) - n)
    return design_from_thresholds(
        table,
        mean_snr,
        thresholds,
        per_override={n: full_avg_per(mode, mean_snr)},
    )


def avg_sr_eps(design_sd: LinkDesign, eps: Sequence[float]) -> float:
    """Source-relay PER averaged over the S-D mode law, outage excluded."""
    if len(eps) != design_sd.n_modes:
        raise ValueError("need one S-R error probability per mode")
    total = design_sd.transmit_prob
    if total == 0.0:
        raise ConfigError("S-D design is always in outage")
    num = math.fsum(e * p for e, p in zip(eps, design_sd.mode_prob[1:]))
    return num / total


def check_design(design: LinkDesign, tol: float = 1e-12) -> None:
    """Raise ConfigError if a design is not internally consistent."""
    n = design.n_modes
    if len(design.mode_prob) != n + 1 or len(design.mode_avg_per) != n or len(design.active) != n:
        raise ConfigError("design arrays have inconsistent lengths")
    if any(b < a for a, b in zip(design.thresholds, design.thresholds[1:])):
        raise ConfigError("thresholds must be non-decreasing")
    if abs(math.fsum(design.mode_prob) - 1.0) > tol:
        raise ConfigError("mode probabilities do not sum to 1")
    if any(not 0.0 <= p <= 1.0 for p in design.mode_avg_per):
        raise ConfigError("average PER outside [0, 1]")
