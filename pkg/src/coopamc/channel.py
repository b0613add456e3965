"""AMC mode parameters, the exponential PER fit, and Rayleigh block-fading statistics.

All SNR values are linear. dB conversion happens only when reading mode
tables and at the CLI boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

INF = math.inf


class ConfigError(ValueError):
    """Invalid mode table, topology or design input."""


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x == INF:
        return INF
    if x <= 0.0:
        return -INF
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class AmcMode:
    """One transmission mode of the exponential PER fit.

    ``PER(snr) = 1`` below ``cutoff`` and ``fit_a * exp(-fit_g * snr)`` above.
    """

    index: int
    rate: float
    fit_a: float
    fit_g: float
    cutoff: float

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ConfigError(f"mode index must be >= 1, got {self.index}")
        if not self.rate > 0.0:
            raise ConfigError(f"mode {self.index}: rate must be positive")
        # fit_a = 0 is allowed: an error-free code above the cutoff.
        if self.fit_a < 0.0 or not self.fit_g > 0.0:
            raise ConfigError(f"mode {self.index}: need fit_a >= 0 and fit_g > 0")
        if self.cutoff < 0.0:
            raise ConfigError(f"mode {self.index}: cutoff must be >= 0")
        if self.fit_a * math.exp(-self.fit_g * self.cutoff) > 1.0 + 1e-12:
            raise ConfigError(
                f"mode {self.index}: fit exceeds 1 at the cutoff "
                f"(need cutoff >= ln(a)/g = {math.log(self.fit_a) / self.fit_g:.6g})"
            )

    @property
    def per_at_cutoff(self) -> float:
        return self.fit_a * math.exp(-self.fit_g * self.cutoff)


@dataclass(frozen=True)
class ModeTable:
    modes: tuple[AmcMode, ...]
    packet_bits: int = 1080
    name: str = ""

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes:
            raise ConfigError("mode table is empty")
        if self.packet_bits < 1:
            raise ConfigError("packet_bits must be >= 1")
        for k, mode in enumerate(modes, start=1):
            if mode.index != k:
                raise ConfigError(f"mode indices must run 1..N, found {mode.index} at position {k}")
        for lo, hi in zip(modes, modes[1:]):
            if not hi.rate > lo.rate:
                raise ConfigError(f"rates must increase strictly (mode {hi.index})")

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, n: int) -> AmcMode:
        """1-based access, matching mode numbering."""
        if not 1 <= n <= len(self.modes):
            raise IndexError(f"mode {n} not in 1..{len(self.modes)}")
        return self.modes[n - 1]

    @property
    def rates(self) -> np.ndarray:
        return np.array([m.rate for m in self.modes])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "packet_bits": self.packet_bits,
            "modes": [
                {
                    "index": m.index,
                    "rate_bits_per_symbol": m.rate,
                    "a": m.fit_a,
                    "g": m.fit_g,
                    "cutoff_db": linear_to_db(m.cutoff),
                    "cutoff": m.cutoff,
                }
                for m in self.modes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, *, source: str = "<table>") -> "ModeTable":
        try:
            entries = data["modes"]
            packet_bits = int(data.get("packet_bits", 1080))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{source}: missing field {exc}") from None
        modes = []
        for k, entry in enumerate(entries):
            where = f"{source}: modes[{k}]"
            try:
                a = float(entry["a"])
                g = float(entry["g"])
                if "cutoff" in entry:
                    cutoff = float(entry["cutoff"])
                else:
                    cutoff_db = entry["cutoff_db"]
                    cutoff = 0.0 if cutoff_db is None else db_to_linear(float(cutoff_db))
                    # Published tables round the dB value; snap to the point where
                    # the fit reaches 1 when the rounding leaves it slightly above.
                    if a > 1.0:
                        natural = math.log(a) / g
                        if cutoff < natural and linear_to_db(natural) - float(cutoff_db) < 0.1:
                            cutoff = natural
                mode = AmcMode(
                    index=int(entry["index"]),
                    rate=float(entry["rate_bits_per_symbol"]),
                    fit_a=a,
                    fit_g=g,
                    cutoff=cutoff,
                )
            except KeyError as exc:
                raise ConfigError(f"{where}: missing field {exc}") from None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
            modes.append(mode)
        try:
            return cls(tuple(modes), packet_bits=packet_bits, name=str(data.get("name", "")))
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None


def load_table(path: str | Path | None = None) -> ModeTable:
    """Load a mode table JSON file; ``None`` loads the bundled HiperLAN/2 table."""
    if path is None:
        text = resources.files("coopamc").joinpath("data/hiperlan2.json").read_text()
        source = "hiperlan2.json"
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: {exc.msg}") from None
    return ModeTable.from_dict(data, source=source)


@dataclass(frozen=True)
class Topology:
    """Source, relay and destination on a line with unit S-D distance."""

    pbar: float
    d: float = 0.2
    alpha: float = 4.0

    def __post_init__(self) -> None:
        if not self.pbar > 0.0:
            raise ConfigError("pbar must be positive")
        if not 0.0 <= self.d < 1.0:
            raise ConfigError("relay position d must lie in [0, 1)")
        if not self.alpha > 0.0:
            raise ConfigError("path-loss exponent alpha must be positive")

    @classmethod
    def from_db(cls, pbar_db: float, d: float = 0.2, alpha: float = 4.0) -> "Topology":
        return cls(db_to_linear(pbar_db), d, alpha)


def derive_topology(t: Topology) -> tuple[float, float, float]:
    """Return ``(mean S-D SNR, mean R-D SNR, S-R SNR)``; ``d = 0`` gives an ideal S-R link."""
    gamma1 = t.pbar
    gamma2 = t.pbar * (1.0 - t.d) ** (-t.alpha)
    gamma_sr = INF if t.d == 0.0 else t.pbar * t.d ** (-t.alpha)
    return gamma1, gamma2, gamma_sr


def per_instant(mode: AmcMode, snr: float) -> float:
    if snr < mode.cutoff:
        return 1.0
    if snr == INF:
        return 0.0
    return mode.fit_a * math.exp(-mode.fit_g * snr)


def sr_packet_error(mode: AmcMode, gamma_sr: float) -> float:
    """PER of the AWGN source-relay link in ``mode``."""
    return per_instant(mode, gamma_sr)


def rayleigh_interval_prob(mean_snr: float, lo: float, hi: float) -> float:
    """Probability that an exponential SNR with ``mean_snr`` falls in ``[lo, hi)``."""
    if lo > hi:
        raise ValueError(f"invalid interval [{lo}, {hi})")
    if not mean_snr > 0.0:
        raise ValueError("mean_snr must be positive")
    upper = 0.0 if hi == INF else math.exp(-hi / mean_snr)
    return math.exp(-lo / mean_snr) - upper


class DegenerateModeError(ValueError):
    """Average requested over an interval that carries no probability."""


def interval_avg_per(mode: AmcMode, mean_snr: float, lo: float, hi: float) -> float:
    """Average PER of ``mode`` conditioned on the SNR lying in ``[lo, hi)``.

    Requires ``lo >= mode.cutoff``. Evaluated in a ratio form that stays
    finite when both the numerator and the interval probability underflow.
    """
    if lo > hi:
        raise ValueError(f"invalid interval [{lo}, {hi})")
    if lo == hi or lo == INF:
        raise DegenerateModeError(f"mode {mode.index}: empty interval at {lo}")
    if mode.fit_a == 0.0:
        return 0.0
    inv = 1.0 / mean_snr
    head = mode.fit_a / (1.0 + mode.fit_g * mean_snr) * math.exp(-mode.fit_g * lo)
    if hi == INF:
        return head
    width = hi - lo
    num = -math.expm1(-(mode.fit_g + inv) * width)
    den = -math.expm1(-inv * width)
    if den == 0.0:
        # Interval narrower than the float resolution of the density.
        return per_instant(mode, lo)
    return head * num / den


def full_avg_per(mode: AmcMode, mean_snr: float) -> float:
    """PER of ``mode`` averaged over the whole exponential SNR law."""
    if not mean_snr > 0.0:
        raise ValueError("mean_snr must be positive")
    below = -math.expm1(-mode.cutoff / mean_snr)
    above = (
        mode.fit_a
        / (1.0 + mode.fit_g * mean_snr)
        * math.exp(-(mode.fit_g + 1.0 / mean_snr) * mode.cutoff)
    )
    return below + above


def draw_snr(mean_snr: float, stream: np.random.Generator, size: int | None = None):
    """Exponential SNR variate(s) with the given mean."""
    if not mean_snr > 0.0:
        raise ValueError("mean_snr must be positive")
    return stream.exponential(mean_snr, size)


def mode_arrays(modes: Sequence[AmcMode]) -> tuple[np.ndarray, ...]:
    """Column arrays ``(rate, a, g, cutoff)`` for vectorized code."""
    return (
        np.array([m.rate for m in modes], dtype=np.float64),
        np.array([m.fit_a for m in modes], dtype=np.float64),
        np.array([m.fit_g for m in modes], dtype=np.float64),
        np.array([m.cutoff for m in modes], dtype=np.float64),
    )
