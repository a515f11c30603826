"""Finite-state compound channel instances.

A realization stores every coefficient ``h[r][t][s]`` (receiver ``r``,
transmit antenna ``t``, state ``s``), all indices zero-based. Receivers may
have different state counts, so ``h`` is a tuple of ``M x J[r]`` arrays
rather than one dense cube.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

RNG_ALGORITHM = "numpy.Philox4x64-10+SeedSequence"
MAX_RESAMPLE_ATTEMPTS = 10**6


class ScalarField(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is ScalarField.REAL else np.complex128

    @property
    def log_power_scale(self) -> float:
        """Factor multiplying log2(P) in the DoF normalisation."""
        return 0.5 if self is ScalarField.REAL else 1.0


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, *keys)``.

    Philox is keyed through a SeedSequence so that sub-streams such as
    ``(seed, p_index, trial)`` are independent and reproducible regardless of
    the order in which they are consumed.
    """
    entropy = [int(seed) & (2**64 - 1)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class CompoundChannelConfig:
    M: int
    K: int
    J: tuple[int, ...]
    field: ScalarField = ScalarField.REAL
    seed: int = 0
    magnitude_floor: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(int(j) for j in self.J))
        try:
            object.__setattr__(self, "field", ScalarField(self.field))
        except ValueError as exc:
            raise ConfigError(f"field must be 'real' or 'complex', got {self.field!r}") from exc
        if self.M < 1 or self.K < 1:
            raise ConfigError(f"M and K must be >= 1, got M={self.M}, K={self.K}")
        if len(self.J) != self.K:
            raise ConfigError(f"J must list {self.K} state counts, got {list(self.J)}")
        if any(j < 1 for j in self.J):
            raise ConfigError(f"every J[r] must be >= 1, got {list(self.J)}")
        if not self.magnitude_floor > 0:
            raise ConfigError("magnitude_floor must be positive")

    @property
    def dims(self) -> tuple[int, int, tuple[int, ...]]:
        return self.M, self.K, self.J

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "K": self.K,
            "J": list(self.J),
            "field": self.field.value,
            "seed": self.seed,
            "magnitude_floor": self.magnitude_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CompoundChannelConfig":
        allowed = {"M", "K", "J", "field", "seed", "magnitude_floor"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown channel config fields: {sorted(unknown)}")
        try:
            return cls(
                M=int(d["M"]),
                K=int(d["K"]),
                J=tuple(d["J"]),
                field=ScalarField(d.get("field", "real")),
                seed=int(d.get("seed", 0)),
                magnitude_floor=float(d.get("magnitude_floor", 1e-3)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad channel config: {exc}") from exc


@dataclass(frozen=True)
class ChannelRealization:
    config: CompoundChannelConfig
    h: tuple[np.ndarray, ...]

    def __post_init__(self):
        cfg = self.config
        if len(self.h) != cfg.K:
            raise ConfigError("h must hold one array per receiver")
        frozen = []
        for r, arr in enumerate(self.h):
            arr = np.array(arr, dtype=cfg.field.dtype)
            if arr.shape != (cfg.M, cfg.J[r]):
                raise ConfigError(
                    f"h[{r}] has shape {arr.shape}, expected {(cfg.M, cfg.J[r])}"
                )
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "h", tuple(frozen))

    def coeff(self, r: int, t: int, s: int):
        cfg = self.config
        if not (0 <= r < cfg.K and 0 <= t < cfg.M and 0 <= s < cfg.J[r]):
            raise IndexError(f"coefficient index {(r, t, s)} out of range")
        return self.h[r][t, s]

    def vector(self, r: int, s: int) -> np.ndarray:
        """Channel vector of receiver ``r`` in state ``s`` (length M)."""
        if not (0 <= r < self.config.K and 0 <= s < self.config.J[r]):
            raise IndexError(f"receiver/state {(r, s)} out of range")
        return self.h[r][:, s]

    def indices(self):
        cfg = self.config
        for r in range(cfg.K):
            for t in range(cfg.M):
                for s in range(cfg.J[r]):
                    yield (r, t, s)

    def flat(self) -> np.ndarray:
        return np.array([self.h[r][t, s] for r, t, s in self.indices()])

    def to_json(self) -> dict:
        def enc(v):
            if self.config.field is ScalarField.COMPLEX:
                return [float(v.real), float(v.imag)]
            return float(v)

        h = [[[enc(v) for v in row] for row in arr] for arr in self.h]
        return {"config": self.config.to_dict(), "rng": RNG_ALGORITHM, "h": h}

    @classmethod
    def from_json(cls, d: dict) -> "ChannelRealization":
        if "config" not in d or "h" not in d:
            raise ConfigError("channel file needs 'config' and 'h'")
        cfg = CompoundChannelConfig.from_dict(d["config"])
        try:
            if cfg.field is ScalarField.COMPLEX:
                h = tuple(
                    np.array([[complex(re, im) for re, im in row] for row in arr])
                    for arr in d["h"]
                )
            else:
                h = tuple(np.array(arr, dtype=float) for arr in d["h"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed channel coefficients: {exc}") from exc
        return cls(cfg, h)


def _draw(rng: np.random.Generator, field: ScalarField, shape) -> np.ndarray:
    if field is ScalarField.REAL:
        return rng.standard_normal(shape)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def sample_channel(config: CompoundChannelConfig, rng: np.random.Generator | None = None
                   ) -> ChannelRealization:
    """Draw i.i.d. N(0,1) or CN(0,1) coefficients, redrawing any below the floor.

    With ``rng=None`` the generator is derived from ``config.seed``.
    """
    if rng is None:
        rng = make_rng(config.seed)
    attempts = 0
    hs = []
    for r in range(config.K):
        arr = _draw(rng, config.field, (config.M, config.J[r]))
        bad = np.abs(arr) < config.magnitude_floor
        while bad.any():
            attempts += int(bad.sum())
            if attempts > MAX_RESAMPLE_ATTEMPTS:
                raise ConfigError("magnitude_floor rejects (almost) every draw")
            arr[bad] = _draw(rng, config.field, (int(bad.sum()),))
            bad = np.abs(arr) < config.magnitude_floor
        hs.append(arr)
    return ChannelRealization(config, tuple(hs))


@dataclass
class GenericityReport:
    tol: float
    collisions: list = field(default_factory=list)
    small: list = field(default_factory=list)

    @property
    def is_generic(self) -> bool:
        return not self.collisions and not self.small

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "collisions": [[list(a), list(b)] for a, b in self.collisions],
            "small": [list(i) for i in self.small],
            "generic": self.is_generic,
        }


def validate_genericity(ch: ChannelRealization, tol: float = 1e-9) -> GenericityReport:
    """List coefficient pairs closer than ``tol`` and magnitudes under the floor."""
    idx = list(ch.indices())
    vals = ch.flat()
    report = GenericityReport(tol=tol)
    floor = ch.config.magnitude_floor
    report.small = [i for i, v in zip(idx, vals) if abs(v) < floor]
    dist = np.abs(vals[:, None] - vals[None, :])
    for a, b in itertools.combinations(range(len(idx)), 2):
        if dist[a, b] < tol:
            report.collisions.append((idx[a], idx[b]))
    return report
