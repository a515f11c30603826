"""Monte Carlo trials over AWGN, empirical DoF slopes and outer-bound checks.

Rates are uncoded: a sub-stream symbol counts as delivered only if hard
detection recovers it at every state of its receiver. A sweep runs each
trial index over the whole power grid with one channel draw, so the
enumerated constellations can be reused across powers that share ``Q``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import erfc

from . import codec, hybrid as hy
from .channel import ChannelRealization, CompoundChannelConfig, ScalarField, make_rng, sample_channel
from .constellation import DEFAULT_POINT_CAP, detect_positions, min_distance
from .errors import ConfigError, InsufficientDataError

RELIABLE_SER = 1e-2
MIN_FIT_POINTS = 3
BOUND_RTOL = 1e-9

# stream keys for make_rng, kept apart so draws never overlap
_CHANNEL_KEY, _PRECODER_KEY, _SYMBOL_KEY = 0, 1, 2


def _strict_from_dict(cls, d: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**d)


@dataclass(frozen=True)
class XScheme:
    """Alignment scheme on a compound channel with ``K`` receivers."""

    M: int
    K: int
    J: tuple[int, ...]
    n_list: tuple[int, ...] | None = None
    L: int | None = None
    field: str = "real"
    eps: float = codec.DEFAULT_EPS
    q_fixed: int | None = None
    channel_seed: int | None = None
    kind: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(int(j) for j in self.J))
        if isinstance(self.n_list, int):
            object.__setattr__(self, "n_list", (self.n_list,) * self.K)
        elif self.n_list is not None:
            object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.kind != "x":
            raise ConfigError("XScheme.kind must be 'x'")
        codec.check_eps(self.eps)
        self.channel_config(0)  # validates M, K, J, field
        object.__setattr__(self, "n_list",
                           codec.resolve_n_list(self.M, self.K, self.J, self.n_list, self.L))
        object.__setattr__(self, "L", None)

    def channel_config(self, seed: int) -> CompoundChannelConfig:
        return CompoundChannelConfig(M=self.M, K=self.K, J=self.J, field=ScalarField(self.field),
                                     seed=seed if self.channel_seed is None else self.channel_seed)

    @property
    def total_streams(self) -> int:
        return sum(self.M * codec.mono.basis_size(n, self.M, self.J, r)
                   for r, n in enumerate(self.n_list))

    def nominal_dof(self) -> Fraction:
        return codec.nominal_dof_closed_form(self.M, self.K, self.J, self.n_list, self.eps)

    def dof_profile(self) -> list[Fraction]:
        e = codec.as_fraction(self.eps)
        xi = codec.mono.xi(self.M, self.K, self.J, self.n_list)
        return [Fraction(self.M * codec.mono.basis_size(n, self.M, self.J, r)) * (1 - e) / (xi + e)
                for r, n in enumerate(self.n_list)]

    def reference_dof(self) -> Fraction:
        return codec.dof_reference(self.M, self.K).value

    def to_dict(self) -> dict:
        d = asdict(self)
        d["J"] = list(self.J)
        d["n_list"] = list(self.n_list)
        return d


@dataclass(frozen=True)
class HybridScheme:
    """Zero-forcing plus alignment with ``K = M`` and one multi-state receiver."""

    M: int
    J_M: int
    n: int = 1
    field: str = "real"
    eps: float = codec.DEFAULT_EPS
    q_fixed: int | None = None
    channel_seed: int | None = None
    kind: str = "hybrid"

    def __post_init__(self):
        if self.kind != "hybrid":
            raise ConfigError("HybridScheme.kind must be 'hybrid'")
        if self.M < 2 or self.J_M < 1 or self.n < 1:
            raise ConfigError("hybrid scheme needs M >= 2, J_M >= 1, n >= 1")
        codec.check_eps(self.eps)
        ScalarField(self.field)

    @property
    def K(self) -> int:
        return self.M

    @property
    def J(self) -> tuple[int, ...]:
        return (1,) * (self.M - 1) + (self.J_M,)

    def channel_config(self, seed: int) -> CompoundChannelConfig:
        return CompoundChannelConfig(M=self.M, K=self.M, J=self.J, field=ScalarField(self.field),
                                     seed=seed if self.channel_seed is None else self.channel_seed)

    @property
    def total_streams(self) -> int:
        L = hy.hybrid_L(self.M, self.J_M, self.n)
        return (self.M - 1) * self.M * L + L

    def nominal_dof(self) -> Fraction:
        return hy.hybrid_nominal_dof_closed_form(self.M, self.J_M, self.n, self.eps)

    def dof_profile(self) -> list[Fraction]:
        return hy.hybrid_profile(self.M, self.J_M, self.n, self.eps)

    def reference_dof(self) -> Fraction:
        return Fraction(self.M - 1) + Fraction(1, self.M)

    def to_dict(self) -> dict:
        return asdict(self)


def instance_from_dict(d: dict):
    d = dict(d)
    kind = d.get("kind", "x")
    if kind == "x":
        return _strict_from_dict(XScheme, d)
    if kind == "hybrid":
        return _strict_from_dict(HybridScheme, d)
    raise ConfigError(f"unknown scheme kind {kind!r}")


@dataclass(frozen=True)
class SweepConfig:
    instance: XScheme | HybridScheme
    P_grid: tuple[float, ...]
    trials_per_P: int = 20
    symbols_per_trial: int = codec.DEFAULT_T
    seed: int = 0
    noise: bool = True
    point_cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        P = tuple(float(p) for p in self.P_grid)
        object.__setattr__(self, "P_grid", P)
        if not P or any(not (p > 0 and math.isfinite(p)) for p in P):
            raise ConfigError("P_grid must hold positive finite powers")
        if any(b <= a for a, b in zip(P, P[1:])):
            raise ConfigError("P_grid must be strictly increasing")
        if self.trials_per_P < 1 or self.symbols_per_trial < 1:
            raise ConfigError("trials_per_P and symbols_per_trial must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        if "instance" not in d:
            raise ConfigError("sweep config needs an 'instance'")
        d["instance"] = instance_from_dict(d["instance"])
        return _strict_from_dict(cls, d)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["instance"] = self.instance.to_dict()
        d["P_grid"] = list(self.P_grid)
        return d


# -- single trial -----------------------------------------------------------

@dataclass
class TrialResult:
    P: float
    Q: int
    lam: float
    d_min: float
    errors: list[int]
    totals: list[int]
    point_errors: int
    observations: int
    bits_per_symbol_ok: float
    max_bits_per_symbol: float
    feasible: bool = True

    @property
    def ser(self) -> float:
        tot = sum(self.totals)
        return sum(self.errors) / tot if tot else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ser"] = self.ser
        return d


def pe_bound(d_min: float) -> float:
    """Gaussian tail ``Q(d_min / 2)`` for unit-variance noise."""
    if d_min < 0:
        raise ConfigError("d_min must be non-negative")
    return float(0.5 * erfc(d_min / (2 * math.sqrt(2))))


def _noise(rng, shape, field: ScalarField) -> np.ndarray:
    if field is ScalarField.COMPLEX:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    return rng.standard_normal(shape)


class _TrialContext:
    """Per-trial channel, bases and a constellation cache keyed by ``(r, s, Q)``."""

    def __init__(self, instance, seed: int, trial: int, point_cap: int):
        self.instance = instance
        self.point_cap = point_cap
        cfg = instance.channel_config(seed)
        if instance.channel_seed is None:
            # a fresh channel per trial index, shared by every power in the grid
            self.ch: ChannelRealization = sample_channel(cfg, make_rng(seed, trial, _CHANNEL_KEY))
            pre_rng = make_rng(seed, trial, _PRECODER_KEY)
        else:
            # one fixed channel, identical to what gen-channel emits for that seed
            self.ch = sample_channel(cfg)
            pre_rng = make_rng(instance.channel_seed, _PRECODER_KEY)
        self.cache: dict = {}
        if isinstance(instance, HybridScheme):
            rng = pre_rng
            self.pre = hy.build_precoders(self.ch, rng)
            self.beta = hy.sample_beta(rng)
            self.bases = hy.build_hybrid_bases(instance.M, instance.J_M, instance.n)
            self.values = hy.symbol_values(self.ch, self.pre, self.beta)
        else:
            self.bases = codec.build_bases(cfg.dims, instance.n_list)
            self.nu = codec.basis_values(self.bases, self.ch)

    def constellation(self, key, build, lam):
        if key not in self.cache:
            self.cache[key] = build()
        return self.cache[key].rescaled(lam)


def _score(ctx: _TrialContext, constellations, true_fav, signals, rng, field, noise):
    """Detect every (receiver, state) observation; return error bookkeeping."""
    errors, totals, point_errors, obs, dmin = [], [], 0, 0, math.inf
    for r, per_state in enumerate(constellations):
        ok = None
        for s, c in enumerate(per_state):
            y = signals[r][s]
            if noise:
                y = y + _noise(rng, y.shape, field)
            pos = detect_positions(y, c)
            fav = c.favorite_labels(pos).T  # (n_fav, T)
            good = fav == true_fav[r]
            ok = good if ok is None else ok & good
            point_errors += int(np.count_nonzero(~good.all(axis=0)))
            obs += y.size
            if len(c) > 1:
                dmin = min(dmin, min_distance(c))
        errors.append(int(ok.size - np.count_nonzero(ok)))
        totals.append(int(ok.size))
    return errors, totals, point_errors, obs, dmin


def _trial_x(ctx: _TrialContext, P, rng, T, noise):
    inst = ctx.instance
    params = codec.make_params(ctx.ch, P=P, n_list=inst.n_list, eps=inst.eps, T=T,
                               q_fixed=inst.q_fixed, bases=ctx.bases)
    grid = codec.random_grid(params, rng, T)
    x = codec.encode(grid, ctx.bases, params, ctx.ch, nu=ctx.nu)
    J = ctx.ch.config.J
    consts, signals, true_fav = [], [], []
    for r in range(params.K):
        cs = [ctx.constellation(("x", r, s, params.Q),
                                lambda r=r, s=s: codec.build_received_constellation(
                                    ctx.ch, r, s, ctx.bases, params, cap=ctx.point_cap),
                                params.lam)
              for s in range(J[r])]
        consts.append(cs)
        signals.append([codec.receive(ctx.ch, r, s, x) for s in range(J[r])])
        true_fav.append(grid.u[r].reshape(-1, T))
    return params, consts, signals, true_fav


def _trial_hybrid(ctx: _TrialContext, P, rng, T, noise):
    inst = ctx.instance
    params = hy.make_hybrid_params(ctx.ch, ctx.pre, ctx.bases, P=P, beta=ctx.beta, eps=inst.eps,
                                   T=T, q_fixed=inst.q_fixed)
    streams = hy.random_streams(params, rng, T)
    x = hy.encode_hybrid(streams, ctx.pre, ctx.bases, params, ctx.values)
    M = inst.M
    consts, signals, true_fav = [], [], []
    for r in range(M - 1):
        c = ctx.constellation(("zf", r, 0, params.Q),
                              lambda r=r: hy.receiver_r_constellation(
                                  ctx.ch, r, ctx.pre, ctx.bases, params, ctx.values,
                                  cap=ctx.point_cap),
                              params.lam)
        consts.append([c])
        signals.append([ctx.ch.vector(r, 0) @ x])
        true_fav.append(streams.u[r].reshape(-1, T))
    cs = [ctx.constellation(("hy", M - 1, s, params.Q),
                            lambda s=s: hy.receiver_M_constellation(
                                ctx.ch, s, ctx.pre, ctx.bases, params, ctx.values,
                                cap=ctx.point_cap),
                            params.lam)
          for s in range(inst.J_M)]
    consts.append(cs)
    signals.append([ctx.ch.vector(M - 1, s) @ x for s in range(inst.J_M)])
    true_fav.append(streams.u_M)
    return params, consts, signals, true_fav


def _run(ctx: _TrialContext, P: float, seed: int, p_index: int, trial: int, T: int,
         noise: bool) -> TrialResult:
    rng = make_rng(seed, p_index, trial, _SYMBOL_KEY)
    step = _trial_hybrid if isinstance(ctx.instance, HybridScheme) else _trial_x
    params, consts, signals, true_fav = step(ctx, P, rng, T, noise)
    errors, totals, perr, obs, dmin = _score(ctx, consts, true_fav, signals, rng,
                                             params.field, noise)
    ser = sum(errors) / sum(totals) if sum(totals) else 0.0
    per_stream = math.log2(2 * params.Q - 1)
    max_bits = ctx.instance.total_streams * per_stream
    return TrialResult(P=float(P), Q=params.Q, lam=params.lam,
                       d_min=float(dmin) if math.isfinite(dmin) else 0.0,
                       errors=errors, totals=totals, point_errors=perr, observations=obs,
                       bits_per_symbol_ok=max_bits * (1 - ser), max_bits_per_symbol=max_bits,
                       feasible=params.feasible)


def run_trial(instance, P: float, seed: int, *, p_index: int = 0, trial: int = 0,
              T: int = codec.DEFAULT_T, noise: bool = True,
              point_cap: int = DEFAULT_POINT_CAP) -> TrialResult:
    """One trial: sample channel, send ``T`` symbols, detect at every receiver and state."""
    ctx = _TrialContext(instance, seed, trial, point_cap)
    return _run(ctx, P, seed, p_index, trial, T, noise)


def _trial_series(cfg: SweepConfig, trial: int) -> list[TrialResult]:
    ctx = _TrialContext(cfg.instance, cfg.seed, trial, cfg.point_cap)
    return [_run(ctx, P, cfg.seed, i, trial, cfg.symbols_per_trial, cfg.noise)
            for i, P in enumerate(cfg.P_grid)]


# -- sweeps and reports -----------------------------------------------------

@dataclass
class SweepRow:
    P: float
    x: float
    Q: int
    d_min: float
    d_min_worst: float
    ser: float
    ser_se: float
    bits_ok: float
    pe_bound: float
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def power_axis(P: float, field: ScalarField) -> float:
    """``(1/2) log2 P`` for real channels, ``log2 P`` for complex ones."""
    return field.log_power_scale * math.log2(P)


def aggregate(P: float, results: Sequence[TrialResult], field: ScalarField) -> SweepRow:
    errs = sum(sum(t.errors) for t in results)
    tot = sum(sum(t.totals) for t in results)
    ser = errs / tot if tot else 0.0
    dmins = [t.d_min for t in results]
    d_med = float(np.median(dmins))
    return SweepRow(
        P=float(P), x=power_axis(P, field), Q=results[0].Q, d_min=d_med,
        d_min_worst=float(min(dmins)), ser=ser,
        ser_se=math.sqrt(ser * (1 - ser) / tot) if tot else 0.0,
        bits_ok=float(np.mean([t.bits_per_symbol_ok for t in results])),
        pe_bound=pe_bound(d_med), trials=len(results),
    )


def _row_get(row, key):
    return row[key] if isinstance(row, dict) else getattr(row, key)


def estimate_dof(rows, field: ScalarField = ScalarField.REAL, *,
                 threshold: float = RELIABLE_SER, min_points: int = MIN_FIT_POINTS) -> float:
    """Least-squares slope of delivered bits per symbol against the power axis.

    Only rows with ``ser <= threshold`` enter the fit.
    """
    field = ScalarField(field)
    pts = [(power_axis(_row_get(r, "P"), field), _row_get(r, "bits_ok"))
           for r in rows if _row_get(r, "ser") <= threshold]
    if len(pts) < min_points or len({x for x, _ in pts}) < 2:
        raise InsufficientDataError(
            f"{len(pts)} reliable points (ser <= {threshold:g}); need {min_points}")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class BoundReport:
    inequalities: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [i for i in self.inequalities if not i["ok"]]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def min_slack(self) -> float:
        return min(i["slack"] for i in self.inequalities)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "min_slack": self.min_slack, "inequalities": self.inequalities}


def check_outer_bounds(profile: Sequence, M: int, K: int, J: Sequence[int] | None = None,
                       rtol: float = BOUND_RTOL) -> BoundReport:
    """Evaluate the weighted-sum outer bounds on a per-receiver DoF profile.

    The rotation with receiver ``r`` weighted by ``M`` needs ``J_r >= M``;
    ``J=None`` assumes every receiver qualifies. The aggregate bound, the
    sum of all rotations, is checked only when every receiver qualifies.
    Each single-antenna receiver is also capped at one DoF.
    """
    if len(profile) != K:
        raise ConfigError(f"profile needs {K} entries")
    if J is not None and len(J) != K:
        raise ConfigError(f"J needs {K} entries")
    d = [float(v) for v in profile]
    total = sum(d)
    rep = BoundReport()

    def add(name, lhs, rhs):
        rep.inequalities.append({"name": name, "lhs": lhs, "rhs": float(rhs),
                                 "slack": float(rhs) - lhs, "ok": lhs <= rhs * (1 + rtol)})

    eligible = [J is None or J[r] >= M for r in range(K)]
    for r in range(K):
        add(f"single[{r}]", d[r], 1)
        if eligible[r]:
            add(f"rotation[{r}]", total - d[r] + M * d[r], M)
    if all(eligible):
        add("aggregate", (M + K - 1) * total, M * K)
    return rep


@dataclass
class SimReport:
    config: SweepConfig
    rows: list[SweepRow]
    trials: list[list[TrialResult]]
    fitted_dof: float | None
    fit_error: str | None
    nominal_dof: Fraction
    reference_dof: Fraction
    bound_report: BoundReport

    def to_dict(self) -> dict:
        def frac(f):
            return {"rational": f"{f.numerator}/{f.denominator}", "decimal": float(f)}

        return {
            "config": self.config.to_dict(),
            "rows": [r.to_dict() for r in self.rows],
            "fitted_dof": self.fitted_dof,
            "fit_error": self.fit_error,
            "reliable_ser_threshold": RELIABLE_SER,
            "nominal_dof": frac(self.nominal_dof),
            "reference_dof": frac(self.reference_dof),
            "bound_report": self.bound_report.to_dict(),
        }


def default_threads() -> int:
    env = os.environ.get("CIA_SIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"CIA_SIM_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("CIA_SIM_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def run_sweep(cfg: SweepConfig, threads: int | None = None) -> SimReport:
    """Run every trial over the full power grid; results are thread-count independent."""
    threads = default_threads() if threads is None else threads
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    idx = range(cfg.trials_per_P)
    if threads == 1:
        series = [_trial_series(cfg, t) for t in idx]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            series = list(pool.map(lambda t: _trial_series(cfg, t), idx))
    inst = cfg.instance
    field = ScalarField(inst.field)
    by_p = [[s[i] for s in series] for i in range(len(cfg.P_grid))]
    rows = [aggregate(P, res, field) for P, res in zip(cfg.P_grid, by_p)]
    try:
        fitted, err = estimate_dof(rows, field), None
    except InsufficientDataError as exc:
        fitted, err = None, str(exc)
    bounds = check_outer_bounds(inst.dof_profile(), inst.M, inst.K, inst.J)
    return SimReport(cfg, rows, by_p, fitted, err, inst.nominal_dof(), inst.reference_dof(),
                     bounds)
