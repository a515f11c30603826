"""Alignment scheme for the compound X / broadcast channel without cooperation.

Transmit antenna ``t`` sends, for every receiver ``r``, ``L_r`` integer
sub-streams weighted by the elements of that receiver's pseudo-vector basis.
Receiver ``r`` sees its own ``M * L_r`` sub-streams on distinct
coefficients, while each interferer's ``M * L_rhat`` sub-streams collapse onto
``kappa_rhat`` merged coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import monomials as mono
from .channel import ChannelRealization, ScalarField
from .constellation import (DEFAULT_POINT_CAP, AlignedConstellation, build_constellation,
                            check_point_cap)
from .errors import ConfigError, InfeasibleError

DEFAULT_EPS = 0.05
DEFAULT_T = 10_000
# Complex-path constants left free by the construction; fixed and reported.
COMPLEX_GAMMAS = {"gamma": 1.0, "gamma1": 1.0, "gamma2": 1.0, "gamma3": 1.0, "gamma4": 1.0}


def as_fraction(x) -> Fraction:
    """Exact rational for a user-facing number (``0.05`` -> ``1/20``)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _floor_tol(x: float) -> int:
    # guards exact powers such as 4096 ** (1/12) landing at 1.9999999
    return int(math.floor(x * (1.0 + 1e-12)))


def q_exponent(xi: int, eps: float, field: ScalarField) -> float:
    """Exponent applied to the power in the constellation half-width."""
    if field is ScalarField.COMPLEX:
        return (1 - eps) / (xi + 2 * eps)
    return (1 - eps) / (2 * (xi + eps))


def q_raw(P: float, M: int, xi: int, eps: float, field: ScalarField) -> float:
    if field is ScalarField.COMPLEX:
        return COMPLEX_GAMMAS["gamma"] * P ** q_exponent(xi, eps, field)
    return (P / M) ** q_exponent(xi, eps, field)


def check_eps(eps: float):
    # eps = 0 is accepted as the limiting path of the nominal formulas
    if not 0 <= eps < 0.5:
        raise ConfigError(f"eps must lie in [0, 0.5), got {eps}")


@dataclass(frozen=True)
class CodecParams:
    M: int
    K: int
    J: tuple[int, ...]
    n_list: tuple[int, ...]
    L_list: tuple[int, ...]
    kappa_list: tuple[int, ...]
    xi: int
    eps: float
    P: float
    Q: int
    q_raw: float
    lam: float
    Gamma: float
    field: ScalarField
    T: int = DEFAULT_T
    q_fixed: bool = False

    @property
    def feasible(self) -> bool:
        return self.q_fixed or self.q_raw * (1 + 1e-12) >= 1

    @property
    def total_streams(self) -> int:
        return self.M * sum(self.L_list)

    def power_margin(self) -> float:
        """``lambda * Gamma * Q / sqrt(P/M)``; at most 1 by construction."""
        return self.lam * self.Gamma * self.Q / math.sqrt(self.P / self.M)

    def to_dict(self) -> dict:
        d = {
            "M": self.M, "K": self.K, "J": list(self.J),
            "n_list": list(self.n_list), "L_list": list(self.L_list),
            "kappa_list": list(self.kappa_list), "xi": self.xi,
            "eps": self.eps, "P": self.P, "Q": self.Q, "q_raw": self.q_raw,
            "q_fixed": self.q_fixed, "feasible": self.feasible,
            "lambda": self.lam, "Gamma": self.Gamma,
            "field": self.field.value, "T": self.T,
        }
        nd = nominal_dof(self)
        d["nominal_dof"] = {"rational": f"{nd.numerator}/{nd.denominator}", "decimal": float(nd)}
        if self.field is ScalarField.COMPLEX:
            d["gammas"] = dict(COMPLEX_GAMMAS)
        return d


def build_bases(dims, n_list: Sequence[int], cap: int = mono.DEFAULT_SET_CAP
                ) -> list[mono.PseudoVectorBasis]:
    M, K, J = dims
    return [mono.build_basis(dims, r, n_list[r], cap=cap) for r in range(K)]


def resolve_n_list(M: int, K: int, J: Sequence[int], n_list=None, L=None) -> tuple[int, ...]:
    if (n_list is None) == (L is None):
        raise ConfigError("give exactly one of n_list or L")
    if n_list is None:
        return tuple(mono.choose_n(int(L), M, J, r) for r in range(K))
    if isinstance(n_list, int):
        n_list = [n_list] * K
    n_list = tuple(int(n) for n in n_list)
    if len(n_list) != K or any(n < 1 for n in n_list):
        raise ConfigError(f"n_list must hold {K} positive integers")
    return n_list


def make_params(ch: ChannelRealization, *, P: float, n_list=None, L=None,
                eps: float = DEFAULT_EPS, T: int = DEFAULT_T, q_fixed: int | None = None,
                strict: bool = False, bases: Sequence[mono.PseudoVectorBasis] | None = None
                ) -> CodecParams:
    """Derive the scheme parameters for ``ch`` at transmit power ``P``.

    ``q_fixed`` pins the constellation half-width instead of deriving it from
    ``P``. With ``strict`` a raw ``Q < 1`` raises :class:`InfeasibleError`;
    otherwise ``Q`` is clamped to 1 and ``feasible`` is False.
    """
    cfg = ch.config
    M, K, J = cfg.M, cfg.K, cfg.J
    check_eps(eps)
    if not P > 0:
        raise ConfigError("P must be positive")
    if T < 1:
        raise ConfigError("T must be >= 1")
    n_list = resolve_n_list(M, K, J, n_list, L)
    L_list = tuple(mono.basis_size(n_list[r], M, J, r) for r in range(K))
    kappa_list = tuple(mono.kappa(n_list[r], M, J, r) for r in range(K)) if K > 1 else (0,)
    xi = mono.xi(M, K, J, n_list)

    raw = q_raw(P, M, xi, eps, cfg.field)
    if q_fixed is not None:
        if q_fixed < 1:
            raise ConfigError("q_fixed must be >= 1")
        Q = int(q_fixed)
    else:
        if strict and raw * (1 + 1e-12) < 1:
            raise InfeasibleError(f"Q = {raw:.4g} < 1 at P = {P:g}")
        Q = max(1, _floor_tol(raw))

    if bases is None:
        bases = build_bases((M, K, J), n_list)
    gamma2 = sum(float(np.sum(np.abs(mono.evaluate_set(b.monomials, ch)) ** 2)) for b in bases)
    Gamma = math.sqrt(gamma2)
    lam = math.sqrt(P / M) / (Gamma * Q)
    return CodecParams(M=M, K=K, J=J, n_list=n_list, L_list=L_list, kappa_list=kappa_list,
                       xi=xi, eps=float(eps), P=float(P), Q=Q, q_raw=float(raw), lam=lam,
                       Gamma=Gamma, field=cfg.field, T=int(T), q_fixed=q_fixed is not None)


# -- transmission -----------------------------------------------------------

@dataclass
class SubStreamGrid:
    """Integer sub-streams ``u[r]`` of shape ``(M, L_r, T)``, entries in ``(-Q, Q)``."""

    u: list
    Q: int

    def __post_init__(self):
        self.u = [np.asarray(a, dtype=np.int64) for a in self.u]
        for a in self.u:
            if a.ndim != 3:
                raise ConfigError("each u[r] must have shape (M, L_r, T)")
            if a.size and np.abs(a).max() >= self.Q:
                raise ConfigError(f"sub-stream symbol outside (-{self.Q}, {self.Q})")

    @property
    def T(self) -> int:
        return self.u[0].shape[2]


def random_grid(params: CodecParams, rng: np.random.Generator, T: int | None = None
                ) -> SubStreamGrid:
    T = params.T if T is None else T
    q = params.Q
    u = [rng.integers(-(q - 1), q, size=(params.M, L, T)) for L in params.L_list]
    return SubStreamGrid(u, q)


def basis_values(bases, ch) -> list[np.ndarray]:
    return [mono.evaluate_set(b.monomials, ch) for b in bases]


def encode(grid: SubStreamGrid, bases, params: CodecParams, ch: ChannelRealization,
           nu: list | None = None) -> np.ndarray:
    """Transmit signals ``x[t, m] = lambda * sum_r sum_l nu_rl * u[r][t, l, m]``."""
    if grid.Q != params.Q:
        raise ConfigError("grid and params disagree on Q")
    if len(grid.u) != params.K:
        raise ConfigError("grid needs one block per receiver")
    nu = basis_values(bases, ch) if nu is None else nu
    x = np.zeros((params.M, grid.T), dtype=params.field.dtype)
    for r, block in enumerate(grid.u):
        if block.shape[:2] != (params.M, params.L_list[r]):
            raise ConfigError(f"u[{r}] has shape {block.shape}, expected "
                              f"{(params.M, params.L_list[r], grid.T)}")
        x += np.einsum("l,tlm->tm", nu[r], block)
    return params.lam * x


def receive(ch: ChannelRealization, r: int, s: int, x: np.ndarray) -> np.ndarray:
    """Noiseless received signal ``sum_t h[r][t][s] * x[t]``."""
    return ch.vector(r, s) @ x


# -- receiver side ----------------------------------------------------------

def _row_lookup(target: mono.MonomialSet, source: mono.MonomialSet) -> np.ndarray:
    """Row index in ``target`` of every row of ``source`` (must all be present)."""
    symbols = list(target.symbols)
    src = source.reindex(symbols)
    tgt = np.ascontiguousarray(target.exps)
    keys = {row.tobytes(): i for i, row in enumerate(tgt)}
    try:
        return np.array([keys[np.ascontiguousarray(row).tobytes()] for row in src])
    except KeyError as exc:
        raise ValueError("source monomial not contained in target set") from exc


def build_received_constellation(ch: ChannelRealization, r: int, s_hat: int, bases,
                                 params: CodecParams, cap: int = DEFAULT_POINT_CAP
                                 ) -> AlignedConstellation:
    """Constellation seen by receiver ``r`` in state ``s_hat``.

    Label layout: ``M * L_r`` favorite symbols ordered ``(t, l)``, then for
    every interferer ``rhat != r`` (ascending) its ``kappa_rhat`` merged
    symbols in alignment-box row order. ``merged_index[rhat][t, l]`` is the
    label column that interferer sub-stream ``(t, l)`` is merged into.
    """
    M, K, Q = params.M, params.K, params.Q
    if not 0 <= s_hat < ch.config.J[r]:
        raise ConfigError(f"state {s_hat} out of range for receiver {r}")
    radices = [2 * Q - 1] * (M * params.L_list[r])
    radices += [2 * M * Q - 1] * sum(params.kappa_list[rh] for rh in range(K) if rh != r)
    size = 1
    for R in radices:
        size *= R
    check_point_cap(size, cap)

    scaling = [mono.h_sym(r, t, s_hat) for t in range(M)]
    coefs, mons = [], []
    for sym in scaling:
        S = mono.scale(bases[r].monomials, sym)
        coefs.append(mono.evaluate_set(S, ch))
        mons.extend(S)
    merged_index = {}
    col = M * params.L_list[r]
    for rh in range(K):
        if rh == r:
            continue
        box = mono.alignment_box(bases[rh], scaling)
        coefs.append(mono.evaluate_set(box, ch))
        mons.extend(box)
        merged_index[rh] = col + np.stack(
            [_row_lookup(box, mono.scale(bases[rh].monomials, sym)) for sym in scaling]
        )
        col += len(box)
    offsets = [(R - 1) // 2 for R in radices]
    return build_constellation(
        np.concatenate(coefs), radices, offsets, M * params.L_list[r], params.field,
        scale=params.lam, receiver=r, state=s_hat, monomials=mons,
        merged_index=merged_index, cap=cap,
    )


def true_labels(c: AlignedConstellation, grid: SubStreamGrid) -> np.ndarray:
    """Label rows ``(T, n_coef)`` the noiseless received signal corresponds to."""
    T = grid.T
    labels = np.zeros((len(c.radices), T), dtype=np.int64)
    labels[: c.n_favorite] = grid.u[c.receiver].reshape(-1, T)
    for rh, cols in c.merged_index.items():
        np.add.at(labels, cols.ravel(), grid.u[rh].reshape(-1, T))
    return labels.T


# -- DoF accounting ---------------------------------------------------------

def nominal_dof(params: CodecParams, eps=None) -> Fraction:
    """Total nominal DoF ``M * sum(L) * (1 - eps) / (xi + eps)`` as an exact rational."""
    e = as_fraction(params.eps if eps is None else eps)
    return Fraction(params.M * sum(params.L_list)) * (1 - e) / (params.xi + e)


def per_receiver_nominal_dof(params: CodecParams, eps=None) -> list[Fraction]:
    e = as_fraction(params.eps if eps is None else eps)
    return [Fraction(params.M * L) * (1 - e) / (params.xi + e) for L in params.L_list]


def nominal_dof_closed_form(M: int, K: int, J: Sequence[int], n_list, eps=0) -> Fraction:
    """Same as :func:`nominal_dof` from dimensions alone (no channel needed)."""
    n_list = resolve_n_list(M, K, J, n_list=n_list)
    e = as_fraction(eps)
    L = [mono.basis_size(n_list[r], M, J, r) for r in range(K)]
    return Fraction(M * sum(L)) * (1 - e) / (mono.xi(M, K, J, n_list) + e)


@dataclass(frozen=True)
class DofReference:
    M: int
    K: int
    value: Fraction
    real_lift_bound: Fraction

    def to_dict(self) -> dict:
        return {
            "M": self.M, "K": self.K,
            "dof": f"{self.value.numerator}/{self.value.denominator}",
            "dof_decimal": float(self.value),
            "real_lift": f"{self.real_lift_bound.numerator}/{self.real_lift_bound.denominator}",
            "real_lift_decimal": float(self.real_lift_bound),
        }


def dof_reference(M: int, K: int) -> DofReference:
    """Optimal DoF ``MK/(M+K-1)`` and the real-decomposition bound ``2MK/(2M+2K-1)``."""
    if M < 1 or K < 1:
        raise ConfigError("M and K must be >= 1")
    return DofReference(M, K, Fraction(M * K, M + K - 1), Fraction(2 * M * K, 2 * M + 2 * K - 1))
