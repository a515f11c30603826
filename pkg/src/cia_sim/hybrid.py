"""Zero-forcing plus alignment for ``K = M`` receivers.

Receivers ``0 .. M-2`` have a single known state and are served
interference-free by zero-forcing precoders. The last receiver (index
``M-1``) has ``J_M`` states; the other receivers' sub-streams reach it
through the gains ``g[r, i, s]`` and are aligned there, leaving room for its
own ``L`` sub-streams on the powers of a random real ``beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space

from . import monomials as mono
from .channel import ChannelRealization, ScalarField, make_rng
from .codec import (DEFAULT_EPS, DEFAULT_T, _floor_tol, _row_lookup, as_fraction, check_eps,
                    q_raw)
from .constellation import (DEFAULT_POINT_CAP, AlignedConstellation, build_constellation,
                            check_point_cap)
from .errors import ConfigError, DiagnosticError, InfeasibleError, SizeCapError
from .monomials import BETA, g_sym, hv_sym

ORTHO_RTOL = 1e-9
BETA_RANGE = (1.1, 2.0)


def check_hybrid_config(ch: ChannelRealization):
    cfg = ch.config
    if cfg.M < 2:
        raise ConfigError("hybrid scheme needs M >= 2")
    if cfg.K != cfg.M:
        raise ConfigError(f"hybrid scheme needs K = M, got K={cfg.K}, M={cfg.M}")
    if any(j != 1 for j in cfg.J[:-1]):
        raise ConfigError("receivers 0..M-2 must have exactly one state")


def _random_direction(rng, dim, field: ScalarField):
    c = rng.standard_normal(dim)
    if field is ScalarField.COMPLEX:
        c = c + 1j * rng.standard_normal(dim)
    return c


@dataclass(frozen=True)
class PrecoderSet:
    V: tuple[np.ndarray, ...]
    v_M: np.ndarray
    sigma_max: tuple[float, ...]
    complement_dims: tuple[int, ...]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(int(np.linalg.matrix_rank(V)) for V in self.V)


def build_precoders(ch: ChannelRealization, rng: np.random.Generator | None = None
                    ) -> PrecoderSet:
    """Random unit-norm precoders in the orthogonal complements of the other
    single-state receivers' channels.

    For ``M >= 3`` the complement for each ``V[r]`` is two-dimensional, so
    its ``M`` columns are linearly dependent; only their gains matter.
    """
    check_hybrid_config(ch)
    M = ch.config.M
    field = ch.config.field
    rng = make_rng(ch.config.seed, 0x5EED) if rng is None else rng
    H = np.array([ch.vector(r, 0) for r in range(M - 1)])  # rows h_r^T

    def complement(rows: np.ndarray) -> np.ndarray:
        if len(rows) == 0:
            return np.eye(M, dtype=field.dtype)
        if np.linalg.matrix_rank(rows) < len(rows):
            raise DiagnosticError("channel vectors are linearly dependent (non-generic channel)")
        return null_space(rows)

    Vs, dims = [], []
    for r in range(M - 1):
        N = complement(np.delete(H, r, axis=0))
        dims.append(N.shape[1])
        cols = []
        for _ in range(M):
            v = N @ _random_direction(rng, N.shape[1], field)
            cols.append(v / np.linalg.norm(v))
        Vs.append(np.column_stack(cols))
    N = complement(H)
    dims.append(N.shape[1])
    v_M = N @ _random_direction(rng, N.shape[1], field)
    v_M = v_M / np.linalg.norm(v_M)
    for V in Vs:
        V.setflags(write=False)
    v_M.setflags(write=False)
    sig = tuple(float(np.linalg.norm(V, 2)) for V in Vs)
    return PrecoderSet(tuple(Vs), v_M, sig, tuple(dims))


def orthogonality_residuals(ch: ChannelRealization, pre: PrecoderSet) -> dict:
    """Relative residuals ``|h^T v| / (|h| |v|)`` of every zero-forcing constraint."""
    M = ch.config.M
    out = {}
    for r in range(M - 1):
        for rh in range(M - 1):
            if rh == r:
                continue
            h = ch.vector(rh, 0)
            for i in range(M):
                v = pre.V[r][:, i]
                out[("V", r, i, rh)] = abs(h @ v) / (np.linalg.norm(h) * np.linalg.norm(v))
    for rh in range(M - 1):
        h = ch.vector(rh, 0)
        out[("vM", rh)] = abs(h @ pre.v_M) / (np.linalg.norm(h) * np.linalg.norm(pre.v_M))
    return out


def max_orthogonality_residual(ch, pre) -> float:
    res = orthogonality_residuals(ch, pre)
    return max(res.values()) if res else 0.0


def compute_g(ch: ChannelRealization, pre: PrecoderSet) -> np.ndarray:
    """Gains ``g[r, i, s] = h_last(s)^T v_i^[r]`` seen by the last receiver."""
    M = ch.config.M
    H_last = ch.h[M - 1]  # (M, J_M)
    return np.einsum("ts,rti->ris", H_last, np.stack(pre.V))


def degenerate_g(ch: ChannelRealization, pre: PrecoderSet, g: np.ndarray | None = None,
                 rtol: float = 1e-12) -> list[tuple[int, int, int]]:
    """Indices of gains that vanish (precoder column orthogonal to a state)."""
    g = compute_g(ch, pre) if g is None else g
    M = ch.config.M
    out = []
    for r, i, s in np.ndindex(g.shape):
        ref = np.linalg.norm(ch.vector(M - 1, s)) * np.linalg.norm(pre.V[r][:, i])
        if abs(g[r, i, s]) <= rtol * ref:
            out.append((r, i, s))
    return out


def symbol_values(ch: ChannelRealization, pre: PrecoderSet, beta: float) -> dict:
    """Numeric value of every hybrid symbol (g, h^T v_M, beta)."""
    M = ch.config.M
    g = compute_g(ch, pre)
    vals = {g_sym(r, i, s): g[r, i, s] for r, i, s in np.ndindex(g.shape)}
    for s in range(ch.config.J[M - 1]):
        vals[hv_sym(s)] = ch.vector(M - 1, s) @ pre.v_M
    vals[BETA] = beta
    return vals


def sample_beta(rng: np.random.Generator) -> float:
    return float(rng.uniform(*BETA_RANGE))


# -- bases and parameters ---------------------------------------------------

@dataclass(frozen=True)
class HybridBases:
    B: tuple[mono.PseudoVectorBasis, ...]
    beta: mono.MonomialSet
    n: int

    @property
    def L(self) -> int:
        return len(self.beta)


def hybrid_L(M: int, J_M: int, n: int) -> int:
    return n ** (M * J_M)


def hybrid_kappa(M: int, J_M: int, n: int) -> int:
    return n ** (M * (J_M - 1)) * (n + 1) ** M


def hybrid_xi(M: int, J_M: int, n: int) -> int:
    return (M - 1) * hybrid_kappa(M, J_M, n) + hybrid_L(M, J_M, n)


def build_hybrid_bases(M: int, J_M: int, n: int, cap: int = mono.DEFAULT_SET_CAP) -> HybridBases:
    """Bases over the gains ``g[r, ., .]`` for ``r < M-1`` and ``{beta^l}`` for the last receiver."""
    if M < 2 or J_M < 1 or n < 1:
        raise ConfigError("need M >= 2, J_M >= 1, n >= 1")
    L = hybrid_L(M, J_M, n)
    if L > cap:
        raise SizeCapError(f"basis size {L} exceeds cap {cap}")
    B = []
    for r in range(M - 1):
        ranges = {g_sym(r, i, s): (1, n) for i in range(M) for s in range(J_M)}
        B.append(mono.PseudoVectorBasis(r, n, mono.MonomialSet.box(ranges, cap=cap)))
    beta = mono.MonomialSet([BETA], np.arange(1, L + 1)[:, None], unique=True)
    return HybridBases(tuple(B), beta, n)


@dataclass(frozen=True)
class HybridParams:
    M: int
    J_M: int
    n: int
    L: int
    kappa: int
    xi: int
    beta: float
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

    def to_dict(self) -> dict:
        nd = hybrid_nominal_dof(self)
        return {
            "M": self.M, "J_M": self.J_M, "n": self.n, "L": self.L, "kappa": self.kappa,
            "xi": self.xi, "beta": self.beta, "eps": self.eps, "P": self.P, "Q": self.Q,
            "q_raw": self.q_raw, "q_fixed": self.q_fixed, "feasible": self.feasible,
            "lambda": self.lam, "Gamma": self.Gamma, "field": self.field.value, "T": self.T,
            "nominal_dof": {"rational": f"{nd.numerator}/{nd.denominator}", "decimal": float(nd)},
        }


def make_hybrid_params(ch: ChannelRealization, pre: PrecoderSet, bases: HybridBases, *,
                       P: float, beta: float, eps: float = DEFAULT_EPS, T: int = DEFAULT_T,
                       q_fixed: int | None = None, strict: bool = False) -> HybridParams:
    check_hybrid_config(ch)
    check_eps(eps)
    if not P > 0:
        raise ConfigError("P must be positive")
    M = ch.config.M
    J_M = ch.config.J[M - 1]
    n = bases.n
    L, kap, xi = hybrid_L(M, J_M, n), hybrid_kappa(M, J_M, n), hybrid_xi(M, J_M, n)
    # the power here is P itself, not P/M
    raw = q_raw(P, 1, xi, eps, ch.config.field)
    if q_fixed is not None:
        if q_fixed < 1:
            raise ConfigError("q_fixed must be >= 1")
        Q = int(q_fixed)
    else:
        if strict and raw * (1 + 1e-12) < 1:
            raise InfeasibleError(f"Q = {raw:.4g} < 1 at P = {P:g}")
        Q = max(1, _floor_tol(raw))
    vals = symbol_values(ch, pre, beta)
    gamma2 = 0.0
    for r, B in enumerate(bases.B):
        nu = mono.evaluate_set(B.monomials, extra=vals)
        gamma2 += pre.sigma_max[r] ** 2 * M * float(np.sum(np.abs(nu) ** 2))
    beta_pows = mono.evaluate_set(bases.beta, extra=vals)
    gamma2 += float(np.linalg.norm(pre.v_M) ** 2 * np.sum(np.abs(beta_pows) ** 2))
    Gamma = math.sqrt(gamma2)
    lam = math.sqrt(P) / (Gamma * Q)
    return HybridParams(M=M, J_M=J_M, n=n, L=L, kappa=kap, xi=xi, beta=float(beta),
                        eps=float(eps), P=float(P), Q=Q, q_raw=float(raw), lam=lam,
                        Gamma=Gamma, field=ch.config.field, T=int(T),
                        q_fixed=q_fixed is not None)


# -- transmission -----------------------------------------------------------

@dataclass
class HybridStreams:
    """``u[r]`` of shape ``(M, L, T)`` for ``r < M-1`` and ``u_M`` of shape ``(L, T)``."""

    u: list
    u_M: np.ndarray
    Q: int

    def __post_init__(self):
        self.u = [np.asarray(a, dtype=np.int64) for a in self.u]
        self.u_M = np.asarray(self.u_M, dtype=np.int64)
        for a in self.u + [self.u_M]:
            if a.size and np.abs(a).max() >= self.Q:
                raise ConfigError(f"sub-stream symbol outside (-{self.Q}, {self.Q})")

    @property
    def T(self) -> int:
        return self.u_M.shape[1]


def random_streams(params: HybridParams, rng: np.random.Generator, T: int | None = None
                   ) -> HybridStreams:
    T = params.T if T is None else T
    q = params.Q
    u = [rng.integers(-(q - 1), q, size=(params.M, params.L, T)) for _ in range(params.M - 1)]
    return HybridStreams(u, rng.integers(-(q - 1), q, size=(params.L, T)), q)


def encode_hybrid(streams: HybridStreams, pre: PrecoderSet, bases: HybridBases,
                  params: HybridParams, values: dict) -> np.ndarray:
    """``x = sum_r V[r] w[r] + v_M * omega_M`` with every branch scaled by lambda."""
    M = params.M
    x = np.zeros((M, streams.T), dtype=params.field.dtype)
    for r in range(M - 1):
        nu = mono.evaluate_set(bases.B[r].monomials, extra=values)
        w = params.lam * np.einsum("l,ilm->im", nu, streams.u[r])
        x += pre.V[r] @ w
    beta_pows = mono.evaluate_set(bases.beta, extra=values)
    omega = params.lam * (beta_pows @ streams.u_M)
    x += np.outer(pre.v_M, omega)
    return x


@dataclass
class CleanReport:
    residuals: list = field(default_factory=list)
    references: list = field(default_factory=list)

    @property
    def max_relative(self) -> float:
        rel = [r / ref if ref > 0 else 0.0 for r, ref in zip(self.residuals, self.references)]
        return max(rel) if rel else 0.0

    def ok(self, rtol: float = ORTHO_RTOL) -> bool:
        return self.max_relative < rtol


def receiver_clean_check(ch: ChannelRealization, pre: PrecoderSet, bases: HybridBases,
                         params: HybridParams, streams: HybridStreams, values: dict,
                         receivers=None) -> CleanReport:
    """Compare each zero-forced receiver's noiseless signal with its own-branch prediction.

    The residual is normalised by ``|h_r| * |x|_F`` (what the receiver would
    collect without zero-forcing), so pure leakage is measured on the scale of
    the transmitted signal.
    """
    M = params.M
    x = encode_hybrid(streams, pre, bases, params, values)
    report = CleanReport()
    for r in (range(M - 1) if receivers is None else receivers):
        if not 0 <= r < M - 1:
            raise ConfigError("clean check applies to receivers 0..M-2")
        h = ch.vector(r, 0)
        y = h @ x
        nu = mono.evaluate_set(bases.B[r].monomials, extra=values)
        gains = h @ pre.V[r]  # (M,)
        expected = params.lam * np.einsum("i,l,ilm->m", gains, nu, streams.u[r])
        report.residuals.append(float(np.linalg.norm(y - expected)))
        report.references.append(float(np.linalg.norm(h) * np.linalg.norm(x)))
    return report


def receiver_M_constellation(ch: ChannelRealization, s_hat: int, pre: PrecoderSet,
                             bases: HybridBases, params: HybridParams, values: dict,
                             cap: int = DEFAULT_POINT_CAP) -> AlignedConstellation:
    """Constellation at the last receiver in state ``s_hat``.

    Labels: ``L`` favorite symbols on ``(h^T v_M) beta^l``, then for each
    ``r < M-1`` its ``kappa`` merged symbols (range ``(-MQ, MQ)``).
    """
    M, Q = params.M, params.Q
    if not 0 <= s_hat < params.J_M:
        raise ConfigError(f"state {s_hat} out of range")
    radices = [2 * Q - 1] * params.L + [2 * M * Q - 1] * ((M - 1) * params.kappa)
    size = 1
    for R in radices:
        size *= R
    check_point_cap(size, cap)

    fav = bases.beta.scale(hv_sym(s_hat))
    coefs, mons = [mono.evaluate_set(fav, extra=values)], list(fav)
    merged_index = {}
    col = params.L
    for r in range(M - 1):
        syms = [g_sym(r, i, s_hat) for i in range(M)]
        box = mono.alignment_box(bases.B[r], syms)
        coefs.append(mono.evaluate_set(box, extra=values))
        mons.extend(box)
        merged_index[r] = col + np.stack(
            [_row_lookup(box, bases.B[r].monomials.scale(s)) for s in syms]
        )
        col += len(box)
    offsets = [(R - 1) // 2 for R in radices]
    return build_constellation(
        np.concatenate(coefs), radices, offsets, params.L, params.field,
        scale=params.lam, receiver=M - 1, state=s_hat, monomials=mons,
        merged_index=merged_index, cap=cap,
    )


def hybrid_true_labels(c: AlignedConstellation, streams: HybridStreams) -> np.ndarray:
    T = streams.T
    labels = np.zeros((len(c.radices), T), dtype=np.int64)
    labels[: c.n_favorite] = streams.u_M
    for r, cols in c.merged_index.items():
        np.add.at(labels, cols.ravel(), streams.u[r].reshape(-1, T))
    return labels.T


def receiver_r_constellation(ch: ChannelRealization, r: int, pre: PrecoderSet,
                             bases: HybridBases, params: HybridParams, values: dict,
                             cap: int = DEFAULT_POINT_CAP) -> AlignedConstellation:
    """Interference-free constellation of a zero-forced receiver ``r < M-1``."""
    Q = params.Q
    gains = ch.vector(r, 0) @ pre.V[r]
    nu = mono.evaluate_set(bases.B[r].monomials, extra=values)
    coefs = (gains[:, None] * nu[None, :]).ravel()
    radices = [2 * Q - 1] * len(coefs)
    return build_constellation(coefs, radices, [Q - 1] * len(coefs), len(coefs), params.field,
                               scale=params.lam, receiver=r, state=0, cap=cap)


# -- DoF accounting ---------------------------------------------------------

def hybrid_nominal_dof_closed_form(M: int, J_M: int, n: int, eps=0) -> Fraction:
    e = as_fraction(eps)
    L = hybrid_L(M, J_M, n)
    return Fraction((M - 1) * M * L + L) * (1 - e) / (hybrid_xi(M, J_M, n) + e)


def hybrid_nominal_dof(params: HybridParams, eps=None) -> Fraction:
    return hybrid_nominal_dof_closed_form(
        params.M, params.J_M, params.n, params.eps if eps is None else eps)


def hybrid_profile(M: int, J_M: int, n: int, eps=0) -> list[Fraction]:
    """Per-receiver nominal DoF: ``M L`` shares for zero-forced receivers, ``L`` for the last."""
    e = as_fraction(eps)
    L = hybrid_L(M, J_M, n)
    unit = (1 - e) / (hybrid_xi(M, J_M, n) + e)
    return [Fraction(M * L) * unit] * (M - 1) + [Fraction(L) * unit]
