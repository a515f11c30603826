"""Exact monomial algebra for modulation pseudo-vectors.

Every pseudo-vector of the alignment scheme is a product of channel
coefficients (or precoder gains) raised to small positive powers. Comparing
those products by exponent vector instead of by floating-point value turns
"distinct almost surely" into exact set identities.

Two representations are used:

* :class:`Monomial` -- a sparse, canonical, hashable exponent map. Good for
  single elements and user-facing code.
* :class:`MonomialSet` -- a dense ``(N, S)`` integer matrix over a sorted
  symbol tuple. All bulk set algebra (scale, union, intersection) runs on
  these matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, SizeCapError, UnresolvedSymbolError

DEFAULT_SET_CAP = 10**7


class Symbol(NamedTuple):
    kind: str
    index: tuple

    def __str__(self):
        return f"{self.kind}{self.index}" if self.index else self.kind


def h_sym(r: int, t: int, s: int) -> Symbol:
    """Channel coefficient from antenna ``t`` to receiver ``r`` in state ``s``."""
    return Symbol("h", (r, t, s))


def g_sym(r: int, i: int, s: int) -> Symbol:
    """Gain of precoder column ``i`` of receiver ``r`` seen by the last receiver in state ``s``."""
    return Symbol("g", (r, i, s))


def hv_sym(s: int) -> Symbol:
    """Gain of the last receiver's own precoder seen in state ``s``."""
    return Symbol("hv", (s,))


BETA = Symbol("beta", ())


class Monomial:
    """Product of symbols with positive integer exponents.

    Zero exponents are dropped, so two monomials are equal exactly when their
    exponent maps are equal.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, exponents: Mapping[Symbol, int] | Iterable = ()):
        if isinstance(exponents, Mapping):
            exponents = exponents.items()
        acc: dict[Symbol, int] = {}
        for sym, e in exponents:
            e = int(e)
            if e < 0:
                raise ValueError(f"negative exponent for {sym}")
            if e:
                acc[Symbol(*sym)] = acc.get(Symbol(*sym), 0) + e
        self._items = tuple(sorted(acc.items()))
        self._hash = hash(self._items)

    @property
    def exponents(self) -> dict[Symbol, int]:
        return dict(self._items)

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return tuple(s for s, _ in self._items)

    def __getitem__(self, sym: Symbol) -> int:
        return dict(self._items).get(sym, 0)

    def __mul__(self, other: "Monomial | Symbol") -> "Monomial":
        if isinstance(other, Monomial):
            return Monomial(list(self._items) + list(other._items))
        if isinstance(other, tuple):
            return Monomial(list(self._items) + [(other, 1)])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Monomial) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Monomial"):
        return self._items < other._items

    def degree(self) -> int:
        return sum(e for _, e in self._items)

    def __repr__(self):
        if not self._items:
            return "Monomial(1)"
        body = "*".join(str(s) if e == 1 else f"{s}^{e}" for s, e in self._items)
        return f"Monomial({body})"


class MonomialSet:
    """A set of monomials stored as unique rows of an exponent matrix."""

    def __init__(self, symbols: Sequence[Symbol], exps: np.ndarray, *, unique: bool = False):
        symbols = tuple(Symbol(*s) for s in symbols)
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, len(symbols))
        order = sorted(range(len(symbols)), key=lambda i: symbols[i])
        symbols = tuple(symbols[i] for i in order)
        exps = exps[:, order]
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols")
        if not unique and len(exps) > 1:
            exps = np.unique(exps, axis=0)
        self.symbols = symbols
        self.exps = exps
        self.exps.setflags(write=False)

    @classmethod
    def from_monomials(cls, monomials: Iterable[Monomial]) -> "MonomialSet":
        monomials = list(monomials)
        symbols = sorted({s for m in monomials for s in m.symbols})
        col = {s: j for j, s in enumerate(symbols)}
        exps = np.zeros((len(monomials), len(symbols)), dtype=np.int64)
        for i, m in enumerate(monomials):
            for s, e in m.exponents.items():
                exps[i, col[s]] = e
        return cls(symbols, exps)

    @classmethod
    def box(cls, ranges: Mapping[Symbol, tuple[int, int]], cap: int = DEFAULT_SET_CAP
            ) -> "MonomialSet":
        """All monomials with exponent of each symbol in its inclusive ``(lo, hi)`` range."""
        symbols = sorted(ranges)
        sizes = [ranges[s][1] - ranges[s][0] + 1 for s in symbols]
        total = 1
        for k in sizes:
            if k < 1:
                raise ConfigError("empty exponent range")
            total *= k
        if total > cap:
            raise SizeCapError(f"monomial set of size {total} exceeds cap {cap}")
        grids = np.indices(sizes, dtype=np.int64).reshape(len(symbols), -1).T
        lows = np.array([ranges[s][0] for s in symbols], dtype=np.int64)
        return cls(symbols, grids + lows, unique=True)

    def __len__(self):
        return len(self.exps)

    def __iter__(self):
        for row in self.exps:
            yield Monomial(zip(self.symbols, row))

    def __contains__(self, m: Monomial) -> bool:
        if any(s not in self.symbols for s in m.symbols):
            return False
        target = np.array([m[s] for s in self.symbols])
        return bool((self.exps == target).all(axis=1).any())

    def to_frozenset(self) -> frozenset:
        return frozenset(self)

    def reindex(self, symbols: Sequence[Symbol]) -> np.ndarray:
        """Exponent matrix expressed over a superset of this set's symbols."""
        col = {s: j for j, s in enumerate(symbols)}
        out = np.zeros((len(self), len(symbols)), dtype=np.int64)
        for j, s in enumerate(self.symbols):
            if s not in col:
                raise ValueError(f"{s} missing from target symbol list")
            out[:, col[s]] = self.exps[:, j]
        return out

    def scale(self, sym: Symbol) -> "MonomialSet":
        sym = Symbol(*sym)
        symbols = sorted(set(self.symbols) | {sym})
        exps = self.reindex(symbols)
        exps[:, symbols.index(sym)] += 1
        return MonomialSet(symbols, exps, unique=True)

    def __eq__(self, other):
        if not isinstance(other, MonomialSet) or len(self) != len(other):
            return NotImplemented if not isinstance(other, MonomialSet) else False
        return union_size([self, other]) == len(self)

    def __repr__(self):
        return f"MonomialSet(|S|={len(self)}, symbols={len(self.symbols)})"


def _common(sets: Sequence[MonomialSet]) -> tuple[list[Symbol], list[np.ndarray]]:
    symbols = sorted({s for S in sets for s in S.symbols})
    return symbols, [S.reindex(symbols) for S in sets]


def _row_view(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


def scale(S: MonomialSet, sym: Symbol) -> MonomialSet:
    """Multiply every element of ``S`` by ``sym`` (exponent +1)."""
    return S.scale(sym)


def union(sets: Sequence[MonomialSet]) -> MonomialSet:
    symbols, mats = _common(sets)
    if not mats:
        return MonomialSet((), np.zeros((0, 0)))
    return MonomialSet(symbols, np.concatenate(mats, axis=0))


def union_size(sets: Sequence[MonomialSet]) -> int:
    """Exact cardinality of the union under monomial equality."""
    if not sets:
        return 0
    symbols, mats = _common(sets)
    stacked = np.concatenate(mats, axis=0)
    if stacked.shape[1] == 0:
        return int(len(stacked) > 0)
    return int(len(np.unique(_row_view(stacked))))


def intersection_size(a: MonomialSet, b: MonomialSet) -> int:
    symbols, (ea, eb) = _common([a, b])
    if not symbols:
        return int(len(ea) > 0 and len(eb) > 0)
    return int(len(np.intersect1d(_row_view(ea), _row_view(eb))))


# -- closed forms -----------------------------------------------------------

def _check_receiver(K: int, J: Sequence[int], r: int):
    if len(J) != K:
        raise ConfigError("len(J) must equal K")
    if not 0 <= r < K:
        raise ConfigError(f"receiver index {r} out of range for K={K}")


def basis_exponent_count(M: int, J: Sequence[int], r: int) -> int:
    """Number of symbols a receiver's basis ranges over: M * (sum(J) - J[r])."""
    return M * (sum(J) - J[r])


def basis_size(n: int, M: int, J: Sequence[int], r: int) -> int:
    return n ** basis_exponent_count(M, J, r)


def kappa(n: int, M: int, J: Sequence[int], r_hat: int) -> int:
    """Closed-form merged-interference count for the sub-streams of ``r_hat``.

    Equals the size of the alignment box (exponents of the ``M`` scaling
    symbols in ``[1, n+1]``, all others in ``[1, n]``), which contains the
    union of the scaled bases.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rest = sum(J) - J[r_hat] - 1
    if rest < 0:
        raise ConfigError("kappa needs at least one other receiver (K >= 2)")
    return n ** (M * rest) * (n + 1) ** M


def interference_union_size(n: int, M: int, J: Sequence[int], r_hat: int) -> int:
    """Exact size of ``union_t scale(B_rhat, h(r, t, s))`` for any ``r != r_hat``.

    On the ``M`` scaling coordinates a point of the union has at most one
    exponent equal to ``n+1`` and is not the all-ones vector, which gives
    ``n^M - 1 + M n^(M-1)``; the remaining coordinates are free in ``[1, n]``.
    It is always strictly smaller than :func:`kappa`.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rest = sum(J) - J[r_hat] - 1
    if rest < 0:
        raise ConfigError("needs at least one other receiver (K >= 2)")
    return n ** (M * rest) * (n**M - 1 + M * n ** (M - 1))


def xi(M: int, K: int, J: Sequence[int], n_list: Sequence[int]) -> int:
    """Worst-case number of distinct received coefficients over receivers."""
    if len(n_list) != K or len(J) != K:
        raise ConfigError("n_list and J must have K entries")
    L = [basis_size(n_list[r], M, J, r) for r in range(K)]
    if K == 1:
        return M * L[0]
    kap = [kappa(n_list[r], M, J, r) for r in range(K)]
    return max(sum(kap) - kap[r] + M * L[r] for r in range(K))


def choose_n(L: int, M: int, J: Sequence[int], r: int) -> int:
    """Largest ``n >= 1`` with ``n ** (M * (sum(J) - J[r])) <= L``."""
    if L < 1:
        raise ConfigError("L must be >= 1")
    d = basis_exponent_count(M, J, r)
    if d == 0:
        return 1
    n = max(1, int(round(L ** (1.0 / d))))
    while n > 1 and n**d > L:
        n -= 1
    while (n + 1) ** d <= L:
        n += 1
    return n


# -- bases ----------------------------------------------------------------

@dataclass(frozen=True)
class PseudoVectorBasis:
    receiver: int
    n: int
    monomials: MonomialSet

    def __len__(self):
        return len(self.monomials)

    @property
    def elements(self) -> frozenset:
        return self.monomials.to_frozenset()

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return self.monomials.symbols


def build_basis(dims, r: int, n: int, cap: int = DEFAULT_SET_CAP) -> PseudoVectorBasis:
    """Basis of receiver ``r``: every product of other receivers' coefficients
    with exponents in ``[1, n]``.

    ``dims`` is ``(M, K, J)``.
    """
    M, K, J = dims
    _check_receiver(K, J, r)
    if n < 1:
        raise ConfigError("n must be >= 1")
    size = basis_size(n, M, J, r)
    if size > cap:
        raise SizeCapError(f"basis size {size} exceeds cap {cap}")
    ranges = {
        h_sym(rp, t, s): (1, n)
        for rp in range(K) if rp != r
        for t in range(M)
        for s in range(J[rp])
    }
    return PseudoVectorBasis(r, n, MonomialSet.box(ranges, cap=cap))


def alignment_box(basis: PseudoVectorBasis, scaling: Sequence[Symbol],
                  cap: int = DEFAULT_SET_CAP) -> MonomialSet:
    """Set of merged coefficients a receiver allocates to one interferer.

    Exponents of the ``scaling`` symbols range over ``[1, n+1]``; the rest
    keep the basis range. Its size is :func:`kappa`, and it contains
    ``union(scale(basis, s) for s in scaling)``.
    """
    n = basis.n
    ranges = {s: (1, n) for s in basis.symbols}
    for s in scaling:
        ranges[Symbol(*s)] = (1, n + 1)
    return MonomialSet.box(ranges, cap=cap)


# -- numeric evaluation ---------------------------------------------------

def _resolve(sym: Symbol, ch, extra):
    if extra is not None and sym in extra:
        return extra[sym]
    if sym.kind == "h" and ch is not None:
        try:
            return ch.coeff(*sym.index)
        except IndexError as exc:
            raise UnresolvedSymbolError(str(sym)) from exc
    raise UnresolvedSymbolError(str(sym))


def evaluate(m: Monomial, ch=None, extra: Mapping[Symbol, complex] | None = None):
    value = 1.0
    for sym, e in m.exponents.items():
        value = value * _resolve(sym, ch, extra) ** e
    return value


def evaluate_set(S: MonomialSet, ch=None, extra: Mapping[Symbol, complex] | None = None
                 ) -> np.ndarray:
    """Numeric values of every element of ``S`` (row order of ``S.exps``)."""
    vals = np.array([_resolve(s, ch, extra) for s in S.symbols])
    if len(vals) == 0:
        return np.ones(len(S))
    return np.prod(vals[None, :] ** S.exps, axis=1)


def numeric_min_separation(values: np.ndarray) -> float:
    """Smallest pairwise relative gap ``|a-b| / max(|a|,|b|)`` among ``values``."""
    values = np.asarray(values)
    if len(values) < 2:
        return np.inf
    if np.iscomplexobj(values):
        from scipy.spatial import cKDTree

        pts = np.column_stack([values.real, values.imag])
        d, j = cKDTree(pts).query(pts, k=2)
        scale = np.maximum(np.abs(values), np.abs(values[j[:, 1]]))
        return float(np.min(d[:, 1] / scale))
    v = np.sort(values)
    gaps = np.diff(v)
    scale = np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    return float(np.min(gaps / scale))


# -- alignment verification -------------------------------------------------

@dataclass
class AlignmentReport:
    receiver: int
    state: int
    favorite_union: int
    expected_favorite: int
    favorite_pairwise_disjoint: bool
    interference: list
    disjoint: bool
    box_disjoint: bool
    numeric_min_separation: float | None

    @property
    def property1(self) -> bool:
        return self.favorite_pairwise_disjoint and self.favorite_union == self.expected_favorite

    @property
    def property2(self) -> bool:
        return self.disjoint

    @property
    def property3_exact(self) -> bool:
        return all(i["size"] == i["kappa"] for i in self.interference)

    @property
    def property3_contained(self) -> bool:
        return all(i["within_box"] for i in self.interference)

    @property
    def violations(self) -> list[str]:
        """Alignment requirements that fail.

        Property (3) is required only as containment in the kappa-sized
        alignment box; exact equality with kappa is reported separately.
        """
        out = []
        if not self.property1:
            out.append("favorite_distinct")
        if not self.property2:
            out.append("favorite_interference_disjoint")
        if not self.box_disjoint:
            out.append("favorite_box_disjoint")
        if not self.property3_contained:
            out.append("interference_within_box")
        return out

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "state": self.state,
            "favorite_union": self.favorite_union,
            "interference_unions": [dict(i) for i in self.interference],
            "disjoint": self.disjoint,
            "box_disjoint": self.box_disjoint,
            "expected": {
                "favorite_union": self.expected_favorite,
                "kappa": [i["kappa"] for i in self.interference],
            },
            "properties": {
                "favorite_distinct": self.property1,
                "favorite_interference_disjoint": self.property2,
                "interference_equals_kappa": self.property3_exact,
                "interference_within_box": self.property3_contained,
            },
            "numeric_min_separation": self.numeric_min_separation,
            "violations": self.violations,
        }


def verify_alignment(ch, bases: Sequence[PseudoVectorBasis], r: int, s_hat: int,
                     numeric: bool = True) -> AlignmentReport:
    """Check the three alignment properties at receiver ``r``, state ``s_hat``.

    All set checks are symbolic. ``numeric`` adds a floating-point
    distinctness diagnostic of the favorite and merged coefficients on ``ch``.
    """
    cfg = ch.config
    M, K = cfg.M, cfg.K
    _check_receiver(K, cfg.J, r)
    if not 0 <= s_hat < cfg.J[r]:
        raise ConfigError(f"state {s_hat} out of range for receiver {r}")
    scaling = [h_sym(r, t, s_hat) for t in range(M)]

    fav_sets = [scale(bases[r].monomials, s) for s in scaling]
    fav = union(fav_sets)
    pairwise = all(
        intersection_size(fav_sets[a], fav_sets[b]) == 0
        for a in range(M) for b in range(a + 1, M)
    )

    interference, boxes, unions = [], [], []
    for rh in range(K):
        if rh == r:
            continue
        U = union([scale(bases[rh].monomials, s) for s in scaling])
        box = alignment_box(bases[rh], scaling)
        unions.append(U)
        boxes.append(box)
        interference.append({
            "r_hat": rh,
            "size": len(U),
            "kappa": kappa(bases[rh].n, M, cfg.J, rh),
            "box_size": len(box),
            "within_box": union_size([U, box]) == len(box),
        })

    disjoint = all(intersection_size(fav, U) == 0 for U in unions)
    box_disjoint = all(intersection_size(fav, B) == 0 for B in boxes)

    sep = None
    if numeric:
        vals = np.concatenate([evaluate_set(fav, ch)] + [evaluate_set(B, ch) for B in boxes])
        sep = numeric_min_separation(vals)

    return AlignmentReport(
        receiver=r,
        state=s_hat,
        favorite_union=len(fav),
        expected_favorite=M * len(bases[r]),
        favorite_pairwise_disjoint=pairwise,
        interference=interference,
        disjoint=disjoint,
        box_disjoint=box_disjoint,
        numeric_min_separation=sep,
    )
