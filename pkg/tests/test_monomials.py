import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cia_sim import monomials as mono
from cia_sim.channel import ChannelRealization, CompoundChannelConfig, sample_channel
from cia_sim.errors import ConfigError, SizeCapError, UnresolvedSymbolError
from cia_sim.monomials import Monomial, MonomialSet, h_sym


# -- brute-force oracle: plain Python sets of exponent tuples ----------------

def oracle_basis(M, K, J, r, n):
    syms = [(rp, t, s) for rp in range(K) if rp != r for t in range(M) for s in range(J[rp])]
    return syms, {e for e in itertools.product(range(1, n + 1), repeat=len(syms))}


def oracle_scaled_union(M, K, J, r_hat, n, r, s_hat):
    """Union of ``h(r, t, s_hat) * B_rhat`` over t, as a set of exponent dicts."""
    syms, B = oracle_basis(M, K, J, r_hat, n)
    out = set()
    for t in range(M):
        k = syms.index((r, t, s_hat))
        for e in B:
            e = list(e)
            e[k] += 1
            out.add(tuple(e))
    return out


# -- Monomial ----------------------------------------------------------------

def test_monomial_canonical_form():
    a, b = h_sym(0, 0, 0), h_sym(1, 0, 0)
    m = Monomial({a: 2, b: 0})
    assert m.symbols == (a,)
    assert m == Monomial({a: 2})
    assert hash(m) == hash(Monomial([(a, 2)]))
    assert m * a == Monomial({a: 3})
    assert (m * Monomial({b: 1})).exponents == {a: 2, b: 1}
    assert m.degree() == 2


def test_monomial_rejects_negative_exponent():
    with pytest.raises(ValueError):
        Monomial({h_sym(0, 0, 0): -1})


# -- bases -------------------------------------------------------------------

@pytest.mark.parametrize("dims, r, n, size", [
    ((2, 2, (2, 2)), 0, 2, 16),
    ((2, 2, (2, 2)), 1, 1, 1),
    ((3, 2, (1, 2)), 1, 2, 8),
    ((3, 3, (1, 2, 3)), 2, 1, 1),
])
def test_basis_sizes(dims, r, n, size):
    B = mono.build_basis(dims, r, n)
    assert len(B) == size == mono.basis_size(n, dims[0], dims[2], r)


def test_basis_matches_oracle_and_excludes_own_symbols():
    dims = (2, 3, (1, 2, 1))
    B = mono.build_basis(dims, 1, 2)
    syms, oracle = oracle_basis(*dims, 1, 2)
    assert {s.index for s in B.symbols} == set(syms)
    assert all(s.index[0] != 1 for s in B.symbols)
    got = {tuple(m[h_sym(*s)] for s in syms) for m in B.elements}
    assert got == oracle
    assert B.monomials.exps.min() == 1 and B.monomials.exps.max() == 2


def test_basis_size_cap():
    with pytest.raises(SizeCapError):
        mono.build_basis((3, 3, (3, 3, 3)), 0, 3, cap=10**6)


@pytest.mark.parametrize("r, n", [(-1, 1), (2, 1), (0, 0)])
def test_basis_bad_arguments(r, n):
    with pytest.raises(ConfigError):
        mono.build_basis((2, 2, (1, 1)), r, n)


# -- scale / union / intersection ----------------------------------------------

exp_rows = st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=1, max_size=30)
SYMS = [h_sym(0, 0, 0), h_sym(0, 1, 0), h_sym(1, 0, 0)]


def as_set(rows):
    return MonomialSet(SYMS, np.array(rows))


def py_set(S):
    return {tuple(m[s] for s in SYMS + [h_sym(2, 0, 0)]) for m in S}


@given(exp_rows, st.sampled_from(SYMS + [h_sym(2, 0, 0)]))
def test_scale_is_injective(rows, sym):
    S = as_set(rows)
    T = mono.scale(S, sym)
    assert len(T) == len(S)
    k = (SYMS + [h_sym(2, 0, 0)]).index(sym)
    shifted = {e[:k] + (e[k] + 1,) + e[k + 1:] for e in py_set(S)}
    assert py_set(T) == shifted


def test_scale_twice_adds_two():
    a = h_sym(0, 0, 0)
    S = MonomialSet.from_monomials([Monomial({a: 1})])
    assert next(iter(mono.scale(mono.scale(S, a), a)))[a] == 3


@given(exp_rows, exp_rows)
def test_union_and_intersection_match_python_sets(r1, r2):
    A, B = as_set(r1), as_set(r2)
    pa, pb = py_set(A), py_set(B)
    assert mono.union_size([A, B]) == len(pa | pb)
    assert mono.intersection_size(A, B) == len(pa & pb)
    assert mono.union_size([A, A]) == len(A)
    assert py_set(mono.union([A, B])) == pa | pb


def test_union_handles_different_symbol_sets():
    a, b = h_sym(0, 0, 0), h_sym(0, 1, 0)
    A = MonomialSet.from_monomials([Monomial({a: 1})])
    B = MonomialSet.from_monomials([Monomial({b: 1}), Monomial({a: 1})])
    assert mono.union_size([A, B]) == 2
    assert mono.intersection_size(A, B) == 1


def test_membership():
    B = mono.build_basis((2, 2, (1, 1)), 0, 2)
    m = next(iter(B.monomials))
    assert m in B.monomials
    assert m * h_sym(0, 0, 0) not in B.monomials


def test_favorite_copies_are_disjoint():
    dims = (2, 2, (2, 2))
    B = mono.build_basis(dims, 0, 2)
    for s in range(2):
        a = mono.scale(B.monomials, h_sym(0, 0, s))
        b = mono.scale(B.monomials, h_sym(0, 1, s))
        assert mono.intersection_size(a, b) == 0
        assert mono.union_size([a, b]) == 2 * len(B)


# -- closed forms ----------------------------------------------------------------

def test_kappa_examples():
    assert mono.kappa(3, 2, (2, 2), 1) == 144
    assert mono.kappa(1, 2, (1, 1), 1) == 4


def test_kappa_needs_other_receiver():
    with pytest.raises(ConfigError):
        mono.kappa(2, 2, (3,), 0)


@given(st.integers(1, 6), st.integers(1, 4), st.lists(st.integers(1, 3), min_size=2, max_size=4),
       st.data())
def test_kappa_over_L_identity(n, M, J, data):
    r = data.draw(st.integers(0, len(J) - 1))
    L = mono.basis_size(n, M, J, r)
    ratio = Fraction(mono.kappa(n, M, J, r), L)
    assert ratio == Fraction(n + 1, n) ** M
    assert Fraction(mono.kappa(n + 1, M, J, r), mono.basis_size(n + 1, M, J, r)) < ratio


@pytest.mark.parametrize("n_list, expected", [((2, 2), 17), ((1, 1), 6)])
def test_xi_examples(n_list, expected):
    assert mono.xi(2, 2, (1, 1), n_list) == expected


def test_xi_symmetric_max_attained_everywhere():
    J, n = (2, 2, 2), (2, 2, 2)
    kap = [mono.kappa(2, 2, J, r) for r in range(3)]
    vals = {sum(kap) - kap[r] + 2 * mono.basis_size(2, 2, J, r) for r in range(3)}
    assert len(vals) == 1 and vals.pop() == mono.xi(2, 3, J, n)


def test_xi_single_receiver():
    assert mono.xi(3, 1, (2,), (5,)) == 3


@pytest.mark.parametrize("L, n", [(16, 2), (17, 2), (15, 1), (81, 3), (1, 1)])
def test_choose_n(L, n):
    assert mono.choose_n(L, 2, (2, 2), 0) == n


def test_choose_n_ratio_approaches_one():
    d = 4
    for L in (10**3, 10**4, 10**5, 10**6):
        n = mono.choose_n(L, 2, (2, 2), 0)
        assert n**d <= L < (n + 1) ** d
        assert n**d / L >= 1 - d / n


# -- interference unions ------------------------------------------------------------

def _grid():
    for M in (1, 2, 3):
        for K in (2, 3):
            for J in itertools.product((1, 2, 3), repeat=K):
                for n in (1, 2, 3):
                    yield M, K, J, n


@pytest.mark.parametrize("M, K, J, n", [c for c in _grid() if
                                        c[3] ** (c[0] * (sum(c[2]) - c[2][1])) <= 5000])
def test_interference_union_brute_force(M, K, J, n):
    """Brute-force union equals the exact closed form; the box holds it and has size kappa."""
    r_hat, r = 1, 0
    bases = [mono.build_basis((M, K, J), q, n) for q in range(K)]
    for s in range(J[r]):
        scaling = [h_sym(r, t, s) for t in range(M)]
        U = mono.union([mono.scale(bases[r_hat].monomials, x) for x in scaling])
        oracle = oracle_scaled_union(M, K, J, r_hat, n, r, s)
        assert len(U) == len(oracle) == mono.interference_union_size(n, M, J, r_hat)
        box = mono.alignment_box(bases[r_hat], scaling)
        assert len(box) == mono.kappa(n, M, J, r_hat)
        assert mono.union_size([U, box]) == len(box)
        assert len(U) < len(box)


def test_interference_union_size_example():
    assert mono.interference_union_size(3, 2, (2, 2), 1) == 126
    assert mono.interference_union_size(1, 2, (1, 1), 1) == 2


# -- evaluation ------------------------------------------------------------------

def test_evaluate_identity_and_power():
    a, b = h_sym(0, 0, 0), h_sym(0, 1, 0)
    assert mono.evaluate(Monomial({a: 1, b: 1}), extra={a: 1.0, b: 1.0}) == 1.0
    assert mono.evaluate(Monomial({a: 3}), extra={a: 2.0}) == 8.0


def test_evaluate_uses_channel_and_rejects_unknown():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 1), seed=3))
    m = Monomial({h_sym(1, 0, 0): 2})
    assert mono.evaluate(m, ch) == pytest.approx(ch.coeff(1, 0, 0) ** 2)
    with pytest.raises(UnresolvedSymbolError):
        mono.evaluate(Monomial({h_sym(5, 0, 0): 1}), ch)
    with pytest.raises(UnresolvedSymbolError):
        mono.evaluate(Monomial({mono.BETA: 1}), ch)


def test_distinct_monomials_evaluate_apart():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=11))
    B = mono.build_basis(ch.config.dims, 0, 2)
    vals = mono.evaluate_set(B.monomials, ch)
    assert mono.numeric_min_separation(vals) > 1e-12
    row = B.monomials.exps[5]
    m = Monomial(zip(B.symbols, row))
    assert vals[5] == pytest.approx(mono.evaluate(m, ch), rel=1e-12)


# -- alignment report ------------------------------------------------------------------

def test_verify_alignment_reference_instance():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(2, 2), seed=0))
    bases = [mono.build_basis(ch.config.dims, 0, 2), mono.build_basis(ch.config.dims, 1, 3)]
    for s in range(2):
        rep = mono.verify_alignment(ch, bases, 0, s)
        assert rep.favorite_union == 32
        assert rep.property1 and rep.property2 and rep.property3_contained
        (i,) = rep.interference
        assert (i["size"], i["kappa"], i["box_size"]) == (126, 144, 144)
        assert not rep.property3_exact
        assert rep.violations == []
        assert rep.numeric_min_separation > 0
        d = rep.to_dict()
        assert d["expected"]["kappa"] == [144]
        assert d["properties"]["interference_equals_kappa"] is False


def test_verify_alignment_is_value_independent():
    cfg = CompoundChannelConfig(M=2, K=2, J=(1, 1))
    ch = ChannelRealization(cfg, (np.full((2, 1), 0.5), np.full((2, 1), 0.5)))
    bases = [mono.build_basis(cfg.dims, r, 1) for r in range(2)]
    rep = mono.verify_alignment(ch, bases, 0, 0)
    assert rep.violations == []
    assert rep.numeric_min_separation == 0.0


def test_verify_alignment_bad_state():
    ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 1), seed=0))
    bases = [mono.build_basis(ch.config.dims, r, 1) for r in range(2)]
    with pytest.raises(ConfigError):
        mono.verify_alignment(ch, bases, 0, 1)
