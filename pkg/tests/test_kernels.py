import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovlab.dyadic import STANDARD, WIDE, psi
from besovlab.kernels import (PLAIN, SHIFTED, KernelGrid, LocalBranch, LocalWeight, b_m_eval,
                              b_m_l1, big_lambda, decay_check, default_grids, far_pair,
                              far_pairs, inv_filter_kernel, kernel_eval, kernel_function,
                              oracle_kernel, prefactor, regimes_for, young_chain_check)

AFFINE = LocalBranch.affine(2.0)
NONLIN = LocalBranch.nonlinear(2.0, 0.3)
BUMP = LocalWeight()


# branches and weights ------------------------------------------------------------

def test_branch_validation():
    with pytest.raises(ValueError):
        LocalBranch.affine(0.5)
    with pytest.raises(ValueError):
        LocalBranch.nonlinear(1.2, 0.5)
    with pytest.raises(ValueError):
        LocalBranch("quadratic", 2.0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(["affine", "nonlinear"]))
def test_branch_expansion(x, y, fam):
    T = AFFINE if fam == "affine" else NONLIN
    assert abs(T(x) - T(y)) >= T.expansion_floor * abs(x - y) * (1 - 1e-12)
    assert T.deriv(x) > 0


def test_weight_support_checks():
    with pytest.raises(ValueError):
        LocalWeight(radius=0.0)
    with pytest.raises(ValueError):
        LocalWeight(regularity=3.0, gamma=1.5)
    with pytest.raises(ValueError):
        LocalWeight(center=0.6).check_inside(AFFINE, 0.01)
    BUMP.check_inside(AFFINE, 0.01)
    assert BUMP(0.5) == 0.0 and BUMP(0.0) == pytest.approx(1.0)


def test_big_lambda_and_hook():
    assert big_lambda(AFFINE, BUMP) == 2.0
    assert big_lambda(NONLIN, BUMP) == pytest.approx(2.3)
    assert far_pair(6, 0, 2.0) and not far_pair(5, 0, 2.0)
    assert all(far_pair(n, l, 2.0) for n, l in far_pairs(2.0, 10))
    assert len(far_pairs(2.0, 10)) == 15


# filter kernels --------------------------------------------------------------------

def test_filter_kernel_integrals():
    assert inv_filter_kernel(0).integral == pytest.approx(1.0, abs=1e-10)
    for n in (1, 3, 5):
        assert inv_filter_kernel(n).integral == pytest.approx(0.0, abs=1e-10)
    assert inv_filter_kernel(0, WIDE).integral == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n,kind", [(0, STANDARD), (3, STANDARD), (2, WIDE)])
def test_filter_kernel_even(n, kind):
    k = inv_filter_kernel(n, kind)
    assert k.resolved
    v = k.values[1:]  # drop the unpaired -half_width sample
    assert np.allclose(v, v[::-1], atol=1e-12 * np.abs(v).max())


def test_filter_kernel_under_resolved():
    assert not inv_filter_kernel(4, du=1.0).resolved


@pytest.mark.parametrize("n", [2, 3, 5])
def test_filter_kernel_self_similar(n):
    kn, kn1 = kernel_function(n), kernel_function(n + 1)
    u = np.linspace(-3, 3, 61)
    assert np.allclose(kn1(u), 2 * kn(2 * u), atol=1e-9 * np.abs(kn1(u)).max())


def test_kernel_function_matches_direct_transform():
    # k_n(u) = (1/pi) int_0^inf psi_n(xi) cos(u xi) d xi
    from scipy.integrate import quad
    for n, kind in ((3, STANDARD), (1, WIDE)):
        k = kernel_function(n, kind)
        for u in (0.0, 0.37, 1.9):
            lo, hi = 0.0, 2.0 ** (n + 2)
            ref = quad(lambda s: psi(n, s, kind) * math.cos(u * s), lo, hi, limit=400,
                       epsabs=1e-13)[0] / math.pi
            assert k(np.array([u]))[0] == pytest.approx(ref, abs=1e-9)


# kernel evaluation -------------------------------------------------------------------

def test_hooked_pair_rejected():
    with pytest.raises(ValueError):
        kernel_eval(AFFINE, BUMP, 5, 1)


def test_zero_weight_gives_zero():
    g = kernel_eval(AFFINE, LocalWeight(scale=0.0), 7, 1)
    assert not np.any(g.values)
    rep = decay_check(AFFINE, LocalWeight(scale=0.0), [(7, 1), (8, 1)], PLAIN)
    assert np.all(rep.constants == 0)


def _spot_points(branch, n, l, count, seed):
    x, y = default_grids(branch, BUMP, n, l)
    rng = np.random.default_rng(seed)
    return rng.choice(x, count, replace=False), rng.choice(y, count, replace=False)


@pytest.mark.parametrize("branch", [AFFINE, NONLIN], ids=["affine", "nonlinear"])
@pytest.mark.parametrize("n,l", [(7, 1), (8, 2)])
def test_kernel_against_oracle(branch, n, l):
    xs, ys = _spot_points(branch, n, l, 6, n + 10 * l)
    grid = kernel_eval(branch, BUMP, n, l, x=xs, y=ys)
    scale = np.abs(grid.values).max()
    for i in range(xs.size):
        ref = oracle_kernel(branch, BUMP, n, l, xs[i], ys[i])
        assert grid.values[i, i] == pytest.approx(ref, abs=1e-4 * max(abs(ref), 1e-3 * scale))


def test_oracle_converged():
    x, y = 0.1, 0.2
    a = oracle_kernel(AFFINE, BUMP, 7, 1, x, y)
    b = oracle_kernel(AFFINE, BUMP, 7, 1, x, y, period_xi=2 * 600 / 64,
                      period_eta=2 * 600.0, w_points=4001)
    assert a == pytest.approx(b, rel=1e-6)


def test_kernel_reflection_symmetry():
    # even bump, odd branch, even filter kernels: V(-x, -y) = V(x, y)
    x = np.array([-0.3, -0.05, 0.1, 0.27])
    y = np.array([-0.2, 0.0, 0.15])
    g = kernel_eval(NONLIN, BUMP, 7, 1, x=x, y=y)
    r = kernel_eval(NONLIN, BUMP, 7, 1, x=-x, y=-y)
    assert np.allclose(g.values, r.values, atol=1e-10 * np.abs(g.values).max())


def test_kernel_grid_exports():
    g = kernel_eval(AFFINE, BUMP, 7, 1, x=np.array([0.0, 0.1]), y=np.array([0.2]))
    lines = g.to_csv().splitlines()
    assert lines[0] == "x,y,re,im" and len(lines) == 3
    dat = g.to_gnuplot().splitlines()
    assert dat[0].startswith("#") and dat[2] == "" and len(dat[1].split()) == 3


# b_m ---------------------------------------------------------------------------------

def test_b_examples():
    assert b_m_eval(0, 0.5) == 1.0
    assert b_m_eval(0, 2.0) == 0.25
    assert b_m_eval(2, 1.0) == 0.25
    with pytest.raises(ValueError):
        b_m_eval(-1, 0.0)


@pytest.mark.parametrize("m", range(0, 11))
def test_b_l1_invariant(m):
    assert b_m_l1(m) == pytest.approx(4.0, abs=1e-8)


@given(st.integers(0, 12), st.floats(-10, 10))
def test_b_scaling(m, x):
    assert b_m_eval(m, x) == pytest.approx(2.0 ** m * b_m_eval(0, 2.0 ** m * x))


# decay -------------------------------------------------------------------------------

def test_prefactor_and_regimes():
    assert prefactor(8, 2, 2.0, PLAIN) == 2.0 ** -16
    assert prefactor(8, 2, 2.0, SHIFTED) == 2.0 ** -14
    assert regimes_for(2.0) == [PLAIN, SHIFTED]
    assert regimes_for(2.0, 2.5) == [SHIFTED]
    with pytest.raises(ValueError):
        prefactor(1, 0, 1.0, "other")


PINNED = {
    PLAIN: [404.2839915168672, 88.23032089191616, 92.94460857120971, 6.221673381389384],
    SHIFTED: [202.1419957584336, 44.11516044595808, 23.23615214280243, 1.555418345347346],
}


@pytest.mark.parametrize("regime", [PLAIN, SHIFTED])
def test_decay_regression(regime):
    rep = decay_check(AFFINE, BUMP, [(7, 1), (8, 1), (8, 2), (9, 2)], regime)
    assert np.allclose(rep.constants, PINNED[regime], rtol=1e-5)
    assert rep.log_slope <= 0
    assert np.all(np.isfinite(rep.constants)) and np.all(rep.constants >= 0)
    assert rep.to_csv().splitlines()[0] == "regime,n,l,max_abs,prefactor,constant"


def test_young_chain():
    g = kernel_eval(AFFINE, BUMP, 7, 1)
    C = decay_check(AFFINE, BUMP, [(7, 1)], SHIFTED, {(7, 1): g}).sup_constant
    zero = young_chain_check(g, np.zeros_like(g.y), math.inf, C, 2.0, SHIFTED)
    assert zero.measured == 0 and zero.bound == 0
    phi = LocalWeight(0.0, 0.6)(g.y)
    for p in (1.0, 2.0, math.inf):
        chk = young_chain_check(g, phi, p, C, 2.0, SHIFTED)
        assert chk.holds and chk.measured > 0
    with pytest.raises(ValueError):
        young_chain_check(g, phi[:-1], 1.0, C, 2.0, SHIFTED)


@pytest.mark.slow
def test_decay_finite_regularity_weight():
    # |w|^1.5 cusp: the plain-regime constants level off instead of decaying,
    # so the prefactor is close to sharp; the slope must still not grow
    w = LocalWeight(regularity=1.5, gamma=1.5)
    grids = {}
    slopes = {}
    for regime in regimes_for(w.regularity):
        rep = decay_check(AFFINE, w, far_pairs(2.0, 8), regime, grids)
        slopes[regime] = rep.log_slope
        assert np.all(np.isfinite(rep.constants))
    assert all(v <= 0.1 for v in slopes.values())
    plain = decay_check(AFFINE, w, [(8, 0), (8, 1), (8, 2)], PLAIN, grids).constants
    assert plain.max() / plain.min() < 1.5
