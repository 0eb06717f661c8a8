import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovlab import lasota_yorke as ly
from besovlab.dyadic import BesovParams, psi, GridFunction, random_band_limited
from besovlab.dynamics import CircleMap, Weight, doubling
from besovlab.transfer import TransferOp

F2 = doubling()
HALF = TransferOp(F2, Weight.constant(0.5))
PERT = CircleMap.perturbed(2, 0.1)


# hook and gamma ----------------------------------------------------------------

def test_hook_examples():
    assert ly.hook(5, 2, 2.0) and not ly.hook(6, 2, 2.0)
    assert all(ly.hook(n, l, 1.0) == (n <= l + 4) for n in range(12) for l in range(8))
    assert ly.hook(4, 2, 4.0) and not ly.hook(5, 2, 4.0)
    with pytest.raises(ValueError):
        ly.hook(-1, 0, 2.0)


@given(st.integers(0, 30), st.integers(0, 30), st.floats(1.0001, 50.0))
def test_hook_definition(n, l, lam):
    assert ly.hook(n, l, lam) == (2.0 ** n <= 2.0 ** (l + 4) / lam * (1 + 1e-15)) or \
        abs(2.0 ** n * lam - 2.0 ** (l + 4)) < 1e-9 * 2.0 ** (l + 4)


def test_gamma_tilde_arithmetic():
    assert ly.gamma_tilde(1.0, 1.0) == 64.0
    assert ly.gamma_tilde(2.0, 2.0) == pytest.approx(2 * 2 ** 10 / 0.75)


# constants ---------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_constants_doubling(p):
    c = ly.compute_constants(HALF, BesovParams(s=1.0, p=p), N=256)
    assert c.lam == pytest.approx(2.0)
    assert c.alpha == pytest.approx(1.0)
    assert c.gamma == c.gamma_tilde == pytest.approx(ly.gamma_tilde(c.c1, 1.0))
    assert c.multiplier_norm == 1.0
    assert c.low_factor == pytest.approx(c.gamma_tilde / 2)


def test_c1_bounds_measured_ratio(rng):
    c = ly.compute_constants(HALF, BesovParams(s=1.0, p=2.0), N=256, rng=rng)
    assert 1.0 <= c.c1
    assert c.c1_measured <= c.c1


@pytest.mark.parametrize("n", [0, 2, 5])
def test_filter_kernel_l1_is_attained(n):
    # u = conj(sign(K(-x))) realises the sup-norm of Delta_n u at x = 0
    N = 256
    k = np.abs(np.rint(np.fft.fftfreq(N) * N))
    K = np.fft.ifft(psi(n, k)) * N
    u = np.conj(np.sign(K[(-np.arange(N)) % N]))
    out = np.fft.ifft(psi(n, k) * np.fft.fft(u))
    assert np.abs(out).max() == pytest.approx(ly.filter_kernel_l1(n, N), rel=1e-12)
    assert np.abs(out).max() <= ly.filter_kernel_l1(n, N) * (1 + 1e-12)


def test_constants_table_order():
    c = ly.compute_constants(HALF, BesovParams(s=1.0), N=64)
    names = [line.split()[0] for line in c.table().splitlines()]
    assert names == list(ly.LYConstants.FIELDS)


# block split -------------------------------------------------------------------

@pytest.fixture(scope="module")
def consts():
    return ly.compute_constants(HALF, BesovParams(s=1.0), N=256)


def test_block_split_constant(consts):
    out = ly.block_operator_norms(HALF, GridFunction(np.ones(256)), consts)
    assert out.low[0] == pytest.approx(1.0)
    assert np.all(out.low[1:] < 1e-12) and np.all(out.high < 1e-12)


@pytest.mark.parametrize("j", range(1, 6))
def test_block_split_exponential(consts, j):
    out = ly.block_operator_norms(HALF, GridFunction.exponential(2 ** j, 256), consts)
    expect = np.zeros_like(out.low)
    expect[j - 1] = 1.0
    assert np.allclose(out.low, expect, atol=1e-12)
    assert np.all(out.high < 1e-12)


def test_block_split_zero(consts):
    out = ly.block_operator_norms(HALF, GridFunction(np.zeros(256)), consts)
    assert not out.low.any() and not out.high.any()


@given(st.integers(0, 2 ** 31 - 1))
def test_block_telescoping(seed):
    L = TransferOp(PERT, Weight.cusp(0.5, 2.5))
    c = ly.compute_constants(L, BesovParams(s=1.0, regularity=2.5), N=256, grid_n=2 ** 10)
    u = random_band_limited(np.random.default_rng(seed), 256, top=32)
    out = ly.block_operator_norms(L, u, c)
    assert out.consistency <= 1e-9
    assert np.all(out.low >= 0) and np.all(out.high >= 0)


# verify ------------------------------------------------------------------------

def test_verify_examples(consts):
    corpus = [("one", GridFunction(np.ones(256))), ("zero", GridFunction(np.zeros(256)))]
    corpus += [(f"e{k}", GridFunction.exponential(k, 256)) for k in range(0, 65)]
    rep = ly.verify_ly(HALF, BesovParams(s=1.0), corpus, consts)
    assert rep.passed and not rep.violations
    one, zero = rep.records[0], rep.records[1]
    assert one.low == pytest.approx(1.0) and one.low_bound >= 1.0
    assert zero.low == 0.0 and zero.low_bound == 0.0
    for r in rep.records:
        assert min(r.besov_s, r.besov_sigma, r.low, r.high) >= 0
        assert r.low <= consts.low_factor * r.besov_s * (1 + 1e-6)


def test_verify_rejects_empty_and_mixed():
    with pytest.raises(ValueError):
        ly.verify_ly(HALF, BesovParams(s=1.0), [])
    with pytest.raises(ValueError):
        ly.verify_ly(HALF, BesovParams(s=1.0),
                     [GridFunction(np.ones(64)), GridFunction(np.ones(128))])


def test_report_serialisation(consts):
    rep = ly.verify_ly(HALF, BesovParams(s=1.0), [GridFunction(np.ones(256))], consts)
    d = json.loads(rep.to_json())
    assert list(d) == ["constants", "n_records", "high_constant", "max_consistency", "pass",
                       "records"]
    assert d["constants"]["p"] == "inf" and d["pass"] is True
    lines = rep.to_csv().splitlines()
    assert lines[0] == "label,besov_s,besov_sigma,low,low_bound,high,high_ratio,consistency,passed"
    assert lines[1].startswith("u0,1.0000000000000000e+00,")


def test_high_constant_stable_under_doubling():
    L = TransferOp(PERT, Weight.cusp(0.5, 2.5))
    params = BesovParams(s=2.0, p=math.inf, q=math.inf, regularity=2.5)
    c = ly.compute_constants(L, params, N=256, grid_n=2 ** 12)
    small = ly.standard_corpus(256, 10, np.random.default_rng(0), modes=range(-32, 33))
    big = small + ly.standard_corpus(256, 10, np.random.default_rng(1), modes=range(-64, -32))
    big += [(f"e{k}", GridFunction.exponential(k, 256)) for k in range(33, 65)]
    c_small = ly.verify_ly(L, params, small, c).high_constant
    c_big = ly.verify_ly(L, params, big, c).high_constant
    assert np.isfinite(c_small) and c_small > 0
    assert abs(c_big - c_small) <= 0.1 * c_small


# theorem bound and radius probe ------------------------------------------------

def test_thm_bound_examples():
    assert ly.thm_bound(F2, Weight.inverse_jacobian(F2), 1.0) == pytest.approx(0.5, abs=1e-10)
    assert ly.thm_bound(F2, Weight.constant(0.3), 1.5) == pytest.approx(2 ** -0.5 * 0.3)
    assert ly.thm_bound(F2, Weight.trigonometric(0.2), 0.0, 4) == pytest.approx(2 * math.exp(0.2))


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_thm_bound_decreasing(s1, s2):
    if abs(s1 - s2) < 1e-3:
        return
    lo, hi = sorted((s1, s2))
    g = Weight.trigonometric(0.3)
    assert ly.thm_bound(PERT, g, lo, 4) > ly.thm_bound(PERT, g, hi, 4)


def test_radius_probe_doubling():
    for g in (Weight.inverse_jacobian(F2), Weight.constant(0.5)):
        probe = ly.essential_radius_probe(TransferOp(F2, g), 1.0, [8, 16, 32])
        assert probe.bound == pytest.approx(0.5)
        assert probe.consistent
        assert len(probe.outside) == 1 and probe.outside[0] == pytest.approx(1.0)


def test_radius_probe_perturbed():
    L = TransferOp(PERT, Weight.inverse_jacobian(PERT))
    probe = ly.essential_radius_probe(L, 2.0, [8, 16, 32], n_max=8)
    assert probe.bound < 1
    assert probe.consistent
    assert any(abs(z - 1) < 1e-8 for z in probe.outside)
    assert json.loads(json.dumps(probe.to_dict()))["consistent"] is True


# endpoint diagnostic ---------------------------------------------------------------

def test_endpoint_sum_diverges_at_regularity():
    out = ly.endpoint_divergence(2.5, 0.5, 1.9, 2.0, n_max=20)
    p = out["partial_norms"]
    assert np.all(np.diff(p[5:]) > 0)
    assert p[20] > 5 * p[5]


def test_endpoint_sum_converges_below_regularity():
    p = ly.endpoint_divergence(2.5, 0.5, 1.9, 2.0, n_max=40, s=2.0)["partial_norms"]
    assert p[40] - p[20] < 1e-3
