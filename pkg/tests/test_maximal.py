import math

import numpy as np
import pytest

from fracmeas import atoms, maximal
from fracmeas.heat import TGrid, heat_sup_field
from fracmeas.maximal import (anti_local_maximal, band_symbol, decay_fit,
                              dyadic_maximal, grand_maximal, lowpass_symbol,
                              lp_apply_tilde, lp_band, lp_lowpass,
                              standard_family, truncated_dyadic_maximal)
from fracmeas.measures import (cantor_frostman, dirac, lebesgue_sample,
                               new_grid_measure, unit_lattice)

BETA0 = math.log(2) / math.log(3)


# ---------------------------------------------------------------------------
# the test family
# ---------------------------------------------------------------------------

def test_family_profiles_present(warm):
    fam = standard_family(1)
    names = {p.name for p in fam.profiles}
    assert names == {"gauss", "rho", "psi", "xi_low", "xi_band"}
    for p in fam.profiles:
        assert p.seminorm_budget == 1.0        # normalized
        assert p.meta["raw_seminorm"] > 0


def test_rho_integrates_to_one(warm):
    fam = standard_family(1, normalize=False)
    rho = fam["rho"]
    assert rho.hat([0.0])[0] == pytest.approx(1.0, abs=1e-6)


def test_rho_hat_lipschitz(warm):
    fam = standard_family(1, normalize=False)
    rho = fam["rho"]
    xis = np.linspace(0.0, 0.6, 25)
    vals = rho.hat(xis)
    # |rho_hat(xi) - rho_hat(0)| <= 2 pi |xi| on samples
    assert np.all(np.abs(vals - vals[0]) <= 2 * np.pi * xis + 1e-9)


def test_psi_hat_lower_bound(warm):
    fam = standard_family(1, normalize=False)
    psi = fam["psi"]
    assert psi.hat([0.0])[0] == pytest.approx(2.0, abs=1e-6)
    xis = np.linspace(0, 1, 33)
    assert np.all(psi.hat(xis) >= 1.0)


def test_symbols_plateaus():
    r = np.array([0.0, 0.3, 0.5, 0.7, 1.0, 1.5])
    low = lowpass_symbol(r)
    assert low[0] == 1.0 and low[2] == 1.0
    assert low[4] == 0.0 and low[5] == 0.0
    assert 0 < low[3] < 1
    band = band_symbol(np.array([0.1, 0.125, 0.25, 0.5, 1.0, 2.0, 2.5]))
    assert band[0] == 0.0 and band[1] == 0.0
    assert band[2] == 1.0 and band[3] == 1.0 and band[4] == 1.0
    assert band[5] == 0.0 and band[6] == 0.0


def test_band_plateau_covers_band_support():
    # composition needs tilde == 1 wherever low(u) - low(2u) != 0
    u = np.linspace(0.01, 1.2, 400)
    diff = lowpass_symbol(u) - lowpass_symbol(2 * u)
    active = np.abs(diff) > 1e-12
    assert np.all(np.abs(band_symbol(u[active]) - 1.0) < 1e-12)


# ---------------------------------------------------------------------------
# dyadic maximal functions
# ---------------------------------------------------------------------------

def test_dyadic_lebesgue_gamma0(warm):
    lat = unit_lattice(1)
    leb = lebesgue_sample(1, 2 ** -8)
    pts = np.linspace(0.01, 0.99, 17)[:, None]
    fld = dyadic_maximal(leb, lat, 0.0, pts, 0, 8)
    assert np.allclose(fld.values, 1.0, rtol=1e-12)


def test_dyadic_dirac_depth_scaling():
    lat = unit_lattice(1)
    d0 = dirac(1, h=1.0)
    for k_max in (6, 10):
        fld = dyadic_maximal(d0, lat, 1 - BETA0, np.zeros((1, 1)), 0, k_max)
        assert fld.values[0] == pytest.approx((2.0 ** -k_max) ** -BETA0)


def test_dyadic_far_point_zero():
    lat = unit_lattice(1)
    d0 = dirac(1, h=1.0)
    fld = dyadic_maximal(d0, lat, 0.5, np.array([[900.0]]), 0, 6)
    assert fld.values[0] == 0.0


def test_truncated_matches_and_bounds(warm):
    lat = unit_lattice(1)
    mu, _ = cantor_frostman(5, 1.0)
    pts = np.linspace(0, 0.5, 21)[:, None]
    full = dyadic_maximal(mu, lat, 1 - 0.5, pts, 0, 10)
    trunc = truncated_dyadic_maximal(mu, lat, 1 - 0.5, 2 ** -10, pts, 0, 10)
    assert np.allclose(full.values, trunc.values)  # l <= smallest level
    coarse = truncated_dyadic_maximal(mu, lat, 1 - 0.5, 2 ** -4, pts, 0, 10)
    assert np.all(coarse.values <= full.values + 1e-12)


def test_truncated_dirac_value():
    lat = unit_lattice(1)
    d0 = dirac(1, h=1.0)
    l = 2.0 ** -7
    fld = truncated_dyadic_maximal(d0, lat, 1 - BETA0, l, np.zeros((1, 1)), 0, 20)
    assert fld.values[0] == pytest.approx(l ** -BETA0)


# ---------------------------------------------------------------------------
# grand and anti-local maximal functions
# ---------------------------------------------------------------------------

def test_grand_zero_measure(warm):
    zero = new_grid_measure(1, 1.0, [0.0], np.zeros((0, 1)), [])
    fam = standard_family(1)
    tg = TGrid.build(1e-4, 1.0, 8)
    fld = grand_maximal(zero, fam, 0.4, np.linspace(0, 1, 5)[:, None], tg)
    assert np.all(fld.values == 0.0)


def test_grand_gauss_only_reproduces_heat_sup(warm):
    # t <-> s^2 convention map, unnormalized family
    mu, _ = cantor_frostman(5, 1.0)
    fam = standard_family(1, normalize=False).subset(["gauss"])
    tg = TGrid.for_measure(mu, 16)
    pts = np.linspace(-0.5, 1.0, 31)[:, None]
    gamma = 1 - BETA0
    gm = grand_maximal(mu, fam, gamma, pts, tg)
    hs = heat_sup_field(mu, gamma, pts, tg, refine=False)
    assert np.allclose(gm.values, hs.values, rtol=1e-12)
    assert np.allclose(gm.att_scale ** 2, hs.t_at, rtol=1e-12)


def test_grand_monotone_in_family(warm):
    mu, _ = cantor_frostman(4, 1.0)
    tg = TGrid.for_measure(mu, 12)
    pts = np.linspace(0, 0.5, 11)[:, None]
    fam = standard_family(1)
    small = grand_maximal(mu, fam.subset(["gauss", "rho"]), 0.4, pts, tg)
    big = grand_maximal(mu, fam, 0.4, pts, tg)
    assert np.all(big.values >= small.values - 1e-15)


def test_maximal_sublinear(warm):
    rng = np.random.default_rng(2)
    a = new_grid_measure(1, 1 / 32, [0.0], rng.integers(0, 32, (6, 1)),
                         rng.uniform(-1, 1, 6))
    b = new_grid_measure(1, 1 / 32, [0.0], rng.integers(0, 32, (6, 1)),
                         rng.uniform(-1, 1, 6))
    from fracmeas.measures import measure_sum
    s = measure_sum([a, b])
    fam = standard_family(1)
    tg = TGrid.build(1e-4, 4.0, 8)
    pts = np.linspace(0, 1, 9)[:, None]
    va = grand_maximal(a, fam, 0.4, pts, tg).values
    vb = grand_maximal(b, fam, 0.4, pts, tg).values
    vs = grand_maximal(s, fam, 0.4, pts, tg).values
    assert np.all(vs <= va + vb + 1e-12)
    lat = unit_lattice(1)
    da = dyadic_maximal(a, lat, 0.4, pts, 0, 8).values
    db = dyadic_maximal(b, lat, 0.4, pts, 0, 8).values
    ds = dyadic_maximal(s, lat, 0.4, pts, 0, 8).values
    assert np.all(ds <= da + db + 1e-12)


def test_anti_local_reduces_to_grand(warm):
    mu, _ = cantor_frostman(4, 1.0)
    fam = standard_family(1)
    tg = TGrid.for_measure(mu, 12)
    pts = np.linspace(0, 0.5, 9)[:, None]
    g = grand_maximal(mu, fam, 0.4, pts, tg)
    a = anti_local_maximal(mu, fam, 0.4, float(np.sqrt(tg.t_min)) / 2, pts, tg)
    assert np.allclose(a.values, g.values, rtol=1e-12)


def test_anti_local_dirac_decreasing():
    d0 = dirac(1, h=1.0)
    fam = standard_family(1, normalize=False).subset(["gauss"])
    tg = TGrid.build(1.0, 1e4, 8)
    fld = anti_local_maximal(d0, fam, 0.0, 1.0, np.zeros((1, 1)), tg)
    # alpha = 0: sup_{s>1} s^{-d} Phi(0) attained at the smallest scale
    gauss_peak = (4 * math.pi) ** -0.5
    assert fld.values[0] == pytest.approx(gauss_peak / fld.att_scale[0], rel=1e-9)
    assert fld.att_scale[0] == pytest.approx(np.sqrt(tg.nodes[tg.nodes > 1.0][0]))


def test_grand_atom_bound_stable_across_scales(warm):
    # certified atom: the grand maximal field on 2Q is ~ C l(Q)^{-beta} with
    # one C across mass-preserving dilations (grids scale with the measure)
    cand, _ = atoms.make_frostman_atom(depth=5)
    fam = standard_family(1)
    cs = []
    for j in (0, 2, 4):
        s = 2.0 ** -j
        mu = cand.measure.dilated(s, cand.cube.corner)
        tg = TGrid.for_measure(mu, 12)
        pts = (np.linspace(-0.5, 1.5, 41) * s)[:, None]
        fld = grand_maximal(mu, fam, 1 - cand.beta, pts, tg)
        cs.append(float(np.max(fld.values)) * s ** cand.beta)
    assert max(cs) / min(cs) < 1.01


def test_anti_local_claim_on_seeded_instances(warm):
    # value > lambda at x forces value >= c lambda on B(x, rho); c logged
    fam = standard_family(1)
    cs = []
    for seed in range(6):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 12))
        mu = new_grid_measure(1, 1 / 64, [0.0], rng.integers(0, 64, (n, 1)),
                              rng.uniform(0.1, 1, n))
        tg = TGrid.for_measure(mu, 12)
        rho = 0.15
        x0 = np.array([[float(rng.uniform(0.2, 0.8))]])
        v0 = anti_local_maximal(mu, fam, 0.4, rho, x0, tg).values[0]
        ys = x0 + np.linspace(-rho, rho, 17)[:, None]
        vy = anti_local_maximal(mu, fam, 0.4, rho, ys, tg).values
        cs.append(float(np.min(vy) / v0))
    assert min(cs) > 0.05


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

def test_lowpass_mean_preservation(warm):
    mu, _ = cantor_frostman(4, 1.0)
    for k in (0, 2):
        lp = lp_lowpass(mu, k)
        assert abs(lp.grid_sum() - mu.total_mass()) <= 1e-6


def test_telescoping_exact(warm):
    cand, _ = atoms.make_frostman_atom(depth=4)
    mu = atoms.normalize_to_standard(cand).measure
    acc = lp_lowpass(mu, 0)
    K = 3
    for k in range(1, K + 1):
        band = lp_band(mu, k)
        neg = maximal.ProjField(origin=acc.origin, spacing=acc.spacing,
                                values=-acc.values, k=acc.k)
        acc = maximal._field_sub(band, neg)
    low_K = lp_lowpass(mu, K)
    off = np.rint((low_K.origin - acc.origin) / acc.spacing).astype(int)
    sl = tuple(slice(o, o + s) for o, s in zip(off, low_K.values.shape))
    assert np.max(np.abs(acc.values[sl] - low_K.values)) < 1e-13


def test_composition_band_then_tilde(warm):
    cand, _ = atoms.make_frostman_atom(depth=4)
    mu = atoms.normalize_to_standard(cand).measure
    band = lp_band(mu, 2)
    comp = lp_apply_tilde(band)
    off = np.rint((band.origin - comp.origin) / comp.spacing).astype(int)
    sl = tuple(slice(o, o + s) for o, s in zip(off, band.values.shape))
    scale = float(np.max(np.abs(band.values)))
    assert np.max(np.abs(comp.values[sl] - band.values)) <= 1e-5 * scale


def test_band_above_nyquist_flagged():
    mu = dirac(1, h=0.25)
    with pytest.raises(ValueError):
        lp_lowpass(mu, 8)


# ---------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------

def test_decay_fit_synthetic_power():
    x = np.geomspace(1.0, 100.0, 60)[:, None]
    fit = decay_fit(x, x.ravel() ** -2.0, np.zeros(1), 1.0, 100.0)
    assert fit.exponent == pytest.approx(-2.0, abs=1e-6)
    assert fit.residual < 1e-6


def test_decay_fit_needs_bins():
    x = np.geomspace(1.0, 2.0, 30)[:, None]
    with pytest.raises(ValueError):
        decay_fit(x, x.ravel(), np.zeros(1), 1.0, 2.0, n_bins=4)


def test_decay_fit_zero_tail_sentinel():
    x = np.geomspace(1.0, 100.0, 40)[:, None]
    fit = decay_fit(x, np.zeros(40), np.zeros(1), 1.0, 100.0)
    assert not fit.defined


def test_band_tail_power(warm):
    # realized profile tails are ~r^-4; fitted slope must reach the
    # configured M_fit = 4 window within grid slack
    cand, _ = atoms.make_frostman_atom(depth=5)
    mu = atoms.normalize_to_standard(cand).measure
    for k in (0, 1):
        band = lp_band(mu, k)
        fit = decay_fit(band.points(), band.values.ravel(), np.zeros(1),
                        4.0, 64.0)
        assert fit.defined
        assert fit.exponent <= -4.0 + 0.3
        assert fit.residual <= 0.1


def test_grand_tail_exponent(warm):
    cand, _ = atoms.make_frostman_atom(depth=5)
    fam = standard_family(1)
    tg = TGrid.for_measure(cand.measure, 16, reach=20.0)
    radii = np.geomspace(2.0, 16.0, 16)
    pts = np.concatenate([0.5 + radii, 0.5 - radii])[:, None]
    fld = grand_maximal(cand.measure, fam, 1 - BETA0, pts, tg)
    fit = decay_fit(pts, fld.values, np.array([0.5]), 2.0, 16.0)
    assert fit.exponent <= -(1 + BETA0) + 0.3
    assert fit.residual <= 0.1


def test_dyadic_scaling_under_dilation(warm):
    # lattice-aligned mass-preserving dilation shifts levels by log2(l)
    lat = unit_lattice(1)
    mu, _ = cantor_frostman(4, 1.0)
    dil = mu.dilated(0.5, [0.0])
    pts = mu.points()[:5]
    v = dyadic_maximal(mu, lat, 1 - BETA0, pts, 0, 9).values
    v2 = dyadic_maximal(dil, lat, 1 - BETA0, pts * 0.5, 1, 10).values
    assert np.allclose(v2, v * 2.0 ** BETA0, rtol=1e-12)
