"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line per criterion (run pytest with -s to
see them).  Desk scale: grids up to 64^3, minutes of total runtime.
"""

import time

import numpy as np
import pytest

import mollify_lab as ml
from mollify_lab.commutator import (
    cet_decompose,
    grad_l2,
    j_bounds,
    j_sum,
    j_terms,
)
from mollify_lab.energy_audit import (
    TimeSeries,
    energy_equality_residual,
    exact_stokes_shear,
    i_split,
    smoothed_balance,
    timed_term_bound,
)
from mollify_lab.exponents import (
    beta0,
    product_integrability_check,
    s_of_q,
    shinbrot_pointwise_bound,
    smoothing_margin,
    threshold_beta_by_root,
)
from mollify_lab.grid_field import (
    convective_term,
    divergence,
    lp_norm,
    magnitude,
    measured_seminorm,
    quadrature_integral,
    tensor_gradient,
)
from mollify_lab.lemma_lab import fit_rate
from mollify_lab.mollifier import (
    conv_translate,
    double_smooth,
    mollify,
    standard_kernel,
)
from mollify_lab.synth import (
    add_fields,
    cross_shear_field,
    curl_field,
    power_field,
    profile_seminorm,
    rough_shear_field,
    shear_field,
    weierstrass_field,
)


def _grid(n):
    return ml.HalfSpaceGrid(n, n, n, 1.0 / (n - 1))


def _report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _wall_zero_shear(g):
    prof = np.sin(np.pi * g.x3() / g.l3)
    prof[-1] = 0.0
    return shear_field(prof, g)


@pytest.fixture(scope="module")
def grid64():
    return _grid(64)


@pytest.fixture(scope="module")
def grid32():
    return _grid(32)


@pytest.fixture(scope="module")
def rough_mix64(grid64):
    return add_fields(rough_shear_field(0.5, 11, grid64),
                      curl_field(grid64, seed=42), 0.3)


def test_criterion_1_smoother_constants_and_rates(grid64):
    """Sup-error and gradient constants on power profiles, with rate fits."""
    g = grid64
    c_rho = standard_kernel().grad_l1
    eps_list = [2 * g.h, 4 * g.h, 8 * g.h, 16 * g.h]
    for alpha in (0.25, 0.5, 0.75):
        t0 = time.time()
        v = power_field(alpha, g)
        sem = profile_seminorm(v.components[0].values[0, 0, :], g.h, alpha)
        errs, grad_ratios = [], []
        for eps in eps_list:
            sm = conv_translate(v, eps)
            diff = ml.vector_from_arrays(
                g, *(a.values - b.values
                     for a, b in zip(sm.components, v.components)))
            errs.append(float(np.max(magnitude(diff))))
            from mollify_lab.mollifier import grad_conv_translate
            tens, _ = grad_conv_translate(v, eps)
            sup = float(np.max(np.sqrt(np.sum(tens * tens, axis=(0, 1)))))
            grad_ratios.append(sup * eps ** (1.0 - alpha) / sem)
        sup_ratio = max(e / (sem * eps ** alpha)
                        for e, eps in zip(errs, eps_list))
        slope = fit_rate(list(zip(sorted(eps_list, reverse=True),
                                  errs[::-1]))).slope
        elapsed = time.time() - t0
        ok = (sup_ratio <= 3.0 ** alpha * 1.1
              and max(grad_ratios) <= c_rho * 1.1
              and slope >= alpha - 0.1
              and elapsed < 60.0)
        _report(f"criterion 1 (alpha={alpha})", ok,
                f"sup ratio {sup_ratio:.3f} <= {3**alpha*1.1:.3f}, "
                f"grad ratio {max(grad_ratios):.3f} <= {c_rho*1.1:.3f}, "
                f"slope {slope:.3f} >= {alpha-0.1:.2f}, {elapsed:.1f}s")


def test_criterion_2_boundary_support_divergence(grid32, grid64):
    """Lifted support, wall trace of the double smoother, divergence."""
    worst_support = 0.0
    worst_wall = 0.0
    worst_div = 0.0
    checked = 0
    for g in (grid32, grid64):
        suite = {
            "shear": _wall_zero_shear(g),
            "power": power_field(0.5, g),
            "curl": curl_field(g, seed=42),
            "weier": weierstrass_field(0.5, 7, None, 2.0, g),
        }
        for name, v in suite.items():
            structural = name in ("shear", "power")  # x3-profiles: d1 == 0
            for m in (2, 4, 8):
                eps = m * g.h
                sm = conv_translate(v, eps)
                worst_support = max(worst_support,
                                    float(np.max(magnitude(sm)[:, :, :m])))
                div_admissible = structural or v.support_margin >= 3 * m
                if div_admissible:
                    worst_div = max(worst_div, lp_norm(divergence(sm), np.inf))
                    checked += 1
                if m <= 4:
                    ds = double_smooth(v, eps, enforce_margin=False)
                    worst_wall = max(worst_wall,
                                     float(np.max(magnitude(ds)[:, :, 0])))
    ok = worst_support == 0.0 and worst_wall == 0.0 and worst_div <= 1e-12
    _report("criterion 2", ok,
            f"support max {worst_support}, wall max {worst_wall}, "
            f"div max {worst_div:.2e} over {checked} admissible combos")


def test_criterion_3_decomposition_identity(grid32, grid64):
    """Nodewise algebraic identity of the four-part splitting."""
    worst = 0.0
    for g in (grid32, grid64):
        v = curl_field(g, seed=42)
        for m in (2, 4):
            parts = cet_decompose(v, m * g.h)
            worst = max(worst, parts.residual)
    ok = worst <= 1e-12
    _report("criterion 3", ok, f"max relative nodewise residual {worst:.2e}")


def test_criterion_4_advection_bounds(grid64, rough_mix64):
    """Term bounds, scale uniformity, sum rule, decay of the pairing."""
    g = grid64
    alpha = 0.5
    mix = rough_mix64
    sem = measured_seminorm(mix, alpha)
    v0 = lp_norm(mix, 2.0)

    # |J3| bound with measured norms; sum rule at 1e-10
    sum_ok = True
    j3_ok = True
    for m in (2, 4):
        terms = j_terms(mix, m * g.h)
        _, _, b3 = j_bounds(mix, m * g.h, alpha, v0, seminorm=sem)
        j3_ok &= abs(terms.j3) <= b3 * 1.1
        sum_ok &= abs(terms.total - terms.lhs_pairing) \
            <= 1e-10 * abs(terms.lhs_pairing)

    # scale uniformity: the measured envelope of J1 (the unsigned integral
    # from its interpolation chain) against the radius-free bound b1
    def envelope(eps):
        veps = mollify(mix, eps, enforce_margin=False)
        sm = conv_translate(mix, eps)
        diff = ml.vector_from_arrays(
            g, *(a.values - b.values
                 for a, b in zip(sm.components, veps.components)))
        gs = tensor_gradient(sm)
        gmag = np.sqrt(np.sum(gs * gs, axis=(0, 1)))
        dmag = magnitude(diff)
        return (dmag.max() ** (1 - alpha) * gmag.max() ** alpha
                * quadrature_integral(
                    g, magnitude(veps) * dmag ** alpha * gmag ** (1 - alpha)))

    b1 = j_bounds(mix, 4 * g.h, alpha, v0, seminorm=sem)[0]
    env4, env8 = envelope(4 * g.h), envelope(8 * g.h)
    stability = env8 / env4
    j1_4 = j_terms(mix, 4 * g.h).j1
    j1_8 = j_terms(mix, 8 * g.h).j1
    env_ok = (0.9 <= stability <= 1.1
              and abs(j1_4) <= env4 and abs(j1_8) <= env8
              and env4 <= b1 * 1.1 and env8 <= b1 * 1.1)

    # |sum of J| decreases with positive fitted slope along four halvings;
    # the probe has an exactly telescoping grid limit
    cross = cross_shear_field(g, seed=3)
    eps_list = [16 * g.h, 8 * g.h, 4 * g.h, 2 * g.h, g.h]
    vals = [abs(j_sum(cross, eps)) for eps in eps_list]
    rep = fit_rate(list(zip(eps_list, vals)))
    tail_monotone = all(vals[i] > vals[i + 1] for i in range(1, len(vals) - 1))
    decay_ok = rep.slope > 0.0 and tail_monotone

    ok = j3_ok and sum_ok and env_ok and decay_ok
    _report("criterion 4", ok,
            f"J3 bound {j3_ok}, sum rule {sum_ok}, J1 envelope/b1 halving "
            f"ratio {stability:.3f}, |sumJ| slope {rep.slope:.3f}")


def test_criterion_5_exponent_calculus():
    """Closed forms, conjugacy, threshold recovery, integrability sweep."""
    t0 = time.time()
    ok = abs(beta0(1.0 / 3.0) - 18.0 / 11.0) <= 1e-12
    rng = np.random.default_rng(2024)
    for _ in range(100):
        beta = float(rng.uniform(1.05, 1.99))
        lo = 4.0 / (2.0 + beta)
        q = float(rng.uniform(lo * 1.01 + 1e-6, 1.999))
        if not lo < q < 2.0:
            continue
        s, s_prime = s_of_q(q, beta)
        ok &= abs(1.0 / s + 1.0 / s_prime - 1.0) <= 1e-12
    for _ in range(20):
        alpha = float(rng.uniform(0.05, 0.95))
        ok &= abs(threshold_beta_by_root(alpha)
                  - 6.0 / (3.0 + 2.0 * alpha)) <= 1e-10
    betas = np.linspace(0.5, 4.0, 10_000)
    ok &= all(product_integrability_check(float(b)) == (b >= 2.0)
              for b in betas)
    elapsed = time.time() - t0
    ok &= elapsed < 1.0
    _report("criterion 5", ok, f"all identities hold, {elapsed:.2f}s")


def test_criterion_6_energy_audit_exact_shear():
    """Second-order energy residual, exact-zero advection, split identity."""
    t0 = time.time()
    nu = 0.01
    res = []
    for n, snaps in ((17, 5), (33, 9), (65, 17)):
        g = _grid(n)
        s = exact_stokes_shear(1.0, 1, nu, g, np.linspace(0.0, 1.0, snaps))
        res.append(abs(energy_equality_residual(s, nu)))
    orders = [float(np.log2(res[i] / res[i + 1])) for i in range(2)]
    order_ok = all(1.7 <= o <= 2.3 for o in orders)

    g = _grid(64)
    series = exact_stokes_shear(1.0, 1, nu, g, np.linspace(0.0, 1.0, 16))
    rows = [smoothed_balance(series, m * g.h, nu) for m in (8, 4, 2)]
    conv_ok = all(abs(r.term_conv) <= 1e-10 for r in rows)
    split_ok = all(
        abs(r.i1 + r.i2 - r.term_dt) <= 1e-10 * max(abs(r.term_dt), 1e-300)
        for r in rows)
    resids = [abs(r.residual) for r in rows]
    dec_ok = all(resids[i] > resids[i + 1] for i in range(len(resids) - 1))
    elapsed = time.time() - t0
    ok = order_ok and conv_ok and split_ok and dec_ok and elapsed < 300.0
    _report("criterion 6", ok,
            f"orders {[round(o, 2) for o in orders]}, term_conv "
            f"{max(abs(r.term_conv) for r in rows):.1e}, split residual "
            f"{max(abs(r.i1 + r.i2 - r.term_dt) for r in rows):.1e}, "
            f"balance residuals {[f'{x:.2e}' for x in resids]}, {elapsed:.0f}s")


def test_criterion_7_time_derivative_mismatch_rate():
    """Mismatch-term decay rate and the exact power law of its bound."""
    alpha, beta, q = 0.5, 1.8, 1.1
    margin = smoothing_margin(alpha, q, beta)
    assert margin > 0
    g = _grid(48)
    base = rough_shear_field(alpha, 7, g)
    times = np.linspace(0.0, 1.0, 6)
    snaps = tuple(ml.vector_from_arrays(
        g, *(np.exp(-0.5 * t) * c.values for c in base.components))
        for t in times)
    series = TimeSeries(g, times, snaps)
    eps_list = [8 * g.h, 4 * g.h, 2 * g.h]
    vals, bounds = [], []
    for eps in eps_list:
        _, i2 = i_split(series, eps)
        vals.append(abs(i2))
        bounds.append(timed_term_bound(series, eps, alpha, beta, q))
    slope = fit_rate(list(zip(eps_list, vals))).slope
    ratio_err = max(
        abs(bounds[i + 1].value / bounds[i].value - 2.0 ** (-margin))
        for i in range(2))
    dominated = all(v <= b.value * 1.1 for v, b in zip(vals, bounds))
    ok = (slope >= margin - 0.15 and ratio_err <= 1e-10 * 2.0 ** (-margin)
          and dominated)
    _report("criterion 7", ok,
            f"slope {slope:.3f} >= {margin - 0.15:.3f}, bound halving ratio "
            f"error {ratio_err:.2e}, |i2| <= bound*1.1: {dominated}")


def test_criterion_8_convective_interpolation_bound():
    """Mixed-norm bound of the advection term from measured norms."""
    g = _grid(48)
    fields = {"shear": _wall_zero_shear(g), "curl": curl_field(g, seed=42)}
    ok = True
    detail = []
    for name, v in fields.items():
        conv = convective_term(v)
        v2, vinf, gl2 = lp_norm(v, 2.0), lp_norm(v, np.inf), grad_l2(v)
        for r in (1.2, 1.5):
            lhs = lp_norm(conv, r)
            rhs = shinbrot_pointwise_bound(v2, vinf, gl2, v2, r)
            ok &= lhs <= rhs * 1.1
            detail.append(f"{name} r={r}: {lhs:.3f} <= {rhs * 1.1:.3f}")
    _report("criterion 8", ok, "; ".join(detail))
