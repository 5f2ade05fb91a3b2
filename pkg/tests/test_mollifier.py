"""Kernel constants, stencils, and the wall-respecting smoothing operators."""

import json

import numpy as np
import pytest

import mollify_lab as ml
from mollify_lab.grid_field import ScalarField, divergence, lp_norm, magnitude
from mollify_lab.mollifier import (
    MisalignedTranslationError,
    TruncationContaminationError,
    UnderResolvedKernelError,
    _apply_stencil,
    conv_translate,
    double_smooth,
    grad_conv_translate,
    kernel_lp_norm,
    make_stencil,
    mollify,
    standard_kernel,
    translate,
)
from mollify_lab.synth import curl_field, power_field, profile_seminorm, shear_field


def grid(n=16):
    return ml.HalfSpaceGrid(n, n, n, 1.0 / (n - 1))


def test_kernel_constants_against_coarse_quadrature():
    # independent fixed-grid Riemann oracle, tolerance 1e-6 on normalization
    r = np.linspace(0.0, 1.0, 200001)[1:-1]
    mass = np.trapezoid(4 * np.pi * r * r * np.exp(-1.0 / (1.0 - r * r)), r)
    k = standard_kernel()
    assert k.normalization == pytest.approx(1.0 / mass, rel=1e-6)
    grad_mass = np.trapezoid(
        4 * np.pi * r ** 3 * 2.0 / (1.0 - r * r) ** 2 * np.exp(-1.0 / (1.0 - r * r)), r)
    assert k.grad_l1 == pytest.approx(grad_mass / mass, rel=1e-6)
    # unit mass and L^1 norm agree
    assert kernel_lp_norm(1.0) == pytest.approx(1.0, rel=1e-10)


def test_stencil_single_node_at_eps_h():
    st = make_stencil(standard_kernel(), 1.0, 1.0)
    assert len(st.offsets) == 1
    assert st.weights[0] == 1.0
    assert np.all(st.grad_weights == 0.0)


def test_stencil_weight_sums():
    st = make_stencil(standard_kernel(), 1.0, 0.25)
    assert abs(st.weights.sum() - 1.0) <= 1e-15
    assert np.all(np.abs(st.grad_weights.sum(axis=0)) <= 1e-16)


def test_stencil_center_weight_vs_fine_quadrature():
    # w0 = rho_eps(0) h^3 / (sum of samples h^3); the denominator is within
    # 1e-3 of the exact unit mass at eps = 4h, so w0 matches the fine-
    # quadrature value C e^-1 (h/eps)^3 to 1e-3 relative
    h, eps = 0.25, 1.0
    st = make_stencil(standard_kernel(), eps, h)
    w0 = st.weights[np.all(st.offsets == 0, axis=1)][0]
    expected = standard_kernel().normalization * np.exp(-1.0) * (h / eps) ** 3
    assert w0 == pytest.approx(expected, rel=1e-3)


def test_stencil_under_resolved_error():
    with pytest.raises(UnderResolvedKernelError):
        make_stencil(standard_kernel(), 0.5, 1.0)


def test_stencil_json_dump():
    st = make_stencil(standard_kernel(), 0.5, 0.25)
    data = json.loads(st.to_json())
    assert data["epsilon"] == 0.5
    assert len(data["offsets"]) == len(data["weights"])
    assert sum(data["weights"]) == pytest.approx(1.0, abs=1e-14)


def test_fft_path_matches_direct():
    g = grid(12)
    rng = np.random.default_rng(8)
    vals = rng.normal(size=g.shape)
    vals[:, :, -4:] = 0.0
    st = make_stencil(standard_kernel(), 3 * g.h, g.h)
    a = _apply_stencil(vals, st.offsets, st.weights, method="direct")
    b = _apply_stencil(vals, st.offsets, st.weights, method="fft")
    assert np.max(np.abs(a - b)) <= 1e-10 * max(np.max(np.abs(a)), 1e-300)


def test_mollify_preserves_unit_patch():
    g = grid(16)
    vals = np.zeros(g.shape)
    vals[:, :, 4:12] = 1.0  # tangentially uniform slab
    out = mollify(ScalarField(g, vals), 2 * g.h)
    # interior of the slab sees only ones within the stencil radius
    assert np.allclose(out.values[:, :, 7:9], 1.0, atol=1e-14)


def test_mollify_preserves_linear_tangential():
    # symmetric stencil kills odd moments: linear-in-x1 data is reproduced
    g = grid(16)
    x1 = np.arange(g.n1)[:, None, None] * g.h
    vals = np.broadcast_to(np.sin(2 * np.pi * x1 / g.period1), g.shape).copy()
    vals = vals * 0  # placeholder replaced below
    ramp = np.broadcast_to(x1, g.shape).copy()
    ramp[:, :, -4:] = 0.0
    out = mollify(ScalarField(g, ramp), 2 * g.h)
    # away from the periodic wrap and the x3 support edges
    assert np.allclose(out.values[4:-4, :, 4:10], ramp[4:-4, :, 4:10], atol=1e-12)


def test_mollify_power_profile_sup_bound():
    # |u_eps - u| <= [u] eps^alpha with sharp constant 1
    alpha = 0.5
    g = grid(32)
    v = power_field(alpha, g)
    u = v.components[0]
    sem = profile_seminorm(u.values[0, 0, :], g.h, alpha)
    for eps in (2 * g.h, 4 * g.h):
        out = mollify(u, eps, enforce_margin=False)
        err = np.max(np.abs(out.values - u.values))
        assert err <= sem * eps ** alpha * (1.0 + 1e-12)


def test_mollify_margin_gate():
    g = grid(12)
    with pytest.raises(TruncationContaminationError):
        mollify(ScalarField(g, np.ones(g.shape)), 2 * g.h)


def test_translate_support_and_composition():
    g = grid(16)
    vals = np.zeros(g.shape)
    vals[:, :, 1:6] = 1.0
    f = ScalarField(g, vals)
    t = translate(f, 2 * g.h)  # shift 4 layers up
    assert np.max(np.abs(t.values[:, :, :5])) == 0.0
    assert np.array_equal(t.values[:, :, 5:10], vals[:, :, 1:6])
    # translate by eps twice = translate by 2 eps
    t2 = translate(translate(f, g.h), g.h)
    assert np.array_equal(t2.values, t.values)
    # L2 norm preserved while support stays inside the box
    assert lp_norm(t, 2.0) == pytest.approx(lp_norm(f, 2.0), rel=1e-14)


def test_translate_misaligned_error():
    g = grid(12)
    f = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(MisalignedTranslationError):
        translate(f, 0.75 * g.h)


def test_conv_translate_zero_field():
    g = grid(12)
    z = ScalarField(g, np.zeros(g.shape))
    assert lp_norm(conv_translate(z, 2 * g.h), np.inf) == 0.0


def test_conv_translate_support_exact():
    g = grid(24)
    v = curl_field(g, seed=5)
    for m in (2, 4):
        eps = m * g.h
        sm = conv_translate(v, eps)
        # exactly zero at all nodes with x3 <= eps - h
        assert np.max(magnitude(sm)[:, :, :m]) == 0.0


def test_conv_translate_power_sup_bound():
    alpha = 0.5
    g = grid(32)
    v = power_field(alpha, g)
    sem = profile_seminorm(v.components[0].values[0, 0, :], g.h, alpha)
    for m in (2, 4, 8):
        eps = m * g.h
        sm = conv_translate(v, eps)
        err = np.max(magnitude(ml.vector_from_arrays(
            g, *(a.values - b.values for a, b in zip(sm.components, v.components)))))
        assert err <= 3.0 ** alpha * sem * eps ** alpha * (1.0 + 1e-12)


def test_conv_translate_shear_divergence_exact():
    g = grid(16)
    v = shear_field(lambda z: np.sin(np.pi * z / g.l3), g)
    sm = conv_translate(v, 2 * g.h)
    assert lp_norm(divergence(sm), np.inf) == 0.0


def test_divergence_commutation():
    # support must stay 3*ceil(eps/h) layers below the top so the stored
    # smoothed field is the unbounded-domain operator everywhere
    g = grid(24)
    v = curl_field(g, seed=3, cutoff=(0.05, 0.15, 0.3, 0.45))
    assert v.support_margin >= 12
    scale = lp_norm(v, np.inf) / g.h
    for m in (1, 2, 4):
        eps = m * g.h
        sm = conv_translate(v, eps)
        ds = divergence(sm)
        sd = conv_translate(divergence(v), eps)
        assert np.max(np.abs(ds.values - sd.values)) <= 1e-12 * scale
        assert lp_norm(ds, np.inf) <= 1e-12 * scale


def test_grad_conv_translate_constant_patch():
    g = grid(16)
    vals = np.zeros(g.shape)
    vals[:, :, 2:12] = 3.0
    stencil_form, fd_form = grad_conv_translate(ScalarField(g, vals), 2 * g.h)
    # inside the patch, far from its x3 edges, both forms vanish
    assert np.max(magnitude(stencil_form)[:, :, 8:11]) <= 1e-14
    assert np.max(magnitude(fd_form)[:, :, 8:11]) <= 1e-14


def test_grad_conv_translate_power_bound():
    alpha = 0.5
    g = grid(32)
    v = power_field(alpha, g)
    sem = profile_seminorm(v.components[0].values[0, 0, :], g.h, alpha)
    c_rho = standard_kernel().grad_l1
    for m in (2, 4):
        eps = m * g.h
        tens, _ = grad_conv_translate(v, eps)
        sup = np.max(np.sqrt(np.sum(tens * tens, axis=(0, 1))))
        assert sup * eps ** (1 - alpha) <= c_rho * sem * 1.1


def test_grad_forms_agree_second_order():
    # halving h roughly quarters the difference between the kernel-gradient
    # form and the finite-difference form
    from mollify_lab.synth import cutoff_profile

    diffs = []
    for n in (17, 33):  # h = 1/16, 1/32: the fixed radius stays node-aligned
        g = ml.HalfSpaceGrid(n, n, n, 1.0 / (n - 1))
        # smooth bump supported in [0.05, 0.55]: stays representable after
        # the 2*eps shift plus the eps spread
        v = shear_field(cutoff_profile(g.x3(), g.l3, (0.05, 0.25, 0.35, 0.55)), g)
        eps = 0.125
        tens, fd = grad_conv_translate(v.components[0], eps)
        diffs.append(np.max(magnitude(ml.vector_from_arrays(
            g, *(a.values - b.values
                 for a, b in zip(tens.components, fd.components))))))
    assert diffs[0] / diffs[1] > 2.5


def test_double_smooth_wall_plane_exact_zero():
    g = grid(24)
    for v in (curl_field(g, seed=2),
              shear_field(lambda z: np.sin(np.pi * z / g.l3), g)):
        sm = double_smooth(v, 2 * g.h, enforce_margin=False)
        assert np.max(magnitude(sm)[:, :, 0]) == 0.0


def test_double_smooth_zero_field():
    g = grid(12)
    z = ScalarField(g, np.zeros(g.shape))
    assert lp_norm(double_smooth(z, 2 * g.h, enforce_margin=False), np.inf) == 0.0


def test_double_smooth_divergence_free():
    g = grid(24)
    v = curl_field(g, seed=2)
    sm = double_smooth(v, 2 * g.h)
    assert lp_norm(divergence(sm), np.inf) <= 1e-12 * lp_norm(v, np.inf) / g.h


def test_double_smooth_margin_gate():
    g = grid(12)
    vals = np.zeros(g.shape)
    vals[:, :, :-1] = 1.0  # margin 1 < 2*ceil(eps/h)
    with pytest.raises(TruncationContaminationError):
        double_smooth(ScalarField(g, vals), 2 * g.h)


def test_threads_env_bitwise_identical(monkeypatch):
    g = grid(16)
    v = curl_field(g, seed=9)
    base = conv_translate(v, 2 * g.h)
    monkeypatch.setenv("MOLLIFY_LAB_THREADS", "4")
    threaded = conv_translate(v, 2 * g.h)
    for a, b in zip(base.components, threaded.components):
        assert np.array_equal(a.values, b.values)
