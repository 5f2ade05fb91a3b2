"""Advection-tensor decomposition: identity, pairings, bounds."""

import numpy as np
import pytest

import mollify_lab as ml
from mollify_lab.commutator import (
    cet_decompose,
    grad_l2,
    j_bounds,
    j_report,
    j_sum,
    j_terms,
    stencil_increment_moment,
)
from mollify_lab.grid_field import lp_norm, measured_seminorm
from mollify_lab.mollifier import TruncationContaminationError, standard_kernel
from mollify_lab.synth import add_fields, cross_shear_field, curl_field, rough_shear_field


def grid(n=24):
    return ml.HalfSpaceGrid(n, n, n, 1.0 / (n - 1))


def test_zero_field_all_parts_zero():
    g = grid(16)
    zero = ml.vector_from_arrays(g, *(np.zeros(g.shape) for _ in range(3)))
    parts = cet_decompose(zero, 2 * g.h)
    for t in (parts.lhs, parts.main, parts.remainder, parts.defect):
        assert np.max(np.abs(t)) == 0.0
    terms = j_terms(zero, 2 * g.h, parts=parts)
    assert terms.j1 == terms.j2 == terms.j3 == 0.0


def test_constant_patch_has_no_increments():
    # where the field is constant on a stencil neighbourhood, the remainder
    # and the defect vanish and the left side equals the product of means
    g = grid(20)
    vals = np.zeros(g.shape)
    vals[:, :, 4:14] = 2.0  # tangentially uniform block
    v = ml.vector_from_arrays(g, vals, np.zeros(g.shape), np.zeros(g.shape))
    parts = cet_decompose(v, 2 * g.h)
    sl = np.s_[:, :, 7:11]
    assert np.max(np.abs(parts.remainder[:, :, sl[0], sl[1], sl[2]])) == 0.0
    assert np.max(np.abs(parts.defect[:, :, sl[0], sl[1], sl[2]])) == 0.0
    assert np.allclose(parts.lhs[0, 0][sl], parts.main[0, 0][sl], atol=1e-14)


def test_identity_residual_machine_precision():
    for n in (24, 32):
        g = grid(n)
        v = curl_field(g, seed=42)
        for m in (2, 4):
            parts = cet_decompose(v, m * g.h)
            assert parts.residual <= 1e-12


def test_margin_gate():
    g = grid(16)
    v = ml.vector_from_arrays(g, *(np.ones(g.shape) for _ in range(3)))
    with pytest.raises(TruncationContaminationError):
        cet_decompose(v, 2 * g.h)


def test_sum_rule_and_report():
    g = grid(32)
    v = curl_field(g, seed=42)
    for m in (2, 4):
        terms = j_terms(v, m * g.h)
        assert abs(terms.total - terms.lhs_pairing) <= 1e-10 * abs(terms.lhs_pairing)
    row = j_report(v, 2 * g.h, alpha=0.5)
    assert set(row) >= {"epsilon", "j1", "j2", "j3", "sum", "bounds", "residual"}
    assert row["residual"] <= 1e-12


def test_j_sum_matches_decomposition_path():
    g = grid(24)
    v = curl_field(g, seed=42)
    terms = j_terms(v, 2 * g.h)
    light = j_sum(v, 2 * g.h)
    assert light == pytest.approx(terms.lhs_pairing, rel=1e-10, abs=1e-14)


def test_shear_pairing_vanishes():
    # only the (1,1) tensor entry is nonzero and it meets d1 S1 = 0
    from mollify_lab.synth import shear_field

    g = grid(24)
    z0 = 0.8 * g.l3  # leave top margin for the stencil gate
    prof = np.where(g.x3() < z0, np.sin(np.pi * g.x3() / z0), 0.0)
    v = shear_field(prof, g)
    terms = j_terms(v, 2 * g.h)
    assert abs(terms.lhs_pairing) <= 1e-12
    assert abs(terms.total) <= 1e-12


def test_j3_bound_with_measured_norms():
    g = grid(32)
    alpha = 0.5
    mix = add_fields(rough_shear_field(alpha, 11, g), curl_field(g, seed=42), 0.3)
    sem = measured_seminorm(mix, alpha)
    v0 = lp_norm(mix, 2.0)
    for m in (2, 4):
        terms = j_terms(mix, m * g.h)
        _, _, b3 = j_bounds(mix, m * g.h, alpha, v0, seminorm=sem)
        assert abs(terms.j3) <= b3 * 1.1


def test_bounds_radius_invariant():
    g = grid(24)
    v = curl_field(g, seed=1)
    sem = measured_seminorm(v, 0.5)
    v0 = lp_norm(v, 2.0)
    a = j_bounds(v, 2 * g.h, 0.5, v0, seminorm=sem)
    b = j_bounds(v, 4 * g.h, 0.5, v0, seminorm=sem)
    for x, y in zip(a, b):
        assert abs(x - y) <= 0.01 * abs(x)


def test_bounds_formulas():
    g = grid(16)
    v = curl_field(g, seed=1)
    alpha = 0.4
    sem, v0 = 2.0, 3.0
    gl2 = grad_l2(v)
    c_rho = standard_kernel().grad_l1
    b1, b2, b3 = j_bounds(v, 2 * g.h, alpha, v0, seminorm=sem)
    common = sem * v0 ** 1.4 * gl2 ** 0.6
    assert b3 == pytest.approx(c_rho ** alpha * common, rel=1e-12)
    assert b2 == pytest.approx(
        c_rho ** alpha * 2.0 ** 1.4 * sem ** alpha * gl2 ** 0.6 * v0 ** 1.4,
        rel=1e-12)
    assert b1 > 0.0


def test_stencil_increment_moment_below_radius_power():
    # every increment offset lies strictly inside the kernel ball
    for m in (2, 4, 8):
        for expo in (0.25, 0.21, 0.5):
            h = 1.0 / 31
            val = stencil_increment_moment(m * h, h, expo)
            assert val <= (m * h) ** expo


def test_cross_shear_sum_decays():
    # below the tangential damping peak the smoothed advection pairing
    # decays toward its exactly-telescoping grid limit
    g = ml.HalfSpaceGrid(64, 64, 64, 1.0 / 63)
    v = cross_shear_field(g, seed=3)
    vals = [abs(j_sum(v, m * g.h)) for m in (8, 4, 2, 1)]
    assert all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))
