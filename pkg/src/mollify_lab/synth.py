"""Deterministic generators of structured test fields.

All generators produce divergence-free, wall-vanishing vector fields whose
regularity is known by construction: shear profiles, curl fields from seeded
band-limited potentials, power-law profiles with a prescribed Hölder
exponent, and lacunary (Weierstrass-type) fields that are rough tangentially.
Roughness lives only in x1/x2; the x3 dependence is a smooth cutoff vanishing
identically near the wall and near the box top, so the zero extension
preserves the Hölder seminorm.  Randomness comes from a counter-based
generator keyed on the seed, so parallel generation cannot reorder it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .grid_field import HalfSpaceGrid, VectorField3, vector_from_arrays


@dataclass(frozen=True)
class GeneratorSpec:
    """Serializable recipe: same spec + grid give bitwise-identical fields."""

    kind: str                      # shear | curl | power | weierstrass
    seed: int = 0
    alpha: float = 0.5
    amplitude: float = 1.0
    cutoff: tuple[float, float, float, float] = (0.08, 0.22, 0.5, 0.7)
    modes: int = 3                 # tangential band limit (curl)
    levels: int | None = None      # lacunary depth; None picks the grid limit
    lam: float = 2.0               # lacunary frequency ratio

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @staticmethod
    def from_json(text: str) -> "GeneratorSpec":
        data = json.loads(text)
        if "cutoff" in data:
            data["cutoff"] = tuple(data["cutoff"])
        return GeneratorSpec(**data)


def generate(spec: GeneratorSpec, grid: HalfSpaceGrid) -> VectorField3:
    if spec.kind == "shear":
        prof = spec.amplitude * np.sin(np.pi * grid.x3() / grid.l3)
        prof[-1] = 0.0  # sin(pi) is an exact zero of the profile
        return shear_field(prof, grid)
    if spec.kind == "curl":
        return curl_field(grid, seed=spec.seed, amplitude=spec.amplitude,
                          modes=spec.modes, cutoff=spec.cutoff)
    if spec.kind == "power":
        return power_field(spec.alpha, grid, amplitude=spec.amplitude,
                           plateau=spec.cutoff[2], support_end=spec.cutoff[3])
    if spec.kind == "weierstrass":
        return weierstrass_field(spec.alpha, spec.seed, spec.levels, spec.lam,
                                 grid, amplitude=spec.amplitude,
                                 cutoff=spec.cutoff)
    raise ValueError(f"unknown generator kind {spec.kind!r}")


# --------------------------------------------------------------------------
# smooth cutoffs
# --------------------------------------------------------------------------

def _ramp(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp: identically 0 for t <= 0 and 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    lo = np.zeros_like(t)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    with np.errstate(invalid="ignore"):
        out = np.where(t <= 0.0, lo, np.where(t >= 1.0, 1.0, a / (a + b)))
    return out


def cutoff_profile(z: np.ndarray, l3: float,
                   fractions: tuple[float, float, float, float]) -> np.ndarray:
    """Smooth bump in x3: exactly 0 below a*l3 and above d*l3, 1 on [b, c]*l3."""
    a, b, c, d = (f * l3 for f in fractions)
    w = np.ones_like(np.asarray(z, dtype=np.float64))
    if b > a:
        w = w * _ramp((z - a) / (b - a))
    if d > c:
        w = w * _ramp((d - z) / (d - c))
    return w


def _gentle_ramp(t: np.ndarray, eta: float = 0.1) -> np.ndarray:
    """C-infinity ramp 0 -> 1 on [0, 1] with near-minimal peak slope.

    The integral of a plateau bump (flat on [eta, 1-eta]); peak slope is
    1/(1 - eta) instead of the ~2/length of the plain ramp, which keeps a
    compactly supported taper from dominating Hölder-seminorm measurements.
    """
    fine = np.linspace(0.0, 1.0, 4097)
    bump = _ramp(fine / eta) * _ramp((1.0 - fine) / eta)
    cum = np.concatenate([[0.0], np.cumsum((bump[1:] + bump[:-1]) * 0.5)])
    cum /= cum[-1]
    t = np.asarray(t, dtype=np.float64)
    out = np.interp(np.clip(t, 0.0, 1.0), fine, cum)
    out[t <= 0.0] = 0.0
    out[t >= 1.0] = 1.0
    return out


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def shear_field(g, grid: HalfSpaceGrid) -> VectorField3:
    """v = (g(x3), 0, 0): exactly divergence-free, zero where g vanishes.

    ``g`` is a callable of x3 or a length-n3 array of node values.
    """
    z = grid.x3()
    prof = np.asarray(g(z) if callable(g) else g, dtype=np.float64)
    if prof.shape != (grid.n3,):
        raise ValueError(f"profile must have one value per x3 node, got {prof.shape}")
    if abs(prof[0]) > 0.0:
        raise ValueError("shear profile must vanish at the wall, g(0) = 0")
    vals = np.broadcast_to(prof, grid.shape).copy()
    zero = np.zeros(grid.shape)
    return vector_from_arrays(grid, vals, zero, zero.copy())


def profile_seminorm(g_values: np.ndarray, h: float, alpha: float) -> float:
    """Exact Hölder seminorm of a 1-d profile over its nodes.

    For fields depending on x3 only, the full-grid seminorm reduces to this
    (the distance between two nodes is minimized at equal tangential
    coordinates).
    """
    z = np.arange(len(g_values)) * h
    dz = np.abs(z[:, None] - z[None, :])
    dv = np.abs(g_values[:, None] - g_values[None, :])
    mask = dz > 0
    return float(np.max(dv[mask] / dz[mask] ** alpha))


def power_field(alpha: float, grid: HalfSpaceGrid, amplitude: float = 1.0,
                plateau: float = 0.5, support_end: float = 0.92) -> VectorField3:
    """v = (x3^alpha * w(x3), 0, 0): the canonical Hölder-alpha probe.

    w is identically 1 on [0, plateau*L3] and descends to exactly 0 at
    support_end*L3 through the gentle taper, so the near-wall power profile,
    not the cutoff, carries the Hölder seminorm and the smoothing error.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    z = grid.x3()
    zp, zd = plateau * grid.l3, support_end * grid.l3
    w = _gentle_ramp((zd - z) / (zd - zp))
    w[z <= zp] = 1.0
    return shear_field(amplitude * z ** alpha * w, grid)


def curl_field(grid: HalfSpaceGrid, seed: int = 42, amplitude: float = 1.0,
               modes: int = 3,
               cutoff: tuple[float, float, float, float] = (0.08, 0.22, 0.5, 0.7),
               ) -> VectorField3:
    """Discrete curl of a seeded band-limited potential with x3 cutoff.

    The same central differences as ``divergence`` are used, so the discrete
    divergence vanishes to machine precision; the cutoff zeroes the potential
    in bands at the wall and the box top, hence the field too.
    """
    from .grid_field import _d1, _d2, _d3

    rng = np.random.Generator(np.random.Philox(key=seed))
    x1 = np.arange(grid.n1)[:, None, None] / grid.n1
    x2 = np.arange(grid.n2)[None, :, None] / grid.n2
    z = grid.x3()
    w = cutoff_profile(z, grid.l3, cutoff)[None, None, :]
    zfrac = (z / grid.l3)[None, None, :]

    # full tangential band: a dense spectrum keeps triple products of modes
    # from vanishing by orthogonality, so advection integrals are genuine
    psi = []
    for _ in range(3):
        comp = np.zeros(grid.shape)
        for m1 in range(-modes, modes + 1):
            for m2 in range(0, modes + 1):
                if m2 == 0 and m1 <= 0:
                    continue
                m3 = int(rng.integers(0, modes + 1))
                amp = float(rng.normal()) / (1.0 + m1 * m1 + m2 * m2)
                ph = float(rng.uniform(0.0, 2.0 * np.pi))
                ph3 = float(rng.uniform(0.0, 2.0 * np.pi))
                comp += amp * np.cos(
                    2.0 * np.pi * (m1 * x1 + m2 * x2) + ph
                ) * np.cos(np.pi * m3 * zfrac + ph3)
        psi.append(comp * w)

    return _normalized_curl(grid, psi, amplitude)


def weierstrass_field(alpha: float, seed: int, levels: int | None, lam: float,
                      grid: HalfSpaceGrid, amplitude: float = 1.0,
                      cutoff: tuple[float, float, float, float] = (0.08, 0.22, 0.5, 0.7),
                      ) -> VectorField3:
    """Lacunary curl field with designed tangential Hölder exponent alpha.

    The potential has a single vertical component w(x3) * psi(x1, x2), with
    psi stacking modes at frequencies lam^j and amplitudes lam^(-(1+alpha) j);
    both axis directions appear at every level, so neighbouring levels form
    resonant triads.  The curl is purely tangential, v = (w D2 psi,
    -w D1 psi, 0): the smooth cutoff enters multiplicatively only, never
    through its own derivatives, and the discrete divergence vanishes because
    the tangential differences commute.  ``levels`` defaults to the deepest
    Nyquist-resolved level.
    """
    from .grid_field import _d1, _d2

    if levels is None:
        # stay two octaves below the tangential node count: the central
        # difference in the curl annihilates the Nyquist mode outright
        levels = int(np.floor(np.log(min(grid.n1, grid.n2) / 4.0) / np.log(lam)))
    rng = np.random.Generator(np.random.Philox(key=seed))
    x1 = np.arange(grid.n1)[:, None] / grid.n1
    x2 = np.arange(grid.n2)[None, :] / grid.n2
    z = grid.x3()
    w = cutoff_profile(z, grid.l3, cutoff)[None, None, :]

    # base tangential wavenumber 1 has wavelength = full period; the curl
    # pulls down one factor of the frequency, handled by base_scale
    base_scale = grid.period1 / (2.0 * np.pi)

    psi2d = np.zeros((grid.n1, grid.n2))
    dirs = ((1, 0), (0, 1))
    for j in range(levels + 1):
        freq = int(round(lam ** j))
        amp = base_scale * float(lam) ** (-(1.0 + alpha) * j)
        for d1, d2 in dirs:
            ph = float(rng.uniform(0.0, 2.0 * np.pi))
            psi2d += amp * np.sin(2.0 * np.pi * freq * (d1 * x1 + d2 * x2) + ph)

    psi = np.broadcast_to(psi2d[:, :, None], grid.shape).copy()
    h = grid.h
    v1 = _d2(psi, h) * w
    v2 = -_d1(psi, h) * w
    v3 = np.zeros(grid.shape)
    peak = float(np.sqrt(np.max(v1 * v1 + v2 * v2)))
    scale = amplitude / peak if peak > 0 else 1.0
    return vector_from_arrays(grid, scale * v1, scale * v2, v3)


def _normalized_curl(grid: HalfSpaceGrid, psi, amplitude: float) -> VectorField3:
    """Curl of the potential, rescaled to max |v| = amplitude.

    Normalizing keeps quadrature roundoff small relative to the
    cancellation-dominated advection integrals.
    """
    from .grid_field import _d1, _d2, _d3

    h = grid.h
    v1 = _d2(psi[2], h) - _d3(psi[1], h)
    v2 = _d3(psi[0], h) - _d1(psi[2], h)
    v3 = _d1(psi[1], h) - _d2(psi[0], h)
    peak = float(np.sqrt(np.max(v1 * v1 + v2 * v2 + v3 * v3)))
    scale = amplitude / peak if peak > 0 else 1.0
    return vector_from_arrays(grid, scale * v1, scale * v2, scale * v3)


def field_checksum(v: VectorField3) -> int:
    """Order-independent digest for pinning generator determinism."""
    import zlib

    acc = 0
    for c in v.components:
        acc = zlib.crc32(c.values.tobytes(), acc)
    return acc

def rough_shear_field(alpha: float, seed: int, grid: HalfSpaceGrid,
                      levels: int | None = None, lam: float = 2.0,
                      amplitude: float = 1.0, rough_weight: float = 0.5,
                      support_end: float = 0.7) -> VectorField3:
    """Shear field whose profile is Weierstrass-rough in x3 with exponent alpha.

    A smooth half-sine base carries most of the amplitude; on top rides a
    dense power-law spectrum sum_k k^-(alpha+1/2) s_k sin(2 pi k x3/L3) with
    seeded signs, scaled by ``rough_weight``.  Every mode vanishes at the
    wall, so the zero extension keeps the seminorm; the roughness lives in
    the direction the wall-normal shift probes, and keeping its amplitude
    below the base leaves the smoothing error in the alpha-scaling regime
    instead of saturating at the sup norm.
    """
    kmax = (grid.n3 - 1) // 2 if levels is None else int(round(lam ** levels))
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = grid.x3()
    rough = np.zeros_like(z)
    for k in range(1, kmax + 1):
        sign = 1.0 if rng.integers(0, 2) else -1.0
        rough += sign * float(k) ** (-(alpha + 0.5)) * np.sin(
            2.0 * np.pi * k * z / grid.l3)
    peak = float(np.max(np.abs(rough)))
    if peak > 0:
        rough /= peak
    prof = np.sin(np.pi * z / grid.l3) + rough_weight * rough
    zd = support_end * grid.l3
    w = _gentle_ramp((zd - z) / (zd - 0.45 * grid.l3))
    w[z <= 0.45 * grid.l3] = 1.0
    prof *= w
    peak = float(np.max(np.abs(prof)))
    if peak > 0:
        prof *= amplitude / peak
    return shear_field(prof, grid)


def cross_shear_field(grid: HalfSpaceGrid, seed: int = 0, modes: int = 1,
                      cutoff: tuple[float, float, float, float] = (0.08, 0.22, 0.5, 0.7),
                      ) -> VectorField3:
    """v = (g(x2, x3), u(x3), 0): divergence-free with an exact advection zero.

    Each component depends on no coordinate it differentiates, so the
    discrete advection pairing sum v_i v_j D_i v_j telescopes to zero ring by
    ring; only the smoothing shift breaks the cancellation, which makes this
    the clean probe for the decay of the smoothed advection integral.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = grid.x3()
    w = cutoff_profile(z, grid.l3, cutoff)
    x2 = np.arange(grid.n2)[:, None] / grid.n2
    zfrac = (z / grid.l3)[None, :]
    gz = np.zeros((grid.n2, grid.n3))
    for m2 in range(1, modes + 1):
        for m3 in range(0, 4):
            amp = float(rng.normal()) / (1.0 + m2 * m2 + m3 * m3)
            ph = float(rng.uniform(0.0, 2.0 * np.pi))
            ph3 = float(rng.uniform(0.0, 2.0 * np.pi))
            gz += amp * np.cos(2.0 * np.pi * m2 * x2 + ph) \
                * np.cos(np.pi * m3 * zfrac + ph3)
    gz *= w[None, :]
    g3 = np.broadcast_to(gz[None, :, :], grid.shape).copy()
    peak = float(np.max(np.abs(g3)))
    if peak > 0:
        g3 /= peak
    u = np.sin(np.pi * z / grid.l3) * w
    u3 = np.broadcast_to(u, grid.shape).copy()
    zero = np.zeros(grid.shape)
    return vector_from_arrays(grid, g3, u3, zero)


def add_fields(a: VectorField3, b: VectorField3, weight: float = 1.0) -> VectorField3:
    """a + weight*b, preserving divergence-freeness of the summands."""
    return vector_from_arrays(
        a.grid, *(ca.values + weight * cb.values
                  for ca, cb in zip(a.components, b.components))
    )
