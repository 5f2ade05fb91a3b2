"""Constantin-E-Titi decomposition of the mollified advection tensor.

For a velocity field v the mollified tensor (v (x) v)_eps splits algebraically
into the product of mollified fields, a remainder built from increments, and
a defect:

    (v (x) v)_eps = v_eps (x) v_eps + r_eps(v, v) - (v - v_eps) (x) (v - v_eps)

where r_eps integrates delta_y v (x) delta_y v against the kernel and
delta_y v(x) = ext(v)(x - y) - ext(v)(x).  The identity is exact node-by-node
once all four parts share one discrete stencil, which is why everything here
runs through one direct summation pass (no FFT).

Pairing each part against the gradient of the wall-respecting smoothed field
gives the three advection integrals and their scale-uniform bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_field import (
    VectorField3,
    lp_norm,
    quadrature_integral,
    shifted,
    tensor_gradient,
    measured_seminorm,
)
from .mollifier import (
    TruncationContaminationError,
    _cached_stencil,
    conv_translate,
    mollify,
    standard_kernel,
)

# Calibrated once on the reference rough mix (fractional-noise shear plus
# 0.3x seeded curl field, alpha = 1/2, 64^3, radii {2h, 4h}) and frozen;
# runs assert stability against it, not an absolute theoretical value.
J1_CALIBRATED_C = 0.5


@dataclass(frozen=True)
class CetParts:
    """The four tensors of the decomposition plus the identity residual.

    Tensors have shape (3, 3, n1, n2, n3); ``residual`` is the max nodewise
    deviation of lhs - (main + remainder - defect), relative to max |lhs|.
    """

    epsilon: float
    lhs: np.ndarray
    main: np.ndarray
    remainder: np.ndarray
    defect: np.ndarray
    residual: float


@dataclass(frozen=True)
class JTerms:
    """Signed advection integrals against grad S_eps(v) and their sum."""

    epsilon: float
    j1: float
    j2: float
    j3: float
    lhs_pairing: float  # integral of (v (x) v)_eps : grad S_eps(v)

    @property
    def total(self) -> float:
        return self.j1 + self.j2 + self.j3


def cet_decompose(v: VectorField3, epsilon: float) -> CetParts:
    """All four parts of the identity from one direct stencil pass."""
    st = _cached_stencil(float(epsilon), v.grid.h)
    if v.support_margin < st.radius_nodes:
        raise TruncationContaminationError(
            f"support margin {v.support_margin} < stencil radius "
            f"{st.radius_nodes}"
        )
    arrs = v.arrays()
    shape = v.grid.shape
    lhs = np.zeros((3, 3) + shape)
    rem = np.zeros((3, 3) + shape)
    veps = [np.zeros(shape) for _ in range(3)]
    for (k1, k2, k3), w in zip(st.offsets, st.weights):
        sh = [shifted(a, k1, k2, k3) for a in arrs]
        for i in range(3):
            veps[i] += w * sh[i]
        deltas = [sh[i] - arrs[i] for i in range(3)]
        for i in range(3):
            for j in range(i, 3):
                lhs[i, j] += w * (sh[i] * sh[j])
                rem[i, j] += w * (deltas[i] * deltas[j])
    for i in range(3):
        for j in range(i):
            lhs[i, j] = lhs[j, i]
            rem[i, j] = rem[j, i]

    main = np.empty_like(lhs)
    defect = np.empty_like(lhs)
    for i in range(3):
        for j in range(3):
            main[i, j] = veps[i] * veps[j]
            defect[i, j] = (arrs[i] - veps[i]) * (arrs[j] - veps[j])

    dev = lhs - (main + rem - defect)
    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    residual = float(np.max(np.abs(dev))) / scale
    return CetParts(epsilon=float(epsilon), lhs=lhs, main=main, remainder=rem,
                    defect=defect, residual=residual)


def _contract(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=(0, 1))


def j_terms(v: VectorField3, epsilon: float,
            parts: CetParts | None = None) -> JTerms:
    """J1 = int main : G, J2 = int remainder : G, J3 = -int defect : G.

    G is the central-difference gradient of the wall-respecting smoothed
    field; the three terms sum to the pairing of (v (x) v)_eps with G.
    """
    if parts is None:
        parts = cet_decompose(v, epsilon)
    grad_s = tensor_gradient(conv_translate(v, epsilon))
    grid = v.grid
    j1 = quadrature_integral(grid, _contract(parts.main, grad_s))
    j2 = quadrature_integral(grid, _contract(parts.remainder, grad_s))
    j3 = -quadrature_integral(grid, _contract(parts.defect, grad_s))
    lhs = quadrature_integral(grid, _contract(parts.lhs, grad_s))
    return JTerms(epsilon=float(epsilon), j1=j1, j2=j2, j3=j3, lhs_pairing=lhs)


def j_sum(v: VectorField3, epsilon: float, method: str = "auto") -> float:
    """The pairing int (v (x) v)_eps : grad S_eps(v) without the decomposition.

    Cheap enough (FFT path) for rate studies at large smoothing radii where
    the direct decomposition pass would be wasteful.
    """
    arrs = v.arrays()
    grid = v.grid
    grad_s = tensor_gradient(conv_translate(v, epsilon, method=method))
    from .grid_field import ScalarField

    acc = np.zeros(grid.shape)
    for i in range(3):
        for j in range(i, 3):
            prod = ScalarField(grid, arrs[i] * arrs[j])
            peps = mollify(prod, epsilon, method=method).values
            if i == j:
                acc += peps * grad_s[i, j]
            else:
                acc += peps * (grad_s[i, j] + grad_s[j, i])
    return quadrature_integral(grid, acc)


def grad_l2(v: VectorField3) -> float:
    """Quadrature L^2 norm of the full velocity gradient tensor."""
    g = tensor_gradient(v)
    return float(np.sqrt(quadrature_integral(v.grid, np.sum(g * g, axis=(0, 1)))))


def j_bounds(v: VectorField3, epsilon: float, alpha: float, v0_l2: float,
             seminorm: float | None = None) -> tuple[float, float, float]:
    """Scale-uniform upper bounds for |J1|, |J2|, |J3| from measured norms.

    b2 and b3 carry the explicit constants c_rho^alpha 2^(alpha+1) and
    c_rho^alpha; b1's generic constant is the frozen calibration value.
    The smoothing radius does not enter any formula.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    sem = measured_seminorm(v, alpha) if seminorm is None else float(seminorm)
    gl2 = grad_l2(v)
    c_rho = standard_kernel().grad_l1
    common = sem * v0_l2 ** (1.0 + alpha) * gl2 ** (1.0 - alpha)
    b1 = J1_CALIBRATED_C * common
    b2 = (c_rho ** alpha) * 2.0 ** (alpha + 1.0) * (sem ** alpha) \
        * gl2 ** (1.0 - alpha) * v0_l2 ** (1.0 + alpha)
    b3 = (c_rho ** alpha) * common
    return b1, b2, b3


def stencil_increment_moment(epsilon: float, h: float, exponent: float) -> float:
    """sum_k w_k |k h|^exponent over the stencil; at most eps^exponent.

    This is the discrete form of the step that bounds the remainder term:
    every increment offset inside the kernel support has length below eps.
    """
    st = _cached_stencil(float(epsilon), h)
    dist = np.sqrt(np.sum(st.offsets.astype(float) ** 2, axis=1)) * h
    return float(np.sum(st.weights * dist ** exponent))


def j_report(v: VectorField3, epsilon: float, alpha: float,
             seminorm: float | None = None) -> dict:
    """JSON-ready row: terms, sum, bounds, and the identity residual."""
    parts = cet_decompose(v, epsilon)
    terms = j_terms(v, epsilon, parts=parts)
    v0 = lp_norm(v, 2.0)
    b1, b2, b3 = j_bounds(v, epsilon, alpha, v0, seminorm=seminorm)
    return {
        "epsilon": float(epsilon),
        "j1": terms.j1,
        "j2": terms.j2,
        "j3": terms.j3,
        "sum": terms.total,
        "lhs_pairing": terms.lhs_pairing,
        "bounds": [b1, b2, b3],
        "residual": parts.residual,
    }
