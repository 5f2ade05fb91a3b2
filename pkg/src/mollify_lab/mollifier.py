"""Mollification kernel and wall-respecting smoothing operators.

The radial bump rho(x) = C exp(-1/(1-|x|^2)) on the unit ball is scaled to
rho_eps(x) = eps^-3 rho(x/eps) and discretized by midpoint sampling on the
grid.  Plain convolution against the zero extension gives ``mollify``; the
boundary- and divergence-preserving smoother ``conv_translate`` first shifts
the field 2*eps away from the wall and then convolves, so its output vanishes
on a layer of thickness eps above the wall.

Convolution runs layer-by-layer in x3 with exact circular convolution
tangentially (FFT); all-zero layers stay bitwise zero, which keeps the
support statements exact.  A direct summation path serves as reference.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .grid_field import ScalarField, vector_from_arrays

_ALIGN_TOL = 1e-9


class UnderResolvedKernelError(ValueError):
    """Kernel radius below the grid spacing."""


class MisalignedTranslationError(ValueError):
    """2*eps is not an integer number of node layers."""


class TruncationContaminationError(ValueError):
    """Support margin too small: the stencil would read past the box top."""


def _bump(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    val, _ = quad(lambda r: 4.0 * np.pi * r * r * np.exp(-1.0 / (1.0 - r * r)),
                  0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
    return val


@lru_cache(maxsize=None)
def _grad_l1() -> float:
    # |grad rho|(r) = C * exp(-1/(1-r^2)) * 2r / (1-r^2)^2
    val, _ = quad(
        lambda r: 4.0 * np.pi * r * r
        * np.exp(-1.0 / (1.0 - r * r)) * 2.0 * r / (1.0 - r * r) ** 2,
        0.0, 1.0, epsabs=1e-14, epsrel=1e-12, points=[0.5, 0.9])
    return val / _bump_mass()


@lru_cache(maxsize=None)
def kernel_lp_norm(p: float) -> float:
    """L^p(R^3) norm of the normalized bump, by fine radial quadrature."""
    if p == np.inf:
        return np.exp(-1.0) / _bump_mass()
    val, _ = quad(
        lambda r: 4.0 * np.pi * r * r * np.exp(-p / (1.0 - r * r)),
        0.0, 1.0, epsabs=1e-16, epsrel=1e-12)
    return float(val ** (1.0 / p) / _bump_mass())


@dataclass(frozen=True)
class MollifierKernel:
    """Radial bump profile with its cached normalization and |grad| mass."""

    normalization: float
    grad_l1: float

    def density(self, points: np.ndarray) -> np.ndarray:
        """rho at an (K, 3) array of points."""
        r = np.sqrt(np.sum(points * points, axis=-1))
        return self.normalization * _bump(r)

    def density_gradient(self, points: np.ndarray) -> np.ndarray:
        """grad rho at an (K, 3) array of points."""
        rsq = np.sum(points * points, axis=-1)
        inside = rsq < 1.0
        out = np.zeros_like(points)
        fac = np.zeros_like(rsq)
        fac[inside] = (
            self.normalization
            * np.exp(-1.0 / (1.0 - rsq[inside]))
            * (-2.0 / (1.0 - rsq[inside]) ** 2)
        )
        out[inside] = points[inside] * fac[inside, None]
        return out


@lru_cache(maxsize=None)
def standard_kernel() -> MollifierKernel:
    return MollifierKernel(normalization=1.0 / _bump_mass(), grad_l1=_grad_l1())


@dataclass(frozen=True)
class DiscreteStencil:
    """Midpoint-sampled kernel weights on integer node offsets.

    The scalar weights are renormalized to unit sum; the gradient weights are
    mean-subtracted so each component sums to zero, mirroring the vanishing
    mean of the kernel gradient that the smoothing estimates rely on.
    """

    epsilon: float
    h: float
    offsets: np.ndarray      # (K, 3) int64, lexicographically sorted
    weights: np.ndarray      # (K,)
    grad_weights: np.ndarray  # (K, 3)

    @property
    def radius_nodes(self) -> int:
        return int(np.ceil(self.epsilon / self.h - _ALIGN_TOL))

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "h": self.h,
                "offsets": self.offsets.tolist(),
                "weights": self.weights.tolist(),
                "grad_weights": self.grad_weights.tolist(),
            }
        )


def make_stencil(kernel: MollifierKernel, epsilon: float, h: float) -> DiscreteStencil:
    if epsilon < h * (1.0 - _ALIGN_TOL):
        raise UnderResolvedKernelError(
            f"epsilon = {epsilon} under-resolves the grid spacing h = {h}"
        )
    m = int(np.ceil(epsilon / h - _ALIGN_TOL))
    rng = np.arange(-m, m + 1)
    k1, k2, k3 = np.meshgrid(rng, rng, rng, indexing="ij")
    offsets = np.stack([k1.ravel(), k2.ravel(), k3.ravel()], axis=1)
    inside = np.sum(offsets * offsets, axis=1) < (epsilon / h) ** 2 - 1e-12
    offsets = offsets[inside]
    order = np.lexsort((offsets[:, 2], offsets[:, 1], offsets[:, 0]))
    offsets = np.ascontiguousarray(offsets[order])

    pts = offsets * (h / epsilon)
    weights = kernel.density(pts) * h ** 3 / epsilon ** 3  # rho_eps(k h) * h^3
    weights /= weights.sum()
    center = int(np.where((offsets == 0).all(axis=1))[0][0])
    weights[center] += 1.0 - weights.sum()

    grad = kernel.density_gradient(pts) * h ** 3 / epsilon ** 4
    grad -= grad.sum(axis=0) / len(grad)
    for _ in range(4):  # compensate to the exact zero of the pairwise sum
        residual = grad.sum(axis=0)
        if not np.any(residual):
            break
        grad[0] -= residual

    return DiscreteStencil(
        epsilon=float(epsilon), h=float(h),
        offsets=offsets, weights=weights, grad_weights=grad,
    )


@lru_cache(maxsize=64)
def _cached_stencil(epsilon: float, h: float) -> DiscreteStencil:
    return make_stencil(standard_kernel(), epsilon, h)


def _thread_count() -> int:
    raw = os.environ.get("MOLLIFY_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# convolution engine
# --------------------------------------------------------------------------

def _apply_direct(vals, offsets, weights, z_shift, out_lo, out_hi, in_lo):
    n1, n2, nz = vals.shape
    nout = out_hi - out_lo
    out = np.zeros((n1, n2, nout))
    for (k1, k2, k3), w in zip(offsets, weights):
        rolled = np.roll(vals, (k1, k2), axis=(0, 1)) if (k1 or k2) else vals
        for j in range(nout):
            zi = out_lo + j - z_shift - k3 - in_lo
            if 0 <= zi < nz:
                out[:, :, j] += w * rolled[:, :, zi]
    return out


def _apply_fft(vals, offsets, weights, z_shift, out_lo, out_hi, in_lo, threads):
    n1, n2, nz = vals.shape
    nonzero = [bool(np.any(vals[:, :, z])) for z in range(nz)]
    fin = [np.fft.rfft2(vals[:, :, z]) if nonzero[z] else None for z in range(nz)]

    planes: dict[int, np.ndarray] = {}
    for (k1, k2, k3), w in zip(offsets, weights):
        plane = planes.get(k3)
        if plane is None:
            plane = np.zeros((n1, n2))
            planes[k3] = plane
        plane[k1 % n1, k2 % n2] += w
    fw = {k3: np.fft.rfft2(plane) for k3, plane in sorted(planes.items())}
    k3s = sorted(fw)

    nout = out_hi - out_lo
    out = np.zeros((n1, n2, nout))

    def fill(j0, j1):
        for j in range(j0, j1):
            acc = None
            for k3 in k3s:
                zi = out_lo + j - z_shift - k3 - in_lo
                if 0 <= zi < nz and nonzero[zi]:
                    term = fw[k3] * fin[zi]
                    acc = term if acc is None else acc + term
            if acc is not None:
                out[:, :, j] = np.fft.irfft2(acc, s=(n1, n2))

    if threads <= 1 or nout < 4:
        fill(0, nout)
    else:
        chunk = (nout + threads - 1) // threads
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [
                pool.submit(fill, j, min(j + chunk, nout))
                for j in range(0, nout, chunk)
            ]
            for f in futs:
                f.result()
    return out


def _apply_stencil(vals, offsets, weights, *, z_shift=0, out_lo=0, out_hi=None,
                   in_lo=0, method="auto"):
    """out[:, :, j - out_lo] = sum_k w_k ext(vals)[x1-k1, x2-k2, j - z_shift - k3].

    ``vals`` layer i holds absolute x3 index ``in_lo + i``; reads outside the
    stored range are zero (the extension).  Output covers absolute x3 indices
    [out_lo, out_hi).
    """
    if out_hi is None:
        out_hi = vals.shape[2] + in_lo
    if method == "auto":
        method = "fft" if len(weights) > 27 else "direct"
    if method == "direct":
        return _apply_direct(vals, offsets, weights, z_shift, out_lo, out_hi, in_lo)
    if method == "fft":
        return _apply_fft(vals, offsets, weights, z_shift, out_lo, out_hi, in_lo,
                          _thread_count())
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def _per_component(u, fn):
    if isinstance(u, ScalarField):
        return ScalarField(u.grid, fn(u.values))
    return vector_from_arrays(u.grid, *(fn(c.values) for c in u.components))


def _shift_nodes(epsilon: float, h: float) -> int:
    s = 2.0 * epsilon / h
    s_round = round(s)
    if abs(s - s_round) > _ALIGN_TOL * max(1.0, s):
        raise MisalignedTranslationError(
            f"2*eps/h = {s} is not an integer; translation must be node-aligned"
        )
    return int(s_round)


def mollify(u, epsilon: float, *, method: str = "auto",
            enforce_margin: bool = True):
    """Plain convolution u_eps = rho_eps * ext(u), on the same grid.

    With ``enforce_margin`` the field must carry at least ceil(eps/h) zero
    layers at the box top so the smoothed field is fully representable.
    """
    st = _cached_stencil(float(epsilon), u.grid.h)
    if enforce_margin and u.support_margin < st.radius_nodes:
        raise TruncationContaminationError(
            f"support margin {u.support_margin} < stencil radius "
            f"{st.radius_nodes}: mollification would spill past the box top"
        )
    return _per_component(
        u, lambda a: _apply_stencil(a, st.offsets, st.weights, method=method)
    )


def translate(u, epsilon: float):
    """Shift 2*eps away from the wall: out(x) = ext(u)(x - 2 eps e3)."""
    s = _shift_nodes(epsilon, u.grid.h)

    def shift(a):
        out = np.zeros_like(a)
        if s < a.shape[2]:
            out[:, :, s:] = a[:, :, : a.shape[2] - s]
        return out

    return _per_component(u, shift)


def conv_translate(u, epsilon: float, *, method: str = "auto"):
    """The wall-respecting smoother: convolve the 2*eps-shifted extension.

    Computed fused (one stencil pass with shifted x3 offsets), so the stored
    values agree with the unbounded-domain operator at every node; the output
    vanishes identically below x3 = eps.
    """
    st = _cached_stencil(float(epsilon), u.grid.h)
    s = _shift_nodes(epsilon, u.grid.h)
    return _per_component(
        u,
        lambda a: _apply_stencil(a, st.offsets, st.weights, z_shift=s,
                                 method=method),
    )


def _grad_stencil_apply(a, st, s, method):
    comps = [
        _apply_stencil(a, st.offsets, st.grad_weights[:, i], z_shift=s,
                       method=method)
        for i in range(3)
    ]
    return comps


def grad_conv_translate(u, epsilon: float, *, method: str = "auto"):
    """Gradient of the wall-respecting smoother, two ways.

    Returns ``(stencil_form, fd_form)``: the first applies the sampled kernel
    gradient to the shifted extension, the second takes the grid's central
    differences of ``conv_translate(u)``.  For a scalar each is a
    VectorField3; for a vector each is a (3, 3, n1, n2, n3) array with
    [i, j] = d_i (S u)_j.
    """
    from .grid_field import gradient, tensor_gradient

    st = _cached_stencil(float(epsilon), u.grid.h)
    s = _shift_nodes(epsilon, u.grid.h)
    smoothed = conv_translate(u, epsilon, method=method)
    if isinstance(u, ScalarField):
        stencil_form = vector_from_arrays(
            u.grid, *_grad_stencil_apply(u.values, st, s, method)
        )
        return stencil_form, gradient(smoothed)
    tens = np.empty((3, 3) + u.grid.shape)
    for j, comp in enumerate(u.components):
        cols = _grad_stencil_apply(comp.values, st, s, method)
        for i in range(3):
            tens[i, j] = cols[i]
    return tens, tensor_gradient(smoothed)


def double_smooth(u, epsilon: float, *, method: str = "auto",
                  enforce_margin: bool = True):
    """rho_eps * conv_translate(u): the admissible test-field smoother.

    The inner pass is evaluated on an x3-extended scratch range so the outer
    convolution reads exact values; the result vanishes at the wall plane.
    """
    st = _cached_stencil(float(epsilon), u.grid.h)
    m = st.radius_nodes
    s = _shift_nodes(epsilon, u.grid.h)
    if enforce_margin and u.support_margin < 2 * m:
        raise TruncationContaminationError(
            f"support margin {u.support_margin} < {2 * m}: double smoothing "
            "would spill past the box top"
        )
    n3 = u.grid.n3

    def apply(a):
        inner = _apply_stencil(a, st.offsets, st.weights, z_shift=s,
                               out_lo=-m, out_hi=n3 + m, method=method)
        return _apply_stencil(inner, st.offsets, st.weights, in_lo=-m,
                              out_lo=0, out_hi=n3, method=method)

    return _per_component(u, apply)
