"""Scalar and vector fields on a truncated half-space slab.

The computational domain is a node-centered box that is periodic in the two
tangential directions (x1, x2) and bounded in x3.  Nodes sit at
x3 = 0, h, ..., (n3-1)*h with the wall at x3 = 0.  Everywhere in this package
a field is read through its *zero extension*: values are 0 below the wall and
above the top of the box, and wrap periodically tangentially.  All reductions
run in a fixed order, so repeated runs agree bitwise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    """Fields attached to different grids were combined."""


class InvalidExponentError(ValueError):
    """Lebesgue or Hölder exponent outside its admissible range."""


class InvalidRadiusError(ValueError):
    """Maximal-function radius below the grid spacing."""


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Uniform node grid, periodic in x1/x2, wall at x3 = 0.

    Tangential periods are n1*h and n2*h; the x3 extent is (n3-1)*h.
    """

    n1: int
    n2: int
    n3: int
    h: float

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("need at least 2 nodes tangentially")
        if self.n3 < 4:
            raise ValueError(f"need n3 >= 4 nodes in x3, got {self.n3}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def period1(self) -> float:
        return self.n1 * self.h

    @property
    def period2(self) -> float:
        return self.n2 * self.h

    @property
    def l3(self) -> float:
        return (self.n3 - 1) * self.h

    def x3(self) -> np.ndarray:
        """Node coordinates along x3."""
        return np.arange(self.n3) * self.h

    def node_count(self) -> int:
        return self.n1 * self.n2 * self.n3


def _count_top_zero_layers(values: np.ndarray) -> int:
    n3 = values.shape[2]
    margin = 0
    for k in range(n3 - 1, -1, -1):
        if np.any(values[:, :, k]):
            break
        margin += 1
    return margin


@dataclass(frozen=True)
class ScalarField:
    """Grid values plus the zero-extension reading convention.

    ``support_margin`` counts the contiguous all-zero node layers at the top
    of the box; it is recomputed from the stored values.
    """

    grid: HalfSpaceGrid
    values: np.ndarray
    support_margin: int = field(init=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} != grid shape {self.grid.shape}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support_margin", _count_top_zero_layers(vals))


@dataclass(frozen=True)
class VectorField3:
    """Three scalar components sharing one grid."""

    components: tuple[ScalarField, ScalarField, ScalarField]

    def __post_init__(self):
        g = self.components[0].grid
        if any(c.grid != g for c in self.components[1:]):
            raise GridMismatchError("vector components live on different grids")

    @property
    def grid(self) -> HalfSpaceGrid:
        return self.components[0].grid

    @property
    def support_margin(self) -> int:
        return min(c.support_margin for c in self.components)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(c.values for c in self.components)


def vector_from_arrays(grid: HalfSpaceGrid, a1, a2, a3) -> VectorField3:
    return VectorField3(
        (ScalarField(grid, a1), ScalarField(grid, a2), ScalarField(grid, a3))
    )


def magnitude(f: ScalarField | VectorField3) -> np.ndarray:
    """Pointwise |f|: absolute value for scalars, Euclidean norm for vectors."""
    if isinstance(f, ScalarField):
        return np.abs(f.values)
    a1, a2, a3 = f.arrays()
    return np.sqrt(a1 * a1 + a2 * a2 + a3 * a3)


# --------------------------------------------------------------------------
# shifted reads of the zero extension
# --------------------------------------------------------------------------

def shifted(values: np.ndarray, d1: int, d2: int, d3: int) -> np.ndarray:
    """Array of extended values at x - (d1, d2, d3)*h for every node x.

    Periodic wrap tangentially; zero fill in x3.
    """
    out = values
    if d1 or d2:
        out = np.roll(out, (d1, d2), axis=(0, 1))
    if d3:
        res = np.zeros_like(out)
        n3 = out.shape[2]
        if d3 > 0:
            if d3 < n3:
                res[:, :, d3:] = out[:, :, : n3 - d3]
        else:
            if -d3 < n3:
                res[:, :, : n3 + d3] = out[:, :, -d3:]
        out = res
    elif out is values:
        out = values.copy()
    return out


# --------------------------------------------------------------------------
# quadrature, norms, inner products
# --------------------------------------------------------------------------

def _z_weights(grid: HalfSpaceGrid) -> np.ndarray:
    """Per-layer quadrature weights: rectangle tangentially, trapezoid in x3."""
    w = np.full(grid.n3, grid.h ** 3)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _check_same_grid(f, g) -> None:
    if f.grid != g.grid:
        raise GridMismatchError("operands live on different grids")


def lp_norm(f: ScalarField | VectorField3, r: float) -> float:
    """Composite-quadrature L^r norm on the slab; r = inf gives the max norm."""
    if r != np.inf and r < 1.0:
        raise InvalidExponentError(f"L^r norm needs r >= 1 or r = inf, got {r}")
    mag = magnitude(f)
    if r == np.inf:
        return float(mag.max())
    grid = f.grid if isinstance(f, ScalarField) else f.grid
    w = _z_weights(grid)
    if r == 2.0:
        return float(np.sqrt(np.sum(np.sum(mag * mag, axis=(0, 1)) * w)))
    return float(np.sum(np.sum(mag ** r, axis=(0, 1)) * w) ** (1.0 / r))


def l2_inner(f: VectorField3 | ScalarField, g: VectorField3 | ScalarField) -> float:
    """Quadrature inner product; pairs scalars with scalars, vectors with vectors."""
    _check_same_grid(f, g)
    if isinstance(f, ScalarField) != isinstance(g, ScalarField):
        raise GridMismatchError("cannot pair a scalar field with a vector field")
    if isinstance(f, ScalarField):
        prod = f.values * g.values
        grid = f.grid
    else:
        fa, ga = f.arrays(), g.arrays()
        prod = fa[0] * ga[0] + fa[1] * ga[1] + fa[2] * ga[2]
        grid = f.grid
    return float(np.sum(np.sum(prod, axis=(0, 1)) * _z_weights(grid)))


def quadrature_integral(grid: HalfSpaceGrid, pointwise: np.ndarray) -> float:
    """Integral of an arbitrary pointwise sample array over the slab."""
    return float(np.sum(np.sum(pointwise, axis=(0, 1)) * _z_weights(grid)))


# --------------------------------------------------------------------------
# Hölder seminorm
# --------------------------------------------------------------------------

def _node_coords(grid: HalfSpaceGrid) -> np.ndarray:
    i1, i2, i3 = np.meshgrid(
        np.arange(grid.n1), np.arange(grid.n2), np.arange(grid.n3), indexing="ij"
    )
    return np.stack([i1.ravel(), i2.ravel(), i3.ravel()], axis=1)


def _pair_distances(grid: HalfSpaceGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean node distances with tangential minimal-image wrap, in length units."""
    d1 = np.abs(a[:, 0] - b[:, 0])
    d1 = np.minimum(d1, grid.n1 - d1)
    d2 = np.abs(a[:, 1] - b[:, 1])
    d2 = np.minimum(d2, grid.n2 - d2)
    d3 = np.abs(a[:, 2] - b[:, 2])
    return np.sqrt(d1 * d1 + d2 * d2 + d3 * d3) * grid.h


def holder_seminorm(
    f: ScalarField | VectorField3,
    alpha: float,
    mode: str = "exact",
    seed: int = 0,
    n_pairs: int = 200_000,
) -> float:
    """sup |f(x)-f(y)| / |x-y|^alpha over node pairs.

    ``exact`` scans every pair (O(N^2), small grids only); ``sampled`` scans
    ``n_pairs`` seeded random pairs and is a deterministic lower bound of the
    exact value.
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidExponentError(f"Hölder exponent must lie in (0, 1], got {alpha}")
    grid = f.grid
    if isinstance(f, ScalarField):
        vals = f.values.reshape(-1, 1)
    else:
        vals = np.stack([c.values.ravel() for c in f.components], axis=1)
    n = vals.shape[0]
    coords = _node_coords(grid)

    if mode == "exact":
        best = 0.0
        for i in range(n - 1):
            rest = slice(i + 1, n)
            dist = _pair_distances(grid, coords[rest], coords[i : i + 1])
            dv = np.sqrt(np.sum((vals[rest] - vals[i]) ** 2, axis=1))
            ok = dist > 0
            if np.any(ok):
                best = max(best, float(np.max(dv[ok] / dist[ok] ** alpha)))
        return best
    if mode == "sampled":
        if n_pairs < 1:
            raise ValueError("sampled mode needs n_pairs >= 1")
        rng = np.random.default_rng(seed)
        ia = rng.integers(0, n, size=n_pairs)
        ib = rng.integers(0, n, size=n_pairs)
        dist = _pair_distances(grid, coords[ia], coords[ib])
        dv = np.sqrt(np.sum((vals[ia] - vals[ib]) ** 2, axis=1))
        ok = dist > 0
        if not np.any(ok):
            return 0.0
        return float(np.max(dv[ok] / dist[ok] ** alpha))
    raise ValueError(f"unknown mode {mode!r}")


def lag_seminorm(
    f: ScalarField | VectorField3, alpha: float, max_lag: int = 8
) -> float:
    """Axis-aligned lower bound of the Hölder seminorm.

    Scans all node pairs separated by 1..max_lag steps along each axis;
    cheap (O(N * max_lag)) and sharp for fields whose roughness lives at
    small scales.
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidExponentError(f"Hölder exponent must lie in (0, 1], got {alpha}")
    arrays = (
        (f.values,) if isinstance(f, ScalarField) else tuple(f.arrays())
    )
    grid = f.grid
    best = 0.0
    for lag in range(1, max_lag + 1):
        dist = (lag * grid.h) ** alpha
        sq1 = np.zeros(grid.shape)
        sq2 = np.zeros(grid.shape)
        n3 = grid.n3
        if lag >= n3:
            sq3 = None
        else:
            sq3 = np.zeros((grid.n1, grid.n2, n3 - lag))
        for a in arrays:
            d1 = a - np.roll(a, lag, axis=0)
            d2 = a - np.roll(a, lag, axis=1)
            sq1 += d1 * d1
            sq2 += d2 * d2
            if sq3 is not None:
                d3 = a[:, :, lag:] - a[:, :, :-lag]
                sq3 += d3 * d3
        m = max(float(np.max(sq1)), float(np.max(sq2)))
        if sq3 is not None and sq3.size:
            m = max(m, float(np.max(sq3)))
        best = max(best, np.sqrt(m) / dist)
    return best


def measured_seminorm(f: ScalarField | VectorField3, alpha: float, seed: int = 7,
                      n_pairs: int = 20_000, max_lag: int = 8) -> float:
    """Practical Hölder-seminorm estimate: lag scan plus a sampled pair sweep."""
    return max(
        lag_seminorm(f, alpha, max_lag=max_lag),
        holder_seminorm(f, alpha, mode="sampled", seed=seed, n_pairs=n_pairs),
    )


# --------------------------------------------------------------------------
# differential operators
# --------------------------------------------------------------------------

def _d1(a: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * h)


def _d2(a: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2.0 * h)


def _d3(a: np.ndarray, h: float) -> np.ndarray:
    # central difference of the zero extension; the end rows read the
    # extension's zeros below the wall / above the top
    out = np.zeros_like(a)
    out[:, :, 1:-1] = (a[:, :, 2:] - a[:, :, :-2]) / (2.0 * h)
    out[:, :, 0] = a[:, :, 1] / (2.0 * h)
    out[:, :, -1] = -a[:, :, -2] / (2.0 * h)
    return out


_PARTIALS = (_d1, _d2, _d3)


def gradient(f: ScalarField) -> VectorField3:
    """Central-difference gradient; periodic wrap in x1/x2, zero extension in x3."""
    if f.grid.n3 < 3:
        raise ValueError("gradient needs n3 >= 3")
    h = f.grid.h
    return vector_from_arrays(
        f.grid, _d1(f.values, h), _d2(f.values, h), _d3(f.values, h)
    )


def tensor_gradient(v: VectorField3) -> np.ndarray:
    """Tensor G[i, j] = D_i v_j of shape (3, 3, n1, n2, n3)."""
    h = v.grid.h
    arrs = v.arrays()
    out = np.empty((3, 3) + v.grid.shape)
    for i, deriv in enumerate(_PARTIALS):
        for j in range(3):
            out[i, j] = deriv(arrs[j], h)
    return out


def divergence(v: VectorField3) -> ScalarField:
    """Sum of the three central-difference partials."""
    h = v.grid.h
    a1, a2, a3 = v.arrays()
    vals = _d1(a1, h)
    vals += _d2(a2, h)
    vals += _d3(a3, h)
    return ScalarField(v.grid, vals)


def convective_term(v: VectorField3) -> VectorField3:
    """(sum_j v_j D_j v_i)_i with the same central differences."""
    g = tensor_gradient(v)
    arrs = v.arrays()
    comps = []
    for i in range(3):
        acc = arrs[0] * g[0, i]
        acc += arrs[1] * g[1, i]
        acc += arrs[2] * g[2, i]
        comps.append(acc)
    return vector_from_arrays(v.grid, *comps)


def dirichlet_gradient_energy(f: ScalarField | VectorField3) -> float:
    """Edge-centered discrete Dirichlet energy, approximating int |grad f|^2.

    Forward differences on edges (periodic tangentially, homogeneous walls in
    x3) make the energy summation-by-parts exact, which keeps the overall
    accuracy at second order even at the wall where node-centered one-sided
    gradients would degrade to first order.
    """
    arrays = (f.values,) if isinstance(f, ScalarField) else tuple(f.arrays())
    grid = f.grid
    h = grid.h
    wz = _z_weights(grid) / h ** 3  # 1/2 at the two x3 end layers
    total = 0.0
    for a in arrays:
        e1 = (np.roll(a, -1, axis=0) - a) / h
        e2 = (np.roll(a, -1, axis=1) - a) / h
        total += float(np.sum(np.sum(e1 * e1 + e2 * e2, axis=(0, 1)) * wz)) * h ** 3
        # x3 edges, including the two wall edges against the zero extension
        pad = np.zeros((grid.n1, grid.n2, grid.n3 + 2))
        pad[:, :, 1:-1] = a
        e3 = (pad[:, :, 1:] - pad[:, :, :-1]) / h
        total += float(np.sum(e3 * e3)) * h ** 3
    return total


# --------------------------------------------------------------------------
# Hardy-Littlewood maximal function
# --------------------------------------------------------------------------

def _ball_offsets(radius_nodes: int) -> list[tuple[int, int, int]]:
    offs = []
    r2 = radius_nodes * radius_nodes
    rng = range(-radius_nodes, radius_nodes + 1)
    for k1 in rng:
        for k2 in rng:
            for k3 in rng:
                if k1 * k1 + k2 * k2 + k3 * k3 <= r2:
                    offs.append((k1, k2, k3))
    return offs


def _maximal_direct(f: ScalarField, imax: int) -> np.ndarray:
    mag = magnitude(f)
    shells: dict[int, list[tuple[int, int, int]]] = {i: [] for i in range(imax + 1)}
    for off in _ball_offsets(imax):
        r = int(np.ceil(np.sqrt(off[0] ** 2 + off[1] ** 2 + off[2] ** 2) - 1e-9))
        shells[max(r, 0)].append(off)
    running = np.zeros_like(mag)
    count = 0
    best = mag.copy()  # the zero-radius ball is the node itself
    for i in range(imax + 1):
        for off in sorted(shells[i]):
            running += shifted(mag, *off)
            count += 1
        if i >= 1:
            np.maximum(best, running / count, out=best)
    return best


def _maximal_fft(f: ScalarField, imax: int) -> np.ndarray:
    grid = f.grid
    mag = magnitude(f)
    nz = grid.n3 + 2 * imax
    padded = np.zeros((grid.n1, grid.n2, nz))
    padded[:, :, imax : imax + grid.n3] = mag
    fhat = np.fft.rfftn(padded)
    best = mag.copy()  # the zero-radius ball is the node itself
    kernel = np.zeros((grid.n1, grid.n2, nz))
    placed: set[tuple[int, int, int]] = set()
    offs_by_radius: dict[int, list[tuple[int, int, int]]] = {
        i: [] for i in range(imax + 1)
    }
    for off in _ball_offsets(imax):
        r = int(np.ceil(np.sqrt(off[0] ** 2 + off[1] ** 2 + off[2] ** 2) - 1e-9))
        offs_by_radius[max(r, 0)].append(off)
    for i in range(imax + 1):
        for k1, k2, k3 in offs_by_radius[i]:
            key = (k1 % grid.n1, k2 % grid.n2, k3 % nz)
            if key not in placed:  # tangential wrap may alias; count nodes once
                placed.add(key)
                kernel[key] = 1.0
        if i < 1:
            continue
        count = len(placed)
        conv = np.fft.irfftn(fhat * np.fft.rfftn(kernel), s=padded.shape,
                             axes=(0, 1, 2))
        avg = conv[:, :, imax : imax + grid.n3] / count
        np.maximum(best, avg, out=best)
    np.maximum(best, 0.0, out=best)
    return best


def maximal_function(
    f: ScalarField | VectorField3, r_max: float, method: str = "auto"
) -> ScalarField:
    """Discrete maximal function: sup over radii i*h <= r_max of ball averages.

    Balls are node sets {|y - x| <= i*h} under the tangential minimal-image
    metric, including the zero-radius ball (the node itself); averages divide
    |f|'s extended values by the ball node count, so M f >= |f| pointwise.
    """
    grid = f.grid
    if r_max < grid.h:
        raise InvalidRadiusError(f"r_max must be >= h = {grid.h}, got {r_max}")
    imax = int(np.floor(r_max / grid.h + 1e-9))
    scalar = f if isinstance(f, ScalarField) else ScalarField(grid, magnitude(f))
    if method == "auto":
        method = "direct" if imax <= 4 else "fft"
    if method == "direct":
        vals = _maximal_direct(scalar, imax)
    elif method == "fft":
        vals = _maximal_fft(scalar, imax)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ScalarField(grid, vals)


# --------------------------------------------------------------------------
# flat binary serialization
# --------------------------------------------------------------------------

_MAGIC = b"MLF1"


def write_field(path, f: ScalarField | VectorField3) -> None:
    """Write the flat binary format: MLF1 header then x1-fastest float64 values."""
    arrays = (f.values,) if isinstance(f, ScalarField) else tuple(f.arrays())
    grid = f.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", grid.n1, grid.n2, grid.n3))
        fh.write(struct.pack("<d", grid.h))
        fh.write(struct.pack("<q", len(arrays)))
        for a in arrays:
            fh.write(np.ascontiguousarray(a.transpose(2, 1, 0)).astype("<f8").tobytes())


def read_field(path) -> ScalarField | VectorField3:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        n1, n2, n3 = struct.unpack("<qqq", fh.read(24))
        (h,) = struct.unpack("<d", fh.read(8))
        (ncomp,) = struct.unpack("<q", fh.read(8))
        grid = HalfSpaceGrid(n1, n2, n3, h)
        comps = []
        for _ in range(ncomp):
            raw = np.frombuffer(fh.read(8 * n1 * n2 * n3), dtype="<f8")
            comps.append(raw.reshape(n3, n2, n1).transpose(2, 1, 0).copy())
    if ncomp == 1:
        return ScalarField(grid, comps[0])
    if ncomp == 3:
        return vector_from_arrays(grid, *comps)
    raise ValueError(f"unsupported component count {ncomp}")
