"""Smoothed energy balance for time series of velocity fields.

For a time series v(t) the smoothed weak balance pairs the mollified time
derivative, the viscous term, and the advection tensor against the
wall-respecting smoothed field:

    int int (dv/dt)_eps . S_eps(v) + nu int int grad v_eps : grad S_eps(v)
        - int int (v (x) v)_eps : grad S_eps(v)  =  residual,

time integrals by the trapezoid rule on the snapshot times.  As the smoothing
radius shrinks, the balance tends to the plain energy identity

    1/2 ||v(t)||^2 + nu int ||grad v||^2 - 1/2 ||v(0)||^2  =  0,

whose discrete deviation is the audited energy-equality residual.  The time
derivative enters only mollified; the raw product dv/dt . v is never
integrated directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .grid_field import (
    HalfSpaceGrid,
    ScalarField,
    VectorField3,
    dirichlet_gradient_energy,
    l2_inner,
    lp_norm,
    measured_seminorm,
    quadrature_integral,
    tensor_gradient,
    vector_from_arrays,
)
from .mollifier import conv_translate, kernel_lp_norm, mollify
from .exponents import r_of_q, s_of_q, smoothing_margin
from .lemma_lab import fit_rate


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled snapshots sharing one grid.

    ``derivatives`` optionally stores analytic time derivatives; otherwise
    centered differences (one-sided at the ends) stand in.
    """

    grid: HalfSpaceGrid
    times: np.ndarray
    snapshots: tuple[VectorField3, ...]
    derivatives: tuple[VectorField3, ...] | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if self.derivatives is not None:
            object.__setattr__(self, "derivatives", tuple(self.derivatives))
        if len(times) != len(self.snapshots):
            raise ValueError("one snapshot per time required")
        if len(times) < 2 and self.derivatives is None:
            raise ValueError("need >= 2 snapshots without analytic derivatives")
        dts = np.diff(times)
        if len(dts) and (np.any(dts <= 0)
                         or np.max(np.abs(dts - dts[0])) > 1e-9 * abs(dts[0])):
            raise ValueError("times must increase with a uniform step")
        for v in self.snapshots:
            if v.grid != self.grid:
                raise ValueError("snapshot grid mismatch")
        if self.derivatives is not None and len(self.derivatives) != len(times):
            raise ValueError("one analytic derivative per time required")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


@dataclass(frozen=True)
class EnergyRow:
    """Per-radius row of the audit."""

    epsilon: float
    term_dt: float
    term_visc: float
    term_conv: float
    residual: float
    i1: float
    i2: float
    kinetic_i1: float = 0.0  # 1/2||v_eps(t)||^2 - 1/2||v_eps(0)||^2 cross-check
    bound_i2: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnergyReport:
    """Rows sorted by decreasing radius plus the smoothing-free limit row."""

    rows: tuple[EnergyRow, ...]
    limit: dict
    rates: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "limit": self.limit,
            "rates": self.rates,
            "meta": self.meta,
        }


def exact_stokes_shear(amplitude: float, mode_number: int, nu: float,
                       grid: HalfSpaceGrid, times) -> TimeSeries:
    """Decaying shear solution v = (A e^(-nu k^2 t) sin(k x3), 0, 0).

    k = mode_number * pi / L3, so the profile vanishes at both walls; the
    advection term is identically zero and the pressure constant, making this
    an exact unsteady solution with analytic time derivative -nu k^2 v.
    """
    if mode_number < 1:
        raise ValueError("mode_number must be a positive integer")
    times = np.asarray(times, dtype=np.float64)
    k = mode_number * np.pi / grid.l3
    z = grid.x3()
    profile = np.sin(k * z)
    zero = np.zeros(grid.shape)
    snaps, derivs = [], []
    for t in times:
        amp = amplitude * np.exp(-nu * k * k * t)
        vals = np.broadcast_to(amp * profile, grid.shape).copy()
        snaps.append(vector_from_arrays(grid, vals, zero.copy(), zero.copy()))
        dvals = -nu * k * k * vals
        derivs.append(vector_from_arrays(grid, dvals, zero.copy(), zero.copy()))
    return TimeSeries(grid=grid, times=times, snapshots=tuple(snaps),
                      derivatives=tuple(derivs))


def dt_field(series: TimeSeries, j: int) -> VectorField3:
    """Time derivative at snapshot j: analytic if stored, else differences.

    Centered differences inside, first-order one-sided at the ends; together
    with trapezoid time quadrature this discrete product rule telescopes
    exactly.
    """
    if series.derivatives is not None:
        return series.derivatives[j]
    snaps = series.snapshots
    m = len(snaps) - 1
    dt = series.dt
    grid = series.grid

    def fd(a, b, denom):
        return vector_from_arrays(
            grid, *((ca.values - cb.values) / denom
                    for ca, cb in zip(a.components, b.components))
        )

    if j == 0:
        return fd(snaps[1], snaps[0], dt)
    if j == m:
        return fd(snaps[m], snaps[m - 1], dt)
    return fd(snaps[j + 1], snaps[j - 1], 2.0 * dt)


def _trapz(samples: np.ndarray, dt: float) -> float:
    if len(samples) == 1:
        return 0.0
    return float(dt * (0.5 * samples[0] + samples[1:-1].sum() + 0.5 * samples[-1]))


def _mollified_products(v: VectorField3, epsilon: float) -> dict:
    arrs = v.arrays()
    grid = v.grid
    out = {}
    for i in range(3):
        for j in range(i, 3):
            prod = ScalarField(grid, arrs[i] * arrs[j])
            out[(i, j)] = mollify(prod, epsilon, enforce_margin=False).values
    return out


def _balance_samples(series: TimeSeries, epsilon: float, nu: float,
                     t_index: int) -> dict:
    """Per-snapshot integrands of all audited terms up to t_index."""
    grid = series.grid
    a_dt = np.zeros(t_index + 1)
    a_visc = np.zeros(t_index + 1)
    a_conv = np.zeros(t_index + 1)
    a_i1 = np.zeros(t_index + 1)
    a_i2 = np.zeros(t_index + 1)
    kin = {}
    for j in range(t_index + 1):
        v = series.snapshots[j]
        d = dt_field(series, j)
        dm = mollify(d, epsilon, enforce_margin=False)
        vm = mollify(v, epsilon, enforce_margin=False)
        sm = conv_translate(v, epsilon)
        a_dt[j] = l2_inner(dm, sm)
        a_i1[j] = l2_inner(dm, vm)
        diff = vector_from_arrays(
            grid, *(s.values - m.values
                    for s, m in zip(sm.components, vm.components))
        )
        a_i2[j] = l2_inner(dm, diff)
        grad_vm = tensor_gradient(vm)
        grad_sm = tensor_gradient(sm)
        a_visc[j] = nu * quadrature_integral(
            grid, np.sum(grad_vm * grad_sm, axis=(0, 1)))
        prods = _mollified_products(v, epsilon)
        acc = np.zeros(grid.shape)
        for i in range(3):
            for jj in range(i, 3):
                if i == jj:
                    acc += prods[(i, jj)] * grad_sm[i, jj]
                else:
                    acc += prods[(i, jj)] * (grad_sm[i, jj] + grad_sm[jj, i])
        a_conv[j] = quadrature_integral(grid, acc)
        if j in (0, t_index):
            kin[j] = 0.5 * lp_norm(vm, 2.0) ** 2
    return {
        "a_dt": a_dt, "a_visc": a_visc, "a_conv": a_conv,
        "a_i1": a_i1, "a_i2": a_i2,
        "kinetic_i1": kin.get(t_index, 0.0) - kin.get(0, 0.0),
    }


def _resolve_index(series: TimeSeries, t_index: int | None) -> int:
    if t_index is None:
        return len(series.times) - 1
    if not 0 < t_index < len(series.times):
        raise ValueError(f"t_index must lie in [1, {len(series.times) - 1}]")
    return t_index


def smoothed_balance(series: TimeSeries, epsilon: float, nu: float,
                     t_index: int | None = None) -> EnergyRow:
    """The three audited terms and their signed sum over [t0, t_index].

    For an exact solution the residual reflects discretization only: time
    quadrature, grid differencing, and the smoothing radius at the box top.
    """
    t_index = _resolve_index(series, t_index)
    s = _balance_samples(series, epsilon, nu, t_index)
    dt = series.dt
    term_dt = _trapz(s["a_dt"], dt)
    term_visc = _trapz(s["a_visc"], dt)
    term_conv = _trapz(s["a_conv"], dt)
    i1 = _trapz(s["a_i1"], dt)
    i2 = _trapz(s["a_i2"], dt)
    return EnergyRow(
        epsilon=float(epsilon),
        term_dt=term_dt,
        term_visc=term_visc,
        term_conv=term_conv,
        residual=term_dt + term_visc - term_conv,
        i1=i1,
        i2=i2,
        kinetic_i1=s["kinetic_i1"],
    )


def i_split(series: TimeSeries, epsilon: float,
            t_index: int | None = None) -> tuple[float, float]:
    """Split of the time-derivative term by adding and subtracting v_eps.

    i1 pairs the mollified derivative with v_eps (its kinetic form
    1/2||v_eps(t)||^2 - 1/2||v_eps(0)||^2 is reported by smoothed_balance);
    i2 pairs it with S_eps(v) - v_eps.  i1 + i2 recovers term_dt.
    """
    t_index = _resolve_index(series, t_index)
    s = _balance_samples(series, epsilon, 0.0, t_index)
    return _trapz(s["a_i1"], series.dt), _trapz(s["a_i2"], series.dt)


@dataclass(frozen=True)
class TimedTermBound:
    """Mixed-norm bound for |i2| with its exact radius power law."""

    value: float
    exponent: float
    constant: float
    epsilon: float

    def at(self, epsilon: float) -> float:
        return self.constant * epsilon ** self.exponent


def timed_term_bound(series: TimeSeries, epsilon: float, alpha: float,
                     beta: float, q: float, t_index: int | None = None,
                     seminorms: list[float] | None = None) -> TimedTermBound:
    """Bound for the mollification-mismatch term i2, explicit in the radius.

    Assembles  c * eps^margin * ||dv/dt||_{L^s L^r} * (int [v]^beta)^((2/q-1)/beta)
    * ||v(0)||_2^(2/q'), margin = alpha(2/q - 1) - 3(1/r - 1/q); the constant
    collects the kernel L^p norm from the convolution gain, the sup-error
    constant 3^alpha + 1, and the L^2 stability factor 2.
    """
    t_index = _resolve_index(series, t_index)
    r = r_of_q(q, beta)
    s, _ = s_of_q(q, beta)
    margin = smoothing_margin(alpha, q, beta)
    dt = series.dt

    dnorms = np.array([
        lp_norm(dt_field(series, j), r) for j in range(t_index + 1)
    ])
    dvdt_norm = _trapz(dnorms ** s, dt) ** (1.0 / s)
    if seminorms is None:
        seminorms = [measured_seminorm(series.snapshots[j], alpha)
                     for j in range(t_index + 1)]
    sem_norm = _trapz(np.asarray(seminorms, dtype=float) ** beta, dt) ** (1.0 / beta)
    v0 = lp_norm(series.snapshots[0], 2.0)

    p = 1.0 / (1.0 + 1.0 / q - 1.0 / r)
    two_over_qprime = 2.0 * (1.0 - 1.0 / q)
    c = (kernel_lp_norm(p)
         * (3.0 ** alpha + 1.0) ** (2.0 / q - 1.0)
         * 2.0 ** two_over_qprime)
    constant = (c * dvdt_norm * sem_norm ** (2.0 / q - 1.0)
                * v0 ** two_over_qprime)
    return TimedTermBound(value=constant * epsilon ** margin, exponent=margin,
                          constant=constant, epsilon=float(epsilon))


def energy_equality_residual(series: TimeSeries, nu: float,
                             t_index: int | None = None) -> float:
    """1/2||v(t)||^2 + nu int ||grad v||^2 - 1/2||v(0)||^2, trapezoid in time.

    Negative values signal dissipation beyond the viscous term (a defect);
    values near zero realize the energy equality.  The gradient energy is the
    edge-centered Dirichlet form, second-order accurate up to the walls.
    """
    t_index = _resolve_index(series, t_index)
    dt = series.dt
    grads = np.array([
        dirichlet_gradient_energy(series.snapshots[j]) for j in range(t_index + 1)
    ])
    k_end = 0.5 * lp_norm(series.snapshots[t_index], 2.0) ** 2
    k_start = 0.5 * lp_norm(series.snapshots[0], 2.0) ** 2
    return k_end - k_start + nu * _trapz(grads, dt)


def convergence_study(series: TimeSeries, nu: float, eps_list,
                      alpha: float | None = None, beta: float | None = None,
                      q: float | None = None,
                      t_index: int | None = None) -> EnergyReport:
    """Full audit: per-radius rows, fitted rates, and the limit comparison."""
    t_index = _resolve_index(series, t_index)
    eps_list = sorted(float(e) for e in eps_list)[::-1]
    want_bound = alpha is not None and beta is not None and q is not None
    seminorms = None
    if want_bound:
        seminorms = [measured_seminorm(series.snapshots[j], alpha)
                     for j in range(t_index + 1)]
    rows = []
    for eps in eps_list:
        row = smoothed_balance(series, eps, nu, t_index)
        if want_bound:
            b = timed_term_bound(series, eps, alpha, beta, q, t_index,
                                 seminorms=seminorms)
            row = EnergyRow(**{**row.to_dict(), "bound_i2": b.value})
        rows.append(row)

    rates = {}
    if len(eps_list) >= 3:
        for key, vals in (("i2", [abs(r.i2) for r in rows]),
                          ("term_conv", [abs(r.term_conv) for r in rows])):
            if min(vals) > 0:
                rep = fit_rate(list(zip(eps_list, vals)))
                rates[key] = {"slope": rep.slope, "constant": rep.constant}

    k_end = 0.5 * lp_norm(series.snapshots[t_index], 2.0) ** 2
    k_start = 0.5 * lp_norm(series.snapshots[0], 2.0) ** 2
    grads = np.array([
        dirichlet_gradient_energy(series.snapshots[j]) for j in range(t_index + 1)
    ])
    visc = nu * _trapz(grads, series.dt)
    limit = {
        "energy_lhs": k_end + visc,
        "energy_rhs": k_start,
        "equality_residual": k_end - k_start + visc,
    }
    meta = {"nu": nu, "t": float(series.times[t_index]),
            "snapshots": t_index + 1}
    if want_bound:
        meta.update({"alpha": alpha, "beta": beta, "q": q})
    return EnergyReport(rows=tuple(rows), limit=limit, rates=rates, meta=meta)
