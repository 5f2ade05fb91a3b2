"""Closed-form exponent calculus with validity windows.

Pure double-precision arithmetic relating the spatial Hölder exponent alpha,
the time-integrability exponent beta, and the mixed-norm exponents (q, r, s,
s') that govern when the smoothed energy balance closes.  Windows are open
intervals, enforced with a small configurable margin; degenerate denominators
raise instead of returning infinities.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
import json

WINDOW_MARGIN = 1e-9


class ExponentRangeError(ValueError):
    """Parameter outside its admissible open window."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ExponentRangeError(msg)


def beta0(alpha: float) -> float:
    """Threshold time exponent 6/(3 + 2 alpha) for a given Hölder exponent."""
    _require(WINDOW_MARGIN < alpha < 1.0 - WINDOW_MARGIN + 1e-15,
             f"alpha must lie in (0, 1), got {alpha}")
    return 6.0 / (3.0 + 2.0 * alpha)


def r_window(beta: float) -> tuple[float, float]:
    """Open admissible window (4/(2+beta), 4/(4-beta)) for the norm exponent r."""
    _require(1.0 + WINDOW_MARGIN <= beta <= 2.0, f"beta must lie in (1, 2], got {beta}")
    return 4.0 / (2.0 + beta), 4.0 / (4.0 - beta)


def shinbrot_s(r: float, beta: float) -> float:
    """Mixed-norm time exponent s = 2 r beta / (4r + r beta - 4)."""
    lo, hi = r_window(beta)
    _require(lo + WINDOW_MARGIN < r < hi - WINDOW_MARGIN,
             f"r = {r} outside the open window ({lo}, {hi})")
    den = 4.0 * r + r * beta - 4.0
    _require(den > 0.0, f"degenerate denominator 4r + r*beta - 4 = {den}")
    s = 2.0 * r * beta / den
    if s <= 1.0:
        raise ExponentRangeError(f"computed s = {s} <= 1")
    return s


def s_of_q(q: float, beta: float) -> tuple[float, float]:
    """Conjugate pair s = q beta/(q + q beta - 2), s' = beta q/(2 - q)."""
    lo = 4.0 / (2.0 + beta)
    _require(lo + WINDOW_MARGIN < q < 2.0 - WINDOW_MARGIN,
             f"q = {q} outside the open window ({lo}, 2)")
    den = -2.0 + q + q * beta
    _require(den > 0.0, f"degenerate denominator q + q*beta - 2 = {den}")
    s = q * beta / den
    s_prime = beta * q / (2.0 - q)
    if not 1.0 < s < 2.0:
        raise ExponentRangeError(f"computed s = {s} outside (1, 2)")
    return s, s_prime


def r_of_q(q: float, beta: float) -> float:
    """Derivative-integrability exponent r = 4q/(4 + 2q - q beta).

    Algebraically identical to 4s/(4s + beta s - 2 beta) with s from
    ``s_of_q``; both forms are checked against each other.
    """
    s, _ = s_of_q(q, beta)
    den = 4.0 + 2.0 * q - q * beta
    _require(den > 0.0, f"degenerate denominator 4 + 2q - q*beta = {den}")
    r = 4.0 * q / den
    den_s = 4.0 * s + beta * s - 2.0 * beta
    _require(den_s > 0.0, f"degenerate denominator 4s + beta*s - 2*beta = {den_s}")
    r_alt = 4.0 * s / den_s
    if abs(r - r_alt) > 1e-12 * max(1.0, r):
        raise ExponentRangeError(
            f"inconsistent r: {r} (via q) vs {r_alt} (via s)"
        )
    if not 1.0 < r < q:
        raise ExponentRangeError(f"computed r = {r} outside (1, q) with q = {q}")
    return r


def smoothing_margin(alpha: float, q: float, beta: float) -> float:
    """Sign of the smoothing-scale exponent: alpha(2/q - 1) - 3(2 - beta)/4.

    Positive iff the time-derivative term in the smoothed balance gains a
    positive power of the smoothing scale.
    """
    _require(0.0 < alpha < 1.0, f"alpha must lie in (0, 1), got {alpha}")
    lo = 4.0 / (2.0 + beta)
    # the left endpoint is the q-optimized limit and is admitted here
    _require(lo <= q < 2.0, f"q = {q} outside [{lo}, 2)")
    return alpha * (2.0 / q - 1.0) - 3.0 * (2.0 - beta) / 4.0


def product_integrability_check(beta: float) -> bool:
    """True iff (4+beta)/(2(2+beta)) + 1/(2+beta) <= 1 (equivalently beta >= 2)."""
    _require(beta > -2.0 + WINDOW_MARGIN, f"beta must exceed -2, got {beta}")
    return (4.0 + beta) / (2.0 * (2.0 + beta)) + 1.0 / (2.0 + beta) <= 1.0


def shinbrot_pointwise_bound(v_l2: float, v_linf: float, grad_l2: float,
                             v0_l2: float, r: float) -> float:
    """Interpolation bound for the L^r norm of the convective term.

    ||v0||^(2/r - 1) * ||v||_inf^(2(1 - 1/r)) * ||grad v||_2, with the initial
    kinetic norm standing in for ||v||_2; ``v_l2`` is accepted for reporting
    symmetry but the bound uses ``v0_l2``.
    """
    _require(1.0 + WINDOW_MARGIN < r < 2.0 - WINDOW_MARGIN,
             f"r must lie in (1, 2), got {r}")
    for name, val in (("v_l2", v_l2), ("v_linf", v_linf),
                      ("grad_l2", grad_l2), ("v0_l2", v0_l2)):
        if val < 0.0:
            raise ExponentRangeError(f"{name} must be nonnegative, got {val}")
    return v0_l2 ** (2.0 / r - 1.0) * v_linf ** (2.0 * (1.0 - 1.0 / r)) * grad_l2


def threshold_beta_by_root(alpha: float) -> float:
    """Recover the threshold exponent by root-finding instead of the formula.

    At the permissive end q -> 4/(2+beta) the margin becomes
    alpha*beta/2 - 3(2-beta)/4; its zero in beta is located numerically,
    giving an independent route to the closed form 6/(3 + 2 alpha).
    """
    from scipy.optimize import brentq

    _require(0.0 < alpha < 1.0, f"alpha must lie in (0, 1), got {alpha}")

    def q_optimized_margin(beta: float) -> float:
        return alpha * beta / 2.0 - 3.0 * (2.0 - beta) / 4.0

    return float(brentq(q_optimized_margin, 1.0, 2.0, xtol=1e-14, rtol=1e-15))


@dataclass(frozen=True)
class ExponentBundle:
    """One consistent choice of exponents plus its validity flags."""

    alpha: float
    beta: float
    q: float | None
    r: float
    s: float
    s_prime: float | None
    beta0: float
    margin: float | None
    valid: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def make_bundle(alpha: float, beta: float, q: float | None = None,
                r: float | None = None) -> ExponentBundle:
    """Assemble a bundle from (alpha, beta) plus either q or r.

    With q given, s/s'/r come from the q-parameterized route and the margin
    is evaluated; with only r (or neither, taking the window midpoint), the
    direct mixed-norm route is used.
    """
    b0 = beta0(alpha)
    lo, hi = r_window(beta)
    valid = {
        "beta_above_threshold": beta > b0,
        "beta_in_(1,2)": 1.0 < beta < 2.0,
    }
    if q is not None:
        s, s_prime = s_of_q(q, beta)
        rr = r_of_q(q, beta)
        margin = smoothing_margin(alpha, q, beta)
        valid["conjugate_exponents"] = abs(1.0 / s + 1.0 / s_prime - 1.0) < 1e-12
        valid["margin_positive"] = margin > 0.0
        valid["r_in_window"] = lo < rr < hi
        return ExponentBundle(alpha, beta, q, rr, s, s_prime, b0, margin, valid)
    if r is None:
        r = 0.5 * (lo + hi)
    s = shinbrot_s(r, beta)
    valid["r_in_window"] = lo < r < hi
    return ExponentBundle(alpha, beta, None, r, s, None, b0, None, valid)
