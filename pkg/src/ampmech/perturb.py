"""Order-by-order perturbative solution of the anharmonic oscillator in the
transition-amplitude representation.

The coordinate is represented band by band,

    X(n, n-alpha) = (lam^w(alpha) / 2) * a(n, n-alpha)      (alpha != 0)
    X(n, n)       =  lam * a(n, n),

with w(alpha) = |alpha| - 1 for the cubic force (p = 2) and
w(alpha) = (|alpha| - 1)/2 for the quartic force (p = 3, odd bands only).
Every a(n, n-alpha) and every frequency is itself a power series in the
coupling lam. Substituting this ansatz into the equation of motion

    x'' + omega0^2 x + lam x^p = 0

and multiplying out with the two-index product law turns each (band,
order) pair into one linear equation. The solver walks these equations in
increasing total power of lam:

  * the adjacent band fixes the frequency correction at each order (its
    own amplitude drops out because the zeroth-order bracket vanishes);
  * the sum-rule quantum condition then fixes the adjacent-band amplitude
    through a first-order difference equation in n, integrated upward
    from the ground-state floor a(0, -1) = 0, whose integration constant
    is thereby forced to zero;
  * every other band follows directly, its amplitude carrying the
    invertible bracket coefficient (1 - alpha^2) * omega0^2.

Residual functionals are generated from the product law itself rather
than hand-coded per band, so the same machinery serves both force
exponents and the printed low-band recursion relations become regression
targets for the generator.

Coefficients are kept symbolic in lam (one array per power); a numeric
coupling enters only when a motion representation or an energy value is
assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .core import (
    BandAmplitudeArray,
    DimensionMismatchError,
    FrequencyGrid,
    MotionRepresentation,
)
from .params import OscillatorParams

__all__ = [
    "UnsupportedForceError",
    "UnimplementedOrderError",
    "NoClosedFormError",
    "StructureViolationError",
    "EnergyConservationError",
    "CoefficientSet",
    "PerturbSolution",
    "build_recursions",
    "solve_perturbative",
    "sho_solve",
    "quantum_condition_order_residual",
    "closed_form_amplitude",
    "closed_form_frequency",
    "extract_structure_constants",
    "assemble_motion",
    "EnergyMatrix",
    "energy_matrix",
    "EnergyDiagonalSeries",
    "energy_diagonal_series",
]

MAX_ORDER = 2


class UnsupportedForceError(ValueError):
    """Force exponent outside the implemented set {2, 3}."""


class UnimplementedOrderError(ValueError):
    """Perturbative order beyond the implemented maximum."""


class NoClosedFormError(LookupError):
    """No tabulated closed form for the requested coefficient."""


class StructureViolationError(ValueError):
    """Lowest-order amplitudes do not factor into an n-independent constant."""


class EnergyConservationError(ValueError):
    """An off-diagonal energy element failed to vanish order by order."""


def band_weight(force_exponent: int, alpha: int) -> int:
    """Power of lam carried by band alpha in the representation of x."""
    a = abs(alpha)
    if a == 0:
        return 1
    if force_exponent == 2:
        return a - 1
    if a % 2 == 0:
        raise ValueError("even bands vanish identically for the quartic force")
    return (a - 1) // 2


def _band_list(force_exponent: int, band_max: int) -> tuple[int, ...]:
    if force_exponent == 2:
        return tuple(range(band_max + 1))
    return tuple(a for a in range(1, band_max + 1, 2))


def _half(alpha: int) -> float:
    return 1.0 if alpha == 0 else 0.5


@dataclass(frozen=True)
class CoefficientSet:
    """Per-order amplitude and frequency tables.

    amp[k, alpha, n] holds a^(k)(n, n-alpha) for alpha >= 0 (negative
    bands follow from symmetry); freq_potential[k, n] holds the order-k
    frequency potential, so omega^(k)(n, m) is a difference of two
    entries. Unsolved slots are zero.
    """

    force_exponent: int
    amp: np.ndarray
    freq_potential: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amp, dtype=float)
        pot = np.asarray(self.freq_potential, dtype=float)
        if amp.ndim != 3:
            raise ValueError("amp must have shape (orders, bands, rows)")
        if pot.ndim != 2 or pot.shape != (amp.shape[0], amp.shape[2]):
            raise ValueError("freq_potential must have shape (orders, rows)")
        if self.force_exponent not in (2, 3):
            raise UnsupportedForceError(
                f"force exponent {self.force_exponent!r} not supported"
            )
        for a in (amp, pot):
            a.setflags(write=False)
        object.__setattr__(self, "amp", amp)
        object.__setattr__(self, "freq_potential", pot)

    @property
    def orders(self) -> int:
        return self.amp.shape[0] - 1

    @property
    def band_max(self) -> int:
        return self.amp.shape[1] - 1

    @property
    def rows(self) -> int:
        return self.amp.shape[2]

    def amplitude(self, k: int, n: int, m: int) -> float:
        """a^(k)(n, m) with the symmetric convention and ground-state floor."""
        if n < 0 or m < 0:
            return 0.0
        lo, hi = min(n, m), max(n, m)
        alpha = hi - lo
        if alpha > self.band_max or hi >= self.rows:
            return 0.0
        return float(self.amp[k, alpha, hi])

    def omega(self, k: int, n: int, m: int) -> float:
        return float(self.freq_potential[k, n] - self.freq_potential[k, m])


# ---------------------------------------------------------------------------
# series arithmetic: banded arrays with one coefficient per power of lam


def _x_series(
    p: int, amp: np.ndarray, max_power: int, band_max: int
) -> np.ndarray:
    """Representation of x as data[s, band_max+g, n], the lam^s coefficient
    of X(n, n-g), with the band weights and cosine halves folded in."""
    orders, bands, rows = amp.shape
    data = np.zeros((max_power + 1, 2 * band_max + 1, rows))
    for a in _band_list(p, min(bands - 1, band_max)):
        w = band_weight(p, a)
        c = _half(a)
        for k in range(orders):
            s = w + k
            if s > max_power:
                break
            data[s, band_max + a, :] = c * amp[k, a, :]
            if a > 0:
                data[s, band_max - a, : rows - a] = c * amp[k, a, a:]
    return data


def _series_mul(a: np.ndarray, b: np.ndarray, max_power: int) -> np.ndarray:
    """Product of two banded lam-series under the two-index law."""
    pa, wa, rows = a.shape
    pb, wb, _ = b.shape
    ba, bb = (wa - 1) // 2, (wb - 1) // 2
    bc = ba + bb
    out = np.zeros((max_power + 1, 2 * bc + 1, rows), dtype=np.result_type(a, b))
    for i in range(min(pa, max_power + 1)):
        for j in range(min(pb, max_power + 1 - i)):
            s = i + j
            for g in range(-ba, ba + 1):
                lo, hi = max(0, g), min(rows - 1, rows - 1 + g)
                if lo > hi:
                    continue
                xa = a[i, ba + g, lo : hi + 1]
                if not np.any(xa):
                    continue
                for d in range(-bb, bb + 1):
                    out[s, bc + g + d, lo : hi + 1] += (
                        xa * b[j, bb + d, lo - g : hi + 1 - g]
                    )
    return out


def _omega_series(pot: np.ndarray, band_max: int) -> np.ndarray:
    """omega^(k)(n, n-g) per band from the frequency potentials."""
    orders, rows = pot.shape
    out = np.zeros((orders, 2 * band_max + 1, rows))
    idx = np.arange(rows)
    for g in range(-band_max, band_max + 1):
        cols = idx - g
        keep = (cols >= 0) & (cols < rows)
        out[:, band_max + g, keep] = pot[:, idx[keep]] - pot[:, cols[keep]]
    return out


def _eom_residual_coefficient(
    params: OscillatorParams,
    amp: np.ndarray,
    pot: np.ndarray,
    power: int,
    band_max: int,
) -> np.ndarray:
    """lam^power coefficient of the equation-of-motion representative,

        [omega0^2 - omega^2(n, n-g)] X(n, n-g) + lam (X^p)(n, n-g),

    returned as an array over (signed band g, row n)."""
    p = params.force_exponent
    x = _x_series(p, amp, power, band_max)
    om = _omega_series(pot, band_max)
    res = params.omega0**2 * x[power].copy()
    # omega^2 acts entrywise per band; convolve the three order indices
    for i in range(min(om.shape[0], power + 1)):
        for j in range(min(om.shape[0], power + 1 - i)):
            res -= om[i] * om[j] * x[power - i - j]
    if power >= 1:
        xp = _series_mul(x, x, power - 1)
        if p == 3:
            xp = _series_mul(xp, x, power - 1)
        bc = (xp.shape[1] - 1) // 2
        res += xp[power - 1, bc - band_max : bc + band_max + 1, :]
    return res


def _qc_residual_coefficient(
    params: OscillatorParams,
    amp: np.ndarray,
    pot: np.ndarray,
    k: int,
) -> np.ndarray:
    """lam^k coefficient of the quantum-condition residual

        pi*m * sum_alpha lam^{2 w(alpha)} [ a^2(n+alpha, n) omega(n+alpha, n)
                                          - a^2(n, n-alpha) omega(n, n-alpha) ]
        - h,

    evaluated from the current coefficient tables."""
    p = params.force_exponent
    orders, bands, rows = amp.shape
    res = np.zeros(rows)
    if k == 0:
        res -= params.h
    for alpha in _band_list(p, bands - 1):
        rem = k - 2 * band_weight(p, alpha)
        if rem < 0:
            continue
        for i in range(min(orders, rem + 1)):
            for j in range(min(orders, rem + 1 - i)):
                l = rem - i - j
                if l >= pot.shape[0]:
                    continue
                # upward term a(n+alpha, n), defined for n + alpha < rows
                up = np.zeros(rows)
                m_hi = rows - alpha
                a_up = amp[i, alpha, alpha:] * amp[j, alpha, alpha:]
                om_up = pot[l, alpha:] - pot[l, : m_hi]
                up[:m_hi] = a_up * om_up
                # downward term a(n, n-alpha)
                down = np.zeros(rows)
                om_dn = pot[l, alpha:] - pot[l, : m_hi]
                down[alpha:] = amp[i, alpha, alpha:] * amp[j, alpha, alpha:] * om_dn
                res += math.pi * params.mass * (up - down)
    return res


# ---------------------------------------------------------------------------
# public residual functionals


def build_recursions(
    params: OscillatorParams, alpha: int, order: int
) -> Callable[[CoefficientSet], np.ndarray]:
    """Residual functional for band alpha at the given order in lam.

    The returned callable evaluates, on a CoefficientSet, the order-`order`
    coefficient of the band-alpha component of the equation of motion,
    normalized so that the adjacent band reads
    [omega0^2 - omega^2(n, n-1)] a(n, n-1) + ... at order zero. It vanishes
    identically on a solution, row by row, wherever the tables provide the
    neighbors the band couples to.
    """
    p = params.force_exponent
    if p not in (2, 3):
        raise UnsupportedForceError(f"force exponent {p!r} not supported")
    if order > MAX_ORDER:
        raise UnimplementedOrderError(
            f"order {order} beyond implemented maximum {MAX_ORDER}"
        )
    if order < 0:
        raise ValueError("order must be nonnegative")
    alpha = abs(alpha)
    w = band_weight(p, alpha)  # raises for even quartic bands
    power = w + order
    scale = 1.0 / _half(alpha)

    def residual(coeffs: CoefficientSet) -> np.ndarray:
        if coeffs.force_exponent != p:
            raise UnsupportedForceError(
                "coefficient tables were built for a different force exponent"
            )
        band_max = max(coeffs.band_max, alpha)
        res = _eom_residual_coefficient(
            params, coeffs.amp, coeffs.freq_potential, power, band_max
        )
        return scale * res[band_max + alpha, :]

    return residual


def quantum_condition_order_residual(sol: "PerturbSolution", k: int) -> np.ndarray:
    """Order-k coefficient of the quantum-condition residual at the solution."""
    c = sol.coeffs
    return _qc_residual_coefficient(sol.params, c.amp, c.freq_potential, k)


# ---------------------------------------------------------------------------
# the solver


@dataclass(frozen=True)
class PerturbSolution:
    """Solved coefficient tables up to the requested order.

    Rows beyond n_max exist internally as headroom so that every public
    row is exact; accessors expose n = 0..n_max.
    """

    params: OscillatorParams
    order: int
    n_max: int
    coeffs: CoefficientSet
    solved_orders: dict[int, int]

    @property
    def band_max(self) -> int:
        """Widest band with any solved order."""
        return max(self.solved_orders)

    def a(self, k: int, alpha: int) -> np.ndarray:
        """Coefficients a^(k)(n, n-alpha) for n = 0..n_max."""
        alpha = abs(alpha)
        if alpha not in self.solved_orders or k > self.solved_orders[alpha]:
            raise KeyError(f"band {alpha} not solved at order {k}")
        return self.coeffs.amp[k, alpha, : self.n_max + 1]

    def frequency_potential(self, k: int) -> np.ndarray:
        if k > self.order:
            raise KeyError(f"frequency potential not solved at order {k}")
        return self.coeffs.freq_potential[k, : self.n_max + 1]

    def omega_band(self, k: int, alpha: int = 1) -> np.ndarray:
        """omega^(k)(n, n-alpha) for n = 0..n_max (zero where n < alpha)."""
        pot = self.coeffs.freq_potential[k]
        out = np.zeros(self.n_max + 1)
        n = np.arange(alpha, self.n_max + 1)
        out[alpha:] = pot[n] - pot[n - alpha]
        return out

    @cached_property
    def structure_constants(self) -> dict[int, float]:
        return extract_structure_constants(self)


def _engine_extent(p: int, order: int) -> tuple[int, int, tuple[int, ...]]:
    """Total-power ceiling, engine band width and band list for a solve."""
    if p == 2:
        public_band = order + 1
        t_max = max(band_weight(p, public_band), 1) + order
        band_eng = t_max + 1
    else:
        public_band = 2 * order + 1
        t_max = band_weight(p, public_band) + order
        band_eng = 2 * t_max + 1
    return t_max, band_eng, _band_list(p, band_eng)


def solve_perturbative(
    params: OscillatorParams, order: int, n_max: int
) -> PerturbSolution:
    """Solve the banded recursion relations through the given order in lam.

    All equation-of-motion residuals and all order-k quantum-condition
    residuals vanish (to rounding) on the returned tables for every row
    up to n_max. The adjacent-band zeroth amplitude is taken positive.
    """
    p = params.force_exponent
    if order > MAX_ORDER:
        raise UnimplementedOrderError(
            f"order {order} beyond implemented maximum {MAX_ORDER}"
        )
    if order < 0:
        raise ValueError("order must be nonnegative")
    if n_max < order + 3:
        raise DimensionMismatchError(
            f"n_max = {n_max} too small; need at least order + 3 = {order + 3}"
        )
    omega0, beta = params.omega0, params.beta
    t_max, band_eng, bands = _engine_extent(p, order)
    pad = (t_max + 2) * band_eng + 2
    rows = n_max + 1 + pad

    amp = np.zeros((order + 1, band_eng + 1, rows))
    pot = np.zeros((order + 1, rows))
    pot[0] = omega0 * np.arange(rows)
    levels = np.arange(rows, dtype=float)
    amp[0, 1, 1:] = beta * np.sqrt(levels[1:])
    solved: dict[int, int] = {1: 0}

    for t in range(1, t_max + 1):
        res_t = _eom_residual_coefficient(params, amp, pot, t, band_eng)
        if t <= order:
            # adjacent band: its amplitude drops out, the frequency remains
            a0 = amp[0, 1]
            pot_inc = np.zeros(rows)
            pot_inc[1:] = res_t[band_eng + 1, 1:] / (omega0 * a0[1:])
            pot[t] = np.cumsum(pot_inc)
            # sum rule at order t: difference equation integrated from n = 0
            q0 = _qc_residual_coefficient(params, amp, pot, t)
            u = -np.cumsum(q0)
            amp[t, 1, 1:] = u[:-1] / (2.0 * math.pi * params.mass * omega0 * a0[1:])
            solved[1] = t
        for alpha in bands:
            if alpha == 1:
                continue
            w = band_weight(p, alpha)
            k = t - w
            if k < 0 or k > order:
                continue
            denom = (1.0 - alpha * alpha) * omega0**2 * _half(alpha)
            amp[k, alpha, alpha:] = -res_t[band_eng + alpha, alpha:] / denom
            solved[alpha] = max(solved.get(alpha, -1), k)

    coeffs = CoefficientSet(force_exponent=p, amp=amp, freq_potential=pot)
    return PerturbSolution(
        params=params,
        order=order,
        n_max=n_max,
        coeffs=coeffs,
        solved_orders=solved,
    )


def sho_solve(params: OscillatorParams, n_max: int) -> PerturbSolution:
    """Exact solution of the unperturbed oscillator (lam = 0 required).

    Assuming only adjacent-level transitions survive, the equation of
    motion forces omega(n, n-1) = omega0 and the sum rule fixes
    a(n, n-1) = beta*sqrt(n), with the ground-state floor killing the
    integration constant. Energies follow as (n + 1/2)*hbar*omega0.
    """
    if params.lam != 0.0:
        raise ValueError("sho_solve requires lam = 0; use solve_perturbative instead")
    if n_max < 1:
        raise DimensionMismatchError("n_max must be at least 1")
    pad = 4
    rows = n_max + 1 + pad
    amp = np.zeros((1, 2, rows))
    amp[0, 1, 1:] = params.beta * np.sqrt(np.arange(1, rows, dtype=float))
    pot = params.omega0 * np.arange(rows, dtype=float)[None, :]
    coeffs = CoefficientSet(
        force_exponent=params.force_exponent, amp=amp, freq_potential=pot
    )
    return PerturbSolution(
        params=params, order=0, n_max=n_max, coeffs=coeffs, solved_orders={1: 0}
    )


# ---------------------------------------------------------------------------
# closed forms (cubic force), used as regression targets for the solver


def _falling_sqrt(n: np.ndarray | int, alpha: int) -> np.ndarray | float:
    """sqrt(n (n-1) ... (n-alpha+1)), zero below the floor."""
    n = np.asarray(n, dtype=float)
    out = np.ones_like(n)
    for j in range(alpha):
        out = out * np.clip(n - j, 0.0, None)
    return np.sqrt(out)


def closed_form_amplitude(
    k: int, n: int, alpha: int, params: OscillatorParams
) -> float:
    """Tabulated closed-form a^(k)(n, n-alpha) for the cubic force."""
    if params.force_exponent != 2:
        raise NoClosedFormError("closed forms are tabulated for the cubic force only")
    alpha = abs(alpha)
    if n < alpha or n < 0:
        return 0.0
    b, w0 = params.beta, params.omega0
    root = float(_falling_sqrt(n, alpha))
    if k == 0:
        if alpha == 0:
            return -(b**2) / (4.0 * w0**2) * (2.0 * n + 1.0)
        if alpha == 1:
            return b * math.sqrt(n)
        if alpha == 2:
            return b**2 / (6.0 * w0**2) * root
        if alpha == 3:
            return b**3 / (48.0 * w0**4) * root
    elif k == 1:
        if alpha in (0, 1, 2):
            return 0.0
    elif k == 2:
        if alpha == 0:
            return -(b**4) / (72.0 * w0**6) * (30.0 * n**2 + 30.0 * n + 11.0)
        if alpha == 1:
            return 11.0 * b**3 / (72.0 * w0**4) * n * math.sqrt(n)
        if alpha == 2:
            return 3.0 * b**4 / (32.0 * w0**6) * (2.0 * n - 1.0) * root
    raise NoClosedFormError(f"no tabulated closed form for (k={k}, alpha={alpha})")


def closed_form_frequency(
    k: int, n: int, alpha: int, params: OscillatorParams
) -> float:
    """Tabulated closed-form omega^(k)(n, n-alpha)."""
    alpha = abs(alpha)
    if k == 0:
        return alpha * params.omega0
    if params.force_exponent != 2:
        raise NoClosedFormError(
            "frequency corrections are tabulated for the cubic force only"
        )
    b, w0 = params.beta, params.omega0
    if k == 1 and alpha == 1:
        return 0.0
    if k == 2 and alpha == 1:
        return -5.0 * b**2 / (12.0 * w0**3) * n
    if k == 2 and alpha == 2:
        return -5.0 * b**2 / (12.0 * w0**3) * (2.0 * n - 1.0)
    raise NoClosedFormError(f"no tabulated frequency form for (k={k}, alpha={alpha})")


def extract_structure_constants(
    sol: PerturbSolution,
    band_max: int | None = None,
    tol: float = 1e-10,
) -> dict[int, float]:
    """Numerical factors A_alpha in the lowest-order pattern

        a^(0)(n, n-alpha) = A_alpha * beta^alpha / omega0^e * sqrt(n!/(n-alpha)!),

    with e = 2(alpha-1) for the cubic force and alpha-1 for the quartic.
    The factor must come out independent of n; a spread beyond tol raises
    StructureViolationError.
    """
    p = sol.params.force_exponent
    b, w0 = sol.params.beta, sol.params.omega0
    if band_max is None:
        band_max = sol.band_max
    out: dict[int, float] = {}
    for alpha in _band_list(p, band_max):
        if alpha == 0 or alpha not in sol.solved_orders:
            continue
        n = np.arange(alpha, sol.n_max + 1)
        if n.size == 0:
            continue
        exp = 2 * (alpha - 1) if p == 2 else alpha - 1
        norm = b**alpha / w0**exp * _falling_sqrt(n, alpha)
        vals = sol.coeffs.amp[0, alpha, alpha : sol.n_max + 1] / norm
        ref = float(np.median(vals))
        spread = float(np.max(np.abs(vals - ref)))
        if spread > tol * max(1.0, abs(ref)):
            raise StructureViolationError(
                f"band {alpha}: lowest-order amplitudes are n-dependent "
                f"(spread {spread:.3e} about {ref:.6e})"
            )
        out[alpha] = ref
    return out


# ---------------------------------------------------------------------------
# assembly at numeric coupling


def assemble_motion(
    sol: PerturbSolution, lam: float, n_max: int | None = None
) -> MotionRepresentation:
    """Sum the coefficient tables at a numeric coupling into a motion
    representation (real-symmetric amplitudes plus a frequency grid)."""
    if n_max is None:
        n_max = sol.n_max
    if n_max > sol.n_max:
        raise DimensionMismatchError(
            f"requested n_max {n_max} exceeds solved range {sol.n_max}"
        )
    p = sol.params.force_exponent
    c = sol.coeffs
    band_max = sol.band_max
    data = np.zeros((n_max + 1, 2 * band_max + 1))
    for alpha, k_hi in sorted(sol.solved_orders.items()):
        w = band_weight(p, alpha)
        series = np.zeros(c.rows)
        for k in range(k_hi + 1):
            series += lam**k * c.amp[k, alpha, :]
        series *= _half(alpha) * lam**w
        data[:, band_max + alpha] = series[: n_max + 1]
        if alpha > 0:
            upper = series[alpha : alpha + n_max + 1]
            data[: upper.size, band_max - alpha] = upper
    grid_rows = min(c.rows, n_max + band_max + 1)
    potential = np.zeros(grid_rows)
    for k in range(sol.order + 1):
        potential += lam**k * c.freq_potential[k, :grid_rows]
    params = sol.params
    if params.lam != lam:
        params = OscillatorParams(
            mass=params.mass,
            omega0=params.omega0,
            lam=lam,
            hbar=params.hbar,
            force_exponent=params.force_exponent,
        )
    return MotionRepresentation(
        amplitudes=BandAmplitudeArray(data),
        frequencies=FrequencyGrid(potential),
        params=params,
    )


# ---------------------------------------------------------------------------
# energy


@dataclass(frozen=True)
class EnergyMatrix:
    """Energy representatives W(n, n-alpha), split by power of lam and by
    term of the energy function (kinetic, harmonic, anharmonic).

    Arrays are indexed [power, alpha, n] with alpha >= 0; the full matrix
    is symmetric. Off-diagonal bands vanish order by order on a solution,
    which `energy_matrix` verifies before returning.
    """

    order_cap: int
    band_max: int
    n_max: int
    kinetic: np.ndarray
    harmonic: np.ndarray
    anharmonic: np.ndarray

    def total(self, k: int, alpha: int) -> np.ndarray:
        a = abs(alpha)
        return self.kinetic[k, a] + self.harmonic[k, a] + self.anharmonic[k, a]

    def diagonal(self, k: int) -> np.ndarray:
        return self.total(k, 0)


def energy_matrix(
    sol: PerturbSolution, order_cap: int | None = None, check_tol: float = 1e-12
) -> EnergyMatrix:
    """Assemble W = m x'^2 / 2 + m omega0^2 x^2 / 2 + m lam x^(p+1)/(p+1)
    through lam^order_cap with the two-index product law.

    The kinetic term uses the entrywise derivative i*omega(n, m) X(n, m),
    so its frequency signs follow the antisymmetry omega(n, m) = -omega(m, n).
    Raises EnergyConservationError if any off-diagonal element fails to
    vanish at the computed orders.
    """
    if order_cap is None:
        order_cap = sol.order
    if order_cap > sol.order:
        raise UnimplementedOrderError(
            f"energy through lam^{order_cap} needs a solution of order "
            f"{order_cap}, have {sol.order}"
        )
    p = sol.params.force_exponent
    c = sol.coeffs
    m = sol.params.mass
    band_x = sol.band_max
    rows = c.rows
    x = _x_series(p, c.amp, order_cap, band_x)
    om = _omega_series(c.freq_potential, band_x)
    xdot = np.zeros_like(x, dtype=np.complex128)
    for s in range(order_cap + 1):
        for j in range(min(om.shape[0], s + 1)):
            xdot[s] += 1j * om[j] * x[s - j]

    x2 = _series_mul(x, x, order_cap)
    d2 = _series_mul(xdot, xdot, order_cap)
    # the anharmonic term x^(p+1) carries one explicit power of lam
    if order_cap >= 1:
        src = _series_mul(x2, x if p == 2 else x2, order_cap - 1)
    else:
        src = None
    band_rep = order_cap + 2 if p == 2 else 2 * order_cap + 2
    band_rep = min(band_rep, 2 * band_x)
    n_keep = sol.n_max + 1

    def _trim(series: np.ndarray | None, factor: float, shift: int) -> np.ndarray:
        out = np.zeros((order_cap + 1, band_rep + 1, n_keep))
        if series is None:
            return out
        bc = (series.shape[1] - 1) // 2
        for s in range(shift, order_cap + 1):
            for a in range(band_rep + 1):
                out[s, a] = factor * np.real(series[s - shift, bc + a, :n_keep])
        return out

    kinetic = _trim(d2, 0.5 * m, 0)
    harmonic = _trim(x2, 0.5 * m * sol.params.omega0**2, 0)
    anharmonic = _trim(src, m / (p + 1.0), 1)

    em = EnergyMatrix(
        order_cap=order_cap,
        band_max=band_rep,
        n_max=sol.n_max,
        kinetic=kinetic,
        harmonic=harmonic,
        anharmonic=anharmonic,
    )
    scale = max(1.0, float(np.max(np.abs(kinetic + harmonic))))
    for s in range(order_cap + 1):
        for alpha in range(1, band_rep + 1):
            worst = float(np.max(np.abs(em.total(s, alpha))))
            if worst > check_tol * scale:
                raise EnergyConservationError(
                    f"W(n, n-{alpha}) at order lam^{s} reaches {worst:.3e}; "
                    "off-diagonal energy must vanish order by order"
                )
    return em


@dataclass(frozen=True)
class EnergyDiagonalSeries:
    """Level energies as a power series in lam, with the three energy-term
    contributions reported separately."""

    params: OscillatorParams
    n_max: int
    kinetic: np.ndarray
    harmonic: np.ndarray
    anharmonic: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.kinetic + self.harmonic + self.anharmonic

    def evaluate(self, lam: float) -> np.ndarray:
        orders = self.total.shape[0]
        powers = lam ** np.arange(orders)
        return np.tensordot(powers, self.total, axes=(0, 0))


def energy_diagonal_series(sol: PerturbSolution) -> EnergyDiagonalSeries:
    """Diagonal of the energy matrix, per power of lam and per term."""
    em = energy_matrix(sol, sol.order)
    return EnergyDiagonalSeries(
        params=sol.params,
        n_max=sol.n_max,
        kinetic=em.kinetic[:, 0, :],
        harmonic=em.harmonic[:, 0, :],
        anharmonic=em.anharmonic[:, 0, :],
    )
