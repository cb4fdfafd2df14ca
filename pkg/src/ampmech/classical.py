"""Classical Fourier-series solution of x'' + omega0^2 x + lam x^p = 0.

The periodic orbit is expanded in cosine harmonics of a single base
frequency,

    x(t) = lam a_0 + a_1 cos(w t) + lam a_2 cos(2 w t) + lam^2 a_3 cos(3 w t) + ...

(for the quartic force only odd harmonics appear and the suppression is
one power of lam per two harmonics). Coefficients and the frequency are
power series in lam, solved order by order through harmonic balance: the
fundamental fixes the frequency corrections, every other harmonic is
fixed by its own balance equation. The leading amplitude a_1 is the free
constant of the motion; prescribing the action J instead uses the
leading-order quantization a_1 = sqrt(J / (pi m omega0)).

This is the large-n benchmark for the quantum solver: at J = n h the
classical coefficients reproduce the leading-n behavior of the quantum
band amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import OscillatorParams
from .perturb import band_weight, _band_list, _half

__all__ = [
    "QuadratureMismatchError",
    "ClassicalSolution",
    "classical_solve",
    "balance_residuals",
    "fourier_product",
    "action_integral",
    "ode_residual",
]


class QuadratureMismatchError(ValueError):
    """Fourier-space and time-quadrature action integrals disagree."""


@dataclass(frozen=True)
class ClassicalSolution:
    """Harmonic coefficients a_alpha^(k) and frequency series for one orbit.

    amp[k, alpha] holds the order-k coefficient of harmonic alpha (the
    lam^w(alpha) suppression is not folded in); omega_coeffs[k] is the
    order-k frequency coefficient. The highest harmonic is a guard: it is
    carried in products but never balanced, so the residual floor of a
    solution sits one order beyond the solved one.
    """

    params: OscillatorParams
    order: int
    amp: np.ndarray
    omega_coeffs: np.ndarray
    action: float | None = None

    def __post_init__(self) -> None:
        amp = np.asarray(self.amp, dtype=float)
        om = np.asarray(self.omega_coeffs, dtype=float)
        if amp.ndim != 2 or om.shape != (amp.shape[0],):
            raise ValueError("amp must be (orders, harmonics), omega_coeffs (orders,)")
        amp.setflags(write=False)
        om.setflags(write=False)
        object.__setattr__(self, "amp", amp)
        object.__setattr__(self, "omega_coeffs", om)

    @property
    def harmonic_max(self) -> int:
        return self.amp.shape[1] - 1

    def omega(self, lam: float) -> float:
        powers = lam ** np.arange(self.omega_coeffs.size)
        return float(self.omega_coeffs @ powers)

    def cosine_coefficients(self, lam: float) -> np.ndarray:
        """Full cosine coefficients c_alpha(lam), weights folded in."""
        p = self.params.force_exponent
        out = np.zeros(self.harmonic_max + 1)
        powers = lam ** np.arange(self.amp.shape[0])
        for alpha in _band_list(p, self.harmonic_max):
            out[alpha] = lam ** band_weight(p, alpha) * float(
                self.amp[:, alpha] @ powers
            )
        return out

    def x_of_t(self, t: np.ndarray, lam: float) -> np.ndarray:
        c = self.cosine_coefficients(lam)
        w = self.omega(lam)
        t = np.asarray(t, dtype=float)
        alphas = np.arange(c.size)
        return np.cos(np.outer(t, alphas) * w) @ c

    def xdot_of_t(self, t: np.ndarray, lam: float) -> np.ndarray:
        c = self.cosine_coefficients(lam)
        w = self.omega(lam)
        t = np.asarray(t, dtype=float)
        alphas = np.arange(c.size)
        return -np.sin(np.outer(t, alphas) * w) @ (c * alphas * w)


def _exp_series(
    p: int, amp: np.ndarray, max_power: int, harmonic_max: int
) -> np.ndarray:
    """Exponential coefficients data[s, H+g] of the orbit, weights folded."""
    orders = amp.shape[0]
    data = np.zeros((max_power + 1, 2 * harmonic_max + 1))
    for alpha in _band_list(p, min(amp.shape[1] - 1, harmonic_max)):
        w = band_weight(p, alpha)
        c = 1.0 if alpha == 0 else 0.5
        for k in range(orders):
            s = w + k
            if s > max_power:
                break
            data[s, harmonic_max + alpha] = c * amp[k, alpha]
            if alpha > 0:
                data[s, harmonic_max - alpha] = c * amp[k, alpha]
    return data


def _exp_mul(a: np.ndarray, b: np.ndarray, max_power: int) -> np.ndarray:
    ha, hb = (a.shape[1] - 1) // 2, (b.shape[1] - 1) // 2
    out = np.zeros((max_power + 1, 2 * (ha + hb) + 1))
    for i in range(min(a.shape[0], max_power + 1)):
        for j in range(min(b.shape[0], max_power + 1 - i)):
            out[i + j] += np.convolve(a[i], b[j])
    return out


def _balance_residual_coefficient(
    params: OscillatorParams,
    amp: np.ndarray,
    omega_coeffs: np.ndarray,
    power: int,
    harmonic_max: int,
) -> np.ndarray:
    """lam^power coefficient of the harmonic-balance residual per signed
    harmonic: [omega0^2 - (g*omega)^2] X_g + lam (x^p)_g."""
    p = params.force_exponent
    x = _exp_series(p, amp, power, harmonic_max)
    om2 = np.convolve(omega_coeffs, omega_coeffs)[: power + 1]
    g2 = (np.arange(-harmonic_max, harmonic_max + 1) ** 2).astype(float)
    res = params.omega0**2 * x[power].copy()
    for s in range(min(om2.size, power + 1)):
        res -= om2[s] * g2 * x[power - s]
    if power >= 1:
        xp = _exp_mul(x, x, power - 1)
        if p == 3:
            xp = _exp_mul(xp, x, power - 1)
        hc = (xp.shape[1] - 1) // 2
        res += xp[power - 1, hc - harmonic_max : hc + harmonic_max + 1]
    return res


def classical_solve(
    params: OscillatorParams,
    order: int,
    a1: float | None = None,
    action: float | None = None,
) -> ClassicalSolution:
    """Harmonic-balance solution through the given order in lam.

    Exactly one of the leading amplitude a1 or the action must be
    prescribed. The leading amplitude is held fixed across orders (the
    fundamental's balance equation then determines the frequency
    corrections), and one guard harmonic beyond those coupled at this
    order is carried but never balanced.
    """
    if order < 0 or order > 2:
        raise ValueError("order must be 0, 1 or 2")
    if (a1 is None) == (action is None):
        raise ValueError("prescribe exactly one of a1 or action")
    if action is not None:
        if action < 0:
            raise ValueError("action must be nonnegative")
        a1 = math.sqrt(action / (math.pi * params.mass * params.omega0))
    assert a1 is not None
    if a1 <= 0:
        raise ValueError("leading amplitude must be positive")

    p = params.force_exponent
    omega0 = params.omega0
    if p == 2:
        coupled_max = order + 1 if order >= 1 else 1
        guard_max = coupled_max + 1
        t_max = max(order, 1 if order >= 1 else 0) + order
    else:
        coupled_max = 2 * order + 1
        guard_max = coupled_max + 2
        t_max = band_weight(p, coupled_max) + order

    amp = np.zeros((order + 1, guard_max + 1))
    omega_coeffs = np.zeros(order + 1)
    omega_coeffs[0] = omega0
    amp[0, 1] = a1

    for t in range(1, t_max + 1):
        res = _balance_residual_coefficient(params, amp, omega_coeffs, t, guard_max)
        if t <= order:
            # fundamental: a1 is held fixed, the frequency correction remains
            omega_coeffs[t] = res[guard_max + 1] / (omega0 * a1)
        for alpha in _band_list(p, coupled_max):
            if alpha == 1:
                continue
            k = t - band_weight(p, alpha)
            if k < 0 or k > order:
                continue
            denom = (1.0 - alpha * alpha) * omega0**2 * _half(alpha)
            amp[k, alpha] = -res[guard_max + alpha] / denom
        if p == 2 and 1 <= t <= order + 1:
            amp[t - 1, 0] = -res[guard_max] / omega0**2
    return ClassicalSolution(
        params=params, order=order, amp=amp, omega_coeffs=omega_coeffs, action=action
    )


def balance_residuals(sol: ClassicalSolution) -> np.ndarray:
    """Reduced harmonic-balance residuals res[k, alpha] for every coupled
    harmonic at every solved order; all vanish (to rounding) on a solution.

    The normalization matches the constant-, cos(w t)-, cos(2 w t)-...
    balance equations written per harmonic, so res[0, 2] is the
    coefficient (omega0^2 - 4 omega^2) a_2 + a_1^2 / 2 and so on. The
    guard harmonic is excluded (it is never balanced).
    """
    p = sol.params.force_exponent
    order = sol.order
    if p == 2:
        coupled = [a for a in range(0, order + 2) if order >= 1 or a == 1]
    else:
        coupled = list(range(1, 2 * order + 2, 2))
    out = np.zeros((order + 1, sol.harmonic_max + 1))
    guard_max = sol.harmonic_max
    for alpha in coupled:
        w = band_weight(p, alpha)
        c = _half(alpha)
        for k in range(order + 1):
            res = _balance_residual_coefficient(
                sol.params, sol.amp, sol.omega_coeffs, w + k, guard_max
            )
            out[k, alpha] = res[guard_max + alpha] / c
    return out


def fourier_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two cosine series, returned as a cosine series.

    Maps each input to symmetric exponential coefficients (X_alpha =
    X_{-alpha} = c_alpha / 2, X_0 = c_0), convolves over the signed
    harmonic index, and folds back.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ValueError("inputs must be nonempty 1-d cosine-coefficient arrays")

    def to_exp(c: np.ndarray) -> np.ndarray:
        h = c.size - 1
        e = np.zeros(2 * h + 1)
        e[h] = c[0]
        for alpha in range(1, h + 1):
            e[h + alpha] = e[h - alpha] = 0.5 * c[alpha]
        return e

    conv = np.convolve(to_exp(a), to_exp(b))
    h = (conv.size - 1) // 2
    out = np.empty(h + 1)
    out[0] = conv[h]
    out[1:] = conv[h + 1 :] + conv[h - 1 :: -1][: h]
    return out


def action_integral(
    sol: ClassicalSolution,
    params: OscillatorParams | None = None,
    lam: float | None = None,
    n_samples: int = 256,
    tol: float = 1e-8,
) -> float:
    """Action J = closed integral of m xdot^2 dt over one period.

    Evaluated in Fourier space as 2 pi m sum_alpha |X_alpha|^2 alpha^2 w
    (signed harmonics) and cross-checked against direct time quadrature;
    a mismatch beyond tol raises QuadratureMismatchError.
    """
    if params is None:
        params = sol.params
    if lam is None:
        lam = params.lam
    c = sol.cosine_coefficients(lam)
    w = sol.omega(lam)
    alphas = np.arange(c.size)
    j_fourier = math.pi * params.mass * w * float(np.sum(alphas**2 * c**2))
    period = 2.0 * math.pi / w
    t = np.linspace(0.0, period, n_samples, endpoint=False)
    xdot = sol.xdot_of_t(t, lam)
    j_quad = params.mass * float(np.mean(xdot**2)) * period
    if abs(j_fourier - j_quad) > tol * max(1.0, abs(j_fourier)):
        raise QuadratureMismatchError(
            f"Fourier action {j_fourier!r} vs quadrature {j_quad!r}"
        )
    return j_fourier


def ode_residual(sol: ClassicalSolution, lam: float, n_samples: int = 256) -> float:
    """Max over one period of |x'' + omega0^2 x + lam x^p| for the
    truncated series; scales one power of lam beyond the solved order."""
    if n_samples < 16:
        raise ValueError("need at least 16 samples per period")
    params = sol.params
    c = sol.cosine_coefficients(lam)
    w = sol.omega(lam)
    alphas = np.arange(c.size)
    period = 2.0 * math.pi / w
    t = np.linspace(0.0, period, n_samples, endpoint=False)
    phases = np.cos(np.outer(t, alphas) * w)
    x = phases @ c
    xddot = phases @ (-((alphas * w) ** 2) * c)
    res = xddot + params.omega0**2 * x + lam * x**params.force_exponent
    return float(np.max(np.abs(res)))
