"""Independent ground truth from modern quantum mechanics.

Everything here is built the conventional way: ladder-operator matrices in
the truncated number basis, a dense symmetric eigensolve, and textbook
Rayleigh-Schrodinger perturbation sums. None of it shares code paths with
the banded perturbation solver, so agreement between the two is a real
cross-check.

For the cubic force (p = 2) the potential is unbounded below and the
truncated eigenvalues are metastable approximants. They are trustworthy
only while they sit on a plateau under basis growth, which `spectrum`
verifies before reporting; the default coupling cap corresponds to
lam = 0.05 in units where m = omega0 = hbar = 1, where tunneling effects
are far below every tolerance used in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BandAmplitudeArray, FrequencyGrid, MotionRepresentation
from .params import OscillatorParams

__all__ = [
    "NumericError",
    "PlateauError",
    "TruncatedOperator",
    "SpectrumResult",
    "SeriesFit",
    "build_hamiltonian",
    "diagonalize",
    "spectrum",
    "motion_from_spectrum",
    "rspt_first_order_state",
    "rspt_energy_second_order",
    "lambda_series_fit",
    "default_lambda_grid",
    "position_matrix",
]

# dimensionless coupling |lam|*beta/omega0^2 at lam = 0.05 in default units
_CUBIC_COUPLING_CAP = 0.05 * math.sqrt(2.0) * (1.0 + 1e-12)


class NumericError(RuntimeError):
    """Eigensolve failed or did not meet the residual bound."""


class PlateauError(RuntimeError):
    """Truncated eigenvalues have not stabilized under basis growth."""


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense real symmetric operator in the unperturbed number basis."""

    params: OscillatorParams
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        scale = float(np.max(np.abs(m))) or 1.0
        if float(np.max(np.abs(m - m.T))) > 1e-14 * scale:
            raise ValueError("matrix is not symmetric to working precision")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def basis_size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues, eigenvectors and exact position amplitudes.

    amplitudes[k, n] = <k|x|n> between exact (truncated-basis) eigenstates,
    with each eigenvector's largest component made positive. plateau holds
    |E(N) - E(N - plateau_step)| for the lowest reported levels when a
    basis-growth check was run.
    """

    params: OscillatorParams
    basis_size: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    amplitudes: np.ndarray
    plateau: np.ndarray | None = None
    plateau_step: int | None = None

    def omega_exact(self, n: int, m: int) -> float:
        return float(
            (self.eigenvalues[n] - self.eigenvalues[m]) / self.params.hbar
        )


def position_matrix(params: OscillatorParams, n: int) -> np.ndarray:
    """Ladder-built x with <n-1|x|n> = sqrt(hbar/(2 m omega0)) * sqrt(n)."""
    scale = math.sqrt(params.hbar / (2.0 * params.mass * params.omega0))
    off = scale * np.sqrt(np.arange(1, n, dtype=float))
    return np.diag(off, 1) + np.diag(off, -1)


def _momentum_over_i(params: OscillatorParams, n: int) -> np.ndarray:
    """Real matrix P with p = i P; P[n+1, n] = sqrt(m hbar omega0 / 2) sqrt(n+1)."""
    scale = math.sqrt(params.mass * params.hbar * params.omega0 / 2.0)
    off = scale * np.sqrt(np.arange(1, n, dtype=float))
    return np.diag(off, -1) - np.diag(off, 1)


def build_hamiltonian(params: OscillatorParams, basis_size: int) -> TruncatedOperator:
    """H = p^2/2m + m omega0^2 x^2 / 2 + m lam x^(p+1)/(p+1), with every
    operator product formed inside the truncated basis."""
    if basis_size < 8:
        raise ValueError("basis_size must be at least 8")
    x = position_matrix(params, basis_size)
    p_over_i = _momentum_over_i(params, basis_size)
    kinetic = -(p_over_i @ p_over_i) / (2.0 * params.mass)
    x2 = x @ x
    h = kinetic + 0.5 * params.mass * params.omega0**2 * x2
    if params.force_exponent == 2:
        h = h + params.mass * params.lam / 3.0 * (x2 @ x)
    else:
        h = h + params.mass * params.lam / 4.0 * (x2 @ x2)
    return TruncatedOperator(params=params, matrix=h)


def diagonalize(op: TruncatedOperator) -> SpectrumResult:
    """Full symmetric eigendecomposition with a per-pair residual check."""
    h = op.matrix
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    scale = float(np.max(np.abs(evals))) or 1.0
    residual = np.max(np.abs(h @ evecs - evecs * evals))
    if residual > 1e-10 * scale:
        raise NumericError(
            f"eigenpair residual {residual:.3e} exceeds 1e-10 * {scale:.3e}"
        )
    # deterministic phases: largest-magnitude component positive
    flips = np.sign(evecs[np.abs(evecs).argmax(axis=0), np.arange(evecs.shape[1])])
    flips[flips == 0] = 1.0
    evecs = evecs * flips
    x = position_matrix(op.params, op.basis_size)
    amps = evecs.T @ x @ evecs
    amps = 0.5 * (amps + amps.T)
    return SpectrumResult(
        params=op.params,
        basis_size=op.basis_size,
        eigenvalues=evals,
        eigenvectors=evecs,
        amplitudes=amps,
    )


def spectrum(
    params: OscillatorParams,
    basis_size: int,
    *,
    plateau_step: int = 10,
    plateau_tol: float = 1e-8,
    plateau_levels: int = 6,
    check_plateau: bool = True,
    allow_deep_coupling: bool = False,
) -> SpectrumResult:
    """Diagonalize the truncated Hamiltonian and vet the result.

    For the cubic force this enforces the default coupling cap and (unless
    disabled) requires the lowest eigenvalues to move less than
    plateau_tol when the basis shrinks by plateau_step, since those
    eigenvalues only approximate metastable levels of an unbounded
    potential.
    """
    if params.force_exponent == 2 and not allow_deep_coupling:
        zeta = abs(params.lam) * params.beta / params.omega0**2
        if zeta > _CUBIC_COUPLING_CAP:
            raise ValueError(
                "cubic-force coupling too deep for the metastable-spectrum "
                f"regime (|lam|*beta/omega0^2 = {zeta:.4g} > "
                f"{_CUBIC_COUPLING_CAP:.4g}); pass allow_deep_coupling=True "
                "to override"
            )
    result = diagonalize(build_hamiltonian(params, basis_size))
    if not check_plateau:
        return result
    smaller = diagonalize(build_hamiltonian(params, basis_size - plateau_step))
    levels = min(plateau_levels, basis_size - plateau_step)
    drift = np.abs(result.eigenvalues[:levels] - smaller.eigenvalues[:levels])
    if params.force_exponent == 2 and np.any(drift > plateau_tol):
        raise PlateauError(
            f"eigenvalue drift {np.max(drift):.3e} over basis step "
            f"{plateau_step} exceeds {plateau_tol:.1e}"
        )
    return SpectrumResult(
        params=result.params,
        basis_size=result.basis_size,
        eigenvalues=result.eigenvalues,
        eigenvectors=result.eigenvectors,
        amplitudes=result.amplitudes,
        plateau=drift,
        plateau_step=plateau_step,
    )


def motion_from_spectrum(spec: SpectrumResult) -> MotionRepresentation:
    """Exact amplitudes and frequencies repackaged as a motion
    representation, so the kinematic checks run unchanged on oracle data."""
    amps = BandAmplitudeArray.from_dense(spec.amplitudes)
    grid = FrequencyGrid(spec.eigenvalues / spec.params.hbar)
    return MotionRepresentation(
        amplitudes=amps, frequencies=grid, params=spec.params
    )


def rspt_first_order_state(
    params: OscillatorParams, n: int, basis_size: int
) -> np.ndarray:
    """First-order perturbed eigenstate coefficients over unperturbed states.

    |n> = |n>_0 + (m lam / 3) sum_{k != n} <k|x^3|n>_0 / ((n-k) hbar omega0) |k>_0
    for the cubic force; exactly four coefficients (k = n +- 1, n +- 3)
    are nonzero besides the unit diagonal.
    """
    if params.force_exponent != 2:
        raise ValueError("first-order state is tabulated for the cubic force")
    if n + 3 >= basis_size:
        raise ValueError("basis_size must exceed n + 3")
    x = position_matrix(params, basis_size)
    x3 = x @ x @ x
    k = np.arange(basis_size)
    coeffs = np.zeros(basis_size)
    mask = k != n
    coeffs[mask] = (
        params.mass
        * params.lam
        / 3.0
        * x3[mask, n]
        / ((n - k[mask]) * params.hbar * params.omega0)
    )
    coeffs[n] = 1.0
    return coeffs


def rspt_energy_second_order(params: OscillatorParams, n: int) -> float:
    """Level energy through second order in the conventional scheme,

        E_n = (n + 1/2) hbar omega0 + <n|V|n> + sum_{k != n} |<k|V|n>|^2
              / ((n - k) hbar omega0),

    with V = m lam x^3/3 (p = 2) or m lam x^4/4 (p = 3)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    p = params.force_exponent
    size = n + p + 4
    x = position_matrix(params, size)
    if p == 2:
        v = params.mass * params.lam / 3.0 * (x @ x @ x)
    else:
        x2 = x @ x
        v = params.mass * params.lam / 4.0 * (x2 @ x2)
    e = (n + 0.5) * params.hbar * params.omega0 + v[n, n]
    k = np.arange(size)
    mask = k != n
    e += float(
        np.sum(v[mask, n] ** 2 / ((n - k[mask]) * params.hbar * params.omega0))
    )
    return float(e)


@dataclass(frozen=True)
class SeriesFit:
    """Least-squares polynomial fit in the coupling, with conditioning info."""

    coefficients: np.ndarray
    condition_number: float
    rms_residual: float
    ill_conditioned: bool


def default_lambda_grid(lam0: float, count: int = 5) -> np.ndarray:
    """Geometric grid lam0/2^(count-1) .. lam0, balancing conditioning
    against contamination from higher orders."""
    if count < 2:
        raise ValueError("need at least two grid points")
    return lam0 / 2.0 ** np.arange(count - 1, -1, -1, dtype=float)


def lambda_series_fit(
    f, lambdas: np.ndarray, order: int, cond_threshold: float = 1e10
) -> SeriesFit:
    """Fit f(lam) = c0 + c1 lam + ... + c_order lam^order by least squares.

    f may be a callable evaluated on the grid or an array of samples.
    A condition number above cond_threshold (or a rank-deficient design)
    marks the fit ill conditioned rather than raising.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < order + 2:
        raise ValueError("need a 1-d grid of at least order + 2 couplings")
    if np.unique(lam).size != lam.size:
        raise ValueError("grid couplings must be distinct")
    values = np.asarray([f(l) for l in lam] if callable(f) else f, dtype=float)
    if values.shape != lam.shape:
        raise ValueError("one sample per grid coupling required")
    design = np.vander(lam, order + 1, increasing=True)
    coeffs, _, rank, sing = np.linalg.lstsq(design, values, rcond=None)
    cond = float(sing[0] / sing[-1]) if sing[-1] > 0 else math.inf
    rms = float(np.sqrt(np.mean((design @ coeffs - values) ** 2)))
    return SeriesFit(
        coefficients=coeffs,
        condition_number=cond,
        rms_residual=rms,
        ill_conditioned=bool(cond > cond_threshold or rank < order + 1),
    )
