"""Independent time-domain verification of the spectral-domain solvers.

Everything here works from lag covariances and finite linear algebra, with
no shared machinery beyond the Fourier coefficients of the input densities:
the projection oracle assembles the covariance of a finite observation
window and solves the normal equations directly, and the simulator drives a
moving average with seeded Gaussian innovations. Agreement between these
values and the spectral formulas is the package's main correctness check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, IllPosedError
from .factorization import Factorization
from .lifting import FunctionalWeights
from .spectral import SpectralDensity, evaluate_on_grid, fourier_coefficients

__all__ = [
    "CovarianceTable",
    "covariances_from_density",
    "observation_indices",
    "time_domain_projection",
    "time_domain_projection_converged",
    "simulate_sequence",
    "empirical_mse",
    "compare_report",
    "OracleProjection",
    "ComparisonReport",
]


@dataclass(frozen=True)
class CovarianceTable:
    """Lag covariances C(j) = E[x_{l+j} x_l^H] for |j| <= max_lag."""

    values: np.ndarray = field(repr=False)  # (2 L + 1, K, K), lag j at index j + L

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] % 2 != 1 or arr.shape[1] != arr.shape[2]:
            raise ValueError("values must have shape (2 L + 1, K, K)")
        object.__setattr__(self, "values", arr)

    @property
    def max_lag(self) -> int:
        return self.values.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def cov(self, j: int) -> np.ndarray:
        if abs(j) > self.max_lag:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.values[j + self.max_lag]


def covariances_from_density(f: SpectralDensity, max_lag: int) -> CovarianceTable:
    """Covariances of the sequence with density f, up to ``max_lag``.

    C(j) is the Fourier coefficient of f at lag -j (the e^{+i j lambda}
    moment), evaluated by grid quadrature; exact for the stored band.
    """
    if max_lag >= f.grid_size // 2:
        raise AliasingError(
            f"max_lag {max_lag} is not resolvable on a grid of size {f.grid_size}"
        )
    lags = -np.arange(-max_lag, max_lag + 1)
    vals = fourier_coefficients(evaluate_on_grid(f), lags)
    return CovarianceTable(values=vals)


def observation_indices(task: str, n: int, window: int) -> list[int]:
    """Observed block indices for a task, truncated to ``window`` blocks.

    Interpolation observes both sides of the gap 0..n; extrapolation the
    past; filtering the past including the present block.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if task == "interpolation":
        return list(range(-window, 0)) + list(range(n + 1, n + 1 + window))
    if task in ("extrapolation", "extrapolation_finite"):
        return list(range(-window, 0))
    if task == "filtering":
        return list(range(-window, 1))
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class OracleProjection:
    mse: float
    window: int
    n_observations: int
    condition: float


def time_domain_projection(
    f: SpectralDensity,
    g: SpectralDensity | None,
    weights: FunctionalWeights,
    window: int,
) -> OracleProjection:
    """Brute-force projection onto a finite observation window.

    Builds the joint covariance of the observed blocks and the target
    functional from lag covariances, solves the normal equations, and
    returns the residual variance. Independent of the spectral solvers.
    """
    task = weights.horizon
    K = weights.dim
    if f.dim != K or (g is not None and g.dim != K):
        raise ValueError("weights and densities must share one dimension")
    obs = observation_indices(task, weights.n, window)
    n_a = weights.n_blocks
    span = (max(obs) - min(obs)) + n_a + 1
    cz = covariances_from_density(f, span)
    ct = covariances_from_density(g, span) if g is not None else None

    def cov_x(m):
        total = cz.cov(m)
        if ct is not None:
            total = total + ct.cov(m)
        return total

    nobs = len(obs)
    sigma = np.zeros((nobs * K, nobs * K), dtype=complex)
    for i, l in enumerate(obs):
        for j, m in enumerate(obs):
            sigma[i * K : (i + 1) * K, j * K : (j + 1) * K] = cov_x(l - m)
    blocks = weights.blocks
    cross = np.zeros(nobs * K, dtype=complex)
    sign = -1 if task == "filtering" else 1
    for i, l in enumerate(obs):
        acc = np.zeros(K, dtype=complex)
        for j in range(n_a):
            acc += cz.cov(l - sign * j) @ blocks[j].conj()
        cross[i * K : (i + 1) * K] = acc
    variance = 0.0 + 0.0j
    for j in range(n_a):
        for j2 in range(n_a):
            variance += blocks[j] @ cz.cov(sign * (j - j2)) @ blocks[j2].conj()

    eigs = np.linalg.eigvalsh(0.5 * (sigma + sigma.conj().T))
    emax = float(eigs.max())
    emin = float(eigs.min())
    if emax <= 0.0 or emin <= 1e-12 * emax:
        raise IllPosedError(
            "observation covariance is singular; regularization refused"
        )
    solved = np.linalg.solve(sigma, cross)
    mse = float((variance - np.vdot(cross, solved)).real)
    return OracleProjection(
        mse=max(mse, 0.0),
        window=window,
        n_observations=nobs * K,
        condition=emax / emin,
    )


def time_domain_projection_converged(
    f: SpectralDensity,
    g: SpectralDensity | None,
    weights: FunctionalWeights,
    initial_window: int = 8,
    rel_tol: float = 1e-7,
    max_window: int = 512,
) -> tuple[OracleProjection, list[OracleProjection]]:
    """Double the window until the projection error stabilises."""
    history: list[OracleProjection] = []
    window = initial_window
    prev = None
    while True:
        current = time_domain_projection(f, g, weights, window)
        history.append(current)
        if prev is not None and abs(current.mse - prev.mse) <= rel_tol * max(
            1.0, abs(current.mse)
        ):
            return current, history
        if window >= max_window:
            return current, history
        prev = current
        window = min(2 * window, max_window)


def simulate_sequence(fact: Factorization, n_blocks: int, seed: int) -> np.ndarray:
    """Simulate lifted blocks of the moving average defined by a factor.

    Drives z_j = sum_u d(u) eps_{j-u} with independent standard Gaussian
    innovations from a PCG64 generator seeded with ``seed``; the warm-up
    needed to cover the factor order is generated and discarded. Returns an
    (n_blocks, K) array (complex when the taps are complex).
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    rng = np.random.default_rng(seed)
    order = fact.order
    K, M = fact.dim, fact.multiplicity
    eps = rng.standard_normal((n_blocks + order, M))
    out = np.zeros((n_blocks, K), dtype=complex)
    for u in range(order + 1):
        tap = fact.coeffs[u]
        segment = eps[order - u : order - u + n_blocks]
        out += segment @ tap.T
    return out


@dataclass(frozen=True)
class EmpiricalMse:
    value: float
    half_width_99: float
    n_samples: int


def empirical_mse(
    solution,
    weights: FunctionalWeights,
    signal_factor: Factorization,
    noise_factor: Factorization | None = None,
    n_blocks: int = 100_000,
    seed: int = 0,
    coeff_floor: float = 1e-12,
) -> EmpiricalMse:
    """Monte-Carlo check of a solution's error on simulated paths.

    Applies the solution's time-domain coefficients to a simulated path
    (signal plus optional noise), forms the realized functional errors, and
    returns their mean square with a 99% batch-means half width.
    """
    task = weights.horizon
    lags = np.asarray(solution.h_lags)
    coeffs = np.asarray(solution.h_coeffs)
    norms = np.linalg.norm(coeffs, axis=1)
    keep = norms > coeff_floor * max(norms.max(initial=0.0), 1e-300)
    lags, coeffs = lags[keep], coeffs[keep]
    zeta = simulate_sequence(signal_factor, n_blocks, seed)
    x = zeta.copy()
    if noise_factor is not None:
        x += simulate_sequence(noise_factor, n_blocks, seed + 1)
    blocks = weights.blocks
    n_a = blocks.shape[0]
    sign = -1 if task == "filtering" else 1
    lo = min(int(lags.min(initial=0)), min(0, sign * (n_a - 1)))
    hi = max(int(lags.max(initial=0)), max(0, sign * (n_a - 1)))
    positions = np.arange(-lo, n_blocks - hi)
    if positions.size < 100:
        raise ValueError("path too short for the solution's coefficient span")
    target = np.zeros(positions.size, dtype=complex)
    for j in range(n_a):
        target += zeta[positions + sign * j] @ blocks[j]
    estimate = np.zeros(positions.size, dtype=complex)
    for lag, hbar in zip(lags, coeffs):
        estimate += x[positions + lag] @ hbar
    err2 = np.abs(target - estimate) ** 2
    value = float(err2.mean())
    batch = 200
    nb = err2.size // batch
    means = err2[: nb * batch].reshape(nb, batch).mean(axis=1)
    half = 2.576 * float(means.std(ddof=1)) / np.sqrt(nb)
    return EmpiricalMse(value=value, half_width_99=half, n_samples=int(err2.size))


@dataclass(frozen=True)
class ComparisonReport:
    spectral_mse: float
    oracle_mse: float
    abs_diff: float
    rel_diff: float
    tolerance: float
    passed: bool


def compare_report(
    spectral_mse: float, oracle_mse: float, tolerance: float = 1e-5
) -> ComparisonReport:
    """Relative comparison of a spectral error value against the oracle."""
    abs_diff = abs(spectral_mse - oracle_mse)
    rel_diff = abs_diff / max(abs(spectral_mse), 1e-300)
    return ComparisonReport(
        spectral_mse=float(spectral_mse),
        oracle_mse=float(oracle_mse),
        abs_diff=float(abs_diff),
        rel_diff=float(rel_diff),
        tolerance=float(tolerance),
        passed=bool(rel_diff <= tolerance),
    )
