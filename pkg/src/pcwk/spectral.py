"""Matrix spectral densities on a uniform frequency grid.

A density is a K x K Hermitian-matrix-valued trigonometric polynomial

    f(lambda) = sum_m F(m) exp(i m lambda),      lambda in [-pi, pi),

stored by its coefficient map ``{m: F(m)}`` with the Hermitian pairing
``F(-m) = F(m)^H``. All integrals are trapezoid sums over the uniform grid
``lambda_g = -pi + 2 pi g / G``, which integrate the retained trigonometric
band exactly. Densities that are not polynomials (inverses of polynomials,
iterates of fixed-point solvers) are represented by sampling them on the
grid and keeping every resolvable coefficient; for smooth positive inputs
the dropped tail is below round-off.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AliasingError

DEFAULT_GRID_SIZE = 2048
PSD_TOLERANCE = 1e-10
DEFAULT_COND_THRESHOLD = 1e12

__all__ = [
    "DEFAULT_GRID_SIZE",
    "PSD_TOLERANCE",
    "DEFAULT_COND_THRESHOLD",
    "SpectralDensity",
    "GridMatrixFunction",
    "frequency_grid",
    "evaluate_on_grid",
    "fourier_coefficient",
    "fourier_coefficients",
    "check_minimality",
    "validate_density",
    "MinimalityReport",
    "DensityReport",
    "read_density_csv",
    "write_density_csv",
]


def frequency_grid(grid_size: int) -> np.ndarray:
    """Angular grid lambda_g = -pi + 2*pi*g/G for g = 0..G-1."""
    return -np.pi + 2.0 * np.pi * np.arange(grid_size) / grid_size


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _as_coeff_matrix(value, dim: int | None) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"coefficient must be a square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"coefficient dimension {arr.shape[0]} != {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficient contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SpectralDensity:
    """Trigonometric-polynomial matrix density.

    Parameters
    ----------
    dim : int
        Matrix dimension K.
    coeffs : mapping lag -> (K, K) complex array
        Fourier coefficients F(m); scalars are accepted for K = 1.
        A valid density stores F(-m) = F(m)^H for every lag, but the
        constructor does not enforce it (``validate_density`` reports it).
    grid_size : int
        Number of quadrature nodes G, a power of two.
    """

    dim: int
    coeffs: Mapping[int, np.ndarray] = field(repr=False)
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not _is_power_of_two(self.grid_size):
            raise ValueError("grid_size must be a power of two")
        cleaned = {}
        for m, value in self.coeffs.items():
            m = int(m)
            if abs(m) >= self.grid_size // 2:
                raise AliasingError(
                    f"lag {m} is not resolvable on a grid of size {self.grid_size}"
                )
            cleaned[m] = _as_coeff_matrix(value, self.dim)
        object.__setattr__(self, "coeffs", cleaned)

    # -- constructors -------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs, dim=None, grid_size=DEFAULT_GRID_SIZE):
        """Build from a lag -> matrix map, inferring the dimension."""
        if dim is None:
            first = next(iter(coeffs.values()))
            first = np.atleast_2d(np.asarray(first, dtype=complex))
            dim = first.shape[0]
        return cls(dim=dim, coeffs=dict(coeffs), grid_size=grid_size)

    @classmethod
    def constant(cls, matrix, grid_size=DEFAULT_GRID_SIZE):
        """Frequency-flat density f(lambda) = F(0)."""
        mat = _as_coeff_matrix(matrix, None)
        return cls(dim=mat.shape[0], coeffs={0: mat}, grid_size=grid_size)

    @classmethod
    def white(cls, dim, scale=1.0, grid_size=DEFAULT_GRID_SIZE):
        """White density f(lambda) = scale * I."""
        return cls.constant(scale * np.eye(dim), grid_size=grid_size)

    @classmethod
    def from_moving_average(cls, d_coeffs: Sequence, grid_size=DEFAULT_GRID_SIZE):
        """Density of the one-sided moving average with matrix taps d(u).

        ``d_coeffs`` is an ordered sequence of (K, M) arrays; the result is
        f = P P^* with P(lambda) = sum_u d(u) exp(-i u lambda), so
        F(m) = sum_u d(u + m) d(u)^H for m >= 0.
        """
        d = [np.atleast_2d(np.asarray(x, dtype=complex)) for x in d_coeffs]
        if not d:
            raise ValueError("need at least one moving-average coefficient")
        dim = d[0].shape[0]
        coeffs: dict[int, np.ndarray] = {}
        order = len(d) - 1
        for m in range(order + 1):
            acc = np.zeros((dim, dim), dtype=complex)
            for u in range(0, order - m + 1):
                acc += d[u + m] @ d[u].conj().T
            coeffs[m] = acc
            if m > 0:
                coeffs[-m] = acc.conj().T
        return cls(dim=dim, coeffs=coeffs, grid_size=grid_size)

    @classmethod
    def from_grid(cls, values, grid_size=None, max_lag=None, prune_tol=1e-15):
        """Recover a density from samples on the standard grid.

        Keeps every coefficient up to ``max_lag`` (default: all resolvable
        lags), pruning Hermitian pairs whose norms fall below
        ``prune_tol`` relative to the largest coefficient.
        """
        vals = as_grid_values(values)
        G = vals.shape[0]
        if grid_size is None:
            grid_size = G
        elif grid_size != G:
            raise ValueError("grid_size does not match the sampled values")
        coeff_all = _all_fourier_coefficients(vals)
        if max_lag is None:
            max_lag = G // 2 - 1
        norms = np.linalg.norm(coeff_all, axis=(1, 2))
        floor = prune_tol * max(norms.max(), 1e-300)
        coeffs = {}
        for m in range(0, max_lag + 1):
            keep = norms[m] > floor or (m > 0 and norms[-m % G] > floor)
            if m == 0 or keep:
                coeffs[m] = coeff_all[m]
                if m > 0:
                    coeffs[-m] = coeff_all[-m % G]
        return cls(dim=vals.shape[1], coeffs=coeffs, grid_size=grid_size)

    # -- accessors -----------------------------------------------------

    @property
    def max_lag(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    def coeff(self, m: int) -> np.ndarray:
        """F(m), a zero matrix for unstored lags."""
        got = self.coeffs.get(int(m))
        if got is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return got

    def scaled(self, factor: float) -> "SpectralDensity":
        return SpectralDensity(
            dim=self.dim,
            coeffs={m: factor * c for m, c in self.coeffs.items()},
            grid_size=self.grid_size,
        )


@dataclass(frozen=True)
class GridMatrixFunction:
    """A K x K matrix function tabulated on the standard frequency grid."""

    values: np.ndarray

    def __post_init__(self):
        vals = as_grid_values(self.values)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values contain non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]


def as_grid_values(values) -> np.ndarray:
    """Coerce grid samples to a (G, K, K) complex array."""
    if isinstance(values, GridMatrixFunction):
        return values.values
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals.reshape(-1, 1, 1)
    if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
        raise ValueError(f"expected (G, K, K) samples, got shape {vals.shape}")
    return vals


def _alternating_signs(grid_size: int) -> np.ndarray:
    return (-1.0) ** np.arange(grid_size)


def density_values(density) -> np.ndarray:
    """Grid samples of a density given in either representation.

    Accepts a :class:`SpectralDensity` (evaluated), a
    :class:`GridMatrixFunction`, or raw (G, K, K) samples.
    """
    if isinstance(density, SpectralDensity):
        return evaluate_on_grid(density).values
    return as_grid_values(density)


def evaluate_on_grid(f: SpectralDensity) -> GridMatrixFunction:
    """Tabulate f(lambda_g) = sum_m F(m) exp(i m lambda_g) on the grid."""
    G = f.grid_size
    buf = np.zeros((G, f.dim, f.dim), dtype=complex)
    signs = _alternating_signs(G)
    for m, c in f.coeffs.items():
        buf[m % G] += signs[m % G] * c
    values = np.fft.ifft(buf, axis=0) * G
    return GridMatrixFunction(values=values)


def _all_fourier_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients c(m) = (1/2pi) int M(lambda) e^{-i m lambda} d lambda.

    Returns an array indexed by m mod G along axis 0 (trapezoid sum over
    the standard grid, exact for the resolvable band).
    """
    G = values.shape[0]
    out = np.fft.fft(values, axis=0) / G
    out *= _alternating_signs(G).reshape((G,) + (1,) * (values.ndim - 1))
    return out


def fourier_coefficients(values, lags) -> np.ndarray:
    """Batched Fourier coefficients of grid samples at the given lags."""
    vals = as_grid_values(values)
    G = vals.shape[0]
    lags = np.asarray(lags, dtype=int)
    if lags.size and np.abs(lags).max() >= G // 2:
        raise AliasingError(
            f"lag {np.abs(lags).max()} is not resolvable on a grid of size {G}"
        )
    table = _all_fourier_coefficients(vals)
    return table[lags % G]


def fourier_coefficient(values, lag: int) -> np.ndarray:
    """(1/2pi) integral of M(lambda) e^{-i lag lambda}, as a K x K matrix."""
    vals = as_grid_values(values)
    G = vals.shape[0]
    if abs(lag) >= G // 2:
        raise AliasingError(f"lag {lag} is not resolvable on a grid of size {G}")
    lam = frequency_grid(G)
    phase = np.exp(-1j * lag * lam).reshape(G, 1, 1)
    return (vals * phase).mean(axis=0)


# -- validation and minimality ----------------------------------------


@dataclass(frozen=True)
class MinimalityReport:
    """Outcome of the trace-inverse integrability check."""

    integral: float
    max_condition: float
    passed: bool
    worst_node: float
    n_bad_nodes: int

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (
            f"minimality {status}: trace-inverse integral {self.integral:.6g}, "
            f"max grid condition {self.max_condition:.3e}"
        )


def check_minimality(
    f,
    g=None,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> MinimalityReport:
    """Check that f+g (or f alone) is invertible on the whole grid.

    Reports the quadrature value of ``int Tr[(f+g)^{-1}] d lambda``, the
    largest grid condition number (smallest node eigenvalue measured
    against the largest eigenvalue anywhere on the grid, so a node where
    the density collapses fails even if it is well scaled locally), and a
    pass flag. Nodes beyond ``cond_threshold`` fail the check rather than
    being regularized. Accepts densities in coefficient or grid form.
    """
    vals = density_values(f)
    if g is not None:
        gvals = density_values(g)
        if gvals.shape != vals.shape:
            raise ValueError(
                f"dimension mismatch: f samples {vals.shape}, g samples {gvals.shape}"
            )
        vals = vals + gvals
    herm = 0.5 * (vals + np.conj(np.transpose(vals, (0, 2, 1))))
    eigs = np.linalg.eigvalsh(herm)
    grid_size = vals.shape[0]
    lam = frequency_grid(grid_size)
    scale = float(eigs.max(initial=0.0))
    min_per_node = eigs.min(axis=1)
    if scale <= 0.0:
        return MinimalityReport(
            integral=np.inf,
            max_condition=np.inf,
            passed=False,
            worst_node=float(lam[0]),
            n_bad_nodes=grid_size,
        )
    with np.errstate(divide="ignore"):
        cond_per_node = np.where(min_per_node > 0.0, scale / min_per_node, np.inf)
    worst = int(np.argmax(cond_per_node))
    bad = cond_per_node > cond_threshold
    passed = not bad.any()
    if np.all(eigs > 0.0):
        integral = float((2.0 * np.pi) * np.mean(np.sum(1.0 / eigs, axis=1)))
    else:
        integral = np.inf
    return MinimalityReport(
        integral=integral,
        max_condition=float(cond_per_node[worst]),
        passed=passed,
        worst_node=float(lam[worst]),
        n_bad_nodes=int(bad.sum()),
    )


@dataclass(frozen=True)
class DensityReport:
    """Outcome of structural density validation (never raised)."""

    hermitian_ok: bool
    psd_ok: bool
    min_eigenvalue: float
    issues: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.hermitian_ok and self.psd_ok


def validate_density(f: SpectralDensity) -> DensityReport:
    """Check coefficient pairing and positive semidefiniteness on the grid.

    Violations are reported, never thrown: the report carries the smallest
    grid eigenvalue and a list of human-readable issues.
    """
    issues: list[str] = []
    hermitian_ok = True
    for m in sorted(f.coeffs):
        if m < 0:
            continue
        cm = f.coeffs[m]
        if m == 0:
            if np.linalg.norm(cm - cm.conj().T) > 1e-12 * max(np.linalg.norm(cm), 1.0):
                hermitian_ok = False
                issues.append("lag-0 coefficient is not Hermitian")
            continue
        partner = f.coeffs.get(-m)
        if partner is None:
            hermitian_ok = False
            issues.append(f"lag {m} stored without its lag {-m} partner")
        elif np.linalg.norm(partner - cm.conj().T) > 1e-12 * max(
            np.linalg.norm(cm), 1.0
        ):
            hermitian_ok = False
            issues.append(f"coefficient pair ({m}, {-m}) violates Hermitian symmetry")
    for m in sorted(f.coeffs):
        if m < 0 and -m not in f.coeffs:
            hermitian_ok = False
            issues.append(f"lag {m} stored without its lag {-m} partner")
    vals = evaluate_on_grid(f).values
    herm = 0.5 * (vals + np.conj(np.transpose(vals, (0, 2, 1))))
    node_mins = np.linalg.eigvalsh(herm).min(axis=1)
    worst = int(np.argmin(node_mins))
    min_eig = float(node_mins[worst])
    psd_ok = min_eig >= -PSD_TOLERANCE
    if not psd_ok:
        lam = frequency_grid(f.grid_size)
        issues.append(
            f"not positive semidefinite on the grid (min eig {min_eig:.3e} "
            f"at lambda = {lam[worst]:.6f})"
        )
    return DensityReport(
        hermitian_ok=hermitian_ok,
        psd_ok=psd_ok,
        min_eigenvalue=min_eig,
        issues=tuple(issues),
    )


# -- CSV interchange ---------------------------------------------------

_DENSITY_HEADER = ["m", "row", "col", "re", "im"]


def write_density_csv(f: SpectralDensity, path) -> None:
    """Write the coefficient map as rows ``m,row,col,re,im`` (0-based)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_DENSITY_HEADER)
        for m in sorted(f.coeffs):
            c = f.coeffs[m]
            for row in range(f.dim):
                for col in range(f.dim):
                    writer.writerow(
                        [m, row, col,
                         repr(float(c[row, col].real)), repr(float(c[row, col].imag))]
                    )


def read_density_csv(path, grid_size=DEFAULT_GRID_SIZE) -> SpectralDensity:
    """Read a coefficient CSV written in the ``m,row,col,re,im`` schema.

    Lags stored without their negative partner are auto-filled by Hermitian
    symmetry, with a warning.
    """
    entries: dict[int, dict[tuple[int, int], complex]] = {}
    dim = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _DENSITY_HEADER:
            raise ValueError(f"{path}: expected header {','.join(_DENSITY_HEADER)}")
        for ln, rowvals in enumerate(reader, start=2):
            if not rowvals or all(not v.strip() for v in rowvals):
                continue
            try:
                m, row, col = int(rowvals[0]), int(rowvals[1]), int(rowvals[2])
                re, im = float(rowvals[3]), float(rowvals[4])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{ln}: malformed density row") from exc
            if row < 0 or col < 0:
                raise ValueError(f"{path}:{ln}: negative matrix index")
            entries.setdefault(m, {})[(row, col)] = complex(re, im)
            dim = max(dim, row + 1, col + 1)
    if not entries:
        raise ValueError(f"{path}: no coefficients found")
    coeffs: dict[int, np.ndarray] = {}
    for m, cells in entries.items():
        mat = np.zeros((dim, dim), dtype=complex)
        for (row, col), v in cells.items():
            mat[row, col] = v
        coeffs[m] = mat
    for m in sorted(coeffs):
        if m > 0 and -m not in coeffs:
            warnings.warn(
                f"density file {path}: lag {-m} missing, filled by Hermitian symmetry",
                stacklevel=2,
            )
            coeffs[-m] = coeffs[m].conj().T
        elif m < 0 and -m not in coeffs:
            warnings.warn(
                f"density file {path}: lag {-m} missing, filled by Hermitian symmetry",
                stacklevel=2,
            )
            coeffs[-m] = coeffs[m].conj().T
    return SpectralDensity(dim=dim, coeffs=coeffs, grid_size=grid_size)
