"""Least-favorable densities and minimax-robust characteristics.

When only a class of admissible densities is known, the robust strategy
pairs the density in the class that maximizes the optimal error with the
characteristic computed for it. This module implements the classes that
admit a constructive solution:

* bounded per-period power (forward estimation): the worst density is a
  one-sided moving average built from the top eigenvector of the weight
  gram operator, and the worst error is the power times its top eigenvalue;
* prescribed cosine moments of the inverse density (interpolation): the
  worst density is autoregressive, obtained by inverting the moment
  polynomial, and the solver coefficients come from one block-Toeplitz
  solve against the moment matrices;
* fixed power matrix (forward estimation): the same eigenproblem with a
  matrix power constraint, matched in trace, with the residual of the full
  matrix constraint reported;
* trace-power signal class times an epsilon-contaminated noise class
  (filtering, scalar): a damped fixed-point iteration on the pointwise
  optimality relations, with multipliers recovered by power projection.

Saddle-point optimality is certified by sampling densities from the class
and checking that none of them makes the fixed robust characteristic err
more than the nominal pair does.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleClassError, PcwkError, SingularFactorError
from .estimators import (
    EstimateSolution,
    _blocks_symbol,
    _finish_solution,
    _solve_hermitian,
    evaluate_mse,
    filtering,
    functional_symbol,
)
from .factorization import Factorization, extrapolate_factorized, spectral_factorize
from .lifting import FunctionalWeights
from .spectral import (
    DEFAULT_COND_THRESHOLD,
    DEFAULT_GRID_SIZE,
    GridMatrixFunction,
    SpectralDensity,
    as_grid_values,
    evaluate_on_grid,
)

__all__ = [
    "QOperator",
    "LeastFavorableResult",
    "build_q_operator",
    "least_favorable_class_y",
    "least_favorable_dm_interpolation",
    "least_favorable_d01_extrapolation",
    "least_favorable_d0eps_filtering_scalar",
    "filtering_relation_residuals",
    "FilteringRelationReport",
    "saddle_point_check",
    "SaddleReport",
    "sample_power_class",
    "sample_d01_class",
    "sample_dm_class",
    "sample_d0eps_class",
    "power_class_residual",
    "d01_class_residual",
    "dm_class_residual",
    "d0eps_class_residual",
]


# -- the weight gram operator --------------------------------------------


@dataclass(frozen=True)
class QOperator:
    """Gram operator of shifted weight blocks.

    ``blocks[p, q] = sum_s a_{s+p} a_{s+q}^H`` (outer products of weight
    blocks); the flattened matrix is Hermitian positive semidefinite and
    its top eigenvalue bounds the error of any unit-power model.
    """

    blocks: np.ndarray = field(repr=False)  # (R, R, K, K)

    @property
    def range_len(self) -> int:
        return self.blocks.shape[0]

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]

    @property
    def dense(self) -> np.ndarray:
        r, _, k, _ = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3).reshape(r * k, r * k)


def build_q_operator(
    weights: FunctionalWeights, n_range: int | None = None
) -> QOperator:
    """Assemble the weight gram operator over shifts 0..n_range.

    ``n_range`` defaults to the stored horizon; a larger value pads with
    zero blocks, which embeds the operator in a bigger index range.
    """
    blocks = weights.blocks
    stored = blocks.shape[0]
    R = stored if n_range is None else int(n_range) + 1
    if R < 1:
        raise ValueError("n_range must be >= 0")
    K = blocks.shape[1]
    out = np.zeros((R, R, K, K), dtype=complex)
    for p in range(R):
        for q in range(R):
            s_max = stored - 1 - max(p, q)
            for s in range(s_max + 1):
                out[p, q] += np.outer(blocks[s + p], blocks[s + q].conj())
    return QOperator(blocks=out)


def _top_eigenpair(flat: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Top eigenvalue, deterministically phased eigenvector, residual."""
    w, v = np.linalg.eigh(flat)
    value = float(w[-1])
    vec = v[:, -1]
    pivot = int(np.argmax(np.abs(vec)))
    phase = vec[pivot]
    if abs(phase) > 0:
        vec = vec * (phase.conj() / abs(phase))
    residual = float(np.linalg.norm(flat @ vec - value * vec))
    return value, vec, residual


@dataclass
class LeastFavorableResult:
    """A least-favorable density with its certificate.

    ``certificate`` carries the quantities that verify the construction
    (top eigenvalue and eigen residual, or multipliers and relation
    residuals); ``margins`` is filled in by ``saddle_point_check`` when the
    caller runs it.
    """

    f0: SpectralDensity
    g0: SpectralDensity | None
    minimax_mse: float
    h0: EstimateSolution | None
    certificate: dict
    margins: np.ndarray | None = None


def _eigen_moving_average(
    weights: FunctionalWeights, n_range: int | None
) -> tuple[float, np.ndarray, float, QOperator]:
    """Solve the gram eigenproblem; unit-power tap columns (R, K, 1)."""
    q_op = build_q_operator(weights, n_range)
    flat = q_op.dense
    # the error quadratic form acts through the conjugated operator
    value, vec, residual = _top_eigenpair(np.conj(flat))
    taps = vec.reshape(q_op.range_len, q_op.dim, 1)
    return value, taps, residual, q_op


def least_favorable_class_y(
    weights: FunctionalWeights,
    total_power: float,
    n_range: int | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> LeastFavorableResult:
    """Worst density of bounded total power for forward estimation.

    The worst model is the one-sided moving average whose taps are the top
    eigenvector of the weight gram operator scaled to the given power; the
    minimax error is the power times the top eigenvalue.
    """
    if not (total_power > 0):
        raise ValueError("total_power must be positive")
    if weights.horizon not in ("extrapolation", "extrapolation_finite"):
        raise ValueError("weights must carry an extrapolation horizon")
    if float(np.linalg.norm(weights.blocks)) == 0.0:
        taps = np.zeros((1, weights.dim, 1), dtype=complex)
        taps[0, 0, 0] = np.sqrt(total_power)
        fact = Factorization(
            coeffs=taps, residual=0.0, iterations=0, grid_size=grid_size
        )
        return LeastFavorableResult(
            f0=fact.density(),
            g0=None,
            minimax_mse=0.0,
            h0=None,
            certificate={"kind": "eigenpair", "nu_squared": 0.0,
                         "eigen_residual": 0.0, "total_power": total_power,
                         "degenerate": True},
        )
    nu2, taps, residual, _ = _eigen_moving_average(weights, n_range)
    taps = taps * np.sqrt(total_power)
    fact = Factorization(coeffs=taps, residual=0.0, iterations=0, grid_size=grid_size)
    f0 = fact.density()
    h0 = None
    note = None
    try:
        h0 = extrapolate_factorized(fact, weights)
    except SingularFactorError as exc:
        note = str(exc)
    mse = total_power * nu2
    certificate = {
        "kind": "eigenpair",
        "nu_squared": nu2,
        "eigen_residual": residual,
        "total_power": total_power,
    }
    if note:
        certificate["characteristic_note"] = note
    if h0 is not None and abs(h0.mse - mse) > 1e-8 * max(1.0, mse):
        certificate["mse_mismatch"] = h0.mse - mse
    return LeastFavorableResult(
        f0=f0, g0=None, minimax_mse=mse, h0=h0, certificate=certificate
    )


def least_favorable_d01_extrapolation(
    weights: FunctionalWeights,
    power_matrix,
    n_range: int | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> LeastFavorableResult:
    """Worst density with a fixed zero-lag power matrix, forward estimation.

    Solves the same gram eigenproblem as the bounded-power class, scales
    the taps to match the trace of the power matrix (the one scaling
    freedom the eigenvector has), and reports the residual of the full
    matrix constraint, which is generally not attainable by a single
    eigenvector family.
    """
    P = np.atleast_2d(np.asarray(power_matrix, dtype=complex))
    if P.shape[0] != P.shape[1] or P.shape[0] != weights.dim:
        raise ValueError("power matrix must be K x K")
    if np.linalg.norm(P - P.conj().T) > 1e-10 * max(np.linalg.norm(P), 1.0):
        raise ValueError("power matrix must be Hermitian")
    trace = float(np.trace(P).real)
    if trace <= 0:
        raise ValueError("power matrix must have positive trace")
    if float(np.linalg.eigvalsh(0.5 * (P + P.conj().T)).min()) < -1e-10 * trace:
        raise ValueError("power matrix must be positive semidefinite")
    if weights.horizon not in ("extrapolation", "extrapolation_finite"):
        raise ValueError("weights must carry an extrapolation horizon")
    nu2, taps, residual, _ = _eigen_moving_average(weights, n_range)
    taps = taps * np.sqrt(trace)
    realized = np.sum(taps @ np.conj(np.transpose(taps, (0, 2, 1))), axis=0)
    power_residual = float(np.linalg.norm(realized - P))
    fact = Factorization(coeffs=taps, residual=0.0, iterations=0, grid_size=grid_size)
    f0 = fact.density()
    h0 = None
    note = None
    try:
        h0 = extrapolate_factorized(fact, weights)
    except SingularFactorError as exc:
        note = str(exc)
    mse = trace * nu2
    certificate = {
        "kind": "eigenpair",
        "nu_squared": nu2,
        "eigen_residual": residual,
        "trace_power": trace,
        "power_constraint_residual": power_residual,
    }
    if note:
        certificate["characteristic_note"] = note
    return LeastFavorableResult(
        f0=f0, g0=None, minimax_mse=mse, h0=h0, certificate=certificate
    )


# -- prescribed inverse moments (interpolation) ---------------------------


def _moment_polynomial(p_constraints, dim, grid_size) -> SpectralDensity:
    coeffs = {}
    for m, mat in enumerate(p_constraints):
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        if mat.shape != (dim, dim):
            raise ValueError(f"constraint {m} must be {dim} x {dim}")
        if np.linalg.norm(mat - mat.conj().T) > 1e-10 * max(np.linalg.norm(mat), 1.0):
            raise ValueError(
                f"constraint {m} must be Hermitian (cosine moments of a "
                "Hermitian inverse density are Hermitian)"
            )
        coeffs[m] = mat
        if m > 0:
            coeffs[-m] = mat.conj().T
    return SpectralDensity(dim=dim, coeffs=coeffs, grid_size=grid_size)


def least_favorable_dm_interpolation(
    p_constraints: Sequence,
    weights: FunctionalWeights,
    grid_size: int = DEFAULT_GRID_SIZE,
    cond_threshold: float = DEFAULT_COND_THRESHOLD,
) -> LeastFavorableResult:
    """Worst density whose inverse has the given cosine moments.

    ``p_constraints`` lists the moment matrices P(0..M). The worst density
    is autoregressive: the inverse of the moment polynomial. For a horizon
    within the constrained band (M >= n) the solver coefficients come from
    one block-Toeplitz solve against the constraints. For M < n (scalar
    case only) the missing moments are the ones that make the solved
    coefficients vanish beyond M; they follow by forward substitution, and
    the result is only admissible if the extended polynomial stays
    positive, otherwise the class is reported infeasible.
    """
    if weights.horizon != "interpolation":
        raise ValueError("weights must carry the interpolation horizon")
    K = weights.dim
    n = weights.n
    M = len(p_constraints) - 1
    if M < 0:
        raise ValueError("need at least the zero-lag constraint")
    poly = _moment_polynomial(p_constraints, K, grid_size)
    a = weights.stacked()

    if M >= n:
        table = {m: poly.coeff(m) for m in range(-(n + 1), n + 2)}
        dense = np.zeros(((n + 1) * K, (n + 1) * K), dtype=complex)
        for l in range(n + 1):
            for j in range(n + 1):
                dense[l * K : (l + 1) * K, j * K : (j + 1) * K] = table[l - j].T
        alpha, cond = _solve_hermitian(dense, a, cond_threshold, "moment system")
        alpha_blocks = alpha.reshape(n + 1, K)
        extended = poly
    else:
        if K != 1:
            raise ValueError(
                "unconstrained moments beyond the horizon are only supported "
                "in the scalar case"
            )
        p_vals = np.array([poly.coeff(m)[0, 0] for m in range(M + 1)])
        toep = np.empty((M + 1, M + 1), dtype=complex)
        for l in range(M + 1):
            for j in range(M + 1):
                m = l - j
                toep[l, j] = p_vals[abs(m)] if m >= 0 else np.conj(p_vals[abs(m)])
        alpha_head, cond = _solve_hermitian(
            toep, a[: M + 1], cond_threshold, "moment system"
        )
        if abs(alpha_head[0]) < 1e-14 * max(np.abs(alpha_head).max(), 1.0):
            raise InfeasibleClassError(
                "leading solver coefficient vanishes; the missing moments are "
                "not determined"
            )
        p_ext = dict(enumerate(p_vals))
        for l in range(M + 1, n + 1):
            acc = a[l]
            for j in range(1, M + 1):
                m = l - j
                pm = p_ext[m] if m >= 0 else np.conj(p_ext[-m])
                acc = acc - alpha_head[j] * pm
            p_ext[l] = acc / alpha_head[0]
        coeffs = {0: np.atleast_2d(p_ext[0])}
        for m in range(1, n + 1):
            coeffs[m] = np.atleast_2d(p_ext[m])
            coeffs[-m] = np.atleast_2d(np.conj(p_ext[m]))
        extended = SpectralDensity(dim=1, coeffs=coeffs, grid_size=grid_size)
        alpha_blocks = np.zeros((n + 1, 1), dtype=complex)
        alpha_blocks[: M + 1, 0] = alpha_head
        alpha = alpha_blocks.reshape(-1)

    vals = evaluate_on_grid(extended).values
    herm = 0.5 * (vals + np.conj(np.transpose(vals, (0, 2, 1))))
    eigs = np.linalg.eigvalsh(herm)
    if eigs.min() <= 1e-12 * max(eigs.max(), 1.0):
        raise InfeasibleClassError(
            "moment polynomial is not positive definite on the grid; "
            "the class has no usable worst density"
        )
    f0 = SpectralDensity.from_grid(np.linalg.inv(vals), grid_size=grid_size)
    ar_factor = spectral_factorize(extended)
    mse = float(np.vdot(a, alpha).real)
    A = functional_symbol(weights, grid_size)
    C = _blocks_symbol(alpha_blocks, 0, grid_size)
    h = A - np.einsum("gk,gkn->gn", C, vals)
    h0 = _finish_solution(
        "interpolation",
        mse,
        h,
        alpha_blocks,
        {"n": n, "condition": cond, "noisy": False, "construction": "least-favorable"},
        weights,
    )
    system_residual = 0.0
    if M < n:
        # all rows of the extended Toeplitz system, by construction ~ 0
        resid = []
        for l in range(n + 1):
            acc = 0.0 + 0.0j
            for j in range(M + 1):
                m = l - j
                pm = extended.coeff(m)[0, 0]
                acc += pm * alpha_head[j]
            resid.append(acc - a[l])
        system_residual = float(np.abs(resid).max())
    certificate = {
        "kind": "lagrange",
        "alpha": alpha_blocks,
        "ar_coeffs": ar_factor.coeffs,
        "n_constraints": M + 1,
        "system_residual": system_residual,
    }
    return LeastFavorableResult(
        f0=f0, g0=None, minimax_mse=mse, h0=h0, certificate=certificate
    )


# -- scalar filtering under trace power and contaminated noise ------------


@dataclass(frozen=True)
class FilteringRelationReport:
    """Grid residuals of the filtering optimality relations."""

    residual_signal_relation: float
    residual_noise_relation: float
    rel_residual_signal_relation: float
    rel_residual_noise_relation: float
    slackness_residual: float
    phi_positive: bool
    signal_power: float
    noise_power: float
    mixture_floor_violation: float


def filtering_relation_residuals(
    f: SpectralDensity,
    g: SpectralDensity,
    weights: FunctionalWeights,
    alpha2: float,
    beta2: float,
    phi,
    eps: float,
    g2: SpectralDensity,
    truncation: int | None = None,
) -> FilteringRelationReport:
    """Evaluate the minimax filtering optimality relations for a candidate.

    Solves the filtering problem at (f, g), forms the two rank-one outer
    products of the optimality relations, and reports their grid residuals
    against the multiplier sides, the complementary-slackness defect of
    ``phi`` on the set where the noise is above its contamination floor,
    and the realized class quantities (powers and floor violation).
    Residuals are reported, never asserted.
    """
    grid_size = f.grid_size
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 0:
        phi = np.full(grid_size, float(phi))
    if phi.shape != (grid_size,):
        raise ValueError("phi must be a scalar or a grid-sized vector")
    sol = filtering(f, g, weights, truncation=truncation)
    fv = evaluate_on_grid(f).values
    gv = evaluate_on_grid(g).values
    g2v = evaluate_on_grid(g2).values
    A = functional_symbol(weights, grid_size)
    first = sol.diagnostics.get("first_index", 1)
    D = _blocks_symbol(sol.solved_blocks, first, grid_size)
    total = fv + gv
    total_sq = total @ total

    v_noise = np.einsum("gkn,gn->gk", gv, A.conj()) + D.conj()
    lhs_noise = np.einsum("gk,gn->gkn", v_noise, v_noise.conj())
    rhs_noise = alpha2 * total_sq
    res_noise = float(np.abs(lhs_noise - rhs_noise).max())

    v_signal = np.einsum("gkn,gn->gk", fv, A.conj()) - D.conj()
    lhs_signal = np.einsum("gk,gn->gkn", v_signal, v_signal.conj())
    rhs_signal = (beta2 + phi)[:, None, None] * total_sq
    res_signal = float(np.abs(lhs_signal - rhs_signal).max())

    scale_noise = max(float(np.abs(rhs_noise).max()), 1e-300)
    scale_signal = max(float(np.abs(rhs_signal).max()), 1e-300)

    tr_g = np.trace(gv, axis1=1, axis2=2).real
    tr_floor = (1.0 - eps) * np.trace(g2v, axis1=1, axis2=2).real
    active = tr_g >= tr_floor - 1e-10
    slackness = float(np.abs(phi[active]).max(initial=0.0))
    floor_gap = gv - (1.0 - eps) * g2v
    floor_eigs = np.linalg.eigvalsh(
        0.5 * (floor_gap + np.conj(np.transpose(floor_gap, (0, 2, 1))))
    )
    return FilteringRelationReport(
        residual_signal_relation=res_signal,
        residual_noise_relation=res_noise,
        rel_residual_signal_relation=res_signal / scale_signal,
        rel_residual_noise_relation=res_noise / scale_noise,
        slackness_residual=slackness,
        phi_positive=bool(phi.max(initial=0.0) > 1e-12),
        signal_power=_trace_power(fv),
        noise_power=_trace_power(gv),
        mixture_floor_violation=float(-min(floor_eigs.min(), 0.0)),
    )


def _trace_power(values) -> float:
    vals = as_grid_values(values)
    return float(np.trace(vals, axis1=1, axis2=2).real.mean())


def _nonnegative_root(aq, bq, cq, fallback):
    """Largest nonnegative root of aq x^2 + bq x + cq = 0, elementwise.

    Degenerate or rootless nodes keep the fallback value; the caller's
    damping and residual gate decide whether that matters.
    """
    disc = np.maximum(bq**2 - 4.0 * aq * cq, 0.0)
    sqrt_disc = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        quad1 = (-bq + sqrt_disc) / (2.0 * aq)
        quad2 = (-bq - sqrt_disc) / (2.0 * aq)
        linear = -cq / bq
    out = np.where(np.abs(aq) > 1e-30, np.maximum(quad1, quad2), linear)
    out = np.where(np.isfinite(out) & (out >= 0.0), out, fallback)
    return out


def least_favorable_d0eps_filtering_scalar(
    weights: FunctionalWeights,
    signal_power: float,
    noise_power: float,
    eps: float,
    g2: SpectralDensity,
    grid_size: int | None = None,
    truncation: int | None = None,
    max_iter: int = 200,
    damping: float = 0.5,
    tol: float = 1e-6,
) -> LeastFavorableResult:
    """Scalar least-favorable pair for filtering under power constraints.

    The signal class fixes the mean trace power; the noise class is an
    epsilon mixture above the floor (1 - eps) g2 with fixed power. A damped
    fixed-point iteration alternates the filtering solve with pointwise
    reconstruction of (f, g) from the optimality relations, projecting onto
    the class constraints; multipliers are recovered from the power
    normalizations. On convergence (relation residuals below ``tol``) the
    certificate is marked converged; otherwise the best iterate is returned
    flagged, never silently accepted.
    """
    if weights.horizon != "filtering":
        raise ValueError("weights must carry the filtering horizon")
    if weights.dim != 1 or g2.dim != 1:
        raise ValueError("only the scalar case is supported")
    if not (0.0 <= eps <= 1.0):
        raise ValueError("eps must lie in [0, 1]")
    if signal_power <= 0 or noise_power <= 0:
        raise ValueError("powers must be positive")
    G = grid_size or g2.grid_size
    g2v = evaluate_on_grid(g2).values[:, 0, 0].real
    if g2v.min() < -1e-12:
        raise ValueError("contamination baseline must be nonnegative")
    p2 = float(g2v.mean())
    floor = (1.0 - eps) * g2v
    if noise_power < floor.mean() - 1e-12:
        raise InfeasibleClassError(
            "noise power is below the contamination floor; the class is empty"
        )
    if eps == 0.0 and abs(p2 - noise_power) > 1e-8 * max(1.0, noise_power):
        raise InfeasibleClassError(
            "with eps = 0 the noise density is pinned to the baseline, whose "
            "power disagrees with the requested noise power"
        )
    A = functional_symbol(weights, G)[:, 0]
    f_vals = np.full(G, signal_power)
    g_vals = floor + (noise_power - floor.mean())
    total_power = signal_power + noise_power
    if float(np.linalg.norm(weights.blocks)) == 0.0:
        # zero functional: every feasible pair is worst, with zero error
        f0 = SpectralDensity.from_grid(f_vals.astype(complex), grid_size=G)
        g0 = SpectralDensity.from_grid(g_vals.astype(complex), grid_size=G)
        h0 = filtering(f0, g0, weights, truncation=truncation or G // 4)
        return LeastFavorableResult(
            f0=f0, g0=g0, minimax_mse=0.0, h0=h0,
            certificate={"kind": "lagrange", "alpha_squared": 0.0,
                         "beta_squared": 0.0, "phi": np.zeros(G),
                         "converged": True, "iterations": 0,
                         "residual_noise_relation": 0.0,
                         "residual_signal_relation": 0.0, "degenerate": True},
        )
    alpha = beta = 0.5
    phi = np.zeros(G)
    res_noise = res_signal = np.inf
    converged = False
    iterations = 0
    abs_A2 = np.abs(A) ** 2
    bailed = None
    work_trunc = truncation if truncation is not None else G // 4
    best = None  # (mse, f, g, alpha, beta, phi, res_noise, res_signal)
    for iterations in range(1, max_iter + 1):
        fd = GridMatrixFunction(values=f_vals.astype(complex).reshape(G, 1, 1))
        gd = GridMatrixFunction(values=g_vals.astype(complex).reshape(G, 1, 1))
        try:
            sol = filtering(fd, gd, weights, truncation=work_trunc)
        except PcwkError as exc:
            bailed = f"iteration left the solvable region: {exc}"
            break
        first = sol.diagnostics.get("first_index", 1)
        D = _blocks_symbol(sol.solved_blocks, first, G)[:, 0]
        u = np.abs(A * g_vals + D)
        v = np.abs(A * f_vals - D)
        cross = (A * D.conj()).real
        dd = np.abs(D) ** 2
        # signal relation |f A - D| = beta (f + g): pointwise quadratic in f
        f_new = _nonnegative_root(
            abs_A2 - beta**2,
            -2.0 * (cross + beta**2 * g_vals),
            dd - beta**2 * g_vals**2,
            f_vals,
        )
        if eps == 0.0:
            # noise pinned to the baseline; only the signal relation moves f
            g_new = g2v.copy()
        else:
            # noise relation |g A + D| = alpha (f + g): quadratic in g
            g_new = _nonnegative_root(
                abs_A2 - alpha**2,
                2.0 * (cross - alpha**2 * f_vals),
                dd - alpha**2 * f_vals**2,
                g_vals,
            )
            g_new = np.maximum(g_new, floor)
        # damped step, then re-project the powers; a small positive floor on
        # the signal keeps the candidate inside the solvable region (clamped
        # iterates carry out-of-band dust that must not flip the sign)
        f_vals = (1 - damping) * f_vals + damping * f_new
        g_vals = (1 - damping) * g_vals + damping * g_new
        f_vals = np.maximum(f_vals, 1e-5 * signal_power)
        f_vals *= signal_power / f_vals.mean()
        excess = np.maximum(g_vals - floor, 0.0)
        target_excess = noise_power - floor.mean()
        if excess.mean() > 0 and target_excess >= 0:
            g_vals = floor + excess * (target_excess / excess.mean())
        # multipliers refit to the damped iterate, then relation residuals
        total = f_vals + g_vals
        u = np.abs(A * g_vals + D)
        v = np.abs(A * f_vals - D)
        alpha = float((u * total).sum() / (total**2).sum())
        on_floor = g_vals <= floor + 1e-10 * max(float(g_vals.max()), 1.0)
        free = ~on_floor
        if free.any():
            beta = float((v[free] * total[free]).sum() / (total[free] ** 2).sum())
        phi = np.where(on_floor, np.minimum((v / total) ** 2 - beta**2, 0.0), 0.0)
        scale45 = max(float((alpha**2) * (total**2).max()), 1e-300)
        scale46 = max(float((beta**2) * (total**2).max()), 1e-300)
        res_noise = float(np.abs(u**2 - alpha**2 * total**2).max()) / scale45
        res_signal = float(np.abs(v**2 - (beta**2 + phi) * total**2).max()) / scale46
        if best is None or sol.mse >= best[0]:
            best = (sol.mse, f_vals.copy(), g_vals.copy(), alpha, beta, phi.copy(),
                    res_noise, res_signal)
        gate = res_signal if eps == 0.0 else max(res_noise, res_signal)
        if gate < tol:
            converged = True
            break
    if not converged and best is not None:
        # fall back to the best (largest-error) iterate seen
        _, f_vals, g_vals, alpha, beta, phi, res_noise, res_signal = best
    f0 = SpectralDensity.from_grid(f_vals.astype(complex), grid_size=G)
    g0 = SpectralDensity.from_grid(g_vals.astype(complex), grid_size=G)
    h0 = filtering(
        GridMatrixFunction(values=f_vals.astype(complex).reshape(G, 1, 1)),
        GridMatrixFunction(values=g_vals.astype(complex).reshape(G, 1, 1)),
        weights,
        truncation=work_trunc,
    )
    if not converged:
        warnings.warn(
            f"filtering class iteration not certified (relation residuals "
            f"{res_noise:.2e}, {res_signal:.2e} after {iterations} iterations)"
        )
    certificate = {
        "kind": "lagrange",
        "alpha_squared": float(alpha**2),
        "beta_squared": float(beta**2),
        "phi": phi,
        "converged": bool(converged),
        "iterations": iterations,
        "residual_noise_relation": float(res_noise),
        "residual_signal_relation": float(res_signal),
    }
    if bailed:
        certificate["abort_reason"] = bailed
    return LeastFavorableResult(
        f0=f0, g0=g0, minimax_mse=h0.mse, h0=h0, certificate=certificate
    )


# -- class samplers and membership residuals ------------------------------


def _random_taps(rng, order, dim, cols=None, decay=0.6):
    cols = dim if cols is None else cols
    taps = []
    for u in range(order + 1):
        scale = decay**u
        taps.append(
            scale
            * (
                rng.standard_normal((dim, cols))
                + 1j * rng.standard_normal((dim, cols))
            )
        )
    return np.array(taps)


def sample_power_class(
    rng: np.random.Generator,
    dim: int,
    order: int,
    total_power: float,
    count: int,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> list[SpectralDensity]:
    """Random moving-average densities with exact total power."""
    out = []
    for _ in range(count):
        taps = _random_taps(rng, order, dim)
        taps *= np.sqrt(total_power / np.sum(np.abs(taps) ** 2))
        out.append(SpectralDensity.from_moving_average(list(taps), grid_size=grid_size))
    return out


def power_class_residual(f: SpectralDensity, total_power: float) -> float:
    vals = evaluate_on_grid(f).values
    return abs(_trace_power(vals) - total_power)


def sample_d01_class(
    rng: np.random.Generator,
    power_matrix,
    order: int,
    count: int,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> list[SpectralDensity]:
    """Random moving-average densities with an exact zero-lag power matrix."""
    P = np.atleast_2d(np.asarray(power_matrix, dtype=complex))
    dim = P.shape[0]
    w, v = np.linalg.eigh(0.5 * (P + P.conj().T))
    if w.min() <= 0:
        raise ValueError("power matrix must be positive definite to sample from")
    p_half = (v * np.sqrt(w)) @ v.conj().T
    out = []
    for _ in range(count):
        taps = _random_taps(rng, order, dim)
        S = np.sum(taps @ np.conj(np.transpose(taps, (0, 2, 1))), axis=0)
        ws, vs = np.linalg.eigh(0.5 * (S + S.conj().T))
        ws = np.maximum(ws, 1e-12 * ws.max())
        s_inv_half = (vs / np.sqrt(ws)) @ vs.conj().T
        transform = p_half @ s_inv_half
        taps = np.array([transform @ t for t in taps])
        out.append(SpectralDensity.from_moving_average(list(taps), grid_size=grid_size))
    return out


def d01_class_residual(f: SpectralDensity, power_matrix) -> float:
    P = np.atleast_2d(np.asarray(power_matrix, dtype=complex))
    vals = evaluate_on_grid(f).values
    return float(np.linalg.norm(vals.mean(axis=0) - P))


def sample_dm_class(
    rng: np.random.Generator,
    p_constraints: Sequence,
    extra_degree: int,
    count: int,
    grid_size: int = DEFAULT_GRID_SIZE,
    max_tries: int = 200,
) -> list[SpectralDensity]:
    """Random densities whose inverses keep the prescribed cosine moments.

    Perturbs the moment polynomial at lags beyond the constrained band and
    rejects draws that lose positive definiteness.
    """
    first = np.atleast_2d(np.asarray(p_constraints[0], dtype=complex))
    dim = first.shape[0]
    base = _moment_polynomial(p_constraints, dim, grid_size)
    M = len(p_constraints) - 1
    base_vals = evaluate_on_grid(base).values
    base_herm = 0.5 * (base_vals + np.conj(np.transpose(base_vals, (0, 2, 1))))
    margin = float(np.linalg.eigvalsh(base_herm).min())
    if margin <= 0:
        raise InfeasibleClassError("moment polynomial is not positive definite")
    out: list[SpectralDensity] = []
    tries = 0
    while len(out) < count and tries < max_tries * count:
        tries += 1
        coeffs = {m: base.coeff(m) for m in base.coeffs}
        for i in range(1, extra_degree + 1):
            m = M + i
            bump = (
                rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            ) * (0.25 * margin * 0.5**i / dim)
            coeffs[m] = bump
            coeffs[-m] = bump.conj().T
        cand = SpectralDensity(dim=dim, coeffs=coeffs, grid_size=grid_size)
        vals = evaluate_on_grid(cand).values
        herm = 0.5 * (vals + np.conj(np.transpose(vals, (0, 2, 1))))
        if np.linalg.eigvalsh(herm).min() <= 1e-10:
            continue
        out.append(SpectralDensity.from_grid(np.linalg.inv(vals), grid_size=grid_size))
    if len(out) < count:
        raise InfeasibleClassError(
            "could not sample enough positive definite class members"
        )
    return out


def dm_class_residual(f: SpectralDensity, p_constraints: Sequence) -> float:
    vals = np.linalg.inv(evaluate_on_grid(f).values)
    worst = 0.0
    G = vals.shape[0]
    lam = -np.pi + 2.0 * np.pi * np.arange(G) / G
    for m, target in enumerate(p_constraints):
        target = np.atleast_2d(np.asarray(target, dtype=complex))
        moment = (vals * np.cos(m * lam)[:, None, None]).mean(axis=0)
        worst = max(worst, float(np.linalg.norm(moment - target)))
    return worst


def sample_d0eps_class(
    rng: np.random.Generator,
    signal_power: float,
    noise_power: float,
    eps: float,
    g2: SpectralDensity,
    order: int,
    count: int,
) -> list[tuple[SpectralDensity, SpectralDensity]]:
    """Random scalar (signal, noise) pairs in the power/mixture classes."""
    if g2.dim != 1:
        raise ValueError("scalar class sampling only")
    G = g2.grid_size
    g2v = evaluate_on_grid(g2).values[:, 0, 0].real
    floor_power = (1.0 - eps) * float(g2v.mean())
    if noise_power < floor_power - 1e-12:
        raise InfeasibleClassError("noise power below the contamination floor")
    out = []
    for _ in range(count):
        f_taps = _random_taps(rng, order, 1)
        f_taps *= np.sqrt(signal_power / np.sum(np.abs(f_taps) ** 2))
        f = SpectralDensity.from_moving_average(list(f_taps), grid_size=G)
        if eps == 0.0:
            g = SpectralDensity.from_grid(g2v.astype(complex), grid_size=G)
        else:
            g_taps = _random_taps(rng, order, 1)
            g_taps *= np.sqrt(
                (noise_power - floor_power) / np.sum(np.abs(g_taps) ** 2)
            )
            g1 = SpectralDensity.from_moving_average(list(g_taps), grid_size=G)
            gv = (1.0 - eps) * g2v + evaluate_on_grid(g1).values[:, 0, 0].real
            g = SpectralDensity.from_grid(gv.astype(complex), grid_size=G)
        out.append((f, g))
    return out


def d0eps_class_residual(
    f: SpectralDensity,
    g: SpectralDensity,
    signal_power: float,
    noise_power: float,
    eps: float,
    g2: SpectralDensity,
) -> float:
    fv = evaluate_on_grid(f).values
    gv = evaluate_on_grid(g).values
    g2v = evaluate_on_grid(g2).values
    res = abs(_trace_power(fv) - signal_power)
    res = max(res, abs(_trace_power(gv) - noise_power))
    gap = gv - (1.0 - eps) * g2v
    eigs = np.linalg.eigvalsh(0.5 * (gap + np.conj(np.transpose(gap, (0, 2, 1)))))
    return max(res, float(-min(eigs.min(), 0.0)))


# -- saddle-point certification -------------------------------------------


@dataclass(frozen=True)
class SaddleReport:
    """Margins of the robust characteristic over sampled class members."""

    margins: np.ndarray
    min_margin: float
    base_mse: float
    n_rejected: int
    rejected: tuple[str, ...]


def saddle_point_check(
    solution: EstimateSolution,
    f0: SpectralDensity,
    g0: SpectralDensity | None,
    samples: Sequence,
    weights: FunctionalWeights,
    validator: Callable | None = None,
    validation_tol: float = 1e-8,
    optimal_error: Callable | None = None,
) -> SaddleReport:
    """Check that no sampled class member beats the nominal pair.

    For each sample (f, g), the margin is the error of the fixed robust
    characteristic at the nominal pair minus its error at the sample;
    nonnegative margins over the class certify the saddle point. Samples
    are first validated against the class (``validator`` returns a residual
    and anything above ``validation_tol`` is rejected with a diagnostic).
    Passing ``optimal_error`` replaces the fixed-characteristic error with
    a per-sample optimal error, which certifies least-favorability directly
    for degenerate classes.
    """
    base = float(solution.mse)
    margins = []
    rejected = []
    for idx, sample in enumerate(samples):
        if isinstance(sample, SpectralDensity):
            f_s, g_s = sample, None
        else:
            f_s, g_s = sample
        if validator is not None:
            residual = float(validator(f_s, g_s) if g_s is not None else validator(f_s))
            if residual > validation_tol:
                rejected.append(
                    f"sample {idx}: class residual {residual:.3e} exceeds "
                    f"{validation_tol:.1e}"
                )
                continue
        if optimal_error is not None:
            value = float(optimal_error(f_s, g_s))
        else:
            value = evaluate_mse(solution, f_s, g_s, weights)
        margins.append(base - value)
    margins_arr = np.asarray(margins, dtype=float)
    return SaddleReport(
        margins=margins_arr,
        min_margin=float(margins_arr.min(initial=np.inf)),
        base_mse=base,
        n_rejected=len(rejected),
        rejected=tuple(rejected),
    )
