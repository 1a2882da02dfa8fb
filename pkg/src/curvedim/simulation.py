"""Desk-scale Monte Carlo studies of the dimension-identification method.

Four studies are provided: the eigenvalue-gap profile of the estimated
operator, size and power of the bootstrap rank test, subspace estimation
error against the true factor space, and the convergence-rate contrast
between nonzero- and zero-eigenvalue estimates.

Every study derives one RNG stream per replication from (seed, indices),
so results are reproducible bit-for-bit and independent of execution
order or the number of worker threads.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dimension import (
    BootstrapConfig,
    bootstrap_test,
    default_epsilon,
    subspace_distance_general,
    threshold_estimate,
)
from .eigen import decompose, operator_eigenvalues
from .errors import ValidationError
from .grids import CurvePanel, Grid
from .tsmodels import ar1_simulate

DEFAULT_GRID_POINTS = 101


def default_grid() -> Grid:
    return Grid.uniform(0.0, 1.0, DEFAULT_GRID_POINTS)


def default_ar_coefficients(d: int) -> tuple[float, ...]:
    """Alternating-sign coefficients (-1)^i (0.9 - 0.5 i / d), i = 1..d."""
    return tuple((-1.0) ** i * (0.9 - 0.5 * i / d) for i in range(1, d + 1))


def factor_curves(grid: Grid, d: int) -> np.ndarray:
    """Orthonormal cosine factor curves sqrt(2) cos(pi i u), i = 1..d."""
    u = grid.points
    return np.array([np.sqrt(2.0) * np.cos(np.pi * i * u) for i in range(1, d + 1)])


def noise_curves(grid: Grid, count: int) -> np.ndarray:
    """Orthonormal sine noise curves sqrt(2) sin(pi j u), j = 1..count."""
    u = grid.points
    return np.array([np.sqrt(2.0) * np.sin(np.pi * j * u) for j in range(1, count + 1)])


def _child_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class FactorModelSpec:
    """Curve model: AR(1) factor paths on cosine curves plus sine noise.

    Each curve is sum_i xi_ti * sqrt(2) cos(pi i u) plus
    sum_j w_j Z_tj * sqrt(2) sin(pi j u) with iid standard normal Z and
    geometrically decaying weights w_j = 2^-(j-1).
    """

    d: int
    n: int
    grid: Grid = field(default_factory=default_grid)
    ar_coefficients: tuple[float, ...] | None = None
    noise_terms: int = 10
    noise_weights: tuple[float, ...] | None = None
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        coeffs = self.ar_coefficients
        if coeffs is None:
            coeffs = default_ar_coefficients(self.d)
        coeffs = tuple(float(a) for a in coeffs)
        if len(coeffs) != self.d:
            raise ValidationError("need one AR coefficient per factor")
        if any(abs(a) >= 1.0 for a in coeffs):
            raise ValidationError("all AR coefficients must satisfy |a| < 1")
        object.__setattr__(self, "ar_coefficients", coeffs)
        weights = self.noise_weights
        if weights is None:
            weights = tuple(2.0 ** -(j - 1) for j in range(1, self.noise_terms + 1))
        weights = tuple(float(w) for w in weights)
        if len(weights) != self.noise_terms:
            raise ValidationError("need one weight per noise term")
        if any(w < 0 for w in weights) or any(
            weights[j + 1] > weights[j] for j in range(len(weights) - 1)
        ):
            raise ValidationError("noise weights must be nonnegative and nonincreasing")
        object.__setattr__(self, "noise_weights", weights)


def generate_panel(spec: FactorModelSpec) -> CurvePanel:
    """Draw one panel of n curves from the factor model."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed))
    xi = np.column_stack(
        [
            ar1_simulate(a, spec.n, burn_in=spec.burn_in, rng=rng)
            for a in spec.ar_coefficients
        ]
    )
    values = xi @ factor_curves(spec.grid, spec.d)
    if spec.noise_terms:
        z = rng.standard_normal((spec.n, spec.noise_terms))
        values = values + (z * np.array(spec.noise_weights)) @ noise_curves(
            spec.grid, spec.noise_terms
        )
    return CurvePanel(grid=spec.grid, values=values)


def _run_indexed(fn, count: int, threads: int) -> list:
    """Run fn(i) for i in range(count); aggregation is by index."""
    if threads <= 1:
        return [fn(i) for i in range(count)]
    out = [None] * count
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, res in zip(range(count), pool.map(fn, range(count))):
            out[i] = res
    return out


@dataclass(frozen=True)
class EigenGapResult:
    """Mean of the 10 largest eigenvalues per (d, n) cell."""

    d_values: tuple[int, ...]
    n_values: tuple[int, ...]
    replications: int
    p: int
    seed: int
    mean_eigenvalues: dict[tuple[int, int], np.ndarray]

    TOP = 10


def eigen_gap_study(
    d_values,
    n_values,
    replications: int,
    p: int = 5,
    seed: int = 0,
    grid: Grid | None = None,
    threads: int = 1,
) -> EigenGapResult:
    grid = grid or default_grid()
    top = EigenGapResult.TOP
    means: dict[tuple[int, int], np.ndarray] = {}
    for di, d in enumerate(d_values):
        for ni, n in enumerate(n_values):
            if n <= p:
                raise ValidationError(f"n={n} must exceed p={p}")

            def one(rep: int, d=d, n=n, di=di, ni=ni) -> np.ndarray:
                spec = FactorModelSpec(
                    d=d, n=n, grid=grid, seed=_child_seed(seed, di, ni, rep)
                )
                lam = operator_eigenvalues(generate_panel(spec), p)
                padded = np.zeros(top)
                padded[: min(top, lam.size)] = lam[:top]
                return padded

            rows = np.array(_run_indexed(one, replications, threads))
            means[(d, n)] = rows.mean(axis=0)
    return EigenGapResult(
        d_values=tuple(d_values),
        n_values=tuple(n_values),
        replications=replications,
        p=p,
        seed=seed,
        mean_eigenvalues=means,
    )


@dataclass(frozen=True)
class BootstrapPowerResult:
    """P-value samples for the hypotheses on eigenvalue ranks d and d+1."""

    d: int
    n_values: tuple[int, ...]
    replications: int
    n_draws: int
    p: int
    seed: int
    pvalues: dict[tuple[int, int], np.ndarray]  # (n, tested_rank) -> samples


def bootstrap_power_study(
    d: int,
    n_values,
    replications: int,
    n_draws: int = 200,
    p: int = 5,
    seed: int = 0,
    grid: Grid | None = None,
    threads: int = 1,
) -> BootstrapPowerResult:
    grid = grid or default_grid()
    out: dict[tuple[int, int], np.ndarray] = {}
    for ni, n in enumerate(n_values):
        for hi, d0 in enumerate((d - 1, d)):

            def one(rep: int, n=n, d0=d0, ni=ni, hi=hi) -> float:
                spec = FactorModelSpec(
                    d=d, n=n, grid=grid, seed=_child_seed(seed, ni, hi, rep, 0)
                )
                panel = generate_panel(spec)
                cfg = BootstrapConfig(
                    n_draws=n_draws,
                    alpha=0.05,
                    seed=_child_seed(seed, ni, hi, rep, 1),
                )
                return bootstrap_test(panel, d0, p, cfg)

            out[(n, d0 + 1)] = np.array(_run_indexed(one, replications, threads))
    return BootstrapPowerResult(
        d=d,
        n_values=tuple(n_values),
        replications=replications,
        n_draws=n_draws,
        p=p,
        seed=seed,
        pvalues=out,
    )


@dataclass(frozen=True)
class SubspaceErrorResult:
    """Distance of the estimated dynamic space from the true factor span.

    Each record carries two distances: ``dtilde`` uses the first d
    estimated eigenfunctions (the estimation-error measure, comparable
    across d), and ``dtilde_adaptive`` uses the threshold-rule dimension
    estimate recorded in ``d_hat``.
    """

    d_values: tuple[int, ...]
    n_values: tuple[int, ...]
    replications: int
    p: int
    seed: int
    records: list[dict]  # d, n, replication, d_hat, dtilde, dtilde_adaptive


def subspace_error_study(
    d_values,
    n_values,
    replications: int,
    p: int = 5,
    seed: int = 0,
    grid: Grid | None = None,
    threads: int = 1,
) -> SubspaceErrorResult:
    grid = grid or default_grid()
    records: list[dict] = []
    for di, d in enumerate(d_values):
        truth = factor_curves(grid, d)
        for ni, n in enumerate(n_values):

            def one(rep: int, d=d, n=n, di=di, ni=ni, truth=truth) -> dict:
                spec = FactorModelSpec(
                    d=d, n=n, grid=grid, seed=_child_seed(seed, di, ni, rep)
                )
                panel = generate_panel(spec)
                lam = operator_eigenvalues(panel, p)
                d_hat = threshold_estimate(lam, default_epsilon(lam, n))
                dec = decompose(panel, p, n_components=max(d, d_hat))
                dist = subspace_distance_general(
                    grid, dec.eigenfunctions[:d], truth
                )
                if d_hat == 0:
                    dist_adaptive = 1.0
                else:
                    dist_adaptive = subspace_distance_general(
                        grid, dec.eigenfunctions[:d_hat], truth
                    )
                return {
                    "d": d,
                    "n": n,
                    "replication": rep,
                    "d_hat": d_hat,
                    "dtilde": dist,
                    "dtilde_adaptive": dist_adaptive,
                }

            records.extend(_run_indexed(one, replications, threads))
    return SubspaceErrorResult(
        d_values=tuple(d_values),
        n_values=tuple(n_values),
        replications=replications,
        p=p,
        seed=seed,
        records=records,
    )


@dataclass(frozen=True)
class RateStudySpec:
    """Single-factor model used to contrast eigenvalue convergence rates."""

    sample_sizes: tuple[int, ...] = (100, 200, 400, 800, 1600)
    replications: int = 100
    ar_coefficient: float = 0.5
    p: int = 1
    grid: Grid = field(default_factory=default_grid)
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if abs(self.ar_coefficient) >= 1.0:
            raise ValidationError("AR coefficient must satisfy |a| < 1")


def reference_rate_eigenvalue(grid: Grid, ar_coefficient: float) -> float:
    """Quadrature oracle for the single nonzero population eigenvalue.

    The lag-1 autocovariance kernel of the single-factor model is
    gamma(1) phi(u) phi(v) with gamma(1) = a / (1 - a^2); composing it
    with its adjoint on the grid and solving the quadrature-weighted
    symmetric eigenproblem gives the population eigenvalue the estimates
    converge to. Analytically this equals gamma(1)^2 times the squared
    norm of phi to the fourth power, i.e. gamma(1)^2 on the unit-norm
    cosine curve; the grid value inherits only the quadrature bias.
    """
    a = float(ar_coefficient)
    gamma1 = a / (1.0 - a * a)
    phi = factor_curves(grid, 1)[0]
    w = grid.weights
    kernel = gamma1 * np.outer(phi, phi)
    composed = (kernel * w) @ kernel.T
    root = np.sqrt(w)
    sym = composed * root[:, None] * root[None, :]
    return float(np.linalg.eigvalsh((sym + sym.T) / 2.0)[-1])


@dataclass(frozen=True)
class RateStudyResult:
    spec: RateStudySpec
    theta_ref: float
    theta_ref_analytic: float
    records: list[dict]  # n, replication, theta1, theta2


def rate_study(spec: RateStudySpec, threads: int = 1) -> RateStudyResult:
    theta_ref = reference_rate_eigenvalue(spec.grid, spec.ar_coefficient)
    gamma1 = spec.ar_coefficient / (1.0 - spec.ar_coefficient**2)
    records: list[dict] = []
    for ni, n in enumerate(spec.sample_sizes):

        def one(rep: int, n=n, ni=ni) -> dict:
            model = FactorModelSpec(
                d=1,
                n=n,
                grid=spec.grid,
                ar_coefficients=(spec.ar_coefficient,),
                seed=_child_seed(spec.seed, ni, rep),
            )
            lam = operator_eigenvalues(generate_panel(model), spec.p)
            return {
                "n": n,
                "replication": rep,
                "theta1": float(lam[0]),
                "theta2": float(lam[1]) if lam.size > 1 else 0.0,
            }

        records.extend(_run_indexed(one, spec.replications, threads))
    return RateStudyResult(
        spec=spec,
        theta_ref=theta_ref,
        theta_ref_analytic=gamma1**2,
        records=records,
    )


def rate_regression_slopes(result: RateStudyResult) -> tuple[float, float]:
    """Log-log slopes of the mean errors against sample size.

    Returns (slope of mean |theta1 - theta_ref|, slope of mean theta2).
    """
    ns = np.array(sorted({r["n"] for r in result.records}), dtype=float)
    err1 = []
    err2 = []
    for n in ns:
        sel = [r for r in result.records if r["n"] == n]
        err1.append(np.mean([abs(r["theta1"] - result.theta_ref) for r in sel]))
        err2.append(np.mean([r["theta2"] for r in sel]))
    slope1 = np.polyfit(np.log(ns), np.log(np.array(err1)), 1)[0]
    slope2 = np.polyfit(np.log(ns), np.log(np.array(err2)), 1)[0]
    return float(slope1), float(slope2)


# CSV and manifest emission (plot-ready tidy data).

def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(int(x))


def write_eigen_gap_csv(result: EigenGapResult, path) -> None:
    cols = [f"eigenvalue_{j + 1}" for j in range(EigenGapResult.TOP)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("d,n," + ",".join(cols) + "\n")
        for d in result.d_values:
            for n in result.n_values:
                row = result.mean_eigenvalues[(d, n)]
                fh.write(f"{d},{n}," + ",".join(repr(float(x)) for x in row) + "\n")


def write_bootstrap_power_csv(result: BootstrapPowerResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("d,n,tested_rank,replication,p_value\n")
        for n in result.n_values:
            for rank in (result.d, result.d + 1):
                for rep, pv in enumerate(result.pvalues[(n, rank)]):
                    fh.write(f"{result.d},{n},{rank},{rep},{repr(float(pv))}\n")


def write_subspace_error_csv(result: SubspaceErrorResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("d,n,replication,d_hat,dtilde,dtilde_adaptive\n")
        for r in result.records:
            fh.write(
                f"{r['d']},{r['n']},{r['replication']},{r['d_hat']},"
                f"{repr(float(r['dtilde']))},{repr(float(r['dtilde_adaptive']))}\n"
            )


def write_rate_study_csv(result: RateStudyResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n,replication,theta1,theta2,abs_err_theta1\n")
        for r in result.records:
            err = abs(r["theta1"] - result.theta_ref)
            fh.write(
                f"{r['n']},{r['replication']},{repr(float(r['theta1']))},"
                f"{repr(float(r['theta2']))},{repr(float(err))}\n"
            )


def write_manifest(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
