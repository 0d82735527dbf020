"""Cramer-von Mises statistic, population functional, and calibrated test.

The empirical statistic against the uniform null is

    T^2 = int_0^1 (Fhat_n(x) - x)^2 dx
        = (1/n) [ sum_i (U_(i) - (2i-1)/(2n))^2 + 1/(12n) ],

evaluated exactly from order statistics.  For a cosine-basis perturbation
f = sqrt(2) sum_j theta_j cos(pi j x) the population functional is

    n T^2(F - F_0) = n sum_j theta_j^2 / (pi^2 j^2),

which is exact: the primitive U(x) = int_0^x f has pure sine expansion
sqrt(2) theta_j sin(pi j x) / (pi j), and T^2(F - F_0) = int U^2.

The classical Brownian-bridge kernel form int int (min{s,t} - st) f f is
NOT the same functional: min{s,t} - st diagonalizes in the sine basis, and
rewriting int U^2 through it leaves a rank-one remainder,

    int U^2 = int int (min{s,t} - st) f(s) f(t) ds dt + (int_0^1 U)^2,

so the two agree only when int U = 0 (no odd-frequency mass).  The defining
integral is authoritative here; ``bridge_kernel_quadrature`` evaluates the
kernel form so the remainder identity can be checked explicitly.

Critical values come from a seeded Monte Carlo table of n T^2 under the
null, cached as JSON keyed by (n, reps, seed).  The classical asymptotic
0.95 quantile of omega^2 is kept only as a cross-check constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ConfigError
from .report import TestReport
from .sampling import cumulative_perturbation, density_grid, evaluate_perturbation, rng_for_replication
from .spectra import Spectrum

# limiting distribution of omega^2 = n T^2: classical upper 5% point
ASYMPTOTIC_Q95 = 0.46136


def _validate_sample(sample: np.ndarray) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ConfigError("sample must be a non-empty 1-d array")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ConfigError("observations must lie in [0, 1]")
    return x


def cvm_statistic(sample: np.ndarray) -> float:
    """T^2 = int (Fhat_n - x)^2 dx via the exact order-statistic formula."""
    x = np.sort(_validate_sample(sample))
    n = x.size
    grid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    omega_sq = float(np.sum((x - grid) ** 2) + 1.0 / (12.0 * n))
    return omega_sq / n


def cvm_statistic_quadrature(sample: np.ndarray) -> float:
    """The defining integral, summed segment by segment (oracle path).

    Between consecutive order statistics Fhat_n is flat, so each segment
    contributes an exact cubic difference.
    """
    x = np.sort(_validate_sample(sample))
    n = x.size
    knots = np.concatenate([[0.0], x, [1.0]])
    total = 0.0
    for i in range(n + 1):
        level = i / n
        a, b = knots[i], knots[i + 1]
        total += ((level - a) ** 3 - (level - b) ** 3) / 3.0
    return total


def _require_cosine(theta: Spectrum) -> Spectrum:
    if theta.basis != "cosine":
        raise ConfigError("the population functional is defined for the cosine basis")
    return theta


def cvm_population(theta: Spectrum) -> float:
    """T^2(F - F_0) = sum_j theta_j^2 / (pi^2 j^2) for the cosine basis."""
    _require_cosine(theta)
    j = np.arange(1, theta.coeffs.size + 1, dtype=float)
    return float(np.sum(np.asarray(theta.coeffs, dtype=float) ** 2 / (math.pi**2 * j**2)))


def cvm_population_quadrature(theta: Spectrum, grid: int = 8192) -> float:
    """T^2(F - F_0) = int_0^1 U(x)^2 dx by Simpson quadrature of the primitive."""
    _require_cosine(theta)
    x = np.linspace(0.0, 1.0, grid + 1)
    u = cumulative_perturbation(theta, x)
    return float(integrate.simpson(u**2, x=x))


def bridge_kernel_quadrature(theta: Spectrum, order: int = 256) -> float:
    """int int (min{s,t} - st) f(s) f(t) ds dt by tensor Gauss-Legendre.

    Differs from the defining functional by the rank-one term (int U)^2;
    see the module docstring.
    """
    _require_cosine(theta)
    nodes, weights = leggauss(order)
    x = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    f = evaluate_perturbation(theta, x)
    kern = np.minimum.outer(x, x) - np.outer(x, x)
    return float((w * f) @ kern @ (w * f))


def primitive_mean(theta: Spectrum) -> float:
    """int_0^1 U(x) dx = 2 sqrt(2) sum_{odd j} theta_j / (pi^2 j^2)."""
    _require_cosine(theta)
    coeffs = np.asarray(theta.coeffs, dtype=float)
    j = np.arange(1, coeffs.size + 1)
    odd = j % 2 == 1
    return float(2.0 * math.sqrt(2.0) * np.sum(coeffs[odd] / (math.pi**2 * j[odd] ** 2)))


@dataclass(frozen=True)
class CvmCalibration:
    """Monte Carlo null table of n T^2 at a fixed sample size."""

    n: int
    reps: int
    seed: int
    values: np.ndarray  # sorted n T^2 draws

    def critical_value(self, alpha: float) -> float:
        if not 0.0 < alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        return float(np.quantile(self.values, 1.0 - alpha))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "values": [float(v) for v in self.values],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "CvmCalibration":
        return CvmCalibration(
            n=int(data["n"]),
            reps=int(data["reps"]),
            seed=int(data["seed"]),
            values=np.asarray(data["values"], dtype=float),
        )


def _cache_path(cache_dir: Path, n: int, reps: int, seed: int) -> Path:
    return Path(cache_dir) / f"cvm_null_n{n}_reps{reps}_seed{seed}.json"


def calibrate_cvm(
    n: int,
    reps: int = 20000,
    seed: int = 0,
    cache_dir: str | Path | None = None,
) -> CvmCalibration:
    """Simulate the null table of n T^2, reading/writing the JSON cache if set."""
    if n < 1 or reps < 100:
        raise ConfigError("need n >= 1 and reps >= 100 for calibration")
    if cache_dir is not None:
        path = _cache_path(Path(cache_dir), n, reps, seed)
        if path.exists():
            return CvmCalibration.from_json_dict(json.loads(path.read_text()))
    grid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    values = np.empty(reps)
    for rep in range(reps):
        u = np.sort(rng_for_replication(seed, rep).random(n))
        values[rep] = np.sum((u - grid) ** 2) + 1.0 / (12.0 * n)
    values.sort()
    table = CvmCalibration(n=n, reps=reps, seed=seed, values=values)
    if cache_dir is not None:
        path = _cache_path(Path(cache_dir), n, reps, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(table.to_json_dict()))
    return table


def cvm_test(sample: np.ndarray, alpha: float, calibration: CvmCalibration) -> TestReport:
    x = _validate_sample(sample)
    if x.size != calibration.n:
        raise ConfigError(f"calibration is for n={calibration.n}, sample has n={x.size}")
    t_sq = cvm_statistic(x)
    scaled = x.size * t_sq
    threshold = calibration.critical_value(alpha)
    return TestReport(
        family="cvm",
        statistic=t_sq,
        standardized=scaled,  # n T^2, the scale the critical value lives on
        threshold=threshold,
        alpha=alpha,
        reject=bool(scaled > threshold),
        n=x.size,
        details={"calibration_reps": calibration.reps, "calibration_seed": calibration.seed},
    )


@dataclass(frozen=True)
class MarginReport:
    """n T^2(F - F_0) together with the density-floor check 1 + f > delta."""

    margin: float
    min_density: float
    delta: float

    @property
    def b1_ok(self) -> bool:
        return self.min_density > self.delta


def consistency_margin(theta: Spectrum, n: int, delta: float = 0.0, grid: int = 4096) -> MarginReport:
    if n < 1:
        raise ConfigError("n must be positive")
    margin = n * cvm_population(theta)
    _, dens = density_grid(theta, grid + 1)
    return MarginReport(margin=float(margin), min_density=float(dens.min()), delta=delta)
