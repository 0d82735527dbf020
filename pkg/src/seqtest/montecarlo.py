"""Replication-seeded Monte Carlo engine over the five test families.

Every replication ``rep`` of a run draws from ``rng_for_replication(seed,
rep)``, so the stream a replication sees is a pure function of (seed, rep):
rejection counts are identical no matter how replications are sliced across
workers, and partial counts add associatively.  Wall time is measured but
kept out of every serialized output for byte-reproducibility.

The per-family fast paths below reproduce the reference implementations
draw-for-draw (same generator call order, same floating-point expression
shapes as the ``*_test`` functions); the unit tests pin that equivalence.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import chisq as chisq_mod
from . import cvm as cvm_mod
from . import design as design_mod
from . import kernels as kernels_mod
from . import quadratic as quad_mod
from .errors import ConfigError
from .report import normal_cdf, upper_quantile
from .sampling import MIN_DENSITY, cdf_grid, min_density, rng_for_replication
from .spectra import Spectrum

FAMILIES = ("quadratic", "kernel", "chisq", "cvm", "minimax")

_KERNELS = {
    "box": kernels_mod.box_kernel,
    "triangle": kernels_mod.triangle_kernel,
    "epanechnikov": kernels_mod.epanechnikov_kernel,
}

_PARAM_KEYS = {
    "quadratic": {"gamma", "j_max", "kappa_sq"},
    "kernel": {"kernel", "h", "j_max"},
    "chisq": {"k"},
    "cvm": {"calibration_reps", "calibration_seed", "cache_dir"},
    "minimax": {"s", "p0", "rho_n", "j_max", "lambdas", "least_favorable"},
}

_THETA_BASIS = {
    "quadratic": "cosine",
    "minimax": "cosine",
    "cvm": "cosine",
    "kernel": "complex-exponential",
    "chisq": "complex-exponential",
}

# calibration tables must not share streams with test replications
DEFAULT_CALIBRATION_SEED = 1000003


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo run: a family, a truth, and replication bookkeeping.

    ``theta`` is the true signal/perturbation (None = the null).  Family
    specifics ride in ``params``:

    - quadratic: ``kappa_sq`` (explicit weights) or ``gamma`` (+ ``j_max``)
    - kernel: ``kernel`` name, ``h``, optional ``j_max``
    - chisq: ``k`` cells
    - cvm: optional ``calibration_reps`` / ``calibration_seed`` / ``cache_dir``
    - minimax: ``s``, ``p0``, ``rho_n``, optional ``j_max`` / ``lambdas`` /
      ``least_favorable`` (run against the design's own worst case)
    """

    family: str
    n: int
    reps: int
    seed: int
    alpha: float = 0.05
    sigma: float = 1.0
    theta: Spectrum | None = None
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1 or self.reps < 1:
            raise ConfigError("n and reps must be positive integers")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.sigma <= 0.0:
            raise ConfigError("sigma must be positive")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        unknown = set(self.params) - _PARAM_KEYS[self.family]
        if unknown:
            raise ConfigError(f"unknown params for family {self.family!r}: {sorted(unknown)}")
        if self.theta is not None and self.theta.basis != _THETA_BASIS[self.family]:
            raise ConfigError(
                f"family {self.family!r} expects theta in the {_THETA_BASIS[self.family]!r} basis"
            )
        p = self.params
        if self.family == "quadratic":
            if ("kappa_sq" in p) == ("gamma" in p):
                raise ConfigError("quadratic family needs exactly one of 'kappa_sq' or 'gamma'")
        elif self.family == "kernel":
            if p.get("kernel") not in _KERNELS:
                raise ConfigError(f"kernel must be one of {sorted(_KERNELS)}")
            if not 0.0 < float(p.get("h", 0.0)) < 1.0:
                raise ConfigError("kernel family needs a bandwidth h in (0, 1)")
        elif self.family == "chisq":
            if int(p.get("k", 0)) < 2:
                raise ConfigError("chisq family needs k >= 2 cells")
        elif self.family == "minimax":
            for key in ("s", "p0", "rho_n"):
                if key not in p:
                    raise ConfigError(f"minimax family needs param {key!r}")
            if p.get("least_favorable") and self.theta is not None:
                raise ConfigError("give either an explicit theta or least_favorable, not both")

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "theta": None if self.theta is None else self.theta.to_json_dict(),
            "params": dict(self.params),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "ExperimentConfig":
        try:
            theta = data.get("theta")
            return ExperimentConfig(
                family=data["family"],
                n=int(data["n"]),
                reps=int(data["reps"]),
                seed=int(data["seed"]),
                alpha=float(data.get("alpha", 0.05)),
                sigma=float(data.get("sigma", 1.0)),
                theta=None if theta is None else Spectrum.from_json_dict(theta),
                params=dict(data.get("params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed experiment config: {exc}") from exc

    def config_hash(self) -> str:
        canon = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class MonteCarloSummary:
    experiment: str
    reps: int
    rejections: int
    seed: int
    wall_time_s: float

    @property
    def rate(self) -> float:
        return self.rejections / self.reps

    @property
    def std_err(self) -> float:
        return math.sqrt(self.rate * (1.0 - self.rate) / self.reps)

    def to_json_dict(self) -> dict:
        # wall_time_s stays out: outputs are byte-identical across machines
        return {
            "experiment": self.experiment,
            "reps": self.reps,
            "rejections": self.rejections,
            "rate": self.rate,
            "std_err": self.std_err,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MonteCarloPlan:
    """Compiled run: count rejections over a replication range."""

    count: Callable[[int, int], int]
    predicted_type2: float | None
    details: dict


def _padded(theta: Spectrum | None, j_max: int, basis: str) -> np.ndarray:
    dtype = complex if basis == "complex-exponential" else float
    if theta is None:
        return np.zeros(j_max if basis != "complex-exponential" else j_max + 1, dtype=dtype)
    coeffs = np.asarray(theta.coeffs, dtype=dtype)
    size = j_max + 1 if basis == "complex-exponential" else j_max
    if coeffs.size > size:
        raise ConfigError(f"signal support {coeffs.size} exceeds the run's truncation {size}")
    out = np.zeros(size, dtype=dtype)
    out[: coeffs.size] = coeffs
    return out


def _iid_sampler(theta: Spectrum | None, n: int, grid_points: int = 8193):
    """Per-replication draw matching sample_iid's stream exactly."""
    if theta is None:
        return lambda rng: rng.random(n)
    floor = min_density(theta, points=2 * grid_points - 1)
    if floor < MIN_DENSITY:
        raise ConfigError(f"1 + f is not bounded away from zero (min {floor:.3e}); not a usable density")
    x, cdf = cdf_grid(theta, grid_points)
    return lambda rng: np.interp(rng.random(n), cdf, x)


def _plan_quadratic(cfg: ExperimentConfig) -> MonteCarloPlan:
    p = cfg.params
    if "kappa_sq" in p:
        kq = np.asarray(p["kappa_sq"], dtype=float)
        if kq.ndim != 1 or kq.size == 0 or np.any(kq < 0):
            raise ConfigError("kappa_sq must be a non-empty non-negative 1-d array")
    else:
        kq = quad_mod.example_coefficients(cfg.n, float(p["gamma"]), int(p.get("j_max", 4096)))
    j_max = kq.size
    th = _padded(cfg.theta, j_max, "cosine")
    n, sigma, alpha = cfg.n, cfg.sigma, cfg.alpha
    center = sigma**2 / n * float(np.sum(kq))
    sd0 = quad_mod.null_sd(kq, n, sigma)
    x_alpha = upper_quantile(alpha)
    noise_scale = sigma / math.sqrt(n)
    seed = cfg.seed

    def count(lo: int, hi: int) -> int:
        c = 0
        for rep in range(lo, hi):
            y = th + noise_scale * rng_for_replication(seed, rep).standard_normal(j_max)
            t_n = float(np.dot(kq, y**2) - center)
            c += (t_n / sd0) > x_alpha
        return c

    drift = quad_mod.drift(th, kq, n, sigma)
    predicted = quad_mod.predicted_type2_quadratic(th, kq, n, sigma, alpha)
    return MonteCarloPlan(count, predicted, {"j_max": j_max, "drift": drift})


def _plan_minimax(cfg: ExperimentConfig) -> MonteCarloPlan:
    p = cfg.params
    lambdas = p.get("lambdas")
    if lambdas is not None:
        dsg = design_mod.solve_inverse_design(
            float(p["s"]), float(p["p0"]), float(p["rho_n"]), cfg.n, cfg.sigma,
            np.asarray(lambdas, dtype=float), j_max=p.get("j_max"),
        )
    else:
        dsg = design_mod.solve_design(
            float(p["s"]), float(p["p0"]), float(p["rho_n"]), cfg.n, cfg.sigma,
            j_max=p.get("j_max"),
        )
    if p.get("least_favorable"):
        th = design_mod.least_favorable(dsg).coeffs
        predicted = design_mod.predicted_type2_minimax(dsg, cfg.alpha)
        drift = math.sqrt(dsg.a_n / 2.0)
    else:
        th = _padded(cfg.theta, dsg.j_max, "cosine")
        mean_shift = dsg.null_mean() - dsg.c_n + quad_mod.noncentrality(th, dsg.kappa_j2, cfg.n, cfg.sigma)
        drift = mean_shift / dsg.null_sd()
        predicted = float(normal_cdf(upper_quantile(cfg.alpha) - drift))
    n, sigma = cfg.n, cfg.sigma
    x_alpha = upper_quantile(cfg.alpha)
    prefactor = sigma**-4 * n**2
    kq, c_n, sd = dsg.kappa_j2, dsg.c_n, dsg.null_sd()
    noise_scale = sigma / math.sqrt(n)
    seed, j_max = cfg.seed, dsg.j_max

    def count(lo: int, hi: int) -> int:
        c = 0
        for rep in range(lo, hi):
            y = th + noise_scale * rng_for_replication(seed, rep).standard_normal(j_max)
            t_n = float(prefactor * np.sum(kq * y**2))
            c += ((t_n - c_n) / sd) > x_alpha
        return c

    details = {"k_n": dsg.k_n, "a_n": dsg.a_n, "c_n": dsg.c_n, "j_max": dsg.j_max, "drift": drift}
    return MonteCarloPlan(count, predicted, details)


def _plan_kernel(cfg: ExperimentConfig) -> MonteCarloPlan:
    p = cfg.params
    kernel = _KERNELS[p["kernel"]]()
    h = float(p["h"])
    theta_support = 0 if cfg.theta is None else cfg.theta.coeffs.size - 1
    j_max = int(p.get("j_max", max(1024, theta_support)))
    if theta_support > j_max:
        raise ConfigError(f"signal support {theta_support} exceeds the run's truncation {j_max}")
    consts = kernels_mod.kernel_constants(kernel)
    kh = kernels_mod.transform_values(kernel, h, j_max)
    w = kh**2
    th = _padded(cfg.theta, j_max, "complex-exponential")
    n, sigma, alpha = cfg.n, cfg.sigma, cfg.alpha
    scale = n * math.sqrt(h) / sigma**2 / math.sqrt(consts.kappa_sq)
    center = sigma**2 / (n * h) * consts.l2_norm_sq
    x_alpha = upper_quantile(alpha)
    noise_scale = sigma / math.sqrt(n)
    seed = cfg.seed
    size = j_max + 1

    def count(lo: int, hi: int) -> int:
        c = 0
        for rep in range(lo, hi):
            rng = rng_for_replication(seed, rep)
            re = rng.standard_normal(size)
            im = rng.standard_normal(size)
            noise = (re + 1j * im) / math.sqrt(2.0)
            noise[0] = re[0]
            y = th + noise_scale * noise
            mags = np.abs(y) ** 2
            energy = float(w[0] * mags[0] + 2.0 * np.sum(w[1:] * mags[1:]))
            c += (scale * (energy - center)) > x_alpha
        return c

    theta_spec = cfg.theta if cfg.theta is not None else Spectrum("complex-exponential", np.zeros(1, dtype=complex))
    predicted = kernels_mod.predicted_type2_kernel(theta_spec, kernel, h, n, sigma, alpha, consts, kh)
    t1n = kernels_mod.bias_functional(theta_spec, kernel, h, kh)
    drift = scale * t1n
    return MonteCarloPlan(count, predicted, {"j_max": j_max, "h": h, "drift": drift, "t1n": t1n})


def _plan_chisq(cfg: ExperimentConfig) -> MonteCarloPlan:
    k = int(cfg.params["k"])
    draw = _iid_sampler(cfg.theta, cfg.n)
    n, alpha = cfg.n, cfg.alpha
    x_alpha = upper_quantile(alpha)
    root_2k = math.sqrt(2.0 * k)
    seed = cfg.seed

    def count(lo: int, hi: int) -> int:
        c = 0
        for rep in range(lo, hi):
            xs = draw(rng_for_replication(seed, rep))
            counts = np.bincount(np.minimum((xs * k).astype(np.int64), k - 1), minlength=k)
            t_n = float(k * n * np.sum((counts / n - 1.0 / k) ** 2))
            c += ((t_n - (k - 1)) / root_2k) > x_alpha
        return c

    if cfg.theta is not None:
        t_f = chisq_mod.population_chisq_functional(cfg.theta, k, n)
        predicted = chisq_mod.predicted_type2_chisq(cfg.theta, k, n, alpha)
    else:
        t_f, predicted = 0.0, 1.0 - alpha
    return MonteCarloPlan(count, predicted, {"k": k, "drift": t_f / root_2k})


def _plan_cvm(cfg: ExperimentConfig) -> MonteCarloPlan:
    p = cfg.params
    calibration = cvm_mod.calibrate_cvm(
        cfg.n,
        reps=int(p.get("calibration_reps", 20000)),
        seed=int(p.get("calibration_seed", DEFAULT_CALIBRATION_SEED)),
        cache_dir=p.get("cache_dir"),
    )
    critical = calibration.critical_value(cfg.alpha)
    draw = _iid_sampler(cfg.theta, cfg.n)
    n = cfg.n
    grid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    seed = cfg.seed

    def count(lo: int, hi: int) -> int:
        c = 0
        for rep in range(lo, hi):
            xs = np.sort(draw(rng_for_replication(seed, rep)))
            omega_sq = float(np.sum((xs - grid) ** 2) + 1.0 / (12.0 * n))
            # n * (omega_sq / n): keep the reference path's rounding exactly
            c += (n * (omega_sq / n)) > critical
        return c

    margin = 0.0 if cfg.theta is None else n * cvm_mod.cvm_population(cfg.theta)
    details = {"critical_value": critical, "margin": margin, "calibration_reps": calibration.reps}
    return MonteCarloPlan(count, None, details)


_PLANNERS = {
    "quadratic": _plan_quadratic,
    "kernel": _plan_kernel,
    "chisq": _plan_chisq,
    "cvm": _plan_cvm,
    "minimax": _plan_minimax,
}


def build_plan(config: ExperimentConfig) -> MonteCarloPlan:
    config.validate()
    return _PLANNERS[config.family](config)


def run_monte_carlo(
    config: ExperimentConfig,
    threads: int = 1,
    plan: MonteCarloPlan | None = None,
) -> MonteCarloSummary:
    if plan is None:
        plan = build_plan(config)
    start = time.perf_counter()
    if threads <= 1 or config.reps < 4:
        rejections = plan.count(0, config.reps)
    else:
        pieces = min(4 * threads, config.reps)
        edges = np.linspace(0, config.reps, pieces + 1).astype(int)
        spans = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rejections = sum(pool.map(lambda span: plan.count(*span), spans))
    wall = time.perf_counter() - start
    return MonteCarloSummary(
        experiment=f"{config.family}-{config.config_hash()}",
        reps=config.reps,
        rejections=int(rejections),
        seed=config.seed,
        wall_time_s=wall,
    )
