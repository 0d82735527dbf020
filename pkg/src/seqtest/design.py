"""Asymptotically minimax detection designs for the Gaussian sequence model.

Observing y_j = theta_j + (sigma / sqrt(n)) xi_j, the alternative set is the
Besov-type ball of smoothness s and budget P0 intersected with the shell
||theta||^2 >= rho_n.  The design solves the coupled equations

    (1 / 2s) k^(1+2s) kappa^2 = P0,          k kappa^2 + P0 k^(-2s) = rho_n

for the breakpoint k_n and plateau kappa_n^2, extends the weights past the
breakpoint by the ball's boundary profile kappa_j^2 = 2 s P0 j^(-1-2s), and
uses the weighted energy statistic

    T_n = sigma^-4 n^2 sum_j kappa_j^2 y_j^2.

Under the null E T_n = sigma^-2 n sum_j kappa_j^2 (which matches the
centering C_n = sigma^-2 n rho_n up to the solver residual) and
Var T_n = 2 A_n with A_n = sigma^-4 n^2 sum_j kappa_j^4, so the test rejects
when (T_n - C_n) / sqrt(2 A_n) > x_alpha and its minimax type II error is
Phi(x_alpha - sqrt(A_n / 2)).  The least favorable signal is theta_j = kappa_j.

The inverse variant observes y_j = lambda_j theta_j + noise.  Writing the
least favorable signal as theta_j^2 = a lambda_j^-4 up to the breakpoint,
continuity with the ball boundary fixes a = 2 s P0 k^(-1-2s) lambda_k^4 and
the radius equation a sum_{j<=k} lambda_j^-4 + P0 k^(-2s) = rho_n pins k.
The statistic weights become kappa_j^2 = lambda_j^2 theta_j^2 (the energy
each y_j carries about theta), and the test centers on the exact null mean
since no closed-form centering constant is available here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, InfeasibleDesignError, NumericError
from .report import TestReport, normal_cdf, upper_quantile
from .sampling import SequenceObservation, rng_for_replication
from .spectra import BesovBall, Spectrum, besov_seminorm

DEFAULT_MIN_TRUNCATION = 1024
TRUNCATION_MULTIPLIER = 20


@dataclass(frozen=True)
class DetectionDesign:
    """Solved weight profile for the energy test.

    ``kappa_j2[p]`` is the weight on y_{p+1}; ``kappa_n2`` its value at the
    breakpoint.  ``c_n`` is the centering the test subtracts: sigma^-2 n rho_n
    for the direct design, the exact null mean for the inverse one.
    ``eq_budget_residual`` / ``eq_radius_residual`` are the relative residuals
    of the two design equations after integer rounding of k_n; rounding keeps
    the radius residual below (2s+1)/k_n.
    """

    s: float
    p0: float
    rho_n: float
    n: int
    sigma: float
    k_n: int
    kappa_n2: float
    kappa_j2: np.ndarray
    a_n: float
    c_n: float
    j_max: int
    eq_budget_residual: float
    eq_radius_residual: float
    lambdas: np.ndarray | None = None

    @property
    def residual_bound(self) -> float:
        return (2.0 * self.s + 1.0) / self.k_n

    def null_mean(self) -> float:
        """Exact E[T_n] under the null for the stored truncation."""
        return float(self.n / self.sigma**2 * np.sum(self.kappa_j2))

    def null_sd(self) -> float:
        return math.sqrt(2.0 * self.a_n)

    def tail_truncation_error(self) -> float:
        """Upper bound on the weight mass dropped beyond j_max."""
        return self.p0 * (self.k_n / self.j_max) ** (2.0 * self.s)

    def to_json_dict(self) -> dict:
        out = {
            "s": self.s,
            "p0": self.p0,
            "rho_n": self.rho_n,
            "n": self.n,
            "sigma": self.sigma,
            "k_n": self.k_n,
            "kappa_n2": self.kappa_n2,
            "kappa_j2": [float(v) for v in self.kappa_j2],
            "a_n": self.a_n,
            "c_n": self.c_n,
            "j_max": self.j_max,
            "eq_budget_residual": self.eq_budget_residual,
            "eq_radius_residual": self.eq_radius_residual,
        }
        if self.lambdas is not None:
            out["lambdas"] = [float(v) for v in self.lambdas]
        return out


def _validate_common(s: float, p0: float, rho_n: float, n: int, sigma: float) -> None:
    if s <= 0 or p0 <= 0 or rho_n <= 0 or sigma <= 0:
        raise ConfigError("s, P0, rho_n, sigma must all be positive")
    if n < 1:
        raise ConfigError("n must be a positive integer")


def _bisect_decreasing(g: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Root of a decreasing g on [lo, hi]; assumes g(lo) >= 0 >= g(hi)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol * max(1.0, mid):
            return mid
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _tail_profile(s: float, p0: float, j: np.ndarray) -> np.ndarray:
    return 2.0 * s * p0 * np.power(j, -(1.0 + 2.0 * s))


def solve_design(
    s: float,
    p0: float,
    rho_n: float,
    n: int,
    sigma: float = 1.0,
    j_max: int | None = None,
    tol: float = 1e-9,
) -> DetectionDesign:
    _validate_common(s, p0, rho_n, n, sigma)

    # radius equation with kappa^2 eliminated: (2s+1) P0 k^-2s = rho_n
    def g(k: float) -> float:
        return (2.0 * s + 1.0) * p0 * k ** (-2.0 * s) - rho_n

    if g(1.0) < 0.0:
        raise InfeasibleDesignError("rho_n exceeds (2s+1) P0: no breakpoint k >= 1")
    hi = 2.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 2.0**53:
            raise InfeasibleDesignError("rho_n too small: breakpoint overflows")
    k_real = _bisect_decreasing(g, hi / 2.0, hi, tol)
    k_n = max(1, int(round(k_real)))
    if j_max is None:
        j_max = max(TRUNCATION_MULTIPLIER * k_n, DEFAULT_MIN_TRUNCATION)
    if k_n > j_max:
        raise InfeasibleDesignError(f"breakpoint k_n={k_n} exceeds truncation j_max={j_max}")

    kappa_n2 = 2.0 * s * p0 * k_n ** (-(1.0 + 2.0 * s))
    j = np.arange(1, j_max + 1, dtype=float)
    kappa_j2 = np.where(j <= k_n, kappa_n2, _tail_profile(s, p0, j))

    budget_res = abs(k_n ** (1.0 + 2.0 * s) * kappa_n2 / (2.0 * s) - p0) / p0
    radius_res = abs(k_n * kappa_n2 + p0 * k_n ** (-2.0 * s) - rho_n) / rho_n
    bound = (2.0 * s + 1.0) / k_n
    if radius_res > bound + tol:
        raise NumericError(f"radius residual {radius_res:.3e} exceeds the rounding bound {bound:.3e}")

    a_n = sigma**-4 * n**2 * float(np.sum(kappa_j2**2))
    return DetectionDesign(
        s=s,
        p0=p0,
        rho_n=rho_n,
        n=n,
        sigma=sigma,
        k_n=k_n,
        kappa_n2=kappa_n2,
        kappa_j2=kappa_j2,
        a_n=a_n,
        c_n=n * rho_n / sigma**2,
        j_max=j_max,
        eq_budget_residual=budget_res,
        eq_radius_residual=radius_res,
    )


def solve_inverse_design(
    s: float,
    p0: float,
    rho_n: float,
    n: int,
    sigma: float,
    lambdas: np.ndarray,
    j_max: int | None = None,
    tol: float = 1e-9,
) -> DetectionDesign:
    _validate_common(s, p0, rho_n, n, sigma)
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < 2:
        raise ConfigError("lambdas must be a 1-d sequence of at least two eigenvalues")
    if np.any(lam == 0.0) or np.any(~np.isfinite(lam)):
        raise ConfigError("eigenvalues must be finite and nonzero")
    lam = np.abs(lam)
    if j_max is None:
        j_max = lam.size
    if j_max > lam.size:
        raise ConfigError("truncation exceeds the provided eigenvalue sequence")
    lam = lam[:j_max]

    j = np.arange(1, j_max + 1, dtype=float)
    inv4_cumsum = np.cumsum(lam**-4)

    def a_of(k: int) -> float:
        # continuity of the least favorable profile at the breakpoint
        return 2.0 * s * p0 * k ** (-(1.0 + 2.0 * s)) * lam[k - 1] ** 4

    def radius_gap(k: int) -> float:
        return a_of(k) * inv4_cumsum[k - 1] + p0 * float(k) ** (-2.0 * s) - rho_n

    gaps = np.array([radius_gap(k) for k in range(1, j_max + 1)])
    if gaps[0] < 0.0:
        raise InfeasibleDesignError("rho_n too large for the eigenvalue sequence: no breakpoint k >= 1")
    below = np.nonzero(gaps <= 0.0)[0]
    if below.size == 0:
        raise InfeasibleDesignError(f"no breakpoint within truncation j_max={j_max}")
    k_hi = int(below[0]) + 1
    k_n = min((k_hi - 1, k_hi), key=lambda k: abs(radius_gap(k)) if k >= 1 else math.inf)

    a = a_of(k_n)
    kappa_j2 = np.where(j <= k_n, a * lam**-2, _tail_profile(s, p0, j) * lam**2)
    kappa_n2 = float(kappa_j2[k_n - 1])

    budget_res = abs(a * lam[k_n - 1] ** -4 - 2.0 * s * p0 * k_n ** (-(1.0 + 2.0 * s))) / (
        2.0 * s * p0 * k_n ** (-(1.0 + 2.0 * s))
    )
    radius_res = abs(radius_gap(k_n)) / rho_n
    bound = (2.0 * s + 1.0) / k_n
    if radius_res > bound + tol:
        raise NumericError(f"radius residual {radius_res:.3e} exceeds the rounding bound {bound:.3e}")

    a_n = sigma**-4 * n**2 * float(np.sum(kappa_j2**2))
    c_n = float(n / sigma**2 * np.sum(kappa_j2))  # exact null mean; see module docstring
    return DetectionDesign(
        s=s,
        p0=p0,
        rho_n=rho_n,
        n=n,
        sigma=sigma,
        k_n=k_n,
        kappa_n2=kappa_n2,
        kappa_j2=kappa_j2,
        a_n=a_n,
        c_n=c_n,
        j_max=j_max,
        eq_budget_residual=budget_res,
        eq_radius_residual=radius_res,
        lambdas=lam,
    )


def _check_observation(obs: SequenceObservation, design: DetectionDesign) -> np.ndarray:
    if obs.y.basis != "cosine":
        raise ConfigError("the energy test reads real sequence observations (cosine basis)")
    if obs.y.coeffs.size != design.j_max:
        raise ConfigError(f"observation length {obs.y.coeffs.size} != design truncation {design.j_max}")
    if obs.n != design.n or obs.sigma != design.sigma:
        raise ConfigError("observation (n, sigma) must match the design")
    return np.asarray(obs.y.coeffs, dtype=float)


def minimax_statistic(obs: SequenceObservation, design: DetectionDesign) -> float:
    y = _check_observation(obs, design)
    return float(design.sigma**-4 * design.n**2 * np.sum(design.kappa_j2 * y**2))


def predicted_type2_minimax(design: DetectionDesign, alpha: float) -> float:
    return normal_cdf(upper_quantile(alpha) - math.sqrt(design.a_n / 2.0))


def minimax_test(obs: SequenceObservation, design: DetectionDesign, alpha: float) -> TestReport:
    t_n = minimax_statistic(obs, design)
    z = (t_n - design.c_n) / design.null_sd()
    x_alpha = upper_quantile(alpha)
    return TestReport(
        family="minimax",
        statistic=t_n,
        standardized=z,
        threshold=x_alpha,
        alpha=alpha,
        reject=bool(z > x_alpha),
        n=design.n,
        predicted_type2=predicted_type2_minimax(design, alpha),
        details={"k_n": design.k_n, "a_n": design.a_n, "c_n": design.c_n},
    )


def least_favorable(design: DetectionDesign) -> Spectrum:
    """theta*_j = kappa_j: the boundary signal the design is tuned against."""
    return Spectrum(basis="cosine", coeffs=np.sqrt(design.kappa_j2))


def _resolve_delta(design: DetectionDesign, delta: float) -> DetectionDesign:
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    if design.lambdas is not None:
        return solve_inverse_design(
            design.s,
            design.p0 * (1.0 - delta),
            design.rho_n * (1.0 + delta),
            design.n,
            design.sigma,
            design.lambdas,
            j_max=design.j_max,
        )
    return solve_design(
        design.s,
        design.p0 * (1.0 - delta),
        design.rho_n * (1.0 + delta),
        design.n,
        design.sigma,
        j_max=design.j_max,
    )


def prior_profile(design: DetectionDesign, delta: float) -> np.ndarray:
    """Prior variances kappa_j^2(delta): the shrunken-ball design's weights,
    hard-truncated beyond k_n / delta."""
    shifted = _resolve_delta(design, delta)
    profile = shifted.kappa_j2.copy()
    cut = int(design.k_n / delta)
    profile[cut:] = 0.0
    return profile


@dataclass(frozen=True)
class PriorDraw:
    eta: Spectrum
    norm_sq: float
    seminorm: float
    in_alternative: bool


def sample_bayes_prior(design: DetectionDesign, delta: float, seed: int, rep: int = 0) -> PriorDraw:
    """One Gaussian draw eta_j ~ N(0, kappa_j^2(delta)) and its V_n membership.

    The noise vector is drawn first and then scaled, so for a fixed seed the
    draw is continuous in delta (and in the design parameters).
    """
    profile = prior_profile(design, delta)
    z = rng_for_replication(seed, rep).standard_normal(profile.size)
    eta = Spectrum(basis="cosine", coeffs=np.sqrt(profile) * z)
    norm_sq = eta.norm_sq()
    seminorm = besov_seminorm(eta, design.s)
    ball = BesovBall(s=design.s, p0=design.p0)
    member = bool(norm_sq >= design.rho_n and ball.contains(eta))
    return PriorDraw(eta=eta, norm_sq=float(norm_sq), seminorm=float(seminorm), in_alternative=member)
