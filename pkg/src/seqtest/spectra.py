"""Coefficient sequences, smoothness balls, and the metric projection onto them.

A Spectrum holds the coefficients of a mean-zero perturbation f of the uniform
density (or of a signal in the Gaussian sequence model) in one of three
orthonormal systems on (0, 1):

* ``cosine``:  phi_j(x) = sqrt(2) cos(pi j x), j = 1..J; real coefficients,
  ``coeffs[p]`` belongs to frequency j = p + 1.
* ``complex-exponential``:  e_j(x) = exp(2 pi i j x), j in Z; only j = 0..J is
  stored (``coeffs[p]`` belongs to j = p) and the negative half is implied by
  conjugate symmetry theta_{-j} = conj(theta_j).  ``coeffs[0]`` must be real
  and is zero for density perturbations.
* ``haar``:  psi_{i,q}(x) = 2^{i/2} psi(2^i x - q) with psi = 1 on (0, 1/2)
  and -1 on (1/2, 1); level-major order, ``coeffs[2^i - 1 + q]`` belongs to
  (i, q).

The smoothness ball with index s > 0 and budget p0 > 0 is the set of
sequences whose tail energy decays like k^{-2s}:

    max_k  k^{2s} * sum_{frequency >= k} |theta_j|^2  <=  p0.

For the complex basis the tail at k sums both signs, |j| >= k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, NumericError

BASES = ("cosine", "complex-exponential", "haar")

# Families whose optimal tuning follows the k_n ~ n^{2-4r} schedule.
FAMILIES_QUADRATIC_RATE = ("quadratic", "kernel", "chisq")


@dataclass(frozen=True)
class Spectrum:
    """A coefficient sequence in a named orthonormal system."""

    basis: str
    coeffs: np.ndarray

    def __post_init__(self):
        if self.basis not in BASES:
            raise ConfigError(f"unknown basis {self.basis!r}; expected one of {BASES}")
        want_complex = self.basis == "complex-exponential"
        arr = np.asarray(self.coeffs, dtype=complex if want_complex else float)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("coeffs must be a non-empty 1-d array")
        if not np.all(np.isfinite(arr.view(float))):
            raise ConfigError("coeffs must be finite")
        if want_complex and abs(arr[0].imag) > 0:
            raise ConfigError("complex-exponential coeffs[0] (the j=0 term) must be real")
        object.__setattr__(self, "coeffs", arr)

    @property
    def max_frequency(self) -> int:
        if self.basis == "complex-exponential":
            return self.coeffs.size - 1
        return self.coeffs.size

    def frequency_energies(self) -> np.ndarray:
        """Energy attached to frequency k = 1..J (index 0 of the result is k=1).

        For the complex basis the entry at k counts both signs, 2|theta_k|^2;
        the j = 0 component belongs to no positive frequency and is excluded.
        """
        if self.basis == "complex-exponential":
            return 2.0 * np.abs(self.coeffs[1:]) ** 2
        return np.asarray(self.coeffs, dtype=float) ** 2

    def norm_sq(self) -> float:
        """Squared L2 norm of the expansion, including the j = 0 term."""
        total = float(np.sum(self.frequency_energies()))
        if self.basis == "complex-exponential":
            total += float(np.real(self.coeffs[0]) ** 2)
        return total

    def signed_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Full signed index set (-J..J) and coefficients for the complex basis."""
        if self.basis != "complex-exponential":
            raise ConfigError("signed_pairs is only defined for the complex-exponential basis")
        j_max = self.max_frequency
        js = np.arange(-j_max, j_max + 1)
        vals = np.concatenate([np.conj(self.coeffs[:0:-1]), self.coeffs])
        return js, vals

    def to_json_dict(self) -> dict:
        if self.basis == "complex-exponential":
            coeffs = [[float(c.real), float(c.imag)] for c in self.coeffs]
        else:
            coeffs = [float(c) for c in self.coeffs]
        return {"basis": self.basis, "coeffs": coeffs}

    @staticmethod
    def from_json_dict(data: dict) -> "Spectrum":
        try:
            basis = data["basis"]
            raw = data["coeffs"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"spectrum JSON needs 'basis' and 'coeffs': {exc}") from exc
        if basis == "complex-exponential":
            try:
                arr = np.array([complex(re, im) for re, im in raw])
            except (TypeError, ValueError) as exc:
                raise ConfigError("complex coeffs must be [re, im] pairs") from exc
        else:
            arr = np.asarray(raw, dtype=float)
        return Spectrum(basis=basis, coeffs=arr)


def tail_energy_profile(spec: Spectrum) -> np.ndarray:
    """tail[k-1] = sum of |theta_j|^2 over frequencies >= k, for k = 1..J."""
    energies = spec.frequency_energies()
    return np.cumsum(energies[::-1])[::-1]


def besov_seminorm(spec: Spectrum, s: float) -> float:
    """max over integer k >= 1 of k^{2s} * tail energy at k.

    The supremum over real thresholds lambda > 0 of lambda^{2s} * tail(lambda)
    is attained by letting lambda increase toward an integer k, so the integer
    maximum equals the supremum.
    """
    if s <= 0:
        raise ConfigError("smoothness index s must be positive")
    tails = tail_energy_profile(spec)
    k = np.arange(1, tails.size + 1, dtype=float)
    return float(np.max(k ** (2.0 * s) * tails))


@dataclass(frozen=True)
class BesovBall:
    """Smoothness ball {theta : besov_seminorm(theta, s)^ <= p0}."""

    s: float
    p0: float  # budget for the squared tail profile, not a radius

    def __post_init__(self):
        if self.s <= 0 or self.p0 <= 0:
            raise ConfigError("BesovBall requires s > 0 and p0 > 0")

    def tail_budget(self, k: np.ndarray | int) -> np.ndarray | float:
        return self.p0 * np.asarray(k, dtype=float) ** (-2.0 * self.s)

    def contains(self, spec: Spectrum, rel_tol: float = 1e-12) -> bool:
        return besov_seminorm(spec, self.s) <= self.p0 * (1.0 + rel_tol)


def first_violated_tail(spec: Spectrum, ball: BesovBall) -> int | None:
    """Smallest k whose tail constraint k^{2s} tail(k) <= p0 fails, or None."""
    tails = tail_energy_profile(spec)
    k = np.arange(1, tails.size + 1, dtype=float)
    bad = k ** (2.0 * ball.s) * tails > ball.p0 * (1.0 + 1e-15)
    idx = np.flatnonzero(bad)
    return int(idx[0]) + 1 if idx.size else None


def _dykstra_tail_projection(
    w: np.ndarray,
    budgets: np.ndarray,
    tol: float,
    max_cycles: int,
) -> np.ndarray:
    """Dykstra's cyclic scheme for the intersection of the nested tail balls.

    Constraint k (0-based index k-1) is {x : sum_{p >= k-1} x_p^2 <= budgets[k-1]}.
    The single-set projection is a closed-form rescaling of the tail block.
    Dykstra's correction vectors make the limit the metric projection of w,
    not merely a feasible point.
    """
    j = w.size
    x = w.astype(float).copy()
    corrections = np.zeros((j, j))  # row k-1 holds the correction for set k; tails are short
    for _ in range(max_cycles):
        max_move = 0.0
        for k in range(j):
            y = x.copy()
            y[k:] += corrections[k, k:]
            tail_sq = float(np.dot(y[k:], y[k:]))
            if tail_sq > budgets[k] and tail_sq > 0.0:
                scale = math.sqrt(budgets[k] / tail_sq)
                x_new = y.copy()
                x_new[k:] *= scale
            else:
                x_new = y
            corrections[k, k:] = y[k:] - x_new[k:]
            max_move = max(max_move, float(np.max(np.abs(x_new - x))) if j else 0.0)
            x = x_new
        tails = np.cumsum(x[::-1] ** 2)[::-1]
        feasible = np.all(tails <= budgets * (1.0 + 1e-12) + 1e-300)
        if feasible and max_move < tol:
            return x
    raise NumericError(
        f"tail-ball projection did not converge in {max_cycles} cycles (last move {max_move:.3e})"
    )


def project_besov(
    spec: Spectrum,
    ball: BesovBall,
    tol: float = 1e-11,
    max_cycles: int = 2000,
) -> Spectrum:
    """Metric (closest-point) projection onto the smoothness ball.

    Head exactness: every frequency below the first violated tail constraint
    is returned bit-for-bit unchanged.  No projection step can touch those
    coordinates at the optimum: each tail constraint only ever shrinks
    magnitudes, so a constraint with slack at the input keeps slack at the
    solution and its multiplier vanishes.
    """
    k_violated = first_violated_tail(spec, ball)
    if k_violated is None:
        return spec

    energies = spec.frequency_energies()
    w = np.sqrt(energies)
    budgets = ball.tail_budget(np.arange(1, w.size + 1))
    projected = _dykstra_tail_projection(w, np.asarray(budgets, dtype=float), tol, max_cycles)

    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(w > 0, projected / np.where(w > 0, w, 1.0), 0.0)
    scale[: k_violated - 1] = 1.0  # exact head, see docstring

    if spec.basis == "complex-exponential":
        coeffs = spec.coeffs.copy()
        coeffs[1:] = coeffs[1:] * scale
    else:
        coeffs = spec.coeffs * scale
    return Spectrum(basis=spec.basis, coeffs=coeffs)


def make_tail_alternative(
    m: int,
    c: float,
    s: float,
    basis: str = "cosine",
    j_max: int | None = None,
) -> Spectrum:
    """Equal-magnitude block on frequencies m..2m with m^{2s} * energy = c exactly.

    The block has m + 1 frequencies, each carrying energy c * m^{-2s} / (m+1),
    so the total L2 mass is c * m^{-2s} and the k = m tail constraint costs
    exactly c.  Constraints inside the block can bind slightly higher — the
    seminorm exceeds c by a bounded factor (32/27 at s = 1 in the large-m
    limit) — so c prices the block, it does not equal the seminorm.
    """
    if m < 1:
        raise ConfigError("block start m must be >= 1")
    if c <= 0 or s <= 0:
        raise ConfigError("tail alternative needs c > 0 and s > 0")
    top = 2 * m
    j = j_max if j_max is not None else top
    if j < top:
        raise ConfigError(f"j_max={j} cannot hold the block ending at {top}")
    per_freq = c * float(m) ** (-2.0 * s) / (m + 1)
    if basis == "cosine":
        coeffs = np.zeros(j)
        coeffs[m - 1 : top] = math.sqrt(per_freq)
    elif basis == "complex-exponential":
        coeffs = np.zeros(j + 1, dtype=complex)
        coeffs[m : top + 1] = math.sqrt(per_freq / 2.0)  # the mirrored half carries the rest
    else:
        raise ConfigError(f"tail alternatives are not defined for basis {basis!r}")
    return Spectrum(basis=basis, coeffs=coeffs)


@dataclass(frozen=True)
class CalibrationRates:
    """Separation rate exponent r and the tuning exponent of a test family.

    The separation radius scales like n^{-r}.  For the quadratically tuned
    families the tuning parameter follows k_n ~ n^{tuning_exponent} (cell or
    coefficient counts) or h_n ~ n^{-tuning_exponent} (bandwidths).  The
    distribution-function family has no tuning parameter.
    """

    family: str
    s: float
    r: float
    tuning_exponent: float | None


def calibration_rates(s: float, family: str) -> CalibrationRates:
    if s <= 0:
        raise ConfigError("smoothness index s must be positive")
    if family in FAMILIES_QUADRATIC_RATE:
        r = 2.0 * s / (1.0 + 4.0 * s)
        return CalibrationRates(family=family, s=s, r=r, tuning_exponent=2.0 - 4.0 * r)
    if family == "cvm":
        return CalibrationRates(family=family, s=s, r=s / (2.0 + 2.0 * s), tuning_exponent=None)
    raise ConfigError(f"unknown family {family!r}")
