"""Chi-square goodness-of-fit tests on equal cells of [0, 1).

The statistic is T_n = k n sum_i (phat_i - 1/k)^2 over k equal cells, with
null mean k - 1; the test rejects when (T_n - k + 1) / sqrt(2 k) exceeds
x_alpha.  The population counterpart T_n(F) = n k sum_l (int_cell f)^2
drives the normal type II approximation Phi(x_alpha - T_n(F) / sqrt(2 k)).

Two evaluation paths are provided for T_n(F): direct cell integrals of the
perturbation, and the frequency-domain aliasing sum

    J1 = k^2 sum_m sum_{j != 0, j != m k} theta_j conj(theta_{j - m k})
         (2 - 2 cos(2 pi j / k)) / (4 pi^2 j (j - m k)),

with T_n(F) = n J1.  The companion cross-frequency sum (pairs whose index
difference is not a multiple of k) vanishes identically because the cell
phases average to zero; ``cross_frequency_sum`` computes it explicitly so
the cancellation can be checked rather than assumed.

When k = 2^l the statistic coincides with the quadratic form of empirical
Haar coefficients through level l - 1:

    T_n = n sum_{i=0}^{l-1} sum_{q=0}^{2^i - 1} bhat_{iq}^2,
    bhat_{iq} = (1/n) sum_m psi_iq(X_m),   psi_iq = 2^{i/2} psi(2^i x - q),

with psi the step wavelet (+1 on [0, 1/2), -1 on [1/2, 1)).  The mean-zero
step function of cell deviations is exactly resolved by those levels, which
is the whole identity; ``haar_statistic`` evaluates the right-hand side
directly from the sample so the equality is a genuine cross-check.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ConfigError
from .report import TestReport, normal_cdf, upper_quantile
from .spectra import Spectrum

# validity window for the normal type II approximation, as multiples of sqrt(k)
DRIFT_WINDOW = (0.1, 10.0)


def _validate_sample(sample: np.ndarray) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ConfigError("sample must be a non-empty 1-d array")
    if np.any(x < 0.0) or np.any(x >= 1.0):
        raise ConfigError("observations must lie in [0, 1)")
    return x


def cell_counts(sample: np.ndarray, k: int) -> np.ndarray:
    if k < 2:
        raise ConfigError("need at least k = 2 cells")
    x = _validate_sample(sample)
    idx = np.minimum((x * k).astype(np.int64), k - 1)  # guard x*k rounding up to k
    return np.bincount(idx, minlength=k)


def chisq_statistic(sample: np.ndarray, k: int) -> float:
    counts = cell_counts(sample, k)
    n = counts.sum()
    phat = counts / n
    return float(k * n * np.sum((phat - 1.0 / k) ** 2))


def standardized_chisq(t_n: float, k: int) -> float:
    return (t_n - (k - 1)) / math.sqrt(2.0 * k)


def chisq_test(
    sample: np.ndarray,
    k: int,
    alpha: float,
    theta: Spectrum | None = None,
) -> TestReport:
    t_n = chisq_statistic(sample, k)
    z = standardized_chisq(t_n, k)
    x_alpha = upper_quantile(alpha)
    n = int(np.asarray(sample).size)
    beta = None
    if theta is not None:
        beta = predicted_type2_chisq(theta, k, n, alpha)
    return TestReport(
        family="chisq",
        statistic=t_n,
        standardized=z,
        threshold=x_alpha,
        alpha=alpha,
        reject=bool(z > x_alpha),
        n=n,
        predicted_type2=beta,
    )


def haar_statistic(sample: np.ndarray, level: int) -> float:
    """n * sum of squared empirical Haar coefficients through ``level`` levels.

    Equals chisq_statistic(sample, 2**level) exactly (see module docstring).
    """
    if level < 1:
        raise ConfigError("level must be a positive integer")
    x = _validate_sample(sample)
    n = x.size
    total = 0.0
    for i in range(level):
        m = 2**i
        pos = x * m
        q = np.minimum(pos.astype(np.int64), m - 1)
        sign = np.where(pos - q < 0.5, 1.0, -1.0)
        coeff_sums = np.bincount(q, weights=sign, minlength=m)
        bhat = (2.0 ** (i / 2.0)) * coeff_sums / n
        total += float(np.sum(bhat**2))
    return n * total


def _cell_phase_coeffs(js: np.ndarray, k: int) -> np.ndarray:
    """c_j = int_0^{1/k} e^{2 pi i j x} dx for each signed frequency (j != 0)."""
    w = 2.0j * math.pi * js
    return (np.exp(w / k) - 1.0) / w


def cell_integrals(theta: Spectrum, k: int) -> np.ndarray:
    """p_l = int_{l/k}^{(l+1)/k} f for the perturbation f with spectrum theta."""
    if theta.basis != "complex-exponential":
        raise ConfigError("cell integrals are computed from the complex-exponential basis")
    if k < 2:
        raise ConfigError("need at least k = 2 cells")
    js, vals = theta.signed_pairs()
    nz = js != 0
    l = np.arange(k)
    phases = np.exp(2.0j * math.pi * np.outer(l, js[nz]) / k)
    p = phases @ (vals[nz] * _cell_phase_coeffs(js[nz], k))
    p = np.real(p) + float(np.real(vals[~nz][0]) if np.any(~nz) else 0.0) / k
    return p


def _aliasing_sum(theta: Spectrum, k: int) -> float:
    js, vals = theta.signed_pairs()
    if abs(vals[js == 0][0]) > 1e-12:
        raise ConfigError("the aliasing path requires a mean-zero perturbation (zero frequency-0 coefficient)")
    j_max = int(js.max())
    m_max = (2 * j_max) // k + 1  # index differences reach 2 j_max
    coeff = dict(zip(js.tolist(), vals.tolist()))
    total = 0.0
    for m in range(-m_max, m_max + 1):
        for j in range(-j_max, j_max + 1):
            if j == 0 or j == m * k:
                continue
            other = coeff.get(j - m * k)
            first = coeff.get(j)
            if other is None or first is None or first == 0 or other == 0:
                continue
            weight = (2.0 - 2.0 * math.cos(2.0 * math.pi * j / k)) / (4.0 * math.pi**2 * j * (j - m * k))
            total += float(np.real(first * np.conj(other))) * weight
    return k * k * total


def cross_frequency_sum(theta: Spectrum, k: int) -> float:
    """|sum over pairs with k not dividing (j - j')| — identically zero.

    Assembles the discarded part of the cell-energy expansion, keeping the
    explicit phase average sum_l e^{2 pi i (j - j') l / k} instead of using
    its known value.
    """
    js, vals = theta.signed_pairs()
    nz = js != 0
    js, vals = js[nz], vals[nz]
    c = _cell_phase_coeffs(js, k)
    l = np.arange(k)
    total = 0.0 + 0.0j
    for a in range(js.size):
        for b in range(js.size):
            diff = js[a] - js[b]
            if diff % k == 0:
                continue
            phase_avg = np.sum(np.exp(2.0j * math.pi * diff * l / k))
            total += vals[a] * np.conj(vals[b]) * c[a] * np.conj(c[b]) * phase_avg
    return float(abs(k * total))


def population_chisq_functional(theta: Spectrum, k: int, n: int, method: str = "cells") -> float:
    """T_n(F) = n k sum_l (int_cell f)^2, by cell quadrature or the aliasing sum."""
    if n < 1:
        raise ConfigError("n must be positive")
    if method == "cells":
        p = cell_integrals(theta, k)
        return float(n * k * np.sum(p**2))
    if method == "aliased":
        return float(n * _aliasing_sum(theta, k))
    raise ConfigError(f"unknown method {method!r} (expected 'cells' or 'aliased')")


def predicted_type2_chisq(theta: Spectrum, k: int, n: int, alpha: float, method: str = "cells") -> float:
    t_f = population_chisq_functional(theta, k, n, method)
    drift = t_f / math.sqrt(2.0 * k)
    lo, hi = DRIFT_WINDOW
    if not lo * math.sqrt(k) <= t_f <= hi * math.sqrt(k):
        warnings.warn(
            f"population functional {t_f:.4g} outside [{lo}*sqrt(k), {hi}*sqrt(k)]; "
            "the normal type II approximation may be unreliable",
            stacklevel=2,
        )
    return normal_cdf(upper_quantile(alpha) - drift)
