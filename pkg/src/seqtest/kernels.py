"""Kernel-smoothed L2 tests, computed in the Fourier domain.

For a symmetric kernel K supported on [-b, b] with unit integral, bandwidth
h, and a complex-exponential observation y, the smoothed-density energy is

    S = sum_{j in Z} |Khat(j h)|^2 |y_j|^2,      Khat(w) = int K(t) e^{2 pi i w t} dt,

and the studentized statistic is

    T_n = n h^{1/2} sigma^{-2} kappa^{-1} ( S - sigma^2 (n h)^{-1} ||K||^2 ),

with ||K||^2 = int K^2 and kappa^2 = 2 int (K * K)^2.  On the circle the
spectral form is exact: for h < 1 / (2b) the Poisson summation identities

    sum_j Khat(j h)^2 = ||K||^2 / h,     sum_j Khat(j h)^4 = kappa^2 / (2 h)

hold exactly, so T_n has mean 0 and variance 1 under the null up to the
truncation of the stored frequencies.  The type II error against theta is
Phi(x_alpha - kappa^{-1} sigma^{-2} n h^{1/2} T1n(theta)) with
T1n(theta) = sum_j |Khat(j h) theta_j|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ConfigError
from .report import TestReport, normal_cdf, upper_quantile
from .sampling import SequenceObservation
from .spectra import Spectrum

_GL_NODES, _GL_WEIGHTS = leggauss(64)


@dataclass(frozen=True)
class Kernel:
    """Symmetric density kernel on [-halfwidth, halfwidth].

    ``kinks`` lists points where K or its derivative jumps; quadrature is
    split there so that polynomial pieces integrate exactly.  ``transform``
    is an optional closed form for Khat(omega).
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    halfwidth: float = 1.0
    kinks: tuple[float, ...] = (0.0,)
    transform: Callable[[np.ndarray], np.ndarray] | None = None


def _box(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, 0.5, 0.0)


def _box_transform(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    a = 2.0 * math.pi * w
    return np.where(np.abs(a) < 1e-8, 1.0 - a**2 / 6.0, np.sin(np.where(a == 0, 1.0, a)) / np.where(a == 0, 1.0, a))


def _triangle(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.maximum(0.0, 1.0 - np.abs(t))


def _triangle_transform(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    a = math.pi * w
    core = np.where(np.abs(a) < 1e-8, 1.0 - a**2 / 6.0, np.sin(np.where(a == 0, 1.0, a)) / np.where(a == 0, 1.0, a))
    return core**2


def _epanechnikov(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, 0.75 * (1.0 - t**2), 0.0)


def _epanechnikov_transform(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    a = 2.0 * math.pi * w
    small = np.abs(a) < 1e-4
    a_safe = np.where(small, 1.0, a)
    exact = 3.0 * (np.sin(a_safe) - a_safe * np.cos(a_safe)) / a_safe**3
    return np.where(small, 1.0 - a**2 / 10.0, exact)


def box_kernel() -> Kernel:
    return Kernel("box", _box, 1.0, (0.0,), _box_transform)


def triangle_kernel() -> Kernel:
    return Kernel("triangle", _triangle, 1.0, (0.0,), _triangle_transform)


def epanechnikov_kernel() -> Kernel:
    return Kernel("epanechnikov", _epanechnikov, 1.0, (0.0,), _epanechnikov_transform)


def _piecewise_gl(fn: Callable[[np.ndarray], np.ndarray], breaks: np.ndarray) -> float:
    """Gauss-Legendre integral of fn over consecutive [breaks] pieces."""
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        x = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * float(np.dot(_GL_WEIGHTS, fn(x)))
    return total


@dataclass(frozen=True)
class KernelConstants:
    l2_norm_sq: float  # int K^2
    kappa_sq: float  # 2 int (K * K)^2


def kernel_constants(kernel: Kernel, mass_tol: float = 1e-8) -> KernelConstants:
    b = kernel.halfwidth
    inner_breaks = np.unique(np.concatenate([[-b, b], np.asarray(kernel.kinks, dtype=float)]))
    mass = _piecewise_gl(kernel.fn, inner_breaks)
    if abs(mass - 1.0) > mass_tol:
        raise ConfigError(f"kernel {kernel.name!r} does not integrate to 1 (got {mass!r})")
    l2 = _piecewise_gl(lambda t: kernel.fn(t) ** 2, inner_breaks)

    def conv(u_vals: np.ndarray) -> np.ndarray:
        out = np.empty_like(u_vals)
        for i, u in enumerate(u_vals):
            lo, hi = max(-b, u - b), min(b, u + b)
            if hi <= lo:
                out[i] = 0.0
                continue
            # kinks of K(v) and of K(u - v) both break the integrand
            pts = [lo, hi]
            for q in inner_breaks:
                if lo < q < hi:
                    pts.append(float(q))
                if lo < u - q < hi:
                    pts.append(float(u - q))
            pts = np.unique(np.asarray(pts))
            out[i] = _piecewise_gl(lambda v: kernel.fn(u - v) * kernel.fn(v), pts)
        return out

    # (K*K)^2 is piecewise smooth with breaks on the kink lattice {q1 + q2}
    kk = np.unique(np.concatenate([inner_breaks, [-b, b]]))
    outer_breaks = np.unique(np.add.outer(kk, kk).ravel())
    kappa_sq = 2.0 * _piecewise_gl(lambda u: conv(u) ** 2, outer_breaks)
    return KernelConstants(l2_norm_sq=l2, kappa_sq=kappa_sq)


def kernel_transform(kernel: Kernel, omega: np.ndarray) -> np.ndarray:
    """Khat at the given frequencies; closed form if available, else quadrature."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if kernel.transform is not None:
        return kernel.transform(omega)
    out = np.empty_like(omega)
    b = kernel.halfwidth
    for i, w in enumerate(omega):
        # symmetric kernel: Khat(w) = 2 int_0^b K(t) cos(2 pi w t) dt
        val, _ = integrate.quad(kernel.fn, 0.0, b, weight="cos", wvar=2.0 * math.pi * abs(w), limit=200)
        out[i] = 2.0 * val
    return out


def _require_complex(spec: Spectrum) -> Spectrum:
    if spec.basis != "complex-exponential":
        raise ConfigError("kernel tests operate on complex-exponential spectra")
    return spec


def transform_values(kernel: Kernel, h: float, j_max: int) -> np.ndarray:
    """Khat(j h) for j = 0..j_max; precompute once per (kernel, h) in loops."""
    return kernel_transform(kernel, np.arange(j_max + 1, dtype=float) * h)


def _weighted_energy(spec: Spectrum, kernel: Kernel, h: float, kh: np.ndarray | None = None) -> float:
    """sum over j in Z of |Khat(j h)|^2 |c_j|^2 for the stored truncation."""
    _require_complex(spec)
    if kh is None:
        kh = transform_values(kernel, h, spec.coeffs.size - 1)
    elif kh.size < spec.coeffs.size:
        raise ConfigError("precomputed transform table shorter than the spectrum")
    mags = np.abs(spec.coeffs) ** 2
    head = kh[: mags.size]
    return float(head[0] ** 2 * mags[0] + 2.0 * np.sum(head[1:] ** 2 * mags[1:]))


def bias_functional(theta: Spectrum, kernel: Kernel, h: float, kh: np.ndarray | None = None) -> float:
    """T1n(theta) = sum_j |Khat(j h) theta_j|^2 over the stored frequencies."""
    return _weighted_energy(theta, kernel, h, kh)


def kernel_statistic(
    obs: SequenceObservation,
    kernel: Kernel,
    h: float,
    constants: KernelConstants | None = None,
    kh: np.ndarray | None = None,
) -> float:
    if not 0.0 < h < 1.0:
        raise ConfigError("bandwidth h must lie in (0, 1)")
    consts = constants if constants is not None else kernel_constants(kernel)
    n, sigma = obs.n, obs.sigma
    s = _weighted_energy(obs.y, kernel, h, kh)
    centered = s - sigma**2 / (n * h) * consts.l2_norm_sq
    return float(n * math.sqrt(h) / sigma**2 / math.sqrt(consts.kappa_sq) * centered)


def predicted_type2_kernel(
    theta: Spectrum,
    kernel: Kernel,
    h: float,
    n: int,
    sigma: float,
    alpha: float,
    constants: KernelConstants | None = None,
    kh: np.ndarray | None = None,
) -> float:
    consts = constants if constants is not None else kernel_constants(kernel)
    shift = n * math.sqrt(h) / sigma**2 / math.sqrt(consts.kappa_sq) * bias_functional(theta, kernel, h, kh)
    return normal_cdf(upper_quantile(alpha) - shift)


def kernel_test(
    obs: SequenceObservation,
    kernel: Kernel,
    h: float,
    alpha: float,
    theta: Spectrum | None = None,
    constants: KernelConstants | None = None,
    kh: np.ndarray | None = None,
) -> TestReport:
    consts = constants if constants is not None else kernel_constants(kernel)
    t_n = kernel_statistic(obs, kernel, h, consts, kh)
    x_alpha = upper_quantile(alpha)
    beta = None
    if theta is not None:
        beta = predicted_type2_kernel(theta, kernel, h, obs.n, obs.sigma, alpha, consts, kh)
    return TestReport(
        family="kernel",
        statistic=t_n,
        standardized=t_n,  # the statistic is already studentized
        threshold=x_alpha,
        alpha=alpha,
        reject=bool(t_n > x_alpha),
        n=obs.n,
        predicted_type2=beta,
    )


def space_domain_energy(y: Spectrum, kernel: Kernel, h: float, grid: int = 2048) -> float:
    """||smoothed field||^2 by direct periodic convolution on a grid.

    Reconstructs the band-limited field from the stored coefficients, wraps
    the scaled kernel around the circle, convolves by direct summation, and
    integrates the square.  Cross-checks the spectral path in tests; O(grid^2).
    """
    _require_complex(y)
    t = np.arange(grid) / grid
    js, vals = y.signed_pairs()
    field = np.real(np.exp(2j * math.pi * np.outer(t, js)) @ vals)
    # wrapped kernel (t - u mod 1), scaled by 1/h
    d = t[:, None] - t[None, :]
    d = (d + 0.5) % 1.0 - 0.5
    wrapped = np.zeros_like(d)
    width = kernel.halfwidth * h
    for shift in (-1.0, 0.0, 1.0):  # h < 1/2 keeps at most one wrap relevant
        sel = np.abs(d + shift) <= width
        if np.any(sel):
            wrapped[sel] += kernel.fn((d[sel] + shift) / h) / h
    smoothed = wrapped @ field / grid
    return float(np.mean(smoothed**2))
