"""Probe statistics, SNR and the QND correlation coefficient.

The signal photon number enters only through the AC-Stark phase
phi = phi0 + kappa * n.  For a Fock signal the probe moments are evaluated at
that phase.  For a coherent signal the moments are Poisson mixtures over n;
``method="exact"`` evaluates the mixtures in closed form through the Poisson
characteristic function, ``method="linearized"`` returns the small-phase
formulas (standard phases only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interferometer import InterferometerParams, probe_row

METHODS = ("exact", "linearized")
_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class MomentSet:
    mean_X: float
    var_X: float
    mean_N: float
    var_N: float
    cov_NX: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("mean_X", "var_X", "mean_N", "var_N", "cov_NX")}


def _expm1c(z):
    """exp(z) - 1 for complex z without cancellation near z = 0."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    return re + 1j * np.exp(x) * np.sin(y)


def _phase_step(k, kappa):
    """e^{i k kappa} - 1, accurate for tiny kappa."""
    h = 0.5 * np.multiply(k, kappa)
    return 2j * np.sin(h) * np.exp(1j * h)


def poisson_phase_moment(N_beta, k, kappa):
    """E[exp(i k kappa n)] for n ~ Poisson(N_beta)."""
    if np.any(np.asarray(N_beta) < 0):
        raise ValueError("N_beta must be >= 0")
    return np.exp(N_beta * _phase_step(k, kappa))


def poisson_phase_first_moment(N_beta, k, kappa):
    """E[n exp(i k kappa n)] for n ~ Poisson(N_beta)."""
    return N_beta * np.exp(1j * np.multiply(k, kappa)) * poisson_phase_moment(N_beta, k, kappa)


def _quadrature(u, v, means):
    w = u + np.conj(v)
    mean = 2.0 * np.real(np.einsum("i...,i...->...", w, means))
    return mean, np.sum(np.abs(w) ** 2, axis=0)


def _input_means(params: InterferometerParams, n_modes: int, like):
    means = [np.zeros_like(like)] * n_modes
    means[2] = params.alpha * np.ones_like(like)
    return np.stack(means)


def conditional_moments(params: InterferometerParams, n, lossy: bool = False):
    """Mean and variance of the probe amplitude quadrature when the signal
    holds exactly ``n`` photons."""
    phi = params.phi0 + params.kappa * np.asarray(n, dtype=float)
    u, v = probe_row(params, phi, lossy)
    mean, var = _quadrature(u, v, _input_means(params, u.shape[0], u[0]))
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def fock_snr(params: InterferometerParams, n_b, lossy: bool = False):
    """(R, mean_X, var_X) for a Fock-state signal, R = <X>^2 / Var X."""
    if np.any(np.asarray(n_b) < 0):
        raise ValueError("n_b must be >= 0")
    mean, var = conditional_moments(params, n_b, lossy)
    return mean**2 / var, mean, var


def _harmonics(params: InterferometerParams, lossy: bool):
    """Fourier coefficients of the probe-quadrature weights in the signal phase.

    Every row entry is affine in exp(+-i phi), so three samples determine the
    harmonics -1, 0, +1 exactly.  Returns ``mu[k]`` for the conditional mean
    (k = -1..1) and ``nu[k]`` for the conditional variance (k = -2..2), both
    indexed with offset.
    """
    shifts = 2.0 * np.pi * np.arange(3) / 3.0
    shape = np.broadcast(*[np.asarray(x) for x in params.as_dict().values()]).shape
    ws = []
    for s in shifts:
        phi = params.phi0 + s * np.ones(shape)
        u, v = probe_row(params, phi, lossy)
        ws.append(u + np.conj(v))
    ws = np.stack(ws)  # (sample, mode, ...)
    # c[k] with w(phi0 + psi) = sum_k c[k] e^{i k psi}; index 0,1,2 -> k = 0,1,-1
    c = np.fft.fft(ws, axis=0) / 3.0
    c = {0: c[0], 1: c[1], -1: c[2]}
    means = _input_means(params, ws.shape[1], ws[0, 0])
    cm = {k: np.einsum("i...,i...->...", c[k], means) for k in c}
    mu = {k: cm[k] + np.conj(cm[-k]) for k in (-1, 0, 1)}
    nu = {}
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            term = np.sum(c[k] * np.conj(c[l]), axis=0)
            nu[k - l] = nu.get(k - l, 0) + term
    return mu, nu


def _exact_moments(params: InterferometerParams, N_beta, lossy: bool) -> MomentSet:
    kappa = params.kappa
    mu, nu = _harmonics(params, lossy)
    P = {k: poisson_phase_moment(N_beta, k, kappa) for k in range(-2, 3)}
    mean_X = np.real(sum(mu[k] * P[k] for k in mu))
    mean_var = np.real(sum(nu[k] * P[k] for k in nu))
    # Var_n[mean(n)] = sum_kl mu_k mu_l Cov(Z^k, Z^l), Z = e^{i kappa n};
    # Cov(Z^k, Z^l) = P_k P_l (exp(N (e^{ik kappa}-1)(e^{il kappa}-1)) - 1)
    spread = 0.0
    for k in mu:
        for l in mu:
            cov = P[k] * P[l] * _expm1c(N_beta * _phase_step(k, kappa) * _phase_step(l, kappa))
            spread = spread + mu[k] * mu[l] * cov
    spread = np.real(spread)
    # Cov(n, Z^k) = N P_k (e^{ik kappa} - 1)
    cov_NX = np.real(sum(mu[k] * N_beta * P[k] * _phase_step(k, kappa) for k in mu))
    return _moment_set(mean_X, mean_var + spread, N_beta, cov_NX)


def _moment_set(mean_X, var_X, N_beta, cov_NX) -> MomentSet:
    def out(x):
        x = np.asarray(x, dtype=float)
        return float(x) if x.ndim == 0 else x

    N = out(N_beta)
    return MomentSet(out(mean_X), out(var_X), N, N, out(cov_NX))


def _angle_is(x, target) -> bool:
    d = np.mod(np.asarray(x) - target + np.pi, 2 * np.pi) - np.pi
    return bool(np.all(np.abs(d) <= _ANGLE_TOL))


def has_standard_phases(params: InterferometerParams) -> bool:
    """theta1 = 0, theta2 = pi, theta_alpha = pi/2, phi0 = 0 (mod 2 pi)."""
    return (
        _angle_is(params.theta1, 0.0)
        and _angle_is(params.theta2, np.pi)
        and _angle_is(params.theta_alpha, np.pi / 2)
        and _angle_is(params.phi0, 0.0)
    )


def _linearized_moments(params: InterferometerParams, N_beta, lossy: bool) -> MomentSet:
    if not has_standard_phases(params):
        raise ValueError(
            "linearized moments are only defined at theta1=0, theta2=pi, "
            "theta_alpha=pi/2, phi0=0; use method='exact'"
        )
    p = params
    g1, g2, G1, G2 = p.g1, p.g2, p.G1, p.G2
    k2 = p.kappa**2
    Nb, Na = N_beta, p.N_alpha
    if not lossy:
        mean = g2 * p.kappa * np.sqrt(Na) * Nb
        nx = mean * (Nb + 1)
        var = (
            (G2 * G1 - g2 * g1) ** 2
            + (G2 * g1 - G1 * g2) ** 2
            + g2**2 * k2 * Na * Nb
            + G1**2 * g2**2 * k2 * Nb * (Nb + 1) / 2
        )
    else:
        d1, d2 = p.d1, p.d2
        s1, s2 = np.sqrt(p.eta1), np.sqrt(p.eta2)
        damp2 = d1**2 * d2**2
        mean = g2 * d1 * d2 * p.kappa * np.sqrt(Na) * Nb
        nx = mean * (Nb + 1)
        var = (
            (s2 * G2 * G1 - g2 * g1 * d1 * d2 / 2 - g2 * g1 * d2 * s1 / 2) ** 2
            + (s2 * G2 * g1 - G1 * g2 * d1 * d2 / 2 - G1 * g2 * d2 * s1 / 2) ** 2
            + g2**2 * ((1 - d1**2) * d2**2 / 2 + (1 - d2**2))
            + g2**2 * (2 * g1**2 + 1) * k2 * Nb * (Nb + 1) * damp2 / 4
            + g2**2 * k2 * Nb * (Na + (Nb + 1) / 4) * damp2
            + (g2 * d2 * s1 / 2 - g2 * d1 * d2 / 2) ** 2
            + g2**2 * (1 - p.eta1) * d2**2 / 2
            + G2**2 * (1 - p.eta2)
        )
    return _moment_set(mean, var, N_beta, nx - Nb * mean)


def coherent_moments(
    params: InterferometerParams, N_beta, method: str = "exact", lossy: bool = False
) -> MomentSet:
    """Moments of the signal number and probe quadrature for a coherent signal
    with mean photon number ``N_beta``."""
    if np.any(np.asarray(N_beta) < 0):
        raise ValueError("N_beta must be >= 0")
    if method == "exact":
        return _exact_moments(params, N_beta, lossy)
    if method == "linearized":
        return _linearized_moments(params, N_beta, lossy)
    raise ValueError(f"method must be one of {METHODS}, got {method!r}")


def correlation_from_moments(m: MomentSet):
    if np.any(np.asarray(m.var_X) <= 0) or np.any(np.asarray(m.var_N) <= 0):
        raise ValueError("correlation undefined: zero variance in signal number or probe quadrature")
    c2 = m.cov_NX**2 / (m.var_N * m.var_X)
    return c2, np.sqrt(c2)


def qnd_correlation(
    params: InterferometerParams, N_beta, method: str = "exact", lossy: bool = False
):
    """(C^2, C) between the input signal photon number and the probe quadrature."""
    return correlation_from_moments(coherent_moments(params, N_beta, method, lossy))


def holland_criteria(
    params: InterferometerParams, N_beta, method: str = "exact", lossy: bool = False
):
    """(C_ss, C_sp, C_pp) correlation coefficients.

    The dispersive interaction leaves the signal photon number untouched, so
    signal-in/signal-out is identically 1 and signal-out/probe-out coincides
    with signal-in/probe-out.
    """
    _, c = qnd_correlation(params, N_beta, method, lossy)
    return 1.0, c, c


def perfect_correlation_margins(params: InterferometerParams, N_beta):
    """Ratios of the two perfect-correlation conditions (both >> 1 for C^2 -> 1):
    signal term over readout noise, and 2 N_alpha over G1^2 (N_beta + 1)."""
    p = params
    noise = (p.G2 * p.G1 - p.g2 * p.g1) ** 2 + (p.G2 * p.g1 - p.G1 * p.g2) ** 2
    return p.g2**2 * p.kappa**2 * p.N_alpha * N_beta / noise, 2 * p.N_alpha / (p.G1**2 * (N_beta + 1))


__all__ = [
    "METHODS",
    "MomentSet",
    "coherent_moments",
    "conditional_moments",
    "correlation_from_moments",
    "fock_snr",
    "has_standard_phases",
    "holland_criteria",
    "perfect_correlation_margins",
    "poisson_phase_first_moment",
    "poisson_phase_moment",
    "qnd_correlation",
]
