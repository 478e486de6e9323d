"""The actively correlated atom-light hybrid interferometer.

Pipeline: NRP1 (two-mode squeezer on the optical mode a_S and the spin wave
S_a) -> SU(2) interferometer between the spin wave and the coherent optical
wave a_W, with the AC-Stark phase on the atomic arm -> NRP2 combining the
interferometer's atomic output with a_S.

Each configuration is available twice: composed element by element on the
coefficient-row engine, and as the printed closed-form coefficients.  The
closed forms accept numpy arrays in any parameter field so grids can be
evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .network import (
    BosonicNetwork,
    Coherent,
    ModeSpec,
    apply_attenuation,
    apply_beam_splitter,
    apply_mixing,
    apply_phase_shift,
    apply_two_mode_squeezer,
    build_network,
)

A_S, S_A, A_W = "a_S", "S_a", "a_W"
V1, V2, F1, F2 = "V1", "V2", "F1", "F2"
#: input ordering of the lossy network; the lossless network uses the first three
MODE_ORDER = (A_S, S_A, A_W, V1, V2, F1, F2)

_SQRT_HALF = math.sqrt(0.5)
# 50:50 LRPs: split (S, a_W) -> ((S + a_W)/sqrt2, (a_W - S)/sqrt2), recombine
# (S, a_W) -> ((S - a_W)/sqrt2, (S + a_W)/sqrt2)
_LRP_SPLIT = _SQRT_HALF * np.array([[1.0, 1.0], [-1.0, 1.0]])
_LRP_JOIN = _SQRT_HALF * np.array([[1.0, -1.0], [1.0, 1.0]])


_NONNEGATIVE = frozenset({"g1", "g2", "kappa", "N_alpha"})
_UNIT = frozenset({"eta1", "eta2", "d1", "d2"})


@dataclass(frozen=True)
class InterferometerParams:
    """Physical parameters of the pipeline.

    ``eta1``/``eta2`` are power transmissions of the internal optical arm and
    of a_S before NRP2; ``d1``/``d2`` are the spin-wave dephasing amplitude
    factors exp(-Gamma_1 tau_1), exp(-Gamma_2 tau_2).  ``kappa`` is the
    AC-Stark phase per signal photon.
    """

    g1: float = 3.0
    g2: float = 3.0
    theta1: float = 0.0
    theta2: float = math.pi
    phi0: float = 0.0
    kappa: float = 1e-10
    N_alpha: float = 1e12
    theta_alpha: float = math.pi / 2
    eta1: float = 1.0
    eta2: float = 1.0
    d1: float = 1.0
    d2: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            x = getattr(self, f.name)
            if isinstance(x, (int, float)):
                lo, hi = float(x), float(x)
            else:
                x = np.asarray(x, dtype=float)
                lo, hi = (float(np.min(x)), float(np.max(x))) if x.size else (0.0, 0.0)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{f.name} must be finite")
            if f.name in _NONNEGATIVE and lo < 0:
                raise ValueError(f"{f.name} must be ≥ 0")
            if f.name in _UNIT and not (lo >= 0 and hi <= 1):
                raise ValueError(f"{f.name} must lie in [0, 1]")

    @property
    def G1(self):
        return np.sqrt(1.0 + np.square(self.g1))

    @property
    def G2(self):
        return np.sqrt(1.0 + np.square(self.g2))

    @property
    def alpha(self):
        return np.sqrt(self.N_alpha) * np.exp(1j * self.theta_alpha)

    @property
    def is_lossless(self) -> bool:
        return all(np.all(np.asarray(getattr(self, k)) == 1.0) for k in ("eta1", "eta2", "d1", "d2"))

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


#: parameters of the loss study: d1 = d2 = 0.9, kappa = 1e-10, g1 = g2 = 3, N_alpha = 1e12
REFERENCE_LOSSY = InterferometerParams(d1=0.9, d2=0.9)
#: signal photon number used with REFERENCE_LOSSY
REFERENCE_N_BETA = 1e8


@dataclass(frozen=True)
class LosslessCoefficients:
    """a_S(out) = A a_S + B S_a^dag + C a_W^dag ;  S_a(out) = D a_S^dag + E S_a + F a_W"""

    A: complex
    B: complex
    C: complex
    D: complex
    E: complex
    F: complex


@dataclass(frozen=True)
class LossyCoefficients:
    """a_S(out) = A a_S + B S_a^dag + C a_W^dag + D V1^dag + E V2 + F F1^dag + G F2^dag,
    where F1, F2 are the dephasing Langevin operators with <F F^dag> = 1 - d^2."""

    A: complex
    B: complex
    C: complex
    D: complex
    E: complex
    F: complex
    G: complex


def su2_transfer(phi):
    """(t, r) of the SU(2) interferometer at total phase ``phi``."""
    half = np.exp(0.5j * phi)
    return half * np.cos(0.5 * phi), 1j * half * np.sin(0.5 * phi)


def lossless_coefficients(params: InterferometerParams, phi) -> LosslessCoefficients:
    p = params
    t, r = su2_transfer(phi)
    G1, G2, g1, g2 = p.G1, p.G2, p.g1, p.g2
    e1, e2 = np.exp(1j * p.theta1), np.exp(1j * p.theta2)
    e21 = np.exp(1j * (p.theta2 - p.theta1))
    return LosslessCoefficients(
        A=G2 * G1 + g2 * g1 * e21 * np.conj(t),
        B=G2 * g1 * e1 + G1 * g2 * e2 * np.conj(t),
        C=g2 * e2 * np.conj(r),
        D=G1 * g2 * e2 + G2 * g1 * e1 * t,
        E=g2 * g1 * e21 + G2 * G1 * t,
        F=G2 * r,
    )


def lossy_coefficients(params: InterferometerParams, phi) -> LossyCoefficients:
    p = params
    G1, G2, g1, g2 = p.G1, p.G2, p.g1, p.g2
    s1, s2 = np.sqrt(p.eta1), np.sqrt(p.eta2)
    e1, e2 = np.exp(1j * p.theta1), np.exp(1j * p.theta2)
    e21 = np.exp(1j * (p.theta2 - p.theta1))
    arm = p.d1 * np.exp(-1j * phi)
    A = s2 * G2 * G1 + g2 * g1 * e21 * (arm + s1) * p.d2 / 2
    ones = np.ones(np.broadcast(A, e2, p.eta1, p.eta2, p.d2).shape)
    return LossyCoefficients(
        A=A * ones,
        B=(s2 * G2 * g1 * e1 + G1 * g2 * e2 * (arm + s1) * p.d2 / 2) * ones,
        C=g2 * e2 * (arm - s1) * p.d2 / 2 * ones,
        D=-g2 * e2 * np.sqrt(1.0 - p.eta1) * p.d2 * _SQRT_HALF * ones,
        E=G2 * np.sqrt(1.0 - p.eta2) * ones,
        F=g2 * e2 * p.d2 * _SQRT_HALF * ones,
        G=g2 * e2 * ones,
    )


def probe_row(params: InterferometerParams, phi, lossy: bool = False):
    """Closed-form a_S(out) row laid out on MODE_ORDER (first three modes when
    lossless), returned as ``(u, v)`` stacked along the leading axis.

    The Langevin operators of the dephasing channels are written as
    sqrt(1 - d^2) times a vacuum ancilla, matching the engine.
    """
    if not lossy:
        c = lossless_coefficients(params, phi)
        z = np.zeros_like(c.A)
        return np.stack([c.A, z, z]), np.stack([z, c.B, c.C])
    c = lossy_coefficients(params, phi)
    z = np.zeros_like(c.A)
    f1 = c.F * np.sqrt(1.0 - np.square(params.d1))
    f2 = c.G * np.sqrt(1.0 - np.square(params.d2))
    u = np.stack([c.A, z, z, z, c.E, z, z])
    v = np.stack([z, c.B, c.C, c.D, z, f1, f2])
    return u, v


def _input_modes(params: InterferometerParams) -> list[ModeSpec]:
    return [ModeSpec(A_S), ModeSpec(S_A), ModeSpec(A_W, Coherent(complex(params.alpha)))]


def build_lossless_network(params: InterferometerParams, phi: float) -> BosonicNetwork:
    net = build_network(_input_modes(params))
    net = apply_two_mode_squeezer(net, S_A, A_S, params.g1, params.theta1)
    net = apply_beam_splitter(net, S_A, A_W, *su2_transfer(phi))
    return apply_two_mode_squeezer(net, S_A, A_S, params.g2, params.theta2)


def build_lossy_network(params: InterferometerParams, phi: float) -> BosonicNetwork:
    """Element-by-element lossy pipeline; all four ancillas are always registered
    (as V1, V2, F1, F2) so the row layout matches MODE_ORDER."""
    p = params
    net = build_network(_input_modes(p))
    net = apply_two_mode_squeezer(net, S_A, A_S, p.g1, p.theta1)
    net = apply_mixing(net, S_A, A_W, _LRP_SPLIT)
    net = apply_phase_shift(net, S_A, phi)
    net = apply_attenuation(net, A_W, math.sqrt(p.eta1), V1)
    net = apply_attenuation(net, S_A, p.d1, F1)
    net = apply_mixing(net, S_A, A_W, _LRP_JOIN)
    net = apply_attenuation(net, S_A, p.d2, F2)
    net = apply_attenuation(net, A_S, math.sqrt(p.eta2), V2)
    net = apply_two_mode_squeezer(net, S_A, A_S, p.g2, p.theta2)
    # reorder inputs to MODE_ORDER
    order = [net.index(k) for k in MODE_ORDER]
    inputs = tuple(net.inputs[i] for i in order)
    outputs = {k: type(r)(r.u[order], r.v[order]) for k, r in net.outputs.items()}
    return BosonicNetwork(inputs, outputs)
