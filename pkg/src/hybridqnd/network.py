"""Linear bosonic networks tracked as coefficient rows.

Every tracked output operator is written as

    o = sum_i (u_i a_i + v_i a_i^dagger)

over the registered input modes.  Elements (two-mode squeezers, beam
splitters, phase shifts and attenuation channels) act on these rows in the
Heisenberg picture.  Inputs are vacuum or coherent states, so first and
second moments of any output quadrature follow from the rows alone.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: absolute tolerance for unitarity and commutator checks
TOL = 1e-12


@dataclass(frozen=True)
class Vacuum:
    @property
    def amplitude(self) -> complex:
        return 0j


@dataclass(frozen=True)
class Coherent:
    amplitude: complex

    def __post_init__(self):
        if not np.isfinite(complex(self.amplitude)):
            raise ValueError("coherent amplitude must be finite")


VACUUM = Vacuum()


@dataclass(frozen=True)
class ModeSpec:
    label: str
    input_state: Vacuum | Coherent = VACUUM

    @property
    def amplitude(self) -> complex:
        return complex(self.input_state.amplitude)


@dataclass(frozen=True)
class CoefficientRow:
    """Coefficients of one output operator on the input annihilation (``u``)
    and creation (``v``) operators."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        # nan and inf propagate through the sum, so one scalar test suffices
        if not cmath.isfinite(complex(np.add.reduce(self.u) + np.add.reduce(self.v))):
            raise ValueError("coefficient row has non-finite entries")

    @classmethod
    def _trusted(cls, u: np.ndarray, v: np.ndarray) -> "CoefficientRow":
        # rows derived from finite rows by finite linear maps need no re-check
        row = object.__new__(cls)
        object.__setattr__(row, "u", u)
        object.__setattr__(row, "v", v)
        return row

    def conj(self) -> "CoefficientRow":
        """Row of the Hermitian conjugate operator."""
        return CoefficientRow._trusted(np.conj(self.v), np.conj(self.u))

    def __add__(self, other: "CoefficientRow") -> "CoefficientRow":
        return CoefficientRow._trusted(self.u + other.u, self.v + other.v)

    def __mul__(self, c: complex) -> "CoefficientRow":
        if not cmath.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        return CoefficientRow._trusted(c * self.u, c * self.v)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BosonicNetwork:
    inputs: tuple[ModeSpec, ...]
    outputs: dict[str, CoefficientRow] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.inputs]

    def index(self, label: str) -> int:
        for i, m in enumerate(self.inputs):
            if m.label == label:
                return i
        raise KeyError(f"unknown input mode {label!r}")

    def row(self, label: str) -> CoefficientRow:
        try:
            return self.outputs[label]
        except KeyError:
            raise KeyError(f"unknown output {label!r}") from None

    def means(self) -> np.ndarray:
        return np.array([m.amplitude for m in self.inputs], dtype=complex)

    def _replace(self, **rows: CoefficientRow) -> "BosonicNetwork":
        outputs = dict(self.outputs)
        outputs.update(rows)
        return BosonicNetwork(self.inputs, outputs)


def _identity_row(n: int, i: int) -> CoefficientRow:
    u = np.zeros(n, dtype=complex)
    u[i] = 1.0
    return CoefficientRow._trusted(u, np.zeros(n, dtype=complex))


def build_network(modes: Iterable[ModeSpec]) -> BosonicNetwork:
    """Network whose outputs are the untouched input modes."""
    modes = tuple(modes)
    seen = set()
    for m in modes:
        if m.label in seen:
            raise ValueError(f"duplicate mode label {m.label!r}")
        seen.add(m.label)
    n = len(modes)
    return BosonicNetwork(modes, {m.label: _identity_row(n, i) for i, m in enumerate(modes)})


def _check_tracked(net: BosonicNetwork, *labels: str) -> None:
    for label in labels:
        if label not in net.outputs:
            raise KeyError(f"unknown output {label!r}")


def apply_two_mode_squeezer(
    net: BosonicNetwork, spin_label: str, optical_label: str, g: float, theta: float
) -> BosonicNetwork:
    """S' = G S + g e^{i theta} a^dagger,  a' = G a + g e^{i theta} S^dagger,
    with G = sqrt(1 + g^2)."""
    _check_tracked(net, spin_label, optical_label)
    if spin_label == optical_label:
        raise ValueError("squeezer needs two distinct modes")
    if not g >= 0:
        raise ValueError(f"gain g must be >= 0, got {g}")
    G = math.sqrt(1.0 + g * g)
    phase = g * np.exp(1j * theta)
    s, a = net.row(spin_label), net.row(optical_label)
    return net._replace(
        **{spin_label: G * s + phase * a.conj(), optical_label: G * a + phase * s.conj()}
    )


def check_beam_splitter(t: complex, r: complex) -> None:
    norm = abs(t) ** 2 + abs(r) ** 2
    if abs(norm - 1.0) > TOL:
        raise ValueError(f"beam splitter is not unitary: |t|^2+|r|^2 = {norm!r}")
    # symmetric form also needs t r* + r t* = 0 to keep the two outputs commuting
    cross = 2.0 * (t * np.conj(r)).real
    if abs(cross) > TOL:
        raise ValueError(f"beam splitter is not unitary: t r* + r t* = {cross!r}")


def apply_beam_splitter(
    net: BosonicNetwork, label_1: str, label_2: str, t: complex, r: complex
) -> BosonicNetwork:
    """o1' = t o1 + r o2,  o2' = t o2 + r o1."""
    _check_tracked(net, label_1, label_2)
    if label_1 == label_2:
        raise ValueError("beam splitter needs two distinct modes")
    check_beam_splitter(t, r)
    o1, o2 = net.row(label_1), net.row(label_2)
    return net._replace(**{label_1: t * o1 + r * o2, label_2: t * o2 + r * o1})


def apply_mixing(
    net: BosonicNetwork, label_1: str, label_2: str, matrix: np.ndarray
) -> BosonicNetwork:
    """General passive two-mode element: (o1', o2') = matrix @ (o1, o2)."""
    _check_tracked(net, label_1, label_2)
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2) or np.max(np.abs(m @ m.conj().T - np.eye(2))) > TOL:
        raise ValueError("mixing matrix must be a 2x2 unitary")
    o1, o2 = net.row(label_1), net.row(label_2)
    return net._replace(
        **{label_1: m[0, 0] * o1 + m[0, 1] * o2, label_2: m[1, 0] * o1 + m[1, 1] * o2}
    )


def apply_phase_shift(net: BosonicNetwork, label: str, phi: float) -> BosonicNetwork:
    _check_tracked(net, label)
    return net._replace(**{label: np.exp(1j * phi) * net.row(label)})


def apply_attenuation(
    net: BosonicNetwork, label: str, amplitude_transmission: float, ancilla_label: str
) -> BosonicNetwork:
    """Mix ``label`` with a fresh vacuum ancilla: o' = tau o + sqrt(1 - tau^2) V.

    Photon loss with power transmission eta uses tau = sqrt(eta); spin-wave
    dephasing uses tau = exp(-Gamma t), which gives the Langevin term the
    required <F F^dagger> = 1 - tau^2.
    """
    _check_tracked(net, label)
    tau = amplitude_transmission
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"amplitude transmission must lie in [0, 1], got {tau}")
    if ancilla_label in net.labels or ancilla_label in net.outputs:
        raise ValueError(f"ancilla label {ancilla_label!r} already in use")

    inputs = net.inputs + (ModeSpec(ancilla_label),)
    n = len(inputs)
    outputs = {
        k: CoefficientRow._trusted(np.append(r.u, 0j), np.append(r.v, 0j)) for k, r in net.outputs.items()
    }
    outputs[label] = tau * outputs[label] + math.sqrt(1.0 - tau * tau) * _identity_row(n, n - 1)
    return BosonicNetwork(inputs, outputs)


def compose(inner: BosonicNetwork, outer: BosonicNetwork) -> BosonicNetwork:
    """Feed the outputs of ``inner`` into the same-labelled inputs of ``outer``.

    Inputs of ``outer`` that ``inner`` does not track are appended as new
    inputs of the result.
    """
    inputs = list(inner.inputs)
    known = set(inner.labels)
    for m in outer.inputs:
        if m.label not in inner.outputs and m.label not in known:
            inputs.append(m)
            known.add(m.label)
    n = len(inputs)
    labels = [m.label for m in inputs]

    def lifted(label: str) -> CoefficientRow:
        if label in inner.outputs:
            r = inner.outputs[label]
            pad = n - len(r.u)
            return CoefficientRow._trusted(np.pad(r.u, (0, pad)), np.pad(r.v, (0, pad)))
        return _identity_row(n, labels.index(label))

    source = [lifted(m.label) for m in outer.inputs]
    outputs = dict(inner.outputs)
    for label, r in outer.outputs.items():
        acc = CoefficientRow._trusted(np.zeros(n, complex), np.zeros(n, complex))
        for j, s in enumerate(source):
            acc = acc + r.u[j] * s + r.v[j] * s.conj()
        outputs[label] = acc
    for label, r in list(outputs.items()):
        pad = n - len(r.u)
        if pad:
            outputs[label] = CoefficientRow._trusted(np.pad(r.u, (0, pad)), np.pad(r.v, (0, pad)))
    return BosonicNetwork(tuple(inputs), outputs)


def commutator_weight(net: BosonicNetwork, label: str) -> float:
    """[o, o^dagger] = sum_i |u_i|^2 - |v_i|^2; equal to 1 for a bosonic output."""
    r = net.row(label)
    return float(np.sum(np.abs(r.u) ** 2) - np.sum(np.abs(r.v) ** 2))


def quadrature_moments(net: BosonicNetwork, label: str) -> tuple[float, float]:
    """Mean and variance of X = o + o^dagger.

    Input fluctuations are vacuum fluctuations, so the variance is
    sum_i |u_i + v_i*|^2 whatever the coherent displacements are.
    """
    r = net.row(label)
    w = r.u + np.conj(r.v)
    mean = 2.0 * float(np.real(np.sum(w * net.means())))
    return mean, float(np.sum(np.abs(w) ** 2))
