"""Truncated Fock-space simulator used as an independent check of the
coefficient-row engine.

States are ensembles of unnormalised pure branches over a few modes, each a
dense tensor with ``cutoff`` levels per mode.  Elements are unitaries obtained
by exponentiating their quadratic generators on the truncated space.  Loss
and dephasing mix the mode with a vacuum ancilla on a beam splitter; the
ancilla is traced out immediately, which turns the element into Kraus
branches.

Each element is built with one spare Fock level per mode.  Whatever the
element pushes into the spare level is discarded, so the squared norm of the
ensemble drops by exactly the truncation leakage; the running norm deficit is
checked after every element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.linalg import expm, logm

from .interferometer import InterferometerParams

#: admissible norm deficit 1 - <psi|psi>
NORM_GUARD = 1e-8
#: branches lighter than this are dropped (their weight counts as deficit)
_PRUNE = 1e-22


class TruncationError(RuntimeError):
    """The Fock cutoff is too small for the requested state."""


def _lowering(c: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, c, dtype=float)), 1)


def _two_mode_ops(c: int):
    a = sparse.csr_matrix(_lowering(c))
    eye = sparse.identity(c, format="csr")
    return sparse.kron(a, eye, format="csr"), sparse.kron(eye, a, format="csr")


def _block_expm(gen: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """expm of a generator that only couples basis states with equal ``keys``."""
    out = np.zeros_like(gen, dtype=complex)
    for key in np.unique(keys):
        idx = np.flatnonzero(keys == key)
        out[np.ix_(idx, idx)] = expm(gen[np.ix_(idx, idx)])
    return out


def _levels(c: int):
    n = np.arange(c)
    return np.repeat(n, c), np.tile(n, c)


@lru_cache(maxsize=64)
def squeezer_unitary(c: int, g: float, theta: float) -> np.ndarray:
    """exp(xi a^dag b^dag - xi* a b) on c x c levels, xi = asinh(g) e^{i theta}.

    Heisenberg action: a -> G a + g e^{i theta} b^dag and the same with a, b
    swapped.
    """
    a, b = _two_mode_ops(c)
    xi = math.asinh(g) * np.exp(1j * theta)
    gen = (xi * (a.T @ b.T) - np.conj(xi) * (a @ b)).toarray()
    na, nb = _levels(c)
    return _block_expm(gen, na - nb)


@lru_cache(maxsize=64)
def _mixing_unitary(c: int, key: tuple) -> np.ndarray:
    m = np.array(key, dtype=complex).reshape(2, 2)
    # Heisenberg action o_i -> sum_j m_ij o_j  <=>  U = exp(sum_ij L_ij o_i^dag o_j), m = e^L
    L = logm(m)
    a, b = _two_mode_ops(c)
    ops = (a, b)
    gen = sum(L[i, j] * (ops[i].T @ ops[j]) for i in range(2) for j in range(2)).toarray()
    na, nb = _levels(c)
    return _block_expm(gen, na + nb)


def mixing_unitary(c: int, matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    return _mixing_unitary(c, tuple(np.round(m.ravel(), 15)))


def attenuation_kraus(c: int, tau: float) -> list[np.ndarray]:
    """Kraus operators of mode -> tau mode + sqrt(1 - tau^2) V with V in vacuum,
    read off the beam-splitter unitary as <k|_anc U |0>_anc."""
    s = math.sqrt(max(0.0, 1.0 - tau * tau))
    # angle > pi/2 is never needed; tau in [0, 1]
    u = mixing_unitary(c, [[tau, s], [-s, tau]]).reshape(c, c, c, c)
    return [u[:, k, :, 0] for k in range(c)]


@dataclass
class TruncatedState:
    """Ensemble of unnormalised pure branches sharing a mode layout.

    ``amplitudes`` has shape ``(branches, cutoff, ..., cutoff)``.
    """

    cutoff: int
    labels: list[str]
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def deficit(self) -> float:
        return 1.0 - self.norm

    def axis(self, label: str) -> int:
        return 1 + self.labels.index(label)

    def _guard(self, what: str) -> "TruncatedState":
        if self.deficit > NORM_GUARD:
            raise TruncationError(
                f"norm deficit {self.deficit:.3e} after {what} exceeds {NORM_GUARD:g}; "
                f"increase the cutoff (currently {self.cutoff})"
            )
        return self


def product_state(cutoff: int, modes: dict[str, complex]) -> TruncatedState:
    """Product of coherent states (amplitude 0 means vacuum), Fock amplitudes
    truncated at ``cutoff`` levels."""
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    psi = np.ones(1, dtype=complex)
    for alpha in modes.values():
        alpha = complex(alpha)
        if alpha == 0:
            vec = np.zeros(cutoff, complex)
            vec[0] = 1.0
        else:
            mag = np.exp(-0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
            vec = mag * np.exp(1j * n * np.angle(alpha))
        psi = np.multiply.outer(psi, vec)
    return TruncatedState(cutoff, list(modes), psi)._guard("state preparation")


def _padded(psi: np.ndarray, axes) -> np.ndarray:
    pad = [(0, 0)] * psi.ndim
    for i in axes:
        pad[i] = (0, 1)
    return np.pad(psi, pad)


def _cropped(psi: np.ndarray, axes, c: int) -> np.ndarray:
    sl = [slice(None)] * psi.ndim
    for i in axes:
        sl[i] = slice(0, c)
    return np.ascontiguousarray(psi[tuple(sl)])


def _apply_pair(psi: np.ndarray, U: np.ndarray, i: int, j: int, c: int) -> np.ndarray:
    """Apply a (c+1)^2 two-mode operator to axes i, j and drop the spare level."""
    big = np.moveaxis(_padded(psi, (i, j)), (i, j), (0, 1))
    shape = big.shape
    out = (U @ big.reshape((c + 1) ** 2, -1)).reshape(shape)
    return _cropped(np.moveaxis(out, (0, 1), (i, j)), (i, j), c)


def _apply_single(psi: np.ndarray, K: np.ndarray, i: int, c: int) -> np.ndarray:
    """Apply a (c+1)-level single-mode operator to axis i and drop the spare level."""
    out = np.moveaxis(np.tensordot(K, _padded(psi, (i,)), axes=(1, i)), 0, i)
    return _cropped(out, (i,), c)


def squeeze(state: TruncatedState, spin: str, optical: str, g: float, theta: float):
    c = state.cutoff
    U = squeezer_unitary(c + 1, float(g), float(theta))
    state.amplitudes = _apply_pair(state.amplitudes, U, state.axis(spin), state.axis(optical), c)
    return state._guard("two-mode squeezer")


def mix(state: TruncatedState, label_1: str, label_2: str, matrix):
    c = state.cutoff
    U = mixing_unitary(c + 1, matrix)
    state.amplitudes = _apply_pair(state.amplitudes, U, state.axis(label_1), state.axis(label_2), c)
    return state._guard("beam splitter")


def phase(state: TruncatedState, label: str, phi: float):
    c = state.cutoff
    K = np.diag(np.exp(1j * phi * np.arange(c + 1)))
    state.amplitudes = _apply_single(state.amplitudes, K, state.axis(label), c)
    return state._guard("phase shift")


def attenuate(state: TruncatedState, label: str, tau: float):
    if tau == 1.0:
        return state
    c = state.cutoff
    i = state.axis(label)
    total = state.norm
    parts, got = [], 0.0
    for K in attenuation_kraus(c + 1, float(tau)):
        part = _apply_single(state.amplitudes, K, i, c)
        w = np.sum(np.abs(part.reshape(len(part), -1)) ** 2, axis=1)
        parts.append(part[w > _PRUNE])
        got += float(w.sum())
        if total - got < _PRUNE:
            break
    state.amplitudes = np.concatenate(parts)
    compress(state)
    return state._guard("attenuation")


def compress(state: TruncatedState) -> TruncatedState:
    """Replace the branches by the eigen-decomposition of their density
    operator when there are more branches than basis states."""
    amps = state.amplitudes
    dim = int(np.prod(amps.shape[1:]))
    if len(amps) <= dim:
        return state
    m = amps.reshape(len(amps), dim)
    lam, vec = np.linalg.eigh(m.T @ m.conj())
    keep = lam > _PRUNE
    state.amplitudes = (vec[:, keep] * np.sqrt(lam[keep])).T.reshape((-1,) + amps.shape[1:])
    return state


def trace_out(state: TruncatedState, label: str):
    """Trace a mode out; the ensemble is re-expressed through the
    eigen-decomposition of the reduced density operator."""
    i = state.axis(label)
    c = state.cutoff
    kept = [k for k in state.labels if k != label]
    amps = np.moveaxis(state.amplitudes, i, -1).reshape(len(state.amplitudes), -1, c)
    m = amps.transpose(1, 0, 2).reshape(amps.shape[1], -1)
    rho = m @ m.conj().T
    lam, vec = np.linalg.eigh(rho)
    keep = lam > _PRUNE
    state.labels = kept
    state.amplitudes = (vec[:, keep] * np.sqrt(lam[keep])).T.reshape((-1,) + (c,) * len(kept))
    return state._guard("partial trace")


def enlarge(state: TruncatedState, cutoff: int) -> TruncatedState:
    """Zero-pad every mode to ``cutoff`` levels."""
    extra = cutoff - state.cutoff
    if extra < 0:
        raise ValueError("enlarge cannot shrink the cutoff")
    pad = [(0, 0)] + [(0, extra)] * len(state.labels)
    return TruncatedState(cutoff, list(state.labels), np.pad(state.amplitudes, pad))


def quadrature(state: TruncatedState, label: str) -> tuple[float, float]:
    """Mean and variance of X = a + a^dag for ``label`` (ensemble renormalised)."""
    c = state.cutoff
    i = state.axis(label)
    a = _lowering(c)
    psi = state.amplitudes
    apsi = np.moveaxis(np.tensordot(a, psi, axes=(1, i)), 0, i)
    aapsi = np.moveaxis(np.tensordot(a, apsi, axes=(1, i)), 0, i)
    shape = [1] * psi.ndim
    shape[i] = c
    norm = state.norm
    m1 = np.vdot(psi, apsi) / norm
    m2 = np.vdot(psi, aapsi) / norm
    nn = float(np.sum(np.arange(c).reshape(shape) * np.abs(psi) ** 2)) / norm
    mean = 2.0 * m1.real
    second = 2.0 * m2.real + 2.0 * nn + 1.0
    return float(mean), float(second - mean**2)


_SPLIT = np.sqrt(0.5) * np.array([[1.0, 1.0], [-1.0, 1.0]])
_JOIN = np.sqrt(0.5) * np.array([[1.0, -1.0], [1.0, 1.0]])
#: extra levels given to the two readout modes before NRP2 amplifies them
READOUT_MARGIN = 12


def _pipeline(params: InterferometerParams, phi: float, cutoff: int) -> tuple[float, float]:
    p = params
    st = product_state(cutoff, {"a_S": 0, "S_a": 0, "a_W": complex(p.alpha)})
    squeeze(st, "S_a", "a_S", p.g1, p.theta1)
    mix(st, "S_a", "a_W", _SPLIT)
    phase(st, "S_a", phi)
    attenuate(st, "a_W", math.sqrt(p.eta1))
    attenuate(st, "S_a", p.d1)
    mix(st, "S_a", "a_W", _JOIN)
    trace_out(st, "a_W")
    attenuate(st, "S_a", p.d2)
    attenuate(st, "a_S", math.sqrt(p.eta2))
    st = enlarge(st, cutoff + READOUT_MARGIN)
    squeeze(st, "S_a", "a_S", p.g2, p.theta2)
    return quadrature(st, "a_S")


#: certified agreement between cutoff and cutoff + 4
CONVERGENCE_TOL = 1e-7


def oracle_simulate(
    params: InterferometerParams, signal_n: int = 0, cutoff: int = 18, check_convergence: bool = True
) -> tuple[float, float]:
    """Probe-quadrature moments of the lossy pipeline for a Fock signal with
    ``signal_n`` photons, simulated on the truncated Fock space.

    Small parameters only: g1, g2 <= 0.5, |alpha| <= 1.5, signal_n <= 3.
    ``cutoff`` is the level count of the interferometer stage; the readout
    stage gets READOUT_MARGIN more.  With ``check_convergence`` the run is
    repeated at ``cutoff + 4`` and both moments must agree to CONVERGENCE_TOL.
    """
    p = params
    if max(p.g1, p.g2) > 0.5 or abs(p.alpha) > 1.5 or not 0 <= signal_n <= 3:
        raise ValueError("oracle supports g1, g2 <= 0.5, |alpha| <= 1.5 and signal_n in 0..3")
    if cutoff < 10:
        raise ValueError("cutoff must be >= 10")
    phi = p.phi0 + p.kappa * signal_n
    mean, var = _pipeline(p, phi, cutoff)
    if check_convergence:
        m2, v2 = _pipeline(p, phi, cutoff + 4)
        if abs(m2 - mean) > CONVERGENCE_TOL or abs(v2 - var) > CONVERGENCE_TOL:
            raise TruncationError(
                f"moments not converged between cutoff {cutoff} and {cutoff + 4}: "
                f"dmean={abs(m2 - mean):.2e}, dvar={abs(v2 - var):.2e}"
            )
    return mean, var
