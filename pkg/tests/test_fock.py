import math

import numpy as np
import pytest

from hybridqnd import fock
from hybridqnd import interferometer as itf
from hybridqnd.interferometer import InterferometerParams
from hybridqnd.network import quadrature_moments


def engine_moments(p, n=0):
    net = itf.build_lossy_network(p, p.phi0 + p.kappa * n)
    return quadrature_moments(net, itf.A_S)


def photon_number(state, label):
    probs = np.abs(state.amplitudes) ** 2
    axes = tuple(k for k in range(probs.ndim) if k != state.axis(label))
    return float(np.arange(state.cutoff) @ probs.sum(axis=axes)) / state.norm


def test_vacuum_pipeline():
    p = InterferometerParams(g1=0.0, g2=0.0, N_alpha=0.0)
    mean, var = fock.oracle_simulate(p, cutoff=10)
    assert mean == pytest.approx(0.0, abs=1e-12) and var == pytest.approx(1.0, abs=1e-12)


def test_single_squeezer():
    st = fock.product_state(16, {"S": 0, "a": 0})
    fock.squeeze(st, "S", "a", 0.3, 0.0)
    assert st.deficit < fock.NORM_GUARD
    for label in ("S", "a"):
        mean, var = fock.quadrature(st, label)
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert var == pytest.approx(1 + 2 * 0.3**2, abs=1e-9)
        assert photon_number(st, label) == pytest.approx(0.09, abs=1e-9)


def test_coherent_state_preparation():
    st = fock.product_state(20, {"a": 1.2 * np.exp(0.7j)})
    mean, var = fock.quadrature(st, "a")
    assert mean == pytest.approx(2 * 1.2 * math.cos(0.7), abs=1e-9)
    assert var == pytest.approx(1.0, abs=1e-9)


def test_attenuation_keeps_trace_and_scales_amplitude():
    st = fock.product_state(20, {"a": 1.0 + 0.5j, "b": 0})
    fock.attenuate(st, "a", 0.6)
    assert st.deficit < fock.NORM_GUARD
    mean, var = fock.quadrature(st, "a")
    assert mean == pytest.approx(2 * 0.6 * 1.0, abs=1e-9)
    assert var == pytest.approx(1.0, abs=1e-9)


def test_mixing_unitary_is_unitary():
    c = 8
    U = fock.mixing_unitary(c, itf._LRP_SPLIT)
    # on the full truncated space the block structure keeps total number below c
    low = np.add.outer(np.arange(c), np.arange(c)).ravel() < c
    block = U[np.ix_(low, low)]
    assert np.allclose(block.conj().T @ block, np.eye(low.sum()), atol=1e-12)


def test_reference_pipeline_case():
    p = InterferometerParams(g1=0.3, g2=0.3, theta1=0.0, theta2=np.pi, N_alpha=1.0, theta_alpha=np.pi / 2,
                             phi0=0.2, kappa=0.0, eta1=0.8)
    mean, var = fock.oracle_simulate(p)
    e_mean, e_var = engine_moments(p)
    assert abs(mean - e_mean) <= 1e-6 and abs(var - e_var) <= 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_cases_against_engine(seed):
    rng = np.random.default_rng(100 + seed)
    p = InterferometerParams(
        g1=rng.uniform(0, 0.5), g2=rng.uniform(0, 0.5), theta1=rng.uniform(0, 6), theta2=rng.uniform(0, 6),
        phi0=rng.uniform(0, np.pi), kappa=0.2, N_alpha=rng.uniform(0, 2.25), theta_alpha=rng.uniform(0, 6),
        eta1=0.9, eta2=0.8, d1=0.8, d2=0.9,
    )
    n = int(rng.integers(0, 4))
    mean, var = fock.oracle_simulate(p, n)
    e_mean, e_var = engine_moments(p, n)
    assert abs(mean - e_mean) <= 1e-6 and abs(var - e_var) <= 1e-6


def test_truncation_guard_demands_larger_cutoff():
    with pytest.raises(fock.TruncationError, match="increase the cutoff"):
        fock.product_state(6, {"a": 1.5})


def test_convergence_failure_is_reported():
    # cutoff 10 cannot hold a bright probe through the squeezers
    p = InterferometerParams(g1=0.5, g2=0.5, N_alpha=2.25)
    with pytest.raises(fock.TruncationError):
        fock.oracle_simulate(p, cutoff=10)


@pytest.mark.parametrize(
    "kw, extra",
    [
        (dict(g1=0.6), {}),
        (dict(N_alpha=4.0), {}),
        ({}, dict(signal_n=4)),
        ({}, dict(cutoff=8)),
    ],
)
def test_domain_limits(kw, extra):
    p = InterferometerParams(**{"g1": 0.1, "g2": 0.1, "N_alpha": 1.0, **kw})
    with pytest.raises(ValueError):
        fock.oracle_simulate(p, **extra)
