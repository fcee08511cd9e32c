import numpy as np
import pytest

from qentropy.models import (
    SIGMA_X,
    SIGMA_Z,
    MacrospinParams,
    QubitQuenchParams,
    macrospin_protocol,
    qubit_closed_forms,
    qubit_pulse_protocol,
    qubit_quench_protocol,
    spin_operators,
)
from qentropy.splitting import average_split


def test_qubit_quench_limits():
    p = qubit_quench_protocol(QubitQuenchParams(1.3, 0.0, 1.0))
    np.testing.assert_allclose(p.Htau, p.H0)
    p = qubit_quench_protocol(QubitQuenchParams(1.3, np.pi, 1.0))
    np.testing.assert_allclose(p.Htau, -1.3 * SIGMA_Z, atol=1e-15)
    np.testing.assert_allclose(qubit_closed_forms(QubitQuenchParams(1.0, 0.0, 3.0)), 0.0, atol=1e-14)
    with pytest.raises(ValueError):
        QubitQuenchParams(0.0, 1.0, 1.0)


def test_qubit_closed_form_sigma_value():
    sig, _, _ = qubit_closed_forms(QubitQuenchParams(1.0, 1.1, 1.0))
    assert sig == pytest.approx(2 * np.tanh(1) * 1.0 * np.sin(0.55) ** 2)
    assert sig == pytest.approx(0.41614, abs=5e-5)


def test_qubit_closed_forms_large_beta_finite():
    vals = qubit_closed_forms(QubitQuenchParams(1.0, 1.1, 500.0))
    assert all(np.isfinite(vals))


def test_pulse_limits():
    assert all(abs(v) < 1e-14 for v in average_split(qubit_pulse_protocol(1.0, 1.3, 0.0, 2.0)).as_dict().values())
    a = average_split(qubit_pulse_protocol(1.0, 0.0, 0.7, 2.0))
    assert abs(a.lambda_qu) < 1e-14 and abs(a.gamma_qu) < 1e-14
    with pytest.raises(ValueError):
        qubit_pulse_protocol(1.0, 1.3, -1.0, 1.0)


@pytest.mark.parametrize("d", [2, 3, 7, 50, 400])
def test_spin_algebra(d):
    Sx, Sy, Sz = spin_operators(d)
    S = (d - 1) / 2
    np.testing.assert_allclose(Sx @ Sy - Sy @ Sx, 1j * Sz, atol=1e-10)
    np.testing.assert_allclose(Sx @ Sx + Sy @ Sy + Sz @ Sz, S * (S + 1) * np.eye(d), atol=1e-10)
    assert abs(np.trace(Sz)) < 1e-12
    if d == 2:
        np.testing.assert_allclose(Sx, SIGMA_X / 2)
        np.testing.assert_allclose(Sz, SIGMA_Z / 2)


def test_macrospin_limits():
    p = macrospin_protocol(MacrospinParams(9, 1.0, 0.0, 2.0, 1.0))
    assert all(abs(v) < 1e-12 for v in average_split(p).as_dict().values())
    with pytest.raises(ValueError):
        MacrospinParams(1, 1.0, 0.5, 2.0, 1.0)
    with pytest.raises(ValueError):
        macrospin_protocol(MacrospinParams(401, 1.0, 0.5, 2.0, 1.0))
