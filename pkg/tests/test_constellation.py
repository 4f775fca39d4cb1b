import math

import numpy as np
import pytest

from effcap.constellation import Constellation, Kind, average_energy, from_name, make_constellation

SUPPORTED = [("bpsk", 2), ("pam", 2), ("pam", 4), ("pam", 8), ("qam", 4), ("qam", 16), ("qam", 64),
             ("psk", 2), ("psk", 4), ("psk", 8), ("psk", 16)]


@pytest.mark.parametrize("kind,order", SUPPORTED)
def test_type_invariants(kind, order):
    c = make_constellation(kind, order)
    assert c.size == order
    assert abs(c.probabilities.sum() - 1) < 1e-12
    assert abs(average_energy(c) - 1) < 1e-12
    d = np.abs(c.points[:, None] - c.points[None, :]) + np.eye(order)
    assert d.min() > 1e-9
    assert c.is_real == (kind in ("bpsk", "pam") or (kind == "psk" and order == 2))


def test_bpsk():
    c = make_constellation("bpsk", 2)
    assert set(c.points.tolist()) == {1 + 0j, -1 + 0j}
    np.testing.assert_array_equal(c.probabilities, [0.5, 0.5])
    assert c.is_real


def test_qam4_points():
    c = make_constellation(Kind.QAM, 4)
    want = {complex(a, b) / math.sqrt(2) for a in (1, -1) for b in (1, -1)}
    got = {complex(round(p.real, 12), round(p.imag, 12)) for p in c.points}
    assert got == {complex(round(w.real, 12), round(w.imag, 12)) for w in want}


def test_qam16_scale():
    c = make_constellation("qam", 16)
    # unnormalized +-1,+-3 lattice has mean energy 10
    assert np.isclose(np.abs(c.points).min(), math.sqrt(2) / math.sqrt(10), atol=1e-12)
    assert abs(average_energy(c) - 1) < 1e-12


@pytest.mark.parametrize("order", [4, 16, 64])
def test_qam_splits_into_two_pam_axes(order):
    c = make_constellation("qam", order)
    assert np.isclose(np.mean(c.points.real ** 2), 0.5, atol=1e-12)
    assert np.isclose(np.mean(c.points.imag ** 2), 0.5, atol=1e-12)
    side = math.isqrt(order)
    assert len(np.unique(np.round(c.points.real, 12))) == side


def test_gaussian_marker():
    g = make_constellation("gaussian")
    assert g.is_gaussian and g.size == 0 and not g.is_real
    assert average_energy(g) == 1.0


def test_average_energy_unnormalized():
    c = Constellation(Kind.PAM, np.array([0, 2], complex), np.array([0.5, 0.5]), True)
    assert average_energy(c) == 2.0


@pytest.mark.parametrize("kind,order", [("bpsk", 4), ("qam", 8), ("qam", 2), ("psk", 1), ("pam", 0), ("nope", 4)])
def test_rejects_bad_orders(kind, order):
    with pytest.raises(ValueError):
        make_constellation(kind, order)


def test_from_name():
    assert from_name("QAM16").size == 16
    assert from_name("gaussian").is_gaussian
    for bad in ("qam", "bpsk4", "foo", "gaussian2"):
        with pytest.raises(ValueError):
            from_name(bad)


def test_points_are_read_only():
    c = from_name("qam4")
    with pytest.raises(ValueError):
        c.points[0] = 0
