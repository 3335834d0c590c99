"""Upper-right hull, limiting loading directions, and the softmax gap."""

import math

import numpy as np
import pytest

from conftest import hull_instance, hull_oracle
from shiftlognmf import (
    expm1_profile,
    limiting_direction,
    softmax_gap,
    upper_right_hull,
)
from shiftlognmf.geometry import _direction

TRI = np.array([[1.0, 3.0], [2.0, 2.5], [3.0, 1.0]])


def test_two_point_hull():
    h = upper_right_hull([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(h.vertex_indices, [0, 1])
    assert h.n_vertices == 2 and h.n_edges == 1
    assert np.allclose(h.normals[0], [1.0 / math.sqrt(2.0)] * 2)
    assert np.allclose(h.edges[0], [1.0, -1.0])


def test_interior_point_dropped():
    h = upper_right_hull([[0.0, 1.0], [0.4, 0.4], [1.0, 0.0]])
    assert np.array_equal(h.vertex_indices, [0, 2])


def test_three_vertex_hull():
    h = upper_right_hull(TRI)
    assert np.array_equal(h.vertex_indices, [0, 1, 2])
    assert h.n_edges == 2
    x = TRI[h.vertex_indices, 0]
    y = TRI[h.vertex_indices, 1]
    assert np.all(np.diff(x) > 0) and np.all(np.diff(y) < 0)


def test_single_point_hull():
    h = upper_right_hull([[2.0, 3.0]])
    assert np.array_equal(h.vertex_indices, [0])
    assert h.n_vertices == 1 and h.n_edges == 0
    prof = limiting_direction(h, [[2.0, 3.0]], 0, 0.5, 10.0)
    assert np.array_equal(prof, [1.0])
    with pytest.raises(IndexError):
        _direction(h, 1, 0.5, 10.0)


def test_normals_are_unit_and_positive():
    rng = np.random.default_rng(70)
    for _ in range(50):
        P = rng.uniform(0.0, 5.0, size=(int(rng.integers(2, 9)), 2))
        h = upper_right_hull(P)
        if h.n_edges == 0:
            continue
        assert np.allclose(np.hypot(h.normals[:, 0], h.normals[:, 1]), 1.0)
        assert np.all(h.normals > 0.0)
        # Each normal scores its own edge's endpoints equally and every other
        # point strictly lower: the supporting-line property.
        V = P[h.vertex_indices]
        for q in range(h.n_edges):
            z = h.normals[q]
            hval = float(z @ V[q])
            assert abs(float(z @ V[q + 1]) - hval) < 1e-9
            others = np.delete(np.arange(P.shape[0]), h.vertex_indices[q : q + 2])
            if others.size:
                assert np.all(P[others] @ z < hval - 1e-12)


def test_degenerate_inputs_rejected():
    with pytest.raises(ValueError, match="points 0 and 2 coincide"):
        upper_right_hull([[1.0, 2.0], [3.0, 4.0], [1.0, 2.0]])
    with pytest.raises(ValueError, match="points 0, 1 and 2 are collinear"):
        upper_right_hull([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ValueError):
        upper_right_hull([[1.0, -0.5]])
    with pytest.raises(ValueError):
        upper_right_hull(np.ones((2, 3)))


def test_hull_matches_brute_force():
    rng = np.random.default_rng(71)
    for trial in range(300):
        p = int(rng.integers(1, 8))
        P = rng.uniform(0.0, 3.0, size=(p, 2))
        got = upper_right_hull(P).vertex_indices.tolist()
        assert got == hull_oracle(P), f"trial {trial}: {P!r}"


def test_edge_mixture_masses():
    h = upper_right_hull(TRI)
    for q in (0, 1):
        for omega in (0.25, 0.5, 0.75):
            prof = limiting_direction(h, TRI, q, omega, 50.0)
            assert abs(prof.sum() - 1.0) < 1e-12
            left, right = h.vertex_indices[q], h.vertex_indices[q + 1]
            off = 1.0 - prof[left] - prof[right]
            assert abs(off) < 1e-6
            assert abs(prof[right] - omega) < 1e-6


def test_vertex_selection_at_omega_extremes():
    h = upper_right_hull(TRI)
    # (q, omega) -> vertex k = q + omega covers the first, middle, and last
    # vertex through their normal-cone directions.
    for q, omega, k in ((0, 0.0, 0), (0, 1.0, 1), (1, 0.0, 1), (1, 1.0, 2)):
        prof = limiting_direction(h, TRI, q, omega, 50.0)
        assert prof[h.vertex_indices[k]] > 1.0 - 1e-6


def test_two_vertex_support_all_omegas():
    pts = np.array([[0.2, 1.5], [1.4, 0.3]])
    h = upper_right_hull(pts)
    for omega in (0.0, 0.25, 0.5, 0.75, 1.0):
        prof = limiting_direction(h, pts, 0, omega, 100.0)
        assert prof.sum() == pytest.approx(1.0, abs=1e-12)
        if omega in (0.0, 1.0):
            assert prof[int(omega)] > 1.0 - 1e-9
        else:
            assert abs(prof[1] - omega) < 1e-9


def test_adjacent_vertex_mass_random_sets():
    rng = np.random.default_rng(72)
    for trial in range(25):
        P = hull_instance(rng)
        h = upper_right_hull(P)
        q = int(rng.integers(h.n_edges))
        omega = float(rng.uniform(0.05, 0.95))
        prof = limiting_direction(h, P, q, omega, 100.0)
        pair = prof[h.vertex_indices[q]] + prof[h.vertex_indices[q + 1]]
        assert pair >= 1.0 - 1e-4


def test_mass_concentrates_in_the_limit_for_any_geometry():
    # Unconditioned point clouds can have arbitrarily thin hull margins, so
    # no fixed t works for all of them; the mass must still concentrate on
    # the edge's endpoints once t is large enough for the draw.
    rng = np.random.default_rng(74)
    for trial in range(20):
        P = rng.uniform(0.05, 2.0, size=(int(rng.integers(3, 11)), 2))
        h = upper_right_hull(P)
        if h.n_edges == 0:
            continue
        q = int(rng.integers(h.n_edges))
        omega = float(rng.uniform(0.1, 0.9))
        t = 100.0
        pair = 0.0
        while t <= 1e6:
            prof = limiting_direction(h, P, q, omega, t)
            pair = prof[h.vertex_indices[q]] + prof[h.vertex_indices[q + 1]]
            if pair >= 1.0 - 1e-4:
                break
            t *= 4.0
        assert pair >= 1.0 - 1e-4, f"trial {trial}: no concentration by t={t}"


def test_limiting_direction_validation():
    h = upper_right_hull(TRI)
    with pytest.raises(ValueError, match="omega"):
        limiting_direction(h, TRI, 0, 1.5, 10.0)
    with pytest.raises(ValueError, match="missing"):
        limiting_direction(h, TRI[:2], 0, 0.5, 10.0)
    with pytest.raises(IndexError):
        limiting_direction(h, TRI, 2, 0.5, 10.0)
    with pytest.raises(IndexError):
        limiting_direction(h, TRI, -1, 0.5, 10.0)


def test_expm1_profile():
    eta = np.array([1.0, 2.0, 0.5])
    prof = expm1_profile(eta)
    want = np.expm1(eta) / np.expm1(eta).sum()
    assert np.allclose(prof, want, rtol=1e-14)
    assert abs(prof.sum() - 1.0) < 1e-12
    big = expm1_profile([1e4, 1e4 - 1.0, 2.0])
    assert np.all(np.isfinite(big)) and abs(big.sum() - 1.0) < 1e-12
    with pytest.warns(UserWarning, match="degenerate"):
        assert np.array_equal(expm1_profile([0.0, 0.0]), [0.5, 0.5])


def test_softmax_gap_hand_values():
    assert softmax_gap([10.0, 0.0, 0.0]) < 3.0 * math.exp(-10.0)
    t = 7.0
    assert softmax_gap([t, t]) == 0.0
    gaps = [softmax_gap(np.array([1.0, 0.5, 2.0]) + s) for s in (0.0, 2.0, 4.0, 8.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    with pytest.warns(UserWarning, match="degenerate"):
        assert softmax_gap([0.0, 0.0]) == 0.0


def test_softmax_gap_rate_bound():
    # The deviation from the softmax limit decays like p * exp(-max eta).
    rng = np.random.default_rng(73)
    for _ in range(50):
        p = int(rng.integers(2, 8))
        eta = rng.uniform(5.0, 12.0, size=p)
        assert softmax_gap(eta) <= 3.0 * p * math.exp(-float(eta.max()))
