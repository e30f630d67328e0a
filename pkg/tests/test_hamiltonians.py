import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

import geomgate.hamiltonians as hm
from geomgate.pulses import PI, PulseSchedule, drive_pair

from conftest import equal_up_to_phase

angles = st.floats(0.0, 2 * PI)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def sched(**kw):
    base = dict(total_time=6.0, theta=0.7, psi=0.4, phi1=0.2, phi2=1.3)
    base.update(kw)
    return PulseSchedule(**base)


def random_times(s, n=100, seed=0):
    return np.random.default_rng(seed).uniform(0, s.total_time, n)


def herm_residual(H):
    return np.max(np.abs(H - np.conj(np.swapaxes(H, -1, -2))))


# -------------------------------------------------------------- configs


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        hm.SchemeConfig(hm.Scheme.BLOCKADE, V=0.0)
    with pytest.raises(ValueError):
        hm.SchemeConfig(hm.Scheme.MEDIATED, g1=0.0)
    cfg = hm.SchemeConfig("mediated", "effective", g1=3.0, g2=4.0)
    assert cfg.scheme is hm.Scheme.MEDIATED and cfg.G == 5.0
    assert hm.SchemeConfig(hm.Scheme.MEDIATED, g1=7.0, g2=7.0).G == pytest.approx(np.sqrt(2) * 7)


def test_noise_config_rejects_negative():
    with pytest.raises(ValueError):
        hm.NoiseConfig(gamma_minus=-1e-3)


def test_gate_spec_eta():
    g = hm.GateSpec.from_schedule(sched())
    assert g.eta == pytest.approx(PI + 0.2 - 1.3)
    assert g.eta_minus == -g.eta


# -------------------------------------------------------------- single


def test_single_rotating_examples():
    s = sched()
    assert np.allclose(hm.single_rotating(0.0, s), np.diag([0, -2, 0]))
    t = random_times(s)
    assert herm_residual(hm.single_rotating(t, s)) < 1e-14
    H = hm.single_rotating(t, s.with_(theta=PI, psi=0.0))
    assert np.allclose(H[:, 2, 1], 0, atol=1e-15)


def test_bright_block_examples():
    s = sched()
    assert np.allclose(hm.single_bright_block(0.0, s), np.diag([1, -1]))
    H = hm.single_bright_block(random_times(s), s.with_(tqd=False))
    assert np.allclose(np.trace(H, axis1=1, axis2=2), 0)
    assert np.allclose(np.linalg.eigvalsh(H), [-1, 1], atol=1e-12)


@given(th=angles, ps=angles, tqd=st.booleans())
def test_rotating_frame_splits_into_bright_block_and_dark(th, ps, tqd):
    s = sched(theta=th, psi=ps, tqd=tqd)
    basis = hm.bright_dark_basis(th, ps)
    B = np.stack([basis["b"], np.eye(3)[1], basis["d"]], axis=1)
    t = random_times(s, seed=5)
    rotated = B.conj().T @ hm.single_rotating(t, s) @ B
    delta = drive_pair(t, s).delta
    expect = np.zeros_like(rotated)
    expect[:, :2, :2] = hm.single_bright_block(t, s) - delta[:, None, None] * np.eye(2)
    assert np.allclose(rotated, expect, atol=1e-12)


def test_bright_frame_adds_detuning_outside_dark():
    s = sched()
    t = random_times(s)
    diff = hm.single_bright_frame(t, s) - hm.single_rotating(t, s)
    d = hm.bright_dark_basis(s.theta, s.psi)["d"]
    assert np.allclose(diff @ d, 0, atol=1e-13)


def test_bright_dark_examples():
    b = hm.bright_dark_basis(0.0, 0.9)
    assert np.allclose(b["b"], np.exp(0.9j) * np.eye(3)[2])
    assert np.allclose(b["d"], np.eye(3)[0])
    b = hm.bright_dark_basis(PI / 2, 0.0)
    assert np.allclose(b["b"], np.array([1, 0, 1]) / np.sqrt(2))
    assert np.allclose(b["d"], np.array([1, 0, -1]) / np.sqrt(2))
    rng = np.random.default_rng(0)
    for th, ps in rng.uniform(0, 2 * PI, (100, 2)):
        b = hm.bright_dark_basis(th, ps)
        assert abs(np.vdot(b["b"], b["d"])) < 1e-12
    with pytest.raises(ValueError):
        hm.bright_dark_basis(1.0, 0.0, carriers=(np.eye(3)[0], np.eye(3)[0]))


def test_instantaneous_eigenstates():
    s = sched(tqd=False)
    plus, minus, E = hm.instantaneous_eigenstates(0.0, s)
    assert np.allclose(plus, [1, 0])
    t = random_times(s)
    plus, minus, E = hm.instantaneous_eigenstates(t, s)
    H = hm.single_bright_block(t, s)
    assert np.max(np.abs(np.einsum("nij,nj->ni", H, plus) - E * plus)) < 1e-10
    assert np.max(np.abs(np.einsum("nij,nj->ni", H, minus) + E * minus)) < 1e-10
    assert np.allclose(np.einsum("ni,ni->n", plus.conj(), minus), 0)


@given(th=angles, ps=angles, p1=angles, p2=angles)
def test_single_target_is_exponential_form(th, ps, p1, p2):
    g = hm.GateSpec(th, ps, p1, p2)
    n = (np.sin(th) * np.cos(ps), np.sin(th) * np.sin(ps), -np.cos(th))
    oracle = expm(0.5j * g.eta * (n[0] * SX + n[1] * SY + n[2] * SZ))
    U = hm.single_gate_target(g)
    assert np.allclose(U, oracle, atol=1e-12)
    assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-12)


def test_single_target_named_gates():
    assert np.allclose(hm.single_gate_target(hm.GateSpec(PI)), 1j * SZ)
    assert equal_up_to_phase(hm.single_gate_target(hm.GateSpec(PI / 2)), SX)
    pi8 = hm.single_gate_target(hm.GateSpec(0.0, phi1=0.0, phi2=3 * PI / 4))
    assert equal_up_to_phase(pi8, np.diag([1, np.exp(1j * PI / 4)]))


# -------------------------------------------------------------- blockade


def _atom_h(omega, delta):
    h = np.zeros(omega.shape + (2, 2), dtype=complex)
    h[..., 0, 1] = omega
    h[..., 1, 0] = np.conj(omega)
    h[..., 1, 1] = -2 * delta
    return h


@given(V=st.floats(1.0, 300.0), th=angles, ps=angles, tqd=st.booleans())
def test_blockade_full_matches_product_construction(V, th, ps, tqd):
    s = sched(theta=th, psi=ps, tqd=tqd)
    t = random_times(s, 20, seed=2)
    dr = drive_pair(t, s)
    I2 = np.eye(2)
    # atom 1 (first factor) is driven by omega1, atom 2 by omega2
    H = np.stack([
        np.kron(a, I2) + np.kron(I2, b) + V * np.diag([0, 0, 0, 1])
        for a, b in zip(_atom_h(dr.omega1, dr.delta), _atom_h(dr.omega2, dr.delta))
    ])
    ee = np.diag([0, 0, 0, 1.0])
    U = np.stack([expm(1j * V * tk * ee) for tk in t])
    transformed = U @ H @ np.conj(np.swapaxes(U, 1, 2)) - V * ee
    assert np.allclose(hm.blockade_full(t, s, V), transformed, atol=1e-10)


def test_blockade_full_examples():
    s = sched()
    assert np.allclose(hm.blockade_full(0.0, s, 50.0), np.diag([0, -2, -2, -4]))
    rng = np.random.default_rng(3)
    for V in rng.uniform(1, 200, 10):
        assert herm_residual(hm.blockade_full(random_times(s, 10), s, V)) < 1e-14


def test_blockade_projection_is_effective():
    s = sched()
    t = random_times(s)
    full = hm.blockade_full(t, s, 100.0)
    assert np.allclose(full[:, :3, :3], hm.blockade_effective(t, s))
    assert herm_residual(hm.blockade_effective(t, s)) < 1e-14


def test_blockade_effective_bright_dark_split():
    s = sched()
    t = random_times(s)
    # with omega2 carrying e^{+i psi} the decoupled combination uses -psi
    bd = hm.blockade_bright_dark(s.theta, -s.psi, ambient=3)
    B = np.stack([np.eye(3)[0], bd["b"], bd["d"]], axis=1)
    H = B.conj().T @ hm.blockade_effective(t, s) @ B
    delta = drive_pair(t, s).delta
    assert np.allclose(H[:, 2, :2], 0, atol=1e-13)
    assert np.allclose(H[:, 2, 2], -2 * delta)
    assert np.allclose(np.abs(H[:, 0, 1]) ** 2,
                       np.abs(drive_pair(t, s).omega1) ** 2 + np.abs(drive_pair(t, s).omega2) ** 2)
    H = hm.blockade_effective(t, s.with_(theta=PI / 2, psi=0.0))
    assert np.allclose(H[:, 0, 1], H[:, 0, 2])


def test_blockade_target_examples():
    swap_like = hm.blockade_gate_target(hm.GateSpec(PI / 2))
    assert np.allclose(swap_like, np.array([[-1, 0, 0, 0], [0, 0, -1, 0], [0, -1, 0, 0], [0, 0, 0, 1]]))
    g = hm.GateSpec(0.0, 0.3, 0.5, 0.1)
    assert np.allclose(hm.blockade_gate_target(g), np.diag([np.exp(-1j * g.eta), np.exp(1j * g.eta), 1, 1]))


@given(th=angles, ps=angles, p1=angles, p2=angles)
def test_two_qubit_targets_unitary_and_related(th, ps, p1, p2):
    g = hm.GateSpec(th, ps, p1, p2)
    for U in (hm.blockade_gate_target(g), hm.mediated_gate_target(g)):
        assert np.allclose(U.conj().T @ U, np.eye(4), atol=1e-12)
    flipped = hm.blockade_gate_target(hm.GateSpec(PI - th, -ps, p1, p2))
    assert np.allclose(flipped[1:3, 1:3], hm.mediated_gate_target(g)[1:3, 1:3], atol=1e-12)


# -------------------------------------------------------------- mediated


def test_mediated_sub5_examples():
    s = sched()
    H = hm.mediated_sub5(0.0, s, 100.0, 60.0)
    expect = hm.mediated_coupling_sub5(100.0, 60.0) + np.diag([0, -2, -2, 0, 0])
    assert np.allclose(H, expect)
    assert herm_residual(hm.mediated_sub5(random_times(s), s, 100.0, 60.0)) < 1e-14
    with pytest.raises(ValueError):
        hm.mediated_sub5(0.0, s, 0.0, 1.0)


@given(g1=st.floats(5.0, 200.0), g2=st.floats(5.0, 200.0), th=angles, tqd=st.booleans())
def test_mediated_effective_is_dark_projection(g1, g2, th, tqd):
    # In the interaction picture of the coupling H1 the states |02g>, |phi0>,
    # |20g> have zero H1 energy, so their mutual matrix elements carry no
    # e^{+-iGt} factors; dropping the oscillating terms leaves P (H - H1) P.
    s = sched(theta=th, tqd=tqd)
    t = random_times(s, 30, seed=4)
    dark = hm.mediated_dark_sector(g1, g2)
    P = np.stack([np.eye(5)[4], dark["phi0"], np.eye(5)[3]], axis=1)
    H2 = hm.mediated_sub5(t, s, g1, g2) - hm.mediated_coupling_sub5(g1, g2)
    assert np.allclose(P.conj().T @ H2 @ P, hm.mediated_effective(t, s, g1, g2), atol=1e-10)


@given(g1=st.floats(1.0, 200.0), g2=st.floats(1.0, 200.0), th=angles, ps=angles)
def test_mediated_effective_equals_single_rotating(g1, g2, th, ps):
    s = sched(theta=th, psi=ps)
    t = random_times(s, 100, seed=6)
    H = hm.mediated_effective(t, s, g1, g2)
    assert np.allclose(H, hm.single_rotating(t, s), atol=1e-12)
    assert herm_residual(H) < 1e-14


def test_mediated_drive_pair_examples():
    s = sched(total_time=2.0, theta=3 * PI / 2, tqd=False)
    o1, o2 = hm.mediated_drive_pair(0.5, s, 50.0, 50.0)
    assert (abs(o1), abs(o2)) == pytest.approx((1.0, 1.0))
    o1, o2 = hm.mediated_drive_pair(0.0, s.with_(tqd=True), 50.0, 50.0)
    assert o1 == 0 and o2 == 0


def test_mediated_dark_sector():
    g1, g2 = 80.0, 130.0
    G = np.hypot(g1, g2)
    H1 = hm.mediated_coupling_sub5(g1, g2)
    dark = hm.mediated_dark_sector(g1, g2)
    assert np.allclose(H1 @ dark["phi0"], 0, atol=1e-12)
    assert np.allclose(H1 @ dark["phi+"], G * dark["phi+"], atol=1e-12)
    assert np.allclose(H1 @ dark["phi-"], -G * dark["phi-"], atol=1e-12)
    assert np.allclose(hm.mediated_dark_sector(5.0, 5.0)["phi0"], np.array([0, 1, -1, 0, 0]) / np.sqrt(2))


def _cut(H, labels):
    idx = [hm.mediated_index(lbl) for lbl in labels]
    rest = [i for i in range(18) if i not in idx]
    return H[..., idx, :][..., :, idx], H[..., idx, :][..., :, rest]


def test_mediated_subspaces_are_invariant_in_product_space():
    s = sched()
    t = random_times(s, 20)
    H = hm.mediated_full18(t, s, 90.0, 110.0)
    assert herm_residual(H) < 1e-13
    inner, leak = _cut(H, hm.MEDIATED_SUB5_LABELS)
    assert np.allclose(inner, hm.mediated_sub5(t, s, 90.0, 110.0))
    assert np.allclose(leak, 0)
    inner, leak = _cut(H, hm.SECTOR22_LABELS)
    assert np.allclose(inner, hm.mediated_sector22(t, s, 90.0, 110.0))
    assert np.allclose(leak, 0)


def test_sector22_with_zero_drives_annihilates_22g():
    H1, *_ = hm._mediated_static_parts(100.0, 100.0)
    assert np.allclose(H1[:, hm.mediated_index("22g")], 0)


def test_mediated_target_examples():
    swap = hm.mediated_gate_target(hm.GateSpec(3 * PI / 2))
    assert np.allclose(swap, np.eye(4)[[0, 2, 1, 3]])
    g = hm.GateSpec(0.0, 0.0, 0.4, 0.1)
    assert np.allclose(hm.mediated_gate_target(g), np.diag([1, 1, np.exp(1j * g.eta), 1]))


# -------------------------------------------------------------- dispatch and noise


@pytest.mark.parametrize("scheme", list(hm.Scheme))
@pytest.mark.parametrize("frame", list(hm.Frame))
def test_dispatch_dimensions_and_embedding(scheme, frame):
    cfg = hm.SchemeConfig(scheme, frame)
    H = hm.hamiltonian_for(sched(), cfg)(np.linspace(0, 6, 7))
    assert H.shape == (7, hm.dimension(cfg), hm.dimension(cfg))
    assert herm_residual(H) < 1e-13
    E = hm.embedding(cfg)
    assert E.shape[0] == hm.dimension(cfg)
    gram = E.conj().T @ E
    assert np.allclose(gram, np.diag(np.diag(gram)))


def test_collapse_ops_single():
    ops = hm.collapse_ops(hm.SchemeConfig(), hm.NoiseConfig(0.2, 0.05))
    assert len(ops) == 4
    (A0, r0), (A2, r2), (Z0, z0), (Z2, z2) = ops
    assert np.allclose(A0, np.outer(np.eye(3)[0], np.eye(3)[1])) and r0 == 0.2
    assert np.allclose(A2, np.outer(np.eye(3)[1], np.eye(3)[2])) and r2 == 0.2
    assert np.allclose(Z0, np.diag([-1, 1, 0])) and z0 == 0.05
    assert np.allclose(Z2, np.diag([0, -1, 1])) and z2 == 0.05


def test_collapse_ops_blockade_and_mediated():
    ops = hm.collapse_ops(hm.SchemeConfig(hm.Scheme.BLOCKADE), hm.NoiseConfig(0.1, 0.3))
    assert len(ops) == 4
    lower = np.array([[0, 1], [0, 0]])
    assert np.allclose(ops[0][0], np.kron(lower, np.eye(2)))
    assert np.allclose(ops[1][0], np.kron(np.eye(2), lower))
    assert np.allclose(ops[2][0], np.diag([-1, -1, 1, 1]))
    assert [r for _, r in ops] == [0.1, 0.1, 0.3, 0.3]
    with pytest.raises(ValueError):
        hm.collapse_ops(hm.SchemeConfig(hm.Scheme.MEDIATED), hm.NoiseConfig())
