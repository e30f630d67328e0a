"""Hamiltonians, bases, target gates and collapse operators.

All builders are vectorized: a scalar ``t`` gives a ``(d, d)`` matrix, an
array of times gives a ``(n, d, d)`` stack. Basis orderings are fixed:

=================  ==================================================
single (3-level)   ``|0>, |1>, |2>``
blockade full      ``|gg>, |ge>, |eg>, |ee>``
blockade eff.      ``|gg>, |ge>, |eg>``
mediated sub5      ``|00e>, |10g>, |01g>, |20g>, |02g>``
mediated eff.      ``|02g>, |phi0>, |20g>``
mediated sector    ``|01e>, |02e>, |10e>, |11g>, |12g>, |20e>, |21g>, |22g>``
=================  ==================================================

Gate targets are 2x2 on ``{|0>, |2>}`` (single) or 4x4 on
``{|gg>, |ge>, |eg>, |ee>}`` (blockade) and ``{|00>, |02>, |20>, |22>}``
(mediated).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .pulses import PI, PulseSchedule, drive_pair

SINGLE_LABELS = ("0", "1", "2")
BLOCKADE_LABELS = ("gg", "ge", "eg", "ee")
MEDIATED_SUB5_LABELS = ("00e", "10g", "01g", "20g", "02g")
MEDIATED_EFF_LABELS = ("02g", "phi0", "20g")
SECTOR22_LABELS = ("01e", "02e", "10e", "11g", "12g", "20e", "21g", "22g")


class Scheme(str, Enum):
    SINGLE = "single"
    BLOCKADE = "blockade"
    MEDIATED = "mediated"


class Frame(str, Enum):
    EFFECTIVE = "effective"
    FULL = "full"


@dataclass(frozen=True)
class SchemeConfig:
    """Physical scheme plus simulation frame.

    ``V`` is only read for the blockade pair, ``g1``/``g2`` only for the
    mediated scheme.
    """

    scheme: Scheme = Scheme.SINGLE
    frame: Frame = Frame.FULL
    V: float = 100.0
    g1: float = 100.0
    g2: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "frame", Frame(self.frame))
        if self.scheme is Scheme.BLOCKADE and not self.V > 0:
            raise ValueError("blockade pair requires V > 0")
        if self.scheme is Scheme.MEDIATED and not (self.g1 > 0 and self.g2 > 0):
            raise ValueError("mediated scheme requires g1 > 0 and g2 > 0")

    @property
    def G(self) -> float:
        return float(np.hypot(self.g1, self.g2))


@dataclass(frozen=True)
class GateSpec:
    theta: float
    psi: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0

    @classmethod
    def from_schedule(cls, s: PulseSchedule) -> "GateSpec":
        return cls(s.theta, s.psi, s.phi1, s.phi2)

    @property
    def eta(self) -> float:
        return PI + self.phi1 - self.phi2

    @property
    def eta_minus(self) -> float:
        return -self.eta


@dataclass(frozen=True)
class BasisSet:
    labels: tuple[str, ...]
    vectors: np.ndarray  # one vector per row

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        gram = v.conj() @ v.T
        if not np.allclose(gram, np.eye(len(v)), atol=1e-12):
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", v)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.vectors[self.labels.index(label)]


@dataclass(frozen=True)
class NoiseConfig:
    gamma_minus: float = 0.0
    gamma_z: float = 0.0

    def __post_init__(self):
        if self.gamma_minus < 0 or self.gamma_z < 0:
            raise ValueError("decay rates must be non-negative")


# --------------------------------------------------------------------------
# helpers


def _stack(t, d):
    t = np.asarray(t, dtype=float)
    return t, np.zeros(t.shape + (d, d), dtype=complex)


def _add_hc(H):
    return H + np.conj(np.swapaxes(H, -1, -2))


def _ket(i, d):
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


# --------------------------------------------------------------------------
# single three-level scheme


def bright_dark_basis(theta: float, psi: float, carriers=None, labels=("b", "d")) -> BasisSet:
    """Bright and dark combinations of two carrier states.

    ``|b> = sin(theta/2)|c0> + cos(theta/2) e^{i psi}|c2>`` and
    ``|d> = cos(theta/2)|c0> - sin(theta/2) e^{i psi}|c2>``. ``carriers``
    defaults to ``|0>, |2>`` of the three-level atom.
    """
    if carriers is None:
        carriers = (_ket(0, 3), _ket(2, 3))
    c0, c2 = (np.asarray(c, dtype=complex) for c in carriers)
    if not np.allclose([np.vdot(c0, c0), np.vdot(c2, c2), np.vdot(c0, c2)], [1, 1, 0], atol=1e-12):
        raise ValueError("carrier states must be orthonormal")
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    ph = np.exp(1j * psi)
    return BasisSet(tuple(labels), np.array([s * c0 + c * ph * c2, c * c0 - s * ph * c2]))


def single_rotating(t, s: PulseSchedule):
    """Rotating-frame three-level Hamiltonian on ``|0>, |1>, |2>``."""
    t, H = _stack(t, 3)
    dr = drive_pair(t, s)
    H[..., 0, 1] = dr.omega1
    H[..., 2, 1] = dr.omega2
    H = _add_hc(H)
    H[..., 1, 1] = -2 * dr.delta
    return H


def single_bright_block(t, s: PulseSchedule):
    """Traceless 2x2 block on ``{|b>, |1>}``: ``[[D, W e^{-i phi}], [W e^{i phi}, -D]]``.

    ``W`` is ``Omega`` or ``Omega - i Lambda`` with TQD.
    """
    t, H = _stack(t, 2)
    dr = drive_pair(t, s)
    # <b|H|1> = sin(theta/2) Omega1 + cos(theta/2) e^{-i psi} Omega2
    coupling = np.sin(s.theta / 2) * dr.omega1 + np.cos(s.theta / 2) * np.exp(-1j * s.psi) * dr.omega2
    H[..., 0, 1] = coupling
    H[..., 1, 0] = np.conj(coupling)
    H[..., 0, 0] = dr.delta
    H[..., 1, 1] = -dr.delta
    return H


def single_bright_frame(t, s: PulseSchedule):
    """Bright block (shifted by ``Delta``) plus a frozen dark state, in ``|0>,|1>,|2>``.

    Equal to ``single_rotating + Delta (I - |d><d|)``: the frame in which the
    dynamical phase of the bright sector is measured without the identity
    offset.
    """
    t = np.asarray(t, dtype=float)
    dark = bright_dark_basis(s.theta, s.psi)["d"]
    proj = np.eye(3) - np.outer(dark, dark.conj())
    delta = drive_pair(t, s).delta
    return single_rotating(t, s) + np.asarray(delta)[..., None, None] * proj


def instantaneous_eigenstates(t, s: PulseSchedule):
    """Eigenvectors of the bright block in the ``{|b>, |1>}`` basis.

    Returns ``(E_plus, E_minus, E)``; without TQD they satisfy
    ``H|E_pm> = pm E |E_pm>``.
    """
    from .pulses import phase_now, phi_profile

    phi = np.asarray(phi_profile(t, s.t_f))
    ph = np.exp(1j * np.asarray(phase_now(t, s)))
    c, sn = np.cos(phi / 2), np.sin(phi / 2)
    plus = np.stack([c + 0j, sn * ph], axis=-1)
    minus = np.stack([-sn / ph, c + 0j], axis=-1)
    return plus, minus, s.energy_scale


def single_gate_target(g: GateSpec) -> np.ndarray:
    """``exp(i eta/2 n.sigma)`` on ``{|0>, |2>}`` with ``n = (sin th cos psi, sin th sin psi, -cos th)``."""
    eta, th, psi = g.eta, g.theta, g.psi
    c, s = np.cos(eta / 2), np.sin(eta / 2)
    return np.array(
        [
            [c - 1j * s * np.cos(th), 1j * s * np.sin(th) * np.exp(-1j * psi)],
            [1j * s * np.sin(th) * np.exp(1j * psi), c + 1j * s * np.cos(th)],
        ]
    )


# --------------------------------------------------------------------------
# blockade pair


def blockade_full(t, s: PulseSchedule, V: float):
    """Two-atom Hamiltonian after removing ``V|ee><ee|`` by ``exp(iVt|ee><ee|)``."""
    t, H = _stack(t, 4)
    dr = drive_pair(t, s)
    fast = np.exp(-1j * V * t)
    H[..., 0, 2] = dr.omega1
    H[..., 1, 3] = dr.omega1 * fast
    H[..., 0, 1] = dr.omega2
    H[..., 2, 3] = dr.omega2 * fast
    H = _add_hc(H)
    H[..., 1, 1] = -2 * dr.delta
    H[..., 2, 2] = -2 * dr.delta
    H[..., 3, 3] = -4 * dr.delta
    return H


def blockade_effective(t, s: PulseSchedule):
    """Rotating-wave Hamiltonian on ``|gg>, |ge>, |eg>``."""
    t, H = _stack(t, 3)
    dr = drive_pair(t, s)
    H[..., 0, 1] = dr.omega2
    H[..., 0, 2] = dr.omega1
    H = _add_hc(H)
    H[..., 1, 1] = -2 * dr.delta
    H[..., 2, 2] = -2 * dr.delta
    return H


def blockade_bright_dark(theta: float, psi: float, ambient: int = 4) -> BasisSet:
    # |b> = sin(theta/2)|eg> + cos(theta/2) e^{i psi}|ge>
    return bright_dark_basis(theta, psi, carriers=(_ket(2, ambient), _ket(1, ambient)))


def blockade_gate_target(g: GateSpec) -> np.ndarray:
    e = np.exp(1j * g.eta)
    s2, c2 = np.sin(g.theta / 2) ** 2, np.cos(g.theta / 2) ** 2
    off = np.sin(g.theta) / 2 * (e - 1)
    return np.array(
        [
            [np.exp(1j * g.eta_minus), 0, 0, 0],
            [0, s2 + c2 * e, off * np.exp(1j * g.psi), 0],
            [0, off * np.exp(-1j * g.psi), c2 + s2 * e, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


# --------------------------------------------------------------------------
# mediated scheme


def _require_couplings(g1, g2):
    if not (g1 > 0 and g2 > 0):
        raise ValueError("mediated scheme requires g1 > 0 and g2 > 0")
    return float(np.hypot(g1, g2))


def mediated_drive_pair(t, s: PulseSchedule, g1: float, g2: float):
    """Physical drives that make the effective couplings canonical.

    Chosen so that ``-Omega2 g1/G`` and ``Omega1 g2/G`` equal the
    single-scheme ``Omega1`` and ``Omega2`` (TQD-aware).
    """
    G = _require_couplings(g1, g2)
    dr = drive_pair(t, s)
    return (G / g2) * dr.omega2, -(G / g1) * dr.omega1


def mediated_sub5(t, s: PulseSchedule, g1: float, g2: float):
    t, H = _stack(t, 5)
    _require_couplings(g1, g2)
    om1, om2 = mediated_drive_pair(t, s, g1, g2)
    delta = drive_pair(t, s).delta
    H[..., 0, 1] = g1
    H[..., 0, 2] = g2
    H[..., 3, 1] = om1
    H[..., 4, 2] = om2
    H = _add_hc(H)
    H[..., 1, 1] = -2 * delta
    H[..., 2, 2] = -2 * delta
    return H


def mediated_effective(t, s: PulseSchedule, g1: float, g2: float):
    t, H = _stack(t, 3)
    G = _require_couplings(g1, g2)
    om1, om2 = mediated_drive_pair(t, s, g1, g2)
    H[..., 0, 1] = -om2 * g1 / G
    H[..., 2, 1] = om1 * g2 / G
    H = _add_hc(H)
    H[..., 1, 1] = -2 * drive_pair(t, s).delta
    return H


def mediated_dark_sector(g1: float, g2: float) -> BasisSet:
    """Eigenvectors of the atom-qubit coupling inside the sub5 space.

    ``|phi0>`` has eigenvalue 0, ``|phi+->`` have ``+-G``.
    """
    G = _require_couplings(g1, g2)
    phi0 = np.array([0, g2, -g1, 0, 0]) / G
    plus = np.array([G, g1, g2, 0, 0]) / (np.sqrt(2) * G)
    minus = np.array([-G, g1, g2, 0, 0]) / (np.sqrt(2) * G)
    return BasisSet(("phi0", "phi+", "phi-"), np.array([phi0, plus, minus]))


def mediated_coupling_sub5(g1: float, g2: float) -> np.ndarray:
    H = np.zeros((5, 5))
    H[0, 1] = H[1, 0] = g1
    H[0, 2] = H[2, 0] = g2
    return H


def _atom_op(op, which):
    # product space |a1 a2 q>, index = 6*a1 + 2*a2 + q
    I3, I2 = np.eye(3), np.eye(2)
    parts = [op, I3] if which == 1 else [I3, op]
    return np.kron(np.kron(parts[0], parts[1]), I2)


def _mediated_static_parts(g1, g2):
    lower = np.zeros((3, 3))
    lower[0, 1] = 1  # |0><1|
    sigma_plus = np.array([[0, 0], [1, 0]])  # |e><g|, qubit order (g, e)
    I3 = np.eye(3)
    H1 = g1 * np.kron(np.kron(lower, I3), sigma_plus) + g2 * np.kron(np.kron(I3, lower), sigma_plus)
    H1 = H1 + H1.T
    raise_21 = np.zeros((3, 3))
    raise_21[2, 1] = 1  # |2><1|
    n1 = np.zeros((3, 3))
    n1[1, 1] = 1
    return H1, _atom_op(raise_21, 1), _atom_op(raise_21, 2), _atom_op(n1, 1) + _atom_op(n1, 2)


def mediated_full18(t, s: PulseSchedule, g1: float, g2: float):
    """Two three-level atoms plus the mediating qubit, full 18-dim space.

    Only used to cut out invariant subspaces; never propagated.
    """
    _require_couplings(g1, g2)
    t = np.asarray(t, dtype=float)
    H1, r1, r2, n = _mediated_static_parts(g1, g2)
    om1, om2 = mediated_drive_pair(t, s, g1, g2)
    delta = np.asarray(drive_pair(t, s).delta)
    drive = np.asarray(om1)[..., None, None] * r1 + np.asarray(om2)[..., None, None] * r2
    return H1 + _add_hc(drive) - 2 * delta[..., None, None] * n


def mediated_index(label: str) -> int:
    """Position of ``|a1 a2 q>`` in the 18-dim product basis."""
    a1, a2, q = label
    return 6 * int(a1) + 2 * int(a2) + (0 if q == "g" else 1)


def mediated_sector22(t, s: PulseSchedule, g1: float, g2: float):
    """Hamiltonian restricted to the 8-dim sector that contains ``|22g>``."""
    idx = [mediated_index(lbl) for lbl in SECTOR22_LABELS]
    H = mediated_full18(t, s, g1, g2)
    return H[..., idx, :][..., :, idx]


def mediated_gate_target(g: GateSpec) -> np.ndarray:
    e = np.exp(1j * g.eta)
    s2, c2 = np.sin(g.theta / 2) ** 2, np.cos(g.theta / 2) ** 2
    off = np.sin(g.theta) / 2 * (e - 1)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, c2 + s2 * e, off * np.exp(-1j * g.psi), 0],
            [0, off * np.exp(1j * g.psi), s2 + c2 * e, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )


# --------------------------------------------------------------------------
# dispatch and noise


def hamiltonian_for(s: PulseSchedule, cfg: SchemeConfig):
    """Vectorized ``t -> H(t)`` for the configured scheme and frame."""
    if cfg.scheme is Scheme.SINGLE:
        if cfg.frame is Frame.EFFECTIVE:
            return lambda t: single_bright_frame(t, s)
        return lambda t: single_rotating(t, s)
    if cfg.scheme is Scheme.BLOCKADE:
        if cfg.frame is Frame.EFFECTIVE:
            return lambda t: blockade_effective(t, s)
        return lambda t: blockade_full(t, s, cfg.V)
    if cfg.frame is Frame.EFFECTIVE:
        return lambda t: mediated_effective(t, s, cfg.g1, cfg.g2)
    return lambda t: mediated_sub5(t, s, cfg.g1, cfg.g2)


def dimension(cfg: SchemeConfig) -> int:
    return {
        (Scheme.SINGLE, Frame.EFFECTIVE): 3,
        (Scheme.SINGLE, Frame.FULL): 3,
        (Scheme.BLOCKADE, Frame.EFFECTIVE): 3,
        (Scheme.BLOCKADE, Frame.FULL): 4,
        (Scheme.MEDIATED, Frame.EFFECTIVE): 3,
        (Scheme.MEDIATED, Frame.FULL): 5,
    }[(cfg.scheme, cfg.frame)]


def gate_target(g: GateSpec, scheme: Scheme) -> np.ndarray:
    return {
        Scheme.SINGLE: single_gate_target,
        Scheme.BLOCKADE: blockade_gate_target,
        Scheme.MEDIATED: mediated_gate_target,
    }[Scheme(scheme)](g)


def embedding(cfg: SchemeConfig) -> np.ndarray:
    """Isometry from the gate's computational basis into the simulated space.

    Computational states that the simulated space does not contain (``|ee>``
    in the effective blockade frame, ``|00>``/``|22>`` for the mediated
    scheme) map to zero; the initial-state families never populate them.
    """
    d = dimension(cfg)
    if cfg.scheme is Scheme.SINGLE:
        E = np.zeros((3, 2))
        E[0, 0] = E[2, 1] = 1
    elif cfg.scheme is Scheme.BLOCKADE:
        E = np.eye(4)[:d]
    elif cfg.frame is Frame.FULL:
        E = np.zeros((5, 4))
        E[4, 1] = E[3, 2] = 1  # |02> -> |02g>, |20> -> |20g>
    else:
        E = np.zeros((3, 4))
        E[0, 1] = E[2, 2] = 1
    return E.astype(complex)


def collapse_ops(cfg: SchemeConfig, noise: NoiseConfig):
    """Lindblad channels as ``(operator, rate)`` pairs in the full space.

    Each channel enters as ``rate/2 * (2 A rho A^+ - A^+A rho - rho A^+A)``.
    """
    if cfg.scheme is Scheme.MEDIATED:
        raise ValueError("no noise model is defined for the mediated scheme")
    if cfg.scheme is Scheme.SINGLE:
        P = [np.outer(_ket(i, 3), _ket(i, 3)) for i in range(3)]
        lowering = [np.outer(_ket(0, 3), _ket(1, 3)), np.outer(_ket(1, 3), _ket(2, 3))]
        dephasing = [P[1] - P[0], P[2] - P[1]]
    else:
        sm = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|, order (g, e)
        sz = np.diag([-1.0, 1.0]).astype(complex)  # |e><e| - |g><g|
        I2 = np.eye(2)
        lowering = [np.kron(sm, I2), np.kron(I2, sm)]
        dephasing = [np.kron(sz, I2), np.kron(I2, sz)]
    ops = [(A.astype(complex), noise.gamma_minus) for A in lowering]
    ops += [(A.astype(complex), noise.gamma_z) for A in dephasing]
    return ops
