"""Control signals for the two-segment geometric loop.

Every function here accepts either a scalar time or a numpy array of times
and broadcasts accordingly. Time ``t_f`` belongs to the second segment
(half-open intervals ``[0, t_f)`` and ``[t_f, T]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import simpson

PI = np.pi

#: Panels per segment for the phase-bookkeeping quadratures (must be even).
QUAD_PANELS = 20_000


class Profile(str, Enum):
    CUBIC = "cubic"


@dataclass(frozen=True)
class PulseSchedule:
    """Full drive description for one loop.

    Parameters
    ----------
    total_time : float
        Loop duration ``T``. Each segment lasts ``t_f = T/2``.
    energy_scale : float
        Constant eigenvalue scale ``E`` (``Omega**2 + Delta**2 = E**2``).
    theta, psi : float
        Relative strength and relative phase of the two drives.
    phi1, phi2 : float
        Constant drive phase on the first and second segment.
    tqd : bool
        Add the counterdiabatic correction to the drives.
    """

    total_time: float
    energy_scale: float = 1.0
    theta: float = 0.0
    psi: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    tqd: bool = True
    profile: Profile = field(default=Profile.CUBIC)

    def __post_init__(self):
        if not np.isfinite(self.total_time) or self.total_time <= 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if not np.isfinite(self.energy_scale) or self.energy_scale <= 0:
            raise ValueError(f"energy_scale must be positive, got {self.energy_scale}")

    @property
    def t_f(self) -> float:
        return self.total_time / 2

    @property
    def eta(self) -> float:
        """Geometric phase ``pi + phi1 - phi2`` accumulated by the loop."""
        return PI + self.phi1 - self.phi2

    def with_(self, **changes) -> "PulseSchedule":
        return replace(self, **changes)


@dataclass(frozen=True)
class DriveSample:
    omega1: complex | np.ndarray
    omega2: complex | np.ndarray
    delta: float | np.ndarray
    lambda_cd: float | np.ndarray
    phi_now: float | np.ndarray


def _check_domain(t, upper):
    t = np.asarray(t, dtype=float)
    # one ulp of slack so that t = T computed as t_f + t_f is accepted
    tol = 4 * np.finfo(float).eps * max(upper, 1.0)
    if np.any(t < -tol) or np.any(t > upper + tol):
        raise ValueError(f"time outside [0, {upper}]")
    return t


def _local_tau(t, t_f):
    t = _check_domain(t, 2 * t_f)
    second = t >= t_f
    tau = np.where(second, (t - t_f) / t_f, t / t_f)
    return tau, second


def phi_profile(t, t_f: float):
    """Mixing angle ``3*pi*tau**2 - 2*pi*tau**3`` with segment-local ``tau``."""
    tau, _ = _local_tau(t, t_f)
    out = 3 * PI * tau**2 - 2 * PI * tau**3
    return out if out.ndim else float(out)


def phi_profile_rate(t, t_f: float):
    """Analytic time derivative of :func:`phi_profile`."""
    tau, _ = _local_tau(t, t_f)
    out = (6 * PI / t_f) * (tau - tau**2)
    return out if out.ndim else float(out)


def omega_delta(t, s: PulseSchedule):
    """Return ``(Omega, Delta) = (E sin phi, E cos phi)``."""
    phi = np.asarray(phi_profile(t, s.t_f))
    return s.energy_scale * np.sin(phi), s.energy_scale * np.cos(phi)


def lambda_cd(t, s: PulseSchedule):
    """Counterdiabatic amplitude ``(dOmega*Delta - Omega*dDelta) / (2 E**2)``.

    Built from the analytic derivatives of the profile, never from finite
    differences (the profile is discontinuous at ``t_f``).
    """
    phi = np.asarray(phi_profile(t, s.t_f))
    rate = np.asarray(phi_profile_rate(t, s.t_f))
    E = s.energy_scale
    omega, delta = E * np.sin(phi), E * np.cos(phi)
    d_omega, d_delta = E * np.cos(phi) * rate, -E * np.sin(phi) * rate
    out = (d_omega * delta - omega * d_delta) / (2 * E**2)
    return out if out.ndim else float(out)


def phase_now(t, s: PulseSchedule):
    _, second = _local_tau(t, s.t_f)
    out = np.where(second, s.phi2, s.phi1)
    return out if out.ndim else float(out)


def drive_pair(t, s: PulseSchedule) -> DriveSample:
    """Complex Rabi pair of the single three-level scheme.

    Without TQD: ``Omega1 = Omega sin(theta/2) e^{-i phi}``,
    ``Omega2 = Omega cos(theta/2) e^{-i phi + i psi}``. With TQD the real
    amplitude ``Omega`` is replaced by ``Omega - i Lambda`` in both.
    """
    omega, delta = omega_delta(t, s)
    lam = np.asarray(lambda_cd(t, s))
    phi_n = np.asarray(phase_now(t, s))
    amp = omega - 1j * lam if s.tqd else omega + 0j
    carrier = np.exp(-1j * phi_n)
    o1 = amp * np.sin(s.theta / 2) * carrier
    o2 = amp * np.cos(s.theta / 2) * carrier * np.exp(1j * s.psi)
    if o1.ndim == 0:
        return DriveSample(complex(o1), complex(o2), float(delta), float(lam), float(phi_n))
    return DriveSample(o1, o2, delta, lam, phi_n)


def _segment_bounds(s: PulseSchedule, segment: int):
    if segment == 1:
        # evaluate the left limit at t_f: the first segment is half-open
        return 0.0, np.nextafter(s.t_f, 0.0)
    if segment == 2:
        return s.t_f, s.total_time
    raise ValueError(f"segment must be 1 or 2, got {segment}")


def _simpson(f, a, b, panels=QUAD_PANELS):
    x = np.linspace(a, b, panels + 1)
    return float(simpson(f(x), x=x))


def dynamical_phase(s: PulseSchedule, energy: Callable | None = None) -> float:
    """Accumulated dynamical phase ``-(int_0^tf E_+ + int_tf^T E_-)``.

    The state rides the ``+E`` branch on the first segment and the ``-E``
    branch on the second. ``energy`` overrides the constant scale with a
    function of time (used as a negative control).
    """
    if energy is None:
        def energy(t):
            return np.full_like(t, s.energy_scale)
    first = _simpson(energy, *_segment_bounds(s, 1))
    second = _simpson(lambda t: -energy(t), *_segment_bounds(s, 2))
    return -(first + second)


def detuning_integral(s: PulseSchedule, segment: int, profile: Callable | None = None) -> float:
    """Integral of ``Delta(t)`` over one segment.

    A nonzero value would leave a relative phase between the bright and dark
    sectors in the full three-level frame. ``profile(t, t_f)`` swaps the
    mixing-angle schedule (test hook).
    """
    a, b = _segment_bounds(s, segment)
    prof = phi_profile if profile is None else profile

    def delta(t):
        return s.energy_scale * np.cos(np.asarray(prof(t, s.t_f)))

    return _simpson(delta, a, b)
