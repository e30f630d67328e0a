"""Fixed-step propagation of states, unitaries and density matrices.

Every run is split at the breakpoint ``t_f`` (default ``T/2``) so that no
step straddles the discontinuity of the drives; both segments are gridded
independently and the first one is closed with the left limit of ``H``.
Nothing is renormalized along the way: drift is measured afterwards and a
run that drifts by more than ``FAIL_DRIFT`` raises :class:`IntegrationError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import hamiltonians as hm
from ._rk4 import rk4_linear
from .pulses import PulseSchedule

#: step * max|eig H| bound
STEP_FACTOR = 0.01
#: step * (fastest explicit oscillation, e.g. V) bound
FREQ_FACTOR = 0.1
#: step <= STEP_CAP * T
STEP_CAP = 1e-3
FAIL_DRIFT = 1e-6
CHUNK = 4096


class IntegrationError(RuntimeError):
    pass


@dataclass
class EvolutionResult:
    times: np.ndarray
    final: np.ndarray
    kind: str  # "state", "unitary" or "density"
    step: float
    states: np.ndarray | None = None
    fidelity: np.ndarray | None = None

    @property
    def final_fidelity(self) -> float | None:
        return None if self.fidelity is None else float(self.fidelity[-1])


def _as_stack(h, ts):
    H = np.asarray(h(ts), dtype=complex)
    if H.ndim == 2:
        H = np.broadcast_to(H, (len(ts),) + H.shape)
    return H


def _segments(T, t_f):
    if not 0 < t_f < T:
        raise ValueError("breakpoint must lie strictly inside (0, T)")
    return ((0.0, t_f, True), (t_f, T, False))


def spectral_bound(h: Callable, T: float, t_f: float | None = None, samples: int = 257) -> float:
    """Largest ``|eigenvalue|`` of ``H`` over a sample grid of both segments."""
    t_f = T / 2 if t_f is None else t_f
    ts = np.concatenate(
        [np.linspace(0, np.nextafter(t_f, 0), samples), np.linspace(t_f, T, samples)]
    )
    H = _as_stack(h, ts)
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def choose_step(h: Callable, T: float, t_f: float | None = None, max_frequency: float = 0.0,
                scale: float = 1.0) -> float:
    bound = scale * spectral_bound(h, T, t_f)
    step = STEP_CAP * T
    if bound > 0:
        step = min(step, STEP_FACTOR / bound)
    if max_frequency > 0:
        step = min(step, FREQ_FACTOR / max_frequency)
    return step


def _integrate(gen, y, T, t_f, step, n_samples):
    """Run both segments; return (times, stored states, final)."""
    times, stored = [0.0], [y.copy()]
    for a, b, closes_left in _segments(T, t_f):
        n = max(1, math.ceil((b - a) / step - 1e-9))
        dt = (b - a) / n
        stride = n if not n_samples else max(1, math.ceil(n / n_samples))
        stops = np.unique(np.concatenate([np.arange(0, n, CHUNK), np.arange(0, n, stride), [n]]))
        for lo, hi in zip(stops[:-1], stops[1:]):
            grid_t = a + dt * np.arange(lo, hi + 1)
            if closes_left and hi == n:
                grid_t[-1] = np.nextafter(t_f, 0.0)
            mid_t = a + dt * (np.arange(lo, hi) + 0.5)
            y = rk4_linear(gen(grid_t), gen(mid_t), dt, y)
            if n_samples and (hi % stride == 0 or hi == n):
                times.append(b if hi == n else a + dt * hi)
                stored.append(y.copy())
    if not n_samples:
        times.append(T)
        stored.append(y.copy())
    return np.array(times), np.array(stored), y, dt


def _schrodinger_generator(h):
    def gen(ts):
        return np.ascontiguousarray(-1j * _as_stack(h, ts))
    return gen


def _breakpoint(T, t_f):
    return T / 2 if t_f is None else t_f


def propagate_state(h: Callable, psi0, T: float, step: float | None = None, *,
                    t_f: float | None = None, n_samples: int | None = None,
                    max_frequency: float = 0.0) -> EvolutionResult:
    """Integrate ``i dpsi/dt = H(t) psi`` from 0 to ``T``.

    ``h`` maps an array of times to a stack of matrices (a constant matrix
    is broadcast). ``n_samples`` stores roughly that many states per segment.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalized")
    t_f = _breakpoint(T, t_f)
    step = choose_step(h, T, t_f, max_frequency) if step is None else step
    if step <= 0:
        raise ValueError("step must be positive")
    times, states, final, _ = _integrate(
        _schrodinger_generator(h), psi0.reshape(-1, 1), T, t_f, step, n_samples
    )
    states = states[..., 0]
    drift = np.max(np.abs(np.linalg.norm(states, axis=-1) - 1))
    if drift > FAIL_DRIFT:
        raise IntegrationError(f"norm drift {drift:.2e}; use a smaller step")
    return EvolutionResult(times, final[:, 0], "state", step, states if n_samples else None)


def propagate_unitary(h: Callable, T: float, step: float | None = None, *,
                      t_f: float | None = None, n_samples: int | None = None,
                      max_frequency: float = 0.0, dim: int | None = None) -> EvolutionResult:
    """Propagator ``U(T)``; columns are the evolved basis states."""
    t_f = _breakpoint(T, t_f)
    if dim is None:
        dim = _as_stack(h, np.zeros(1)).shape[-1]
    step = choose_step(h, T, t_f, max_frequency) if step is None else step
    times, states, final, _ = _integrate(
        _schrodinger_generator(h), np.eye(dim, dtype=complex), T, t_f, step, n_samples
    )
    eye = np.eye(dim)
    drift = np.max(np.abs(np.conj(np.swapaxes(states, -1, -2)) @ states - eye))
    if drift > FAIL_DRIFT:
        raise IntegrationError(f"unitarity drift {drift:.2e}; use a smaller step")
    return EvolutionResult(times, final, "unitary", step, states if n_samples else None)


def lindblad_generator(h: Callable, ops: Sequence):
    """Row-major vectorized Lindblad generator ``t -> L(t)`` (stack of d^2 x d^2).

    ``vec(A rho B) = (A kron B^T) vec(rho)``.
    """
    d = _as_stack(h, np.zeros(1)).shape[-1]
    eye = np.eye(d)
    diss = np.zeros((d * d, d * d), dtype=complex)
    for A, rate in ops:
        if rate == 0:
            continue
        A = np.asarray(A, dtype=complex)
        AdA = A.conj().T @ A
        diss += rate * (np.kron(A, A.conj()) - 0.5 * np.kron(AdA, eye) - 0.5 * np.kron(eye, AdA.T))

    def gen(ts):
        H = _as_stack(h, ts)
        n = len(ts)
        left = (H[:, :, None, :, None] * eye[None, None, :, None, :]).reshape(n, d * d, d * d)
        right = (eye[None, :, None, :, None] * np.swapaxes(H, 1, 2)[:, None, :, None, :]).reshape(
            n, d * d, d * d
        )
        return np.ascontiguousarray(-1j * (left - right) + diss)

    return gen


def propagate_lindblad(h: Callable, rho0, ops: Sequence, T: float, step: float | None = None, *,
                       t_f: float | None = None, n_samples: int | None = None,
                       max_frequency: float = 0.0) -> EvolutionResult:
    """Integrate ``drho/dt = -i[H, rho] + sum rate/2 (2 A rho A^+ - {A^+A, rho})``."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if abs(np.trace(rho0) - 1) > 1e-10 or not np.allclose(rho0, rho0.conj().T, atol=1e-12):
        raise ValueError("rho0 must be a Hermitian unit-trace matrix")
    t_f = _breakpoint(T, t_f)
    if step is None:
        # the commutator doubles the spectral spread
        step = choose_step(h, T, t_f, max_frequency, scale=2.0)
        rates = sum(r * np.linalg.norm(A, 2) ** 2 for A, r in ops)
        if rates > 0:
            step = min(step, 0.05 / rates)
    times, states, final, _ = _integrate(
        lindblad_generator(h, ops), rho0.reshape(-1, 1), T, t_f, step, n_samples
    )
    states = states.reshape(-1, d, d)
    drift = np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1))
    if drift > FAIL_DRIFT:
        raise IntegrationError(f"trace drift {drift:.2e}; use a smaller step")
    return EvolutionResult(times, final.reshape(d, d), "density", step, states if n_samples else None)


def max_frequency_for(cfg: hm.SchemeConfig) -> float:
    if cfg.scheme is hm.Scheme.BLOCKADE and cfg.frame is hm.Frame.FULL:
        return cfg.V
    return 0.0


def run_loop(s: PulseSchedule, cfg: hm.SchemeConfig, noise: hm.NoiseConfig | None = None, *,
             psi0=None, rho0=None, target=None, family=None, n_samples: int | None = None,
             step: float | None = None) -> EvolutionResult:
    """Run one two-segment loop of the configured scheme.

    With neither ``psi0`` nor ``rho0`` the propagator is computed. If
    ``target`` is given a fidelity series is attached: for propagators it is
    the gate unitary (averaged over ``family``), otherwise a state vector in
    the simulated space.
    """
    from . import metrics

    h = hm.hamiltonian_for(s, cfg)
    d = hm.dimension(cfg)
    freq = max_frequency_for(cfg)
    if noise is not None:
        if cfg.scheme is hm.Scheme.MEDIATED:
            raise ValueError("no noise model is defined for the mediated scheme")
        if cfg.scheme is hm.Scheme.BLOCKADE and cfg.frame is hm.Frame.EFFECTIVE:
            raise ValueError("noise needs the full blockade frame")
        if rho0 is None:
            if psi0 is None:
                raise ValueError("noisy runs need an initial state")
            psi0 = np.asarray(psi0, dtype=complex)
            rho0 = np.outer(psi0, psi0.conj())
    for init in (psi0, rho0):
        if init is not None and np.shape(init)[0] != d:
            raise ValueError(f"initial state has dimension {np.shape(init)[0]}, scheme needs {d}")

    if rho0 is not None:
        ops = hm.collapse_ops(cfg, noise or hm.NoiseConfig())
        res = propagate_lindblad(h, rho0, ops, s.total_time, step, n_samples=n_samples,
                                 max_frequency=freq)
    elif psi0 is not None:
        res = propagate_state(h, psi0, s.total_time, step, n_samples=n_samples, max_frequency=freq)
    else:
        res = propagate_unitary(h, s.total_time, step, n_samples=n_samples, max_frequency=freq,
                                dim=d)

    if target is not None:
        traj = res.states if res.states is not None else res.final[None]
        if res.kind == "unitary":
            fam = family if family is not None else metrics.family_for(cfg)
            res.fidelity = np.array([metrics.average_fidelity(U, target, fam) for U in traj])
        elif res.kind == "state":
            res.fidelity = np.abs(traj @ np.conj(target)) ** 2
        else:
            res.fidelity = np.array([metrics.state_fidelity(r, target) for r in traj])
    return res


def verify_22g_sector(s: PulseSchedule, g1: float, g2: float, step: float | None = None) -> dict:
    """Leakage out of ``|22g>`` over one loop of the mediated scheme.

    Propagates ``|22g>`` in its invariant 8-dim sector and reports
    ``1 - |<22g|psi(T)>|^2``.
    """
    import warnings

    drive_peak = max(
        np.max(np.abs(np.asarray(x)))
        for x in hm.mediated_drive_pair(np.linspace(0, s.total_time, 501), s, g1, g2)
    )
    if min(g1, g2) < 10 * drive_peak:
        warnings.warn("couplings are not much larger than the drives; expect leakage",
                      stacklevel=2)
    psi0 = np.zeros(8, dtype=complex)
    psi0[-1] = 1
    res = propagate_state(lambda t: hm.mediated_sector22(t, s, g1, g2), psi0, s.total_time, step)
    return {
        "leakage": float(1 - abs(res.final[-1]) ** 2),
        "final_state": res.final,
        "step": res.step,
    }
