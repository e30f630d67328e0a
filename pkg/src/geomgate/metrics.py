"""Fidelity measures: family-averaged gate fidelity, state fidelity, noise slopes."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from . import hamiltonians as hm

DEFAULT_GRID = 8


class FamilyKind(str, Enum):
    SINGLE_QUBIT_2ANGLE = "single_qubit_2angle"
    BLOCKADE_PAIR_4ANGLE = "blockade_pair_4angle"
    MEDIATED_SWAP_2ANGLE = "mediated_swap_2angle"


@dataclass(frozen=True, eq=False)
class InitialStateFamily:
    """Uniform angle grid of initial states in a gate's computational basis.

    ``embedding`` maps those states into the simulated space (identity when
    ``None``).
    """

    kind: FamilyKind
    grid_points_per_angle: int = DEFAULT_GRID
    embedding: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.grid_points_per_angle < 5:
            raise ValueError("need at least 5 grid points per angle")

    @property
    def target_dim(self) -> int:
        return 2 if self.kind is FamilyKind.SINGLE_QUBIT_2ANGLE else 4

    @cached_property
    def states(self) -> np.ndarray:
        n = self.grid_points_per_angle
        grid = 2 * np.pi * np.arange(n) / n
        if self.kind is FamilyKind.BLOCKADE_PAIR_4ANGLE:
            a1, a2, a3, a4 = (x.ravel() for x in np.meshgrid(grid, grid, grid, grid, indexing="ij"))
            psi = np.stack(
                [
                    np.cos(a1) + 0j,
                    np.sin(a1) * np.cos(a2) * np.exp(1j * a3),
                    np.sin(a1) * np.sin(a2) * np.exp(1j * a4),
                    np.zeros_like(a1, dtype=complex),
                ],
                axis=-1,
            )
        else:
            a1, a2 = (x.ravel() for x in np.meshgrid(grid, grid, indexing="ij"))
            first, second = np.cos(a1) + 0j, np.sin(a1) * np.exp(1j * a2)
            if self.kind is FamilyKind.SINGLE_QUBIT_2ANGLE:
                psi = np.stack([first, second], axis=-1)
            else:
                # cos a1 |20> + sin a1 e^{i a2} |02> in the {00, 02, 20, 22} basis
                zero = np.zeros_like(first)
                psi = np.stack([zero, second, first, zero], axis=-1)
        # guard against rounding; the parameterizations are normalized analytically
        return psi / np.linalg.norm(psi, axis=-1, keepdims=True)


def family_for(cfg: hm.SchemeConfig, grid_points_per_angle: int = DEFAULT_GRID) -> InitialStateFamily:
    kind = {
        hm.Scheme.SINGLE: FamilyKind.SINGLE_QUBIT_2ANGLE,
        hm.Scheme.BLOCKADE: FamilyKind.BLOCKADE_PAIR_4ANGLE,
        hm.Scheme.MEDIATED: FamilyKind.MEDIATED_SWAP_2ANGLE,
    }[cfg.scheme]
    return InitialStateFamily(kind, grid_points_per_angle, hm.embedding(cfg))


def average_fidelity(u_sim, u_target, fam: InitialStateFamily) -> float:
    """Mean of ``|<Psi_U| u_sim |Psi(0)>|^2`` over the family's grid."""
    u_sim, u_target = np.asarray(u_sim), np.asarray(u_target)
    E = np.eye(fam.target_dim) if fam.embedding is None else fam.embedding
    if u_target.shape != (fam.target_dim,) * 2 or u_sim.shape != (E.shape[0],) * 2:
        raise ValueError(
            f"dimension mismatch: sim {u_sim.shape}, target {u_target.shape}, family {fam.kind.value}"
        )
    psi = fam.states
    evolved = psi @ (u_sim @ E).T
    ideal = psi @ (E @ u_target).T
    overlaps = np.einsum("ni,ni->n", ideal.conj(), evolved)
    return float(np.mean(np.abs(overlaps) ** 2))


def state_fidelity(rho, target) -> float:
    rho, target = np.asarray(rho), np.asarray(target)
    value = np.vdot(target, rho @ target)
    if abs(value.imag) > 1e-10:
        raise ValueError("rho is not Hermitian")
    return float(np.clip(value.real, 0.0, 1.0))


def fidelity_timeseries(traj, u_target, fam: InitialStateFamily) -> np.ndarray:
    """Average fidelity of the running propagator at every stored time."""
    if traj.states is None or traj.kind != "unitary":
        raise ValueError("need a stored propagator trajectory (run with n_samples)")
    return np.array([average_fidelity(U, u_target, fam) for U in traj.states])


def probe_state(cfg: hm.SchemeConfig, gate: hm.GateSpec):
    """Initial state and its ideal image used for the decoherence studies.

    The probe starts in the first computational state (``|0>`` or ``|gg>``);
    the fidelity target is the gate applied to it, e.g. ``|0>`` for the
    sigma_z gate and ``|2>`` for sigma_x.
    """
    E = hm.embedding(cfg)
    U = hm.gate_target(gate, cfg.scheme)
    start = np.zeros(U.shape[0], dtype=complex)
    start[0] = 1
    return E @ start, E @ (U @ start)


def decoherence_slopes(s, cfg: hm.SchemeConfig, rate_axis: str, rates, workers: int = 1):
    """Least-squares line through final probe fidelity versus one decay rate.

    ``rate_axis`` is ``"dissipation"`` (``gamma_minus``) or ``"dephasing"``
    (``gamma_z``). Returns ``(slope, max_residual, fidelities)``.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.size < 3 or np.unique(rates).size < 3:
        raise ValueError("need at least three distinct rates for a linear fit")
    if np.any(rates < 0):
        raise ValueError("rates must be non-negative")
    if rate_axis not in ("dissipation", "dephasing"):
        raise ValueError(f"unknown rate axis {rate_axis!r}")
    jobs = [(s, cfg, rate_axis, float(r)) for r in rates]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            F = np.array(list(pool.map(_noisy_probe, jobs)))
    else:
        F = np.array([_noisy_probe(j) for j in jobs])
    slope, intercept = np.polyfit(rates, F, 1)
    residual = float(np.max(np.abs(np.polyval([slope, intercept], rates) - F)))
    return float(slope), residual, F


def _noisy_probe(job):
    from .evolution import run_loop

    s, cfg, axis, rate = job
    noise = hm.NoiseConfig(gamma_minus=rate) if axis == "dissipation" else hm.NoiseConfig(gamma_z=rate)
    start, target = probe_state(cfg, hm.GateSpec.from_schedule(s))
    return run_loop(s, cfg, noise, psi0=start, target=target).final_fidelity
