"""Conditional-displacement phase gate: closed form and fidelity experiment.

With opposite effective couplings on the two qubits the resonator is
displaced along a circle conditioned on J = sigma_x^1 - sigma_x^2, and
after one resonator period the loop closes: the resonator factors out and
the qubits are left with exp(i theta) exp(-i theta sigma_x sigma_x),
theta = 4 pi (g_eff/omega_r)^2. theta = pi/4 lands in the CNOT local
class, which makhlin_invariants verifies without chasing the local
unitaries themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (HilbertLayout, Operator, _check_truncation,
                      _displacement_fock)
from .model import (DriveParams, SystemParams, effective_couplings,
                    frame_phases, hamiltonian_fn)
from .propagate import EvolutionConfig, evolve_columns

__all__ = [
    "GateAngle",
    "AnalyticGate",
    "beta_phi",
    "analytic_unitary",
    "analytic_gate",
    "phase_gate_matrix",
    "makhlin_invariants",
    "gate_columns",
    "gate_fidelity_trials",
    "average_gate_fidelity",
]

_ANGLE_TOL = 1e-12
_UNITARY_TOL = 1e-8

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class GateAngle:
    """Controlled-phase angle and the coupling ratio that produces it."""

    theta: float
    g_eff_ratio: float

    def __post_init__(self) -> None:
        expected = 4.0 * math.pi * self.g_eff_ratio**2
        if abs(self.theta - expected) > _ANGLE_TOL:
            raise ValueError(
                f"theta = {self.theta!r} does not satisfy theta = 4 pi r^2 "
                f"for r = {self.g_eff_ratio!r} (expected {expected!r})"
            )

    @classmethod
    def from_ratio(cls, g_eff_ratio: float) -> "GateAngle":
        return cls(4.0 * math.pi * g_eff_ratio**2, g_eff_ratio)

    @classmethod
    def from_theta(cls, theta: float) -> "GateAngle":
        if theta < 0:
            raise ValueError(f"theta must be >= 0, got {theta}")
        return cls(theta, math.sqrt(theta / (4.0 * math.pi)))


def beta_phi(g_eff_ratio: float, t: float, omega_r: float = 1.0) -> tuple[complex, float]:
    """Displacement beta(t) and accumulated phase Phi(t) of the closed form.

    beta(t) = r (1 - e^{i omega_r t}), Phi(t) = r^2 (omega_r t - sin omega_r t)
    with r = g_eff / omega_r. The loop closes at t = 2 pi / omega_r where
    beta returns to 0 and Phi reaches 2 pi r^2.
    """
    r = g_eff_ratio
    wt = omega_r * t
    beta = r * (1.0 - complex(math.cos(wt), math.sin(wt)))
    phase = r * r * (wt - math.sin(wt))
    return beta, phase


def _axis_generator(layout: HilbertLayout) -> np.ndarray:
    """Qubit-space displacement axis: sigma_x for one qubit, the
    difference sigma_x^1 - sigma_x^2 for two (opposite couplings)."""
    if layout.n_qubits == 1:
        return _SX.copy()
    return np.kron(_SX, np.eye(2)) - np.kron(np.eye(2), _SX)


def analytic_unitary(g_eff_ratio: float, t: float, layout: HilbertLayout,
                     omega_r: float = 1.0) -> Operator:
    """Closed-form evolution D[beta(t) J] exp(i Phi(t) J^2) on the full space.

    J is the qubit displacement axis (see _axis_generator). Assembled in
    the J eigenbasis, where each eigenvalue lam contributes the block
    e^{i Phi lam^2} D(beta lam). Displacements beyond the truncation
    budget of the layout are rejected.
    """
    beta, phase = beta_phi(g_eff_ratio, t, omega_r)
    jq = _axis_generator(layout)
    lam, vecs = np.linalg.eigh(jq)
    for v in lam:
        if v != 0.0:
            _check_truncation(beta * v, layout.fock_dim)
    dim_q = jq.shape[0]
    u = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i in range(dim_q):
        proj = np.outer(vecs[:, i], vecs[:, i].conj())
        block = complex(math.cos(phase * lam[i] ** 2), math.sin(phase * lam[i] ** 2)) \
            * _displacement_fock(beta * lam[i], layout.fock_dim)
        u += np.kron(proj, block)
    return Operator(layout, u)


def phase_gate_matrix(theta: float) -> np.ndarray:
    """Two-qubit action after one closed loop, basis {ee, eg, ge, gg}:

    e^{i theta} (cos theta I - i sin theta sigma_x (x) sigma_x).
    """
    c, s = math.cos(theta), math.sin(theta)
    m = np.array([
        [c, 0, 0, -1j * s],
        [0, c, -1j * s, 0],
        [0, -1j * s, c, 0],
        [-1j * s, 0, 0, c],
    ], dtype=complex)
    return complex(math.cos(theta), math.sin(theta)) * m


@dataclass(frozen=True)
class AnalyticGate:
    """Closed-loop summary: residual displacement, phase, qubit action."""

    beta: complex
    phase: float
    qubit_matrix: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubit_matrix",
                           np.array(self.qubit_matrix, dtype=complex))
        self.qubit_matrix.setflags(write=False)


def analytic_gate(g_eff_ratio: float, omega_r: float = 1.0) -> AnalyticGate:
    """Gate summary at the loop-closing time T = 2 pi / omega_r."""
    t_gate = 2.0 * math.pi / omega_r
    beta, phase = beta_phi(g_eff_ratio, t_gate, omega_r)
    theta = GateAngle.from_ratio(g_eff_ratio).theta  # = 2 * phase
    return AnalyticGate(beta, phase, phase_gate_matrix(theta))


# Magic basis: sigma_x (x) sigma_x conjugation turns into transposition.
_MAGIC = np.array([
    [1, 0, 0, 1j],
    [0, 1j, 1, 0],
    [0, 1j, -1, 0],
    [1, 0, 0, -1j],
], dtype=complex) / math.sqrt(2.0)


def makhlin_invariants(u: np.ndarray) -> tuple[complex, float]:
    """Local invariants (G1, G2) of a two-qubit unitary.

    Equal for gates that differ only by single-qubit rotations; the CNOT
    class is (0, 1) and the identity class is (1, 3). Input must be a
    4 x 4 unitary within 1e-8.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4 x 4 matrix, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(4))) > _UNITARY_TOL:
        raise ValueError("matrix is not unitary within 1e-8")
    ub = _MAGIC.conj().T @ u @ _MAGIC
    m = ub.T @ ub
    det = np.linalg.det(u)
    tr = np.trace(m)
    g1 = tr**2 / (16.0 * det)
    g2 = (tr**2 - np.trace(m @ m)) / (4.0 * det)
    return complex(g1), float(g2.real)


def gate_columns(params: SystemParams, drive: DriveParams,
                 cfg: EvolutionConfig, layout: HilbertLayout) -> np.ndarray:
    """Numerical gate restricted to the vacuum-resonator qubit subspace.

    Evolves the four |q1 q2> (x) |0_c> basis columns under the driven lab
    Hamiltonian over one resonator period and maps the result into the
    rotating frame. Every trial state lives in the span of these columns,
    so this (dim, 4) block replaces the full propagator.
    """
    if params.n_qubits != 2 or layout.n_qubits != 2:
        raise ValueError("the gate experiment needs exactly 2 qubits")
    t_gate = 2.0 * math.pi / params.omega_r
    nf = layout.fock_dim
    v0 = np.zeros((layout.dim, 4), dtype=complex)
    for q in range(4):
        v0[q * nf, q] = 1.0
    h = hamiltonian_fn(params, drive, "lab-driven", layout)
    cols = evolve_columns(h, v0, t_gate, cfg)
    return np.conj(frame_phases(t_gate, params, drive, layout))[:, None] * cols


def gate_fidelity_trials(params: SystemParams, drive: DriveParams,
                         n_trials: int, seed: int, cfg: EvolutionConfig,
                         layout: HilbertLayout | None = None,
                         columns: np.ndarray | None = None) -> np.ndarray:
    """Per-trial overlap of the numerical gate with the closed form.

    Trial states are Gaussian-random qubit amplitudes (normalized) with
    the resonator in vacuum. Pass columns from gate_columns to reuse one
    propagation across seeds; it is recomputed here otherwise.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if layout is None:
        layout = HilbertLayout(n_qubits=2, fock_dim=32)
    if columns is None:
        columns = gate_columns(params, drive, cfg, layout)
    ideal_q = analytic_gate(_gate_ratio(params, drive)).qubit_matrix
    nf = layout.fock_dim
    rng = np.random.default_rng(seed)
    fids = np.empty(n_trials)
    for i in range(n_trials):
        amp = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        amp /= np.linalg.norm(amp)
        actual = columns @ amp
        ideal_amp = ideal_q @ amp
        # ideal state is (qubit action) (x) |0_c>: overlap needs only the
        # n = 0 components of the actual state
        overlap = np.vdot(ideal_amp, actual[0::nf])
        fids[i] = abs(overlap) ** 2
    return fids


def _gate_ratio(params: SystemParams, drive: DriveParams) -> float:
    """g_eff/omega_r for the closed form, which needs opposite couplings."""
    g1, g2 = effective_couplings(params, drive)
    if abs(g1 + g2) > 1e-8 * max(params.g, 1e-300):
        raise ValueError(
            "closed-form gate assumes opposite effective couplings "
            f"(alpha_2 = -alpha_1); got g_eff = ({g1:g}, {g2:g})"
        )
    return g1 / params.omega_r


def average_gate_fidelity(params: SystemParams, drive: DriveParams,
                          n_trials: int, seed: int, cfg: EvolutionConfig,
                          layout: HilbertLayout | None = None,
                          columns: np.ndarray | None = None) -> float:
    """Mean gate_fidelity_trials value; the headline benchmark number."""
    return float(np.mean(gate_fidelity_trials(
        params, drive, n_trials, seed, cfg, layout=layout, columns=columns)))
