"""Single-qubit conditional displacement: cat states and their statistics.

Half a resonator period of the effective interaction pushes the resonator
to +-beta conditioned on the qubit sigma_x eigenvalue, entangling the two.
Measuring the qubit in its energy basis then collapses the resonator onto
an even or odd superposition of |beta> and |-beta>. Repeating the half
period with the modulation restarted walks the branches further out,
amplifying the cat amplitude linearly in the step count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (HilbertLayout, Ket, NORM_TOL, _check_truncation,
                      basis_state, coherent_amplitudes)
from .gate import analytic_unitary, beta_phi
from .model import (DriveParams, SystemParams, effective_couplings,
                    frame_phases, hamiltonian_fn)
from .propagate import EvolutionConfig, evolve_columns

__all__ = [
    "CatDecomposition",
    "cat_state",
    "decompose_cat",
    "multi_step_cat",
    "cat_fidelity_experiment",
    "branch_probabilities",
]

# Branch probability below which the odd branch is treated as absent.
_DEGENERATE_P = 1e-12

STEP_TIME_FACTOR = math.pi  # one step lasts pi / omega_r


def branch_probabilities(beta: complex) -> tuple[float, float]:
    """(p_even, p_odd) for measuring the qubit of an ideal cat state.

    p_l = (1 + (-1)^l e^{-2|beta|^2}) / 2; at beta = 0 the odd branch
    vanishes and at large |beta| both tend to 1/2.
    """
    w = math.exp(-2.0 * abs(beta) ** 2)
    return 0.5 * (1.0 + w), 0.5 * (1.0 - w)


@dataclass(frozen=True)
class CatDecomposition:
    """Qubit-conditioned resonator branches of an entangled state.

    even_state / odd_state are normalized Fock-amplitude arrays of the
    resonator factor conditioned on finding the qubit in |g> / |e>;
    odd_state is None when that branch carries no probability
    (degenerate). Probabilities are renormalized by the input norm, so
    they sum to 1 exactly even for numerically evolved inputs.
    """

    beta: complex
    norm_even: float
    norm_odd: float
    p_even: float
    p_odd: float
    even_state: np.ndarray
    odd_state: np.ndarray | None
    degenerate: bool


def cat_state(g_eff_ratio: float, t: float, layout: HilbertLayout,
              omega_r: float = 1.0) -> Ket:
    """Analytic entangled state grown from |g> (x) |0_c>.

    e^{i Phi(t)} / 2 * [ |e>(|beta> - |-beta>) + |g>(|beta> + |-beta>) ]
    with beta(t), Phi(t) from the closed-form displacement loop. Built
    directly from coherent amplitudes, independently of the evolution
    operator route (analytic_unitary), so the two can cross-check.
    """
    if layout.n_qubits != 1:
        raise ValueError("cat states live on a 1-qubit layout")
    beta, phase = beta_phi(g_eff_ratio, t, omega_r)
    plus = coherent_amplitudes(beta, layout.fock_dim)
    minus = coherent_amplitudes(-beta, layout.fock_dim)
    vec = np.empty(layout.dim, dtype=complex)
    half = 0.5 * complex(math.cos(phase), math.sin(phase))
    vec[:layout.fock_dim] = half * (plus - minus)   # qubit |e>
    vec[layout.fock_dim:] = half * (plus + minus)   # qubit |g>
    return Ket(layout, vec)


def decompose_cat(psi: Ket) -> CatDecomposition:
    """Split a 1-qubit entangled state into qubit-conditioned branches.

    Recovers the branch displacement from the annihilation-operator
    cross-overlap: a |g-branch> = beta |e-branch> for an ideal cat, so
    beta = <e-branch| a |g-branch> / ||e-branch||^2.
    """
    layout = psi.layout
    if layout.n_qubits != 1:
        raise ValueError("decompose_cat needs a 1-qubit layout")
    nf = layout.fock_dim
    u_e = psi.vec[:nf]
    u_g = psi.vec[nf:]
    total = float(np.vdot(u_e, u_e).real + np.vdot(u_g, u_g).real)
    if total <= 0.0:
        raise ValueError("state has zero norm")
    p_odd = float(np.vdot(u_e, u_e).real) / total
    p_even = 1.0 - p_odd

    degenerate = p_odd <= _DEGENERATE_P
    a_ug = np.sqrt(np.arange(1, nf)) * u_g[1:]  # (a u_g)_n = sqrt(n+1) u_{n+1}
    if degenerate:
        beta = 0.0 + 0.0j
    else:
        beta = complex(np.vdot(u_e, np.append(a_ug, 0.0))
                       / np.vdot(u_e, u_e).real)
    w = math.exp(-2.0 * abs(beta) ** 2)
    norm_even = 1.0 / math.sqrt(2.0 * (1.0 + w))
    norm_odd = math.inf if w >= 1.0 else 1.0 / math.sqrt(2.0 * (1.0 - w))

    ng = np.linalg.norm(u_g)
    if ng == 0.0:
        raise ValueError("even branch is empty; expected a state grown from |g>")
    even_state = u_g / ng
    odd_state = None if degenerate else u_e / np.linalg.norm(u_e)
    return CatDecomposition(beta, norm_even, norm_odd, p_even, p_odd,
                            even_state, odd_state, degenerate)


def multi_step_cat(g_eff_ratio: float, k: int, layout: HilbertLayout,
                   omega_r: float = 1.0) -> Ket:
    """k repetitions of the half-period analytic evolution on |g 0_c>.

    The displacements share the sigma_x axis, so branch amplitudes add:
    after k steps the branches sit at +- 2 k g_eff / omega_r with phase
    k Phi(t0). Implemented as an actual operator power so the linearity
    is something the closed form can be tested against.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if layout.n_qubits != 1:
        raise ValueError("cat states live on a 1-qubit layout")
    _check_truncation(2.0 * k * g_eff_ratio, layout.fock_dim)
    t0 = STEP_TIME_FACTOR / omega_r
    u = analytic_unitary(g_eff_ratio, t0, layout, omega_r).mat
    vec = basis_state(layout, "g", 0).vec
    for _ in range(k):
        vec = u @ vec
    return Ket(layout, vec)


def cat_fidelity_experiment(params: SystemParams, drive: DriveParams, k: int,
                            cfg: EvolutionConfig,
                            layout: HilbertLayout | None = None) -> float:
    """Overlap of the numerically grown k-step cat with the analytic one.

    Each step evolves the current state under the driven lab Hamiltonian
    for t0 = pi / omega_r and rotates it back into the modulation frame;
    the modulation itself restarts at every step (the linear amplitude
    walk needs the drive phase re-aligned with the resonator each half
    period, and a continuous drive instead unwinds the displacement over
    the second half).
    """
    if params.n_qubits != 1:
        raise ValueError("the cat experiment needs exactly 1 qubit")
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if layout is None:
        layout = HilbertLayout(n_qubits=1, fock_dim=32)
    t0 = STEP_TIME_FACTOR / params.omega_r
    h = hamiltonian_fn(params, drive, "lab-driven", layout)
    back = np.conj(frame_phases(t0, params, drive, layout))
    vec = basis_state(layout, "g", 0).vec
    for _ in range(k):
        vec = back * evolve_columns(h, vec, t0, cfg)
    numeric = Ket(layout, vec)
    if abs(numeric.norm() - 1.0) > NORM_TOL:
        raise ValueError(f"evolved state norm drifted to {numeric.norm():.9f}")

    ratio = effective_couplings(params, drive)[0] / params.omega_r
    target = multi_step_cat(ratio, k, layout, params.omega_r)
    return abs(np.vdot(target.vec, numeric.vec)) ** 2
