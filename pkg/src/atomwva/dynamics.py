"""Hamiltonians and propagators for the atom / cavity / motion system.

The exact engines exponentiate the lab-frame Hamiltonian (sinusoidal or
linearized mode profile, counter-rotating terms included) independently
at every grid point.  This is exact because the interaction contains no
kinetic term: the Hamiltonian is diagonal in position and each grid point
carries a ``2 (n_max + 1)`` dimensional qubit (x) Fock block.

The effective engine applies ``exp(-i H_eff t)`` with the dispersive
Hamiltonian ``hbar g0 (x / x_c + 1)^2 |e><e|`` (cavity in vacuum).  The
translation part is applied as a phase in position space, which is an
exact momentum shift on the spectral grid.

Block basis ordering is ``index = qubit * n_fock + n`` with ``g = 0``,
``e = 1``.  All matrices are dimensionless: energies are multiplied by
``t / hbar``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import AliasingError, ContractError, CutoffError, RegimeWarning
from .hilbert import (
    CompositeState,
    CouplingReport,
    FockSpace,
    PhysicalParams,
    QubitState,
    Representation,
    WavepacketState,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()  # |g><e|
PROJ_E = np.diag([0.0, 1.0]).astype(complex)

CUTOFF_WARN = 1e-6
CUTOFF_FAIL = 1e-3


class HamiltonianKind(str, enum.Enum):
    FULL_SINUSOIDAL = "full_sinusoidal"
    LINEARIZED = "linearized"
    RWA_INTERACTION = "rwa_interaction"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class EffectiveCoupling:
    """Dimensionless parameters of the dispersive engine."""

    g0_t: float
    g_c: float
    g_c_prime: float = 0.0

    def scaled(self, factor: float) -> "EffectiveCoupling":
        """Coupling for a duration ``factor * t``."""
        return EffectiveCoupling(self.g0_t * factor, self.g_c * factor, self.g_c_prime * factor)


def as_coupling(obj) -> EffectiveCoupling:
    if isinstance(obj, EffectiveCoupling):
        return obj
    if isinstance(obj, PhysicalParams):
        return EffectiveCoupling(obj.g0 * obj.t, obj.g_c, obj.g_c_prime)
    if isinstance(obj, CouplingReport):
        return EffectiveCoupling(obj.g0_t, obj.g_c, obj.g_c_prime)
    raise TypeError(f"cannot build an effective coupling from {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Local Hamiltonians
# ---------------------------------------------------------------------------

def _coupling_profile(kind: HamiltonianKind, params: PhysicalParams, xt) -> np.ndarray:
    """Position-dependent coupling strength times t (dimensionless)."""
    xt = np.asarray(xt, dtype=float)
    if kind is HamiltonianKind.FULL_SINUSOIDAL:
        return params.Omega0 * params.t * np.sin(params.k * params.Delta * xt + params.k_x0)
    # Omega (x + x_c) t, written so that xt = -x_c/Delta gives exactly zero
    return params.Omega * params.Delta * params.t * (xt + params.xc_over_Delta)


def _operators(n_max: int):
    fock = FockSpace(n_max)
    a, ad = fock.annihilation(), fock.creation()
    eye_f = np.eye(fock.dim, dtype=complex)
    eye_q = np.eye(2, dtype=complex)
    return fock, a, ad, eye_f, eye_q


def _free_hamiltonian(params: PhysicalParams, n_max: int) -> np.ndarray:
    fock, a, ad, eye_f, eye_q = _operators(n_max)
    wa_t = params.omega_a * params.t
    wc_t = params.omega_c * params.t
    return 0.5 * wa_t * np.kron(SIGMA_Z, eye_f) + wc_t * np.kron(eye_q, fock.number() + 0.5 * eye_f)


def local_hamiltonians(kind, params: PhysicalParams, xt, n_max: int = 4,
                       time: Optional[float] = None) -> np.ndarray:
    """Stack of Hermitian block Hamiltonians ``H(xt) t / hbar``, shape ``(len(xt), d, d)``.

    ``time`` is the interaction-picture time in units of ``t`` and is only
    used by the RWA kind.
    """
    kind = HamiltonianKind(kind)
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    fock, a, ad, eye_f, eye_q = _operators(n_max)
    d = 2 * fock.dim

    if kind in (HamiltonianKind.FULL_SINUSOIDAL, HamiltonianKind.LINEARIZED):
        c = _coupling_profile(kind, params, xt)
        h0 = _free_hamiltonian(params, n_max)
        v = np.kron(SIGMA_X, a + ad)
        h = h0[None] + c[:, None, None] * v[None]
    elif kind is HamiltonianKind.RWA_INTERACTION:
        if time is None:
            raise ContractError("the RWA interaction Hamiltonian needs an interaction-picture time")
        c = _coupling_profile(HamiltonianKind.LINEARIZED, params, xt)
        phase = np.exp(-1j * params.delta * params.t * time)
        v = phase * np.kron(SIGMA_MINUS, ad) + np.conj(phase) * np.kron(SIGMA_PLUS, a)
        h = c[:, None, None] * v[None]
    else:
        c = _coupling_profile(HamiltonianKind.LINEARIZED, params, xt)
        # the factor t on c^2 / delta is c*c / (delta t): c already carries one t
        g_t = c ** 2 / (params.delta * params.t)
        v = np.kron(SIGMA_Z, fock.number()) + np.kron(PROJ_E, eye_f)
        h = g_t[:, None, None] * v[None]

    assert h.shape[1:] == (d, d)
    assert np.allclose(h, np.conj(np.swapaxes(h, 1, 2)), rtol=0, atol=1e-9 * max(1.0, np.abs(h).max())), \
        "non-Hermitian local Hamiltonian"
    return h


def build_local_hamiltonian(kind, params: PhysicalParams, xt: float, n_max: int = 4,
                            time: Optional[float] = None) -> np.ndarray:
    """Hermitian qubit (x) Fock block ``H(xt) t / hbar`` at a single position."""
    return local_hamiltonians(kind, params, [xt], n_max, time)[0]


# ---------------------------------------------------------------------------
# Matrix exponentials
# ---------------------------------------------------------------------------

def expm_hermitian(h: np.ndarray, method: str = "eigh") -> np.ndarray:
    """``exp(-i h)`` for a stack of Hermitian matrices.

    ``"eigh"`` diagonalizes each block and is unitary to rounding for any
    norm.  ``"pade"`` uses scipy's scaling-and-squaring Pade approximant; it
    loses unitarity roughly in proportion to ``||h||`` and is kept as an
    independent cross-check.
    """
    if method == "eigh":
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    if method == "pade":
        return scipy.linalg.expm(-1j * h)
    raise ValueError(f"unknown matrix exponential method {method!r}")


def _apply_blocks(h, vecs, method):
    # vecs: (n, d); returns exp(-i h_j) vecs_j
    if method == "eigh":
        w, v = np.linalg.eigh(h)
        coeff = np.einsum("nji,nj->ni", np.conj(v), vecs)
        return np.einsum("nij,nj->ni", v, np.exp(-1j * w) * coeff)
    u = expm_hermitian(h, method)
    return np.einsum("nij,nj->ni", u, vecs)


# ---------------------------------------------------------------------------
# Exact propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropagatorResult:
    final_state: CompositeState
    diagnostics: dict = field(default_factory=dict)

    @property
    def frame(self) -> str:
        return self.final_state.frame


def _probe_indices(grid, count=8, extent=4.0):
    targets = np.linspace(-extent, extent, count)
    return np.unique(np.searchsorted(grid.x, targets).clip(0, grid.n_points - 1))


def cutoff_delta(state: CompositeState, kind, params: PhysicalParams, method: str = "eigh",
                 extra: int = 2, probes: int = 8) -> float:
    """Largest change of a propagated local block when the cutoff grows by ``extra``.

    The blocks at ``probes`` points inside the packet are normalized before
    comparison, so the value is a per-point amplitude error.
    """
    n_fock = state.n_fock
    idx = _probe_indices(state.grid, probes)
    xt = state.grid.x[idx]
    blocks = state.amplitudes[idx].reshape(len(idx), 2, n_fock)
    norms = np.sqrt(np.sum(np.abs(blocks) ** 2, axis=(1, 2)))
    keep = norms > 0
    blocks, xt, norms = blocks[keep], xt[keep], norms[keep]
    blocks = blocks / norms[:, None, None]

    small = _apply_blocks(local_hamiltonians(kind, params, xt, n_fock - 1),
                          blocks.reshape(len(xt), -1), method).reshape(len(xt), 2, n_fock)
    padded = np.zeros((len(xt), 2, n_fock + extra), dtype=complex)
    padded[:, :, :n_fock] = blocks
    big = _apply_blocks(local_hamiltonians(kind, params, xt, n_fock - 1 + extra),
                        padded.reshape(len(xt), -1), method).reshape(len(xt), 2, n_fock + extra)
    diff = big.copy()
    diff[:, :, :n_fock] -= small
    return float(np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2))).max(initial=0.0))


def propagate_exact(state: CompositeState, kind, params: PhysicalParams, *,
                    method: str = "eigh", check_cutoff: bool = True,
                    chunk_size: Optional[int] = None) -> PropagatorResult:
    """Exact lab-frame evolution ``exp(-i H t / hbar)`` point by point.

    ``kind`` must be ``FULL_SINUSOIDAL`` or ``LINEARIZED``.  Grid points
    are independent; ``chunk_size`` splits the batch without changing the
    result.
    """
    kind = HamiltonianKind(kind)
    if kind not in (HamiltonianKind.FULL_SINUSOIDAL, HamiltonianKind.LINEARIZED):
        raise ContractError(f"exact propagation supports the sinusoidal and linearized kinds, not {kind.value}")
    if state.representation is not Representation.POSITION:
        raise ContractError("exact propagation needs the position representation")
    if state.frame != "lab":
        raise ContractError("exact propagation acts on lab-frame states")

    n = state.grid.n_points
    n_max = state.n_fock - 1
    vecs = state.amplitudes.reshape(n, -1)
    out = np.empty_like(vecs)
    step = chunk_size or n
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        h = local_hamiltonians(kind, params, state.grid.x[lo:hi], n_max)
        out[lo:hi] = _apply_blocks(h, vecs[lo:hi], method)

    final = replace(state, amplitudes=out.reshape(state.amplitudes.shape))
    diagnostics = {
        "norm_drift": abs(final.norm() - state.norm()),
        "cavity_excitation_probability": final.cavity_excitation_probability(),
        "n_max": n_max,
        "method": method,
    }
    if check_cutoff:
        delta = cutoff_delta(state, kind, params, method)
        diagnostics["cutoff_delta"] = delta
        if delta > CUTOFF_FAIL:
            raise CutoffError(f"Fock cutoff n_max={n_max} not converged (delta = {delta:.3g})")
        if delta > CUTOFF_WARN:
            diagnostics["cutoff_warning"] = f"cutoff delta {delta:.3g} exceeds {CUTOFF_WARN:g}"
            warnings.warn(diagnostics["cutoff_warning"], RegimeWarning, stacklevel=2)
    return PropagatorResult(final, diagnostics)


def _frame_phases(params: PhysicalParams, n_fock: int) -> np.ndarray:
    wa_t = params.omega_a * params.t
    wc_t = params.omega_c * params.t
    n = np.arange(n_fock)
    sz = np.array([-1.0, 1.0])
    return wc_t * (n[None, :] + 0.5) + 0.5 * wa_t * sz[:, None]


def to_interaction_frame(result, params: PhysicalParams) -> CompositeState:
    """Remove the free qubit and cavity phases accumulated over ``t``.

    Applies ``exp(+i wc t (a^dag a + 1/2) + i wa t sigma_z / 2)``.  Accepts a
    :class:`PropagatorResult` or a lab-frame :class:`CompositeState`.
    """
    state = result.final_state if isinstance(result, PropagatorResult) else result
    if state.frame != "lab":
        raise ContractError("state is already in the interaction frame")
    phase = np.exp(1j * _frame_phases(params, state.n_fock))
    return replace(state, amplitudes=state.amplitudes * phase[None], frame="interaction")


def from_interaction_frame(state: CompositeState, params: PhysicalParams) -> CompositeState:
    """Inverse of :func:`to_interaction_frame`."""
    if state.frame != "interaction":
        raise ContractError("state is already in the lab frame")
    phase = np.exp(-1j * _frame_phases(params, state.n_fock))
    return replace(state, amplitudes=state.amplitudes * phase[None], frame="lab")


# ---------------------------------------------------------------------------
# Effective (dispersive) engine
# ---------------------------------------------------------------------------

def effective_phase(coupling, grid, keep_gc_prime: bool = False) -> np.ndarray:
    """Position-space factor applied to the excited branch by ``exp(-i H_eff t)``."""
    c = as_coupling(coupling)
    xt = grid.x
    arg = c.g0_t + c.g_c * xt
    if keep_gc_prime:
        arg = arg + c.g_c_prime * xt ** 2
    return np.exp(-1j * arg)


def _check_aliasing(c: EffectiveCoupling, grid, keep_gc_prime):
    kmax = abs(c.g_c) + (2 * abs(c.g_c_prime) * grid.half_width if keep_gc_prime else 0.0)
    # a unit packet occupies |pt| <~ 3 in momentum space
    if kmax + 3.0 > grid.momentum_half_width or kmax * grid.spacing >= np.pi:
        raise AliasingError(
            f"momentum kick {kmax:.3g} does not fit on the grid "
            f"(momentum half-width {grid.momentum_half_width:.3g})"
        )


def apply_effective(state: CompositeState, coupling, keep_gc_prime: bool = False) -> CompositeState:
    """Apply ``exp(-i H_eff t)`` to a motion (x) qubit state with the cavity in vacuum.

    The returned state is in the interaction frame and in the same
    representation as the input.
    """
    c = as_coupling(coupling)
    if state.n_fock != 1:
        excited = state.fock_populations()[1:].sum()
        if excited > 0:
            raise ContractError(
                "the effective Hamiltonian is only defined for the cavity vacuum "
                f"(population outside |0> = {excited:.3g})"
            )
        state = state.with_fock_levels(1)
    _check_aliasing(c, state.grid, keep_gc_prime)
    rep = state.representation
    pos = state.in_representation(Representation.POSITION)
    amp = np.array(pos.amplitudes)
    amp[:, 1, 0] *= effective_phase(c, state.grid, keep_gc_prime)
    out = replace(pos, amplitudes=amp, frame="interaction")
    return out.in_representation(rep)


def propagate_effective(packet: WavepacketState, qubit: QubitState, coupling,
                        keep_gc_prime: bool = False) -> CompositeState:
    """Evolve ``packet (x) qubit`` under the dispersive Hamiltonian.

    The excited branch picks up the bare phase ``exp(-i g0 t)``, the momentum
    translation ``phi(pt) -> phi(pt + g_c)`` and, if ``keep_gc_prime``, the
    quadratic phase ``exp(-i g_c' xt^2)``.  ``qubit`` is the state before
    the cavity, so the bare phase is applied here and nowhere else.
    """
    state = CompositeState.product(packet, qubit, n_max=0, frame="interaction")
    return apply_effective(state, coupling, keep_gc_prime)


# ---------------------------------------------------------------------------
# Cavity disposal
# ---------------------------------------------------------------------------

def project_cavity_vacuum(state: CompositeState) -> tuple[CompositeState, float]:
    """Project onto the cavity vacuum and renormalize.

    Returns the single-Fock-level state and the retained probability.
    """
    kept = state.with_fock_levels(1)
    p = kept.norm() / state.norm()
    amp = kept.amplitudes / np.sqrt(kept.norm())
    return replace(kept, amplitudes=amp), float(p)


def fock_branches(state: CompositeState) -> list[CompositeState]:
    """Decompose the reduced motion (x) qubit density operator into pure branches.

    Tracing out the cavity leaves ``rho = sum_n |psi_n><psi_n|`` with
    ``psi_n = <n|psi>``; each branch is returned as an unnormalized
    single-level state.
    """
    return [
        replace(state, amplitudes=state.amplitudes[:, :, n:n + 1])
        for n in range(state.n_fock)
    ]


def reduced_density(state: CompositeState) -> np.ndarray:
    """Dense reduced density operator over motion (x) qubit, shape ``(n, 2, n, 2)``.

    Intended for small grids; use :func:`fock_branches` otherwise.
    """
    amp = state.amplitudes
    return np.einsum("aqn,brn->aqbr", amp, np.conj(amp)) * state.step


def exact_vs_effective(params: PhysicalParams, qubit: QubitState, grid, *, n_max: int = 4,
                       kind=HamiltonianKind.LINEARIZED, keep_gc_prime: bool = True,
                       method: str = "eigh") -> dict:
    """Run both engines from ``packet (x) qubit (x) |0>`` and compare them.

    Returns the interaction-frame exact state, the effective state and the
    fidelity between them.
    """
    from .hilbert import fidelity, make_gaussian

    packet = make_gaussian(grid)
    exact = propagate_exact(CompositeState.product(packet, qubit, n_max), kind, params, method=method)
    exact_int = to_interaction_frame(exact, params)
    eff = propagate_effective(packet, qubit, params, keep_gc_prime)
    return {
        "exact": exact_int,
        "effective": eff,
        "fidelity": fidelity(exact_int, eff),
        "diagnostics": exact.diagnostics,
    }
