"""Qubit rotation, post-selection and weak values.

The rotation is ``U = exp(-i eta sigma_x)`` and the observable coupled to
the motion is ``A = |e><e|``.  With post-selection on ``|g>`` the weak
value is

    A_w = <g|U|e><e|i> / <g|U|i> = 1 / (A exp(i vartheta) + 1),

    A = alpha cos(eta) / (beta sin(eta)),   vartheta = pi/2 - theta.

The pointer shifts follow ``<pt>_w = -g_c Re(A_w)`` and
``<xt>_w / 2 = g_c Im(A_w)`` to first order in ``g_c``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError, PostselectionError
from .hilbert import (
    CompositeState,
    QubitState,
    Representation,
    WavepacketState,
    moments,
)

#: Validity thresholds on g_c^2 |A_w| for predicted shifts.
SHIFT_WARN = 0.01
SHIFT_ERROR = 0.1

#: Post-selection probabilities below this are treated as impossible.
MIN_PROBABILITY = 1e-12


class Outcome(str, enum.Enum):
    GROUND = "ground"
    EXCITED = "excited"

    @property
    def index(self) -> int:
        return 0 if self is Outcome.GROUND else 1


def rotation(eta: float) -> np.ndarray:
    """``exp(-i eta sigma_x)`` in the ``(|g>, |e>)`` basis."""
    c, s = math.cos(eta), math.sin(eta)
    return np.array([[c, -1j * s], [-1j * s, c]])


@dataclass(frozen=True)
class PostselectionSpec:
    eta: float
    outcome: Outcome = Outcome.GROUND

    def __post_init__(self):
        object.__setattr__(self, "outcome", Outcome(self.outcome))

    @property
    def unitary(self) -> np.ndarray:
        return rotation(self.eta)

    @property
    def final_bra(self) -> np.ndarray:
        """Row vector ``<f| = <outcome| U``."""
        return self.unitary[self.outcome.index]


@dataclass(frozen=True)
class WeakValueResult:
    A_w: complex
    P: float
    A: float = math.nan
    vartheta: float = math.nan
    closed_form: Optional[complex] = None
    validity: dict = field(default_factory=dict)

    @property
    def re(self) -> float:
        return self.A_w.real

    @property
    def im(self) -> float:
        return self.A_w.imag


def weak_value_closed_form(A, vartheta):
    """``1 / (A exp(i vartheta) + 1)``; works elementwise on arrays."""
    return 1.0 / (A * np.exp(1j * np.asarray(vartheta)) + 1.0)


def weak_value_parts(A, vartheta):
    """Real and imaginary parts written out in terms of ``A`` and ``vartheta``."""
    A = np.asarray(A, dtype=float)
    c, s = np.cos(vartheta), np.sin(vartheta)
    den = A ** 2 + 2 * A * c + 1
    return (1 + A * c) / den, -A * s / den


def _validity(A_w, g_c):
    if g_c is None:
        return {}
    return {"g_c_abs_A_w": abs(g_c) * abs(A_w), "g_c2_abs_A_w": g_c ** 2 * abs(A_w)}


def weak_value(qubit: QubitState, spec: PostselectionSpec, g_c: Optional[float] = None) -> WeakValueResult:
    """Weak value of ``|e><e|`` for pre-selection ``qubit`` and post-selection ``spec``.

    Evaluated from matrix elements.  For a ground-state outcome with
    ``beta sin(eta) != 0`` the closed form is evaluated as well and stored
    on the result.  Raises :class:`PostselectionError` when ``<f|i> = 0``.
    """
    i = qubit.vector
    f = spec.final_bra
    amp = f @ i
    if abs(amp) < 1e-15:
        raise PostselectionError("undefined weak value, P = 0: post-selected state is orthogonal to |i>")
    A_w = complex(f[1] * i[1] / amp)

    A = vartheta = math.nan
    closed = None
    if spec.outcome is Outcome.GROUND and qubit.beta * math.sin(spec.eta) != 0:
        A = qubit.alpha * math.cos(spec.eta) / (qubit.beta * math.sin(spec.eta))
        vartheta = math.pi / 2 - qubit.theta
        closed = complex(weak_value_closed_form(A, vartheta))
    return WeakValueResult(A_w, float(abs(amp) ** 2), A, vartheta, closed, _validity(A_w, g_c))


def qubit_for_weak_value(A_w: complex, eta: float) -> QubitState:
    """Pre-selected qubit that yields ``A_w`` for a ground-state post-selection at ``eta``.

    Solves ``A exp(i vartheta) = 1/A_w - 1`` with ``alpha, beta >= 0``.
    Needs ``sin(eta) cos(eta) != 0`` unless ``A_w = 1``.
    """
    if A_w == 0:
        raise DomainError("A_w = 0 needs beta = 0 or sin(eta) = 0; build that qubit directly")
    z = 1.0 / complex(A_w) - 1.0
    if abs(z) == 0:
        return QubitState.excited()
    tan_eta = math.tan(eta)
    if math.cos(eta) == 0 or tan_eta == 0:
        raise DomainError(f"eta = {eta!r} cannot produce A_w = {A_w!r}")
    A = abs(z)
    vartheta = math.atan2(z.imag, z.real)
    # alpha/beta = A tan(eta) must be positive; absorb a sign into vartheta
    if tan_eta < 0:
        vartheta += math.pi
    ratio = A * abs(tan_eta)
    beta = 1.0 / math.sqrt(1.0 + ratio ** 2)
    alpha = ratio * beta
    return QubitState(alpha, beta, math.pi / 2 - vartheta)


@dataclass(frozen=True)
class ShiftPrediction:
    p_shift_over_2Dp: float
    x_shift_over_2D: float
    g_c2_abs_A_w: float
    status: str
    message: str = ""


def predicted_shifts(wv: WeakValueResult, g_c: float) -> ShiftPrediction:
    """First-order pointer shifts ``-g_c Re(A_w)`` and ``g_c Im(A_w)``.

    Values are always returned; ``status`` is ``"warn"`` when
    ``g_c^2 |A_w| > 0.01`` and ``"error"`` above 0.1, where the shifts can
    no longer be amplified further by the weak value.
    """
    bound = g_c ** 2 * abs(wv.A_w)
    if bound > SHIFT_ERROR:
        status, msg = "error", f"g_c^2 |A_w| = {bound:.3g} > {SHIFT_ERROR}: first-order shift law invalid"
    elif bound > SHIFT_WARN:
        status, msg = "warn", f"g_c^2 |A_w| = {bound:.3g} > {SHIFT_WARN}: amplification near its limit"
    else:
        status, msg = "ok", ""
    return ShiftPrediction(-g_c * wv.re, g_c * wv.im, bound, status, msg)


def unselected_momentum_shift(qubit: QubitState, g_c: float) -> float:
    """``<p> / Delta_p = -2 beta^2 g_c`` without post-selection."""
    return -2.0 * qubit.beta ** 2 * g_c


# ---------------------------------------------------------------------------
# Post-selection on states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PostselectionResult:
    pointer: WavepacketState
    P_actual: float

    def normalized_pointer(self) -> WavepacketState:
        return self.pointer.normalized()


def _project(amplitudes, spec):
    # amplitudes (..., 2, n_fock) -> (..., n_fock)
    return np.einsum("q,nqk->nk", spec.final_bra, amplitudes)


def postselect(state: CompositeState, spec: PostselectionSpec) -> PostselectionResult:
    """Rotate the qubit, project onto the outcome and return the raw pointer.

    ``state`` must carry a single Fock level (effective engine output or an
    exact state after cavity projection).  The pointer is not normalized;
    its squared norm is the success probability.
    """
    if state.n_fock != 1:
        raise ContractError("postselect needs a single Fock level; dispose of the cavity first "
                            "or use postselect_mixture")
    ptr = _project(state.amplitudes, spec)[:, 0]
    pointer = WavepacketState(state.grid, ptr, state.representation)
    p = pointer.norm()
    if p < MIN_PROBABILITY:
        raise PostselectionError(f"post-selection probability {p:.3g} is practically zero")
    return PostselectionResult(pointer, p)


def postselect_mixture(state: CompositeState, spec: PostselectionSpec) -> tuple[list, float]:
    """Post-select with the cavity traced out.

    Returns one unnormalized pointer per Fock level (the pure components of
    the selected reduced density operator) and the total probability.
    """
    ptrs = _project(state.amplitudes, spec)
    pointers = [WavepacketState(state.grid, ptrs[:, k], state.representation) for k in range(state.n_fock)]
    p = float(sum(ptr.norm() for ptr in pointers))
    if p < MIN_PROBABILITY:
        raise PostselectionError(f"post-selection probability {p:.3g} is practically zero")
    return pointers, p


@dataclass(frozen=True)
class MeasuredShifts:
    p_shift_over_2Dp: float
    x_shift_over_2D: float
    p_variance: float
    x_variance: float


def measured_shifts(pointer) -> MeasuredShifts:
    """Shifts of the renormalized pointer: ``<pt>`` and ``<xt> / 2``.

    Accepts a single pointer or a list of pointers forming an incoherent
    mixture.
    """
    pointers = pointer if isinstance(pointer, (list, tuple)) else [pointer]
    total = sum(p.norm() for p in pointers)
    if total <= 0:
        raise PostselectionError("empty pointer")
    out = {}
    for rep in (Representation.POSITION, Representation.MOMENTUM):
        mean = second = 0.0
        for ptr in pointers:
            w = ptr.norm() / total
            if w == 0:
                continue
            m, v = moments(ptr.in_representation(rep).normalized())
            mean += w * m
            second += w * (v + m * m)
        out[rep] = (mean, second - mean * mean)
    (mx, vx), (mp, vp) = out[Representation.POSITION], out[Representation.MOMENTUM]
    return MeasuredShifts(mp, mx / 2.0, vp, vx)


def expanded_pointer(packet: WavepacketState, A_w: complex, g_c: float,
                     second_order: bool = False) -> WavepacketState:
    """Pointer from the series ``(1 + g_c A_w d/dpt [+ g_c^2 A_w / 2 d^2/dpt^2]) phi``.

    The derivative ``d/dpt`` acts as ``-i xt`` in position space.  Returned
    in the representation of ``packet`` and not normalized.
    """
    pos = packet.in_representation(Representation.POSITION)
    xt = pos.grid.x
    factor = 1 - 1j * g_c * A_w * xt
    if second_order:
        factor = factor - 0.5 * g_c ** 2 * A_w * xt ** 2
    return replace(pos, amplitudes=factor * pos.amplitudes).in_representation(packet.representation)


# ---------------------------------------------------------------------------
# Projective decomposition and the standard form
# ---------------------------------------------------------------------------

OBSERVABLE = np.diag([0.0, 1.0]).astype(complex)  # |e><e|


@dataclass(frozen=True)
class ProjectiveDecomposition:
    A_g: complex
    A_e: complex
    weight_g: complex
    weight_e: complex
    pointer_g: Optional[WavepacketState] = None
    pointer_e: Optional[WavepacketState] = None

    def recombined(self) -> CompositeState:
        """``<g|i> phi(A_g) |g> + <e|i> phi(A_e) |e>`` as a motion (x) qubit state."""
        if self.pointer_g is None:
            raise ContractError("decomposition was built without a packet")
        amp = np.stack([self.weight_g * self.pointer_g.amplitudes,
                        self.weight_e * self.pointer_e.amplitudes], axis=1)[:, :, None]
        return CompositeState(self.pointer_g.grid, amp, self.pointer_g.representation, "interaction")


def projective_decomposition(qubit: QubitState, packet: Optional[WavepacketState] = None,
                             g_c: float = 0.0) -> ProjectiveDecomposition:
    """Split the weakly coupled state into its ``|g>`` and ``|e>`` branches.

    The branch weak values are ``<k|A|i>/<k|i>`` for ``k = g, e``, which are
    always 0 and 1.  When ``packet`` is given, the branch pointers
    ``(1 - i g_c A_k xt) phi`` are built too.
    """
    if qubit.alpha == 0 or qubit.beta == 0:
        raise DomainError("both qubit amplitudes must be nonzero, otherwise one branch is empty")
    i = qubit.vector
    # A is diagonal, so <k|A|i> = A_kk <k|i> and the ratio is A_kk with no rounding
    assert np.count_nonzero(OBSERVABLE - np.diag(np.diag(OBSERVABLE))) == 0
    A_g, A_e = complex(OBSERVABLE[0, 0]), complex(OBSERVABLE[1, 1])
    ptr_g = ptr_e = None
    if packet is not None:
        ptr_g = expanded_pointer(packet, A_g, g_c)
        ptr_e = expanded_pointer(packet, A_e, g_c)
    return ProjectiveDecomposition(A_g, A_e, complex(i[0]), complex(i[1]), ptr_g, ptr_e)


def standard_form_values(alpha, beta, theta, eta):
    """Both forms of the weak value, vectorized over parameter arrays.

    Returns ``(<g|U A|i> / <g|U|i>, <f|A|i> / <f|i>)`` with ``<f| = <g|U``.
    The first form multiplies ``U A`` first; the second builds ``<f|`` first.
    """
    alpha, beta, theta, eta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, theta, eta)))
    c, s = np.cos(eta), np.sin(eta)
    i_vec = np.stack([alpha + 0j, beta * np.exp(1j * theta)], axis=-1)
    # U as (..., 2, 2)
    U = np.stack([np.stack([c + 0j, -1j * s], -1), np.stack([-1j * s, c + 0j], -1)], -2)
    UA = U @ OBSERVABLE
    num1 = np.einsum("...j,...j->...", UA[..., 0, :], i_vec)
    den1 = np.einsum("...j,...j->...", U[..., 0, :], i_vec)
    f_bra = U[..., 0, :]
    num2 = np.einsum("...j,jk,...k->...", f_bra, OBSERVABLE, i_vec)
    den2 = np.einsum("...j,...j->...", f_bra, i_vec)
    return num1 / den1, num2 / den2


def standard_form_equivalence(qubit: QubitState, spec: PostselectionSpec, tol: float = 1e-12) -> dict:
    """Check that the post-selected weak value has the standard ``<f|A|i>/<f|i>`` form."""
    if spec.outcome is not Outcome.GROUND:
        raise ContractError("the standard-form check is stated for a ground-state post-selection")
    w1, w2 = standard_form_values(qubit.alpha, qubit.beta, qubit.theta, spec.eta)
    w1, w2 = complex(w1), complex(w2)
    diff = abs(w1 - w2)
    return {"matrix_form": w1, "standard_form": w2, "difference": diff, "equal": diff <= tol * max(1.0, abs(w1))}
