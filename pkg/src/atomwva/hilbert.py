"""State spaces, grids and the physical-to-dimensionless parameter bridge.

All internal computation is dimensionless: positions are measured in units
of the packet width ``Delta`` (``xt = x / Delta``), momenta in units of
``hbar / Delta`` (``pt = p * Delta / hbar``) and frequencies are multiplied
by the interaction time ``t``.  The spectral transform uses the kernel

    <x|p> = exp(+i p x / hbar) / sqrt(2 pi hbar),

which in dimensionless units is ``exp(1j * pt * xt) / sqrt(2 pi)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import constants

from .errors import ContractError, DomainError, NormalizationError

HBAR = constants.hbar
C_LIGHT = constants.c
AMU = constants.atomic_mass

#: Norm tolerance for states that are supposed to be physical.
NORM_TOL = 1e-10

#: Regime ratios above WARN_RATIO produce a warning, above FAIL_RATIO an error.
WARN_RATIO = 0.1
FAIL_RATIO = 0.5


class Representation(str, enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Grid and wavepackets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid1D:
    """Symmetric 1-D grid in units of the packet width.

    Points are ``xt_j = -half_width + j * spacing`` for ``j = 0 .. n_points-1``,
    so ``0`` is a grid point and every point except the left edge has its
    mirror image on the grid.  The conjugate momentum grid has the same
    layout with spacing ``2 pi / (n_points * spacing)``.
    """

    n_points: int = 1024
    half_width: float = 8.0

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 64 or n & (n - 1):
            raise DomainError(f"n_points must be a power of two >= 64, got {n!r}")
        if not self.half_width >= 6.0:
            raise DomainError(f"half_width must be >= 6, got {self.half_width!r}")
        # the momentum grid must contain a unit packet just as the position grid does
        if self.momentum_half_width < 6.0:
            raise DomainError(
                f"grid too coarse: momentum half-width {self.momentum_half_width:.3g} < 6 "
                f"(increase n_points or reduce half_width)"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def momentum_spacing(self) -> float:
        return 2.0 * np.pi / (self.n_points * self.spacing)

    @property
    def momentum_half_width(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def x(self) -> np.ndarray:
        a = -self.half_width + self.spacing * np.arange(self.n_points)
        a.flags.writeable = False
        return a

    @cached_property
    def p(self) -> np.ndarray:
        a = -self.momentum_half_width + self.momentum_spacing * np.arange(self.n_points)
        a.flags.writeable = False
        return a

    @cached_property
    def _alternating(self) -> np.ndarray:
        a = 1.0 - 2.0 * (np.arange(self.n_points) % 2)
        a.flags.writeable = False
        return a

    def coords(self, representation) -> np.ndarray:
        return self.x if Representation(representation) is Representation.POSITION else self.p

    def step(self, representation) -> float:
        if Representation(representation) is Representation.POSITION:
            return self.spacing
        return self.momentum_spacing


def _fft_along(amplitudes, grid, inverse=False):
    # Exact discrete version of the continuum transform for n % 4 == 0:
    # exp(-i p_k x_j) = (-1)^k (-1)^j exp(-2 pi i j k / n).
    shape = (-1,) + (1,) * (amplitudes.ndim - 1)
    sign = grid._alternating.reshape(shape)
    scale = math.sqrt(grid.spacing / grid.momentum_spacing)
    if not inverse:
        return scale * sign * np.fft.fft(sign * amplitudes, axis=0, norm="ortho")
    return sign * np.fft.ifft(sign * amplitudes, axis=0, norm="ortho") / scale


@dataclass(frozen=True)
class WavepacketState:
    """Complex amplitudes of the transverse motion on a grid.

    Normalization is ``sum(|psi|**2) * step == 1`` for physical states.
    Post-selected pointers are deliberately left unnormalized.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    representation: Representation = Representation.POSITION

    def __post_init__(self):
        amp = _frozen(self.amplitudes)
        if amp.shape != (self.grid.n_points,):
            raise ContractError(
                f"amplitudes have shape {amp.shape}, expected ({self.grid.n_points},)"
            )
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "representation", Representation(self.representation))

    @property
    def coords(self) -> np.ndarray:
        return self.grid.coords(self.representation)

    @property
    def step(self) -> float:
        return self.grid.step(self.representation)

    def norm(self) -> float:
        """Squared norm ``sum |psi|^2 * step``."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.step)

    def normalized(self) -> "WavepacketState":
        n = self.norm()
        if n <= 0.0:
            raise NormalizationError(n, "cannot normalize a zero state")
        return replace(self, amplitudes=self.amplitudes / math.sqrt(n))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_momentum(self) -> "WavepacketState":
        return to_momentum(self)

    def to_position(self) -> "WavepacketState":
        return to_position(self)

    def in_representation(self, representation) -> "WavepacketState":
        if Representation(representation) is self.representation:
            return self
        return self.to_momentum() if self.representation is Representation.POSITION else self.to_position()


def make_gaussian(grid: Grid1D) -> WavepacketState:
    """Unit-width Gaussian packet ``(2 pi)^(-1/4) exp(-xt^2 / 4)``.

    The samples are renormalized on the discrete grid, so the returned
    state has norm 1 to rounding even on coarse grids.
    """
    amp = (2.0 * np.pi) ** -0.25 * np.exp(-grid.x ** 2 / 4.0)
    return WavepacketState(grid, amp, Representation.POSITION).normalized()


def to_momentum(state):
    """Unitary transform from position to momentum amplitudes.

    Works for :class:`WavepacketState` and :class:`CompositeState`; the
    transform acts on the leading (grid) axis.
    """
    if state.representation is not Representation.POSITION:
        raise ContractError("to_momentum expects a state in the position representation")
    amp = _fft_along(state.amplitudes, state.grid)
    return replace(state, amplitudes=amp, representation=Representation.MOMENTUM)


def to_position(state):
    """Inverse of :func:`to_momentum`."""
    if state.representation is not Representation.MOMENTUM:
        raise ContractError("to_position expects a state in the momentum representation")
    amp = _fft_along(state.amplitudes, state.grid, inverse=True)
    return replace(state, amplitudes=amp, representation=Representation.POSITION)


def moments(state, *, tol: float = NORM_TOL) -> tuple[float, float]:
    """Mean and variance of the grid coordinate in the state's representation.

    Composite states are reduced to the marginal distribution on the grid.
    Raises :class:`NormalizationError` when the state is not normalized to
    within ``tol``.
    """
    prob = np.abs(state.amplitudes) ** 2
    if prob.ndim > 1:
        prob = prob.reshape(prob.shape[0], -1).sum(axis=1)
    h = state.grid.step(state.representation)
    norm = float(prob.sum() * h)
    if abs(norm - 1.0) > tol:
        raise NormalizationError(norm)
    q = state.grid.coords(state.representation)
    w = prob * h
    mean = float(np.sum(q * w))
    var = float(np.sum((q - mean) ** 2 * w))
    return mean, var


# ---------------------------------------------------------------------------
# Qubit and cavity
# ---------------------------------------------------------------------------

GROUND, EXCITED = 0, 1


@dataclass(frozen=True)
class QubitState:
    """``alpha |g> + beta exp(i theta) |e>`` with real ``alpha, beta >= 0``."""

    alpha: float
    beta: float
    theta: float = 0.0

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if a < 0 or b < 0:
            raise DomainError(f"alpha and beta must be non-negative, got ({a}, {b})")
        if abs(a * a + b * b - 1.0) > 1e-12:
            raise DomainError(
                f"qubit not normalized: alpha^2 + beta^2 = {a * a + b * b!r} "
                f"(alpha={a!r}, beta={b!r})"
            )
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * np.pi))

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(0.0, 1.0, 0.0)

    @classmethod
    def from_populations(cls, beta_sq: float, theta: float = 0.0) -> "QubitState":
        beta = math.sqrt(beta_sq)
        return cls(math.sqrt(1.0 - beta_sq), beta, theta)

    @classmethod
    def from_vector(cls, vec) -> "QubitState":
        """Build from a 2-vector, dropping the global phase of the |g> amplitude."""
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        a, b = v
        if abs(a) > 0:
            b = b * np.conj(a) / abs(a)
        return cls(abs(a), abs(b), float(np.angle(b)) if abs(b) > 0 else 0.0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta * np.exp(1j * self.theta)])

    def with_phase(self, phase: float) -> "QubitState":
        """Add ``phase`` to the relative phase of the excited amplitude."""
        return replace(self, theta=self.theta + phase)


@dataclass(frozen=True)
class FockSpace:
    """Cavity mode truncated to ``|0>, ..., |n_max>``."""

    n_max: int = 4

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise DomainError(f"n_max must be a non-negative integer, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), k=1).astype(complex)

    def creation(self) -> np.ndarray:
        return self.annihilation().conj().T

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.dim, dtype=float)).astype(complex)


@dataclass(frozen=True)
class CompositeState:
    """Amplitudes over grid x qubit x Fock levels, shape ``(n_points, 2, n_fock)``.

    ``frame`` records whether the free qubit and cavity phases are still
    present (``"lab"``) or have been removed (``"interaction"``).  States
    produced by the effective engine carry a single Fock level (vacuum)
    and live in the interaction frame.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    representation: Representation = Representation.POSITION
    frame: str = "lab"

    def __post_init__(self):
        amp = _frozen(self.amplitudes)
        if amp.ndim != 3 or amp.shape[0] != self.grid.n_points or amp.shape[1] != 2:
            raise ContractError(
                f"composite amplitudes must have shape ({self.grid.n_points}, 2, n_fock), "
                f"got {amp.shape}"
            )
        if self.frame not in ("lab", "interaction"):
            raise ContractError(f"unknown frame {self.frame!r}")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "representation", Representation(self.representation))

    @classmethod
    def product(cls, packet: WavepacketState, qubit: QubitState, n_max: int = 4,
                frame: str = "lab") -> "CompositeState":
        """``packet (x) qubit (x) |0>`` with ``n_max + 1`` Fock levels."""
        amp = np.zeros((packet.grid.n_points, 2, n_max + 1), dtype=complex)
        amp[:, :, 0] = np.outer(packet.amplitudes, qubit.vector)
        return cls(packet.grid, amp, packet.representation, frame)

    @property
    def n_fock(self) -> int:
        return self.amplitudes.shape[2]

    @property
    def step(self) -> float:
        return self.grid.step(self.representation)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.step)

    def to_momentum(self) -> "CompositeState":
        return to_momentum(self)

    def to_position(self) -> "CompositeState":
        return to_position(self)

    def in_representation(self, representation) -> "CompositeState":
        if Representation(representation) is self.representation:
            return self
        return self.to_momentum() if self.representation is Representation.POSITION else self.to_position()

    def fock_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=(0, 1)) * self.step

    def cavity_excitation_probability(self) -> float:
        return float(self.norm() - self.fock_populations()[0])

    def qubit_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=(0, 2)) * self.step

    def with_fock_levels(self, n_fock: int) -> "CompositeState":
        """Zero-pad or truncate the Fock axis."""
        amp = np.zeros(self.amplitudes.shape[:2] + (n_fock,), dtype=complex)
        m = min(n_fock, self.n_fock)
        amp[:, :, :m] = self.amplitudes[:, :, :m]
        return replace(self, amplitudes=amp)


def overlap(a, b) -> complex:
    """Inner product ``<a|b>`` of two states on the same grid and representation.

    Composite states with different Fock cutoffs are compared after
    zero-padding the smaller one.
    """
    if a.grid != b.grid:
        raise ContractError("states live on different grids")
    b = b.in_representation(a.representation)
    x, y = a.amplitudes, b.amplitudes
    if x.ndim == 3 and y.ndim == 3 and x.shape[2] != y.shape[2]:
        n = max(x.shape[2], y.shape[2])
        x = a.with_fock_levels(n).amplitudes
        y = b.with_fock_levels(n).amplitudes
    return complex(np.vdot(x, y) * a.step)


def fidelity(a, b) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)`` for pure states."""
    return abs(overlap(a, b)) ** 2 / (a.norm() * b.norm())


def schmidt_rank(state: CompositeState, keep: tuple[int, ...], tol: float = 1e-12) -> int:
    """Schmidt rank across the cut separating the axes in ``keep`` from the rest."""
    amp = state.amplitudes
    rest = tuple(i for i in range(3) if i not in keep)
    m = np.transpose(amp, keep + rest)
    rows = int(np.prod([amp.shape[i] for i in keep]))
    s = np.linalg.svd(m.reshape(rows, -1), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


# ---------------------------------------------------------------------------
# Physical parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional experiment parameters (SI units, frequencies in Hz).

    Only the independent inputs are stored; every coupling is a derived
    property.  ``omega_c_over_2pi`` defaults to ``c / wavelength``; the cavity
    frequency only enters the lab-frame exact engines.

    The default duration, width and mass are illustrative values for a
    Rydberg-atom experiment, not measured quantities.
    """

    wavelength: float = 0.01
    Omega0_over_2pi: float = 1.0e4
    k_x0: float = np.pi / 4
    delta_over_2pi: float = 1.0e4 * math.sin(np.pi / 4) / 0.1
    t: float = 1.0e-4
    Delta: float = 1.0e-5
    m: float = 85 * AMU
    chi: float = 1.0
    delta0: float = 0.0
    omega_c_over_2pi: Optional[float] = None

    @classmethod
    def from_ratio(cls, ratio: float = 0.1, **overrides) -> "PhysicalParams":
        """Parameters with the detuning chosen so that ``Omega x_c / delta = ratio``."""
        base = replace(cls(), **overrides)
        delta = base.Omega0_over_2pi * math.sin(base.k_x0) / ratio
        return replace(base, delta_over_2pi=delta)

    def with_g_c(self, g_c: float) -> "PhysicalParams":
        """Same parameters with the duration rescaled to reach ``g_c``."""
        return replace(self, t=self.t * g_c / self.g_c)

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def Omega0(self) -> float:
        return 2.0 * np.pi * self.Omega0_over_2pi

    @property
    def delta(self) -> float:
        return 2.0 * np.pi * self.delta_over_2pi

    @property
    def Omega(self) -> float:
        return self.k * math.cos(self.k_x0) * self.Omega0

    @property
    def x_c(self) -> float:
        return math.tan(self.k_x0) / self.k

    @property
    def Omega_xc(self) -> float:
        # = Omega0 sin(k x0), computed this way to stay finite near k x0 -> pi/2
        return self.Omega0 * math.sin(self.k_x0)

    @property
    def g0(self) -> float:
        return self.Omega_xc ** 2 / self.delta

    @property
    def Delta_over_xc(self) -> float:
        return self.k * self.Delta / math.tan(self.k_x0)

    @property
    def xc_over_Delta(self) -> float:
        return math.tan(self.k_x0) / (self.k * self.Delta)

    @property
    def g_c(self) -> float:
        return 2.0 * self.g0 * self.t * self.Delta_over_xc

    @property
    def g_c_prime(self) -> float:
        return self.g0 * self.t * self.Delta_over_xc ** 2

    @property
    def omega_c(self) -> float:
        f = self.omega_c_over_2pi if self.omega_c_over_2pi is not None else C_LIGHT / self.wavelength
        return 2.0 * np.pi * f

    @property
    def omega_a(self) -> float:
        return self.omega_c + self.delta

    @property
    def Delta_p(self) -> float:
        return HBAR / (2.0 * self.Delta)

    @property
    def impulse_time(self) -> float:
        """``m Delta^2 / hbar``; the interaction must be much shorter."""
        return self.m * self.Delta ** 2 / HBAR


@dataclass(frozen=True)
class RegimeFlag:
    name: str
    ratio: float
    status: str
    message: str = ""


def classify(ratio: float, warn: float = WARN_RATIO, fail: float = FAIL_RATIO) -> str:
    # small relative slack so that ratios built to equal a threshold pass
    slack = 1.0 + 1e-9
    if not np.isfinite(ratio) or ratio > fail * slack:
        return "fail"
    if ratio > warn * slack:
        return "warn"
    return "pass"


_STATUS_ORDER = {"pass": 0, "warn": 1, "fail": 2}


def worst_status(flags) -> str:
    return max((f.status for f in flags), key=_STATUS_ORDER.__getitem__, default="pass")


@dataclass(frozen=True)
class CouplingReport:
    """Derived couplings (SI, angular frequencies) and regime flags."""

    k: float
    Omega: float
    x_c: float
    Omega_xc: float
    g0: float
    g0_t: float
    g_c: float
    g_c_prime: float
    flags: tuple = field(default_factory=tuple)

    @property
    def status(self) -> str:
        return worst_status(self.flags)

    def flag(self, name: str) -> RegimeFlag:
        for f in self.flags:
            if f.name == name:
                return f
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "Omega": self.Omega,
            "x_c": self.x_c,
            "Omega_xc": self.Omega_xc,
            "Omega_xc_over_2pi": self.Omega_xc / (2 * np.pi),
            "g0": self.g0,
            "g0_over_2pi": self.g0 / (2 * np.pi),
            "g0_t": self.g0_t,
            "g_c": self.g_c,
            "g_c_prime": self.g_c_prime,
            "flags": [
                {"name": f.name, "ratio": f.ratio, "status": f.status, "message": f.message}
                for f in self.flags
            ],
        }


def regime_flags(params: PhysicalParams) -> tuple:
    """Every validity ratio of the model with its pass/warn/fail status."""
    k_delta = params.k * params.Delta
    edge = min(params.k_x0, np.pi / 2 - params.k_x0)
    ratios = [
        ("k_Delta", k_delta, "packet width vs cavity wavelength (k Delta << 1)"),
        ("k_x0", k_delta / edge if edge > 0 else np.inf,
         "distance of k x0 from 0 and pi/2 in units of k Delta "
         "(near pi/2 tan(k x0) is singular and x_c diverges)"),
        ("Omega_xc_over_delta", params.Omega_xc / params.delta,
         "dispersive condition Omega x_c << delta"),
        ("impulse", params.t / params.impulse_time, "impulse condition t << m Delta^2 / hbar"),
        ("Delta_over_xc", params.Delta_over_xc, "Delta << x_c (drop of the g_c' term)"),
        ("g_c", params.g_c, "weak coupling g_c << 1"),
    ]
    return tuple(RegimeFlag(n, float(r), classify(r), m) for n, r, m in ratios)


def derive_couplings(params: PhysicalParams) -> CouplingReport:
    """All derived couplings plus regime flags.

    Raises :class:`DomainError` when a field is non-positive (the Rabi
    frequency may be zero) or
    ``k_x0`` is outside ``(0, pi/2)``.
    """
    for name in ("wavelength", "delta_over_2pi", "t", "Delta", "m", "chi"):
        v = getattr(params, name)
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive, got {v!r}")
    # a switched-off coupling is allowed: it gives g_c = 0
    if not (np.isfinite(params.Omega0_over_2pi) and params.Omega0_over_2pi >= 0):
        raise DomainError(f"Omega0_over_2pi must be non-negative, got {params.Omega0_over_2pi!r}")
    if params.chi > 1:
        raise DomainError(f"chi must lie in (0, 1], got {params.chi!r}")
    if not 0.0 < params.k_x0 < np.pi / 2:
        raise DomainError(
            f"k_x0 = {params.k_x0!r} outside (0, pi/2): tan(k x0) / cos(k x0) degenerate"
        )
    return CouplingReport(
        k=params.k,
        Omega=params.Omega,
        x_c=params.x_c,
        Omega_xc=params.Omega_xc,
        g0=params.g0,
        g0_t=params.g0 * params.t,
        g_c=params.g_c,
        g_c_prime=params.g_c_prime,
        flags=regime_flags(params),
    )
