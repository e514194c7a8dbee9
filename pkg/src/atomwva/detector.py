"""Two-detector counting model and Monte Carlo error experiments.

Two detectors of width ``l`` sit at ``+x_pos`` and ``-x_pos`` (units of
``Delta``).  The expected count in each is ``N P`` times the pointer
probability inside its window, and the shift signal is the count ratio
``n1 / n2 - 1``.

Sampled counts follow ``n_i = chi n_bar_i + delta0 n_bar_i + r_i``: a
systematic error proportional to the expected count plus Poisson shot
noise ``r_i`` of variance ``chi n_bar_i``.  The systematic part multiplies
both detectors by the same factor and cancels in the ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import ContractError, DomainError, NormalizationError
from .hilbert import NORM_TOL, Grid1D, Representation, WavepacketState, make_gaussian

MIN_TRIALS = 30


@dataclass(frozen=True)
class DetectorSetup:
    """Detector geometry (units of ``Delta``), atom budget and error model.

    ``delta0_second`` gives the second detector its own systematic
    coefficient.  This goes beyond the shared-coefficient model and exists
    to show that the cancellation needs equal coefficients.
    """

    x_pos: float = 1.5
    l: float = 1.0
    N: int = 1_000_000
    chi: float = 1.0
    delta0: float = 0.0
    seed: Optional[int] = None
    delta0_second: Optional[float] = None

    def __post_init__(self):
        if not self.x_pos > 0:
            raise DomainError(f"x_pos must be positive, got {self.x_pos!r}")
        if not 0 < self.l < self.x_pos:
            raise DomainError(f"window width must satisfy 0 < l < x_pos, got l={self.l!r}, x_pos={self.x_pos!r}")
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"N must be a non-negative integer, got {self.N!r}")
        if not 0 < self.chi <= 1:
            raise DomainError(f"chi must lie in (0, 1], got {self.chi!r}")

    @property
    def windows(self) -> tuple[tuple[float, float], tuple[float, float]]:
        h = self.l / 2
        return (self.x_pos - h, self.x_pos + h), (-self.x_pos - h, -self.x_pos + h)

    @property
    def systematic(self) -> tuple[float, float]:
        d2 = self.delta0 if self.delta0_second is None else self.delta0_second
        return self.delta0, d2

    def check_grid(self, grid: Grid1D) -> None:
        lo, hi = grid.x[0], grid.x[-1]
        for a, b in self.windows:
            if a < lo or b > hi:
                raise DomainError(f"detector window [{a:g}, {b:g}] lies outside the grid [{lo:g}, {hi:g}]")


def window_integral(x: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    """Trapezoid rule on ``[a, b]`` with linearly interpolated endpoints."""
    if a < x[0] or b > x[-1]:
        raise DomainError(f"window [{a:g}, {b:g}] outside the sampled range")
    inside = (x > a) & (x < b)
    xs = np.concatenate(([a], x[inside], [b]))
    ys = np.concatenate(([np.interp(a, x, y)], y[inside], [np.interp(b, x, y)]))
    return float(trapezoid(ys, xs))


def window_mean(x: np.ndarray, density: np.ndarray, a: float, b: float) -> float:
    """Mean position inside ``[a, b]`` weighted by ``density``."""
    return window_integral(x, x * density, a, b) / window_integral(x, density, a, b)


def lever_arm(setup: DetectorSetup, grid: Optional[Grid1D] = None) -> float:
    """Window-averaged position ``x_bar_l`` of the unshifted packet in the first detector."""
    grid = grid or Grid1D()
    phi = make_gaussian(grid)
    return window_mean(grid.x, phi.density(), *setup.windows[0])


def expected_counts(pointer: WavepacketState, P: float, setup: DetectorSetup) -> tuple[float, float]:
    """Expected counts ``N P int_window |phi_w|^2`` for the two detectors."""
    if pointer.representation is not Representation.POSITION:
        raise ContractError("expected_counts needs the pointer in the position representation")
    norm = pointer.norm()
    if abs(norm - 1.0) > NORM_TOL:
        raise NormalizationError(norm, f"pointer must be normalized (norm = {norm!r}); "
                                 "pass the post-selection probability separately")
    setup.check_grid(pointer.grid)
    rho = pointer.density()
    x = pointer.grid.x
    (a1, b1), (a2, b2) = setup.windows
    scale = setup.N * P
    return scale * window_integral(x, rho, a1, b1), scale * window_integral(x, rho, a2, b2)


def signal(n1, n2):
    """Ratio signal ``n1 / n2 - 1``."""
    n2 = np.asarray(n2, dtype=float)
    if np.any(n2 == 0):
        raise DomainError("second detector count is zero; ratio signal undefined")
    out = np.asarray(n1, dtype=float) / n2 - 1.0
    return float(out) if out.ndim == 0 else out


def log_signal(n1, n2):
    """``log(n1 / n2)``, which equals the ratio signal to first order."""
    return float(np.log(n1 / n2))


def first_order_signal(wv, g_c: float, x_bar_l: float) -> float:
    """``4 g_c Im(A_w) x_bar_l`` (lever arm in units of ``Delta``)."""
    im = wv.im if hasattr(wv, "im") else complex(wv).imag
    return 4.0 * g_c * im * x_bar_l


@dataclass(frozen=True)
class CountingResult:
    n1_bar: float
    n2_bar: float
    n1: float
    n2: float
    s_bar: float
    s: float
    x_bar_l: float


def sample_counts(n_bar, setup: DetectorSetup, rng: np.random.Generator):
    """Draw detector counts around the expected values ``n_bar``.

    Returns ``(counts, random_error)``; ``counts = chi n_bar + delta0_i n_bar
    + random_error`` and ``random_error = Poisson(chi n_bar) - chi n_bar``.
    """
    n_bar = np.asarray(n_bar, dtype=float)
    mean = setup.chi * n_bar
    random_error = rng.poisson(mean) - mean
    d = np.array(setup.systematic) if n_bar.shape == (2,) else setup.delta0
    return mean + d * n_bar + random_error, random_error


def count_once(pointer: WavepacketState, P: float, setup: DetectorSetup,
               rng: Optional[np.random.Generator] = None) -> CountingResult:
    """One counting run: expected counts, a sampled pair and both signals."""
    n1b, n2b = expected_counts(pointer, P, setup)
    rng = rng if rng is not None else np.random.default_rng(setup.seed)
    (n1, n2), _ = sample_counts([n1b, n2b], setup, rng)
    return CountingResult(n1b, n2b, float(n1), float(n2), signal(n1b, n2b), signal(n1, n2),
                          lever_arm(setup, pointer.grid))


def trial_generators(seed: int, trials: int):
    """Independent generators, one per trial, spawned from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def simulate_counts(n1_bar: float, n2_bar: float, setup: DetectorSetup, trials: int):
    """Monte Carlo counts; returns arrays ``counts`` and ``random_error`` of shape ``(trials, 2)``.

    Each trial draws from its own generator derived from ``setup.seed``, so
    results do not depend on evaluation order.
    """
    if setup.seed is None:
        raise DomainError("a seed is required for Monte Carlo runs")
    counts = np.empty((trials, 2))
    errors = np.empty((trials, 2))
    n_bar = np.array([n1_bar, n2_bar])
    for k, rng in enumerate(trial_generators(setup.seed, trials)):
        counts[k], errors[k] = sample_counts(n_bar, setup, rng)
    return counts, errors


@dataclass(frozen=True)
class SuppressionReport:
    trials: int
    s_bar: float
    s_bar_systematic_limit: float
    s_mean: float
    s_std: float
    stderr: float
    bias: float
    bias_reference: float
    bias_difference: float
    bias_difference_stderr: float
    random_error_std: tuple
    random_error_std_reference: tuple
    s_std_reference: float
    s_std_predicted: float
    systematic_cancels: bool
    samples: np.ndarray = field(repr=False, default=None)

    def as_dict(self, include_samples: bool = False) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "samples"}
        d["random_error_std"] = list(self.random_error_std)
        d["random_error_std_reference"] = list(self.random_error_std_reference)
        if include_samples and self.samples is not None:
            d["samples"] = self.samples.tolist()
        return d


def predicted_signal_std(n1_bar: float, n2_bar: float, setup: DetectorSetup) -> float:
    """Error propagation for ``s = n1/n2 - 1`` with Poisson noise of variance ``chi n_bar``."""
    d1, d2 = setup.systematic
    m1, m2 = (setup.chi + d1) * n1_bar, (setup.chi + d2) * n2_bar
    ratio = m1 / m2
    return ratio * math.sqrt(setup.chi * n1_bar / m1 ** 2 + setup.chi * n2_bar / m2 ** 2)


def error_suppression_experiment(n1_bar: float, n2_bar: float, setup: DetectorSetup,
                                 trials: int) -> SuppressionReport:
    """Compare sampled signals with and without the systematic error.

    Runs ``trials`` Monte Carlo repetitions with the setup's ``delta0`` and
    a reference batch with ``delta0 = 0`` from the same seed, so both
    batches share their shot noise.  The systematic error is deemed to
    cancel when the bias and the paired bias difference are within three
    standard errors of zero.
    """
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")
    s_bar = signal(n1_bar, n2_bar)
    d1, d2 = setup.systematic
    s_limit = signal((setup.chi + d1) * n1_bar, (setup.chi + d2) * n2_bar)

    counts, errors = simulate_counts(n1_bar, n2_bar, setup, trials)
    ref_setup = replace(setup, delta0=0.0, delta0_second=None)
    ref_counts, ref_errors = simulate_counts(n1_bar, n2_bar, ref_setup, trials)

    s = counts[:, 0] / counts[:, 1] - 1.0
    s_ref = ref_counts[:, 0] / ref_counts[:, 1] - 1.0
    std = float(np.std(s, ddof=1))
    stderr = std / math.sqrt(trials)
    bias = float(np.mean(s) - s_bar)
    bias_ref = float(np.mean(s_ref) - s_bar)
    diff = s - s_ref
    diff_se = float(np.std(diff, ddof=1) / math.sqrt(trials))
    bias_diff = float(np.mean(diff))
    # paired differences with identical noise can be exactly zero
    diff_ok = abs(bias_diff) <= 3 * diff_se if diff_se > 0 else abs(bias_diff) <= 1e-12
    cancels = abs(bias) <= 3 * stderr and diff_ok

    return SuppressionReport(
        trials=trials,
        s_bar=s_bar,
        s_bar_systematic_limit=s_limit,
        s_mean=float(np.mean(s)),
        s_std=std,
        stderr=stderr,
        bias=bias,
        bias_reference=bias_ref,
        bias_difference=bias_diff,
        bias_difference_stderr=diff_se,
        random_error_std=tuple(float(v) for v in np.std(errors, axis=0, ddof=1)),
        random_error_std_reference=tuple(float(v) for v in np.std(ref_errors, axis=0, ddof=1)),
        s_std_reference=float(np.std(s_ref, ddof=1)),
        s_std_predicted=predicted_signal_std(n1_bar, n2_bar, setup),
        systematic_cancels=bool(cancels),
        samples=s,
    )
