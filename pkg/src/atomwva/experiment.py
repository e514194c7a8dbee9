"""End-to-end orchestration: regime validation, single runs, sweeps and detector runs.

Every entry point takes a :class:`~atomwva.config.RunConfig` and returns
plain dictionaries with snake_case keys, ready for JSON or CSV output.
Shift columns are dimensionless: ``p_shift`` is ``<p> / (2 Delta_p)`` and
``x_shift`` is ``<x> / (2 Delta)``.

The configured qubit is the state *after* the cavity has imprinted its
bare phase ``exp(-i g0 t)`` on the excited level, which is the state the
weak value refers to.  Both engines are therefore started from that qubit
with the phase undone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import DetectorConfig, RunConfig, with_value
from .detector import (
    error_suppression_experiment,
    expected_counts,
    first_order_signal,
    lever_arm,
    signal,
)
from .dynamics import (
    HamiltonianKind,
    project_cavity_vacuum,
    propagate_effective,
    propagate_exact,
    to_interaction_frame,
)
from .errors import DomainError, WVAError
from .hilbert import (
    CompositeState,
    CouplingReport,
    RegimeFlag,
    classify,
    derive_couplings,
    fidelity,
    make_gaussian,
    moments,
    worst_status,
)
from .weakvalue import (
    measured_shifts,
    postselect,
    postselect_mixture,
    predicted_shifts,
    unselected_momentum_shift,
    weak_value,
)

ENGINE_KINDS = {
    "effective": None,
    "exact-linear": HamiltonianKind.LINEARIZED,
    "exact-sin": HamiltonianKind.FULL_SINUSOIDAL,
}

#: Column order of sweep tables (also used for single-run CSV output).
SWEEP_COLUMNS = (
    "parameter",
    "value",
    "re_weak_value",
    "im_weak_value",
    "probability",
    "g0_over_2pi",
    "g_c",
    "predicted_p_shift",
    "predicted_x_shift",
    "measured_p_shift",
    "measured_x_shift",
    "s_bar",
    "status",
    "error",
)

AMPLIFICATION_MESSAGE = (
    "amplification bound g_c^2 |A_w| << 1: the weak value cannot amplify the shift without limit"
)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    couplings: CouplingReport
    flags: tuple
    weak_value: Optional[complex]
    probability: Optional[float]
    error: str = ""

    @property
    def status(self) -> str:
        return "fail" if self.error else worst_status(self.flags)

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "couplings": couplings_dict(self.couplings),
            "flags": [_flag_dict(f) for f in self.flags],
            "re_weak_value": None if self.weak_value is None else self.weak_value.real,
            "im_weak_value": None if self.weak_value is None else self.weak_value.imag,
            "probability": self.probability,
            "error": self.error,
        }


def _flag_dict(f: RegimeFlag) -> dict:
    return {"name": f.name, "ratio": f.ratio, "status": f.status, "message": f.message}


def couplings_dict(c: CouplingReport) -> dict:
    return {
        "k": c.k,
        "omega": c.Omega,
        "x_c": c.x_c,
        "omega_xc_over_2pi": c.Omega_xc / (2 * math.pi),
        "g0_over_2pi": c.g0 / (2 * math.pi),
        "g0_t": c.g0_t,
        "g_c": c.g_c,
        "g_c_prime": c.g_c_prime,
    }


def validate(cfg: RunConfig) -> ValidationReport:
    """Every regime ratio plus ``g_c^2 |A_w|`` with pass/warn/fail status.

    Raises :class:`DomainError` when the physical parameters are outside
    the model's domain altogether.
    """
    report = derive_couplings(cfg.physical)
    flags = list(report.flags)
    try:
        wv = weak_value(cfg.qubit, cfg.postselect)
    except WVAError as exc:
        return ValidationReport(report, tuple(flags), None, 0.0, str(exc))
    amp = report.g_c ** 2 * abs(wv.A_w)
    flags.append(RegimeFlag("g_c2_abs_A_w", float(amp), classify(amp), AMPLIFICATION_MESSAGE))
    return ValidationReport(report, tuple(flags), wv.A_w, wv.P)


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

def _initial_qubit(cfg: RunConfig):
    return cfg.qubit.with_phase(cfg.physical.g0 * cfg.physical.t)


def _shift_dict(m) -> dict:
    return {"p_shift": m.p_shift_over_2Dp, "x_shift": m.x_shift_over_2D,
            "p_variance": m.p_variance, "x_variance": m.x_variance}


def _counts(pointers, P, setup):
    """Expected counts for one pointer or an incoherent list of pointers."""
    if not isinstance(pointers, (list, tuple)):
        pointers = [pointers]
    total = sum(p.norm() for p in pointers)
    n1 = n2 = 0.0
    for ptr in pointers:
        w = ptr.norm() / total
        if w == 0:
            continue
        a, b = expected_counts(ptr.normalized(), P * w, setup)
        n1 += a
        n2 += b
    return n1, n2


def _detector_block(cfg: RunConfig, pointers, P, wv, g_c, grid) -> dict:
    dcfg = cfg.detector or DetectorConfig()
    setup = dcfg.setup(cfg.physical, cfg.seed)
    n1, n2 = _counts(pointers, P, setup)
    x_bar = lever_arm(setup, grid)
    return {
        "n1_bar": n1,
        "n2_bar": n2,
        "s_bar": signal(n1, n2) if n2 > 0 else None,
        "s_first_order": first_order_signal(wv, g_c, x_bar),
        "x_bar_l": x_bar,
    }


@dataclass
class _Pipeline:
    """Intermediate states of one run, kept for the detector stage."""

    pointers: object
    probability: float
    record: dict


def _pipeline(cfg: RunConfig) -> _Pipeline:
    params = cfg.physical
    couplings = derive_couplings(params)
    g_c = couplings.g_c
    grid = cfg.numerics.grid
    spec = cfg.postselect
    wv = weak_value(cfg.qubit, spec, g_c)
    pred = predicted_shifts(wv, g_c)
    packet = make_gaussian(grid)
    s_i = _initial_qubit(cfg)

    eff = propagate_effective(packet, s_i, params, cfg.numerics.keep_gc_prime)
    eff_sel = postselect(eff, spec)
    eff_meas = measured_shifts(eff_sel.pointer)
    unsel_p, _ = moments(eff.to_momentum())

    record = {
        "engine": cfg.engine,
        "couplings": couplings_dict(couplings),
        "flags": [_flag_dict(f) for f in couplings.flags],
        "regime_status": couplings.status,
        "qubit": {"alpha": cfg.qubit.alpha, "beta": cfg.qubit.beta, "theta": cfg.qubit.theta},
        "postselect": {"eta": spec.eta, "outcome": spec.outcome.value},
        "weak_value": {
            "re": wv.re,
            "im": wv.im,
            "abs": abs(wv.A_w),
            "a": wv.A,
            "vartheta": wv.vartheta,
        },
        "predicted": {
            "p_shift": pred.p_shift_over_2Dp,
            "x_shift": pred.x_shift_over_2D,
            "g_c2_abs_a_w": pred.g_c2_abs_A_w,
            "status": pred.status,
            "message": pred.message,
        },
        "probability_predicted": wv.P,
        "unselected": {
            # <p> / Delta_p = 2 <pt>
            "predicted_p_over_dp": unselected_momentum_shift(cfg.qubit, g_c),
            "measured_p_over_dp": 2.0 * unsel_p,
        },
        "exact": None,
    }

    kind = ENGINE_KINDS[cfg.engine]
    if kind is None:
        pointers, P = eff_sel.pointer, eff_sel.P_actual
        record["measured"] = _shift_dict(eff_meas)
        record["probability_actual"] = P
    else:
        exact = propagate_exact(CompositeState.product(packet, s_i, cfg.numerics.n_max), kind, params,
                                method=cfg.numerics.method)
        final = to_interaction_frame(exact, params)
        if cfg.numerics.cavity_disposal == "project":
            kept, vacuum_p = project_cavity_vacuum(final)
            sel = postselect(kept, spec)
            pointers, P = sel.pointer, sel.P_actual
        else:
            vacuum_p = float(final.fock_populations()[0])
            pointers, P = postselect_mixture(final, spec)
        record["measured"] = _shift_dict(measured_shifts(pointers))
        record["probability_actual"] = P
        record["exact"] = {
            "kind": kind.value,
            "cavity_disposal": cfg.numerics.cavity_disposal,
            "vacuum_probability": vacuum_p,
            "fidelity_vs_effective": fidelity(final, eff),
            "effective_measured": _shift_dict(eff_meas),
            "norm_drift": exact.diagnostics["norm_drift"],
            "cavity_excitation_probability": exact.diagnostics["cavity_excitation_probability"],
            "cutoff_delta": exact.diagnostics.get("cutoff_delta"),
            "n_max": cfg.numerics.n_max,
            "method": cfg.numerics.method,
        }
    record["detector"] = _detector_block(cfg, pointers, P, wv, g_c, grid)
    return _Pipeline(pointers, P, record)


def run_single(cfg: RunConfig) -> dict:
    """Weak value, predicted and measured shifts, probabilities and diagnostics.

    Exact engines additionally report the fidelity with the effective
    engine and the effective engine's shifts.  Physics errors (impossible
    post-selection, aliasing, cutoff failure) propagate to the caller.
    """
    return _pipeline(cfg).record


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _row(cfg: RunConfig, value: float) -> dict:
    path = cfg.sweep.parameter
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(parameter=path, value=float(value), status="", error="")
    try:
        point = with_value(cfg, path, value)
        couplings = derive_couplings(point.physical)
        row["g0_over_2pi"] = couplings.g0 / (2 * math.pi)
        row["g_c"] = couplings.g_c
        wv = weak_value(point.qubit, point.postselect)
        row["re_weak_value"], row["im_weak_value"], row["probability"] = wv.re, wv.im, wv.P
        rec = run_single(point)
        status = worst_status(list(couplings.flags)
                              + [RegimeFlag("amp", 0.0, classify(rec["predicted"]["g_c2_abs_a_w"]))])
        row.update(
            predicted_p_shift=rec["predicted"]["p_shift"],
            predicted_x_shift=rec["predicted"]["x_shift"],
            measured_p_shift=rec["measured"]["p_shift"],
            measured_x_shift=rec["measured"]["x_shift"],
            s_bar=rec["detector"]["s_bar"],
            status=status,
        )
    except (WVAError, ValueError) as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: RunConfig, workers: int = 1) -> list[dict]:
    """One row per sweep point, in sweep order.

    A point that raises carries the message in its ``error`` column and the
    sweep continues.  With ``workers > 1`` points run in a thread pool;
    rows keep the sweep order regardless of completion order.
    """
    if cfg.sweep is None:
        raise DomainError("the configuration has no [sweep] section")
    values = cfg.sweep.values()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda v: _row(cfg, v), values))
    return [_row(cfg, v) for v in values]


# ---------------------------------------------------------------------------
# Detector Monte Carlo
# ---------------------------------------------------------------------------

def run_detect(cfg: RunConfig, include_samples: bool = False) -> dict:
    """Monte Carlo counting report with the error-suppression verdict.

    Needs a ``[detector]`` section and a seed.  The pointer comes from the
    configured engine; the systematic coefficient is the detector's
    ``delta0`` (falling back to the physical one).
    """
    if cfg.detector is None:
        raise DomainError("detect needs a [detector] section")
    if cfg.seed is None:
        raise DomainError("detect needs a seed ([detector] seed or --seed)")
    pipe = _pipeline(cfg)
    setup = cfg.detector.setup(cfg.physical, cfg.seed)
    det = pipe.record["detector"]
    report = error_suppression_experiment(det["n1_bar"], det["n2_bar"], setup, cfg.detector.trials)
    s = report.samples
    q = np.quantile(s, [0.05, 0.25, 0.5, 0.75, 0.95])
    out = {
        "engine": cfg.engine,
        "seed": cfg.seed,
        "trials": report.trials,
        "n_atoms": setup.N,
        "chi": setup.chi,
        "delta0": setup.delta0,
        "probability": pipe.probability,
        "n1_bar": det["n1_bar"],
        "n2_bar": det["n2_bar"],
        "x_bar_l": det["x_bar_l"],
        "s_bar": report.s_bar,
        "s_first_order": det["s_first_order"],
        "s_mean": report.s_mean,
        "s_std": report.s_std,
        "s_std_predicted": report.s_std_predicted,
        "s_std_reference": report.s_std_reference,
        "s_quantiles": {"q05": q[0], "q25": q[1], "q50": q[2], "q75": q[3], "q95": q[4]},
        "stderr": report.stderr,
        "bias": report.bias,
        "bias_reference": report.bias_reference,
        "bias_difference": report.bias_difference,
        "bias_difference_stderr": report.bias_difference_stderr,
        "random_error_std": list(report.random_error_std),
        "random_error_std_reference": list(report.random_error_std_reference),
        "systematic_cancels": report.systematic_cancels,
    }
    if include_samples:
        out["samples"] = s.tolist()
    return out


# ---------------------------------------------------------------------------
# Output schemas (JSON Schema draft 2020-12)
# ---------------------------------------------------------------------------

_NUM = {"type": ["number", "null"]}
_STR = {"type": "string"}

SWEEP_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": list(SWEEP_COLUMNS),
    "additionalProperties": False,
    "properties": {
        **{c: _NUM for c in SWEEP_COLUMNS},
        "parameter": _STR,
        "value": {"type": "number"},
        "status": {"enum": ["pass", "warn", "fail", "error"]},
        "error": _STR,
    },
}

SWEEP_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["columns", "rows"],
    "properties": {
        "columns": {"const": list(SWEEP_COLUMNS)},
        "rows": {"type": "array", "items": SWEEP_ROW_SCHEMA},
    },
}

_SHIFTS = {
    "type": "object",
    "required": ["p_shift", "x_shift", "p_variance", "x_variance"],
    "properties": {k: {"type": "number"} for k in ("p_shift", "x_shift", "p_variance", "x_variance")},
}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["engine", "couplings", "flags", "weak_value", "predicted", "measured",
                 "probability_predicted", "probability_actual", "unselected", "exact", "detector"],
    "properties": {
        "engine": {"enum": list(ENGINE_KINDS)},
        "weak_value": {"type": "object", "required": ["re", "im", "abs"]},
        "predicted": {"type": "object", "required": ["p_shift", "x_shift", "g_c2_abs_a_w", "status"]},
        "measured": _SHIFTS,
        "probability_predicted": {"type": "number", "minimum": 0, "maximum": 1},
        "probability_actual": {"type": "number", "minimum": 0},
        "exact": {"type": ["object", "null"]},
        "detector": {"type": "object", "required": ["n1_bar", "n2_bar", "s_bar", "x_bar_l"]},
    },
}

VALIDATE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["status", "couplings", "flags"],
    "properties": {
        "status": {"enum": ["pass", "warn", "fail"]},
        "flags": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "ratio", "status", "message"],
                "properties": {"status": {"enum": ["pass", "warn", "fail"]}},
            },
        },
    },
}

DETECT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["seed", "trials", "s_bar", "s_mean", "s_std", "stderr", "bias",
                 "bias_difference", "systematic_cancels"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "systematic_cancels": {"type": "boolean"},
    },
}
