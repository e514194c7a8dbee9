"""Weak-value amplification of the atom-vacuum interaction in a cavity.

A Gaussian atomic wavepacket passes a cavity in its vacuum state; the
dispersive atom-cavity coupling shifts the packet's momentum conditioned
on the atom's internal state.  After a qubit rotation and post-selection
the shift is amplified by a complex weak value.

Submodules
----------
hilbert
    Grids, wavepacket/qubit/cavity states, physical parameters, regime flags.
dynamics
    Exact cavity-QED propagators and the effective dispersive engine.
weakvalue
    Rotations, post-selection, weak values and pointer shifts.
detector
    Two-detector counting model and Monte Carlo error studies.
config, experiment, cli
    Run configuration, orchestration and the ``atomwva`` command.
"""

from .config import RunConfig, dumps, load, loads
from .detector import DetectorSetup, error_suppression_experiment, expected_counts, signal
from .dynamics import (
    EffectiveCoupling,
    HamiltonianKind,
    exact_vs_effective,
    propagate_effective,
    propagate_exact,
    to_interaction_frame,
)
from .errors import (
    AliasingError,
    ContractError,
    CutoffError,
    DomainError,
    NormalizationError,
    PostselectionError,
    RegimeError,
    RegimeWarning,
    WVAError,
)
from .experiment import run_detect, run_single, run_sweep, validate
from .hilbert import (
    CompositeState,
    Grid1D,
    PhysicalParams,
    QubitState,
    WavepacketState,
    derive_couplings,
    fidelity,
    make_gaussian,
    moments,
)
from .weakvalue import (
    Outcome,
    PostselectionSpec,
    measured_shifts,
    postselect,
    predicted_shifts,
    weak_value,
)

__version__ = "0.1.0"
