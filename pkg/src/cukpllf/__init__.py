"""Ćuk converter under piecewise linear Lyapunov switching control."""
from .certificate import CertificatePair, CertificateReport, explicit_certificates, verify_certificate
from .controller import (
    PolytopeSpec,
    coefficients_from_spec,
    in_polytope,
    initial_switch_state,
    lyapunov_value,
    switch_decide,
)
from .converter import (
    ConverterParams,
    EquilibriumPoint,
    OperatingSpec,
    SubsystemModel,
    averaged_balance_residual,
    build_subsystems,
    equilibrium,
)
from .errors import ChatterError, ConfigError, InsufficientDataError
from .metrics import Metrics, compute_metrics
from .scenarios import PRESETS, Scenario, load_config
from .sim import SimConfig, SwitchEvent, Trace, TraceSample, find_crossing, propagate_exact, run_simulation

__version__ = "0.1.0"
