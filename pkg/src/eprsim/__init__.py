"""Simulator for polarization-entangled photon pairs seen from different inertial frames."""

from .engine import FrameReport, TrialRecord, exact_distribution, frame_report, run_batch, run_trial
from .exceptions import (
    EprSimError,
    ImpossibleOutcomeError,
    InvalidBoostError,
    InvalidGeometryError,
    InvalidStateError,
    ScenarioError,
    ScenarioSyntaxError,
)
from .polarization import (
    Outcome,
    PhotonState,
    TwoPhotonState,
    bell_state,
    collapse,
    conditional_probability,
    half_wave_plate,
    joint_probabilities,
    outcome_probabilities,
)
from .scenario import Scenario, Timeline, build_timeline, load_scenario, parse_scenario, validate
from .spacetime import (
    Event,
    Worldline,
    boost_event,
    critical_velocity,
    interval,
    ordering,
    simultaneous_point,
)
from .stats import CoincidenceTable, chsh, correlation, malus_fit, tabulate

__version__ = "0.1.0"
