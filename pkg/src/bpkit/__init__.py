"""bpkit: behavioral programs as composable generator scenarios.

B-threads request, wait for, and block events; an arbiter selects one
unblocked requested event per sync point.  On top of that protocol the
package provides probabilistic choices, solver-backed event selection,
state-space exploration, translation to model-checker input, reach-
ability analysis, and a reinforcement-learning environment.
"""

from .bprogram import (
    BProgram,
    BThread,
    BThreadError,
    EmptyEnabledSet,
    Execution,
    First,
    Policy,
    Priority,
    Random,
    Scripted,
    SnapshotError,
    Terminal,
    Trace,
    enabled_events,
    enumerate_traces,
    run,
    run_scripted,
    select_event,
    thread,
    wakeup,
)
from .choice import ChoiceSpec, InvalidDistribution, SupportTooLarge, expand_outcomes
from .events import (
    ALL,
    EMPTY,
    AllEvents,
    Complement,
    Event,
    EventSet,
    Explicit,
    Predicate,
    as_event_set,
)
from .statements import Sync, choice, sync
from .analysis import (
    NoConvergence,
    ProbResult,
    SampleReport,
    Verdict,
    check_safety,
    derive_seed,
    reach_probability,
    sample_csv,
    sample_estimate,
)
from .explore import (
    BThreadGraph,
    NonDeterministicBThread,
    ProductGraph,
    ProductNode,
    StateExplosion,
    ThreadState,
    build_product,
    explore_and_build,
    explore_bthread,
    explore_program,
)
from .examples import REGISTRY, InvalidParameters, SolverProgram, build_example
from .prism import properties_text, translate_program_prism
from .smv import translate_program

__version__ = "0.1.0"

__all__ = [
    "ALL",
    "AllEvents",
    "BProgram",
    "BThread",
    "BThreadError",
    "BThreadGraph",
    "InvalidParameters",
    "NoConvergence",
    "NonDeterministicBThread",
    "ProbResult",
    "ProductGraph",
    "ProductNode",
    "REGISTRY",
    "SampleReport",
    "SolverProgram",
    "StateExplosion",
    "ThreadState",
    "Verdict",
    "build_example",
    "build_product",
    "check_safety",
    "derive_seed",
    "explore_and_build",
    "explore_bthread",
    "explore_program",
    "properties_text",
    "reach_probability",
    "sample_csv",
    "sample_estimate",
    "translate_program",
    "translate_program_prism",
    "ChoiceSpec",
    "Complement",
    "EMPTY",
    "EmptyEnabledSet",
    "Event",
    "EventSet",
    "Execution",
    "Explicit",
    "First",
    "InvalidDistribution",
    "Policy",
    "Predicate",
    "Priority",
    "Random",
    "Scripted",
    "SnapshotError",
    "SupportTooLarge",
    "Sync",
    "Terminal",
    "Trace",
    "as_event_set",
    "choice",
    "enabled_events",
    "enumerate_traces",
    "expand_outcomes",
    "run",
    "run_scripted",
    "select_event",
    "sync",
    "thread",
    "wakeup",
]
