"""Vehicular-edge-computing simulator with AoI-driven federated learning.

Vehicles crossing a road-side unit's coverage offload tasks over a shared
uplink.  Each vehicle's transmit power is chosen by a local soft
actor-critic; a road-segment graph neural network produces the weights for
in-range critic aggregation, and departing vehicles feed a global federated
average.  The package exposes the environment pieces (scenario, channel,
aoi_reward), the learning pieces (nn_core, sac_agent, road_graph,
federated, baselines), and the harness that runs full experiments.
"""

from .scenario import ScenarioConfig, desk_config, load_config, RngStream
from .harness import (run_training, run_test, sweep, emit_results, Simulation,
                      MetricsRecord, RunSummary, SCHEMES)

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig", "desk_config", "load_config", "RngStream",
    "run_training", "run_test", "sweep", "emit_results", "Simulation",
    "MetricsRecord", "RunSummary", "SCHEMES", "__version__",
]
