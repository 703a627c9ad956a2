"""Link-level OFDM simulator with a linear learned channel estimator trained online."""

from .harness import ScenarioConfig, SweepSpec, run_sweep
from .ofdm import OfdmConfig

__version__ = "0.1.0"

__all__ = ["OfdmConfig", "ScenarioConfig", "SweepSpec", "run_sweep", "__version__"]
