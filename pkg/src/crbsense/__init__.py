"""crbsense: how sensitive are WLS distribution-grid state-estimation
uncertainty bounds to the assumed pseudo-measurement distribution?

The package compares the WLS-assumed and true Cramer-Rao bounds per bus
across Monte Carlo operating scenarios on a 15-bus MV benchmark feeder.
"""

__version__ = "0.1.0"

from .netmodel import Network, build_ybus, bundled_network, load_network  # noqa: F401
from .noise import DistributionSpec, calibrate, fisher_information, table1_variants  # noqa: F401
