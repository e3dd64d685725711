"""Population-based multi-objective optimizers."""

from .archive import ParetoArchive, archive_insert, select_leader
from .common import ParetoSet
from .dominance import dominates, nondominated_fraction
from .mopso import MopsoParams, mopso_run
from .nsga2 import Nsga2Params, nsga2_run

__all__ = [
    "ParetoArchive", "archive_insert", "select_leader", "ParetoSet", "dominates",
    "nondominated_fraction", "MopsoParams", "mopso_run", "Nsga2Params", "nsga2_run",
]
