"""Coarse Smith theory on finite windows of metric spaces with finite group actions."""
from .errors import CoarseSmithError, IdentityFailure
from .metric import FiniteMetricSpace, GroupSpec, IsometricAction, WindowedSpace
from .coverings import Covering, CoarseningSystem, system_from_levels
from .complexes import GComplex, SimplicialComplex
from .homology import HomologyRanks, chain_complex, homology_ranks
from .limits import LevelTower, direct_system, run_scenario, stabilized_ranks

__version__ = "0.1.0"

__all__ = [
    "CoarseSmithError", "IdentityFailure", "FiniteMetricSpace", "GroupSpec", "IsometricAction",
    "WindowedSpace", "Covering", "CoarseningSystem", "system_from_levels", "GComplex",
    "SimplicialComplex", "HomologyRanks", "chain_complex", "homology_ranks", "LevelTower",
    "direct_system", "run_scenario", "stabilized_ranks",
]
