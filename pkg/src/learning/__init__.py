"""Parameter and structure learning"""

from .em import em_full_batch, em_stochastic, initialize_parameters
from .grower import GrowConfig, grow, grown_size
from .loop import CompressResult, compress, structure_learn
from .pruner import PruneHeuristic, PruneReport, prune, prune_edges, score_edges
from .trainlog import TrainLog

__all__ = [
    "em_full_batch",
    "em_stochastic",
    "initialize_parameters",
    "GrowConfig",
    "grow",
    "grown_size",
    "CompressResult",
    "compress",
    "structure_learn",
    "PruneHeuristic",
    "PruneReport",
    "prune",
    "prune_edges",
    "score_edges",
    "TrainLog",
]
