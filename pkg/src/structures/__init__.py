"""Initial circuit structures"""

from .chow_liu import ChowLiuTree, chow_liu, estimate_mutual_info, quantize
from .hclt import build_hclt, compile_hclt, learn_tree
from .simple import dense_mixture, fully_factorized, point_mass, random_circuit, uniform_circuit

__all__ = [
    "ChowLiuTree",
    "chow_liu",
    "estimate_mutual_info",
    "quantize",
    "build_hclt",
    "compile_hclt",
    "learn_tree",
    "dense_mixture",
    "fully_factorized",
    "point_mass",
    "random_circuit",
    "uniform_circuit",
]
