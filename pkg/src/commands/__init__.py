"""Command-line subcommands"""

from .inference import register_inference_commands
from .pruning import register_pruning_commands
from .structure import register_structure_commands
from .training import register_training_commands

__all__ = [
    "register_inference_commands",
    "register_pruning_commands",
    "register_structure_commands",
    "register_training_commands",
]
