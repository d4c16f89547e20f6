"""
Subcommands of the scatternet command line.
"""
from scatternet.commands import evaluate, generate, invert, train

COMMANDS = {
    "generate": generate,
    "invert": invert,
    "train": train,
    "eval": evaluate,
}
