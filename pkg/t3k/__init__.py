"""t3k-lab: tunnelling of the 3rd kind in an atom-cavity toy model."""

__version__ = "0.1.0"
TOOL_NAME = "t3k-lab"
