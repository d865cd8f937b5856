"""Neural density matrices for steady states of dissipative spin chains."""

__version__ = "0.1.0"
