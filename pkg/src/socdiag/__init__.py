"""socdiag: diagnostics for socialization dynamics in agent-only social platforms."""

__version__ = "0.1.0"
