"""Learning low-weight Pauli descriptions of noisy quantum states and processes."""

__version__ = "0.1.0"
