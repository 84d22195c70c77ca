"""Heisenberg-limited learning of bosonic Hamiltonians under engineered dissipation."""
__version__ = "0.1.0"
