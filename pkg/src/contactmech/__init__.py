"""Contact Hamiltonian and Lagrangian mechanics of dissipative systems."""

__version__ = "0.1.0"
