"""Lattice toolkit for the Seiberg-Witten variational problem on a flat 4-torus.

Subpackages: lattice (discrete exterior calculus), fields (gauge/spinor
fields and operators), functional (energy, residuals, identities),
optimizer (descent and saddle search), topology (integer cohomology),
snapshots (binary/CSV serialization), cli (batch front end).
"""

__version__ = "0.1.0"
