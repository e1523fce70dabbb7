"""
Numerical laboratory for hierarchical photonic cat states.

Every state family is available in an exact coherent-superposition backend
(``hcslab.coherent``) and a truncated Fock backend (``hcslab.fock``); the
remaining packages compute statistics, metrology, dynamics and circuits on top
of either one.
"""

__version__ = "0.1.0"
