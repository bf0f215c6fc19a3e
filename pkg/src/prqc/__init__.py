"""Pre-compilation toolkit for programmable-range analog quantum simulators.

Modules: ``models`` (Hamiltonian catalog), ``spin`` and ``fermion`` (exact
backends), ``circuit`` (layered circuits and pulses), ``optimize``
(variational and optimal-control compilation), ``noise`` (depolarizing noise
and zero-noise extrapolation), ``quench`` (quench dynamics and thermal
references), ``ledger`` and ``cli``.
"""

__version__ = "0.1.0"
