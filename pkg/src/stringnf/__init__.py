"""Normal forms and long-time action stability for the quasilinear string.

The package splits into a few layers:

- :mod:`stringnf.core` -- weighted sequence spaces and monomial indices,
- :mod:`stringnf.transforms` -- the coordinate chain (u, v) -> psi -> eta -> z,
- :mod:`stringnf.simulator` -- spectral Galerkin time integration,
- :mod:`stringnf.divisors` -- action-modulated frequencies and non-resonance,
- :mod:`stringnf.nf_engine` -- polynomial and rational normal form engine,
- :mod:`stringnf.measure` -- Monte Carlo measure estimates for non-resonant sets,
- :mod:`stringnf.cli` -- the ``stringnf`` command line front end.
"""

from .core import ComplexSeq, WeightSpec, weighted_norm

__version__ = "0.1.0"

__all__ = ["ComplexSeq", "WeightSpec", "weighted_norm", "__version__"]
