"""Space-time Trefftz discontinuous Galerkin solver for the first-order
acoustic wave equations.

The package is organized around the solver pipeline:

- :mod:`sptdg.polynomial` -- exact sparse polynomial arithmetic in (x, t);
- :mod:`sptdg.trefftz_basis` -- local Trefftz bases (recurrence-evolved and
  polynomial plane-wave families);
- :mod:`sptdg.mesh` -- space-time slab and 1D tent meshes with face
  classification;
- :mod:`sptdg.assembly` -- skeleton-only assembly of the DG bilinear form;
- :mod:`sptdg.solver` -- causal block-triangular and monolithic solves;
- :mod:`sptdg.analysis` -- norms, energies, exact solutions, convergence
  studies;
- :mod:`sptdg.cli` -- configuration-driven command line front end.
"""

__version__ = "0.1.0"
