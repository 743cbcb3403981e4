"""Independent oracles and diagnostics for the solver and the geometry kernel.

Submodules are imported explicitly (``vegswe.verify.eigen`` and so on); the
check registry in :mod:`vegswe.verify.checks` depends on the solver.
"""
