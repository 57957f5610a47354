"""Kernel selection: compiled ``_kernels`` when importable, else ``_dopri``.

Set ``NAMBU_PURE=1`` to force the pure-Python kernels.
"""
from __future__ import annotations

import os

from . import _dopri

NAME = "python"
_compiled = None
if not os.environ.get("NAMBU_PURE"):
    try:
        from . import _kernels as _compiled
        NAME = "cython"
    except ImportError:
        _compiled = None


def poly_rhs(table, X, *, pure: bool = False):
    if _compiled is not None and not pure:
        return _compiled.poly_rhs(table.exps, table.coefs, table.owner, X)
    return _dopri.poly_rhs(table.exps_py, table.coefs_py, table.owner_py, X)


def dopri_poly(table, y0, t0, t1, t_eval, rtol, atol, max_step, max_steps, *, pure: bool = False):
    if _compiled is not None and not pure:
        return _compiled.dopri_poly(table.exps, table.coefs, table.owner, y0, t0, t1, t_eval,
                                    rtol, atol, max_step, max_steps)
    return _dopri.dopri_poly(table.exps_py, table.coefs_py, table.owner_py, y0, t0, t1, t_eval,
                             rtol, atol, max_step, max_steps)
