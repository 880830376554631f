"""Scan kernels: the compiled extension when built, numpy otherwise.

Set ``twincheck.kernels.BACKEND`` to inspect which one is active; call
:func:`use` to switch (the benchmark does this).
"""

from __future__ import annotations

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def use(backend: str) -> None:
    global BACKEND, perm_orders, absolute_counts, j_opposite, local_descent
    if backend == "compiled" and _compiled is None:
        raise RuntimeError("compiled kernels are not built")
    impl = _compiled if backend == "compiled" else _fallback
    BACKEND = backend
    perm_orders = impl.perm_orders
    absolute_counts = impl.absolute_counts
    j_opposite = impl.j_opposite
    local_descent = impl.local_descent


def available() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


use(BACKEND)
