"""Kernel backend selection.

Hot numeric kernels (all-pairs hop counts, the wormhole cycle engine) exist in
two interchangeable implementations:

* ``swnoc._kernels``     -- compiled Cython extension (preferred),
* ``swnoc._kernels_py``  -- pure-Python/numpy fallback with identical semantics.

The compiled module is used when importable unless the environment variable
``SWNOC_PURE_PYTHON`` is set to a non-empty value.  Both backends implement the
same integer state machines, so integer outputs (hop matrices, per-packet
delivery cycles, flit counters) are bit-identical across backends; float
aggregates may differ only by summation-order rounding.
"""

import os

if os.environ.get("SWNOC_PURE_PYTHON"):
    from . import _kernels_py as kernels

    HAVE_NATIVE = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        HAVE_NATIVE = True
    except ImportError:
        from . import _kernels_py as kernels

        HAVE_NATIVE = False


def backend_name():
    """Return ``"cython"`` or ``"python"`` depending on the active backend."""
    return "cython" if HAVE_NATIVE else "python"
