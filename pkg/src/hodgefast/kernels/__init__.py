"""Backend selection for the numeric inner loops.

The numba backend is used when numba imports cleanly, unless the
environment variable ``HODGEFAST_DISABLE_NUMBA`` is set to a truthy value,
in which case the vectorised numpy/scipy path is used. Both backends expose
``windowed_flows``, ``pcg_batch`` and ``triangles`` with identical
signatures.
"""
import importlib
import os

from . import numpy_impl

DIRICHLET = numpy_impl.DIRICHLET
CORRELATION = numpy_impl.CORRELATION

_disabled = os.environ.get("HODGEFAST_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}


def _load_numba():
    return importlib.import_module(__name__ + ".numba_impl")


numba_impl = None
if not _disabled:
    try:
        numba_impl = _load_numba()
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_impl = None

BACKEND = "numba" if numba_impl is not None else "numpy"


def get_backend(name=None):
    """Return the kernel module for ``name`` ('numba' or 'numpy').

    ``None`` returns the active backend.
    """
    name = BACKEND if name is None else name
    if name == "numpy":
        return numpy_impl
    if name == "numba":
        # loads on demand even when disabled, so both paths stay testable
        return numba_impl if numba_impl is not None else _load_numba()
    raise ValueError(f"unknown kernel backend {name!r}")


_active = get_backend()
windowed_flows = _active.windowed_flows
pcg_batch = _active.pcg_batch
triangles = _active.triangles
