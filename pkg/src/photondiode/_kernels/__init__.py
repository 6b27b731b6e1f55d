"""Backend selection for the hot kernels.

Two interchangeable implementations of the counter-based RNG block
function and the coincidence pair histogram:

  _core  Cython extension (built by ``python setup.py build_ext --inplace``)
  _ref   pure numpy fallback

The compiled backend is used when importable; set PHOTONDIODE_KERNELS to
``python`` or ``compiled`` to force one side.  Both produce identical
integer streams; see benchmarks/benchmark_backends.py for a comparison.
"""

import os

from . import _ref

_choice = os.environ.get("PHOTONDIODE_KERNELS", "auto").lower()

_impl = None
if _choice in ("auto", "compiled"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None
        if _choice == "compiled":
            raise ImportError(
                "PHOTONDIODE_KERNELS=compiled but the extension is not built; "
                "run: python setup.py build_ext --inplace"
            )
if _impl is None:
    _impl = _ref

backend_name = "compiled" if _impl is not _ref else "python"

philox4x32 = _impl.philox4x32
pair_diff_histogram = _impl.pair_diff_histogram


def available_backends():
    """Names of importable backends (for tests and benchmarks)."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names
