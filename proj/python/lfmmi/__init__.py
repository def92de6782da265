"""Lattice-free MMI scoring and decoding over externally supplied emissions.

The compiled core lives in the `_lfmmi` extension module; this package
re-exports its surface. Emission matrices are T x P numpy float64 arrays of
per-frame log-posteriors (unit 0 is the blank).
"""

try:
    from ._lfmmi import *  # noqa: F401,F403  (installed wheel layout)
    from ._lfmmi import __version__  # noqa: F401
except ImportError:  # pragma: no cover - in-tree builds put _lfmmi on PYTHONPATH
    from _lfmmi import *  # noqa: F401,F403
    from _lfmmi import __version__  # noqa: F401
