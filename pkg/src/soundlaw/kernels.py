"""Backend selection for the string-metric kernels.

Imports the compiled extension when present and falls back to the pure
Python twin otherwise.  `BACKEND` reports which one is active; both expose
the identical function set (see benchmarks/bench_kernels.py for a speed
comparison).
"""

from __future__ import annotations

from . import _native

try:
    from . import _speedups as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on how the wheel was built
    _impl = _native
    BACKEND = "python"

levenshtein = _impl.levenshtein
lcs_pair = _impl.lcs_pair
levenshtein_bruteforce = _impl.levenshtein_bruteforce
lcs_len_bruteforce = _impl.lcs_len_bruteforce

pure = _native
