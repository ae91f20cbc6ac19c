"""Kernel backend selection: compiled extension if present, else pure Python.

Set MREMIX_PURE_KERNELS=1 to force the pure backend (used by the benchmark
and by tests that pin backend behavior). The active backend name is
exported as KERNEL_BACKEND.
"""

from __future__ import annotations

import os

from .pure import CoocTable as PurePythonCoocTable

try:
    from ._cooc import CoocTable as CompiledCoocTable
except ImportError:
    CompiledCoocTable = None  # type: ignore[assignment]

_FORCE_PURE = os.environ.get("MREMIX_PURE_KERNELS", "").lower() in ("1", "true", "yes")

if CompiledCoocTable is not None and not _FORCE_PURE:
    CoocTable = CompiledCoocTable
    KERNEL_BACKEND = "compiled"
else:
    CoocTable = PurePythonCoocTable
    KERNEL_BACKEND = "pure"

__all__ = [
    "CoocTable",
    "CompiledCoocTable",
    "PurePythonCoocTable",
    "KERNEL_BACKEND",
]
