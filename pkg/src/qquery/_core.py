"""Kernel dispatch: the compiled extension when importable, numpy otherwise."""

from __future__ import annotations

try:
    from ._kernels import (  # type: ignore[import-not-found]
        apply_sparse_gate,
        decision_depth,
        fwht_inplace,
        moebius_int_inplace,
        max_block_mass,
        moebius_xor_inplace,
    )

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - exercised when the extension is absent
    from ._pykernels import (
        apply_sparse_gate,
        decision_depth,
        fwht_inplace,
        moebius_int_inplace,
        max_block_mass,
        moebius_xor_inplace,
    )

    BACKEND = "python"

__all__ = [
    "BACKEND",
    "apply_sparse_gate",
    "decision_depth",
    "fwht_inplace",
    "moebius_int_inplace",
    "max_block_mass",
    "moebius_xor_inplace",
]
