"""Single-user precoders and power normalization.

Three schemes: the plain matched filter that ignores coupling, the
coupling-aware matched filter ``Z^{-1} h`` that maximizes the SNR
quotient ``|i^H h|^2 / (i^H Z i)``, and its truncated-spectrum variant
for when Z is too ill-conditioned to invert outright.  No phase
convention is imposed; only ratios of quadratic forms are meaningful.
"""

from __future__ import annotations

import numpy as np

from .coupling import (
    ImpedanceMatrix,
    quadratic_form,
    rank_truncated_inverse,
    solve,
    truncated_inverse,
)
from .errors import DegenerateInputError, InvalidArgumentError, NonRadiatingCurrentError
from .specfun import MP_LOCK, Precision


def _is_mp_vector(v) -> bool:
    return hasattr(v, "rows") and hasattr(v, "cols")


def nca_mf(h):
    """Coupling-agnostic matched filter: the channel itself.

    Raises
    ------
    DegenerateInputError
        For an identically zero channel.
    """
    if _is_mp_vector(h):
        if all(h[r] == 0 for r in range(h.rows)):
            raise DegenerateInputError("matched filter undefined for a zero channel")
        return h.copy()
    hv = np.asarray(h)
    if not np.any(hv):
        raise DegenerateInputError("matched filter undefined for a zero channel")
    return hv.copy()


def ca_mf(Z: ImpedanceMatrix, h, precision: Precision | None = None):
    """Coupling-aware matched filter ``Z^{-1} h`` via a linear solve.

    Maximizes ``|i^H h|^2 / (i^H Z i)`` over all currents.  Uses the
    refined solve, never an explicit inverse; an ill-conditioned-solve
    error propagates when the residual target cannot be met.
    """
    return solve(Z, h, precision)


def ca_pmf(Z: ImpedanceMatrix, h, s_min_threshold: float):
    """Truncated-spectrum matched filter.

    Applies the pseudo-inverse that keeps eigenvalues strictly above
    ``s_min_threshold``; an empty-spectrum error propagates when the
    threshold removes everything.
    """
    pinv = truncated_inverse(Z, s_min_threshold)
    if Z.precision.is_extended:
        with MP_LOCK:
            return pinv * h
    return pinv @ np.asarray(h)


def ca_pmf_rank(Z: ImpedanceMatrix, h, modes: int):
    """Count-based companion to :func:`ca_pmf`: keep the top ``modes``."""
    pinv = rank_truncated_inverse(Z, modes)
    if Z.precision.is_extended:
        with MP_LOCK:
            return pinv * h
    return pinv @ np.asarray(h)


def power_normalize(i, Z: ImpedanceMatrix):
    """Scale currents so the radiated power ``i^H Z i`` equals one.

    Raises
    ------
    NonRadiatingCurrentError
        If ``i^H Z i <= 0`` (current in the numerical null space).
    """
    power = quadratic_form(Z, i)
    if not power > 0:
        raise NonRadiatingCurrentError(
            f"cannot power-normalize: i^H Z i = {float(power):.3e} is not positive")
    if Z.precision.is_extended:
        with MP_LOCK:
            ctx = Z.context
            scale = 1 / ctx.sqrt(power)
            out = i.copy()
            for r in range(out.rows):
                out[r] = out[r] * scale
            return out
    iv = np.asarray(i)
    if iv.shape != (Z.n,):
        raise InvalidArgumentError(f"current vector must have shape ({Z.n},), got {iv.shape}")
    return iv / np.sqrt(power)
