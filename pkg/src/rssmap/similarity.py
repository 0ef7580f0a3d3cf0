"""Pearson correlation between maps and its maximum over integer pixel shifts.

Shift convention: a shift ``(du, dv)`` compares ``a[j, i]`` with
``b[j - dv, i - du]``, i.e. ``b`` is moved by ``+du`` pixels along ``u`` and
``+dv`` along ``v``. Only the overlap region enters the coefficient; means
and variances are recomputed on it for every candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

# candidates whose coefficients differ by less than this count as tied
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ShiftSearch:
    max_shift_u: int = 5
    max_shift_v: int = 5
    min_overlap_fraction: float = 0.5

    def validate(self, shape) -> "ShiftSearch":
        n_v, n_u = shape
        if self.max_shift_u < 0 or self.max_shift_v < 0:
            raise ValidationError("shift radius must be nonnegative")
        if self.max_shift_u > n_u - 1 or self.max_shift_v > n_v - 1:
            raise ValidationError(
                f"shift radius ({self.max_shift_u}, {self.max_shift_v}) exceeds grid "
                f"{n_u}x{n_v} minus one"
            )
        if not 0 < self.min_overlap_fraction <= 1:
            raise ValidationError("min_overlap_fraction must be in (0, 1]")
        return self

    def candidates(self):
        """All admissible shifts in tie-break order."""
        shifts = [
            (du, dv)
            for du in range(-self.max_shift_u, self.max_shift_u + 1)
            for dv in range(-self.max_shift_v, self.max_shift_v + 1)
        ]
        return sorted(shifts, key=lambda s: (abs(s[0]) + abs(s[1]), s[0], s[1]))


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    best_shift: tuple[int, int]
    overlap_cells: int


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x), dtype=float)


def _pearson_arrays(a: np.ndarray, b: np.ndarray) -> float:
    # exact test: the mean of a constant array need not equal its value
    if a.min() == a.max() or b.min() == b.max():
        raise NumericalError("constant map: correlation undefined")
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.sqrt(np.sum(ac * ac))
    nb = np.sqrt(np.sum(bc * bc))
    if na == 0 or nb == 0:
        raise NumericalError("constant map: correlation undefined")
    rho = float(np.sum(ac * bc) / (na * nb))
    return min(1.0, max(-1.0, rho))


def pearson(a, b) -> float:
    """Pearson correlation coefficient over all grid cells."""
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise ValidationError(f"map shapes differ: {av.shape} vs {bv.shape}")
    return _pearson_arrays(av.ravel(), bv.ravel())


def overlap(a: np.ndarray, b: np.ndarray, du: int, dv: int):
    """Aligned views of ``a`` and shifted ``b`` on their overlap region."""
    n_v, n_u = a.shape
    a_view = a[max(dv, 0):n_v + min(dv, 0), max(du, 0):n_u + min(du, 0)]
    b_view = b[max(-dv, 0):n_v + min(-dv, 0), max(-du, 0):n_u + min(-du, 0)]
    return a_view, b_view


def pearson_max_shift(a, b, search: ShiftSearch | None = None) -> CorrelationResult:
    """Maximum Pearson coefficient over integer shifts of ``b``.

    Ties (within ``TIE_TOL``) are broken by smallest ``|du|+|dv|``, then
    smallest ``du``, then smallest ``dv``. Shifts whose overlap is below the minimum fraction or
    has zero variance are skipped.
    """
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise ValidationError(f"map shapes differ: {av.shape} vs {bv.shape}")
    search = (search or ShiftSearch()).validate(av.shape)
    min_cells = search.min_overlap_fraction * av.size

    best = None
    any_overlap = False
    for du, dv in search.candidates():
        a_view, b_view = overlap(av, bv, du, dv)
        if a_view.size < min_cells - 1e-9:
            continue
        any_overlap = True
        try:
            rho = _pearson_arrays(a_view.ravel(), b_view.ravel())
        except NumericalError:
            continue
        if best is None or rho > best.rho + TIE_TOL:
            best = CorrelationResult(rho, (du, dv), a_view.size)
    if best is None:
        if not any_overlap:
            raise ValidationError("no shift satisfies the minimum overlap constraint")
        raise NumericalError("constant map: correlation undefined for every shift")
    return best
