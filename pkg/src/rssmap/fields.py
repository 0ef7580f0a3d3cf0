"""Closed-form field of a z-oriented Hertzian dipole.

Time convention is ``exp(+j*omega*t)`` with propagation factor
``exp(-j*k*r)``. Near-field terms are kept.
"""

import numpy as np

from .errors import ValidationError
from .scene import SPEED_OF_LIGHT

ETA0 = 376.730  # free-space wave impedance, ohm


def wavenumber(f):
    """Free-space wavenumber ``2*pi*f/c`` in rad/m."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(~np.isfinite(f_arr)) or np.any(f_arr <= 0):
        raise ValidationError(f"frequency must be positive, got {f}")
    k = 2 * np.pi * f_arr / SPEED_OF_LIGHT
    return float(k) if k.ndim == 0 else k


def dipole_ez(src, obs, k, p0=1.0):
    """Vertical electric field ``E_z`` (V/m) radiated by a z-dipole.

    Parameters
    ----------
    src : array_like, shape (3,)
        Dipole position.
    obs : array_like, shape (..., 3)
        Observation point(s).
    k : float
        Wavenumber in rad/m.
    p0 : complex
        Dipole moment ``I0 * l`` in A*m.

    Returns
    -------
    complex or ndarray of complex
        ``E_r*cos(theta) - E_theta*sin(theta)`` with the full spherical
        components of the Hertzian dipole.
    """
    if not k > 0:
        raise ValidationError(f"wavenumber must be positive, got {k}")
    d = np.asarray(obs, dtype=float) - np.asarray(src, dtype=float)
    r2 = np.einsum("...i,...i->...", d, d)
    if np.any(r2 == 0):
        raise ValidationError("zero separation between source and observer")
    r = np.sqrt(r2)
    cos2 = d[..., 2] ** 2 / r2
    sin2 = (d[..., 0] ** 2 + d[..., 1] ** 2) / r2

    inv_jkr = 1.0 / (1j * k * r)
    inv_kr2 = 1.0 / (k * r) ** 2
    phase = np.exp(-1j * k * r)
    # E_r*cos = eta*p0*cos^2/(2*pi*r^2) * (1 + 1/(jkr)) * phase
    # E_t*sin = j*eta*k*p0*sin^2/(4*pi*r) * (1 + 1/(jkr) - 1/(kr)^2) * phase
    radial = ETA0 * p0 * cos2 / (2 * np.pi * r2) * (1 + inv_jkr)
    polar = 1j * ETA0 * k * p0 * sin2 / (4 * np.pi * r) * (1 + inv_jkr - inv_kr2)
    ez = (radial - polar) * phase
    return complex(ez) if np.ndim(ez) == 0 else ez
