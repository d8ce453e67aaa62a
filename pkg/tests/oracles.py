"""Independent numerical oracles used by the test suite.

Everything here is deliberately written against different math than the
package: elliptic integrals by direct quadrature instead of scipy.special,
inductance by Neumann double integrals instead of a current-sheet closed
form, CRC-32 bit by bit instead of zlib. Tests compare the package against
these routes; the two sides share no formula code.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

MU0 = 4.0e-7 * math.pi
EPS0 = 8.8541878128e-12


# --- elliptic integral by quadrature -----------------------------------------

def ellipk_quad(k: float) -> float:
    """Complete elliptic integral K(k) (modulus k) by adaptive quadrature."""
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must be in [0, 1), got {k}")

    def integrand(theta: float) -> float:
        s = math.sin(theta)
        return 1.0 / math.sqrt(1.0 - (k * s) * (k * s))

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-13)
    return val


def kk_ratio_quad(k: float) -> float:
    """K(k)/K(k') with both integrals from quadrature."""
    kp = math.sqrt(max(0.0, 1.0 - k * k))
    return ellipk_quad(k) / ellipk_quad(kp)


# --- coplanar-strip / parallel-plate capacitance bounds ----------------------

def cps_pair_capacitance(width_m: float, gap_m: float, length_m: float,
                         eps_top: float, eps_bot: float) -> float:
    """Capacitance of one isolated coplanar strip pair (zero-thickness).

    Conformal-map result for two strips of equal width separated by a gap,
    each half-space filled with its own dielectric. Lower bound for a
    multi-gap interdigitated bank in the same dielectric.
    """
    k = gap_m / (gap_m + 2.0 * width_m)
    kp = math.sqrt(1.0 - k * k)
    geom = ellipk_quad(kp) / ellipk_quad(k)
    return EPS0 * 0.5 * (eps_top + eps_bot) * length_m * geom


def parallel_plate_upper_bound(n_fingers: int, width_m: float, gap_m: float,
                               length_m: float, eps_top: float,
                               eps_bot: float) -> float:
    """Every gap replaced by a uniform-field plate capacitor of plate area
    width x length: strictly overestimates the fringing-field value when
    width/gap >= 1."""
    eps = max(eps_top, eps_bot)
    return EPS0 * eps * (n_fingers - 1) * width_m * length_m / gap_m


# --- Neumann double-integral loop inductance ---------------------------------

def _filament_pair_integral(length_m: float, d: float) -> float:
    """Inner Neumann integral for two parallel filaments of equal length
    at perpendicular distance d: closed form of
    int_0^l int_0^l dx1 dx2 / sqrt((x1-x2)^2 + d^2)."""
    l = length_m
    if d == 0.0:
        raise ValueError("coincident filaments diverge")
    return 2.0 * (l * math.asinh(l / d) - math.hypot(l, d) + d)


def strip_self_inductance(length_m: float, width_m: float) -> float:
    """Self-inductance of a flat zero-thickness strip, uniform current sheet,
    by quadrature over the transverse coordinate."""
    w = width_m

    def integrand(u: float) -> float:
        return (w - u) * _filament_pair_integral(length_m, u)

    # integrable log singularity at u=0; let quad handle it
    val, _ = integrate.quad(integrand, 0.0, w, epsabs=1e-18, epsrel=1e-11,
                            limit=200)
    return (MU0 / (4.0 * math.pi)) * (2.0 / (w * w)) * val


def strip_mutual_inductance(length_m: float, width_m: float,
                            center_distance_m: float) -> float:
    """Mutual inductance of two coplanar parallel strips (equal width and
    length) whose centerlines are center_distance apart."""
    w = width_m
    d0 = center_distance_m

    def integrand(v: float) -> float:
        return (w - abs(v - d0)) * _filament_pair_integral(length_m, abs(v))

    val, _ = integrate.quad(integrand, d0 - w, d0 + w, epsabs=1e-18,
                            epsrel=1e-11, limit=200)
    return (MU0 / (4.0 * math.pi)) * (1.0 / (w * w)) * val


def square_loop_inductance_neumann(outer_side_m: float,
                                   width_m: float) -> float:
    """Single-turn square loop of flat trace: 4 self terms minus 4 opposite-
    side mutual terms (perpendicular sides couple to exactly zero). Uses
    centerline side length; corner regions are approximated."""
    side_c = outer_side_m - width_m
    l_self = strip_self_inductance(side_c, width_m)
    m_opp = strip_mutual_inductance(side_c, width_m, side_c)
    return 4.0 * (l_self - m_opp)


# --- reference CRC-32 ---------------------------------------------------------

def crc32_reference(data: bytes) -> int:
    """Bit-by-bit reflected CRC-32, polynomial 0xEDB88320, init/final
    0xFFFFFFFF. Check value over b"123456789" is 0xCBF43926."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            if crc & 1:
                crc = (crc >> 1) ^ 0xEDB88320
            else:
                crc >>= 1
    return crc ^ 0xFFFFFFFF


# --- ordinary-least-squares oracle -------------------------------------------

def ols_oracle(x, y):
    """Slope/intercept/R^2/residual-sd via numpy polyfit, as an independent
    route to the package's normal-equation fit. residual sd uses the n-2
    denominator."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = intercept + slope * x
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    n = len(x)
    resid_sd = math.sqrt(ss_res / (n - 2)) if n > 2 else 0.0
    return slope, intercept, r2, resid_sd
