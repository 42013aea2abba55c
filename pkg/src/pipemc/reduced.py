"""
One-dimensional advection-dispersion channel.

The pipe is unrolled into a straight line of length L carrying a plug flow
of speed u with axial dispersion D_ax.  A mass m released at x = 0, t = 0
produces the free-space Gaussian

    c(L, t) = m / (A sqrt(4 pi D_ax t)) * exp(-(L - u t)^2 / (4 D_ax t))

and a constant release over a window is the integral of that kernel, which
has the closed form ``_cumulative_kernel`` below.

With ``inlet="flux"`` the release instead enters a semi-infinite channel
through an advective inlet (total flux u c - D dc/dx prescribed at x = 0),
which is the boundary condition the finite-volume transport solver applies
at a duct inlet.  The model serves both as
an analytic reference for the 3-D solver and as a fast channel for long
bit-error-rate runs.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erfc, erfcx

from .errors import ValidationError
from .flow import reynolds_number

__all__ = ["Channel1D", "impulse_response", "pulse_response", "taylor_dispersion",
           "sequence_response", "channel_from_config"]

LAMINAR_LIMIT_RE = 4000.0


@dataclass(frozen=True)
class Channel1D:
    L: float
    u: float
    D_ax: float
    A: float
    inlet: str = "free"

    def __post_init__(self):
        for name in ("L", "u", "D_ax", "A"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"Channel1D.{name} must be positive, got {value!r}")
        if self.inlet not in ("free", "flux"):
            raise ValidationError(f"Channel1D.inlet must be 'free' or 'flux', got {self.inlet!r}")

    @property
    def peclet(self):
        return self.u * self.L / self.D_ax

    def support(self):
        """Time after which a released parcel has left the probe (kernel < 1e-300)."""
        t_adv = self.L / self.u
        spread = math.sqrt(2.0 * self.D_ax * t_adv) / self.u
        return 2.0 * t_adv + 80.0 * self.D_ax / self.u ** 2 + 40.0 * spread


def impulse_response(ch, m, t):
    """Concentration (kg/m^3) at x = L after an instantaneous release of m kg."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    L, u, D = ch.L, ch.u, ch.D_ax
    g = np.exp(-(L - u * tp) ** 2 / (4 * D * tp))
    if ch.inlet == "free":
        out[pos] = (m / ch.A) / np.sqrt(4 * np.pi * D * tp) * g
    else:
        out[pos] = (m / ch.A) * (1.0 / np.sqrt(np.pi * D * tp)
                                 - u / (2 * D) * erfcx((L + u * tp) / (2 * np.sqrt(D * tp)))) * g
    return out if out.ndim else float(out)


def _cumulative_kernel(ch, tau):
    """Integral of the unit-mass kernel over (0, tau]; tends to 1/u."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0
    t = tau[pos]
    D = ch.D_ax
    s = 2.0 * np.sqrt(D * t)
    L, u = ch.L, ch.u
    g = np.exp(-(L - u * t) ** 2 / (4 * D * t))
    # exp(uL/D) * erfc((L+ut)/s) rewritten with erfcx to avoid overflow
    if ch.inlet == "free":
        out[pos] = (erfc((L - u * t) / s) - erfcx((L + u * t) / s) * g) / (2 * u)
    else:
        out[pos] = (0.5 * erfc((L - u * t) / s) + np.sqrt(u * u * t / (np.pi * D)) * g
                    - 0.5 * (1 + u * L / D + u * u * t / D) * erfcx((L + u * t) / s) * g) / u
    return out


def pulse_response(ch, mass_rate, T_e, t):
    """Concentration at the probe for a constant release of ``mass_rate`` kg/s over (0, T_e]."""
    t = np.asarray(t, dtype=float)
    return (mass_rate / ch.A) * (_cumulative_kernel(ch, t) - _cumulative_kernel(ch, t - T_e))


def taylor_dispersion(props, V1, D1):
    """Axial dispersion coefficient of turbulent pipe flow.

    Uses D_ax = 10.1 * R * u_star with the Blasius friction factor; only
    valid for Re > 4000.
    """
    Re = reynolds_number(props, V1, D1)
    if Re <= LAMINAR_LIMIT_RE:
        raise ValidationError(
            f"Re = {Re:.0f} at V1 = {V1} m/s is below {LAMINAR_LIMIT_RE:.0f}; "
            "the turbulent dispersion closure does not apply")
    f = 0.316 * Re ** -0.25
    u_star = V1 * math.sqrt(f / 8.0)
    return 10.1 * (D1 / 2.0) * u_star


def sequence_response(ch, schedule, props, times, A_branch):
    """Superpose the response of every emission window of ``schedule``.

    Each window releases rho_voc * A_branch * V2 kg/s for T_e seconds.
    Returns concentration in kg/m^3 sampled at ``times``.
    """
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(times)
    rate = props.rho_voc * A_branch * schedule.V2
    horizon = schedule.T_e + ch.support()
    for start, _ in schedule.windows:
        lo = np.searchsorted(times, start, side="right")
        hi = np.searchsorted(times, start + horizon, side="right")
        if lo < hi:
            out[lo:hi] += pulse_response(ch, rate, schedule.T_e, times[lo:hi] - start)
    return out


def channel_from_config(spec, props, V1, cross_section="circular", L=None):
    """Straight-equivalent channel for the given pipe and carrier speed."""
    from .link import duct_area
    return Channel1D(L=spec.L1 + spec.L2 if L is None else L, u=V1,
                     D_ax=taylor_dispersion(props, V1, spec.D1),
                     A=duct_area(spec.D1, cross_section))
