"""Wave-induced CSI errors.

Sea-surface motion tilts the array so the true departure angle is
``theta_bar + dtheta`` with ``|dtheta| <= eps``.  To first order the channel
moves along a fixed sensitivity vector ``n`` (``dh = n * dtheta``), which turns
the angle bound into a channel-space ball of radius ``rho = ||n|| eps``.  The
optimizer guarantees the QoS over that ball.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import SteeringVector


def steering_derivative(a: SteeringVector, theta_bar=None):
    """Per-radian derivative of the array response at ``theta_bar``.

    Element ``k`` is ``j (2 pi b k / lambda) sin(theta_bar) a_k``; element 0
    is exactly zero.
    """
    theta = a.departure_angle_rad if theta_bar is None else theta_bar
    k = np.arange(a.size)
    return 1j * 2.0 * np.pi * a.spacing_over_wavelength * k * np.sin(theta) * a.elements


def channel_sensitivity(nominal_channel, a: SteeringVector, theta_bar=None, link="terrestrial",
                        rician_scale=None):
    """Sensitivity vector ``n`` with ``dh ~= n * dtheta``.

    Terrestrial links scale the steering derivative by the (real) two-ray
    amplitude, recovered from the first channel entry since ``a_0 = 1``.
    Satellite links only move their LoS part, so ``rician_scale`` must be
    ``g_m sqrt(P_m K/(1+K))``.
    """
    d = steering_derivative(a, theta_bar)
    if link == "terrestrial":
        return np.asarray(nominal_channel)[0] / a.elements[0] * d
    if link == "satellite":
        if rician_scale is None:
            raise ValueError("satellite links need rician_scale")
        return rician_scale * d
    raise ValueError(f"unknown link type {link!r}")


def channel_error_bound(nominal_channel, a: SteeringVector, theta_bar, eps, link="terrestrial",
                        rician_scale=None):
    """Return ``(xi, rho)``: sensitivity norm and channel-space error radius."""
    if eps < 0:
        raise ValueError("angle bound must be non-negative")
    xi = float(np.linalg.norm(channel_sensitivity(nominal_channel, a, theta_bar, link, rician_scale)))
    return xi, xi * eps


def sample_angle_error(eps, mode="uniform", rng=None, size=None, start=0):
    """Draw angle errors within ``[-eps, eps]``.

    ``uniform`` samples the interval.  ``boundary`` is deterministic and
    alternates ``+eps, -eps, ...`` beginning at draw index ``start``; it is
    meant for worst-case stress runs.
    """
    if eps < 0:
        raise ValueError("angle bound must be non-negative")
    if mode == "uniform":
        if rng is None:
            raise ValueError("uniform mode needs an rng")
        return rng.uniform(-eps, eps, size=size)
    if mode == "boundary":
        n = 1 if size is None else int(np.prod(size))
        signs = np.where((start + np.arange(n)) % 2 == 0, 1.0, -1.0)
        return float(eps * signs[0]) if size is None else (eps * signs).reshape(size)
    raise ValueError(f"unknown sampling mode {mode!r}")


def perturbed_channel(nominal, sensitivity, dtheta, model="first_order", rebuild=None):
    """Actual channel under angle error ``dtheta``.

    ``first_order`` returns ``nominal + sensitivity * dtheta``.  ``exact``
    calls ``rebuild(dtheta)``, which must regenerate the channel at the
    perturbed angle with the nominal NLoS realization.
    """
    nominal = np.asarray(nominal)
    sensitivity = np.asarray(sensitivity)
    if nominal.shape != sensitivity.shape:
        raise ValueError("nominal and sensitivity shapes differ")
    if model == "first_order":
        return nominal + sensitivity * dtheta
    if model == "exact":
        if rebuild is None:
            raise ValueError("exact model needs a rebuild callable")
        out = np.asarray(rebuild(dtheta))
        if out.shape != nominal.shape:
            raise ValueError("rebuilt channel has the wrong shape")
        return out
    raise ValueError(f"unknown perturbation model {model!r}")


@dataclass(frozen=True)
class UncertaintyModel:
    """Angle bounds and the channel-space radii derived from them.

    ``sensitivity_*`` hold one sensitivity vector per user (rows); the
    norms ``xi`` and radii ``rho = xi * eps`` are per user too because the
    two-ray amplitude and satellite gain differ between users.
    """

    angle_bound_tbs: float = 0.0
    angle_bound_sat: float = 0.0
    tidal_factor_tbs: float = 0.0
    tidal_factor_sat: float = 0.0
    sensitivity_near: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), complex))
    sensitivity_off: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), complex))
    channel_radius_tbs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    channel_radius_sat: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("channel_radius_tbs", "channel_radius_sat"):
            val = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if np.any(val < 0):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, val)
        if self.angle_bound_tbs < 0 or self.angle_bound_sat < 0:
            raise ValueError("angle bounds must be non-negative")

    @property
    def sensitivity_norm_tbs(self):
        return np.linalg.norm(self.sensitivity_near, axis=1) if self.sensitivity_near.size else np.zeros(0)

    @property
    def sensitivity_norm_sat(self):
        return np.linalg.norm(self.sensitivity_off, axis=1) if self.sensitivity_off.size else np.zeros(0)

    @classmethod
    def from_sensitivities(cls, sensitivity_near, sensitivity_off, eps_tbs, eps_sat,
                           theta_tbs=None, theta_sat=None):
        """Build from per-user sensitivity vectors and angle bounds."""
        n1 = np.asarray(sensitivity_near, dtype=complex)
        n2 = np.asarray(sensitivity_off, dtype=complex)
        xi1 = np.linalg.norm(n1, axis=1) if n1.size else np.zeros(len(n1))
        xi2 = np.linalg.norm(n2, axis=1) if n2.size else np.zeros(len(n2))
        return cls(
            angle_bound_tbs=float(eps_tbs),
            angle_bound_sat=float(eps_sat),
            tidal_factor_tbs=float(eps_tbs / theta_tbs) if theta_tbs else 0.0,
            tidal_factor_sat=float(eps_sat / theta_sat) if theta_sat else 0.0,
            sensitivity_near=n1,
            sensitivity_off=n2,
            channel_radius_tbs=xi1 * eps_tbs,
            channel_radius_sat=xi2 * eps_sat,
        )

    @classmethod
    def from_radii(cls, radius_near=(), radius_off=()):
        """Channel-space radii only, for synthetic instances without angles."""
        return cls(channel_radius_tbs=np.asarray(radius_near, dtype=float),
                   channel_radius_sat=np.asarray(radius_off, dtype=float))

    def radii(self, n_near, n_off):
        """Per-user radii broadcast to the user counts (zero when unset)."""
        r1 = self.channel_radius_tbs if self.channel_radius_tbs.size else np.zeros(1)
        r2 = self.channel_radius_sat if self.channel_radius_sat.size else np.zeros(1)
        return (np.broadcast_to(r1, (n_near,)).copy() if n_near else np.zeros(0),
                np.broadcast_to(r2, (n_off,)).copy() if n_off else np.zeros(0))

    def scaled(self, factor_tbs, factor_sat):
        """Same directions with the angle bounds multiplied by the given factors."""
        return UncertaintyModel(
            angle_bound_tbs=self.angle_bound_tbs * factor_tbs,
            angle_bound_sat=self.angle_bound_sat * factor_sat,
            tidal_factor_tbs=self.tidal_factor_tbs * factor_tbs,
            tidal_factor_sat=self.tidal_factor_sat * factor_sat,
            sensitivity_near=self.sensitivity_near,
            sensitivity_off=self.sensitivity_off,
            channel_radius_tbs=self.channel_radius_tbs * factor_tbs,
            channel_radius_sat=self.channel_radius_sat * factor_sat,
        )
