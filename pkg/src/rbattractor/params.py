"""Physical parameters of the dimensionless Boussinesq system."""

from __future__ import annotations

import math
from dataclasses import dataclass


def lambda1(L: float) -> float:
    """Smallest positive eigenvalue of -Δ on the odd-in-x2 class, π²·min(1/4, L⁻²)."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L!r}")
    return math.pi**2 * min(0.25, 1.0 / L**2)


@dataclass(frozen=True)
class PhysParams:
    """Viscosity, diffusivity and horizontal period.

    Ra, Pr, the extended-domain volume and λ₁ are derived, so the set is
    consistent by construction.
    """

    nu: float
    kappa: float
    L: float

    def __post_init__(self):
        for name in ("nu", "kappa", "L"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")

    @property
    def Ra(self) -> float:
        return 1.0 / (self.nu * self.kappa)

    @property
    def Pr(self) -> float:
        return self.nu / self.kappa

    @property
    def omega_vol(self) -> float:
        return 2.0 * self.L

    @property
    def lambda1(self) -> float:
        return lambda1(self.L)

    def as_dict(self) -> dict:
        return {
            "nu": self.nu,
            "kappa": self.kappa,
            "L": self.L,
            "Ra": self.Ra,
            "Pr": self.Pr,
            "omega_vol": self.omega_vol,
            "lambda1": self.lambda1,
        }


def params_from_ra_pr(Ra: float, Pr: float, L: float) -> PhysParams:
    """Convert Rayleigh/Prandtl numbers to ν = √(Pr/Ra), κ = 1/√(Ra·Pr)."""
    for name, value in (("Ra", Ra), ("Pr", Pr), ("L", L)):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be finite and positive, got {value!r}")
    return PhysParams(nu=math.sqrt(Pr / Ra), kappa=1.0 / math.sqrt(Ra * Pr), L=L)
