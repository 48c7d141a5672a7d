"""Per-region material data and the plane elasticity matrix.

Internal units: E in MPa, conductivity in W/(mm*K), lengths in mm,
temperatures in Celsius (only differences enter the physics).  Material
tables quoted in W/(m*K) must be divided by 1000 before construction; the
config layer does this for its ``k_W_per_mK`` key.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AssemblyError


class Plane(Enum):
    STRESS = "stress"
    STRAIN = "strain"


@dataclass(frozen=True)
class MaterialProps:
    """Isotropic thermoelastic properties of one mesh region."""

    E: float                # Young's modulus, MPa
    nu: float               # Poisson ratio
    conductivity: float     # thermal conductivity, W/(mm*K)
    alpha: float            # coefficient of thermal expansion, 1/degC
    T0: float               # reference (stress-free) temperature, degC
    plane: Plane = Plane.STRESS

    def __post_init__(self):
        if not self.E > 0:
            raise AssemblyError(f"Young's modulus must be positive, got {self.E}")
        if not (0.0 <= self.nu < 0.5):
            raise AssemblyError(f"Poisson ratio must be in [0, 0.5), got {self.nu}")
        if not self.conductivity > 0:
            raise AssemblyError(f"conductivity must be positive, got {self.conductivity}")
        if self.alpha < 0:
            raise AssemblyError(f"thermal expansion must be non-negative, got {self.alpha}")


def elasticity_matrix(props: MaterialProps) -> np.ndarray:
    """3x3 elasticity matrix in Voigt order (xx, yy, xy), engineering shear."""
    e, nu = props.E, props.nu
    if props.plane == Plane.STRESS:
        f = e / (1.0 - nu * nu)
        return f * np.array([[1.0, nu, 0.0],
                             [nu, 1.0, 0.0],
                             [0.0, 0.0, 0.5 * (1.0 - nu)]])
    f = e / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return f * np.array([[1.0 - nu, nu, 0.0],
                         [nu, 1.0 - nu, 0.0],
                         [0.0, 0.0, 0.5 * (1.0 - 2.0 * nu)]])


def thermal_strain_voigt(props: MaterialProps, temperature: float) -> np.ndarray:
    """Voigt thermal strain alpha*(T - T0)*[1, 1, 0].

    Under plane strain the in-plane effective coefficient is (1+nu)*alpha,
    which accounts for the suppressed out-of-plane expansion.
    """
    coeff = props.alpha * (temperature - props.T0)
    if props.plane == Plane.STRAIN:
        coeff *= 1.0 + props.nu
    return np.array([coeff, coeff, 0.0])
