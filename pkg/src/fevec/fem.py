"""Four-node isoparametric quadrilateral kernel.

Element matrices for heat conduction and plane elasticity, integrated with
2x2 Gauss quadrature, plus consistent edge loads for prescribed flux and
traction.  Voigt order is (xx, yy, xy) with engineering shear strain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .materials import MaterialProps, elasticity_matrix, thermal_strain_voigt

_G = 1.0 / math.sqrt(3.0)
# 2x2 Gauss rule on [-1,1]^2: points +-1/sqrt(3), unit weights.
GAUSS_2X2: tuple[tuple[float, float, float], ...] = (
    (-_G, -_G, 1.0), (_G, -_G, 1.0), (_G, _G, 1.0), (-_G, _G, 1.0),
)

# Parent-element corner signs, CCW from (-1,-1).
_XI_I = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA_I = np.array([-1.0, -1.0, 1.0, 1.0])


@dataclass(frozen=True)
class ShapeEval:
    """Shape functions and derived matrices at one local point."""

    N: np.ndarray        # (4,)
    dN_dxi: np.ndarray   # (2, 4) local gradients
    J: np.ndarray        # (2, 2)
    detJ: float
    B_T: np.ndarray      # (2, 4) global gradients (thermal)
    B_u: np.ndarray      # (3, 8) strain-displacement


def q4_shape_eval(coords: np.ndarray, xi: float, eta: float,
                  elem_id: int | None = None) -> ShapeEval:
    """Evaluate bilinear shape data at local point (xi, eta).

    ``coords`` are the 4 CCW corner coordinates (4, 2).  Raises MeshError
    when the Jacobian determinant is non-positive (distorted element).
    """
    n = 0.25 * (1.0 + _XI_I * xi) * (1.0 + _ETA_I * eta)
    dn = np.vstack((0.25 * _XI_I * (1.0 + _ETA_I * eta),
                    0.25 * _ETA_I * (1.0 + _XI_I * xi)))
    jac = dn @ coords
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0.0:
        tag = f"element {elem_id}" if elem_id is not None else "quad"
        raise MeshError(f"{tag}: non-positive Jacobian {det:g} at ({xi:g},{eta:g})")
    inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    b_t = inv @ dn
    b_u = np.zeros((3, 8))
    b_u[0, 0::2] = b_t[0]
    b_u[1, 1::2] = b_t[1]
    b_u[2, 0::2] = b_t[1]
    b_u[2, 1::2] = b_t[0]
    return ShapeEval(N=n, dN_dxi=dn, J=jac, detJ=float(det), B_T=b_t, B_u=b_u)


def thermal_stiffness_q4(coords: np.ndarray, props: MaterialProps,
                         elem_id: int | None = None) -> np.ndarray:
    k = np.zeros((4, 4))
    lam = props.conductivity
    for xi, eta, w in GAUSS_2X2:
        ev = q4_shape_eval(coords, xi, eta, elem_id)
        k += (w * lam * ev.detJ) * (ev.B_T.T @ ev.B_T)
    return 0.5 * (k + k.T)


def mechanical_stiffness_q4(coords: np.ndarray, props: MaterialProps,
                            elem_id: int | None = None) -> np.ndarray:
    k = np.zeros((8, 8))
    d = elasticity_matrix(props)
    for xi, eta, w in GAUSS_2X2:
        ev = q4_shape_eval(coords, xi, eta, elem_id)
        k += (w * ev.detJ) * (ev.B_u.T @ d @ ev.B_u)
    return 0.5 * (k + k.T)


def thermal_load_q4(coords: np.ndarray, props: MaterialProps,
                    nodal_temperature: np.ndarray,
                    elem_id: int | None = None) -> np.ndarray:
    """Equivalent nodal forces of the thermal strain, T interpolated bilinearly."""
    f = np.zeros(8)
    d = elasticity_matrix(props)
    for xi, eta, w in GAUSS_2X2:
        ev = q4_shape_eval(coords, xi, eta, elem_id)
        t_gp = float(ev.N @ nodal_temperature)
        eps_th = thermal_strain_voigt(props, t_gp)
        f += (w * ev.detJ) * (ev.B_u.T @ (d @ eps_th))
    return f


def flux_load_edge(p0: np.ndarray, p1: np.ndarray, q_bar: float) -> np.ndarray:
    """Nodal loads of a constant prescribed outward flux on one boundary edge.

    Exact for linear edge traces: each node receives -q_bar * length / 2.
    """
    length = float(np.hypot(p1[0] - p0[0], p1[1] - p0[1]))
    if length <= 0.0:
        raise MeshError("flux edge has zero length")
    v = -q_bar * length * 0.5
    return np.array([v, v])


def traction_load_edge(p0: np.ndarray, p1: np.ndarray,
                       traction: tuple[float, float]) -> np.ndarray:
    """Nodal forces of a constant traction on one edge: (tx,ty)*L/2 per node."""
    length = float(np.hypot(p1[0] - p0[0], p1[1] - p0[1]))
    if length <= 0.0:
        raise MeshError("traction edge has zero length")
    tx, ty = traction
    return 0.5 * length * np.array([tx, ty, tx, ty])
