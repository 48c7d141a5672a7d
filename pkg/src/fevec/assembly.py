"""Global DOF numbering, coupled FE/VE assembly and Dirichlet handling.

Interface nodes (shared by FE and VE elements) receive additive stiffness
contributions from both sides during standard triplet assembly, which
realizes the coupled block system directly: FE-interior dofs never share a
stored entry with VE-interior dofs because no single element contains both.

Assembly is deterministic: elements are evaluated in id order and triplets
are sorted before compression, so repeated runs give bit-identical matrices.
The ``FEVEC_THREADS`` environment variable (0 or unset = auto/serial) caps
an optional thread pool used for element evaluation; results are merged in
element order, which keeps the accumulation order fixed.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fem, vem
from .errors import AssemblyError
from .materials import MaterialProps
from .mesh import ElementKind, Mesh


@dataclass
class BoundaryConditionSet:
    """Node-resolved boundary data for one problem.

    ``dirichlet_u`` maps node -> (ux, uy) where either component may be None
    (free).  Edge loads keep their end nodes so the integration can use the
    exact edge geometry.
    """

    dirichlet_T: dict[int, float] = field(default_factory=dict)
    flux_edges: list[tuple[int, int, float]] = field(default_factory=list)
    dirichlet_u: dict[int, tuple[float | None, float | None]] = field(default_factory=dict)
    traction_edges: list[tuple[int, int, tuple[float, float]]] = field(default_factory=list)

    def set_temperature(self, node: int, value: float) -> None:
        if node in self.dirichlet_T and self.dirichlet_T[node] != value:
            raise AssemblyError(
                f"conflicting temperature prescriptions at node {node}: "
                f"{self.dirichlet_T[node]} vs {value}")
        self.dirichlet_T[node] = value

    def set_displacement(self, node: int, ux: float | None, uy: float | None) -> None:
        old = self.dirichlet_u.get(node)
        if old is not None:
            merged = []
            for k, (a, b) in enumerate(zip(old, (ux, uy))):
                if a is not None and b is not None and a != b:
                    raise AssemblyError(
                        f"conflicting displacement prescriptions at node {node} "
                        f"component {k}: {a} vs {b}")
                merged.append(a if a is not None else b)
            self.dirichlet_u[node] = (merged[0], merged[1])
        else:
            self.dirichlet_u[node] = (ux, uy)

    @property
    def has_thermal(self) -> bool:
        return bool(self.dirichlet_T) or bool(self.flux_edges)


DOF_FE_INTERIOR = "F"
DOF_INTERFACE = "I"
DOF_VE_INTERIOR = "V"


@dataclass
class DofMap:
    """Node-to-global-dof numbering with F/I/V classification per dof."""

    field_kind: str              # "thermal" | "mechanical"
    n_nodes: int
    dofs_per_node: int
    classes: np.ndarray          # (ndof,) of 'F'/'I'/'V'

    @property
    def ndof(self) -> int:
        return self.n_nodes * self.dofs_per_node

    def node_dofs(self, node: int) -> list[int]:
        base = node * self.dofs_per_node
        return [base + k for k in range(self.dofs_per_node)]

    def element_dofs(self, vertices: tuple[int, ...]) -> np.ndarray:
        if self.dofs_per_node == 1:
            return np.asarray(vertices, dtype=np.int64)
        out = np.empty(2 * len(vertices), dtype=np.int64)
        for k, v in enumerate(vertices):
            out[2 * k] = 2 * v
            out[2 * k + 1] = 2 * v + 1
        return out

    def dofs_in_class(self, cls: str) -> np.ndarray:
        return np.where(self.classes == cls)[0]


def build_dof_map(mesh: Mesh, field_kind: str) -> DofMap:
    if field_kind not in ("thermal", "mechanical"):
        raise AssemblyError(f"unknown field kind '{field_kind}'")
    per = 1 if field_kind == "thermal" else 2

    touches_fe = np.zeros(mesh.n_nodes, dtype=bool)
    touches_any = np.zeros(mesh.n_nodes, dtype=bool)
    for e in mesh.elements:
        for v in e.vertices:
            touches_any[v] = True
            if e.kind == ElementKind.FE_QUAD:
                touches_fe[v] = True
    orphans = np.where(~touches_any)[0]
    if orphans.size:
        raise AssemblyError(f"nodes without any element: {orphans.tolist()[:10]}")

    node_class = np.full(mesh.n_nodes, DOF_VE_INTERIOR, dtype="U1")
    node_class[touches_fe] = DOF_FE_INTERIOR
    for n in mesh.interface_nodes:
        node_class[n] = DOF_INTERFACE
    classes = np.repeat(node_class, per)
    return DofMap(field_kind=field_kind, n_nodes=mesh.n_nodes,
                  dofs_per_node=per, classes=classes)


@dataclass
class SparseSystem:
    """Assembled symmetric system before constraint elimination."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    dirichlet: dict[int, float]   # dof -> prescribed value

    @classmethod
    def from_dense(cls, k: np.ndarray, f: np.ndarray,
                   dirichlet: dict[int, float] | None = None) -> "SparseSystem":
        n = k.shape[0]
        dm = DofMap("thermal", n, 1, np.full(n, DOF_FE_INTERIOR, dtype="U1"))
        return cls(sp.csr_matrix(k), np.asarray(f, dtype=float), dm, dirichlet or {})


@dataclass
class ReducedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray              # free dof indices into the full vector
    prescribed: np.ndarray        # full-length vector holding prescribed values

    def recover(self, x_free: np.ndarray) -> np.ndarray:
        full = self.prescribed.copy()
        full[self.free] = x_free
        return full


def _worker_count() -> int:
    raw = os.environ.get("FEVEC_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        return 1
    return n


def _evaluate_elements(jobs, worker):
    threads = _worker_count()
    if threads <= 1:
        return [worker(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


def _compress(ndof: int, rows: list[np.ndarray], cols: list[np.ndarray],
              vals: list[np.ndarray]) -> sp.csr_matrix:
    if not rows:
        return sp.csr_matrix((ndof, ndof))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    order = np.lexsort((c, r))   # stable: fixed summation order run-to-run
    mat = sp.coo_matrix((v[order], (r[order], c[order])), shape=(ndof, ndof))
    return mat.tocsr()


def _material_for(region: int, materials: dict[int, MaterialProps]) -> MaterialProps:
    try:
        return materials[region]
    except KeyError:
        raise AssemblyError(f"no material defined for region {region}") from None


def _check_node(node: int, n_nodes: int, what: str) -> None:
    if node < 0 or node >= n_nodes:
        raise AssemblyError(f"{what} references node {node} outside 0..{n_nodes - 1}")


def assemble_thermal(mesh: Mesh, materials: dict[int, MaterialProps],
                     bcs: BoundaryConditionSet,
                     tau: float = vem.DEFAULT_STABILIZATION) -> SparseSystem:
    """Coupled thermal system: FE quads and VE polygons into one matrix."""
    dof_map = build_dof_map(mesh, "thermal")
    rows, cols, vals = [], [], []
    rhs = np.zeros(dof_map.ndof)

    def element_matrix(elem):
        coords = mesh.element_coords(elem)
        props = _material_for(elem.region, materials)
        if elem.kind == ElementKind.FE_QUAD:
            return fem.thermal_stiffness_q4(coords, props, elem.id)
        return vem.thermal_element_matrices(coords, props, tau=tau, elem_id=elem.id)

    matrices = _evaluate_elements(mesh.elements, element_matrix)
    for elem, ke in zip(mesh.elements, matrices):
        dofs = dof_map.element_dofs(elem.vertices)
        n = dofs.size
        rows.append(np.repeat(dofs, n))
        cols.append(np.tile(dofs, n))
        vals.append(ke.ravel())

    for (a, b, q_bar) in bcs.flux_edges:
        _check_node(a, mesh.n_nodes, "flux edge")
        _check_node(b, mesh.n_nodes, "flux edge")
        fe = fem.flux_load_edge(mesh.coords[a], mesh.coords[b], q_bar)
        rhs[a] += fe[0]
        rhs[b] += fe[1]

    dirichlet: dict[int, float] = {}
    for node, value in bcs.dirichlet_T.items():
        _check_node(node, mesh.n_nodes, "Dirichlet temperature")
        dirichlet[node] = value

    matrix = _compress(dof_map.ndof, rows, cols, vals)
    return SparseSystem(matrix=matrix, rhs=rhs, dof_map=dof_map, dirichlet=dirichlet)


def assemble_mechanical(mesh: Mesh, materials: dict[int, MaterialProps],
                        bcs: BoundaryConditionSet,
                        temperature: np.ndarray | None,
                        tau: float = vem.DEFAULT_STABILIZATION) -> SparseSystem:
    """Coupled mechanical system with thermal loads from a solved temperature.

    ``temperature=None`` means an isothermal problem at reference temperature
    (zero thermal load).
    """
    planes = {materials[r].plane for r in mesh.regions() if r in materials}
    if len(planes) > 1:
        warnings.warn("regions mix plane stress and plane strain in one solve",
                      stacklevel=2)

    dof_map = build_dof_map(mesh, "mechanical")
    rows, cols, vals = [], [], []
    rhs = np.zeros(dof_map.ndof)

    def element_contribution(elem):
        coords = mesh.element_coords(elem)
        props = _material_for(elem.region, materials)
        t_nodal = None if temperature is None else temperature[list(elem.vertices)]
        if elem.kind == ElementKind.FE_QUAD:
            ke = fem.mechanical_stiffness_q4(coords, props, elem.id)
            fe = None
            if t_nodal is not None:
                fe = fem.thermal_load_q4(coords, props, t_nodal, elem.id)
            return ke, fe
        projection = vem.elastic_projection(coords, props, elem_id=elem.id)
        ke = vem.elastic_element_matrices(coords, props, tau=tau, projection=projection)
        fe = None
        if t_nodal is not None:
            fe = vem.vem_thermal_load(coords, props, t_nodal, projection=projection)
        return ke, fe

    contributions = _evaluate_elements(mesh.elements, element_contribution)
    for elem, (ke, fe) in zip(mesh.elements, contributions):
        dofs = dof_map.element_dofs(elem.vertices)
        n = dofs.size
        rows.append(np.repeat(dofs, n))
        cols.append(np.tile(dofs, n))
        vals.append(ke.ravel())
        if fe is not None:
            np.add.at(rhs, dofs, fe)

    for (a, b, t_bar) in bcs.traction_edges:
        _check_node(a, mesh.n_nodes, "traction edge")
        _check_node(b, mesh.n_nodes, "traction edge")
        fe = fem.traction_load_edge(mesh.coords[a], mesh.coords[b], t_bar)
        np.add.at(rhs, dof_map.element_dofs((a, b)), fe)

    dirichlet: dict[int, float] = {}
    for node, (ux, uy) in bcs.dirichlet_u.items():
        _check_node(node, mesh.n_nodes, "Dirichlet displacement")
        if ux is not None:
            dirichlet[2 * node] = ux
        if uy is not None:
            dirichlet[2 * node + 1] = uy

    matrix = _compress(dof_map.ndof, rows, cols, vals)
    return SparseSystem(matrix=matrix, rhs=rhs, dof_map=dof_map, dirichlet=dirichlet)


def apply_dirichlet(system: SparseSystem,
                    constraints: dict[int, float] | None = None) -> ReducedSystem:
    """Symmetric row/column elimination of prescribed dofs.

    Constrained columns move to the right-hand side; the reduced matrix stays
    symmetric and (for well-posed problems) positive definite.
    """
    if constraints is None:
        constraints = system.dirichlet
    ndof = system.dof_map.ndof
    for dof in constraints:
        if dof < 0 or dof >= ndof:
            raise AssemblyError(f"constraint on dof {dof} outside 0..{ndof - 1}")

    prescribed = np.zeros(ndof)
    mask = np.zeros(ndof, dtype=bool)
    for dof, value in constraints.items():
        prescribed[dof] = value
        mask[dof] = True
    free = np.where(~mask)[0]
    fixed = np.where(mask)[0]

    k = system.matrix.tocsr()
    k_ff = k[free][:, free]
    rhs = system.rhs[free]
    if fixed.size:
        rhs = rhs - k[free][:, fixed] @ prescribed[fixed]
    return ReducedSystem(matrix=k_ff.tocsr(), rhs=np.asarray(rhs).ravel(),
                         free=free, prescribed=prescribed)
