"""Run configuration: line-oriented sections, same lexical rules as meshes.

Sections: ``[mesh]``, ``[material <region>]``, ``[bc <label>]``, ``[solver]``,
``[probe <name>]``, ``[output]``.  One ``key value...`` pair per line,
whitespace separated, ``#`` comments.  Example::

    [mesh]
    generator quarter_annulus
    r_a 20
    r_b 60
    n_r 30
    n_t 60
    split_radius 40

    [material 0]
    E_MPa 460000
    nu 0.3
    k_W_per_mK 20
    alpha_per_C 7.4e-6
    T0_C 0
    plane stress

    [bc inner]
    dirichlet_T 0

    [bc theta0]
    dirichlet_u free 0

    [solver]
    method direct

    [probe radial]
    quantity temperature
    x0 20  # one key per line; this comment is stripped
    ...

    [output]
    dir out/cylinder
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .assembly import BoundaryConditionSet
from .errors import AssemblyError, ParseError
from .materials import MaterialProps, Plane
from .mesh import (Mesh, generate_fcbga, generate_igbt, generate_plate_with_hole,
                   generate_quarter_annulus, generate_sandwich,
                   generate_split_square, generate_structured_quads, load_mesh,
                   ElementKind)

# name -> (callable, ordered (param, type) pairs); optional params carry defaults
GENERATORS = {
    "structured_quads": (generate_structured_quads,
                         [("width", float), ("height", float), ("nx", int), ("ny", int),
                          ("kind", str, "FE")]),
    "split_square": (generate_split_square,
                     [("width", float), ("height", float), ("nx", int), ("ny", int),
                      ("split_x", float, None)]),
    "quarter_annulus": (generate_quarter_annulus,
                        [("r_a", float), ("r_b", float), ("n_r", int), ("n_t", int),
                         ("split_radius", float)]),
    "plate_with_hole": (generate_plate_with_hole,
                        [("hole_radius", float), ("size", float), ("n_t", int),
                         ("n_r_ring", int), ("n_r_outer", int), ("split_radius", float),
                         ("ring_kind", str, "VE"), ("outer_kind", str, "FE"),
                         ("split_ring", int, 0)]),
    "sandwich": (generate_sandwich, [("level", int)]),
    "fcbga": (generate_fcbga, [("level", int)]),
    "igbt": (generate_igbt, [("level", int)]),
}


@dataclass
class BcSpec:
    kind: str                   # dirichlet_T | flux | dirichlet_u | traction
    values: tuple


@dataclass
class ProbeSpec:
    name: str
    quantity: str
    p0: tuple[float, float]
    p1: tuple[float, float]
    n_samples: int = 50


@dataclass
class SolverSpec:
    method: str = "direct"
    cg_rel_tol: float = 1e-10
    cg_max_iter: int = 20000
    diag_precond: bool = True
    tau: float = 0.5
    fields: str = "both"        # both | thermal


@dataclass
class RunConfig:
    mesh_path: str | None = None
    generator: str | None = None
    generator_params: dict[str, str] = field(default_factory=dict)
    materials: dict[int, MaterialProps] = field(default_factory=dict)
    bcs: list[tuple[str, BcSpec]] = field(default_factory=list)
    solver: SolverSpec = field(default_factory=SolverSpec)
    probes: list[ProbeSpec] = field(default_factory=list)
    output_dir: str = "out"
    source_text: str = ""


def _sections(text: str, path: str) -> list[tuple[str, list[tuple[int, list[str]]]]]:
    out: list[tuple[str, list[tuple[int, list[str]]]]] = []
    current: list[tuple[int, list[str]]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", path, lineno)
            out.append((line[1:-1].strip(), []))
            current = out[-1][1]
        else:
            if current is None:
                raise ParseError(f"data before any section: '{line}'", path, lineno)
            current.append((lineno, line.split()))
    return out


def _kv(records, path) -> dict[str, list[str]]:
    out = {}
    for lineno, tok in records:
        if len(tok) < 2:
            raise ParseError(f"expected 'key value', got '{' '.join(tok)}'", path, lineno)
        if tok[0] in out:
            raise ParseError(f"duplicate key '{tok[0]}'", path, lineno)
        out[tok[0]] = tok[1:]
    return out


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    cfg = RunConfig(source_text=text)
    seen_mesh = False
    for header, records in _sections(text, path):
        parts = header.split()
        name = parts[0]
        if name == "mesh":
            seen_mesh = True
            kv = _kv(records, path)
            if "path" in kv:
                cfg.mesh_path = kv.pop("path")[0]
            if "generator" in kv:
                cfg.generator = kv.pop("generator")[0]
                cfg.generator_params = {k: v[0] for k, v in kv.items()}
            elif kv:
                raise ParseError(f"unknown mesh keys {sorted(kv)} without a generator", path)
            if cfg.mesh_path is None and cfg.generator is None:
                raise ParseError("[mesh] needs either 'path' or 'generator'", path)
        elif name == "material":
            if len(parts) != 2:
                raise ParseError("material section needs a region id: [material <region>]", path)
            try:
                region = int(parts[1])
            except ValueError:
                raise ParseError(f"region id must be an integer, got '{parts[1]}'", path)
            cfg.materials[region] = _parse_material(_kv(records, path), path)
        elif name == "bc":
            if len(parts) != 2:
                raise ParseError("bc section needs a label: [bc <label>]", path)
            cfg.bcs.append((parts[1], _parse_bc(records, path)))
        elif name == "solver":
            cfg.solver = _parse_solver(_kv(records, path), path)
        elif name == "probe":
            if len(parts) != 2:
                raise ParseError("probe section needs a name: [probe <name>]", path)
            cfg.probes.append(_parse_probe(parts[1], _kv(records, path), path))
        elif name == "output":
            kv = _kv(records, path)
            if "dir" in kv:
                cfg.output_dir = kv["dir"][0]
        else:
            raise ParseError(f"unknown section '[{header}]'", path)
    if not seen_mesh:
        raise ParseError("config has no [mesh] section", path)
    return cfg


def _parse_material(kv, path) -> MaterialProps:
    try:
        plane = Plane(kv.get("plane", ["stress"])[0])
        return MaterialProps(
            E=float(kv["E_MPa"][0]),
            nu=float(kv["nu"][0]),
            conductivity=float(kv["k_W_per_mK"][0]) / 1000.0,
            alpha=float(kv["alpha_per_C"][0]),
            T0=float(kv.get("T0_C", ["25"])[0]),
            plane=plane)
    except KeyError as exc:
        raise ParseError(f"material block missing key {exc}", path) from exc
    except ValueError as exc:
        raise ParseError(f"bad material value: {exc}", path) from exc


def _parse_bc(records, path) -> BcSpec:
    if len(records) != 1:
        raise ParseError("each [bc] section defines exactly one condition", path)
    lineno, tok = records[0]
    kind = tok[0]
    try:
        if kind == "dirichlet_T":
            return BcSpec(kind, (float(tok[1]),))
        if kind == "flux":
            return BcSpec(kind, (float(tok[1]),))
        if kind == "dirichlet_u":
            vals = tuple(None if t == "free" else float(t) for t in tok[1:3])
            if len(vals) != 2:
                raise ValueError("dirichlet_u needs two components")
            return BcSpec(kind, vals)
        if kind == "traction":
            return BcSpec(kind, (float(tok[1]), float(tok[2])))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad bc record: {exc}", path, lineno) from exc
    raise ParseError(f"unknown bc kind '{kind}'", path, lineno)


def _parse_solver(kv, path) -> SolverSpec:
    spec = SolverSpec()
    try:
        if "method" in kv:
            spec.method = kv["method"][0]
        if "cg_rel_tol" in kv:
            spec.cg_rel_tol = float(kv["cg_rel_tol"][0])
        if "cg_max_iter" in kv:
            spec.cg_max_iter = int(kv["cg_max_iter"][0])
        if "diag_precond" in kv:
            spec.diag_precond = bool(int(kv["diag_precond"][0]))
        if "tau" in kv:
            spec.tau = float(kv["tau"][0])
        if "fields" in kv:
            spec.fields = kv["fields"][0]
            if spec.fields not in ("both", "thermal"):
                raise ValueError(f"fields must be 'both' or 'thermal', got '{spec.fields}'")
    except ValueError as exc:
        raise ParseError(f"bad solver value: {exc}", path) from exc
    return spec


def _parse_probe(name, kv, path) -> ProbeSpec:
    try:
        return ProbeSpec(
            name=name,
            quantity=kv["quantity"][0],
            p0=(float(kv["x0"][0]), float(kv["y0"][0])),
            p1=(float(kv["x1"][0]), float(kv["y1"][0])),
            n_samples=int(kv.get("n_samples", ["50"])[0]))
    except KeyError as exc:
        raise ParseError(f"probe '{name}' missing key {exc}", path) from exc
    except ValueError as exc:
        raise ParseError(f"bad probe value: {exc}", path) from exc


def build_mesh(cfg: RunConfig, base_dir: str = ".") -> Mesh:
    if cfg.mesh_path is not None:
        import os
        p = cfg.mesh_path
        if not os.path.isabs(p):
            p = os.path.join(base_dir, p)
        return load_mesh(p)
    if cfg.generator not in GENERATORS:
        raise ParseError(f"unknown generator '{cfg.generator}' "
                         f"(known: {sorted(GENERATORS)})")
    fn, params = GENERATORS[cfg.generator]
    kwargs = {}
    given = dict(cfg.generator_params)
    for spec in params:
        pname, ptype = spec[0], spec[1]
        if pname in given:
            raw = given.pop(pname)
            if ptype is str:
                kwargs[pname] = raw
            else:
                try:
                    kwargs[pname] = ptype(raw)
                except ValueError:
                    raise ParseError(f"generator parameter {pname}: bad value '{raw}'")
        elif len(spec) == 2:
            raise ParseError(f"generator '{cfg.generator}' missing parameter '{pname}'")
    if given:
        raise ParseError(f"generator '{cfg.generator}': unknown parameters {sorted(given)}")
    for key in ("kind", "ring_kind", "outer_kind"):
        if key in kwargs:
            kwargs[key] = ElementKind(kwargs[key])
    if "split_ring" in kwargs:
        kwargs["split_ring"] = bool(kwargs["split_ring"])
    return fn(**kwargs)


def build_bcs(cfg: RunConfig, mesh: Mesh) -> BoundaryConditionSet:
    """Resolve label-keyed BC specs against the mesh."""
    labels = mesh.labels()
    bcs = BoundaryConditionSet()
    for label, spec in cfg.bcs:
        if label not in labels:
            raise AssemblyError(f"bc label '{label}' not present in the mesh "
                                f"(known labels: {sorted(labels)})")
        if spec.kind == "dirichlet_T":
            for n in mesh.nodes_with_label(label):
                bcs.set_temperature(n, spec.values[0])
        elif spec.kind == "dirichlet_u":
            for n in mesh.nodes_with_label(label):
                bcs.set_displacement(n, spec.values[0], spec.values[1])
        elif spec.kind == "flux":
            for (a, b) in mesh.edges_with_label(label):
                if len(mesh.edge_elements(a, b)) != 1:
                    raise AssemblyError(f"flux label '{label}' sits on interior edge ({a},{b})")
                bcs.flux_edges.append((a, b, spec.values[0]))
        elif spec.kind == "traction":
            for (a, b) in mesh.edges_with_label(label):
                if len(mesh.edge_elements(a, b)) != 1:
                    raise AssemblyError(f"traction label '{label}' sits on interior edge ({a},{b})")
                bcs.traction_edges.append((a, b, (spec.values[0], spec.values[1])))
    missing = {r for r in mesh.regions() if r not in cfg.materials}
    if missing:
        raise AssemblyError(f"mesh regions without material blocks: {sorted(missing)}")
    return bcs
