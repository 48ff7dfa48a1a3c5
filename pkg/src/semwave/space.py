"""Continuous degree-r spectral element space on a hex mesh.

Global degrees of freedom are the geometrically distinct GLL node
positions; nodes from neighbouring elements are merged by coordinate
hashing with tolerance 1e-10 * h, which is adequate for conforming
meshes (shared-face nodes are bit-identical because the trilinear map
restricted to a face depends only on that face's corners).

Local node ordering inside an element is lexicographic with the xi
index fastest: local = i + (r+1) j + (r+1)^2 k.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gll import GllRule, gll_rule, lagrange_all
from .mesh import HexMesh, RefPoint, shape_functions


@dataclass
class SpectralSpace:
    mesh: HexMesh
    degree: int
    rule: GllRule
    ndof: int
    emap: np.ndarray  # (ne, (r+1)^3) global DOF per local node
    node_coords: np.ndarray  # (ndof, 3)
    boundary_dofs: dict[str, np.ndarray]
    _geom: dict = field(default_factory=dict, repr=False)

    @property
    def nloc(self) -> int:
        return (self.degree + 1) ** 3

    def local_nodes_ref(self) -> np.ndarray:
        """Reference coordinates of the local nodes, shape (nloc, 3)."""
        g = self.rule.nodes
        p = self.degree + 1
        out = np.empty((self.nloc, 3))
        idx = 0
        for k in range(p):
            for j in range(p):
                for i in range(p):
                    out[idx] = (g[i], g[j], g[k])
                    idx += 1
        return out

    def tensor_weights(self) -> np.ndarray:
        """3D GLL weights per local node, shape (nloc,)."""
        w = self.rule.weights
        p = self.degree + 1
        out = np.empty(self.nloc)
        for k in range(p):
            for j in range(p):
                for i in range(p):
                    out[i + p * j + p * p * k] = w[i] * w[j] * w[k]
        return out


def build_space(mesh: HexMesh, r: int) -> SpectralSpace:
    """Number the global GLL DOFs of the degree-r space on mesh."""
    rule = gll_rule(r)
    p = r + 1
    nloc = p**3

    # reference positions of the local nodes (xi fastest)
    g = rule.nodes
    ref = np.empty((nloc, 3))
    idx = 0
    for k in range(p):
        for j in range(p):
            for i in range(p):
                ref[idx] = (g[i], g[j], g[k])
                idx += 1

    n_shape = shape_functions(ref)  # (nloc, 8)
    corners = mesh.corner_coords()  # (ne, 8, 3)
    phys = np.einsum("qc,ecx->eqx", n_shape, corners)  # (ne, nloc, 3)

    tol = 1e-10 * mesh.h
    keys = np.round(phys / tol).astype(np.int64)
    seen: dict[tuple, int] = {}
    ne = mesh.num_elements
    emap = np.empty((ne, nloc), dtype=int)
    coords: list[np.ndarray] = []
    for e in range(ne):
        for q in range(nloc):
            key = tuple(keys[e, q])
            gid = seen.get(key)
            if gid is None:
                gid = len(coords)
                seen[key] = gid
                coords.append(phys[e, q])
            emap[e, q] = gid

    node_coords = np.array(coords)
    boundary_dofs: dict[str, set] = {}
    for e, f, tag in mesh.boundary:
        local = face_local_nodes(r, f)
        boundary_dofs.setdefault(tag, set()).update(emap[e, local].tolist())
    bdofs = {t: np.array(sorted(s), dtype=int) for t, s in boundary_dofs.items()}

    return SpectralSpace(
        mesh=mesh, degree=r, rule=rule, ndof=len(coords),
        emap=emap, node_coords=node_coords, boundary_dofs=bdofs,
    )


def face_local_nodes(r: int, f: int) -> np.ndarray:
    """Local node indices on local face f, ordered over the two in-face axes."""
    p = r + 1
    fixed = 0 if f < 2 else (1 if f < 4 else 2)
    val = 0 if f % 2 == 0 else r
    out = []
    axes = [a for a in range(3) if a != fixed]
    for b in range(p):
        for a in range(p):
            ijk = [0, 0, 0]
            ijk[fixed] = val
            ijk[axes[0]] = a
            ijk[axes[1]] = b
            out.append(ijk[0] + p * ijk[1] + p * p * ijk[2])
    return np.array(out, dtype=int)


@dataclass
class SpectralField:
    space: SpectralSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndof,):
            raise ValueError("coefficient vector length does not match the space")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite field coefficients")


def interpolate(space: SpectralSpace, g) -> SpectralField:
    """Nodal interpolant: coefficient i = g(node_i)."""
    x = space.node_coords
    vals = np.asarray(g(x[:, 0], x[:, 1], x[:, 2]), dtype=float)
    vals = np.broadcast_to(vals, (space.ndof,)).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("interpolated function is not finite at some node")
    return SpectralField(space, vals)


def basis_at(space: SpectralSpace, p: RefPoint) -> np.ndarray:
    """Values of the nloc element-local basis functions at a reference point."""
    lx = lagrange_all(space.rule, p.xi[0])
    ly = lagrange_all(space.rule, p.xi[1])
    lz = lagrange_all(space.rule, p.xi[2])
    return np.einsum("i,j,k->kji", lx, ly, lz).ravel()


def evaluate(space: SpectralSpace, field: SpectralField, x, ref: RefPoint | None = None) -> float:
    """Point evaluation; pass a pre-located RefPoint to skip point location."""
    if ref is None:
        ref = space.mesh.locate_point(x)
        if ref is None:
            raise ValueError(f"point {x} is outside the mesh")
    vals = basis_at(space, ref)
    return float(vals @ field.coeffs[space.emap[ref.element]])


def l2_error(space: SpectralSpace, field: SpectralField, exact, points: int | None = None) -> float:
    """L2 norm of (field - exact) over the mesh.

    By default the integral is evaluated with the space's own GLL rule
    (collocation: the discrete nodal norm).  Passing ``points`` switches
    to a tensor Gauss-Legendre rule with that many points per axis,
    which measures the true interpolation error between nodes as well.
    """
    if points is None:
        from .assembly import element_geometry

        wdet = element_geometry(space)["wdet"]  # (ne, nloc)
        nodal = field.coeffs[space.emap]  # (ne, nloc)
        xq = space.node_coords[space.emap]  # (ne, nloc, 3)
        ex = exact(xq[..., 0], xq[..., 1], xq[..., 2])
        return float(np.sqrt(np.sum(wdet * (nodal - ex) ** 2)))

    from .mesh import shape_gradients

    gx, gw = np.polynomial.legendre.leggauss(points)
    lv = lagrange_all(space.rule, gx)  # (points, r+1)
    nq = points**3
    ref = np.empty((nq, 3))
    w3 = np.empty(nq)
    basis = np.empty((nq, space.nloc))
    idx = 0
    for k in range(points):
        for j in range(points):
            for i in range(points):
                ref[idx] = (gx[i], gx[j], gx[k])
                w3[idx] = gw[i] * gw[j] * gw[k]
                basis[idx] = np.einsum("a,b,c->cba", lv[i], lv[j], lv[k]).ravel()
                idx += 1
    corners = space.mesh.corner_coords()
    jac = np.einsum("ecx,qcd->eqxd", corners, shape_gradients(ref))
    wdet = w3[None, :] * np.linalg.det(jac)
    xq = np.einsum("qc,ecx->eqx", shape_functions(ref), corners)
    uh = np.einsum("qi,ei->eq", basis, field.coeffs[space.emap])
    ex = exact(xq[..., 0], xq[..., 1], xq[..., 2])
    return float(np.sqrt(np.sum(wdet * (uh - ex) ** 2)))


def write_vtk(space: SpectralSpace, fields: dict[str, SpectralField], path):
    """Legacy ASCII VTK: each element split into r^3 linear hex sub-cells
    sampled at the GLL nodes (cell type 12)."""
    r = space.degree
    p = r + 1
    ne = space.mesh.num_elements

    def loc(i, j, k):
        return i + p * j + p * p * k

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\nsemwave output\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {space.ndof} double\n")
        for c in space.node_coords:
            fh.write(f"{c[0]:.16g} {c[1]:.16g} {c[2]:.16g}\n")
        ncell = ne * r**3
        fh.write(f"CELLS {ncell} {9 * ncell}\n")
        for e in range(ne):
            m = space.emap[e]
            for k in range(r):
                for j in range(r):
                    for i in range(r):
                        ids = [
                            m[loc(i, j, k)], m[loc(i + 1, j, k)],
                            m[loc(i + 1, j + 1, k)], m[loc(i, j + 1, k)],
                            m[loc(i, j, k + 1)], m[loc(i + 1, j, k + 1)],
                            m[loc(i + 1, j + 1, k + 1)], m[loc(i, j + 1, k + 1)],
                        ]
                        fh.write("8 " + " ".join(str(int(v)) for v in ids) + "\n")
        fh.write(f"CELL_TYPES {ncell}\n")
        fh.write("\n".join(["12"] * ncell) + "\n")
        fh.write(f"POINT_DATA {space.ndof}\n")
        for name, fld in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(f"{v:.16g}" for v in fld.coeffs) + "\n")
