"""SEM operators with numerical integration (GLL collocation).

The mass matrix is diagonal because quadrature nodes coincide with the
nodal basis points.  The stiffness and convective operators are applied
matrix-free from per-node geometric factors; an explicit sparse form is
never built.  Impedance boundary damping is a diagonal built from the
2D GLL face rule collocated with the volume DOFs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gll import diff_matrix
from .mesh import FACE_TANGENTS
from .space import SpectralField, SpectralSpace, basis_at, face_local_nodes


def element_geometry(space: SpectralSpace) -> dict:
    """Per-element, per-GLL-node geometric factors, cached on the space.

    Keys: ``jac`` (ne,nloc,3,3) with J[x,d] = dx/dref_d, ``det``, ``inv``
    (J^-1), ``wdet`` (3D GLL weight times |det J|) and ``gmat``
    (wdet * J^-1 J^-T, the stiffness metric).
    """
    if "wdet" in space._geom:
        return space._geom
    from .mesh import shape_gradients

    ref = space.local_nodes_ref()
    dshape = shape_gradients(ref)  # (nloc, 8, 3)
    corners = space.mesh.corner_coords()  # (ne, 8, 3)
    jac = np.einsum("ecx,qcd->eqxd", corners, dshape)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise ValueError("non-positive Jacobian at a quadrature node")
    inv = np.linalg.inv(jac)  # (ne, nloc, 3, 3), inv[d, x]
    wdet = space.tensor_weights()[None, :] * det
    gmat = wdet[..., None, None] * np.einsum("eqdx,eqcx->eqdc", inv, inv)
    space._geom.update(jac=jac, det=det, inv=inv, wdet=wdet, gmat=gmat)
    return space._geom


def _scatter(space: SpectralSpace, local: np.ndarray) -> np.ndarray:
    return np.bincount(space.emap.ravel(), weights=local.ravel(), minlength=space.ndof)


def assemble_mass(space: SpectralSpace) -> np.ndarray:
    """Diagonal GLL mass: M_i = sum over touching elements of w_q |det J|."""
    return _scatter(space, element_geometry(space)["wdet"])


def _ref_gradients(u4: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # u4 indexed [e, k, j, i] (zeta, eta, xi)
    gx = np.einsum("im,ekjm->ekji", d, u4)
    gy = np.einsum("jm,ekmi->ekji", d, u4)
    gz = np.einsum("km,emji->ekji", d, u4)
    return gx, gy, gz


def _ref_gradients_t(q: np.ndarray, d: np.ndarray, axis: int) -> np.ndarray:
    # transpose of the reference derivative along one axis
    if axis == 0:
        return np.einsum("mi,ekjm->ekji", d, q)
    if axis == 1:
        return np.einsum("mj,ekmi->ekji", d, q)
    return np.einsum("mk,emji->ekji", d, q)


def apply_stiffness(space: SpectralSpace, u: np.ndarray) -> np.ndarray:
    """Matrix-free K u, K_ij = (grad phi_j, grad phi_i)^NI."""
    geom = element_geometry(space)
    d = diff_matrix(space.rule)
    p = space.degree + 1
    ne = space.mesh.num_elements
    u4 = u[space.emap].reshape(ne, p, p, p)
    gx, gy, gz = _ref_gradients(u4, d)
    g = np.stack([x.reshape(ne, -1) for x in (gx, gy, gz)], axis=-1)  # (ne,nloc,3)
    q = np.einsum("eqdc,eqc->eqd", geom["gmat"], g)
    out = np.zeros((ne, p, p, p))
    for axis in range(3):
        out += _ref_gradients_t(q[:, :, axis].reshape(ne, p, p, p), d, axis)
    return _scatter(space, out)


@dataclass
class ConvectiveOperators:
    """Matrix-free C^l, C^l_ij = (phi_j, [grad phi_i]_l)^NI."""

    space: SpectralSpace

    def apply(self, ell: int, q: np.ndarray) -> np.ndarray:
        space = self.space
        geom = element_geometry(space)
        d = diff_matrix(space.rule)
        p = space.degree + 1
        ne = space.mesh.num_elements
        s = geom["wdet"] * q[space.emap]  # (ne, nloc)
        out = np.zeros((ne, p, p, p))
        for axis in range(3):
            # [grad phi_i]_l = sum_d J^-T[l,d] Dhat_d phi_i;  J^-T[l,d] = inv[d,l]
            r = (geom["inv"][:, :, axis, ell] * s).reshape(ne, p, p, p)
            out += _ref_gradients_t(r, d, axis)
        return _scatter(space, out)


def assemble_convective(space: SpectralSpace) -> ConvectiveOperators:
    element_geometry(space)
    return ConvectiveOperators(space)


def surface_quadrature(space: SpectralSpace, tags) -> tuple[np.ndarray, np.ndarray]:
    """Collocated surface rule on all boundary faces carrying one of tags.

    Returns (global DOF indices, weights) with weight = 2D GLL weight times
    the face surface Jacobian; repeated DOFs appear once per touching face.
    """
    tags = {tags} if isinstance(tags, str) else set(tags)
    known = space.mesh.tags
    missing = tags - known
    if missing:
        raise ValueError(f"unknown boundary tag(s) {sorted(missing)}; mesh has {sorted(known)}")
    geom = element_geometry(space)
    w1 = space.rule.weights
    p = space.degree + 1
    dofs, weights = [], []
    for e, f, tag in space.mesh.boundary:
        if tag not in tags:
            continue
        local = face_local_nodes(space.degree, f)
        ax0, ax1 = FACE_TANGENTS[f]
        jac = geom["jac"][e, local]  # (p*p, 3, 3)
        t1, t2 = jac[:, :, ax0], jac[:, :, ax1]
        surf = np.linalg.norm(np.cross(t1, t2), axis=1)
        idx = np.arange(p * p)  # face ordering: first in-face axis fastest
        w2 = w1[idx % p] * w1[idx // p]
        dofs.append(space.emap[e, local])
        weights.append(w2 * surf)
    if not dofs:
        return np.empty(0, dtype=int), np.empty(0)
    return np.concatenate(dofs), np.concatenate(weights)


def assemble_damping(space: SpectralSpace, tags, impedance: float, rho0: float, c0: float) -> np.ndarray:
    """Diagonal boundary damping B_i = (rho0 c0^2 / Z) * surface mass of DOF i."""
    if impedance <= 0:
        raise ValueError("impedance must be positive")
    dofs, w = surface_quadrature(space, tags)
    b = np.zeros(space.ndof)
    np.add.at(b, dofs, (rho0 * c0**2 / impedance) * w)
    return b


def volume_load(space: SpectralSpace, f, t: float, mass: np.ndarray | None = None) -> np.ndarray:
    """Collocated volume load: load_i = M_i f(node_i, t)."""
    if mass is None:
        mass = assemble_mass(space)
    x = space.node_coords
    vals = np.asarray(f(x[:, 0], x[:, 1], x[:, 2], t), dtype=float)
    vals = np.broadcast_to(vals, (space.ndof,))
    if not np.all(np.isfinite(vals)):
        raise ValueError("volume forcing is not finite at some node")
    return mass * vals


def neumann_load(space: SpectralSpace, tags, g, t: float, c0: float, points: int | None = None) -> np.ndarray:
    """Boundary load c0^2 * integral of g over tagged faces.

    By default the integral is collocated on the surface GLL rule.  That
    loses half an order of convergence for smooth inhomogeneous data, so
    callers chasing optimal rates can over-integrate with a Gauss rule of
    `points` points per face axis.
    """
    if points is None:
        dofs, w = surface_quadrature(space, tags)
        out = np.zeros(space.ndof)
        if dofs.size:
            x = space.node_coords[dofs]
            vals = np.asarray(g(x[:, 0], x[:, 1], x[:, 2], t), dtype=float)
            vals = np.broadcast_to(vals, dofs.shape)
            np.add.at(out, dofs, c0**2 * w * vals)
        return out
    return _neumann_load_gauss(space, tags, g, t, c0, points)


def _neumann_load_gauss(space: SpectralSpace, tags, g, t: float, c0: float, points: int) -> np.ndarray:
    from .gll import lagrange_all
    from .mesh import FACE_AXIS, shape_functions, shape_gradients

    tags = {tags} if isinstance(tags, str) else set(tags)
    missing = tags - space.mesh.tags
    if missing:
        raise ValueError(f"unknown boundary tag(s) {sorted(missing)}")
    gx, gw = np.polynomial.legendre.leggauss(points)
    lv = lagrange_all(space.rule, gx)  # (points, r+1)
    out = np.zeros(space.ndof)
    mesh = space.mesh
    for e, f, tag in mesh.boundary:
        if tag not in tags:
            continue
        fixed, sign = FACE_AXIS[f]
        ax0, ax1 = FACE_TANGENTS[f]
        # face quadrature grid in reference coordinates, first axis fastest
        idx = np.arange(points * points)
        ia, ib = idx % points, idx // points
        ref = np.empty((points * points, 3))
        ref[:, fixed] = float(sign)
        ref[:, ax0] = gx[ia]
        ref[:, ax1] = gx[ib]
        corners = mesh.corner_coords(e)
        x = shape_functions(ref) @ corners
        jac = np.einsum("cx,qcd->qxd", corners, shape_gradients(ref))
        surf = np.linalg.norm(np.cross(jac[:, :, ax0], jac[:, :, ax1]), axis=1)
        wq = gw[ia] * gw[ib] * surf
        vals = np.asarray(g(x[:, 0], x[:, 1], x[:, 2], t), dtype=float)
        vals = np.broadcast_to(vals, wq.shape)
        # phi restricted to the face: 2D tensor basis of the p^2 face nodes
        basis2d = (lv[ia][:, None, :] * lv[ib][:, :, None]).reshape(len(idx), -1)
        local = face_local_nodes(space.degree, f)
        np.add.at(out, space.emap[e, local], c0**2 * (wq * vals) @ basis2d)
    return out


def point_source_load(space: SpectralSpace, x_source, amplitude: float) -> np.ndarray:
    """Consistent Dirac load: load_i = phi_i(x_S) * amplitude."""
    ref = space.mesh.locate_point(x_source)
    if ref is None:
        raise ValueError(f"point source {x_source} lies outside the mesh")
    out = np.zeros(space.ndof)
    np.add.at(out, space.emap[ref.element], basis_at(space, ref) * amplitude)
    return out


@dataclass
class AssembledOperators:
    """Diagonal mass M, matrix-free stiffness K, diagonal damping B."""

    space: SpectralSpace
    mass: np.ndarray
    damping: np.ndarray
    c0: float
    rho0: float
    impedance: dict[str, float] = field(default_factory=dict)

    def stiffness(self, u: np.ndarray) -> np.ndarray:
        return apply_stiffness(self.space, u)


def assemble_operators(
    space: SpectralSpace, c0: float, rho0: float, impedance: dict[str, float] | None = None
) -> AssembledOperators:
    """Mass, stiffness and (optional) impedance damping in one bundle.

    impedance maps boundary tag -> wall impedance Z in Pa s/m.
    """
    mass = assemble_mass(space)
    damping = np.zeros(space.ndof)
    for tag, z in (impedance or {}).items():
        damping += assemble_damping(space, tag, z, rho0, c0)
    return AssembledOperators(space, mass, damping, c0, rho0, dict(impedance or {}))
