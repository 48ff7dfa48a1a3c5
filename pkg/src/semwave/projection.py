"""Consistent L2 transfer of piecewise-constant FV fields onto the spectral
space: the rectangular coupling matrix, the consistent (non-collocated)
mass matrix, the projection solve, and the aeroacoustic load composition.

Cell-element overlap integrals: when both the FV cells and the acoustic
elements are axis-aligned boxes (the common case here), each cell is
clipped against the overlapping element boxes and a tensor Gauss rule is
applied on every intersection box, which integrates the polynomial basis
exactly.  Otherwise the code falls back to sampling: each FV cell is
decomposed into one pyramid per face (apex at the cell center, base the
face rebuilt as an equal-area square around its midpoint) and a tensor
Gauss rule is mapped onto each pyramid by the Duffy transform.  Samples
or cell parts falling outside the acoustic mesh contribute zero, so
partial overlaps are handled naturally.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fvsource import FvField, FvMesh
from .newmark import pcg
from .space import SpectralField, SpectralSpace, basis_at


@dataclass
class CouplingMatrix:
    """M^AF (ndof x ncells): entry (i, l) = integral of phi_i over the
    intersection of the acoustic mesh with fluid cell l."""

    matrix: sp.csr_matrix
    points_per_axis: int
    outside_samples: int
    empty_columns: int

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


def consistent_mass(space: SpectralSpace) -> sp.csr_matrix:
    """Full mass matrix with Gauss-Legendre quadrature (r+1 points per axis,
    exact for the degree-2r integrand), unlike the collocated diagonal M."""
    from .gll import lagrange_all
    from .mesh import shape_gradients

    r = space.degree
    p = r + 1
    gx, gw = np.polynomial.legendre.leggauss(p)
    lv = lagrange_all(space.rule, gx)  # (p_gauss, p) 1D basis values

    # tensor quadrature points and basis matrix, both ordered xi fastest
    nq = p**3
    ref = np.empty((nq, 3))
    w3 = np.empty(nq)
    basis = np.empty((nq, space.nloc))
    idx = 0
    for k in range(p):
        for j in range(p):
            for i in range(p):
                ref[idx] = (gx[i], gx[j], gx[k])
                w3[idx] = gw[i] * gw[j] * gw[k]
                basis[idx] = np.einsum("a,b,c->cba", lv[i], lv[j], lv[k]).ravel()
                idx += 1

    corners = space.mesh.corner_coords()
    jac = np.einsum("ecx,qcd->eqxd", corners, shape_gradients(ref))
    wdet = w3[None, :] * np.linalg.det(jac)
    local = np.einsum("eq,qi,qj->eij", wdet, basis, basis)
    rows = np.repeat(space.emap, space.nloc, axis=1).ravel()
    cols = np.tile(space.emap, (1, space.nloc)).ravel()
    m = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(space.ndof, space.ndof))
    return m.tocsr()


def _face_tangents(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.zeros(3)
    ref[np.argmin(np.abs(n))] = 1.0
    t1 = np.cross(n, ref)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


def _cell_samples(mesh: FvMesh, cell: int, faces: list[int], gx, gw) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points and weights covering one FV cell (pyramid per face)."""
    apex = mesh.centers[cell]
    # Duffy direction from apex to base: s in (0,1]
    s = 0.5 * (gx + 1.0)
    ws = 0.5 * gw
    pts, wts = [], []
    for f in faces:
        n = mesh.normal[f] if mesh.owner[f] == cell else -mesh.normal[f]
        mid = mesh.midpoint[f]
        h = float((mid - apex) @ n)
        if h <= 0:
            continue  # degenerate pyramid: cell not star-shaped w.r.t. center
        side = np.sqrt(mesh.area[f])
        t1, t2 = _face_tangents(n)
        base = (
            mid[None, None, :]
            + 0.5 * side * gx[:, None, None] * t1
            + 0.5 * side * gx[None, :, None] * t2
        )  # (g, g, 3)
        x = apex + s[:, None, None, None] * (base[None] - apex)
        w = (
            ws[:, None, None] * s[:, None, None] ** 2
            * gw[None, :, None] * gw[None, None, :]
            * (0.5 * side) ** 2 * h
        )
        pts.append(x.reshape(-1, 3))
        wts.append(w.ravel())
    return np.concatenate(pts), np.concatenate(wts)


def _cell_box(mesh: FvMesh, cell: int, faces: list[int]):
    """Axis-aligned bounds of a box-shaped cell, or None if not a box."""
    if len(faces) != 6:
        return None
    lo = np.full(3, np.nan)
    hi = np.full(3, np.nan)
    for f in faces:
        n = mesh.normal[f] if mesh.owner[f] == cell else -mesh.normal[f]
        ax = int(np.argmax(np.abs(n)))
        if abs(abs(n[ax]) - 1.0) > 1e-12:
            return None
        coord = mesh.midpoint[f][ax]
        if n[ax] > 0:
            if not np.isnan(hi[ax]):
                return None
            hi[ax] = coord
        else:
            if not np.isnan(lo[ax]):
                return None
            lo[ax] = coord
    if np.any(np.isnan(lo)) or np.any(hi <= lo):
        return None
    return lo, hi


def _element_boxes(mesh):
    """Per-element bounds plus a flag telling whether every element is an
    axis-aligned box (corners coincide with its bounding-box corners)."""
    from .mesh import CORNER_REF

    corners = mesh.corner_coords()  # (ne, 8, 3)
    lo = corners.min(axis=1)
    hi = corners.max(axis=1)
    expected = np.where(CORNER_REF[None, :, :] < 0, lo[:, None, :], hi[:, None, :])
    aligned = bool(np.allclose(corners, expected, atol=1e-12 * mesh.h))
    return lo, hi, aligned


def _tensor_basis(rule, xi_x, xi_y, xi_z):
    """Basis values at the tensor grid of the given 1D reference coords,
    points ordered x fastest, basis columns in local (xi-fastest) order."""
    from .gll import lagrange_all

    lx = lagrange_all(rule, xi_x)
    ly = lagrange_all(rule, xi_y)
    lz = lagrange_all(rule, xi_z)
    g = xi_x.size
    p = lx.shape[1]
    return np.einsum("ia,jb,kc->kjicba", lx, ly, lz).reshape(g**3, p**3)


def assemble_coupling(space: SpectralSpace, fvmesh: FvMesh, points_per_axis: int = 3) -> CouplingMatrix:
    """Assemble M^AF by exact box clipping where possible, else sampling."""
    if fvmesh.num_faces == 0:
        raise ValueError("FV mesh has no faces; cannot decompose cells for sampling")
    gx, gw = np.polynomial.legendre.leggauss(points_per_axis)
    cell_faces: list[list[int]] = [[] for _ in range(fvmesh.num_cells)]
    for f in range(fvmesh.num_faces):
        cell_faces[fvmesh.owner[f]].append(f)
        if fvmesh.neighbor[f] >= 0:
            cell_faces[fvmesh.neighbor[f]].append(f)

    mesh = space.mesh
    elo, ehi, elements_aligned = _element_boxes(mesh)
    eps = 1e-12 * mesh.h
    rows, cols, vals = [], [], []
    outside = 0
    empty_cols = 0
    last_elem = None
    for cell in range(fvmesh.num_cells):
        box = _cell_box(fvmesh, cell, cell_faces[cell]) if elements_aligned else None
        if box is not None:
            clo, chi = box
            cand = np.nonzero(
                np.all((elo < chi - eps) & (ehi > clo + eps), axis=1)
            )[0]
            hit = False
            for e in cand:
                lo2 = np.maximum(elo[e], clo)
                hi2 = np.minimum(ehi[e], chi)
                d = hi2 - lo2
                # physical Gauss points per axis and their reference coords
                xs = [0.5 * (lo2[a] + hi2[a]) + 0.5 * d[a] * gx for a in range(3)]
                xis = [2.0 * (xs[a] - elo[e, a]) / (ehi[e, a] - elo[e, a]) - 1.0 for a in range(3)]
                basis = _tensor_basis(space.rule, *xis)
                w3 = np.einsum("i,j,k->kji", 0.5 * d[0] * gw, 0.5 * d[1] * gw, 0.5 * d[2] * gw).ravel()
                hit = True
                rows.append(space.emap[e])
                cols.append(np.full(space.nloc, cell))
                vals.append(w3 @ basis)
            if not hit:
                empty_cols += 1
            continue
        pts, wts = _cell_samples(fvmesh, cell, cell_faces[cell], gx, gw)
        hit = False
        for x, w in zip(pts, wts):
            ref = None
            if last_elem is not None:
                xi = mesh._invert_map(last_elem, x, 1e-12, 50)
                if xi is not None and np.all(np.abs(xi) <= 1.0 + 1e-10):
                    from .mesh import RefPoint

                    ref = RefPoint(last_elem, np.clip(xi, -1.0, 1.0))
            if ref is None:
                ref = mesh.locate_point(x)
            if ref is None:
                outside += 1
                continue
            last_elem = ref.element
            hit = True
            rows.append(space.emap[ref.element])
            cols.append(np.full(space.nloc, cell))
            vals.append(w * basis_at(space, ref))
        if not hit:
            empty_cols += 1
    if rows:
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(space.ndof, fvmesh.num_cells),
        ).tocsr()
    else:
        m = sp.csr_matrix((space.ndof, fvmesh.num_cells))
    return CouplingMatrix(m, points_per_axis, outside, empty_cols)


@dataclass
class ProjectionOperator:
    """Holds M^AA and M^AF for repeated projections between fixed meshes."""

    space: SpectralSpace
    maa: sp.csr_matrix
    coupling: CouplingMatrix
    cg_tol: float = 1e-10
    cg_maxiter: int = 2000

    def project(self, q_values: np.ndarray) -> SpectralField:
        """Solve M^AA q_A = M^AF q_F by diagonally preconditioned CG."""
        q_values = np.asarray(q_values, dtype=float)
        rhs = self.coupling.matrix @ q_values
        diag = self.maa.diagonal()
        x, _ = pcg(self.maa.dot, rhs, diag, self.cg_tol, self.cg_maxiter)
        return SpectralField(self.space, x)

    def conservation_report(self, fvmesh: FvMesh, q_values=None) -> dict:
        """Column-sum audit against cell volumes, plus the transferred-mass
        identity sum(M^AF q_F) = sum(M^AA q_A) when a field is given."""
        csums = self.coupling.column_sums()
        rel = np.abs(csums - fvmesh.volumes) / fvmesh.volumes
        report = {
            "cells": int(fvmesh.num_cells),
            "empty_columns": int(self.coupling.empty_columns),
            "outside_samples": int(self.coupling.outside_samples),
            "column_sum_max_rel_error": float(rel.max()),
            "points_per_axis": self.coupling.points_per_axis,
        }
        if q_values is not None:
            q_values = np.asarray(q_values, dtype=float)
            lhs = float((self.coupling.matrix @ q_values).sum())
            qa = self.project(q_values)
            report["transferred_mass_fv"] = lhs
            report["transferred_mass_acoustic"] = float((self.maa @ qa.coeffs).sum())
        return report


def build_projection(space: SpectralSpace, fvmesh: FvMesh, points_per_axis: int = 3, **kw) -> ProjectionOperator:
    return ProjectionOperator(space, consistent_mass(space), assemble_coupling(space, fvmesh, points_per_axis), **kw)


def aeroacoustic_load(conv, qx: np.ndarray, qy: np.ndarray, qz: np.ndarray) -> np.ndarray:
    """Load for the Lighthill weak form, f_i = -(q_A, grad phi_i)^NI summed
    over components; the minus belongs to the integrated-by-parts weak form
    and is applied here, not inside the convective operators."""
    return -(conv.apply(0, qx) + conv.apply(1, qy) + conv.apply(2, qz))
