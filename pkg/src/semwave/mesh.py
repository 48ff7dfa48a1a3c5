"""Conforming hexahedral meshes with trilinear reference-to-physical maps.

Conventions (fixed for file interop):

* Corner ordering: corner c = i + 2j + 4k sits at reference coordinates
  (xi, eta, zeta) = (2i-1, 2j-1, 2k-1), i.e. x varies fastest.
* Local faces 0..5 are xi=-1, xi=+1, eta=-1, eta=+1, zeta=-1, zeta=+1.
* The mesh file is JSON with a mandatory ``"version": "1"`` field and
  ``vertices``, ``elements``, ``boundary`` arrays.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MESH_FORMAT_VERSION = "1"

# reference corner coordinates, corner c = i + 2j + 4k
CORNER_REF = np.array(
    [[2 * (c & 1) - 1, 2 * ((c >> 1) & 1) - 1, 2 * ((c >> 2) & 1) - 1] for c in range(8)],
    dtype=float,
)

# corners of each local face (xi-, xi+, eta-, eta+, zeta-, zeta+)
FACE_CORNERS = np.array(
    [
        [0, 2, 4, 6],
        [1, 3, 5, 7],
        [0, 1, 4, 5],
        [2, 3, 6, 7],
        [0, 1, 2, 3],
        [4, 5, 6, 7],
    ]
)

# (fixed axis, sign) of each local face, plus the two in-face reference axes
FACE_AXIS = [(0, -1), (0, +1), (1, -1), (1, +1), (2, -1), (2, +1)]
FACE_TANGENTS = [(1, 2), (1, 2), (0, 2), (0, 2), (0, 1), (0, 1)]


class MeshError(Exception):
    pass


class DegenerateElementError(MeshError):
    pass


@dataclass(frozen=True)
class RefPoint:
    """A point expressed as (element, reference coordinates in [-1,1]^3)."""

    element: int
    xi: np.ndarray


def shape_functions(ref: np.ndarray) -> np.ndarray:
    """Trilinear shape functions N_c at reference points, shape (..., 8)."""
    ref = np.asarray(ref, dtype=float)
    return np.prod(1.0 + ref[..., None, :] * CORNER_REF, axis=-1) / 8.0


def shape_gradients(ref: np.ndarray) -> np.ndarray:
    """dN_c/d(xi,eta,zeta) at reference points, shape (..., 8, 3)."""
    ref = np.asarray(ref, dtype=float)
    terms = 1.0 + ref[..., None, :] * CORNER_REF  # (..., 8, 3)
    grad = np.empty(terms.shape)
    for d in range(3):
        others = [a for a in range(3) if a != d]
        grad[..., d] = CORNER_REF[:, d] * terms[..., others[0]] * terms[..., others[1]]
    return grad / 8.0


@dataclass
class HexMesh:
    """Conforming hex mesh: vertex coordinates, 8-corner elements, tagged
    boundary faces (element index, local face 0-5, tag)."""

    vertices: np.ndarray  # (nv, 3)
    elements: np.ndarray  # (ne, 8) int
    boundary: list[tuple[int, int, str]]
    _bboxes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        self.validate()

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def h(self) -> float:
        """Characteristic size: the largest element diameter."""
        corners = self.vertices[self.elements]  # (ne, 8, 3)
        d = corners[:, :, None, :] - corners[:, None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def corner_coords(self, e=None) -> np.ndarray:
        if e is None:
            return self.vertices[self.elements]
        return self.vertices[self.elements[e]]

    @property
    def tags(self) -> set[str]:
        return {t for _, _, t in self.boundary}

    # -- validation -------------------------------------------------------

    def validate(self):
        ne = self.num_elements
        if self.elements.min(initial=0) < 0 or self.elements.max(initial=-1) >= len(self.vertices):
            raise MeshError("element vertex index out of range")
        # positive Jacobian at all corners
        grad = shape_gradients(CORNER_REF)  # (8, 8, 3)
        corners = self.corner_coords()  # (ne, 8, 3)
        jac = np.einsum("ecx,qcd->eqxd", corners, grad)
        det = np.linalg.det(jac)
        if np.any(det <= 0):
            bad = int(np.argwhere(det <= 0)[0][0])
            raise DegenerateElementError(f"element {bad} has non-positive Jacobian at a corner")
        # conformity: every face occurs twice (interior) or once + tagged
        counts: dict[frozenset, int] = {}
        for e in range(ne):
            for f in range(6):
                key = frozenset(self.elements[e, FACE_CORNERS[f]])
                counts[key] = counts.get(key, 0) + 1
        tagged = set()
        for e, f, tag in self.boundary:
            key = frozenset(self.elements[e, FACE_CORNERS[f]])
            if counts.get(key, 0) != 1:
                raise MeshError(f"boundary face (elem {e}, face {f}, tag {tag!r}) is not exterior")
            if key in tagged:
                raise MeshError(f"face (elem {e}, face {f}) tagged more than once")
            tagged.add(key)
        for key, n in counts.items():
            if n == 1 and key not in tagged:
                raise MeshError("untagged exterior face found: mesh is non-conforming or boundary is incomplete")
            if n > 2:
                raise MeshError("face shared by more than two elements")

    # -- geometry ---------------------------------------------------------

    def map_to_physical(self, p: RefPoint) -> np.ndarray:
        n = shape_functions(p.xi)
        return n @ self.corner_coords(p.element)

    def jacobian(self, p: RefPoint) -> tuple[np.ndarray, float]:
        """(J, det J) of the trilinear map at p, J[x, d] = dx/d(ref_d)."""
        grad = shape_gradients(p.xi)  # (8, 3)
        jac = np.einsum("cx,cd->xd", self.corner_coords(p.element), grad)
        det = float(np.linalg.det(jac))
        if det <= 0:
            raise DegenerateElementError(f"non-positive Jacobian in element {p.element}")
        return jac, det

    def element_bboxes(self) -> np.ndarray:
        if self._bboxes is None:
            corners = self.corner_coords()
            self._bboxes = np.stack([corners.min(axis=1), corners.max(axis=1)])
        return self._bboxes

    def locate_point(self, x, tol: float = 1e-12, maxiter: int = 50) -> RefPoint | None:
        """Find the element containing x and its reference coordinates.

        Coarse phase: axis-aligned bounding boxes.  Fine phase: Newton
        inversion of the trilinear map.  Ties on shared faces go to the
        lowest element index.  Returns None when x is outside the mesh.
        """
        x = np.asarray(x, dtype=float)
        lo, hi = self.element_bboxes()
        pad = 1e-9 * self.h
        cand = np.nonzero(np.all((x >= lo - pad) & (x <= hi + pad), axis=1))[0]
        slack = 1e-10
        for e in cand:
            xi = self._invert_map(int(e), x, tol, maxiter)
            if xi is not None and np.all(np.abs(xi) <= 1.0 + slack):
                return RefPoint(int(e), np.clip(xi, -1.0, 1.0))
        return None

    def _invert_map(self, e: int, x: np.ndarray, tol: float, maxiter: int) -> np.ndarray | None:
        corners = self.corner_coords(e)
        xi = np.zeros(3)
        scale = max(self.h, 1e-30)
        for _ in range(maxiter):
            res = shape_functions(xi) @ corners - x
            if np.linalg.norm(res) < tol * scale:
                return xi
            jac = np.einsum("cx,cd->xd", corners, shape_gradients(xi))
            try:
                step = np.linalg.solve(jac, res)
            except np.linalg.LinAlgError:
                return None
            xi = xi - step
            if np.max(np.abs(xi)) > 3.0:  # diverging: x not in this element
                return None
        return None

    # -- file I/O ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": MESH_FORMAT_VERSION,
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
            "boundary": [[int(e), int(f), t] for e, f, t in self.boundary],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "HexMesh":
        if data.get("version") != MESH_FORMAT_VERSION:
            raise MeshError(f"unsupported mesh file version {data.get('version')!r}")
        boundary = [(int(e), int(f), str(t)) for e, f, t in data["boundary"]]
        return cls(np.array(data["vertices"], dtype=float), np.array(data["elements"], dtype=int), boundary)

    @classmethod
    def load(cls, path) -> "HexMesh":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


DEFAULT_BOX_TAGS = {
    "xmin": "xmin",
    "xmax": "xmax",
    "ymin": "ymin",
    "ymax": "ymax",
    "zmin": "zmin",
    "zmax": "zmax",
}


def generate_box_mesh(bounds, divisions, tags: dict[str, str] | None = None) -> HexMesh:
    """Structured hex mesh of an axis-aligned box.

    bounds: ((x0,x1), (y0,y1), (z0,z1)); divisions: (nx, ny, nz);
    tags: optional map from side key (xmin, xmax, ...) to tag name.
    """
    bounds = np.asarray(bounds, dtype=float)
    nx, ny, nz = (int(n) for n in divisions)
    if min(nx, ny, nz) < 1:
        raise ValueError("divisions must be >= 1")
    if np.any(bounds[:, 1] <= bounds[:, 0]):
        raise ValueError("box extents must be positive")
    t = dict(DEFAULT_BOX_TAGS)
    t.update(tags or {})

    xs = np.linspace(bounds[0, 0], bounds[0, 1], nx + 1)
    ys = np.linspace(bounds[1, 0], bounds[1, 1], ny + 1)
    zs = np.linspace(bounds[2, 0], bounds[2, 1], nz + 1)
    xg, yg, zg = np.meshgrid(xs, ys, zs, indexing="ij")
    vertices = np.stack([xg.ravel(), yg.ravel(), zg.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    elements = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                elements.append(
                    [
                        vid(i, j, k), vid(i + 1, j, k),
                        vid(i, j + 1, k), vid(i + 1, j + 1, k),
                        vid(i, j, k + 1), vid(i + 1, j, k + 1),
                        vid(i, j + 1, k + 1), vid(i + 1, j + 1, k + 1),
                    ]
                )

    def eid(i, j, k):
        return (i * ny + j) * nz + k

    boundary = []
    for j in range(ny):
        for k in range(nz):
            boundary.append((eid(0, j, k), 0, t["xmin"]))
            boundary.append((eid(nx - 1, j, k), 1, t["xmax"]))
    for i in range(nx):
        for k in range(nz):
            boundary.append((eid(i, 0, k), 2, t["ymin"]))
            boundary.append((eid(i, ny - 1, k), 3, t["ymax"]))
    for i in range(nx):
        for j in range(ny):
            boundary.append((eid(i, j, 0), 4, t["zmin"]))
            boundary.append((eid(i, j, nz - 1), 5, t["zmax"]))

    return HexMesh(vertices, np.array(elements, dtype=int), boundary)
