"""Closed forms for the manufactured verification solution

    u(x,y,z,t) = sin(pi t) * sin(4 pi (x-1)(y-1)(z-1)) * sin(4 pi x y z)

on the unit cube with c0 = 1.  The forcing and Neumann data are derived
by hand using the product rule for the Laplacian,

    lap(g1 g2) = g2 lap(g1) + 2 grad(g1).grad(g2) + g1 lap(g2),

where both inner arguments (x-1)(y-1)(z-1) and xyz are harmonic, so the
lap(g) terms reduce to -16 pi^2 |grad|^2 sin(...).  Tests cross-check
the Laplacian against a finite-difference oracle at random points.
"""
from __future__ import annotations

import numpy as np

_W = 4.0 * np.pi


def _parts(x, y, z):
    a = (x - 1.0) * (y - 1.0) * (z - 1.0)
    b = x * y * z
    ga = np.stack([(y - 1.0) * (z - 1.0), (x - 1.0) * (z - 1.0), (x - 1.0) * (y - 1.0)])
    gb = np.stack([y * z, x * z, x * y])
    return a, b, ga, gb


def spatial(x, y, z):
    a, b, _, _ = _parts(x, y, z)
    return np.sin(_W * a) * np.sin(_W * b)


def spatial_gradient(x, y, z):
    """grad of the spatial factor, shape (3, ...)."""
    a, b, ga, gb = _parts(x, y, z)
    s1, c1 = np.sin(_W * a), np.cos(_W * a)
    s2, c2 = np.sin(_W * b), np.cos(_W * b)
    return _W * (c1 * s2 * ga + s1 * c2 * gb)


def spatial_laplacian(x, y, z):
    a, b, ga, gb = _parts(x, y, z)
    s1, c1 = np.sin(_W * a), np.cos(_W * a)
    s2, c2 = np.sin(_W * b), np.cos(_W * b)
    sq = (ga**2).sum(axis=0) + (gb**2).sum(axis=0)
    cross = (ga * gb).sum(axis=0)
    return -(_W**2) * sq * s1 * s2 + 2.0 * _W**2 * cross * c1 * c2


def exact(x, y, z, t):
    return np.sin(np.pi * t) * spatial(x, y, z)


def exact_velocity(x, y, z, t):
    return np.pi * np.cos(np.pi * t) * spatial(x, y, z)


def forcing(x, y, z, t):
    """f = u_tt - lap(u) for c0 = 1."""
    return np.sin(np.pi * t) * (-(np.pi**2) * spatial(x, y, z) - spatial_laplacian(x, y, z))


def neumann(normal):
    """Neumann datum du/dn on a face with constant outward normal."""
    normal = np.asarray(normal, dtype=float)

    def g(x, y, z, t):
        grad = spatial_gradient(x, y, z)
        return np.sin(np.pi * t) * np.einsum("d...,d->...", grad, normal)

    return g
