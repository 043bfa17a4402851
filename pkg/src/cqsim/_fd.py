"""Finite-difference stencils along one axis of an array.

Second-order: 3-point central interior, second-order one-sided at the edges.
Fourth-order: 5-point central interior; the two outermost layers fall back
to the second-order stencils.
"""
import numpy as np


def diff1(u, h, axis=0, order=2):
    u = np.moveaxis(np.asarray(u, dtype=float), axis, 0)
    g = np.empty_like(u)
    g[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    g[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    if order == 4:
        g[2:-2] = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * h)
    elif order != 2:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    return np.moveaxis(g, 0, axis)


def diff2(u, h, axis=0, order=2):
    u = np.moveaxis(np.asarray(u, dtype=float), axis, 0)
    g = np.empty_like(u)
    g[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    g[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (h * h)
    g[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / (h * h)
    if order == 4:
        g[2:-2] = (-u[4:] + 16.0 * u[3:-1] - 30.0 * u[2:-2] + 16.0 * u[1:-3] - u[:-4]) / (12.0 * h * h)
    elif order != 2:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    return np.moveaxis(g, 0, axis)


def stencil_halo(order):
    """Number of edge layers not covered by the central stencil of ``order``."""
    return 1 if order == 2 else 2
