"""Independent hand-coded staggered-grid (component stencil) reference.

Fields are point-valued component arrays on the classic staggered layout;
updates are transcribed directly from the component update equations, with
PEC walls (tangential E pinned to zero, i.e. only interior components are
updated).  Used as the oracle for the operator-based integrator.
"""

import numpy as np


class YeeGrid2D:
    """Ex(i, j+0), Ey(i+0, j), Bz(i+1/2, j+1/2) on an nx x ny grid."""

    def __init__(self, nx, ny, dx, dy):
        self.nx, self.ny, self.dx, self.dy = nx, ny, dx, dy
        self.Ex = np.zeros((nx, ny + 1))
        self.Ey = np.zeros((nx + 1, ny))
        self.Bz = np.zeros((nx, ny))

    def step(self, dt):
        dx, dy = self.dx, self.dy
        self.Bz += dt * ((self.Ex[:, 1:] - self.Ex[:, :-1]) / dy
                         - (self.Ey[1:, :] - self.Ey[:-1, :]) / dx)
        Hz = self.Bz
        self.Ex[:, 1:-1] += dt * (Hz[:, 1:] - Hz[:, :-1]) / dy
        self.Ey[1:-1, :] += dt * (-(Hz[1:, :] - Hz[:-1, :]) / dx)

    def run(self, dt, steps):
        for _ in range(steps):
            self.step(dt)


class YeeGrid3D:
    """Classic 3-D staggered layout with PEC walls."""

    def __init__(self, n, d):
        nx, ny, nz = n
        self.n = n
        self.d = d
        self.Ex = np.zeros((nx, ny + 1, nz + 1))
        self.Ey = np.zeros((nx + 1, ny, nz + 1))
        self.Ez = np.zeros((nx + 1, ny + 1, nz))
        self.Bx = np.zeros((nx + 1, ny, nz))
        self.By = np.zeros((nx, ny + 1, nz))
        self.Bz = np.zeros((nx, ny, nz + 1))

    def step(self, dt):
        dx, dy, dz = self.d
        Ex, Ey, Ez = self.Ex, self.Ey, self.Ez
        self.Bx += dt * ((Ey[:, :, 1:] - Ey[:, :, :-1]) / dz
                         - (Ez[:, 1:, :] - Ez[:, :-1, :]) / dy)
        self.By += dt * ((Ez[1:, :, :] - Ez[:-1, :, :]) / dx
                         - (Ex[:, :, 1:] - Ex[:, :, :-1]) / dz)
        self.Bz += dt * ((Ex[:, 1:, :] - Ex[:, :-1, :]) / dy
                         - (Ey[1:, :, :] - Ey[:-1, :, :]) / dx)
        Hx, Hy, Hz = self.Bx, self.By, self.Bz
        self.Ex[:, 1:-1, 1:-1] += dt * ((Hz[:, 1:, 1:-1] - Hz[:, :-1, 1:-1]) / dy
                                        - (Hy[:, 1:-1, 1:] - Hy[:, 1:-1, :-1]) / dz)
        self.Ey[1:-1, :, 1:-1] += dt * ((Hx[1:-1, :, 1:] - Hx[1:-1, :, :-1]) / dz
                                        - (Hz[1:, :, 1:-1] - Hz[:-1, :, 1:-1]) / dx)
        self.Ez[1:-1, 1:-1, :] += dt * ((Hy[1:, 1:-1, :] - Hy[:-1, 1:-1, :]) / dx
                                        - (Hx[1:-1, 1:, :] - Hx[1:-1, :-1, :]) / dy)

    def run(self, dt, steps):
        for _ in range(steps):
            self.step(dt)


def load_2d_from_state(K, state):
    """Cochain E to component arrays; inverse scaling by edge lengths."""
    g = K.grid
    nx, ny = g.counts
    dx, dy = g.spacings(0)[0], g.spacings(1)[0]
    yee = YeeGrid2D(nx, ny, dx, dy)
    for i in range(nx):
        for j in range(ny + 1):
            yee.Ex[i, j] = state.E[g.locate(1, (0,), (i, j))] / dx
    for i in range(nx + 1):
        for j in range(ny):
            yee.Ey[i, j] = state.E[g.locate(1, (1,), (i, j))] / dy
    return yee


def compare_2d(K, state, yee):
    """Max component-space difference between a field state and the reference."""
    g = K.grid
    nx, ny = g.counts
    dx, dy = yee.dx, yee.dy
    err = 0.0
    for i in range(nx):
        for j in range(ny + 1):
            err = max(err, abs(state.E[g.locate(1, (0,), (i, j))] / dx - yee.Ex[i, j]))
    for i in range(nx + 1):
        for j in range(ny):
            err = max(err, abs(state.E[g.locate(1, (1,), (i, j))] / dy - yee.Ey[i, j]))
    for i in range(nx):
        for j in range(ny):
            err = max(err, abs(state.B[g.locate(2, (0, 1), (i, j))] / (dx * dy)
                               - yee.Bz[i, j]))
    return err


def load_3d_from_state(K, state):
    g = K.grid
    n = g.counts
    d = tuple(g.spacings(a)[0] for a in range(3))
    yee = YeeGrid3D(n, d)
    for ax, arr in ((0, yee.Ex), (1, yee.Ey), (2, yee.Ez)):
        for idx in np.ndindex(*arr.shape):
            arr[idx] = state.E[g.locate(1, (ax,), idx)] / d[ax]
    return yee


# The cochain for a face with ascending axes (a, b) stores the flux through
# the normal that makes (a, b, normal) positively oriented; for the (x, z)
# family that normal is -y, hence the sign flip on the By comparison.
_FACE_MAP_3D = (((1, 2), "Bx", 1.0), ((0, 2), "By", -1.0), ((0, 1), "Bz", 1.0))


def compare_3d(K, state, yee):
    g = K.grid
    d = yee.d
    err = 0.0
    for ax, name in ((0, "Ex"), (1, "Ey"), (2, "Ez")):
        arr = getattr(yee, name)
        for idx in np.ndindex(*arr.shape):
            err = max(err, abs(state.E[g.locate(1, (ax,), idx)] / d[ax] - arr[idx]))
    for axes, name, sign in _FACE_MAP_3D:
        arr = getattr(yee, name)
        area = d[axes[0]] * d[axes[1]]
        for idx in np.ndindex(*arr.shape):
            err = max(err, abs(sign * state.B[g.locate(2, axes, idx)] / area
                               - arr[idx]))
    return err
