"""High-order spectral (HOS) solver for deep-water surface waves in Zakharov form.

Units have gravity and density equal to one. The surface state is the pair
(eta, psi): elevation and velocity potential evaluated on the free surface.
The vertical surface velocity ``W = phi_z(x, eta)`` is obtained from the
Dommermuth & Yue mode-coupling recursion, and the evolution equations are

    eta_t = -eta_x psi_x + (1 + eta_x**2) W
    psi_t = -eta - psi_x**2 / 2 + (1 + eta_x**2) W**2 / 2

By default every term is kept to total order ``M`` in wave steepness (the
West et al. bookkeeping), so ``M=1`` is exactly linear theory. Setting
``consistent=False`` keeps all product terms regardless of ``M`` and only
truncates the ``W`` expansion.
"""
from dataclasses import dataclass, field, replace
from math import factorial

import numpy as np

from ._validation import check_field, check_in_interval, check_positive
from .exceptions import InvalidInputError, NumericalInstabilityError
from .spectral import Grid, lowpass_mask, pad_factor, padded_physical, truncated_modes


@dataclass(frozen=True)
class WaveField:
    """Surface elevation and potential on ``grid``; leading axes index members."""

    eta: np.ndarray
    psi: np.ndarray
    t: float = 0.0
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        eta = check_field(self.eta, self.grid.L, "eta")
        psi = check_field(self.psi, self.grid.L, "psi")
        if eta.shape != psi.shape:
            raise InvalidInputError("eta and psi must share one shape")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def quiescent(cls, grid=None):
        grid = grid or Grid()
        return cls(np.zeros(grid.L), np.zeros(grid.L), 0.0, grid)


@dataclass(frozen=True)
class HosConfig:
    M: int = 3
    dt: float = np.pi / 2 / 64
    breaking_cutoff: float = 0.75
    filter_every: int = 1
    consistent: bool = True

    def __post_init__(self):
        if int(self.M) < 1:
            raise InvalidInputError("HOS order M must be >= 1")
        check_positive(self.dt, "dt")
        check_in_interval(self.breaking_cutoff, "breaking_cutoff", 0.0, 1.0)
        if int(self.filter_every) < 0:
            raise InvalidInputError("filter_every must be >= 0 (0 disables the filter)")


class HosSolver:
    """Spectral right-hand side and RK4 integrator working on Fourier modes.

    Mode arrays have shape ``(..., L//2 + 1)``; batching over ensemble members
    along leading axes is free.
    """

    def __init__(self, grid, M=3, consistent=True):
        self.grid = grid
        self.M = int(M)
        if self.M < 1:
            raise InvalidInputError("HOS order M must be >= 1")
        self.consistent = bool(consistent)
        self.pad = pad_factor(self.M)
        k = grid.k.copy()
        k[-1] = 0.0
        self.kabs = k
        self.ik = 1j * k

    def _pad(self, modes):
        return padded_physical(modes, self.grid, self.pad)

    def _trunc(self, values):
        return truncated_modes(values, self.grid)

    def vertical_velocity_orders(self, eta_m, psi_m, eta_p=None):
        """Return ``[W1, ..., WM]``, the order-by-order surface vertical velocity modes."""
        M = self.M
        if eta_p is None:
            eta_p = self._pad(eta_m)
        # powers[l] = eta**l / l!
        powers = [None, eta_p]
        for lvl in range(2, M):
            powers.append(powers[-1] * eta_p / lvl)
        cache = {}

        def dz(m, lvl):
            # vertical derivative of order lvl of phi^(m) at z=0, on the padded grid
            key = (m, lvl)
            if key not in cache:
                cache[key] = self._pad(self.kabs ** lvl * phi[m])
            return cache[key]

        phi = {1: psi_m}
        for m in range(2, M + 1):
            acc = 0.0
            for lvl in range(1, m):
                acc = acc + powers[lvl] * dz(m - lvl, lvl)
            phi[m] = -self._trunc(acc)
        orders = [self.kabs * psi_m]
        for n in range(2, M + 1):
            acc = 0.0
            for m in range(1, n + 1):
                lvl = n - m
                term = dz(m, lvl + 1)
                acc = acc + (term if lvl == 0 else powers[lvl] * term)
            orders.append(self._trunc(acc))
        return orders

    def vertical_velocity(self, eta_m, psi_m):
        w = sum(self.vertical_velocity_orders(eta_m, psi_m))
        if not np.all(np.isfinite(w)):
            raise NumericalInstabilityError(
                "non-finite surface vertical velocity in the mode-coupling recursion")
        return w

    def rhs(self, eta_m, psi_m):
        """Time derivatives ``(eta_t, psi_t)`` as mode arrays."""
        M = self.M
        eta_p = self._pad(eta_m)
        w_orders = self.vertical_velocity_orders(eta_m, psi_m, eta_p)
        if not all(np.all(np.isfinite(w)) for w in w_orders):
            raise NumericalInstabilityError(
                "non-finite surface vertical velocity in the mode-coupling recursion")
        if M == 1 and self.consistent:
            return w_orders[0], -eta_m
        ex = self._pad(self.ik * eta_m)
        px = self._pad(self.ik * psi_m)
        ex2 = ex * ex
        w_p = [self._pad(w) for w in w_orders]
        if self.consistent:
            w_all = sum(w_p)
            deta = -ex * px + w_all
            if M >= 3:
                deta = deta + ex2 * sum(w_p[: M - 2])
            w2 = _truncated_square(w_p, M)
            dpsi = -0.5 * px * px + 0.5 * w2
            if M >= 4:
                dpsi = dpsi + 0.5 * ex2 * _truncated_square(w_p, M - 2)
            return self._trunc(deta), self._trunc(dpsi) - eta_m
        w_all = sum(w_p)
        deta = -ex * px + (1.0 + ex2) * w_all
        w2 = self._pad(self._trunc(w_all * w_all))
        dpsi = -0.5 * px * px + 0.5 * (1.0 + ex2) * w2
        return self._trunc(deta), self._trunc(dpsi) - eta_m

    def rk4(self, eta_m, psi_m, dt):
        k1 = self.rhs(eta_m, psi_m)
        k2 = self.rhs(eta_m + 0.5 * dt * k1[0], psi_m + 0.5 * dt * k1[1])
        k3 = self.rhs(eta_m + 0.5 * dt * k2[0], psi_m + 0.5 * dt * k2[1])
        k4 = self.rhs(eta_m + dt * k3[0], psi_m + dt * k3[1])
        eta_n = eta_m + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        psi_n = psi_m + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return eta_n, psi_n


def _truncated_square(w_p, n):
    """Sum of ``W_i W_j`` over ``i + j <= n`` (orders counted from one)."""
    acc = 0.0
    for i in range(1, n):
        for j in range(1, n + 1 - i):
            acc = acc + w_p[i - 1] * w_p[j - 1]
    return acc


def check_time_step(dt, grid, limit=0.5):
    """Reject time steps with ``dt * sqrt(k_max) >= limit``."""
    if dt * np.sqrt(grid.k_max) >= limit:
        raise InvalidInputError(
            f"dt={dt:g} too large for the grid: dt*sqrt(k_max)={dt * np.sqrt(grid.k_max):.3f}"
            f" >= {limit}")


def _modes(wf):
    n = wf.grid.L
    return np.fft.rfft(wf.eta, axis=-1) / n, np.fft.rfft(wf.psi, axis=-1) / n


def _physical(modes, grid):
    return np.fft.irfft(modes * grid.L, n=grid.L, axis=-1)


def surface_vertical_velocity(wf, M=3):
    """Vertical velocity ``phi_z`` on the free surface, summed to order ``M``."""
    solver = HosSolver(wf.grid, M)
    eta_m, psi_m = _modes(wf)
    return _physical(solver.vertical_velocity(eta_m, psi_m), wf.grid)


def rhs(wf, M=3, consistent=True):
    solver = HosSolver(wf.grid, M, consistent)
    eta_m, psi_m = _modes(wf)
    deta, dpsi = solver.rhs(eta_m, psi_m)
    return _physical(deta, wf.grid), _physical(dpsi, wf.grid)


class WavePropagator:
    """Advances wave fields in Fourier space with RK4 and the breaking filter."""

    def __init__(self, grid, cfg):
        check_time_step(cfg.dt, grid)
        self.grid = grid
        self.cfg = cfg
        self.solver = HosSolver(grid, cfg.M, cfg.consistent)
        self.mask = lowpass_mask(grid, cfg.breaking_cutoff)
        self.n_steps = 0

    def advance(self, eta_m, psi_m, n=1):
        """Take ``n`` steps; returns the new mode arrays."""
        every = int(self.cfg.filter_every)
        for _ in range(int(n)):
            eta_m, psi_m = self.solver.rk4(eta_m, psi_m, self.cfg.dt)
            self.n_steps += 1
            if every and self.n_steps % every == 0:
                eta_m = eta_m * self.mask
                psi_m = psi_m * self.mask
        if not (np.all(np.isfinite(eta_m)) and np.all(np.isfinite(psi_m))):
            raise NumericalInstabilityError(
                f"non-finite wave state after step {self.n_steps}")
        return eta_m, psi_m


def step(wf, cfg, n=1):
    """Advance ``wf`` by ``n`` RK4 steps of ``cfg.dt``."""
    prop = WavePropagator(wf.grid, cfg)
    eta_m, psi_m = _modes(wf)
    eta_m, psi_m = prop.advance(eta_m, psi_m, n)
    return replace(wf, eta=_physical(eta_m, wf.grid), psi=_physical(psi_m, wf.grid),
                   t=wf.t + n * cfg.dt)


def significant_steepness(eta, grid, kp=None):
    """``kp * Hs / 2`` with ``Hs = 4 std(eta)``; ``kp`` defaults to the spectral peak."""
    eta = np.asarray(eta, dtype=float)
    if kp is None:
        power = np.abs(np.fft.rfft(eta, axis=-1)) ** 2
        kp = grid.k[int(np.argmax(power[..., 1:].reshape(-1, grid.n_modes - 1).mean(0))) + 1]
    return kp * 2.0 * np.std(eta, axis=-1)


def diagnostics(wf, M=3, kp=None, consistent=True):
    """Return ``(mass, energy, steepness)`` of a wave field.

    The kinetic part uses the normal-velocity flux ``G(eta) psi``, which is
    exactly the ``eta_t`` of the evolution equations, so ``energy`` is the
    conserved Hamiltonian of the truncated system.
    """
    grid = wf.grid
    mass = np.sum(wf.eta, axis=-1) * grid.dx
    deta, _ = rhs(wf, M, consistent)
    energy = 0.5 * np.sum(wf.psi * deta + wf.eta ** 2, axis=-1) * grid.dx
    steep = significant_steepness(wf.eta, grid, kp)
    return mass, energy, steep
