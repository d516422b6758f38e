"""Two-degree-of-freedom (heave, roll) ship model based on the Cummins equation.

    (M + Ma) S3'' + int K33(s) S3'(t - s) ds + C33 S3 = f3(t)
    (I + Ia) S4'' + int K44(s) S4'(t - s) ds + C44 S4 = f4(t)

The excitation is the linear Froude-Krylov load of the undisturbed incident
wave: the deep-water dynamic pressure at the keel, integrated exactly over the
flat bottom of a box hull for every Fourier mode of the surface elevation.
All quantities use g = rho = 1. Every numeric field may carry a leading
ensemble axis; members are advanced together.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_finite
from .exceptions import InvalidInputError, NumericalInstabilityError

HULL_DEFAULTS = {
    "waterplane_per_lambda_p": 0.08,
    "draft_per_hs": 2.68,
    "x_c": 1.2 * np.pi,
    "kc_per_hs": -1.34,
    "kg": 0.0,
    "mass": 3.78e-3,
    "added_mass": 1.31e-3,
    "inertia": 2.02e-6,
    "added_inertia": 9.89e-7,
}


@dataclass(frozen=True)
class ShipGeometry:
    """Box hull: footprint length ``waterplane`` (the beam ``B``) and ``draft`` ``D``.

    ``kb`` and ``kg`` are heights of the centres of buoyancy and mass above the keel.
    """

    waterplane: float
    draft: float
    x_c: float
    kb: float
    kg: float = 0.0
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        if not self.draft > 0:
            raise InvalidInputError("draft must be positive")
        if not 0 < self.waterplane < self.domain_length:
            raise InvalidInputError("waterplane length must lie in (0, domain_length)")
        if not 0 <= self.x_c < self.domain_length:
            raise InvalidInputError("x_c must lie in [0, domain_length)")
        lo, hi = self.footprint
        if lo < 0 or hi > self.domain_length:
            raise InvalidInputError(
                f"footprint [{lo:.4f}, {hi:.4f}] leaves the domain [0, {self.domain_length:.4f})")

    @property
    def beam(self):
        return self.waterplane

    @property
    def footprint(self):
        half = 0.5 * self.waterplane
        return self.x_c - half, self.x_c + half

    @property
    def metacentric_radius(self):
        return self.beam ** 2 / (12.0 * self.draft)

    @property
    def metacentric_height(self):
        return self.kb + self.metacentric_radius - self.kg

    @classmethod
    def reference_hull(cls, kp, hs, domain_length=2 * np.pi):
        lam_p = 2 * np.pi / kp
        return cls(
            waterplane=HULL_DEFAULTS["waterplane_per_lambda_p"] * lam_p,
            draft=HULL_DEFAULTS["draft_per_hs"] * hs,
            x_c=HULL_DEFAULTS["x_c"],
            kb=abs(HULL_DEFAULTS["kc_per_hs"]) * hs,
            kg=HULL_DEFAULTS["kg"],
            domain_length=domain_length,
        )


@dataclass(frozen=True)
class ImpulseKernel:
    """Samples ``K(j * dt_mem)`` for ``j = 0..n``; ``samples`` may be ``(N, n+1)``."""

    samples: np.ndarray
    dt_mem: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        check_finite(arr, "impulse kernel")
        if arr.shape[-1] < 1:
            raise InvalidInputError("kernel needs at least one sample")
        object.__setattr__(self, "samples", arr)

    @property
    def horizon(self):
        return (self.samples.shape[-1] - 1) * self.dt_mem

    @property
    def lags(self):
        return np.arange(self.samples.shape[-1]) * self.dt_mem

    @classmethod
    def zeros(cls, dt_mem, horizon):
        return cls(np.zeros(memory_length(dt_mem, horizon)), dt_mem)

    @classmethod
    def damped_cosine(cls, amplitude, decay, frequency, dt_mem, horizon):
        t = np.arange(memory_length(dt_mem, horizon)) * dt_mem
        return cls(amplitude * np.exp(-decay * t) * np.cos(frequency * t), dt_mem)


def memory_length(dt_mem, horizon):
    """Number of kernel samples, ``ceil(horizon / dt_mem) + 1``."""
    return int(np.ceil(horizon / dt_mem - 1e-9)) + 1


@dataclass(frozen=True)
class ShipParams:
    M: float
    Ma: object  # float or (N,) array when estimated per member
    I: float
    Ia: float
    C33: float
    C44: float
    kernel33: ImpulseKernel
    kernel44: ImpulseKernel

    def __post_init__(self):
        if np.any(self.M + np.asarray(self.Ma) <= 0):
            raise InvalidInputError("M + Ma must be positive")
        if not self.I + self.Ia > 0:
            raise InvalidInputError("I + Ia must be positive")
        if self.C33 < 0 or self.C44 < 0:
            raise InvalidInputError("restoring coefficients must be non-negative")
        if not np.isclose(self.kernel33.dt_mem, self.kernel44.dt_mem):
            raise InvalidInputError("heave and roll kernels must share dt_mem")

    @classmethod
    def from_geometry(cls, geom, kernel33, kernel44, M=HULL_DEFAULTS["mass"], Ma=HULL_DEFAULTS["added_mass"],
                      I=HULL_DEFAULTS["inertia"], Ia=HULL_DEFAULTS["added_inertia"]):
        """Wall-sided hydrostatics: ``C33 = S_w`` and ``C44 = M * GM``."""
        gm = geom.metacentric_height
        if gm < 0:
            raise InvalidInputError(f"negative metacentric height {gm:g}: roll is unstable")
        return cls(M, Ma, I, Ia, geom.waterplane, M * gm, kernel33, kernel44)


@dataclass(frozen=True)
class TruthKernelConstants:
    """Damped-cosine constants ``K(t) = kappa exp(-beta t) cos(nu t)`` for both DOFs."""

    kappa33: float = 0.025
    beta33: float = 2.0
    nu33: float = 3.0
    kappa44: float = 3.0e-5
    beta44: float = 2.0
    nu44: float = 3.0


def default_truth_kernel(dt_mem, horizon, constants=None):
    """Return ``(K33, K44)`` surrogates for the radiation impulse response."""
    c = constants or TruthKernelConstants()
    return (ImpulseKernel.damped_cosine(c.kappa33, c.beta33, c.nu33, dt_mem, horizon),
            ImpulseKernel.damped_cosine(c.kappa44, c.beta44, c.nu44, dt_mem, horizon))


@dataclass(frozen=True)
class ShipState:
    """Displacements, velocities and the velocity history used by the memory term.

    ``history[..., i, :]`` holds ``(V3, V4)`` at ``t - i * dt``; only the first
    ``n_valid`` rows are part of the motion record (earlier rows are before the
    start and read as zero).
    """

    S3: object
    S4: object
    V3: object
    V4: object
    history: np.ndarray
    n_valid: int = 1
    t: float = 0.0

    @classmethod
    def at_rest(cls, n_hist, members=None):
        shape = () if members is None else (members,)
        z = np.zeros(shape)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), np.zeros(shape + (n_hist, 2)), 1, 0.0)

    def as_array(self):
        """``[..., 4]`` array ``(S3, S4, V3, V4)``."""
        return np.stack(np.broadcast_arrays(self.S3, self.S4, self.V3, self.V4), axis=-1)

    def with_values(self, values):
        """Replace displacements/velocities (e.g. after an analysis update).

        The newest history row is overwritten with the new velocities so the
        memory integral sees the updated state.
        """
        values = np.asarray(values, dtype=float)
        hist = self.history.copy()
        hist[..., 0, 0] = values[..., 2]
        hist[..., 0, 1] = values[..., 3]
        return replace(self, S3=values[..., 0], S4=values[..., 1], V3=values[..., 2],
                       V4=values[..., 3], history=hist)


# --- Froude-Krylov excitation -------------------------------------------------

@dataclass
class FroudeKrylov:
    """Precomputed footprint integrals for a fixed grid and hull.

    For mode ``k`` the bottom integrals are exact:
    ``int e^{ikx} dx = e^{ik x_c} 2 sin(kb)/k`` and
    ``int (x - x_c) e^{ikx} dx = e^{ik x_c} 2i (sin(kb)/k^2 - b cos(kb)/k)``
    with ``b`` the half beam.
    """

    grid: object
    geom: ShipGeometry
    _force_w: np.ndarray = field(init=False, repr=False)
    _moment_w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.grid.k
        b = 0.5 * self.geom.beam
        phase = np.exp(1j * k * self.geom.x_c)
        force = np.empty_like(phase)
        moment = np.zeros_like(phase)
        force[0] = 2 * b
        kk = k[1:]
        force[1:] = phase[1:] * 2 * np.sin(kk * b) / kk
        moment[1:] = phase[1:] * 2j * (np.sin(kk * b) / kk ** 2 - b * np.cos(kk * b) / kk)
        # two-sided sum over the half spectrum; Nyquist excluded
        weight = np.full(k.shape, 2.0)
        weight[0] = 1.0
        weight[-1] = 0.0
        self._force_w = force * weight
        self._moment_w = moment * weight
        self._k = k

    def loads(self, eta_modes, heave=0.0):
        """``(f3, f4)`` from elevation modes (normalised by ``L``) with the keel at ``-(D - heave)``."""
        depth = self.geom.draft - np.asarray(heave, dtype=float)
        att = np.exp(-self._k * depth[..., None])
        p = eta_modes * att
        f3 = np.real(np.sum(p * self._force_w, axis=-1))
        f4 = np.real(np.sum(p * self._moment_w, axis=-1))
        return f3, f4


def froude_krylov(wf, geom, state=None):
    """Heave force and roll moment of the incident wave ``wf`` on the hull."""
    fk = FroudeKrylov(wf.grid, geom)
    modes = np.fft.rfft(wf.eta, axis=-1) / wf.grid.L
    heave = 0.0 if state is None else state.S3
    return fk.loads(modes, heave)


# --- memory convolution -------------------------------------------------------

def trapezoid_weights(n_samples, n_valid):
    """Trapezoid weights over the first ``min(n_valid, n_samples)`` lags."""
    m = min(int(n_valid), int(n_samples))
    w = np.zeros(n_samples)
    if m <= 1:
        return w
    w[:m] = 1.0
    w[0] = w[m - 1] = 0.5
    return w


def memory_convolution(kernel33, kernel44, history, n_valid=None):
    """Trapezoid-rule ``int_0^T K(s) V(t - s) ds`` for heave and roll.

    ``history[..., i, :]`` is the velocity pair at lag ``i * dt_mem``. With
    ``n_valid`` given the integral stops at the start of the record; otherwise
    the full kernel horizon is used.
    """
    n = kernel33.samples.shape[-1]
    hist = np.asarray(history, dtype=float)[..., :n, :]
    if hist.shape[-2] < n:
        pad = np.zeros(hist.shape[:-2] + (n - hist.shape[-2], 2))
        hist = np.concatenate([hist, pad], axis=-2)
    if n_valid is None:
        n_valid = n
    if n == 1:
        w = np.array([0.5])
    else:
        w = trapezoid_weights(n, n_valid)
    dt = kernel33.dt_mem
    m3 = dt * np.sum(w * kernel33.samples * hist[..., 0], axis=-1)
    m4 = dt * np.sum(w * kernel44.samples * hist[..., 1], axis=-1)
    return m3, m4


class CumminsIntegrator:
    """RK4 integrator for the heave/roll Cummins system with a velocity history.

    The memory integral at an RK4 stage time ``t + h`` uses the stage velocity
    at lag 0 and the stored history at lags ``h + i dt``; kernel values at
    half-step lags are linearly interpolated.
    """

    def __init__(self, params, dt):
        k33, k44 = params.kernel33, params.kernel44
        if not np.isclose(k33.dt_mem, dt):
            raise InvalidInputError("kernel spacing must equal the ship time step")
        self.params = params
        self.dt = float(dt)
        self.n_mem = k33.samples.shape[-1]
        self.m_tot = params.M + np.asarray(params.Ma, dtype=float)
        self.i_tot = params.I + params.Ia
        self._stage_kernels = {h: (self._shifted(k33.samples, h), self._shifted(k44.samples, h))
                               for h in (0.0, 0.5, 1.0)}

    @staticmethod
    def _shifted(samples, h):
        """Kernel at lags ``h*dt + i*dt`` for ``i = 0..n-1`` (zero past the horizon)."""
        s = np.asarray(samples, dtype=float)
        zero = np.zeros(s.shape[:-1] + (1,))
        ext = np.concatenate([s, zero], axis=-1)
        if h == 0.0:
            return s
        if h == 1.0:
            return ext[..., 1:]
        return 0.5 * (ext[..., :-1] + ext[..., 1:])

    def _memory(self, h, v3, v4, history, n_valid):
        """Memory terms at stage offset ``h`` (fraction of dt)."""
        dt = self.dt
        k3, k4 = self._stage_kernels[h]
        k0_3 = self.params.kernel33.samples[..., 0]
        k0_4 = self.params.kernel44.samples[..., 0]
        if h == 0.0:
            hist = history.copy()
            hist[..., 0, 0] = v3
            hist[..., 0, 1] = v4
            w = trapezoid_weights(self.n_mem, n_valid)
            return (dt * np.sum(w * k3 * hist[..., 0], axis=-1),
                    dt * np.sum(w * k4 * hist[..., 1], axis=-1))
        # first sub-interval [0, h*dt] between the stage velocity and history[0]
        hdt = h * dt
        m3 = 0.5 * hdt * (k0_3 * v3 + k3[..., 0] * history[..., 0, 0])
        m4 = 0.5 * hdt * (k0_4 * v4 + k4[..., 0] * history[..., 0, 1])
        m_valid = min(int(n_valid), self.n_mem)
        if m_valid > 1:
            w = trapezoid_weights(self.n_mem, m_valid)
            m3 = m3 + dt * np.sum(w * k3 * history[..., 0], axis=-1)
            m4 = m4 + dt * np.sum(w * k4 * history[..., 1], axis=-1)
        return m3, m4

    def _accel(self, h, s3, s4, v3, v4, history, n_valid, force):
        f3, f4 = force(h, s3)
        m3, m4 = self._memory(h, v3, v4, history, n_valid)
        a3 = (f3 - m3 - self.params.C33 * s3) / self.m_tot
        a4 = (f4 - m4 - self.params.C44 * s4) / self.i_tot
        return a3, a4

    def step(self, state, force):
        """Advance one step. ``force(h, S3)`` returns ``(f3, f4)`` at time ``t + h*dt``."""
        dt = self.dt
        s3, s4, v3, v4 = state.S3, state.S4, state.V3, state.V4
        hist, nv = state.history, state.n_valid

        def deriv(h, y):
            a3, a4 = self._accel(h, y[0], y[1], y[2], y[3], hist, nv, force)
            return (y[2], y[3], a3, a4)

        y0 = (s3, s4, v3, v4)
        k1 = deriv(0.0, y0)
        k2 = deriv(0.5, tuple(a + 0.5 * dt * b for a, b in zip(y0, k1)))
        k3 = deriv(0.5, tuple(a + 0.5 * dt * b for a, b in zip(y0, k2)))
        k4 = deriv(1.0, tuple(a + dt * b for a, b in zip(y0, k3)))
        y1 = tuple(a + dt / 6.0 * (p + 2 * q + 2 * r + s)
                   for a, p, q, r, s in zip(y0, k1, k2, k3, k4))
        for arr in y1:
            if not np.all(np.isfinite(arr)):
                raise NumericalInstabilityError(f"non-finite ship state at t={state.t + dt:g}")
        new_hist = np.roll(hist, 1, axis=-2)
        new_hist[..., 0, 0] = y1[2]
        new_hist[..., 0, 1] = y1[3]
        return ShipState(y1[0], y1[1], y1[2], y1[3], new_hist,
                         min(nv + 1, hist.shape[-2]), state.t + dt)


def cmi_step(state, params, geom, wf, dt, wf_next=None):
    """Advance the ship one step through the wave field ``wf`` (time ``t``).

    If ``wf_next`` (the wave at ``t + dt``) is given, the elevation is linearly
    interpolated in time for the RK4 stages; otherwise it is held fixed.
    """
    fk = FroudeKrylov(wf.grid, geom)
    m0 = np.fft.rfft(wf.eta, axis=-1) / wf.grid.L
    m1 = m0 if wf_next is None else np.fft.rfft(wf_next.eta, axis=-1) / wf.grid.L

    def force(h, s3):
        return fk.loads((1 - h) * m0 + h * m1, s3)

    return CumminsIntegrator(params, dt).step(state, force)


# --- kernel parameterisation for estimation ------------------------------------

def coarse_indices(n_samples, stride):
    idx = np.arange(0, n_samples, stride)
    if idx[-1] != n_samples - 1:
        idx = np.append(idx, n_samples - 1)
    return idx


def kernel_from_coarse(coarse, n_samples, stride):
    """Linear interpolation of coarse kernel nodes back onto the memory grid."""
    coarse = np.asarray(coarse, dtype=float)
    idx = coarse_indices(n_samples, stride)
    fine = np.arange(n_samples)
    if coarse.ndim == 1:
        return np.interp(fine, idx, coarse)
    return np.stack([np.interp(fine, idx, row) for row in coarse.reshape(-1, coarse.shape[-1])]
                    ).reshape(coarse.shape[:-1] + (n_samples,))


def coarse_from_kernel(samples, stride):
    samples = np.asarray(samples, dtype=float)
    return samples[..., coarse_indices(samples.shape[-1], stride)]
