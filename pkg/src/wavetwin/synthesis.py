"""Initial wave fields from a JONSWAP spectrum and synthetic noisy measurements."""
from dataclasses import dataclass

import numpy as np

from ._validation import check_ensemble_size, check_field
from .enkf import ObservationBatch, ObservationOperator
from .exceptions import InvalidInputError
from .hos import WaveField
from .spectral import Grid

CHANNELS = ("eta", "psi", "heave", "roll")
NOISE_SPECTRA = ("white", "wave")
SELECTORS = {
    "wave": ("eta", "psi"),
    "heave": ("heave",),
    "roll": ("roll",),
    "ship": ("heave", "roll"),
    "all": ("eta", "psi", "heave", "roll"),
}


@dataclass(frozen=True)
class JonswapSpec:
    """Peak wavenumber as a multiple of ``k0``, global steepness ``kp*Hs/2`` and peak factor."""

    kp: float = 16.0
    steepness: float = 0.11
    gamma: float = 3.3
    seed: int = 1
    band: float = 3.0  # highest synthesised wavenumber in units of kp

    def __post_init__(self):
        if self.kp < 1:
            raise InvalidInputError("kp must be at least one fundamental wavenumber")
        if not self.steepness > 0:
            raise InvalidInputError("steepness must be positive")
        if self.gamma < 1:
            raise InvalidInputError("gamma must be >= 1")
        if not self.band > 1:
            raise InvalidInputError("band must exceed the peak (band > 1)")

    def peak_wavenumber(self, grid):
        return self.kp * grid.k0

    def significant_height(self, grid):
        return 2.0 * self.steepness / self.peak_wavenumber(grid)


@dataclass(frozen=True)
class NoiseModel:
    """Measurement error standard deviations.

    Wave noise is relative to the standard deviation of the true elevation;
    ship noise is absolute (heave in length units, roll in radians).
    ``spectrum`` selects the spatial structure of the elevation noise:
    ``"white"`` is independent from node to node, ``"wave"`` has the variance
    spectrum of the wave field itself. Both have pointwise std
    ``sigma_eta_frac * sigma_eta``.
    """

    sigma_eta_frac: float = 0.316
    sigma_psi_frac: float = 0.0
    sigma_heave: float = 0.05 * 2 * 0.11 / 16
    sigma_roll: float = np.deg2rad(0.05)
    seed: int = 1
    spectrum: str = "wave"

    def __post_init__(self):
        if self.spectrum not in NOISE_SPECTRA:
            raise InvalidInputError(f"noise spectrum must be one of {NOISE_SPECTRA}")
        for name in ("sigma_eta_frac", "sigma_psi_frac", "sigma_heave", "sigma_roll"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")


@dataclass
class PerturbedMeasurementEnsemble:
    members: np.ndarray  # (N, d)
    mean: np.ndarray  # (d,) the raw measurement
    R_spec: np.ndarray  # (d,) per-channel variances used for the draws

    @property
    def n_members(self):
        return self.members.shape[0]


@dataclass(frozen=True)
class ObservationSelector:
    """Which channels are measured; wave channels are read at grid nodes ``probes``."""

    channels: tuple = SELECTORS["all"]
    probes: tuple = ()

    def __post_init__(self):
        if not self.channels:
            raise InvalidInputError("selector must name at least one channel")
        bad = set(self.channels) - set(CHANNELS)
        if bad:
            raise InvalidInputError(f"unknown channels {sorted(bad)}")
        if ({"eta", "psi"} & set(self.channels)) and not self.probes:
            raise InvalidInputError("wave channels need at least one probe index")

    @classmethod
    def from_name(cls, name, grid=None, probe_x=np.pi):
        if name not in SELECTORS:
            raise InvalidInputError(f"unknown selector {name!r}; expected one of {sorted(SELECTORS)}")
        channels = SELECTORS[name]
        probes = ()
        if {"eta", "psi"} & set(channels):
            grid = grid or Grid()
            xs = np.atleast_1d(probe_x)
            probes = tuple(grid.index_of(x) for x in xs)
        return cls(channels, probes)

    @property
    def dim(self):
        n_wave = sum(ch in self.channels for ch in ("eta", "psi"))
        n_ship = sum(ch in self.channels for ch in ("heave", "roll"))
        return n_wave * len(self.probes) + n_ship

    def rows(self):
        """``(channel, probe_index_or_None)`` for each measurement entry, in order."""
        out = []
        for ch in ("eta", "psi"):
            if ch in self.channels:
                out.extend((ch, p) for p in self.probes)
        for ch in ("heave", "roll"):
            if ch in self.channels:
                out.append((ch, None))
        return out


def jonswap_wavenumber_spectrum(k, kp, gamma=3.3, alpha=1.0):
    """Deep-water JONSWAP density in wavenumber, ``S(k) = S(w) dw/dk`` with ``w = sqrt(k)``.

    ``alpha`` only scales the result; callers normalise to the target height.
    """
    k = np.asarray(k, dtype=float)
    out = np.zeros_like(k)
    pos = k > 0
    w = np.sqrt(k[pos])
    wp = np.sqrt(kp)
    sigma = np.where(w <= wp, 0.07, 0.09)
    r = np.exp(-((w - wp) ** 2) / (2 * sigma ** 2 * wp ** 2))
    s_w = alpha * w ** -5 * np.exp(-1.25 * (wp / w) ** 4) * gamma ** r
    out[pos] = s_w / (2 * w)
    return out


def jonswap_amplitudes(spec, grid, k_cut=None):
    """Mode amplitudes ``a_m`` for ``m = 0..L/2`` scaled to the target ``Hs``.

    Modes above ``k_cut`` (default ``spec.band * kp``, never beyond the
    breaking-filter cutoff ``0.75 k_max``) are left empty.
    """
    kp = spec.peak_wavenumber(grid)
    if kp >= grid.k_max / 4:
        raise InvalidInputError(
            f"kp={kp:g} not resolvable: needs kp < k_max/4 = {grid.k_max / 4:g}")
    if k_cut is None:
        k_cut = min(spec.band * kp, 0.75 * grid.k_max)
    k = grid.k
    amp = np.sqrt(2.0 * jonswap_wavenumber_spectrum(k, kp, spec.gamma) * grid.k0)
    amp[k > k_cut * (1 + 1e-12)] = 0.0
    amp[-1] = 0.0
    # std(eta) = sqrt(sum a^2 / 2) exactly on the grid
    hs_target = spec.significant_height(grid)
    amp *= hs_target / (4.0 * np.sqrt(0.5 * np.sum(amp ** 2)))
    return amp


def realize_jonswap(spec, grid=None):
    """Random-phase, right-travelling JONSWAP wave field with exact target steepness."""
    grid = grid or Grid()
    amp = jonswap_amplitudes(spec, grid)
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=grid.n_modes)
    modes = 0.5 * amp * np.exp(1j * phases)
    eta = np.fft.irfft(modes * grid.L, n=grid.L)
    return WaveField(eta, reconstruct_psi_linear(eta, grid), 0.0, grid)


def reconstruct_psi_linear(eta, grid):
    """Surface potential of a right-travelling linear wave train with elevation ``eta``.

    Per mode ``psi_k = -i sign(k) eta_k / sqrt(|k|)``; the mean and Nyquist modes are zeroed.
    """
    eta = check_field(eta, grid.L, "eta")
    modes = np.fft.rfft(eta, axis=-1)
    k = grid.k
    factor = np.zeros(grid.n_modes, dtype=complex)
    factor[1:-1] = -1j / np.sqrt(k[1:-1])
    return np.fft.irfft(modes * factor, n=grid.L, axis=-1)


def noise_shape(grid, spectrum="white", amplitudes=None):
    """Per-mode filter ``s_k`` for correlated noise with unit pointwise variance.

    White noise has ``s_k = 1``. For ``"wave"`` the filter follows the wave
    amplitudes, so the noise variance spectrum is proportional to the wave
    spectrum. Normalisation: ``sum over all two-sided modes of s_k**2 == L``.
    """
    if spectrum == "white":
        return np.ones(grid.n_modes)
    if spectrum != "wave":
        raise InvalidInputError(f"noise spectrum must be one of {NOISE_SPECTRA}")
    if amplitudes is None:
        raise InvalidInputError("wave-shaped noise needs the wave amplitudes")
    s = np.abs(np.asarray(amplitudes, dtype=float))
    if s.shape != (grid.n_modes,) or not np.any(s > 0):
        raise InvalidInputError("amplitudes must be a nonzero length-(L/2+1) array")
    return s * np.sqrt(grid.L / _two_sided_sum(s ** 2))


def _two_sided_sum(half):
    return half[0] + 2.0 * np.sum(half[1:-1]) + half[-1]


def noise_field(shape, sigma, grid, rng, filt=None):
    """Zero-mean Gaussian field(s) of pointwise std ``sigma`` filtered by ``filt``."""
    white = rng.standard_normal(tuple(np.atleast_1d(shape)))
    if filt is None:
        return sigma * white
    modes = np.fft.rfft(white, axis=-1) * filt
    return sigma * np.fft.irfft(modes, n=grid.L, axis=-1)


def reconstructed_psi_variance(sigma_eta, grid, filt=None):
    """Pointwise variance of ``reconstruct_psi_linear`` applied to noise of std ``sigma_eta``.

    ``filt`` is the noise filter from :func:`noise_shape`; ``None`` means white.
    """
    k = grid.k[1:-1]
    s2 = np.ones(k.size) if filt is None else np.asarray(filt, dtype=float)[1:-1] ** 2
    return sigma_eta ** 2 * np.sum(2.0 * s2 / (grid.L * k))


def perturb_measurements(raw, stds, n_members, rng):
    """Ensemble ``raw + e_n`` with independent zero-mean Gaussian ``e_n`` of per-channel ``stds``."""
    n_members = check_ensemble_size(n_members)
    raw = np.atleast_1d(np.asarray(raw, dtype=float))
    stds = np.broadcast_to(np.asarray(stds, dtype=float), raw.shape)
    if np.any(stds < 0):
        raise InvalidInputError("noise standard deviations must be non-negative")
    members = raw + stds * rng.standard_normal((n_members,) + raw.shape)
    return PerturbedMeasurementEnsemble(members, raw.copy(), stds ** 2)


def noisy_wave_measurement(eta_true, sigma_eta, grid, rng, sigma_psi=0.0, filt=None):
    """Full-field measurement: noisy eta, psi rebuilt from it by linear theory.

    ``eta_true`` may carry leading member axes; every row gets its own noise.
    """
    eta_m = eta_true + noise_field(np.shape(eta_true), sigma_eta, grid, rng, filt)
    psi_m = reconstruct_psi_linear(eta_m, grid)
    if sigma_psi > 0:
        psi_m = psi_m + sigma_psi * rng.standard_normal(np.shape(psi_m))
    return eta_m, psi_m


def measurement_stds(selector, noise, sigma_eta_field, sigma_psi_field, grid, filt=None):
    """Per-row noise standard deviations for ``selector`` (matches ``selector.rows()``)."""
    s_eta = noise.sigma_eta_frac * sigma_eta_field
    s_psi = np.sqrt(reconstructed_psi_variance(s_eta, grid, filt)
                    + (noise.sigma_psi_frac * sigma_psi_field) ** 2)
    table = {"eta": s_eta, "psi": s_psi, "heave": noise.sigma_heave, "roll": noise.sigma_roll}
    return np.array([table[ch] for ch, _ in selector.rows()])


def measure(wave, ship, selector, noise, rng, sigma_eta_field, sigma_psi_field=0.0, filt=None):
    """One raw noisy measurement vector of the truth, ordered as ``selector.rows()``.

    ``ship`` is any object with ``S3`` and ``S4`` attributes.
    """
    grid = wave.grid
    s_eta = noise.sigma_eta_frac * sigma_eta_field
    s_psi_extra = noise.sigma_psi_frac * sigma_psi_field
    raw = []
    if {"eta", "psi"} & set(selector.channels):
        eta_m, psi_m = noisy_wave_measurement(wave.eta, s_eta, grid, rng, s_psi_extra, filt)
        idx = list(selector.probes)
        if "eta" in selector.channels:
            raw.extend(eta_m[idx])
        if "psi" in selector.channels:
            raw.extend(psi_m[idx])
    if "heave" in selector.channels:
        raw.append(float(ship.S3) + noise.sigma_heave * rng.standard_normal())
    if "roll" in selector.channels:
        raw.append(float(ship.S4) + noise.sigma_roll * rng.standard_normal())
    return np.array(raw)


def synthesize_observation(wave, ship, selector, noise, n_members, rng, sigma_eta_field,
                           layout, sigma_psi_field=0.0, filt=None, r_mode="known",
                           perturb_rng=None):
    """Noisy measurement of the truth turned into an :class:`ObservationBatch`.

    The raw vector is kept on the batch as ``raw``; ``layout`` fixes where
    each measured channel sits in the state vector. Member perturbations are
    drawn from ``perturb_rng`` when given, so the raw measurement stream does
    not depend on the ensemble size.
    """
    raw = measure(wave, ship, selector, noise, rng, sigma_eta_field, sigma_psi_field, filt)
    stds = measurement_stds(selector, noise, sigma_eta_field, sigma_psi_field, wave.grid, filt)
    pert = perturb_measurements(raw, stds, n_members, perturb_rng or rng)
    operator = ObservationOperator.from_selector(selector, layout)
    return ObservationBatch.from_perturbed(pert, operator, wave.t, r_mode)
