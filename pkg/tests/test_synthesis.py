import numpy as np
import pytest

from wavetwin.enkf import StateLayout
from wavetwin.exceptions import InvalidInputError
from wavetwin.hos import WaveField, significant_steepness
from wavetwin.ship import ShipState
from wavetwin.spectral import Grid
from wavetwin.synthesis import (
    JonswapSpec,
    NoiseModel,
    ObservationSelector,
    jonswap_amplitudes,
    jonswap_wavenumber_spectrum,
    measure,
    measurement_stds,
    noise_field,
    noise_shape,
    perturb_measurements,
    realize_jonswap,
    reconstruct_psi_linear,
    reconstructed_psi_variance,
    synthesize_observation,
)


def test_steepness_hits_target(grid):
    for seed in (1, 2, 3):
        wf = realize_jonswap(JonswapSpec(seed=seed), grid)
        kp = 16 * grid.k0
        assert significant_steepness(wf.eta, grid, kp) == pytest.approx(0.11, rel=0.02)


def test_gamma_one_is_pierson_moskowitz():
    k = np.linspace(1, 60, 500)
    s1 = jonswap_wavenumber_spectrum(k, 16.0, gamma=1.0)
    w = np.sqrt(k)
    pm = w ** -5 * np.exp(-1.25 * (4.0 / w) ** 4) / (2 * w)
    assert np.allclose(s1, pm, rtol=1e-12)
    s33 = jonswap_wavenumber_spectrum(k, 16.0, gamma=3.3)
    assert k[np.argmax(s33)] == pytest.approx(16.0, abs=0.2)


def test_band_limits_spectrum(grid):
    amp = jonswap_amplitudes(JonswapSpec(), grid)
    assert np.all(amp[grid.k > 48 + 1e-9] == 0)
    assert amp[0] == 0 and amp[-1] == 0
    assert np.argmax(amp) == 16


def test_seed_controls_phases(grid):
    a = realize_jonswap(JonswapSpec(seed=4), grid).eta
    b = realize_jonswap(JonswapSpec(seed=4), grid).eta
    c = realize_jonswap(JonswapSpec(seed=5), grid).eta
    assert np.array_equal(a, b) and not np.allclose(a, c)


def test_unresolvable_peak_rejected():
    with pytest.raises(InvalidInputError):
        jonswap_amplitudes(JonswapSpec(kp=40), Grid(128))
    with pytest.raises(InvalidInputError):
        JonswapSpec(gamma=0.5)


def test_reconstructed_psi_is_right_travelling(grid):
    wf = realize_jonswap(JonswapSpec(), grid)
    em = np.fft.rfft(wf.eta)
    pm = np.fft.rfft(wf.psi)
    k = grid.k[1:-1]
    left = np.sum(np.abs(em[1:-1] - 1j * np.sqrt(k) * pm[1:-1]) ** 2)
    total = np.sum(np.abs(em[1:-1]) ** 2)
    assert left / total < 1e-24


def test_reconstruct_single_mode(grid):
    eta = 0.01 * np.cos(5 * grid.x)
    assert np.allclose(reconstruct_psi_linear(eta, grid), 0.01 / np.sqrt(5) * np.sin(5 * grid.x),
                       atol=1e-15)


@pytest.mark.parametrize("spectrum", ["white", "wave"])
def test_noise_pointwise_std(grid, spectrum):
    amp = jonswap_amplitudes(JonswapSpec(), grid)
    filt = noise_shape(grid, spectrum, amp)
    rng = np.random.default_rng(0)
    z = noise_field((4000, grid.L), 0.3, grid, rng, filt)
    assert np.std(z) == pytest.approx(0.3, rel=0.01)


def test_wave_noise_follows_spectrum(grid):
    amp = jonswap_amplitudes(JonswapSpec(), grid)
    filt = noise_shape(grid, "wave", amp)
    z = noise_field((2000, grid.L), 1.0, grid, np.random.default_rng(1), filt)
    power = np.mean(np.abs(np.fft.rfft(z, axis=-1)) ** 2, axis=0)
    assert np.all(power[grid.k > 48.5] < 1e-20)
    assert np.argmax(power) in (15, 16, 17)


@pytest.mark.parametrize("spectrum", ["white", "wave"])
def test_reconstructed_psi_variance_matches_sampling(grid, spectrum):
    amp = jonswap_amplitudes(JonswapSpec(), grid)
    filt = None if spectrum == "white" else noise_shape(grid, spectrum, amp)
    rng = np.random.default_rng(2)
    z = noise_field((4000, grid.L), 0.2, grid, rng, filt)
    psi = reconstruct_psi_linear(z, grid)
    assert np.var(psi) == pytest.approx(reconstructed_psi_variance(0.2, grid, filt), rel=0.03)


def test_perturbation_statistics():
    rng = np.random.default_rng(3)
    pert = perturb_measurements([1.0, -2.0], [0.1, 0.5], 20000, rng)
    assert pert.members.shape == (20000, 2)
    assert np.allclose(pert.members.mean(axis=0), [1.0, -2.0], atol=0.01)
    assert np.allclose(pert.members.std(axis=0), [0.1, 0.5], rtol=0.02)
    assert np.allclose(pert.R_spec, [0.01, 0.25])
    with pytest.raises(InvalidInputError):
        perturb_measurements([1.0], [-1.0], 10, rng)


def test_zero_noise_reproduces_truth(grid):
    wf = realize_jonswap(JonswapSpec(), grid)
    ship = ShipState.at_rest(4)
    ship = ship.with_values(np.array([1e-3, 2e-3, 0.0, 0.0]))
    sel = ObservationSelector.from_name("all", grid)
    noise = NoiseModel(sigma_eta_frac=0.0, sigma_heave=0.0, sigma_roll=0.0)
    raw = measure(wf, ship, sel, noise, np.random.default_rng(0), np.std(wf.eta))
    assert np.allclose(raw, [wf.eta[128], wf.psi[128], 1e-3, 2e-3], atol=1e-15)


@pytest.mark.parametrize("name,dim", [("wave", 2), ("heave", 1), ("roll", 1), ("all", 4),
                                      ("ship", 2)])
def test_selector_dims(grid, name, dim):
    sel = ObservationSelector.from_name(name, grid)
    assert sel.dim == dim == len(sel.rows())
    if "eta" in sel.channels:
        assert sel.probes == (128,)


def test_selector_validation(grid):
    with pytest.raises(InvalidInputError):
        ObservationSelector.from_name("sonar", grid)
    with pytest.raises(InvalidInputError):
        ObservationSelector(("eta",), ())
    with pytest.raises(InvalidInputError):
        ObservationSelector(("pitch",))
    with pytest.raises(InvalidInputError):
        grid.index_of(0.001)


def test_observation_batch(grid):
    wf = realize_jonswap(JonswapSpec(), grid)
    sel = ObservationSelector.from_name("all", grid)
    noise = NoiseModel()
    layout = StateLayout(grid.L, 3)
    s_eta = float(np.std(wf.eta))
    batch = synthesize_observation(wf, ShipState.at_rest(4), sel, noise, 50,
                                   np.random.default_rng(0), s_eta, layout)
    assert batch.members.shape == (50, 4)
    assert batch.operator.indices == (128, 256 + 128, 512, 513)
    stds = measurement_stds(sel, noise, s_eta, 0.0, grid)
    assert np.allclose(np.diag(batch.R), stds ** 2)
    assert batch.raw.shape == (4,)


def test_noise_model_validation():
    with pytest.raises(InvalidInputError):
        NoiseModel(sigma_heave=-1.0)
    with pytest.raises(InvalidInputError):
        NoiseModel(spectrum="pink")


def test_wavefield_from_realisation_has_zero_mean(grid):
    wf = realize_jonswap(JonswapSpec(), grid)
    assert isinstance(wf, WaveField)
    assert abs(wf.eta.mean()) < 1e-16 and abs(wf.psi.mean()) < 1e-16
