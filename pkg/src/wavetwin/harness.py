"""Twin experiment: truth run, synthetic observations, EnKF and no-DA forecasts.

The truth, the no-DA forecast and the ``N`` ensemble members are propagated
together as one batch (rows 0, 1 and 2.. respectively), so every member sees
exactly the same solver. Only the member rows are touched by the analysis.
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .enkf import EnsembleState, StateLayout, analysis, clamp_block, inflate
from .exceptions import InvalidInputError, NumericalInstabilityError, WaveTwinError
from .hos import HosConfig, WaveField, WavePropagator, significant_steepness
from .ship import (
    CumminsIntegrator,
    FroudeKrylov,
    ImpulseKernel,
    ShipGeometry,
    ShipParams,
    ShipState,
    TruthKernelConstants,
    coarse_from_kernel,
    coarse_indices,
    default_truth_kernel,
    kernel_from_coarse,
    memory_length,
)
from .spectral import Grid
from .synthesis import (
    JonswapSpec,
    NoiseModel,
    ObservationSelector,
    jonswap_amplitudes,
    measure,
    noise_field,
    noise_shape,
    noisy_wave_measurement,
    realize_jonswap,
    reconstruct_psi_linear,
    synthesize_observation,
)

log = logging.getLogger("wavetwin")

WAVE_ERROR_COLUMNS = ("t_over_Tp", "eps_noda", "eps_da")
SHIP_MOTION_COLUMNS = ("t_over_Tp", "S3_true", "S3_da", "S3_noda", "S4_true", "S4_da", "S4_noda")
PARAMS_COLUMNS = ("t_over_Tp", "Ma_rel_err", "kernel_rmse")
KERNEL_COLUMNS = ("lag", "K33_true", "K33_est")

# independent random streams spawned from the run seed
_STREAMS = ("initial", "ensemble", "params", "measure", "perturb")


def error_metric(eta_sim, eta_true, sigma_eta=None):
    """Normalised squared elevation error ``mean|eta_true - eta_sim|^2 / (2 sigma^2)``.

    On a uniform periodic grid the trapezoid rule is the plain mean.
    ``sigma_eta`` defaults to the standard deviation of ``eta_true``.
    """
    eta_true = np.asarray(eta_true, dtype=float)
    eta_sim = np.asarray(eta_sim, dtype=float)
    if eta_sim.shape[-1] != eta_true.shape[-1]:
        raise InvalidInputError("simulated and true elevations live on different grids")
    if sigma_eta is None:
        sigma_eta = np.std(eta_true, axis=-1)
    return np.mean((eta_true - eta_sim) ** 2, axis=-1) / (2.0 * np.asarray(sigma_eta) ** 2)


@dataclass(frozen=True)
class ErrorSeries:
    """``eps`` at ``times`` (in Tp) with optional parameter-error traces of equal length."""

    times: np.ndarray
    eps: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.eps, dtype=float)
        if t.shape != e.shape:
            raise InvalidInputError("times and eps must have equal lengths")
        if np.any(e < 0):
            raise InvalidInputError("error values must be non-negative")
        for name, v in self.params.items():
            if np.shape(v) != t.shape:
                raise InvalidInputError(f"parameter trace {name!r} is misaligned")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "eps", e)


@dataclass
class TruthTrajectory:
    times: np.ndarray  # t / Tp
    eta: np.ndarray
    psi: np.ndarray
    ship: np.ndarray  # (n, 4): S3, S4, V3, V4
    grid: Grid

    def wave(self, i):
        return WaveField(self.eta[i], self.psi[i], self.times[i], self.grid)


@dataclass
class ExperimentResult:
    selector: str
    da: ErrorSeries
    noda: ErrorSeries
    eps_pre: np.ndarray
    motion: dict
    kernels: dict
    clamp_events: int
    runtime: float


@dataclass(frozen=True)
class _ShipView:
    S3: float
    S4: float


class TwinSetup:
    """All fixed ingredients of one experiment, derived from the config."""

    def __init__(self, cfg, selector=None):
        self.cfg = cfg
        g = self.grid = Grid(cfg.grid.L, cfg.grid.domain_length)
        j = cfg.jonswap
        self.spec = JonswapSpec(j.kp, j.steepness, j.gamma, j.seed, j.band)
        self.hs = self.spec.significant_height(g)
        self.amp = jonswap_amplitudes(self.spec, g)
        self.truth0 = realize_jonswap(self.spec, g)
        self.dt = cfg.dt
        self.Tp = cfg.Tp
        self.hos = HosConfig(cfg.hos.M, self.dt, cfg.hos.breaking_cutoff, cfg.hos.filter_every)

        s = cfg.ship
        lam_p = 2 * np.pi / self.spec.peak_wavenumber(g)
        self.geom = ShipGeometry(s.waterplane_per_lambda_p * lam_p, s.draft_per_hs * self.hs,
                                 s.x_c, abs(s.kc_per_hs) * self.hs, s.kg, g.domain_length)
        horizon = s.memory_horizon_tp * self.Tp
        self.n_mem = memory_length(self.dt, horizon)
        consts = TruthKernelConstants(s.kappa33, s.beta33, s.nu33, s.kappa44, s.beta44, s.nu44)
        self.k33_true, self.k44_true = default_truth_kernel(self.dt, horizon, consts)
        e = cfg.enkf
        self.k33_guess = ImpulseKernel.damped_cosine(
            e.kernel_guess_kappa, e.kernel_guess_beta, e.kernel_guess_nu, self.dt, horizon)
        self.stride = e.kernel_stride
        self.n_coarse = coarse_indices(self.n_mem, self.stride).size

        o = cfg.observation
        self.noise = NoiseModel(o.sigma_eta_frac, o.sigma_psi_frac, o.sigma_heave_hs * self.hs,
                                np.deg2rad(o.sigma_roll_deg), cfg.run.seed, o.noise_spectrum)
        self.filt = None if o.noise_spectrum == "white" else noise_shape(g, o.noise_spectrum, self.amp)
        self.selector_name = selector or o.selector
        self.selector = ObservationSelector.from_name(self.selector_name, g, o.probe_x)
        self.layout = StateLayout(g.L, 1 + self.n_coarse if e.augment else 0)
        seeds = np.random.SeedSequence(cfg.run.seed).spawn(len(_STREAMS))
        self.rngs = {name: np.random.default_rng(sq) for name, sq in zip(_STREAMS, seeds)}

    def params(self, Ma, coarse):
        """Batched ship parameters from per-row added masses and coarse K33 nodes."""
        Ma = np.asarray(Ma, dtype=float)
        k33 = kernel_from_coarse(coarse, self.n_mem, self.stride)
        k44 = np.broadcast_to(self.k44_true.samples, k33.shape)
        s = self.cfg.ship
        return ShipParams.from_geometry(self.geom, ImpulseKernel(k33, self.dt),
                                        ImpulseKernel(k44, self.dt), M=s.mass, Ma=Ma,
                                        I=s.inertia, Ia=s.added_inertia)

    def fields(self, modes):
        return np.fft.irfft(modes * self.grid.L, n=self.grid.L, axis=-1)

    def to_modes(self, values):
        return np.fft.rfft(values, axis=-1) / self.grid.L


def _advance(prop, integ, fk, em, pm, ship, n):
    for _ in range(n):
        em1, pm1 = prop.advance(em, pm)
        ship = integ.step(ship, lambda h, s3, a=em, b=em1: fk.loads((1 - h) * a + h * b, s3))
        em, pm = em1, pm1
    return em, pm, ship


def run_truth(cfg):
    """Reference HOS-CMI run with snapshots at every DA interval."""
    su = TwinSetup(cfg)
    s = cfg.ship
    k33 = su.k33_true.samples[None]
    params = su.params(np.array([s.added_mass]), coarse_from_kernel(k33, su.stride))
    # the coarse round trip would blur the true kernel; use it exactly
    params = ShipParams(params.M, params.Ma, params.I, params.Ia, params.C33, params.C44,
                        ImpulseKernel(k33, su.dt), params.kernel44)
    prop = WavePropagator(su.grid, su.hos)
    fk = FroudeKrylov(su.grid, su.geom)
    integ = CumminsIntegrator(params, su.dt)
    em, pm = su.to_modes(su.truth0.eta[None]), su.to_modes(su.truth0.psi[None])
    ship = ShipState.at_rest(su.n_mem, 1)
    n = cfg.n_cycles
    eta = np.empty((n + 1, su.grid.L))
    psi = np.empty_like(eta)
    motion = np.empty((n + 1, 4))
    eta[0], psi[0], motion[0] = su.truth0.eta, su.truth0.psi, ship.as_array()[0]
    for c in range(n):
        try:
            em, pm, ship = _advance(prop, integ, fk, em, pm, ship, cfg.steps_per_cycle)
        except NumericalInstabilityError as err:
            raise NumericalInstabilityError(
                f"truth run failed in cycle {c} (t/Tp={(c + 1) * _cycle_tp(cfg):g}): {err}") from err
        eta[c + 1] = su.fields(em)[0]
        psi[c + 1] = su.fields(pm)[0]
        motion[c + 1] = ship.as_array()[0]
    times = np.arange(n + 1) * _cycle_tp(cfg)
    return TruthTrajectory(times, eta, psi, motion, su.grid)


def _cycle_tp(cfg):
    return cfg.steps_per_cycle / cfg.hos.steps_per_tp


def observe(cfg, truth=None, selector=None):
    """Raw noisy measurements of the truth at every DA time after the start.

    Returns ``(times, values, column_names)``; the stream is the one used by
    :func:`run_experiment`, so both see identical measurements.
    """
    truth = truth or run_truth(cfg)
    su = TwinSetup(cfg, selector)
    rng = su.rngs["measure"]
    rows = []
    for i in range(1, truth.times.size):
        wave = truth.wave(i)
        ship = _ShipView(truth.ship[i, 0], truth.ship[i, 1])
        rows.append(measure(wave, ship, su.selector, su.noise, rng, np.std(wave.eta),
                            np.std(wave.psi), su.filt))
    names = [ch if p is None else f"{ch}_x{p}" for ch, p in su.selector.rows()]
    values = np.array(rows).reshape(len(rows), len(names))
    return truth.times[1:], values, names


def run_experiment(cfg, selector=None, out_dir=None):
    """Full twin experiment; writes the CSV outputs when ``out_dir`` is given."""
    t_start = time.perf_counter()
    su = TwinSetup(cfg, selector)
    g, e, N = su.grid, cfg.enkf, cfg.enkf.n_members
    layout = su.layout
    log.info("selector=%s N=%d M=%d dt=%.6g tau=%d steps cycles=%d seed=%d jonswap_seed=%d "
             "noise=%s", su.selector_name, N, cfg.hos.M, su.dt, cfg.steps_per_cycle,
             cfg.n_cycles, cfg.run.seed, cfg.jonswap.seed, cfg.observation.noise_spectrum)

    # initial condition: truth, noisy full-field measurement, perturbed members
    truth0 = su.truth0
    sig_eta0 = np.std(truth0.eta)
    s_eta = su.noise.sigma_eta_frac * sig_eta0
    s_psi = su.noise.sigma_psi_frac * np.std(truth0.psi)
    eta_m0, psi_m0 = noisy_wave_measurement(truth0.eta, s_eta, g, su.rngs["initial"], s_psi,
                                            su.filt)
    rng_ens = su.rngs["ensemble"]
    eta_ens = eta_m0 + noise_field((N, g.L), s_eta, g, rng_ens, su.filt)
    psi_ens = reconstruct_psi_linear(eta_ens, g)
    if s_psi > 0:
        psi_ens = psi_ens + s_psi * rng_ens.standard_normal(psi_ens.shape)
    em = su.to_modes(np.vstack([truth0.eta[None], eta_m0[None], eta_ens]))
    pm = su.to_modes(np.vstack([truth0.psi[None], psi_m0[None], psi_ens]))

    # parameters: row 0 exact, row 1 the initial guess, members guess + spread
    ma_true = cfg.ship.added_mass
    ma_guess = e.ma_guess_factor * ma_true
    coarse_true = coarse_from_kernel(su.k33_true.samples, su.stride)
    coarse_guess = coarse_from_kernel(su.k33_guess.samples, su.stride)
    rng_par = su.rngs["params"]
    Ma = np.full(N + 2, ma_guess)
    coarse = np.broadcast_to(coarse_guess, (N + 2, su.n_coarse)).copy()
    if e.augment:
        Ma[2:] *= 1.0 + e.ma_spread * rng_par.standard_normal(N)
        # member kernels are damped cosines with perturbed constants, hence passive
        z = rng_par.standard_normal((3, N, 1))
        kappa = e.kernel_guess_kappa * np.maximum(1.0 + e.kernel_kappa_spread * z[0], 0.0)
        beta = e.kernel_guess_beta * np.maximum(1.0 + e.kernel_beta_spread * z[1], 0.0)
        nu = e.kernel_guess_nu * (1.0 + e.kernel_nu_spread * z[2])
        lags = su.k33_guess.lags
        coarse[2:] = coarse_from_kernel(kappa * np.exp(-beta * lags) * np.cos(nu * lags),
                                        su.stride)
        Ma[2:] = np.clip(Ma[2:], e.ma_min, e.ma_max)
        coarse[2:] = np.clip(coarse[2:], -e.kernel_bound, e.kernel_bound)
    Ma[0] = ma_true
    coarse[0] = coarse_true

    def build_integrator():
        p = su.params(Ma, coarse)
        k33 = p.kernel33.samples.copy()
        k33[0] = su.k33_true.samples
        p = ShipParams(p.M, p.Ma, p.I, p.Ia, p.C33, p.C44, ImpulseKernel(k33, su.dt), p.kernel44)
        return CumminsIntegrator(p, su.dt)

    prop = WavePropagator(g, su.hos)
    fk = FroudeKrylov(g, su.geom)
    integ = build_integrator()
    ship = ShipState.at_rest(su.n_mem, N + 2)

    n = cfg.n_cycles
    cyc_tp = _cycle_tp(cfg)
    times = np.arange(n + 1) * cyc_tp
    eps_da = np.empty(n + 1)
    eps_noda = np.empty(n + 1)
    eps_pre = np.full(n + 1, np.nan)
    motion = np.empty((n + 1, 6))
    ma_err = np.empty(n + 1)
    k_rmse = np.empty(n + 1)
    snapshots = {}
    snap_cycles = {}
    for tp in cfg.run.kernel_snapshots_tp:
        c = int(round(tp / cyc_tp))
        if 0 <= c <= n and abs(c * cyc_tp - tp) < 1e-9 * max(1.0, tp):
            snap_cycles.setdefault(c, []).append(tp)
    clamp_total = 0
    log_every = max(1, int(round(cfg.run.log_every_tp / cyc_tp)))

    def record(c, E, S):
        truth = E[0]
        sig = np.std(truth)
        eps_da[c] = error_metric(E[2:].mean(axis=0), truth, sig)
        eps_noda[c] = error_metric(E[1], truth, sig)
        motion[c] = (S[0, 0], S[2:, 0].mean(), S[1, 0], S[0, 1], S[2:, 1].mean(), S[1, 1])
        ma_err[c] = abs(Ma[2:].mean() - ma_true) / ma_true
        k_est = kernel_from_coarse(coarse[2:].mean(axis=0), su.n_mem, su.stride)
        k_rmse[c] = np.sqrt(np.mean((k_est - su.k33_true.samples) ** 2))
        for tp in snap_cycles.get(c, ()):
            snapshots[tp] = np.column_stack([su.k33_true.lags, su.k33_true.samples, k_est])

    record(0, su.fields(em), ship.as_array())
    log.info("t/Tp=%7.2f eps_noda=%.5e eps_da=%.5e", 0.0, eps_noda[0], eps_da[0])
    rng_meas, rng_pert = su.rngs["measure"], su.rngs["perturb"]
    for c in range(n):
        t_cycle = time.perf_counter()
        try:
            em, pm, ship = _advance(prop, integ, fk, em, pm, ship, cfg.steps_per_cycle)
        except NumericalInstabilityError as err:
            raise NumericalInstabilityError(
                f"forecast failed in cycle {c} (t/Tp={(c + 1) * cyc_tp:g}): {err}") from err
        E, P, S = su.fields(em), su.fields(pm), ship.as_array()
        wave = WaveField(E[0], P[0], (c + 1) * cyc_tp * su.Tp, g)
        obs = synthesize_observation(wave, _ShipView(S[0, 0], S[0, 1]), su.selector, su.noise, N,
                                     rng_meas, np.std(E[0]), layout, np.std(P[0]), su.filt,
                                     e.r_mode, perturb_rng=rng_pert)
        params = np.column_stack([Ma[2:], coarse[2:]]) if e.augment else None
        ens = EnsembleState(layout.pack(E[2:], P[2:], S[2:], params), layout)
        eps_pre[c + 1] = error_metric(E[2:].mean(axis=0), E[0])
        ens = inflate(ens, e.inflation, e.param_inflation)
        try:
            ens = analysis(ens, obs)
        except WaveTwinError as err:
            raise type(err)(f"analysis failed in cycle {c}: {err}") from err
        if e.augment:
            start = layout.params.start
            ens, n1 = clamp_block(ens, start, e.ma_min, e.ma_max)
            n2 = 0
            for j in range(1, 1 + su.n_coarse):
                ens, nj = clamp_block(ens, start + j, -e.kernel_bound, e.kernel_bound)
                n2 += nj
            if n1 or n2:
                clamp_total += n1 + n2
                log.info("cycle %d: clamped %d added-mass and %d kernel entries", c, n1, n2)
        eta_a, psi_a, ship_a, par_a = layout.unpack(ens.members)
        em[2:] = su.to_modes(eta_a)
        pm[2:] = su.to_modes(psi_a)
        S = S.copy()
        S[2:] = ship_a
        ship = ship.with_values(S)
        if e.augment:
            Ma[2:] = par_a[:, 0]
            coarse[2:] = par_a[:, 1:]
            integ = build_integrator()
        E[2:] = eta_a
        record(c + 1, E, S)
        log.debug("cycle %d t/Tp=%.2f eps_pre=%.5e eps_da=%.5e eps_noda=%.5e Ma_err=%.4f "
                  "Ma_sd=%.4f kernel_rmse=%.4e wall=%.3fs", c, (c + 1) * cyc_tp, eps_pre[c + 1],
                  eps_da[c + 1], eps_noda[c + 1], ma_err[c + 1], np.std(Ma[2:]) / ma_true,
                  k_rmse[c + 1], time.perf_counter() - t_cycle)
        if (c + 1) % log_every == 0:
            log.info("t/Tp=%7.2f eps_noda=%.5e eps_da=%.5e Ma_err=%.4f kernel_rmse=%.4e "
                     "steepness=%.4f", (c + 1) * cyc_tp, eps_noda[c + 1], eps_da[c + 1],
                     ma_err[c + 1], k_rmse[c + 1],
                     float(significant_steepness(E[0], g, su.spec.peak_wavenumber(g))))

    runtime = time.perf_counter() - t_start
    log.info("finished in %.1fs; %d clamp events", runtime, clamp_total)
    result = ExperimentResult(
        selector=su.selector_name,
        da=ErrorSeries(times, eps_da, {"Ma_rel_err": ma_err, "kernel_rmse": k_rmse}),
        noda=ErrorSeries(times, eps_noda),
        eps_pre=eps_pre,
        motion={name: motion[:, i] for i, name in enumerate(SHIP_MOTION_COLUMNS[1:])},
        kernels=snapshots,
        clamp_events=clamp_total,
        runtime=runtime,
    )
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_csv(path, columns, data):
    data = np.asarray(data, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.10e}" for v in row) + "\n")


def write_outputs(result, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = result.da.times
    write_csv(out / "wave_error.csv", WAVE_ERROR_COLUMNS,
              np.column_stack([t, result.noda.eps, result.da.eps]))
    write_csv(out / "ship_motion.csv", SHIP_MOTION_COLUMNS,
              np.column_stack([t] + [result.motion[c] for c in SHIP_MOTION_COLUMNS[1:]]))
    write_csv(out / "params.csv", PARAMS_COLUMNS,
              np.column_stack([t, result.da.params["Ma_rel_err"], result.da.params["kernel_rmse"]]))
    for tp, table in sorted(result.kernels.items()):
        write_csv(out / f"kernel_t{tp:g}.csv", KERNEL_COLUMNS, table)


def read_csv(path):
    """Return ``(columns, data)`` of a CSV written by :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        columns = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return columns, data


def merge_wave_errors(runs):
    """Merge ``{selector: wave_error.csv path}`` into one table.

    Columns: ``t_over_Tp, eps_noda`` followed by ``eps_<selector>`` for each run,
    in the given order. All runs must share the time axis and the no-DA curve.
    """
    names = list(runs)
    if not names:
        raise InvalidInputError("nothing to compare")
    ref_t = ref_noda = None
    cols = []
    for name in names:
        columns, data = read_csv(runs[name])
        if tuple(columns) != WAVE_ERROR_COLUMNS:
            raise InvalidInputError(f"{runs[name]} is not a wave_error.csv")
        if ref_t is None:
            ref_t, ref_noda = data[:, 0], data[:, 1]
        elif data.shape[0] != ref_t.size or not np.array_equal(data[:, 0], ref_t):
            raise InvalidInputError(f"{runs[name]} has a different time axis")
        cols.append(data[:, 2])
    header = ["t_over_Tp", "eps_noda"] + [f"eps_{n}" for n in names]
    return header, np.column_stack([ref_t, ref_noda] + cols)
