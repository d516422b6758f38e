"""Stochastic (perturbed-observation) ensemble Kalman filter.

Ensembles are stored member-major, ``members[n]`` being the flat state vector
of member ``n``; the anomaly matrix returned by :func:`anomalies` is
state-major (one column per member) to match the usual algebra

    A  = [x_1 - x̄, ..., x_N - x̄] / sqrt(N - 1)
    K  = A (GA)^T [(GA)(GA)^T + R]^-1
    Xa = Xf + K (Y - G Xf)

The full state covariance ``A A^T`` is never formed.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from ._validation import check_ensemble_size, check_finite
from .exceptions import DegenerateEnsembleError, InvalidInputError

SHIP_FIELDS = ("S3", "S4", "V3", "V4")


@dataclass(frozen=True)
class StateLayout:
    """Offsets of the eta, psi, ship and optional parameter blocks in a state vector."""

    L: int
    n_param: int = 0

    @property
    def eta(self):
        return slice(0, self.L)

    @property
    def psi(self):
        return slice(self.L, 2 * self.L)

    @property
    def ship(self):
        return slice(2 * self.L, 2 * self.L + 4)

    @property
    def params(self):
        start = 2 * self.L + 4
        return slice(start, start + self.n_param)

    @property
    def size(self):
        return 2 * self.L + 4 + self.n_param

    @property
    def augmented(self):
        return self.n_param > 0

    def ship_index(self, name):
        return 2 * self.L + SHIP_FIELDS.index(name)

    def pack(self, eta, psi, ship, params=None):
        """Stack blocks (each with an optional leading member axis) into state vectors."""
        eta = np.asarray(eta, dtype=float)
        lead = eta.shape[:-1]
        parts = [eta, np.broadcast_to(psi, lead + (self.L,)),
                 np.broadcast_to(ship, lead + (4,))]
        if self.n_param:
            if params is None:
                raise InvalidInputError("augmented layout needs a parameter block")
            parts.append(np.broadcast_to(params, lead + (self.n_param,)))
        elif params is not None and np.size(params):
            raise InvalidInputError("layout has no parameter block")
        return np.concatenate(parts, axis=-1)

    def unpack(self, values):
        values = np.asarray(values)
        if values.shape[-1] != self.size:
            raise InvalidInputError(f"state length {values.shape[-1]} != layout size {self.size}")
        params = values[..., self.params] if self.n_param else None
        return values[..., self.eta], values[..., self.psi], values[..., self.ship], params


@dataclass(frozen=True)
class EnsembleState:
    members: np.ndarray
    layout: StateLayout

    def __post_init__(self):
        arr = np.asarray(self.members, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.layout.size:
            raise InvalidInputError(
                f"members must be (N, {self.layout.size}), got {arr.shape}")
        check_ensemble_size(arr.shape[0])
        object.__setattr__(self, "members", arr)

    @property
    def N(self):
        return self.members.shape[0]

    def mean(self):
        return self.members.mean(axis=0)


@dataclass(frozen=True)
class ObservationOperator:
    """Selection operator: row ``i`` picks state entry ``indices[i]``."""

    indices: tuple

    def __post_init__(self):
        if len(self.indices) == 0:
            raise InvalidInputError("observation operator needs at least one row")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def dim(self):
        return len(self.indices)

    def __call__(self, states):
        return np.asarray(states)[..., list(self.indices)]

    def matrix(self, state_size):
        G = np.zeros((self.dim, state_size))
        G[np.arange(self.dim), list(self.indices)] = 1.0
        return G

    @classmethod
    def from_selector(cls, selector, layout):
        rows = []
        for ch, probe in selector.rows():
            if ch == "eta":
                rows.append(layout.eta.start + probe)
            elif ch == "psi":
                rows.append(layout.psi.start + probe)
            elif ch == "heave":
                rows.append(layout.ship_index("S3"))
            else:
                rows.append(layout.ship_index("S4"))
        return cls(tuple(rows))


@dataclass(frozen=True)
class ObservationBatch:
    """Perturbed observation members ``(N, d)``, their covariance and the operator.

    ``raw`` optionally keeps the unperturbed measurement the members were drawn around.
    """

    members: np.ndarray
    R: np.ndarray
    operator: ObservationOperator
    t: float = 0.0
    raw: np.ndarray = None

    def __post_init__(self):
        members = np.atleast_2d(np.asarray(self.members, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        d = self.operator.dim
        if members.shape[1] != d:
            raise InvalidInputError(f"observation members have dim {members.shape[1]}, operator {d}")
        if R.shape != (d, d):
            raise InvalidInputError(f"R must be {d}x{d}, got {R.shape}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "R", R)

    @classmethod
    def from_perturbed(cls, ensemble, operator, t=0.0, r_mode="known"):
        """Build from a :class:`PerturbedMeasurementEnsemble`.

        ``r_mode="known"`` uses the noise-model variances; ``"empirical"`` the
        sample covariance of the perturbed members.
        """
        if r_mode == "known":
            R = np.diag(np.atleast_1d(ensemble.R_spec))
        elif r_mode == "empirical":
            R = empirical_covariance(ensemble.members)
        else:
            raise InvalidInputError(f"unknown R mode {r_mode!r}")
        return cls(ensemble.members, R, operator, t, ensemble.mean)


def anomalies(members):
    """State-major anomaly matrix ``(dim, N)`` scaled by ``1/sqrt(N-1)``."""
    X = members.members if isinstance(members, EnsembleState) else np.asarray(members, float)
    if X.ndim == 1:
        X = X[:, None]
    n = check_ensemble_size(X.shape[0])
    return (X - X.mean(axis=0)).T / np.sqrt(n - 1)


def empirical_covariance(members):
    A = anomalies(members)
    return A @ A.T


def kalman_gain(A, operator, R):
    """Kalman gain from state anomalies ``A`` (dim, N) without forming ``A A^T``."""
    A = np.asarray(A, dtype=float)
    GA = operator(A.T).T
    S = GA @ GA.T + np.atleast_2d(R)
    try:
        factor = linalg.cho_factor(S, lower=True, check_finite=True)
    except linalg.LinAlgError as err:
        raise DegenerateEnsembleError(
            "innovation covariance is not positive definite; "
            "the ensemble has collapsed in observation space") from err
    # K = A GA^T S^-1 = (S^-1 GA A^T)^T
    return linalg.cho_solve(factor, GA @ A.T).T


def analysis(ens, obs):
    """Member-wise update ``x_a = x_f + K (y_n - G x_f)``."""
    if obs.members.shape[0] != ens.N:
        raise InvalidInputError(
            f"{obs.members.shape[0]} observation members for {ens.N} state members")
    if max(obs.operator.indices) >= ens.layout.size:
        raise InvalidInputError("observation operator selects outside the state vector")
    A = anomalies(ens)
    K = kalman_gain(A, obs.operator, obs.R)
    innovation = obs.members - obs.operator(ens.members)
    updated = ens.members + innovation @ K.T
    check_finite(updated, "analysis ensemble", DegenerateEnsembleError)
    return replace(ens, members=updated)


def augment(ens, params, spread=None, rng=None):
    """Append a parameter block to every member.

    ``params`` is either an ``(N, p)`` array of member values or a length-``p``
    guess; in the latter case ``spread`` (scalar or per-entry std) draws
    independent Gaussian perturbations around the guess.
    """
    if ens.layout.augmented:
        raise InvalidInputError("ensemble is already parameter-augmented")
    params = np.asarray(params, dtype=float)
    if params.ndim == 1:
        block = np.broadcast_to(params, (ens.N, params.size)).copy()
        if spread is not None and np.any(np.asarray(spread) > 0):
            if rng is None:
                raise InvalidInputError("a random generator is required for a nonzero spread")
            block = block + np.asarray(spread) * rng.standard_normal(block.shape)
    elif params.shape[0] == ens.N:
        block = params.copy()
    else:
        raise InvalidInputError(f"parameter array shape {params.shape} incompatible with N={ens.N}")
    layout = StateLayout(ens.layout.L, block.shape[1])
    return EnsembleState(np.concatenate([ens.members, block], axis=1), layout)


def inflate(ens, factor, param_factor=None):
    """Multiplicative inflation of the anomalies about the ensemble mean.

    The parameter block, if any, uses ``param_factor`` (default: ``factor``).
    """
    factor = float(factor)
    param_factor = factor if param_factor is None else float(param_factor)
    if factor < 1 or param_factor < 1:
        raise InvalidInputError(f"inflation factors must be >= 1, got {factor}, {param_factor}")
    scale = np.full(ens.layout.size, factor)
    if ens.layout.augmented:
        scale[ens.layout.params] = param_factor
    if np.all(scale == 1.0):
        return ens
    mean = ens.mean()
    return replace(ens, members=mean + scale * (ens.members - mean))


def clamp_block(ens, index, lower=None, upper=None):
    """Clip state entry ``index`` of every member; returns ``(ensemble, n_clipped)``."""
    col = ens.members[:, index]
    clipped = np.clip(col, lower, upper)
    n = int(np.count_nonzero(clipped != col))
    if n == 0:
        return ens, 0
    members = ens.members.copy()
    members[:, index] = clipped
    return replace(ens, members=members), n
