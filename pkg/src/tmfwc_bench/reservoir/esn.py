"""
Leaky-integrator echo-state reservoir.

The recurrent and input matrices are drawn once from a seeded PCG64 generator and never
trained. `SeedSequence(seed).spawn(2)` yields the recurrent stream first and the input
stream second, so the two matrices are independent and reproducible across platforms.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.errors import ConfigInvalid, DimensionMismatch, EmptyTrajectory, SingularRescale

log = logging.getLogger(__name__)

DENSE_EIG_LIMIT = 500
_ZERO_RADIUS = 1e-12


class ReservoirParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_nodes: int = Field(default=200, ge=1)
    spectral_radius: float = Field(default=0.9, gt=0.0, lt=1.0)
    input_scaling: float = 0.5
    leak_rate: float = Field(default=0.3, gt=0.0, le=1.0)
    input_density: float = Field(default=0.1, gt=0.0, le=1.0)
    recurrent_density: float = Field(default=0.1, gt=0.0, le=1.0)
    seed: int = Field(default=42, ge=0, lt=2**64)


@dataclass(frozen=True)
class Reservoir:
    w: np.ndarray  # (n, n)
    w_in: np.ndarray  # (n, d)
    params: ReservoirParams

    @property
    def n_nodes(self) -> int:
        return int(self.w.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.w_in.shape[1])

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.w).tobytes())
        h.update(np.ascontiguousarray(self.w_in).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class StateSummary:
    mean_state: np.ndarray
    final_state: np.ndarray

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.mean_state, self.final_state])

    @property
    def dim(self) -> int:
        return int(self.mean_state.size + self.final_state.size)


def _streams(seed: int) -> tuple[Generator, Generator]:
    recurrent, inputs = SeedSequence(seed).spawn(2)
    return Generator(PCG64(recurrent)), Generator(PCG64(inputs))


def _sparse_uniform(
    rng: Generator, shape: tuple[int, int], density: float, scale: float
) -> np.ndarray:
    values = rng.uniform(-scale, scale, size=shape)
    mask = rng.random(size=shape) < density
    return np.where(mask, values, 0.0)


def spectral_radius(w: np.ndarray) -> float:
    """Largest |eigenvalue|; dense for small matrices, ARPACK above DENSE_EIG_LIMIT nodes."""
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    vals: np.ndarray | None = None
    if n > DENSE_EIG_LIMIT:
        try:
            vals = eigs(w, k=1, which="LM", return_eigenvectors=False, v0=np.ones(n), tol=1e-12)
        except ArpackNoConvergence:
            log.warning("ARPACK did not converge for %d nodes; using dense eigenvalues", n)
    if vals is None:
        vals = np.linalg.eigvals(w)
    return float(np.max(np.abs(vals)))


def power_iteration_radius(w: np.ndarray, tol: float = 1e-8, max_squarings: int = 60) -> float:
    """
    rho(W) = lim ||W^k||^(1/k), estimated by repeated squaring with renormalization.

    Converges even when the dominant eigenvalues are a complex-conjugate pair.
    """
    b = np.asarray(w, dtype=np.float64)
    norm = float(np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    b = b / norm
    log_scale = math.log(norm)
    k = 1
    estimate = norm
    for _ in range(max_squarings):
        b = b @ b
        k *= 2
        s = float(np.linalg.norm(b))
        if s == 0.0:
            return 0.0  # nilpotent
        b = b / s
        log_scale = 2.0 * log_scale + math.log(s)
        prev, estimate = estimate, math.exp(log_scale / k)
        if abs(estimate - prev) <= tol * max(estimate, _ZERO_RADIUS):
            break
    return estimate


def init_reservoir(params: ReservoirParams, input_dim: int) -> Reservoir:
    if input_dim < 1:
        raise ConfigInvalid(f"input_dim must be >= 1, got {input_dim}")
    n = params.n_nodes
    rng_w, rng_in = _streams(params.seed)

    w = _sparse_uniform(rng_w, (n, n), params.recurrent_density, 1.0)
    if not np.any(w):
        raise SingularRescale(
            f"recurrent matrix is all zero at density {params.recurrent_density} "
            f"(density*n^2 = {params.recurrent_density * n * n:.3g}); raise the density"
        )
    radius = spectral_radius(w)
    if radius < _ZERO_RADIUS:
        raise SingularRescale("recurrent matrix is nilpotent; cannot rescale its spectral radius")
    w = w * (params.spectral_radius / radius)
    w_in = _sparse_uniform(rng_in, (n, input_dim), params.input_density, params.input_scaling)

    w.setflags(write=False)
    w_in.setflags(write=False)
    log.debug(
        "reservoir seed=%d n=%d radius %.6g -> %.6g", params.seed, n, radius, params.spectral_radius
    )
    return Reservoir(w=w, w_in=w_in, params=params)


def update_state(r: Reservoir, state: np.ndarray, u: np.ndarray) -> np.ndarray:
    """x' = (1 - a) x + a tanh(W x + W_in u)."""
    state = np.asarray(state, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if state.shape != (r.n_nodes,):
        raise DimensionMismatch(f"state has shape {state.shape}, reservoir has {r.n_nodes} nodes")
    if u.shape != (r.input_dim,):
        raise DimensionMismatch(f"input has shape {u.shape}, reservoir expects {r.input_dim}")
    a = r.params.leak_rate
    return (1.0 - a) * state + a * np.tanh(r.w @ state + r.w_in @ u)


def run_sequence(
    r: Reservoir,
    feats: FeatureMatrix | np.ndarray,
    x0: np.ndarray | None = None,
) -> StateSummary:
    """Drive the reservoir over the rows in time order; summarize by mean and final state."""
    values = feats.values if isinstance(feats, FeatureMatrix) else np.asarray(feats, np.float64)
    if values.ndim != 2 or values.shape[1] != r.input_dim:
        raise DimensionMismatch(
            f"features have shape {values.shape}, reservoir expects {r.input_dim} columns"
        )
    if values.shape[0] == 0:
        raise EmptyTrajectory("cannot run the reservoir over zero time steps")

    x = np.zeros(r.n_nodes) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (r.n_nodes,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, reservoir has {r.n_nodes} nodes")
    total = np.zeros(r.n_nodes)
    a = r.params.leak_rate
    for u in values:
        x = (1.0 - a) * x + a * np.tanh(r.w @ x + r.w_in @ u)
        total += x
    return StateSummary(mean_state=total / values.shape[0], final_state=x)
