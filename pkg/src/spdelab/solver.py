"""Mild-solution time integration of the stochastic heat equation on a torus.

The update is one exponential-Euler increment of the variation-of-constants
form: ``u_{m+1} = S_dt(u_m + sigma(u_m) dW_m)``, with the heat semigroup
``S_dt`` applied exactly in Fourier space.  Without noise this is exact heat
flow of the grid data, so there is no parabolic stability constraint; ``dt``
only sets the temporal resolution of the noise.

Coupled pairs of solutions consume the identical noise realization (same
counter-based stream triples), which is the setting in which pathwise
uniqueness is probed numerically: the difference field of a pair started from
identical data is identically zero, and for small initial perturbations the
difference should shrink with the perturbation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    BlowUpError,
    DomainError,
    ExtrapolationError,
    InputError,
)
from .kernels import KernelSpec, semigroup_multiplier
from .noise import GridSpec, NoiseField, RngStream, _amplitudes_cached, read_field, synthesize

SIGMA_KINDS = ("lipschitz-linear", "holder-power", "sqrt-plus", "viot", "table")


@dataclass(frozen=True)
class SigmaSpec:
    """Diffusion coefficient family sigma with Hoelder index gamma.

    kinds: ``lipschitz-linear`` is ``scale * u``; ``holder-power`` is
    ``scale * |u|^gamma``; ``sqrt-plus`` is ``scale * sqrt(max(u, 0))``;
    ``viot`` is ``scale * sqrt(max(u (1 - u), 0))``; ``table`` interpolates a
    strictly ordered value table and refuses to extrapolate.

    Every kind obeys the linear growth bound
    ``|sigma(u)| <= growth_c (1 + |u|)``, which is checked on a lattice at
    construction time.
    """

    kind: str = "lipschitz-linear"
    scale: float = 1.0
    gamma: float | None = None
    growth_c: float | None = None
    table_u: tuple = ()
    table_v: tuple = ()

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise DomainError(f"unknown sigma kind {self.kind!r}")
        if not self.scale > 0:
            raise DomainError("sigma scale must be > 0")
        if self.gamma is None:
            default = {"lipschitz-linear": 1.0, "table": 1.0}.get(self.kind, 0.5)
            object.__setattr__(self, "gamma", default)
        if not 0 < self.gamma <= 1:
            raise DomainError("gamma must lie in (0, 1]")
        if self.kind == "table":
            if len(self.table_u) < 2 or len(self.table_u) != len(self.table_v):
                raise DomainError("table sigma needs matching u/v tables, length >= 2")
            if np.any(np.diff(self.table_u) <= 0):
                raise DomainError("table abscissae must be strictly increasing")
        if self.growth_c is None:
            object.__setattr__(self, "growth_c", self._default_growth())
        if not self.growth_c > 0:
            raise DomainError("growth_c must be > 0")
        self._verify_growth()

    def _default_growth(self) -> float:
        if self.kind == "viot":
            return 0.5 * self.scale
        if self.kind == "table":
            u = np.asarray(self.table_u)
            v = np.asarray(self.table_v)
            return float(np.max(np.abs(v) / (1.0 + np.abs(u))))
        return self.scale

    def _verify_growth(self):
        if self.kind == "table":
            u = np.asarray(self.table_u, dtype=float)
        else:
            u = np.linspace(-50.0, 50.0, 401)
        vals = np.abs(sigma_eval(self, u))
        bound = self.growth_c * (1.0 + np.abs(u))
        if np.any(vals > bound * (1.0 + 1e-12)):
            raise DomainError("sigma violates the linear growth bound on the test lattice")

    @property
    def is_lipschitz(self) -> bool:
        return self.kind == "lipschitz-linear"

    @property
    def satisfies_yw_modulus(self) -> bool:
        """Admits a modulus rho with diverging integral of rho^-2 at 0+.

        True for the square-root families (modulus ``scale * sqrt(x)``), for
        Lipschitz coefficients (modulus ``scale * x``), and for Hoelder index
        >= 1/2 (modulus ``scale * x^gamma``).
        """
        if self.kind in ("sqrt-plus", "viot", "lipschitz-linear"):
            return True
        return self.gamma >= 0.5


def sigma_eval(spec: SigmaSpec, u):
    """Evaluate sigma pointwise (vectorized over ``u``)."""
    u = np.asarray(u, dtype=float)
    if spec.kind == "lipschitz-linear":
        return spec.scale * u
    if spec.kind == "holder-power":
        return spec.scale * np.abs(u) ** spec.gamma
    if spec.kind == "sqrt-plus":
        return spec.scale * np.sqrt(np.maximum(u, 0.0))
    if spec.kind == "viot":
        return spec.scale * np.sqrt(np.maximum(u * (1.0 - u), 0.0))
    lo, hi = spec.table_u[0], spec.table_u[-1]
    if np.any(u < lo) or np.any(u > hi):
        raise ExtrapolationError(
            f"table sigma evaluated outside its range [{lo}, {hi}]"
        )
    return np.interp(u, spec.table_u, spec.table_v)


@dataclass(frozen=True)
class InitialCondition:
    """Initial data: constant level, sine mode, periodic Gaussian bump, or file."""

    kind: str = "constant"
    value: float = 0.0
    k: int = 1
    amplitude: float = 1.0
    offset: float = 0.0
    center: float = 0.0
    width: float = 0.1
    height: float = 1.0
    path: str = ""

    def __post_init__(self):
        if self.kind not in ("constant", "sine", "bump", "file"):
            raise DomainError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "bump" and not self.width > 0:
            raise DomainError("bump width must be > 0")

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        x = grid.axis_coords()
        if self.kind == "constant":
            return np.full(grid.shape, float(self.value))
        if self.kind == "sine":
            profile = self.amplitude * np.sin(2.0 * np.pi * self.k * x / grid.l) + self.offset
            if grid.dim == 1:
                return profile
            return np.broadcast_to(profile[:, None], grid.shape).copy()
        if self.kind == "bump":
            dx = (x - self.center + grid.l / 2.0) % grid.l - grid.l / 2.0
            if grid.dim == 1:
                sq = dx * dx
            else:
                sq = dx[:, None] ** 2 + dx[None, :] ** 2
            return self.height * np.exp(-sq / (2.0 * self.width**2))
        loaded = read_field(self.path)
        if loaded.grid.dim != grid.dim or loaded.grid.n != grid.n:
            raise InputError("initial-condition file does not match the grid")
        if abs(loaded.grid.l - grid.l) > 1e-12 * max(1.0, grid.l):
            raise InputError("initial-condition file has a different domain length")
        return loaded.values


def initial_field(grid: GridSpec, u0_spec: InitialCondition) -> "Field":
    """Materialize initial data as a Field at t = 0."""
    return Field(grid=grid, t=0.0, values=u0_spec.evaluate(grid))


@dataclass(eq=False)
class Field:
    """One spatial snapshot of the solution."""

    grid: GridSpec
    t: float
    values: np.ndarray


@dataclass(eq=False)
class Trajectory:
    """Time-indexed snapshots plus provenance and clipping statistics."""

    fingerprint: str
    grid: GridSpec
    times: tuple
    fields: list
    clip_count: int = 0
    clip_max: float = 0.0
    complete: bool = True

    def snapshot(self, t: float) -> Field:
        for f in self.fields:
            if abs(f.t - t) <= 1e-12 * max(1.0, abs(t)):
                return f
        raise InputError(f"no snapshot at t={t}")


def _heat_multiplier_half(grid: GridSpec, dt: float) -> np.ndarray:
    """Semigroup multiplier on the rfft frequency layout."""
    xi_half = np.fft.rfftfreq(grid.n, d=grid.h)
    if grid.dim == 1:
        return semigroup_multiplier(xi_half, dt)
    xi_full = np.fft.fftfreq(grid.n, d=grid.h)
    sq = xi_full[:, None] ** 2 + xi_half[None, :] ** 2
    return np.exp(-2.0 * np.pi**2 * sq * dt)


class _Stepper:
    """Precomputed spectral machinery for one (grid, kernel, sigma, dt) combo."""

    def __init__(self, grid: GridSpec, kspec: KernelSpec, sspec: SigmaSpec, dt: float):
        self.grid = grid
        self.kspec = kspec
        self.sspec = sspec
        self.dt = dt
        self.multiplier = _heat_multiplier_half(grid, dt)
        self.mode_std = _amplitudes_cached(grid, kspec) * np.sqrt(dt)

    def sample_dw(self, stream: RngStream) -> np.ndarray:
        return synthesize(self.grid, self.mode_std, stream.generator())

    def heat(self, values: np.ndarray) -> np.ndarray:
        if self.grid.dim == 1:
            return np.fft.irfft(np.fft.rfft(values) * self.multiplier, self.grid.n)
        return np.fft.irfft2(np.fft.rfft2(values) * self.multiplier, self.grid.shape)

    def step(self, values: np.ndarray, dw: np.ndarray) -> np.ndarray:
        # overflowing states produce inf/nan here; the caller turns that into
        # a blow-up error with the offending step index
        with np.errstate(invalid="ignore", over="ignore"):
            return self.heat(values + sigma_eval(self.sspec, values) * dw)


def step(u: Field, dw: NoiseField, sspec: SigmaSpec) -> Field:
    """One exponential-Euler increment ``S_dt(u + sigma(u) dW)``.

    With ``dw`` identically zero this is exact heat flow of the grid data.
    """
    if u.grid != dw.grid:
        raise InputError("field and noise increment live on different grids")
    stepper = _Stepper(u.grid, dw.kernel, sspec, dw.dt)
    out = stepper.step(u.values, dw.values)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite values after step", step_index=None)
    return Field(grid=u.grid, t=u.t + dw.dt, values=out)


def _fingerprint(parts: dict) -> str:
    text = "\n".join(f"{k} = {parts[k]}" for k in sorted(parts))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def config_fingerprint(
    grid: GridSpec,
    kspec: KernelSpec,
    sspec: SigmaSpec,
    u0_spec: InitialCondition,
    stream: RngStream,
) -> str:
    return _fingerprint(
        {
            "grid": repr(grid),
            "kernel": repr(kspec),
            "sigma": repr(sspec),
            "u0": repr(u0_spec),
            "seed": (stream.master_seed, stream.replica_id),
        }
    )


def _snapshot_steps(grid: GridSpec, dt: float, snapshot_times) -> dict[int, float]:
    """Map requested snapshot times onto step indices; times keep their requested values."""
    want: dict[int, float] = {}
    prev = -1
    for t in snapshot_times:
        m = t / dt
        mi = int(round(m))
        if abs(m - mi) > 1e-6 or mi < 0:
            raise DomainError(f"snapshot time {t} is not on the step lattice (dt={dt})")
        if mi <= prev:
            raise DomainError("snapshot times must be strictly increasing")
        want[mi] = float(t)
        prev = mi
    return want


def simulate(
    grid: GridSpec,
    kspec: KernelSpec,
    sspec: SigmaSpec,
    u0_spec: InitialCondition,
    stream: RngStream,
    snapshot_times,
    clip: bool = False,
) -> Trajectory:
    """Integrate one trajectory; a deterministic function of its arguments.

    ``clip`` enables the optional nonnegativity guard: after each step the
    field is projected to [0, inf) (or [0, 1] for the viot coefficient) and
    every projected point is counted.  Off by default; the scheme itself is
    well-defined for negative values because the square-root coefficients
    clamp internally.
    """
    dt = grid.dt
    want = _snapshot_steps(grid, dt, snapshot_times)
    stepper = _Stepper(grid, kspec, sspec, dt)
    u = u0_spec.evaluate(grid)
    fingerprint = config_fingerprint(grid, kspec, sspec, u0_spec, stream)

    lo, hi = 0.0, np.inf
    if clip and sspec.kind == "viot":
        hi = 1.0

    fields: list[Field] = []
    times: list[float] = []
    clip_count, clip_max = 0, 0.0
    if 0 in want:
        fields.append(Field(grid=grid, t=want[0], values=u.copy()))
        times.append(want[0])
    last = max(want) if want else 0
    for m in range(1, last + 1):
        dw = stepper.sample_dw(stream.at_step(m - 1))
        u = stepper.step(u, dw)
        if not np.all(np.isfinite(u)):
            partial = Trajectory(
                fingerprint=fingerprint,
                grid=grid,
                times=tuple(times),
                fields=fields,
                clip_count=clip_count,
                clip_max=clip_max,
                complete=False,
            )
            err = BlowUpError(f"non-finite values at step {m} (t={m * dt})", step_index=m)
            err.partial_trajectory = partial
            raise err
        if clip:
            mask = (u < lo) | (u > hi)
            if np.any(mask):
                clipped = np.clip(u, lo, hi)
                clip_count += int(np.count_nonzero(mask))
                clip_max = max(clip_max, float(np.max(np.abs(u - clipped))))
                u = clipped
        if m in want:
            fields.append(Field(grid=grid, t=want[m], values=u.copy()))
            times.append(want[m])
    return Trajectory(
        fingerprint=fingerprint,
        grid=grid,
        times=tuple(times),
        fields=fields,
        clip_count=clip_count,
        clip_max=clip_max,
    )


@dataclass(eq=False)
class SolutionPair:
    """Two trajectories driven by the identical noise, plus their difference."""

    delta: float
    traj_a: Trajectory
    traj_b: Trajectory
    diffs: list = dataclass_field(default_factory=list)

    @property
    def grid(self) -> GridSpec:
        return self.traj_a.grid

    @property
    def times(self) -> tuple:
        return self.traj_a.times


def simulate_pair(
    grid: GridSpec,
    kspec: KernelSpec,
    sspec: SigmaSpec,
    u0_spec: InitialCondition,
    perturbation: InitialCondition | None,
    delta: float,
    stream: RngStream,
    snapshot_times,
) -> SolutionPair:
    """Integrate two solutions under the same noise; leg b starts from
    ``u0 + delta * perturbation``.  ``delta = 0`` reproduces leg a bitwise.
    """
    dt = grid.dt
    want = _snapshot_steps(grid, dt, snapshot_times)
    stepper = _Stepper(grid, kspec, sspec, dt)
    ua = u0_spec.evaluate(grid)
    if delta == 0.0 or perturbation is None:
        ub = ua.copy()
    else:
        ub = ua + delta * perturbation.evaluate(grid)
    fp = config_fingerprint(grid, kspec, sspec, u0_spec, stream)

    fields_a, fields_b, diffs, times = [], [], [], []

    def record(t, ua, ub):
        fields_a.append(Field(grid=grid, t=t, values=ua.copy()))
        fields_b.append(Field(grid=grid, t=t, values=ub.copy()))
        diffs.append(Field(grid=grid, t=t, values=ua - ub))
        times.append(t)

    if 0 in want:
        record(want[0], ua, ub)
    last = max(want) if want else 0
    for m in range(1, last + 1):
        dw = stepper.sample_dw(stream.at_step(m - 1))
        ua = stepper.step(ua, dw)
        ub = stepper.step(ub, dw)
        if not (np.all(np.isfinite(ua)) and np.all(np.isfinite(ub))):
            raise BlowUpError(f"non-finite values at step {m}", step_index=m)
        if m in want:
            record(want[m], ua, ub)

    traj_a = Trajectory(fingerprint=fp, grid=grid, times=tuple(times), fields=fields_a)
    traj_b = Trajectory(fingerprint=fp, grid=grid, times=tuple(times), fields=fields_b)
    return SolutionPair(delta=delta, traj_a=traj_a, traj_b=traj_b, diffs=diffs)
