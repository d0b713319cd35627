"""Pseudospectral time integration of the system on the circle.

The fields take values in a finite Grassmann algebra Lambda_N: the even field
u stores one real array per even-cardinality generator subset, the odd field
xi one per odd-cardinality subset, and products are computed level by level
with the reordering sign.  The default N = 2 is the smallest truncation in
which the fermionic backreaction on u is visible (it needs two distinct
generators), giving four coupled real components.

Time stepping solves the once-integrated form of the equations: the right
sides of u_tx and xi_tx are made mean-free (periodic solvability fixes the
integration constants) and inverted spectrally with the zero-mean gauge on
u_t, the canonical choice on the homogeneous space of the flow.  A classical
explicit fourth-order one-step method advances the solution; wave-breaking
shows up as a NaN/Inf and aborts with a diagnostic rather than attempting
continuation.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .grassmann import GrassmannElement, even_masks, merge_sign, odd_masks

TWO_PI = 2.0 * np.pi

LevelArrays = Dict[int, np.ndarray]


class BlowUpError(RuntimeError):
    """Raised when the solution develops NaN/Inf (wave-breaking)."""

    def __init__(self, time: float, diagnostics: Dict[str, float]):
        super().__init__(f"solution blew up at t={time:.6g}: {diagnostics}")
        self.time = time
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SolverConfig:
    n_modes: int = 256
    dt: float = 1e-3
    t_end: float = 1.0
    n_grassmann: int = 2
    gauge: str = "zero_mean_ut"
    dealias: bool = True
    sample_stride: int = 1

    def __post_init__(self):
        if self.n_modes < 16 or self.n_modes & (self.n_modes - 1):
            raise ValueError("n_modes must be a power of two, at least 16")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0 or round(self.t_end / self.dt) < 1:
            raise ValueError("t_end must allow at least one step of size dt")
        if self.n_grassmann < 0:
            raise ValueError("n_grassmann must be nonnegative")
        if self.gauge != "zero_mean_ut":
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    @staticmethod
    def from_dict(data: Mapping) -> "SolverConfig":
        known = {f: data[f] for f in (
            "n_modes", "dt", "t_end", "n_grassmann", "gauge", "dealias", "sample_stride",
        ) if f in data}
        return SolverConfig(**known)


def grid(n_modes: int) -> np.ndarray:
    return TWO_PI * np.arange(n_modes) / n_modes


def spectral_dx(arr: np.ndarray, order: int = 1) -> np.ndarray:
    n = arr.shape[-1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    return np.fft.irfft(np.fft.rfft(arr) * (1j * k) ** order, n)


def spectral_antiderivative(arr: np.ndarray) -> np.ndarray:
    """Zero-mean antiderivative on the circle; the input mean is discarded."""
    n = arr.shape[-1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    spec = np.fft.rfft(arr)
    spec[0] = 0.0
    spec[1:] = spec[1:] / (1j * k[1:])
    return np.fft.irfft(spec, n)


def dealias_23(arr: np.ndarray) -> np.ndarray:
    """Standard two-thirds truncation of the top modes."""
    n = arr.shape[-1]
    spec = np.fft.rfft(arr)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    spec[k > n / 3.0] = 0.0
    return np.fft.irfft(spec, n)


@dataclass
class GridState:
    """Physical-space samples of every Grassmann level of u and xi.

    Only even-cardinality levels of u and odd-cardinality levels of xi exist;
    the complementary levels are identically zero by parity and never stored.
    """

    u: LevelArrays
    xi: LevelArrays
    time: float = 0.0

    @property
    def n_modes(self) -> int:
        for arr in self.u.values():
            return arr.shape[-1]
        for arr in self.xi.values():
            return arr.shape[-1]
        raise ValueError("empty state")

    def copy(self) -> "GridState":
        return GridState(
            {m: a.copy() for m, a in self.u.items()},
            {m: a.copy() for m, a in self.xi.items()},
            self.time,
        )

    @staticmethod
    def zeros(n_modes: int, n_grassmann: int, time: float = 0.0) -> "GridState":
        u = {m: np.zeros(n_modes) for m in even_masks(n_grassmann)}
        xi = {m: np.zeros(n_modes) for m in odd_masks(n_grassmann)}
        return GridState(u, xi, time)

    def finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.u.values()) and all(
            np.isfinite(a).all() for a in self.xi.values()
        )


def level_map(levels: LevelArrays, f: Callable[[np.ndarray], np.ndarray]) -> LevelArrays:
    return {m: f(a) for m, a in levels.items()}


def level_product(a: LevelArrays, b: LevelArrays) -> LevelArrays:
    """Pointwise Grassmann product of two level families."""
    out: LevelArrays = {}
    for ma, arr_a in a.items():
        for mb, arr_b in b.items():
            sign = merge_sign(ma, mb)
            if sign == 0:
                continue
            mask = ma | mb
            if mask in out:
                out[mask] = out[mask] + sign * (arr_a * arr_b)
            else:
                out[mask] = sign * (arr_a * arr_b)
    return out


def level_sum(*families: LevelArrays) -> LevelArrays:
    out: LevelArrays = {}
    for fam in families:
        for m, a in fam.items():
            out[m] = out[m] + a if m in out else a.copy()
    return out


def level_scale(c: float, fam: LevelArrays) -> LevelArrays:
    return {m: c * a for m, a in fam.items()}


def _project(fam: LevelArrays, masks: Sequence[int], n: int) -> LevelArrays:
    return {m: fam.get(m, np.zeros(n)) for m in masks}


def rhs_once_integrated(state: GridState, cfg: SolverConfig) -> Tuple[LevelArrays, LevelArrays]:
    """Time derivatives (u_t, xi_t) from the once-integrated equations.

    u_tx  = -(u u_xx + u_x**2/2 + xi_x xi_xx/2) - a(t)
    xi_tx = -(u xi_xx + u_x xi_x/2)             - b(t)

    a and b are the unique Grassmann-valued constants making the right sides
    mean-free (periodic solvability); u_t and xi_t then come from the
    zero-mean spectral antiderivative.
    """
    n = state.n_modes
    u_x = level_map(state.u, spectral_dx)
    u_xx = level_map(state.u, lambda v: spectral_dx(v, 2))
    xi_x = level_map(state.xi, spectral_dx)
    xi_xx = level_map(state.xi, lambda v: spectral_dx(v, 2))

    w = level_scale(
        -1.0,
        level_sum(
            level_product(state.u, u_xx),
            level_scale(0.5, level_product(u_x, u_x)),
            level_scale(0.5, level_product(xi_x, xi_xx)),
        ),
    )
    v = level_scale(
        -1.0,
        level_sum(
            level_product(state.u, xi_xx),
            level_scale(0.5, level_product(u_x, xi_x)),
        ),
    )
    w = _project(w, list(state.u.keys()), n)
    v = _project(v, list(state.xi.keys()), n)
    if cfg.dealias:
        w = level_map(w, dealias_23)
        v = level_map(v, dealias_23)
    # subtracting the mean applies the gauge constants a(t), b(t)
    du = {m: spectral_antiderivative(arr - arr.mean()) for m, arr in w.items()}
    dxi = {m: spectral_antiderivative(arr - arr.mean()) for m, arr in v.items()}
    return du, dxi


def step(state: GridState, cfg: SolverConfig) -> GridState:
    """One classical fourth-order explicit step of size cfg.dt."""
    dt = cfg.dt
    max_u = max((float(np.abs(a).max()) for a in state.u.values()), default=0.0)
    if dt * max_u > TWO_PI / state.n_modes:
        warnings.warn(
            f"dt*max|u| = {dt * max_u:.3g} exceeds the grid spacing; "
            "the step may be under-resolved",
            RuntimeWarning,
            stacklevel=2,
        )

    def add(s: GridState, c: float, du: LevelArrays, dxi: LevelArrays) -> GridState:
        return GridState(
            {m: s.u[m] + c * du[m] for m in s.u},
            {m: s.xi[m] + c * dxi[m] for m in s.xi},
            s.time,
        )

    with np.errstate(all="ignore"):
        k1u, k1x = rhs_once_integrated(state, cfg)
        k2u, k2x = rhs_once_integrated(add(state, dt / 2, k1u, k1x), cfg)
        k3u, k3x = rhs_once_integrated(add(state, dt / 2, k2u, k2x), cfg)
        k4u, k4x = rhs_once_integrated(add(state, dt, k3u, k3x), cfg)
        new = GridState(
            {
                m: state.u[m] + dt / 6 * (k1u[m] + 2 * k2u[m] + 2 * k3u[m] + k4u[m])
                for m in state.u
            },
            {
                m: state.xi[m] + dt / 6 * (k1x[m] + 2 * k2x[m] + 2 * k3x[m] + k4x[m])
                for m in state.xi
            },
            state.time + dt,
        )
    if not new.finite():
        diagnostics = {
            "max_abs_u": max_u,
            "max_abs_ux": max(
                (float(np.abs(spectral_dx(a)).max()) for a in state.u.values()),
                default=0.0,
            ),
        }
        raise BlowUpError(new.time, diagnostics)
    return new


def conserved_quantities(state: GridState, n_grassmann: int) -> Tuple[GrassmannElement, GrassmannElement]:
    """Spectral quadrature of the two invariants as Grassmann numbers.

    H1 = (1/2) integral (u_x**2 + xi_xx xi_x) dx
    H2 = (1/2) integral (u u_x**2 - u xi_x xi_xx) dx
    """
    n = state.n_modes
    u_x = level_map(state.u, spectral_dx)
    xi_x = level_map(state.xi, spectral_dx)
    xi_xx = level_map(state.xi, lambda a: spectral_dx(a, 2))
    h1_density = level_sum(level_product(u_x, u_x), level_product(xi_xx, xi_x))
    uux2 = level_product(state.u, level_product(u_x, u_x))
    uxx = level_product(state.u, level_product(xi_x, xi_xx))
    h2_density = level_sum(uux2, level_scale(-1.0, uxx))
    h1 = {m: 0.5 * a.mean() * TWO_PI for m, a in h1_density.items()}
    h2 = {m: 0.5 * a.mean() * TWO_PI for m, a in h2_density.items()}
    return (
        GrassmannElement(n_grassmann, h1),
        GrassmannElement(n_grassmann, h2),
    )


@dataclass
class ConservedSample:
    time: float
    h1: GrassmannElement
    h2: GrassmannElement
    max_abs_ux: float


@dataclass
class Trajectory:
    states: List[GridState] = field(default_factory=list)
    samples: List[ConservedSample] = field(default_factory=list)
    sample_dt: float = 0.0

    @property
    def final(self) -> GridState:
        return self.states[-1]


def evolve(state0: GridState, cfg: SolverConfig) -> Trajectory:
    """Advance to t_end, storing states and invariants every sample_stride steps."""
    n_steps = int(round(cfg.t_end / cfg.dt))
    traj = Trajectory(sample_dt=cfg.dt * cfg.sample_stride)

    def record(s: GridState) -> None:
        h1, h2 = conserved_quantities(s, cfg.n_grassmann)
        max_ux = max(
            (float(np.abs(spectral_dx(a)).max()) for a in s.u.values()), default=0.0
        )
        traj.states.append(s.copy())
        traj.samples.append(ConservedSample(s.time, h1, h2, max_ux))

    state = state0.copy()
    record(state)
    for i in range(1, n_steps + 1):
        state = step(state, cfg)
        if i % cfg.sample_stride == 0 or i == n_steps:
            record(state)
    return traj


def residual_check(traj: Trajectory) -> float:
    """Max PDE residual of the stored trajectory (manufactured-residual style).

    Time derivatives come from centered differences of the samples, space
    derivatives are spectral; both lines of the second-order system are
    evaluated on every Grassmann level.
    """
    if len(traj.states) < 3:
        raise ValueError("need at least three stored samples")
    # require uniform spacing (the last sample may repeat the stride boundary)
    times = [s.time for s in traj.states]
    dt_s = times[1] - times[0]
    usable = len(traj.states)
    for i in range(1, usable):
        if abs((times[i] - times[i - 1]) - dt_s) > 1e-12:
            usable = i
            break
    worst = 0.0
    for i in range(1, usable - 1):
        prev, cur, nxt = traj.states[i - 1], traj.states[i], traj.states[i + 1]
        u_t = {m: (nxt.u[m] - prev.u[m]) / (2 * dt_s) for m in cur.u}
        xi_t = {m: (nxt.xi[m] - prev.xi[m]) / (2 * dt_s) for m in cur.xi}
        u_x = level_map(cur.u, spectral_dx)
        u_xx = level_map(cur.u, lambda a: spectral_dx(a, 2))
        u_xxx = level_map(cur.u, lambda a: spectral_dx(a, 3))
        xi_x = level_map(cur.xi, spectral_dx)
        xi_xx = level_map(cur.xi, lambda a: spectral_dx(a, 2))
        xi_xxx = level_map(cur.xi, lambda a: spectral_dx(a, 3))
        line1 = level_sum(
            level_map(u_t, lambda a: -spectral_dx(a, 2)),
            level_scale(-2.0, level_product(u_x, u_xx)),
            level_scale(-1.0, level_product(cur.u, u_xxx)),
            level_scale(-0.5, level_product(xi_x, xi_xxx)),
        )
        line2 = level_sum(
            level_map(xi_t, lambda a: -spectral_dx(a, 2)),
            level_scale(-1.0, level_product(cur.u, xi_xxx)),
            level_scale(-1.5, level_product(u_x, xi_xx)),
            level_scale(-0.5, level_product(u_xx, xi_x)),
        )
        for fam in (line1, line2):
            for arr in fam.values():
                worst = max(worst, float(np.abs(arr).max()))
    return worst


# ---------------------------------------------------------------------------
# initial conditions and file formats


def fourier_series(n_modes: int, cos_amps: Mapping, sin_amps: Mapping) -> np.ndarray:
    """Real trigonometric polynomial from {wavenumber: amplitude} tables."""
    x = grid(n_modes)
    out = np.zeros(n_modes)
    for k, amp in cos_amps.items():
        out += float(amp) * np.cos(int(k) * x)
    for k, amp in sin_amps.items():
        out += float(amp) * np.sin(int(k) * x)
    return out


def _mask_from_level(level: Sequence[int], n_grassmann: int) -> int:
    mask = 0
    for index in level:
        index = int(index)
        if not 1 <= index <= n_grassmann:
            raise ValueError(f"generator index {index} outside 1..{n_grassmann}")
        if mask >> (index - 1) & 1:
            raise ValueError(f"repeated generator index {index}")
        mask |= 1 << (index - 1)
    return mask


def initial_state(spec: Mapping, cfg: SolverConfig) -> GridState:
    """Build a GridState from the JSON initial-condition specification.

    ``spec`` maps "u" and "xi" to lists of ``{"level": [...], "cos": {...},
    "sin": {...}}`` entries; levels are 1-based generator index lists, even
    cardinality for u, odd for xi.
    """
    state = GridState.zeros(cfg.n_modes, cfg.n_grassmann)
    for name, target, want_parity in (("u", state.u, 0), ("xi", state.xi, 1)):
        for entry in spec.get(name, []):
            mask = _mask_from_level(entry.get("level", []), cfg.n_grassmann)
            if mask.bit_count() % 2 != want_parity:
                raise ValueError(
                    f"{name} component on level {entry.get('level')} has the wrong parity"
                )
            target[mask] += fourier_series(
                cfg.n_modes, entry.get("cos", {}), entry.get("sin", {})
            )
    return state


def load_config(path: str) -> Tuple[SolverConfig, Mapping]:
    with open(path) as handle:
        data = json.load(handle)
    cfg = SolverConfig.from_dict(data)
    return cfg, data.get("initial", {})


def mask_label(mask: int, n_grassmann: int) -> str:
    if mask == 0:
        return "body"
    return "".join(str(i + 1) for i in range(n_grassmann) if mask >> i & 1)


def write_series_csv(path: str, traj: Trajectory, n_grassmann: int) -> None:
    """time, per-level H1 and H2, and max|u_x| for every stored sample."""
    e_masks = list(even_masks(n_grassmann))
    header = ["time"]
    header += [f"H1_{mask_label(m, n_grassmann)}" for m in e_masks]
    header += [f"H2_{mask_label(m, n_grassmann)}" for m in e_masks]
    header.append("max_abs_ux")
    lines = [",".join(header)]
    for sample in traj.samples:
        row = [f"{sample.time:.12g}"]
        row += [f"{sample.h1.coeffs.get(m, 0.0):.16e}" for m in e_masks]
        row += [f"{sample.h2.coeffs.get(m, 0.0):.16e}" for m in e_masks]
        row.append(f"{sample.max_abs_ux:.16e}")
        lines.append(",".join(row))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def write_state_csv(path: str, state: GridState, n_grassmann: int) -> None:
    """x followed by every stored level of u and xi."""
    n = state.n_modes
    x = grid(n)
    header = ["x"]
    header += [f"u_{mask_label(m, n_grassmann)}" for m in sorted(state.u)]
    header += [f"xi_{mask_label(m, n_grassmann)}" for m in sorted(state.xi)]
    lines = [",".join(header)]
    for j in range(n):
        row = [f"{x[j]:.16e}"]
        row += [f"{state.u[m][j]:.16e}" for m in sorted(state.u)]
        row += [f"{state.xi[m][j]:.16e}" for m in sorted(state.xi)]
        lines.append(",".join(row))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
