"""Galerkin simulation of semilinear damped and excited wave equations on [0, 1].

    u_tt = u_xx + sign * b(x) u_t - f(t, x, u),   u(t, 0) = u(t, 1) = 0,

with f(t, x, z) = psi(t, x, |z|^2) z. States use the interleaved energy
coordinates of :mod:`islab.operators` (p_n = n pi u_n, q_n = v_n), so
E0 = ||w||^2 / 2. The nonlinearity is evaluated by collocation on the grid
x_j = j/M, j = 1..M-1 with M = 2(n_modes + 1), using DST-I transforms; with
this choice the semi-discrete system is exactly Hamiltonian for the discrete
energy E_full = E0 + (1/M) sum_j phi(u_j), phi = (1/2) int_0^{|z|^2} psi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.fft

from .errors import InvalidArgument, PreconditionError, StepInstability
from .linalg import phi_matrices_eig, phi_matrices_pade
from .operators import (WAVE_BLOCKS, OperatorModel, StepDamping, conjugation_J,
                        damping_matrix, make_wave_blocks, mode_frequencies)

EXCITED = 1
DAMPED = -1
INTEGRATORS = ("etd2rk", "expeuler")
INSTABILITY_JUMP = 10.0


# -- nonlinearities -------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearitySpec:
    """f(t, x, z) = psi(t, x, |z|^2) z with antiderivative Psi in s, so the
    potential is phi = Psi/2.

    ``kappa(t)`` bounds |f| by kappa(t) (1 + |z|^alpha); ``omega(h)`` is a
    modulus of continuity in t in the same weighted sense.
    """

    psi_id: str
    psi: Callable
    Psi: Callable
    alpha: float
    kappa: Callable
    sign_condition: bool
    time_dependent: bool = False
    omega: Callable = lambda h: 0.0 * h
    params: dict = field(default_factory=dict)

    @property
    def is_zero(self):
        return self.psi_id == "zero"

    def f(self, t, x, z):
        z = np.asarray(z)
        return self.psi(t, x, np.abs(z) ** 2) * z

    def phi(self, t, x, z):
        return 0.5 * self.Psi(t, x, np.abs(np.asarray(z)) ** 2)

    def to_dict(self):
        return {"psi_id": self.psi_id, "alpha": self.alpha, "params": dict(self.params),
                "sign_condition": self.sign_condition}


def make_nonlinearity(psi_id="zero", **params) -> NonlinearitySpec:
    """Registry of nonlinearities. ``c`` scales psi; ``delta`` is the
    amplitude of the time modulation of ``cubic-tmod``."""
    c = float(params.get("c", 1.0))
    if psi_id == "zero":
        z0 = lambda t, x, s: 0.0 * s
        return NonlinearitySpec("zero", z0, z0, 1.0, lambda t: 0.0, True, params={})
    if psi_id == "linear":
        return NonlinearitySpec("linear", lambda t, x, s: c + 0.0 * s, lambda t, x, s: c * s,
                                1.0, lambda t: abs(c), c >= 0, params={"c": c})
    if psi_id == "cubic":
        return NonlinearitySpec("cubic", lambda t, x, s: c * s, lambda t, x, s: 0.5 * c * s * s,
                                3.0, lambda t: abs(c), c >= 0, params={"c": c})
    if psi_id == "saturating":
        return NonlinearitySpec("saturating", lambda t, x, s: c * s / (1.0 + s),
                                lambda t, x, s: c * (s - np.log1p(s)),
                                1.0, lambda t: abs(c), c >= 0, params={"c": c})
    if psi_id == "cubic-tmod":
        d = float(params.get("delta", 0.5))
        if abs(d) >= 1:
            raise InvalidArgument("cubic-tmod needs |delta| < 1")
        return NonlinearitySpec(
            "cubic-tmod", lambda t, x, s: c * (1.0 + d * np.sin(t)) * s,
            lambda t, x, s: 0.5 * c * (1.0 + d * np.sin(t)) * s * s,
            3.0, lambda t: abs(c) * (1.0 + abs(d)), c >= 0, time_dependent=True,
            omega=lambda h: abs(c * d) * np.asarray(h), params={"c": c, "delta": d})
    raise InvalidArgument(f"unknown nonlinearity {psi_id!r}")


NONLINEARITIES = ("zero", "linear", "cubic", "saturating", "cubic-tmod")


def check_growth(spec: NonlinearitySpec, n_samples=1000, seed=0, t_range=(0.0, 10.0)):
    """Sampled max of |f| / (kappa(t)(1 + |z|^alpha)) and min of phi."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(*t_range, n_samples)
    x = rng.random(n_samples)
    z = np.exp(rng.uniform(-6, 3, n_samples)) * np.exp(2j * np.pi * rng.random(n_samples))
    fv = np.abs(spec.f(t, x, z))
    kap = np.array([spec.kappa(ti) for ti in t])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(kap > 0, fv / (kap * (1 + np.abs(z) ** spec.alpha)), np.where(fv > 0, np.inf, 0))
    return {"max_growth_ratio": float(ratio.max()), "min_phi": float(np.min(spec.phi(t, x, z)))}


# -- collocation ---------------------------------------------------------------

def grid_size(n_modes):
    """M with collocation points x_j = j/M, j = 1..M-1."""
    return 2 * (n_modes + 1)


def collocation_points(n_modes):
    m = grid_size(n_modes)
    return np.arange(1, m) / m


def modes_to_grid(uhat, n_modes):
    """u(x_j) = sum_n uhat_n sqrt(2) sin(n pi x_j)."""
    m = grid_size(n_modes)
    pad = np.zeros(uhat.shape[:-1] + (m - 1,), dtype=complex)
    pad[..., :n_modes] = uhat
    return (math.sqrt(2.0) / 2.0) * scipy.fft.dst(pad, type=1, axis=-1)


def grid_to_modes(vals, n_modes):
    """Discrete projection (sqrt(2)/M) sum_j v_j sin(n pi x_j), n <= n_modes."""
    m = grid_size(n_modes)
    out = scipy.fft.dst(np.asarray(vals, dtype=complex), type=1, axis=-1)
    return (math.sqrt(2.0) / (2.0 * m)) * out[..., :n_modes]


def displacement_modes(w, n_modes):
    return w[..., 0::2] / mode_frequencies(n_modes)


def nonlinearity_apply(spec: NonlinearitySpec, t, w, n_modes=None, time_flip=False):
    """K(t, w) = (0, -P f(t, ., u)): collocate u, evaluate -f, project back
    and place the result in the velocity slots."""
    w = np.asarray(w, dtype=complex)
    n = w.shape[-1] // 2 if n_modes is None else n_modes
    out = np.zeros_like(w)
    if spec.is_zero:
        return out
    u = modes_to_grid(displacement_modes(w, n), n)
    tt = -t if time_flip else t
    fv = spec.f(tt, collocation_points(n), u)
    out[..., 1::2] = -grid_to_modes(fv, n)
    return out


def potential_energy(spec: NonlinearitySpec, t, w, n_modes, time_flip=False):
    """(1/M) sum_j phi(t, x_j, u_j), the collocation form of int phi."""
    if spec.is_zero:
        return 0.0
    u = modes_to_grid(displacement_modes(np.asarray(w, dtype=complex), n_modes), n_modes)
    tt = -t if time_flip else t
    return float(np.sum(spec.phi(tt, collocation_points(n_modes), u)) / grid_size(n_modes))


# -- systems -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WaveSystem:
    n_modes: int
    damping: object
    sign: int
    operator: OperatorModel
    nonlin: NonlinearitySpec
    dt: float = 1e-3
    integrator: str = "etd2rk"
    time_flip: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return 2 * self.n_modes

    def damping_matrix(self):
        """Galerkin matrix of multiplication by b (acts on velocity slots)."""
        b = self.damping
        if isinstance(b, (int, float, np.floating, np.integer)):
            return float(b) * np.eye(self.n_modes)
        if isinstance(b, np.ndarray) and b.ndim == 1:
            return np.diag(b.astype(float))
        return damping_matrix(b, self.n_modes)

    def b_sup(self):
        b = self.damping
        if isinstance(b, (int, float, np.floating, np.integer)):
            return abs(float(b))
        if isinstance(b, StepDamping):
            return max(abs(v) for v in b.values)
        if isinstance(b, np.ndarray):
            return float(np.max(np.abs(b)))
        return float(np.max(np.abs(b(np.linspace(0, 1, 4097)))))

    def spectral_radius(self):
        op = self.operator
        if op.kind == WAVE_BLOCKS:
            from .spectral import eigen
            return float(np.max(np.abs(eigen(op).eigenvalues)))
        return float(np.max(np.abs(np.linalg.eigvals(op.matrix()))))

    def with_(self, **kw):
        return replace(self, _cache={}, **kw)

    def propagators(self):
        """(E, P1, P2) = (e^{hL}, h phi1(hL), h phi2(hL)) as stacked 2x2
        blocks for block models or dense matrices otherwise."""
        key = ("prop", self.dt)
        if key in self._cache:
            return self._cache[key]
        h = self.dt
        op = self.operator
        m = op.data["blocks"] if op.kind == WAVE_BLOCKS else op.matrix()
        m = np.asarray(m)
        res = phi_matrices_eig(h * m)
        if res is None:
            res = phi_matrices_pade(h * m)
        e, p1, p2 = res
        if np.isrealobj(m) or np.max(np.abs(np.imag(m))) == 0:
            e, p1, p2 = e.real, p1.real, p2.real
        out = (e, h * p1, h * p2)
        self._cache[key] = out
        return out

    def apply(self, mat, w):
        if self.operator.kind == WAVE_BLOCKS:
            wb = w.reshape(self.n_modes, 2)
            return np.einsum("nij,nj->ni", mat, wb).reshape(-1)
        return mat @ w


def assemble(n_modes, damping=0.0, sign=DAMPED, nonlin=None, dt=1e-3, integrator="etd2rk"):
    """Wave system with linear part (0 I; Delta sign*b) in energy coordinates."""
    if sign not in (EXCITED, DAMPED):
        raise InvalidArgument("sign must be +1 (excited) or -1 (damped)")
    if integrator not in INTEGRATORS:
        raise InvalidArgument(f"integrator must be one of {INTEGRATORS}")
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    if isinstance(damping, (list, tuple)):
        damping = np.asarray(damping, dtype=float)
    op = make_wave_blocks(damping, n_modes, sign=sign)
    return WaveSystem(n_modes, damping, sign, op, nonlin or make_nonlinearity("zero"), float(dt),
                      integrator)


def dt_gate(sys: WaveSystem):
    """Largest dt with dt * max|eigenvalue| <= 1."""
    return 1.0 / sys.spectral_radius()


def backward_transform(sys: WaveSystem, w0):
    """Time reversal u~(t) = u(-t): negate the velocity, flip the damping
    sign and the time argument of f. Applying it twice is the identity."""
    w0 = np.asarray(w0)
    flipped = assemble(sys.n_modes, sys.damping, -sys.sign, sys.nonlin, sys.dt, sys.integrator)
    flipped = flipped.with_(time_flip=not sys.time_flip)
    return flipped, conjugation_J(sys.dim) * w0


# -- integration ---------------------------------------------------------------

@dataclass
class EnergyRecord:
    t: float
    E0: float
    E_full: float
    state_norm: float


@dataclass
class WaveRun:
    t: np.ndarray
    E0: np.ndarray
    E_full: np.ndarray
    norm: np.ndarray
    final: np.ndarray
    states: list | None = None
    dissipation: np.ndarray | None = None   # int b |u_t|^2 at each record
    dissipated: np.ndarray | None = None    # its time integral, trapezoid per step

    @property
    def records(self):
        return [EnergyRecord(*r) for r in zip(self.t, self.E0, self.E_full, self.norm)]

    def rows(self):
        return list(zip(self.t, self.E0, self.E_full, self.norm))


def _energy(sys, t, w):
    e0 = 0.5 * float(np.vdot(w, w).real)
    return e0, e0 + potential_energy(sys.nonlin, t, w, sys.n_modes, sys.time_flip)


def integrate(sys: WaveSystem, w0, t_end: float, record_every: int = 1,
              keep_states: bool = False) -> WaveRun:
    """Exponential integration of w' = L w + K(t, w).

    ``expeuler``: w+ = E w + P1 N(t, w).
    ``etd2rk``:   a = E w + P1 N(t, w);  w+ = a + P2 (N(t+h, a) - N(t, w)).
    Both are exact for the linear part.
    """
    if t_end <= 0:
        raise InvalidArgument("t_end must be positive")
    w = np.array(w0, dtype=complex)
    if w.shape != (sys.dim,):
        raise InvalidArgument(f"w0 must have length {sys.dim}")
    h = sys.dt
    steps = int(round(t_end / h))
    if abs(steps * h - t_end) > 1e-9 * max(1.0, t_end):
        raise InvalidArgument("t_end must be a multiple of dt")
    e, p1, p2 = sys.propagators()
    linear = sys.nonlin.is_zero
    flip = sys.time_flip
    bmat = sys.damping_matrix()

    def nl(t, x):
        return nonlinearity_apply(sys.nonlin, t, x, sys.n_modes, flip)

    def diss(x):
        q = x[1::2]
        return float(np.vdot(q, bmat @ q).real)

    ts, e0s, efs, ns, ds, cum = [], [], [], [], [], []
    states = [] if keep_states else None
    acc = 0.0

    def record(t, x):
        a0, af = _energy(sys, t, x)
        ts.append(t)
        e0s.append(a0)
        efs.append(af)
        ns.append(math.sqrt(2 * a0))
        ds.append(diss(x))
        cum.append(acc)
        if keep_states:
            states.append(x.copy())

    record(0.0, w)
    prev = float(np.linalg.norm(w))
    d_prev = ds[0]
    for k in range(steps):
        t = k * h
        if linear:
            w_new = sys.apply(e, w)
        else:
            n0 = nl(t, w)
            a = sys.apply(e, w) + sys.apply(p1, n0)
            if sys.integrator == "expeuler":
                w_new = a
            else:
                w_new = a + sys.apply(p2, nl(t + h, a) - n0)
        cur = float(np.linalg.norm(w_new))
        if not np.isfinite(cur) or (prev > 0 and cur > INSTABILITY_JUMP * prev):
            partial = WaveRun(np.array(ts), np.array(e0s), np.array(efs), np.array(ns), w, states,
                              np.array(ds), np.array(cum))
            raise StepInstability(f"norm jumped from {prev:.3e} to {cur:.3e} at t = {t + h:.6g}; "
                                  f"reduce dt below {dt_gate(sys):.3e}", partial=partial)
        w, prev = w_new, cur
        d_new = diss(w)
        acc += 0.5 * h * (d_prev + d_new)
        d_prev = d_new
        if (k + 1) % record_every == 0 or k + 1 == steps:
            record((k + 1) * h, w)
    return WaveRun(np.array(ts), np.array(e0s), np.array(efs), np.array(ns), w, states,
                   np.array(ds), np.array(cum))


def fit_growth_rate(run_or_records, t_min: float):
    """Least-squares slope of log ||w|| against t for t >= t_min and r^2."""
    if isinstance(run_or_records, WaveRun):
        t, nrm = run_or_records.t, run_or_records.norm
    else:
        t = np.array([r.t for r in run_or_records])
        nrm = np.array([r.state_norm for r in run_or_records])
    sel = t >= t_min
    t, nrm = t[sel], nrm[sel]
    if t.size < 10:
        raise InvalidArgument("need at least 10 records in the fit window")
    if np.any(nrm <= 0):
        raise InvalidArgument("state norms must be positive")
    y = np.log(nrm)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(r2)


def _gronwall_c(t, ef, c_max=1e3):
    """Smallest c >= 0 with E(t) <= (E(0) + c t) e^{c t} on all records."""
    def ok(c):
        return bool(np.all(ef <= (ef[0] + c * t) * np.exp(c * t) * (1 + 1e-12) + 1e-300))
    if ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2
        if hi > c_max:
            return math.inf
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def energy_certificate(sys: WaveSystem, run: WaveRun, rel_tol: float = 1e-4):
    """(i) E_full >= E0 >= 0; (ii) Gronwall bound E_full(t) <= (E_full(0) + c t)
    e^{c t} with the fitted c compared to 2 sup|b| (plus rel_tol per unit time
    for integrator drift); (iii) for time-independent
    f and excited sign, increments of E_full between records against the
    per-step trapezoid value of int b |u_t|^2 dt (relative to dt * E_full)."""
    if not sys.nonlin.sign_condition:
        raise PreconditionError("the energy certificate needs phi >= 0")
    scale = max(float(np.max(run.E_full)), 1e-300)
    gap = run.E_full - run.E0
    i_ok = bool(np.min(gap) >= -1e-12 * scale and np.min(run.E0) >= 0)
    c_fit = _gronwall_c(run.t, run.E_full)
    c_theory = 2.0 * sys.b_sup() if sys.sign == EXCITED else 0.0
    ii_ok = bool(c_fit <= c_theory + rel_tol or (sys.nonlin.time_dependent and math.isfinite(c_fit)))
    out = {
        "E_full_ge_E0": i_ok,
        "min_E_full_minus_E0": float(np.min(gap)),
        "gronwall_c": c_fit,
        "gronwall_c_bound": c_theory,
        "gronwall_ok": ii_ok,
    }
    iii_ok = True
    if not sys.nonlin.time_dependent and sys.sign == EXCITED and run.dissipated is not None:
        dt = np.diff(run.t)
        inc = np.diff(run.E_full)
        trap = np.diff(run.dissipated)
        rel = np.abs(inc - trap) / (dt * np.maximum(run.E_full[:-1], 1e-300))
        worst = int(np.argmax(rel))
        iii_ok = bool(rel[worst] <= rel_tol)
        out.update({"increment_max_rel_mismatch": float(rel[worst]),
                    "increment_worst_t": float(run.t[worst + 1]), "increment_ok": iii_ok})
    out["pass"] = bool(i_ok and ii_ok and iii_ok)
    return out


def energy_drift(run: WaveRun):
    """max_t |E_full(t) - E_full(0)| / (E_full(0) * t_end)."""
    return float(np.max(np.abs(run.E_full - run.E_full[0])) / (run.E_full[0] * run.t[-1]))


# -- convenient initial data ---------------------------------------------------

def mode_eigenvector(sys: WaveSystem, mode: int, upper: bool = True):
    """Unit eigenvector of the mode-``mode`` block (block models only),
    for the eigenvalue with the larger (``upper``) imaginary part."""
    if sys.operator.kind != WAVE_BLOCKS:
        raise InvalidArgument("mode eigenvectors are only available for block models")
    blk = sys.operator.data["blocks"][mode - 1]
    lam, vec = np.linalg.eig(blk)
    j = int(np.argmax(lam.imag)) if upper else int(np.argmin(lam.imag))
    w = np.zeros(sys.dim, dtype=complex)
    w[2 * (mode - 1):2 * mode] = vec[:, j] / np.linalg.norm(vec[:, j])
    return w, complex(lam[j])


def smooth_data(n_modes, amplitude=1.0, n_active=4, seed=0):
    """Real initial data on the first ``n_active`` modes with decaying
    coefficients, scaled to norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    w = np.zeros(2 * n_modes)
    k = min(n_active, n_modes)
    w[:2 * k] = rng.standard_normal(2 * k) / np.repeat(np.arange(1, k + 1), 2)
    return amplitude * w / np.linalg.norm(w)
