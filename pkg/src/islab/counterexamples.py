"""Small-data stability in spite of unstable linear part.

The linear part doubles y; a compact term feeds |y| into an auxiliary
coordinate, and a quadratically small term switches the doubling off once
that coordinate has been lit. Orbits starting near 0 therefore stay near 0
even though r_e(A) = 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvariantViolation, PreconditionError
from .io import write_csv
from .operators import make_diagonal

EPS_MAX = 2.0 ** -7
SLACK = 1e-12
H0_DIM = 16


def _hat(x, nodes, heights):
    x = np.asarray(x, dtype=float)
    return np.interp(x, nodes, heights, left=0.0, right=0.0)


@dataclass(frozen=True)
class BumpPair:
    """Piecewise-linear bump functions f(s) and g(s, t) at scale eps."""

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < EPS_MAX:
            raise InvalidArgument("eps must be < 2^-7 (and > 0)")

    @property
    def f_nodes(self):
        e = self.eps
        return (e ** 3, 4 * e ** 3, e / 2, e), (0.0, e / 2, e / 2, 0.0)

    def f(self, s):
        nodes, heights = self.f_nodes
        return _hat(s, nodes, heights)

    def hat_s(self, s):
        e = self.eps
        return _hat(s, (e ** 3, 4 * e ** 3, 16 * e ** 3, e), (0.0, 1.0, 1.0, 0.0))

    def hat_t(self, t):
        e = self.eps
        return _hat(t, (e / 8, e / 4, 3 * e / 4, e), (0.0, 1.0, 1.0, 0.0))

    def g(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        raw = 2.0 * self.hat_s(s) * self.hat_t(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = np.where(s > 0, s + t * t / np.where(s > 0, s, 1.0), 0.0)
        return np.where(s > 0, np.minimum(raw, cap), 0.0)


def build_bumps(eps: float) -> BumpPair:
    return BumpPair(float(eps))


# -- one auxiliary slot ---------------------------------------------------------

@dataclass
class Ex52State:
    y: np.ndarray
    a: complex

    @property
    def norm(self):
        return math.sqrt(float(np.vdot(self.y, self.y).real) + abs(self.a) ** 2)


def step_ex52(bp: BumpPair, x: Ex52State, with_G: bool = True) -> Ex52State:
    """(y, a) -> ((2 - g(|y|, |a|)) y, f(|y|)); ``with_G=False`` drops g."""
    ny = float(np.linalg.norm(x.y))
    gv = float(bp.g(ny, abs(x.a))) if with_G else 0.0
    return Ex52State((2.0 - gv) * x.y, complex(float(bp.f(ny))))


@dataclass
class StabilityReport:
    passed: bool
    sup_y: np.ndarray
    sup_a: np.ndarray
    sup_x: np.ndarray
    bounds: dict
    n_samples: int

    def checks(self):
        out = []
        for key, arr in (("sup_y", self.sup_y), ("sup_a", self.sup_a), ("sup_x", self.sup_x)):
            if key not in self.bounds:
                continue
            b = self.bounds[key]
            v = float(arr.max()) if arr.size else 0.0
            out.append({"name": key, "value": v, "bound": b, "margin": b - v,
                        "pass": bool(v <= b * (1 + SLACK))})
        return out


def _ex52_norm_orbits(bp, ny, aa, n_steps, with_G=True, record=None):
    """Batch recursion on (|y_n|, |a_n|); the direction of y never changes."""
    ny = np.array(ny, dtype=float)
    aa = np.array(aa, dtype=float)
    sup_y, sup_a = ny.copy(), aa.copy()
    sup_x = np.hypot(ny, aa)
    if record is not None:
        record.append((ny.copy(), aa.copy()))
    for _ in range(n_steps):
        gv = bp.g(ny, aa) if with_G else 0.0
        ny, aa = np.abs(2.0 - gv) * ny, bp.f(ny)
        np.maximum(sup_y, ny, out=sup_y)
        np.maximum(sup_a, aa, out=sup_a)
        np.maximum(sup_x, np.hypot(ny, aa), out=sup_x)
        if record is not None:
            record.append((ny.copy(), aa.copy()))
    return sup_y, sup_a, sup_x


def verify_ex52(bp: BumpPair, x0, n_steps: int) -> StabilityReport:
    """Check sup|y_n| <= 16 eps^3, sup|a_n| <= eps/2 and sup||x_n|| <= eps.

    ``x0`` is one Ex52State or a list of them (checked as a batch).
    """
    states = [x0] if isinstance(x0, Ex52State) else list(x0)
    e = bp.eps
    ny = np.array([np.linalg.norm(s.y) for s in states])
    aa = np.array([abs(s.a) for s in states])
    if np.any(ny > e ** 3) or np.any(aa > e ** 3):
        raise PreconditionError("initial data must satisfy |y0| <= eps^3 and |a0| <= eps^3")
    sy, sa, sx = _ex52_norm_orbits(bp, ny, aa, n_steps)
    bounds = {"sup_y": 16 * e ** 3, "sup_a": e / 2, "sup_x": e}
    rep = StabilityReport(True, sy, sa, sx, bounds, len(states))
    rep.passed = all(c["pass"] for c in rep.checks())
    return rep


def ex52_trajectory(bp: BumpPair, x0: Ex52State, n_steps: int, with_G: bool = True):
    """Full-state orbit [x_0, ..., x_N]."""
    out = [x0]
    for _ in range(n_steps):
        out.append(step_ex52(bp, out[-1], with_G))
    return out


def ex52_system(bp: BumpPair, dim: int = H0_DIM):
    """(A, K, G) realising the map on C^dim + C for the dynamics module:
    A = diag(2, ..., 2, 0), K(y, a) = (0, f(|y|)) of rank one and the local
    term G(y, a) = (-g(|y|, |a|) y, 0)."""
    from .dynamics import CompactMap

    a_op = make_diagonal([2.0] * dim + [0.0], tail_meta={"limit": 2.0})
    e_a = np.zeros((dim + 1, 1), dtype=complex)
    e_a[dim, 0] = 1.0
    k = CompactMap(e_a, lambda x: np.array([float(bp.f(np.linalg.norm(x[:dim])))]))

    def g_map(x):
        out = np.zeros_like(x)
        out[:dim] = -float(bp.g(np.linalg.norm(x[:dim]), abs(x[dim]))) * x[:dim]
        return out

    return a_op, k, g_map


def sample_ex52(bp: BumpPair, n: int, seed: int, dim: int = H0_DIM):
    """Seeded random initial data with |y0| <= eps^3 and |a0| <= eps^3."""
    children = np.random.SeedSequence(seed).spawn(n)
    e3 = bp.eps ** 3
    out = []
    for ss in children:
        rng = np.random.default_rng(ss)
        d = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        ry = e3 * rng.random() ** (1.0 / (2 * dim))
        ra = e3 * math.sqrt(rng.random())
        out.append(Ex52State(ry * d, ra * np.exp(2j * math.pi * rng.random())))
    return out


def foil_growth(bp: BumpPair, x0: Ex52State, n_steps: int):
    """Per-step ratios |y_{n+1}|/|y_n| with g switched off."""
    traj = ex52_trajectory(bp, x0, n_steps, with_G=False)
    ny = np.array([np.linalg.norm(s.y) for s in traj])
    with np.errstate(divide="ignore", invalid="ignore"):
        return ny[1:] / ny[:-1]


# -- several slots ---------------------------------------------------------------

def check_eps_seq(eps_seq):
    eps = [float(e) for e in eps_seq]
    if not eps:
        raise InvalidArgument("eps_seq must be non-empty")
    if not 0 < eps[0] < EPS_MAX:
        raise InvalidArgument("eps_1 must be < 2^-7 (and > 0)")
    for e0, e1 in zip(eps, eps[1:]):
        if not 0 < e1 < e0 ** 3 / 4:
            raise InvalidArgument("eps_seq must satisfy 0 < eps_(j+1) < eps_j^3/4")
    return eps


@dataclass
class Ex53State:
    y: np.ndarray
    a: np.ndarray

    @property
    def norm(self):
        return math.sqrt(float(np.vdot(self.y, self.y).real) + float(np.vdot(self.a, self.a).real))


class Ex53:
    """The multi-scale map (y, (a_j)) -> ((2 - sum_j g_j(|y|, |a_j|)) y, (f_j(|y|)))."""

    def __init__(self, eps_seq):
        self.eps = check_eps_seq(eps_seq)
        self.bumps = [BumpPair(e) for e in self.eps]

    def terms(self, ny, abs_a):
        fv = np.array([float(b.f(ny)) for b in self.bumps])
        gv = np.array([float(b.g(ny, t)) for b, t in zip(self.bumps, abs_a)])
        if np.count_nonzero(fv) > 1 or np.count_nonzero(gv) > 1:
            raise InvariantViolation(f"more than one active scale at |y| = {ny}")
        return fv, gv

    def step(self, x: Ex53State) -> Ex53State:
        ny = float(np.linalg.norm(x.y))
        fv, gv = self.terms(ny, np.abs(x.a))
        return Ex53State((2.0 - gv.sum()) * x.y, fv.astype(complex))

    def G(self, x: Ex53State):
        """The quadratically small part (-sum_j g_j y, 0)."""
        ny = float(np.linalg.norm(x.y))
        gv = np.array([float(b.g(ny, t)) for b, t in zip(self.bumps, np.abs(x.a))])
        return Ex53State(-gv.sum() * x.y, np.zeros_like(x.a))

    def norm_orbit(self, ny, abs_a, n_steps, record=None):
        """Batch recursion on (|y|, |a_j|) with the one-active-scale check."""
        ny = np.array(ny, dtype=float)
        aa = np.array(abs_a, dtype=float).reshape(ny.size, len(self.eps))
        sup_x = np.sqrt(ny ** 2 + (aa ** 2).sum(axis=1))
        sup_y, sup_a = ny.copy(), aa.max(axis=1)
        if record is not None:
            record.append((ny.copy(), aa.copy()))
        for _ in range(n_steps):
            fv = np.stack([b.f(ny) for b in self.bumps], axis=1)
            gv = np.stack([b.g(ny, aa[:, j]) for j, b in enumerate(self.bumps)], axis=1)
            if np.any((fv != 0).sum(axis=1) > 1) or np.any((gv != 0).sum(axis=1) > 1):
                raise InvariantViolation("more than one active scale in a step")
            ny, aa = np.abs(2.0 - gv.sum(axis=1)) * ny, fv
            np.maximum(sup_y, ny, out=sup_y)
            np.maximum(sup_a, aa.max(axis=1), out=sup_a)
            np.maximum(sup_x, np.sqrt(ny ** 2 + (aa ** 2).sum(axis=1)), out=sup_x)
            if record is not None:
                record.append((ny.copy(), aa.copy()))
        return sup_y, sup_a, sup_x

    def sample(self, n, k, seed, dim=H0_DIM):
        """Seeded initial data uniform in the ball of radius eps_k^3/4."""
        r = self.eps[k - 1] ** 3 / 4
        children = np.random.SeedSequence(seed).spawn(n)
        d = dim + len(self.eps)
        out = []
        for ss in children:
            rng = np.random.default_rng(ss)
            v = rng.standard_normal(2 * d)
            v *= r * rng.random() ** (1.0 / (2 * d)) / np.linalg.norm(v)
            z = v[:d] + 1j * v[d:]
            out.append(Ex53State(z[:dim], z[dim:]))
        return out


def verify_ex53(eps_seq, x0, n_steps: int, k: int) -> StabilityReport:
    """Check sup_n ||x_n|| <= eps_k for data with ||x0|| <= eps_k^3/4."""
    sys = eps_seq if isinstance(eps_seq, Ex53) else Ex53(eps_seq)
    if not 1 <= k <= len(sys.eps):
        raise InvalidArgument("k out of range")
    states = [x0] if isinstance(x0, Ex53State) else list(x0)
    r = sys.eps[k - 1] ** 3 / 4
    if any(s.norm > r * (1 + SLACK) for s in states):
        raise PreconditionError("initial data must satisfy ||x0|| <= eps_k^3/4")
    ny = np.array([np.linalg.norm(s.y) for s in states])
    aa = np.array([np.abs(s.a) for s in states])
    sy, sa, sx = sys.norm_orbit(ny, aa, n_steps)
    rep = StabilityReport(True, sy, sa, sx, {"sup_x": sys.eps[k - 1]}, len(states))
    rep.passed = all(c["pass"] for c in rep.checks())
    return rep


def g_certificate(eps_seq, n_samples=1000, seed=0, dim=H0_DIM):
    """Check ||G(x)|| <= ||x||^2 on states drawn across all scales, with the
    auxiliary slot of the chosen scale inside the support of its switch."""
    sys = eps_seq if isinstance(eps_seq, Ex53) else Ex53(eps_seq)
    rng = np.random.default_rng(seed)
    ratios = []
    active = 0
    for _ in range(n_samples):
        j = int(rng.integers(len(sys.eps)))
        e = sys.eps[j]
        ny = math.exp(rng.uniform(math.log(e ** 3), math.log(e)))
        d = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        y = ny * d / np.linalg.norm(d)
        a = np.zeros(len(sys.eps), dtype=complex)
        a[j] = rng.uniform(0, e) * np.exp(2j * math.pi * rng.random())
        x = Ex53State(y, a)
        gx = sys.G(x)
        ng = gx.norm
        active += ng > 0
        ratios.append(ng / x.norm ** 2)
    ratios = np.array(ratios)
    return {"max_ratio": float(ratios.max()), "n_samples": n_samples, "n_active": int(active),
            "pass": bool(ratios.max() <= 1 + SLACK)}


def dump_orbits_csv(path, records):
    """CSV of one orbit: n, norm_y, abs_a_active, norm_x (``records`` from
    a norm recursion with a single sample)."""
    rows = []
    for n, (ny, aa) in enumerate(records):
        ny0 = float(np.ravel(ny)[0])
        a_row = np.abs(np.ravel(aa))
        a_act = float(a_row.max())
        rows.append((n, ny0, a_act, math.sqrt(ny0 ** 2 + float(np.sum(np.abs(a_row) ** 2)))))
    return write_csv(path, ["n", "norm_y", "abs_a_active", "norm_x"], rows)
