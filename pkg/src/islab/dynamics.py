"""Discrete iterations x_{n+1} = A x_n + K_{n+1}(x_n) and growing orbits.

The perturbations are finite-rank maps with a declared orthonormal range
basis, so every accumulated perturbation span is known exactly.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import InvalidArgument, PreconditionError, UnsupportedModel
from .linalg import extend_basis, orthonormality_defect
from .operators import SCALED_IDENTITY, OperatorModel
from .spectral import mu_norm_estimate

OVERFLOW_GUARD = 1e100
RANGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CompactMap:
    """K(x) = range_basis @ coefficient_fn(x), a finite-rank (hence compact)
    map. ``range_basis`` has orthonormal columns."""

    range_basis: np.ndarray
    coefficient_fn: Callable
    time_index: int | None = None
    lipschitz_hint: float | None = None

    def __post_init__(self):
        q = np.asarray(self.range_basis, dtype=complex)
        if q.ndim != 2:
            raise InvalidArgument("range_basis must be a dim x rank array")
        if q.shape[1] and orthonormality_defect(q) > 1e-10:
            raise InvalidArgument("range_basis columns must be orthonormal")
        object.__setattr__(self, "range_basis", q)

    @property
    def dim(self):
        return self.range_basis.shape[0]

    @property
    def rank(self):
        return self.range_basis.shape[1]

    def __call__(self, x):
        if self.rank == 0:
            return np.zeros(self.dim, dtype=complex)
        c = np.asarray(self.coefficient_fn(np.asarray(x, dtype=complex)), dtype=complex).ravel()
        if c.size != self.rank:
            raise InvalidArgument(f"coefficient_fn returned {c.size} values for rank {self.rank}")
        return self.range_basis @ c

    def rescaled(self, theta, n):
        """The map x -> theta^n K(theta^{-(n-1)} x) (same range basis)."""
        theta = complex(theta)
        fn = self.coefficient_fn
        return CompactMap(self.range_basis,
                          lambda x: theta ** n * np.asarray(fn(theta ** (-(n - 1)) * x)),
                          n, None if self.lipschitz_hint is None else abs(theta) * self.lipschitz_hint)

    def sup_on_ball(self, radius, n_samples=1000, seed=0):
        """Largest sampled ||K(x)|| over ||x|| <= radius."""
        pts = sample_ball(np.zeros(self.dim, dtype=complex), radius, n_samples,
                          np.random.default_rng(seed))
        return max(float(np.linalg.norm(self(p))) for p in pts)


def zero_map(dim):
    return CompactMap(np.zeros((dim, 0), dtype=complex), lambda x: np.zeros(0))


def quadratic_rank_one(dim, index, strength=0.1):
    """x -> strength * <x, e_index>^2 e_index."""
    e = np.zeros((dim, 1), dtype=complex)
    e[index, 0] = 1.0
    return CompactMap(e, lambda x: np.array([strength * x[index] ** 2]), lipschitz_hint=strength)


def _k_at(k_seq, n):
    """Map used for step n (1-based): K_n."""
    if len(k_seq) == 1:
        return k_seq[0]
    return k_seq[n - 1]


@dataclass
class Trajectory:
    norms: np.ndarray
    log_norms: np.ndarray
    states: list
    start_index: int = 0
    lower_bound: np.ndarray | None = None
    truncated: bool = False
    guarded_from: int | None = None

    @property
    def N(self):
        return len(self.norms) - 1


def iterate(a: OperatorModel, k_seq: Sequence[CompactMap], x0, n_steps: int,
            local_map: Callable | None = None, keep_states: bool = True) -> Trajectory:
    """f_n(x0) for n = 0..n_steps, with f_n = (A + K_n) f_{n-1}.

    ``local_map`` is an optional extra (non-compact) term added at every
    step. Once ||x|| exceeds 1e100 the state is carried as (log-norm,
    direction); a non-finite perturbation in that regime truncates the
    trajectory with a flag.
    """
    if n_steps < 1:
        raise InvalidArgument("N must be >= 1")
    k_seq = list(k_seq)
    if not k_seq:
        k_seq = [zero_map(a.dim)]
    if len(k_seq) != 1 and len(k_seq) < n_steps:
        raise InvalidArgument("K_seq must have length >= N or a single reused map")
    x = np.array(x0, dtype=complex)
    if x.shape != (a.dim,):
        raise InvalidArgument(f"x0 has shape {x.shape}, model dim is {a.dim}")
    log_scale = 0.0
    nrm = float(np.linalg.norm(x))
    norms = [nrm]
    logs = [math.log(nrm) if nrm > 0 else -math.inf]
    states = [x.copy()] if keep_states else []
    truncated = False
    guarded_from = None
    for n in range(1, n_steps + 1):
        k = _k_at(k_seq, n)
        if log_scale == 0.0:
            nxt = a.apply(x) + k(x)
            if local_map is not None:
                nxt = nxt + local_map(x)
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                scale = np.exp(log_scale)
                full = x * scale
                pert = k(full) / scale
                if local_map is not None:
                    pert = pert + local_map(full) / scale
            if not np.all(np.isfinite(pert)):
                truncated = True
                break
            nxt = a.apply(x) + pert
        if not np.all(np.isfinite(nxt)):
            truncated = True
            break
        raw = float(np.linalg.norm(nxt))
        if log_scale == 0.0 and raw > OVERFLOW_GUARD:
            guarded_from = n
        if raw > OVERFLOW_GUARD or log_scale != 0.0:
            if raw == 0.0:
                log_scale, x = 0.0, nxt
            else:
                log_scale += math.log(raw)
                x = nxt / raw
            lg = log_scale
            norms.append(math.exp(lg) if lg < 709 else math.inf)
            logs.append(lg)
        else:
            x = nxt
            norms.append(raw)
            logs.append(math.log(raw) if raw > 0 else -math.inf)
            if keep_states:
                states.append(x.copy())
    return Trajectory(np.array(norms), np.array(logs), states, 0, None, truncated, guarded_from)


# -- lower-bound checks --------------------------------------------------------

def harmonic(n):
    """Default a_n = 1/(n+1)."""
    return 1.0 / (n + 1.0)


def _a_values(a_seq, ns):
    if callable(a_seq):
        return np.array([a_seq(int(n)) for n in ns], dtype=float)
    a = np.asarray(a_seq, dtype=float)
    return a[np.asarray(ns)]


@dataclass
class BoundReport:
    passed: bool
    first_violation: int | None
    margins: np.ndarray
    indices: np.ndarray
    lower_bound: np.ndarray
    min_rel_slack: float
    median_rel_slack: float


def check_lower_bound(traj: Trajectory, a_seq, rate: float, n0: int, n_max: int | None = None):
    """Per-n margins ||f_n|| - a_n rate^n for n0 <= n <= n_max (log-safe)."""
    n_max = traj.N if n_max is None else min(n_max, traj.N)
    if n_max < n0:
        raise InvalidArgument("trajectory does not reach n0")
    ns = np.arange(n0, n_max + 1)
    av = _a_values(a_seq, ns)
    if rate == 0:
        lb = np.zeros(ns.size)
        log_lb = np.full(ns.size, -math.inf)
    else:
        with np.errstate(divide="ignore"):
            log_lb = np.log(av) + ns * math.log(abs(rate))
        lb = np.exp(np.minimum(log_lb, 700))
    logs = traj.log_norms[ns]
    ok = logs >= log_lb
    exact = (logs < 700) & (log_lb < 700)
    margins = np.where(exact, traj.norms[ns] - lb, logs - log_lb)
    ok = np.where(exact, margins >= 0, ok)
    bad = np.flatnonzero(~ok)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(np.isfinite(log_lb), np.expm1(np.minimum(logs - log_lb, 700)), np.inf)
    fin = rel[np.isfinite(rel)]
    full_lb = np.zeros(traj.N + 1)
    full_lb[ns] = lb
    traj.lower_bound = full_lb
    traj.start_index = n0
    return BoundReport(bad.size == 0, int(ns[bad[0]]) if bad.size else None, margins, ns, lb,
                       float(fin.min()) if fin.size else math.inf,
                       float(np.median(fin)) if fin.size else math.inf)


# -- constructive growing orbit ------------------------------------------------------

@dataclass
class SubspaceChain:
    """Growing spaces F_k (nested orthonormal bases; M_k = F_k^perp) and the
    parameter sequences of the construction."""

    F_list: list = field(default_factory=list)
    eps_list: list = field(default_factory=list)
    c_list: list = field(default_factory=list)
    n_list: list = field(default_factory=list)
    x_list: list = field(default_factory=list)

    def prefix_ok(self, tol=1e-12):
        for f0, f1 in zip(self.F_list, self.F_list[1:]):
            if f1.shape[1] < f0.shape[1] or np.max(np.abs(f1[:, :f0.shape[1]] - f0), initial=0) > tol:
                return False
        return True

    def split(self, k, v):
        """(f, m) with f in F_k and m in M_k (k is 1-based)."""
        q = self.F_list[k - 1]
        f = q @ (q.conj().T @ v)
        return f, v - f

    def inequality_margins(self, a_prev):
        """(1-eps_k)^2 c_k/2 - eps_k - a_{n_{k-1}} for each k."""
        return [(1 - e) ** 2 * c / 2 - e - ap for e, c, ap in zip(self.eps_list, self.c_list, a_prev)]


@dataclass
class Construction:
    x: np.ndarray
    chain: SubspaceChain
    certified_horizon: int
    depth: int
    theta: complex
    warning: str | None
    log: dict


def peripheral_scale(a: OperatorModel):
    """(mu, r_e) for a model with a declared essential kernel block."""
    if a.kind != SCALED_IDENTITY:
        raise UnsupportedModel("construct_growing needs a model with a declared kernel supply")
    mu = complex(a.data["mu"])
    return mu, abs(mu)


def _dyadic_eps(c_k, a_prev, eps_prev):
    for j in range(1, 200):
        e = 2.0 ** -j
        if e < eps_prev and (1 - e) ** 2 * c_k / 2 - e >= a_prev:
            return e
    raise PreconditionError("no admissible eps_k: hypotheses on a_n violated")


def construct_growing(a: OperatorModel, k_seq, a_seq, y, r: float, n0: int,
                      horizon: int | None = None, max_depth: int | None = None) -> Construction:
    """Initial value x in the closed ball B(y, r) with
    ||f_n(x)|| >= a_n r_e^n for n0 <= n <= certified horizon.

    The model is first normalised by theta = 1/mu (mu the declared kernel
    eigenvalue, |mu| = r_e), mapping A to theta*A and K_n to
    theta^n K_n(theta^{-(n-1)} .). Each F_k contains y, Ay, ..., A^{n_k} y,
    the previously chosen x_j and the exact accumulated perturbation span
    sum_{s <= n_k} A^{n_k - s} range(K_s); x_k is the unit vector of
    Ker(A - mu) orthogonal to F_k obtained from the lowest-index kernel
    direction. The kernel multiplicity caps the depth.
    """
    mu, r_e = peripheral_scale(a)
    if r <= 0:
        raise InvalidArgument("r must be positive")
    a_at = (lambda n: float(a_seq(n))) if callable(a_seq) else (lambda n: float(a_seq[n]))
    if not a_at(n0) < r / 2:
        raise PreconditionError(f"need a_(n0) < r/2, got a_(n0) = {a_at(n0)} and r = {r}")
    y = np.asarray(y, dtype=complex)
    k_seq = list(k_seq) or [zero_map(a.dim)]
    theta = 1.0 / mu
    kb = a.kernel_basis()
    m = kb.shape[1]
    cap = m if max_depth is None else min(m, max_depth)

    c1 = 0.5 * (2 * a_at(n0) + r)
    n_list, c_list, eps_list = [], [], []
    n_prev, eps_prev = n0, 1.0
    for k in range(1, cap + 1):
        target = 2.0 ** -(k + 2) * (r - c1)
        n = n_prev + 1
        while a_at(n) >= target:
            n += 1
            if n > 10 ** 7:
                raise PreconditionError("a_n does not decay fast enough to fix n_k")
        c = c1 if k == 1 else 2.0 ** -(k - 1) * (r - c1)
        eps = _dyadic_eps(c, a_at(n_prev), eps_prev)
        n_list.append(n)
        c_list.append(c)
        eps_list.append(eps)
        eps_prev, n_prev = eps, n
        if horizon is not None and n >= horizon:
            break

    chain = SubspaceChain()
    q = np.zeros((a.dim, 0), dtype=complex)
    krylov = y.copy()
    pert = np.zeros((a.dim, 0), dtype=complex)   # basis of accumulated span U_n
    n_done = 0
    xs = []
    warning = None
    for k, n_k in enumerate(n_list, start=1):
        # extend with y, A y, ..., A^{n_k} y and the perturbation spans up to n_k
        vecs = []
        if n_done == 0:
            vecs.append(krylov)
        while n_done < n_k:
            n_done += 1
            krylov = theta * a.apply(krylov)
            nk = np.linalg.norm(krylov)
            if nk > 0:
                krylov = krylov / nk
                vecs.append(krylov)
            kn = _k_at(k_seq, n_done) if len(k_seq) == 1 or n_done <= len(k_seq) else None
            if kn is None:
                raise InvalidArgument("K_seq is shorter than the construction horizon")
            cols = [a.apply(pert[:, j]) for j in range(pert.shape[1])]
            cols += [kn.range_basis[:, j] for j in range(kn.rank)]
            if cols:
                pert_new = extend_basis(np.zeros((a.dim, 0), dtype=complex), np.column_stack(cols))
                # U_n = A U_{n-1} + range(K_n); F_k collects every U_n, n <= n_k
                pert = pert_new
                vecs.extend(pert.T)
        if xs:
            vecs.extend(xs)
        if vecs:
            q = extend_basis(q, np.column_stack(vecs))
        chain.F_list.append(q.copy())
        # unit vector in Ker(A - mu) orthogonal to F_k
        ns = null_space(q.conj().T @ kb) if q.shape[1] else np.eye(m, dtype=complex)
        if ns.shape[1] == 0:
            warning = (f"kernel supply exhausted at depth {k}; certified horizon "
                       f"limited to n = {n_list[k - 2] if k > 1 else n0}")
            chain.F_list.pop()
            break
        coef = None
        for idx in range(m):
            cand = ns @ ns[idx].conj()
            if np.linalg.norm(cand) > 1e-8:
                coef = cand
                break
        xk = kb @ coef
        xk = xk / np.linalg.norm(xk)
        xs.append(xk)
        chain.x_list.append(xk)
        chain.n_list.append(n_k)
        chain.c_list.append(c_list[k - 1])
        chain.eps_list.append(eps_list[k - 1])
    depth = len(xs)
    if depth == 0:
        raise PreconditionError("kernel supply exhausted before the first step")
    x = y + sum(c * v for c, v in zip(chain.c_list, xs))
    cert = chain.n_list[-1]
    if horizon is not None:
        cert = min(cert, horizon)
        if chain.n_list[-1] < horizon and warning is None:
            warning = (f"kernel multiplicity {m} caps the depth; certified horizon "
                       f"n = {cert} < requested {horizon}")
    if warning:
        warnings.warn(warning, stacklevel=2)
    a_prev = [a_at(n0)] + [a_at(n) for n in chain.n_list[:-1]]
    log = {
        "mu": [mu.real, mu.imag],
        "r_e": r_e,
        "c": chain.c_list,
        "eps": chain.eps_list,
        "n": chain.n_list,
        "F_dims": [f.shape[1] for f in chain.F_list],
        "inequality_margins": chain.inequality_margins(a_prev),
        "depth": depth,
        "multiplicity": m,
        "certified_horizon": cert,
        "warning": warning,
    }
    return Construction(x, chain, cert, depth, theta, warning, log)


def normalized_system(a: OperatorModel, k_seq, theta):
    """(theta*A, [theta^n K_n(theta^{-(n-1)} .)]) for the scale reduction."""
    return a.scaled(theta), [k.rescaled(theta, n) for n, k in enumerate(k_seq, start=1)]


# -- ensembles ---------------------------------------------------------------

def sample_ball(y, r, n, rng):
    """n points uniform in the closed complex ball B(y, r) (as R^{2d})."""
    y = np.asarray(y, dtype=complex)
    d = y.size
    g = rng.standard_normal((n, 2 * d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = r * rng.random(n) ** (1.0 / (2 * d))
    pts = g * rad[:, None]
    return y + pts[:, :d] + 1j * pts[:, d:]


@dataclass
class EnsembleStats:
    fraction: float
    hits: int
    n_samples: int
    first_hit: list
    bounds: dict


def residual_growth_ensemble(a: OperatorModel, k_seq, a_seq, L, n_samples: int, ball,
                             n_steps: int = 200, seed: int = 0, jobs: int = 1,
                             local_map=None) -> EnsembleStats:
    """Fraction of sampled x0 in B(y, r) with ||f_n(x0)|| >= a_n ||A^n||_mu
    for some n in L (n <= n_steps)."""
    y, r = ball
    ns = sorted(int(n) for n in L if 0 <= int(n) <= n_steps)
    if not ns:
        raise InvalidArgument("index set L has no element in [0, N]")
    a_at = (lambda n: float(a_seq(n))) if callable(a_seq) else (lambda n: float(a_seq[n]))
    log_bound = {}
    for n in ns:
        mu_n = 1.0 if n == 0 else mu_norm_estimate(a, n)
        log_bound[n] = math.log(a_at(n) * mu_n) if a_at(n) * mu_n > 0 else -math.inf
    children = np.random.SeedSequence(seed).spawn(n_samples)

    def one(i):
        rng = np.random.default_rng(children[i])
        x0 = sample_ball(y, r, 1, rng)[0]
        tr = iterate(a, k_seq, x0, n_steps, local_map=local_map, keep_states=False)
        for n in ns:
            if n < len(tr.log_norms) and tr.log_norms[n] >= log_bound[n]:
                return n
        return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            first = list(ex.map(one, range(n_samples)))
    else:
        first = [one(i) for i in range(n_samples)]
    hits = sum(f is not None for f in first)
    return EnsembleStats(hits / n_samples, hits, n_samples, first,
                         {n: (math.exp(v) if v > -math.inf else 0.0) for n, v in log_bound.items()})


def perturbation_span(a: OperatorModel, k_seq, j: int):
    """Orthonormal basis of sum_{s=1..j} A^{j-s} range(K_s), the space that
    contains f_j(x) - A^j x for every x."""
    basis = np.zeros((a.dim, 0), dtype=complex)
    k_seq = list(k_seq)
    for s in range(1, j + 1):
        k = _k_at(k_seq, s)
        cols = [a.apply(basis[:, i]) for i in range(basis.shape[1])]
        cols += [k.range_basis[:, i] for i in range(k.rank)]
        basis = (extend_basis(np.zeros((a.dim, 0), dtype=complex), np.column_stack(cols))
                 if cols else basis)
    return basis
