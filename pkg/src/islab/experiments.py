"""Reproducible experiment presets with CSV output and pass/fail checks."""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import counterexamples as cx
from . import dynamics as dyn
from . import spectral as sp
from . import wave as wv
from .errors import IslabError
from .io import jsonable, write_csv, write_json
from .operators import (StepDamping, make_diagonal, make_left_shift, make_scaled_identity_block,
                        make_wave_blocks, translate_cells)


# -- value parsing ---------------------------------------------------------------

def parse_real(text):
    """Reals, including powers written as ``2^-8``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if "^" in s:
        base, exp = s.split("^", 1)
        return float(base) ** float(exp)
    return float(Fraction(s)) if "/" in s else float(s)


def parse_int(text):
    v = parse_real(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def parse_damping(text):
    """``1.0`` (constant) or ``step:v1,v2,...`` (equal pieces on [0, 1])."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s.startswith("step:"):
        vals = [parse_real(v) for v in s[5:].split(",") if v]
        if not vals:
            raise ValueError("step damping needs at least one value")
        return StepDamping.equal_pieces(vals)
    return parse_real(s)


def parse_aseq(text):
    """``harmonic`` (a_n = 1/(n+1)) or ``power:p`` (a_n = (n+1)^-p)."""
    s = str(text).strip()
    if s == "harmonic":
        return dyn.harmonic
    if s.startswith("power:"):
        p = parse_real(s[6:])
        if p <= 0:
            raise ValueError("power must be positive")
        return lambda n: (n + 1.0) ** -p
    raise ValueError(f"unknown sequence {s!r} (use harmonic or power:p)")


def parse_int_list(text):
    return [parse_int(v) for v in str(text).split(",") if v.strip()]


def parse_choice(*options):
    def parse(text):
        s = str(text).strip()
        if s not in options:
            raise ValueError(f"{s!r} is not one of {', '.join(options)}")
        return s
    return parse


# -- presets ---------------------------------------------------------------------

@dataclass
class Preset:
    name: str
    anchor: str
    params: dict          # key -> (parser, default text)
    runner: object = None

    def defaults(self):
        return {k: v[1] for k, v in self.params.items()}


PRESETS = {}


def preset(name, anchor, **params):
    def deco(fn):
        PRESETS[name] = Preset(name, anchor, params, fn)
        return fn
    return deco


def check(name, anchor, value, bound, kind="le", exact=True):
    """One check record. ``kind`` is le (value <= bound), ge or eq."""
    if kind == "le":
        margin = bound - value
    elif kind == "ge":
        margin = value - bound
    else:
        margin = -abs(value - bound)
    ok = margin >= 0 if exact else margin >= -1e-12 * max(1.0, abs(bound))
    return {"name": name, "anchor": anchor, "value": value, "bound": bound, "kind": kind,
            "margin": margin, "pass": bool(ok)}


@dataclass
class ExperimentConfig:
    preset: str
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "."
    jobs: int = 1


@dataclass
class Validation:
    values: dict
    effective: dict
    errors: list
    warnings: list

    @property
    def ok(self):
        return not self.errors


def _cap():
    return int(os.environ.get("ISLAB_MAX_DIM", "4096"))


def validate(cfg: ExperimentConfig) -> Validation:
    """Normalize a config: fill defaults, parse values, collect every error."""
    errors, warns = [], []
    p = PRESETS.get(cfg.preset)
    if p is None:
        return Validation({}, {}, [f"unknown preset {cfg.preset!r}; choose from "
                                   f"{', '.join(sorted(PRESETS))}"], [])
    raw = p.defaults()
    for key, val in cfg.overrides.items():
        k = key.replace("_", "-")
        if k not in p.params:
            errors.append(f"unknown override key {key!r} for preset {p.name}")
            continue
        raw[k] = val
    values = {}
    parse_errors = []
    for key, (parser, _) in p.params.items():
        try:
            values[key] = parser(raw[key])
        except (ValueError, TypeError, ZeroDivisionError, IslabError) as exc:
            parse_errors.append(f"{key}: {exc}")
    errors.extend(parse_errors)
    if not parse_errors:
        errors.extend(_preset_rules(p.name, values, warns))
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        errors.append("seed must be a 64-bit non-negative integer")
    if cfg.jobs < 1:
        errors.append("jobs must be >= 1")
    effective = {"preset": p.name, "anchor": p.anchor, "seed": cfg.seed,
                 "params": {k: str(raw[k]) for k in p.params}}
    return Validation(values, effective, errors, warns)


def _preset_rules(name, v, warns):
    errs = []
    cap = _cap()
    if "eps" in v and not 0 < v["eps"] < 2 ** -7:
        errs.append("eps must be < 2^-7")
    for key in ("steps", "samples", "horizon", "cert-samples", "n-grid", "cells"):
        if key in v and v[key] < 1:
            errs.append(f"{key} must be >= 1")
    if "modes" in v:
        if v["modes"] < 1:
            errs.append("modes must be >= 1")
        elif 2 * v["modes"] > cap:
            errs.append(f"2*modes = {2 * v['modes']} exceeds ISLAB_MAX_DIM = {cap}")
    for key in ("dim", "cells"):
        if key in v and v[key] > cap:
            errs.append(f"{key} = {v[key]} exceeds ISLAB_MAX_DIM = {cap}")
    if name in ("thm46-growth", "thm44-ensemble"):
        if not 1 <= v["mult"] <= v["dim"]:
            errs.append("need 1 <= mult <= dim")
        if v["rate"] <= 0:
            errs.append("rate must be positive")
    if name == "thm46-growth" and not errs and not v["a"](v["n0"]) < v["r"] / 2:
        errs.append("need a_(n0) < r/2")
    if name == "ex53":
        if v["slots"] < 1:
            errs.append("slots must be >= 1")
        if any(not 1 <= k <= v["slots"] for k in v["ks"]):
            errs.append("every k must lie in 1..slots")
    if name == "sola-backward-growth" and not errs:
        if v["mode"] < 1 or v["mode"] > v["modes"]:
            errs.append("mode must lie in 1..modes")
        if v["t-end"] <= 0 or v["dt"] <= 0:
            errs.append("t-end and dt must be positive")
        else:
            gate = 1.0 / math.hypot(v["modes"] * math.pi, abs(v["b"]))
            if v["dt"] > gate:
                warns.append(f"dt = {v['dt']:g} exceeds the stability gate; suggested dt <= {gate:.3e}")
    if name in ("sR-scan", "shift-optimality") and not errs:
        if v["a-step"] <= 0 or v["a-max"] < v["a-min"]:
            errs.append("need a-step > 0 and a-max >= a-min")
    return errs


def config_hash(values_effective):
    blob = json.dumps(values_effective, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- runners -------------------------------------------------------------------

@preset("ex52", "single-scale bump map: orbits from ||y0||, |a0| <= eps^3 stay below eps",
        eps=(parse_real, "2^-8"), steps=(parse_int, "10000"), samples=(parse_int, "100"),
        dim=(parse_int, "16"))
def run_ex52(v, seed, out, jobs):
    bp = cx.build_bumps(v["eps"])
    e = bp.eps
    xs = cx.sample_ex52(bp, v["samples"], seed, v["dim"])
    rep = cx.verify_ex52(bp, xs, v["steps"])
    write_csv(out / "ex52_samples.csv", ["sample", "sup_y", "sup_a", "sup_x"],
              [(i, a, b, c) for i, (a, b, c) in enumerate(zip(rep.sup_y, rep.sup_a, rep.sup_x))])
    e1 = np.zeros(v["dim"], dtype=complex)
    e1[0] = e ** 3
    rec = []
    cx._ex52_norm_orbits(bp, [e ** 3], [e ** 3], v["steps"], record=rec)
    cx.dump_orbits_csv(out / "ex52_orbit.csv", rec)
    anchor = PRESETS["ex52"].anchor
    checks = [check("sup_y <= 16 eps^3", anchor, float(rep.sup_y.max()), 16 * e ** 3),
              check("sup_a <= eps/2", anchor, float(rep.sup_a.max()), e / 2),
              check("sup_x <= eps", anchor, float(rep.sup_x.max()), e)]
    plots = [("ex52_orbit.csv", 1, 4, "||x_n||")]
    return checks, plots


@preset("ex53", "multi-scale bump map: orbits from ||x0|| <= eps_k^3/4 stay below eps_k",
        eps=(parse_real, "2^-8"), slots=(parse_int, "3"), steps=(parse_int, "10000"),
        samples=(parse_int, "50"), ks=(parse_int_list, "1,2"), **{"cert-samples": (parse_int, "1000")})
def run_ex53(v, seed, out, jobs):
    eps = [v["eps"]]
    for _ in range(v["slots"] - 1):
        eps.append(eps[-1] ** 3 / 8)
    sys = cx.Ex53(eps)
    anchor = PRESETS["ex53"].anchor
    checks = []
    rows = []
    for k in v["ks"]:
        xs = sys.sample(v["samples"], k, seed + k)
        rep = cx.verify_ex53(sys, xs, v["steps"], k)
        rows += [(k, i, s) for i, s in enumerate(rep.sup_x)]
        checks.append(check(f"k={k}: sup_x <= eps_k", anchor, float(rep.sup_x.max()), eps[k - 1]))
    write_csv(out / "ex53_samples.csv", ["k", "sample", "sup_x"], rows)
    rec = []
    x0 = eps[0] ** 3 / 4
    sys.norm_orbit([x0], np.zeros((1, len(eps))), v["steps"], record=rec)
    cx.dump_orbits_csv(out / "ex53_orbit.csv", rec)
    cert = cx.g_certificate(sys, v["cert-samples"], seed)
    checks.append(check("||G(x)|| <= ||x||^2 (ratio)", anchor, cert["max_ratio"], 1.0, exact=False))
    return checks, [("ex53_orbit.csv", 1, 4, "||x_n||")]


def _identity_block_system(v):
    a = make_scaled_identity_block(v["rate"], v["mult"], v["dim"])
    k = dyn.quadratic_rank_one(v["dim"], v["mult"], v["strength"]) if v["mult"] < v["dim"] \
        else dyn.zero_map(v["dim"])
    return a, [k]


@preset("thm46-growth", "constructed initial value with ||f_n(x)|| >= a_n r_e^n on the certified horizon",
        rate=(parse_real, "2"), mult=(parse_int, "8"), dim=(parse_int, "32"),
        a=(parse_aseq, "harmonic"), n0=(parse_int, "2"), r=(parse_real, "1"),
        horizon=(parse_int, "40"), strength=(parse_real, "0.1"), **{"y-scale": (parse_real, "0.05")})
def run_thm46(v, seed, out, jobs):
    a, ks = _identity_block_system(v)
    rng = np.random.default_rng(seed)
    y = v["y-scale"] * (rng.standard_normal(v["dim"]) + 1j * rng.standard_normal(v["dim"])) / math.sqrt(2 * v["dim"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        con = dyn.construct_growing(a, ks, v["a"], y, v["r"], v["n0"], horizon=v["horizon"])
    traj = dyn.iterate(a, ks, con.x, max(con.certified_horizon, v["n0"]))
    rep = dyn.check_lower_bound(traj, v["a"], abs(v["rate"]), v["n0"], con.certified_horizon)
    write_csv(out / "thm46_margins.csv", ["n", "norm", "lower_bound", "margin"],
              [(n, traj.norms[n], lb, m) for n, lb, m in zip(rep.indices, rep.lower_bound, rep.margins)])
    write_json(out / "thm46_construction.json",
               dict(con.log, x_minus_y_norm=float(np.linalg.norm(con.x - y))))
    anchor = PRESETS["thm46-growth"].anchor
    checks = [check("min margin ||f_n(x)|| - a_n rate^n", anchor, float(rep.margins.min()), 0.0, "ge"),
              check("certified horizon", anchor, float(con.certified_horizon), 25.0, "ge"),
              check("||x - y|| <= r", anchor, float(np.linalg.norm(con.x - y)), v["r"], exact=False)]
    return checks, [("thm46_margins.csv", 1, 2, "||f_n(x)||"), ("thm46_margins.csv", 1, 3, "a_n r^n")]


@preset("thm44-ensemble", "sampled ball: fraction of orbits meeting ||f_n|| >= a_n ||A^n||_mu on L",
        model=(parse_choice("identity-block", "ex52"), "identity-block"),
        rate=(parse_real, "2"), mult=(parse_int, "8"), dim=(parse_int, "32"),
        a=(parse_aseq, "harmonic"), samples=(parse_int, "200"), steps=(parse_int, "200"),
        r=(parse_real, "1"), strength=(parse_real, "0.1"), eps=(parse_real, "2^-8"))
def run_thm44(v, seed, out, jobs):
    anchor = PRESETS["thm44-ensemble"].anchor
    L = range(0, v["steps"] + 1, 2)
    if v["model"] == "ex52":
        bp = cx.build_bumps(v["eps"])
        a, k, g = cx.ex52_system(bp)
        r = bp.eps ** 3
        st = dyn.residual_growth_ensemble(a, [k], v["a"], L, v["samples"],
                                          (np.zeros(a.dim), r), v["steps"], seed, jobs, local_map=g)
        expect, kind = 0.0, "le"
    else:
        a, ks = _identity_block_system(v)
        ks = [dyn.zero_map(v["dim"])]
        st = dyn.residual_growth_ensemble(a, ks, v["a"], L, v["samples"],
                                          (np.zeros(v["dim"]), v["r"]), v["steps"], seed, jobs)
        expect, kind = 1.0, "ge"
    write_csv(out / "thm44_hits.csv", ["sample", "first_hit"],
              [(i, -1 if f is None else f) for i, f in enumerate(st.first_hit)])
    return [check("hit fraction", anchor, st.fraction, expect, kind)], []


def _frange(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(n + 1)]


@preset("sR-scan", "vertical-line resolvent scans and the s_R estimate",
        model=(parse_choice("wave", "diagonal"), "wave"), b=(parse_real, "1"),
        modes=(parse_int, "128"), **{"a-min": (parse_real, "0"), "a-max": (parse_real, "1"),
                                     "a-step": (parse_real, "0.01"), "n-grid": (parse_int, "2001")})
def run_sr_scan(v, seed, out, jobs):
    anchor = PRESETS["sR-scan"].anchor
    checks = []
    if v["model"] == "wave":
        a_minus = make_wave_blocks(v["b"], v["modes"], sign=-1)
        rep = sp.eigen(a_minus)
        dev = float(np.max(np.abs(rep.eigenvalues.real + v["b"] / 2)))
        checks.append(check("max |Re lambda + b/2| (damped blocks)", anchor, dev, 1e-10))
        model, target = a_minus.scaled(-1), v["b"] / 2
        write_csv(out / "sR_eigs.csv", ["index", "re", "im"],
                  [(i, z.real, z.imag) for i, z in enumerate(rep.eigenvalues)])
    else:
        k = np.arange(1, v["modes"] + 1)
        model, target = make_diagonal(-1.0 + 1j * k), -1.0
    scans = []
    grid = _frange(v["a-min"], v["a-max"], v["a-step"])
    bounds = sp.estimate_sR(model, grid, n_grid=v["n-grid"], scans=scans)
    rows = [r for sc in scans for r in sc.rows()]
    write_csv(out / "sR_scan.csv", ["a", "b", "resolvent_norm"], rows)
    write_json(out / "sR_bounds.json", bounds.to_dict())
    checks.append(check("|s_R estimate - target|", anchor, abs(bounds.s_R_estimate - target),
                        v["a-step"], exact=False))
    return checks, [("sR_scan.csv", 2, 3, "||R(a+ib)||")]


@preset("cox-eigs", "step damping: Re lambda_n of high modes clusters at -(int b)/2",
        b=(parse_damping, "step:2,0"), modes=(parse_int, "256"))
def run_cox(v, seed, out, jobs):
    b = v["b"]
    if not isinstance(b, StepDamping):
        b = StepDamping((0.0, 1.0), (float(b),))
    op = make_wave_blocks(b, v["modes"], sign=-1)
    rep = sp.eigen(op)
    lam = rep.eigenvalues
    beta = b.integral()
    stats = cox_trend(lam)
    write_csv(out / "cox_eigs.csv", ["index", "re", "im"], [(i, z.real, z.imag) for i, z in enumerate(lam)])
    tol = 0.05 if v["modes"] >= 256 else 0.10
    anchor = PRESETS["cox-eigs"].anchor
    rel = abs(stats["mean_re"] + beta / 2) / (beta / 2) if beta else abs(stats["mean_re"])
    return [check("relative deviation of mean Re (top 20%) from -beta/2", anchor, rel, tol)], \
        [("cox_eigs.csv", 3, 2, "Re lambda")]


def cox_trend(lam, top=0.2):
    """Mean and std of Re over the eigenvalues with the largest |Im|."""
    lam = np.asarray(lam)
    order = np.argsort(np.abs(lam.imag))
    sel = lam[order[-max(1, int(round(top * lam.size))):]]
    return {"mean_re": float(sel.real.mean()), "std_re": float(sel.real.std()), "count": int(sel.size)}


@preset("sola-backward-growth", "backward damped wave: growth rate of ||w(t)|| against b/2",
        b=(parse_real, "1"), modes=(parse_int, "128"), dt=(parse_real, "1e-3"),
        mode=(parse_int, "3"), psi=(parse_choice(*wv.NONLINEARITIES), "zero"),
        c=(parse_real, "1"), amplitude=(parse_real, "1"), **{"t-end": (parse_real, "10")})
def run_sola(v, seed, out, jobs):
    anchor = PRESETS["sola-backward-growth"].anchor
    nl = wv.make_nonlinearity(v["psi"], c=v["c"]) if v["psi"] != "zero" else wv.make_nonlinearity("zero")
    damped = wv.assemble(v["modes"], v["b"], wv.DAMPED, nl, v["dt"])
    # eigenvector of the backward system, expressed as damped-system data
    probe, _ = wv.backward_transform(damped, np.zeros(damped.dim))
    w_b, lam = wv.mode_eigenvector(probe, v["mode"])
    w0 = v["amplitude"] * wv.conjugation_J(damped.dim) * w_b
    back, wb0 = wv.backward_transform(damped, w0)
    run = wv.integrate(back, wb0, v["t-end"], record_every=10)
    omega, r2 = wv.fit_growth_rate(run, 0.3 * v["t-end"])
    write_csv(out / "sola_energy.csv", ["t", "E0", "E_full", "norm"], run.rows())
    checks = []
    if nl.is_zero:
        checks.append(check("omega_hat >= 0.95 b/2", anchor, omega, 0.95 * v["b"] / 2, "ge"))
        checks.append(check("omega_hat <= 1.05 b/2", anchor, omega, 1.05 * v["b"] / 2, "le"))
    else:
        sr = sp.estimate_sR(make_wave_blocks(v["b"], v["modes"], sign=-1).scaled(-1),
                            _frange(0.0, 1.0, 0.01), n_grid=401, doubling=False).s_R_estimate
        checks.append(check("omega_hat >= s_R estimate - 0.05", anchor, omega, sr - 0.05, "ge"))
    if nl.sign_condition:
        cert = wv.energy_certificate(back, run, rel_tol=1e-3)
        checks.append(check("energy certificate (1 = pass)", anchor, float(cert["pass"]), 1.0, "ge"))
    write_json(out / "sola_fit.json", {"omega_hat": omega, "r2": r2, "lambda": lam,
                                       "fit_window_t_min": 0.3 * v["t-end"]})
    return checks, [("sola_energy.csv", 1, 4, "||w(t)||")]


@preset("shift-optimality", "left translation semigroup: s_R = 0 yet every compactly supported orbit dies",
        cells=(parse_int, "256"), h=(parse_real, "2"), **{"a-min": (parse_real, "-0.02"),
                                                         "a-max": (parse_real, "0.02"),
                                                         "a-step": (parse_real, "0.01"),
                                                         "n-grid": (parse_int, "201"),
                                                         "b-max": (parse_real, "4")})
def run_shift(v, seed, out, jobs):
    anchor = PRESETS["shift-optimality"].anchor
    gen = make_left_shift(v["cells"], v["h"])
    sc0 = sp.scan_vertical(gen, 0.0, v["b-max"], v["n-grid"])
    scans = []
    bounds = sp.estimate_sR(gen, _frange(v["a-min"], v["a-max"], v["a-step"]), v["b-max"],
                            v["n-grid"], scans=scans)
    write_csv(out / "shift_scan.csv", ["a", "b", "resolvent_norm"], sc0.rows() + [r for s in scans for r in s.rows()])
    rng = np.random.default_rng(seed)
    support = max(1, v["cells"] // 8)
    x = np.zeros(v["cells"], dtype=complex)
    x[:support] = rng.standard_normal(support)
    rows = []
    first_zero = None
    for k in range(v["cells"] + 1):
        nrm = float(np.linalg.norm(translate_cells(x, k)))
        rows.append((k * v["h"], nrm))
        if nrm == 0 and first_zero is None:
            first_zero = k * v["h"]
    write_csv(out / "shift_norms.csv", ["t", "norm"], rows)
    checks = [check("unbounded flag at a = 0 (1 = raised)", anchor, float(sc0.unbounded_flag), 1.0, "ge"),
              check("|s_R estimate|", anchor, abs(bounds.s_R_estimate), v["a-step"], exact=False),
              check("norm at the end of the window", anchor, rows[-1][1], 0.0)]
    write_json(out / "shift_bounds.json", dict(bounds.to_dict(), first_zero_time=first_zero,
                                               doubling_ratio_a0=sc0.doubling_ratio))
    return checks, [("shift_norms.csv", 1, 2, "||T(t)x||")]


# -- run / report ----------------------------------------------------------------

def _plot_script(plots):
    lines = ["# gnuplot script; reads only the CSV files written alongside it",
             "set datafile separator ','", "set key autotitle columnhead", "set logscale y"]
    for i, (csv_name, xc, yc, title) in enumerate(plots):
        lines.append(f"set terminal pngcairo; set output 'plot_{i}.png'")
        lines.append(f"plot '{csv_name}' using {xc}:{yc} with lines title '{title}'")
    return "\n".join(lines) + "\n"


@dataclass
class RunResult:
    status: int
    summary: dict
    errors: list


def run(cfg: ExperimentConfig) -> RunResult:
    """Validate, run the preset, and write CSVs, summary.json,
    effective_config.json and plot.gp into ``cfg.output_dir``."""
    val = validate(cfg)
    if not val.ok:
        return RunResult(2, {}, val.errors)
    p = PRESETS[cfg.preset]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "effective_config.json", dict(val.effective, warnings=val.warnings,
                                                   config_hash=config_hash(val.effective)))
    t0 = time.perf_counter()
    try:
        checks, plots = p.runner(val.values, cfg.seed, out, cfg.jobs)
    except IslabError as exc:
        raise type(exc)(f"[{p.name}] {exc}") from exc
    summary = {
        "preset": p.name,
        "anchor": p.anchor,
        "seed": cfg.seed,
        "config_hash": config_hash(val.effective),
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "elapsed_s": time.perf_counter() - t0,
        "warnings": val.warnings,
    }
    write_json(out / "summary.json", summary)
    (out / "plot.gp").write_text(_plot_script(plots))
    return RunResult(0 if summary["pass"] else 1, jsonable(summary), [])


def report(paths):
    """Consolidate summary.json files from run directories.

    Returns (document, exit status): 1 if any check failed, otherwise 0
    (an empty artifact set is reported with a warning)."""
    doc = {"runs": [], "missing": [], "warnings": [], "checks": []}
    for p in paths:
        f = Path(p)
        f = f / "summary.json" if f.is_dir() else f
        if not f.exists():
            doc["missing"].append(str(f))
            continue
        s = json.loads(f.read_text())
        doc["runs"].append({"preset": s["preset"], "anchor": s["anchor"], "path": str(f),
                            "pass": s["pass"]})
        for c in s["checks"]:
            doc["checks"].append(dict(c, preset=s["preset"]))
    if not doc["runs"]:
        doc["warnings"].append("no artifacts found")
    doc["pass"] = all(c["pass"] for c in doc["checks"])
    status = 0 if doc["pass"] else 1
    return doc, status
