"""Command-line entry point: derive, steady, evolve, sweep, verify.

Configs are JSON with raw SI numbers (rad/s for rates and frequencies; a
string "VALUE UNIT" is tolerated when UNIT matches exactly).  Exit codes:
0 ok, 1 verify failure, 2 unreadable/unparsable input, 3 invalid input,
4 no steady state.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace

import numpy as np

from . import analytic, fock, gaussian, qsse
from .errors import (
    CapExceeded,
    DegenerateKernel,
    EquivalenceFailed,
    InvalidInput,
    NotHurwitz,
    NumericalError,
    ReflectivityZero,
    TrapFrequencyImaginary,
    TruncationLeak,
    ZeroCoolRate,
)
from .params import (
    derive_model,
    derive_qsse_couplings,
    is_physical_config,
    model_from_dict,
    model_to_dict,
    physical_from_dict,
    preset_case_study,
    resonant,
)


def _f17(x):
    return format(float(x), ".17g")


def _json17(obj, indent=0):
    """json.dumps with floats pinned to 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {_json17(v, indent + 1)}"
            for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(pad + "  " + _json17(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return _f17(x)
    return json.dumps(str(obj))


def _emit_json(obj, out_path):
    text = _json17(obj) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _model_from_config(config):
    """Accept either schema; physical configs go through derive_model."""
    if not isinstance(config, dict):
        raise InvalidInput("config root must be a JSON object")
    if is_physical_config(config):
        return derive_model(physical_from_dict(config))
    return model_from_dict(config)


def _pool_size():
    env = os.environ.get("MEMLAT_THREADS")
    if env is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(env)
    except ValueError:
        raise InvalidInput(f"MEMLAT_THREADS must be an integer, got {env!r}")
    if n < 1:
        raise InvalidInput(f"MEMLAT_THREADS must be >= 1, got {n}")
    return n


# ---------------------------------------------------------------- derive

def cmd_derive(args):
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise InvalidInput("config root must be a JSON object")
    if not is_physical_config(config):
        raise InvalidInput("derive needs a physical config (laser_* fields)")
    phys = physical_from_dict(config)
    model = derive_model(phys)
    derive_qsse_couplings(phys, model)
    _emit_json(model_to_dict(model), args.out)
    return 0


# ---------------------------------------------------------------- steady

def cmd_steady(args):
    model = _model_from_config(_load_json(args.config))
    result = gaussian.cooling_factor(model)
    state = gaussian.steady_state(gaussian.drift_diffusion(model))
    report = {
        "nbar_ss": result.nbar_ss,
        "f": result.factor,
        "n_at": gaussian.occupation(state, "atom"),
        "uncertainty_margin": state.uncertainty_margin(),
    }
    if args.analytic:
        comparison = analytic.compare_with_exact(model)
        report["analytic"] = {
            "Gamma_m": comparison.wc.Gamma_m,
            "nbar_ss_wc": comparison.wc.nbar_ss_wc,
            "validity": comparison.wc.validity,
            "in_regime": comparison.in_regime,
            "nbar_error": comparison.nbar_error,
            "Gamma_fit": comparison.Gamma_fit,
            "Gamma_error": comparison.Gamma_error,
        }
    _emit_json(report, args.out)
    return 0


# ---------------------------------------------------------------- evolve

_STARTS = ("decoupled", "thermal", "vacuum")


def _initial_state(model, start):
    if start == "decoupled":
        return gaussian.steady_state(gaussian.drift_diffusion(
            replace(model, g=0.0)))
    if start == "thermal":
        return gaussian.thermal_state(0.0, model.nbar)
    return gaussian.vacuum_state()


def cmd_evolve(args):
    config = _load_json(args.config)
    if not isinstance(config, dict) or "model" not in config:
        raise InvalidInput('evolve config needs a "model" object')
    model = _model_from_config(config["model"])
    t_final = float(config.get("t_final", 0.0))
    points = int(config.get("points", 0))
    start = config.get("start", "decoupled")
    if t_final <= 0:
        raise InvalidInput("t_final must be positive")
    if points < 2:
        raise InvalidInput("points must be >= 2")
    if start not in _STARTS:
        raise InvalidInput(f"start must be one of {_STARTS}, got {start!r}")

    dd = gaussian.drift_diffusion(model)
    state = _initial_state(model, start)
    radius = np.abs(np.linalg.eigvals(dd.A)).max()
    dt = 0.05 / radius
    seg = t_final / (points - 1)

    lines = ["t,n_at,n_m"]
    for i in range(points):
        if i:
            state = gaussian.evolve(dd, state, seg, dt)
        lines.append(",".join((
            _f17(i * seg),
            _f17(gaussian.occupation(state, "atom")),
            _f17(gaussian.occupation(state, "membrane")))))
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------- sweep

def _axis_values(spec, name):
    if not isinstance(spec, dict):
        raise InvalidInput(f"{name} must be an object with min/max/points")
    try:
        lo = float(spec["min"])
        hi = float(spec["max"])
        points = int(spec["points"])
    except KeyError as exc:
        raise InvalidInput(f"{name} is missing field {exc}")
    scale = spec.get("scale", "log")
    if points < 2:
        raise InvalidInput(f"{name}: points must be >= 2")
    if lo > hi:
        raise InvalidInput(f"{name}: min must not exceed max")
    if scale == "linear":
        return np.linspace(lo, hi, points)
    if scale == "log":
        if lo <= 0:
            raise InvalidInput(f"{name}: log scale needs positive bounds")
        return np.logspace(np.log10(lo), np.log10(hi), points)
    raise InvalidInput(f"{name}: scale must be linear or log, got {scale!r}")


def _sweep_cell(model):
    try:
        result = gaussian.cooling_factor(model)
    except NotHurwitz:
        return "not_hurwitz", float("nan"), float("nan")
    return "ok", result.nbar_ss, result.factor


def cmd_sweep(args):
    spec = _load_json(args.spec)
    if not isinstance(spec, dict):
        raise InvalidInput("sweep spec root must be a JSON object")
    for field in ("g_axis", "cool_axis", "base"):
        if field not in spec:
            raise InvalidInput(f"sweep spec is missing {field!r}")
    if spec.get("solver", "gaussian") != "gaussian":
        raise InvalidInput("solver must be gaussian")
    outputs = spec.get("outputs", ["nbar_ss", "f"])
    if sorted(outputs) != ["f", "nbar_ss"]:
        raise InvalidInput("outputs must be exactly nbar_ss and f")
    g_values = _axis_values(spec["g_axis"], "g_axis")
    cool_values = _axis_values(spec["cool_axis"], "cool_axis")
    base = model_from_dict(spec["base"])

    # Row-major over (g, gamma_cool); map() keeps gather order deterministic
    # regardless of pool size, so the CSV is byte-identical across runs.
    cells = [replace(base, g=float(g), gamma_cool=float(c))
             for g in g_values for c in cool_values]
    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        results = list(pool.map(_sweep_cell, cells))

    lines = ["g,gamma_cool,nbar_ss,f,status"]
    for model, (status, nbar_ss, factor) in zip(cells, results):
        lines.append(",".join((
            _f17(model.g), _f17(model.gamma_cool),
            _f17(nbar_ss), _f17(factor), status)))
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------- verify

def _check(checks, name, passed, detail):
    checks.append({"name": name, "passed": bool(passed), "detail": detail})


def _verify_params_identities(checks, draws=1000):
    rng = np.random.default_rng(11)
    base = preset_case_study()

    def logu(lo, hi):
        return math.exp(rng.uniform(math.log(lo), math.log(hi)))

    worst = 0.0
    for _ in range(draws):
        phys = replace(
            base,
            laser_power=logu(1e-3, 30e-3),
            beam_waist=rng.uniform(120e-6, 500e-6),
            detuning=2 * math.pi * logu(0.3e9, 5e9),
            atom_number=logu(1e7, 1e9),
            membrane_freq=2 * math.pi * logu(0.2e6, 3e6),
            membrane_mass=logu(1e-13, 3e-12),
            membrane_Q=logu(1e5, 1e8),
            reflectivity=rng.uniform(0.02, 0.98),
            temperature=logu(0.5, 300.0),
            cool_rate=logu(2e3, 2e5),
        )
        phys = resonant(phys)
        m = derive_model(phys)
        g_mR, g_mL, g_atR, g_atL, _ = derive_qsse_couplings(phys, m)
        t_over_r = m.transmittivity / m.reflectivity
        ident = 2 * (math.sqrt(g_mR * g_atR) + math.sqrt(g_mL * g_atL))
        worst = max(
            worst,
            abs(g_mL / g_mR - t_over_r) / t_over_r,
            abs(g_atL / g_atR - t_over_r) / t_over_r,
            abs(g_mR + g_mL - m.gamma_diff_m) / m.gamma_diff_m,
            abs(ident - m.g) / m.g,
        )
    _check(checks, "params-identities", worst < 1e-9,
           f"{draws} draws, worst relative deviation {worst:.3e}")
    return worst


def _verify_preset_windows(checks):
    natural = derive_model(preset_case_study())
    cold = derive_model(resonant(preset_case_study()))
    hot = derive_model(resonant(replace(preset_case_study(), temperature=295.0)))
    windows = (
        ("g", natural.g, 4.0e4, 0.05),
        ("gamma_diff_m", natural.gamma_diff_m, 52.0, 0.05),
        ("gamma_diff_at", natural.gamma_diff_at, 1.6e4, 0.15),
        ("thermal decoherence 2 K", cold.gamma_m * cold.nbar, 2.4e4, 0.10),
        ("thermal decoherence 295 K", hot.gamma_m * hot.nbar, 4.0e6, 0.10),
    )
    bad = [name for name, value, target, tol in windows
           if abs(value - target) > tol * target]
    ratio_ok = 0.9 <= natural.omega_at / natural.omega_m <= 1.1
    if not ratio_ok:
        bad.append("omega_at/omega_m")
    _check(checks, "preset-windows", not bad,
           "all reference windows met" if not bad
           else "outside window: " + ", ".join(bad))


def _verify_gaussian_oracle(checks):
    model = derive_model(resonant(preset_case_study()))
    result = gaussian.cooling_factor(model)
    dev = max(abs(result.nbar_ss / 2.1697441062 - 1),
              abs(result.factor / 2.2333165297e4 - 1))
    decoupled = replace(model, g=0.0)
    state = gaussian.steady_state(gaussian.drift_diffusion(decoupled))
    expected = model.nbar + model.gamma_diff_m / (2 * model.gamma_m)
    dev = max(dev, abs(gaussian.occupation(state, "membrane") / expected - 1))
    _check(checks, "gaussian-oracle", dev < 1e-6,
           f"worst relative deviation {dev:.3e}")


_FOCK_ORACLE = {
    "omega_at": 1.0, "omega_m": 1.0, "g": 0.12, "reflectivity": 0.5,
    "gamma_cool": 0.2, "gamma_m": 0.1, "gamma_diff_at": 0.02,
    "gamma_diff_m": 0.01, "nbar": 0.3,
}


def _verify_fock_oracle(checks):
    model = model_from_dict(_FOCK_ORACLE)
    cfg = fock.FockConfig(n_at=10, n_m=12)
    dm = fock.steady_state_fock(fock.build_liouvillian(model, cfg))
    state = fock.moments(dm)
    dev = max(abs(gaussian.occupation(state, "atom") / 0.1533044 - 1),
              abs(gaussian.occupation(state, "membrane") / 0.2497767 - 1))
    _check(checks, "fock-oracle", dev < 1e-3,
           f"(10,12) steady occupations, worst relative deviation {dev:.3e}")


def _verify_equivalence(checks, cascade_scale):
    phys = resonant(preset_case_study())
    model = derive_model(phys)
    derive_qsse_couplings(phys, model)
    cfg = fock.FockConfig(n_at=6, n_m=6)
    try:
        report = qsse.verify_equivalence(model, cfg, cascade_scale=cascade_scale)
    except EquivalenceFailed as exc:
        _check(checks, "qsse-equivalence", False, str(exc)[:120])
        return None
    worst = report.max_rel_deviation
    rng = np.random.default_rng(5)
    draw_cfg = fock.FockConfig(n_at=5, n_m=5)
    for _ in range(10):
        draw = qsse.random_coupling_model(rng)
        worst = max(worst, qsse.verify_equivalence(
            draw, draw_cfg, cascade_scale=cascade_scale).max_rel_deviation)
    asym_ok = abs(report.asymmetry - model.reflectivity) < 1e-9
    ratio_ok = report.diffusion_ratio is not None and report.diffusion_ratio > 1e2
    _check(checks, "qsse-equivalence", worst <= 1e-10 and asym_ok and ratio_ok,
           f"case study (6,6) + 10 draws, max relative deviation {worst:.3e}, "
           f"asymmetry {report.asymmetry:.6f}, "
           f"diffusion ratio {report.diffusion_ratio:.3e}")
    return report


def _verify_analytic(checks):
    model = derive_model(resonant(preset_case_study()))
    comparison = analytic.compare_with_exact(
        replace(model, gamma_cool=50.0 * model.g))
    worst = max(comparison.nbar_error, comparison.Gamma_error)
    _check(checks, "analytic-regime", comparison.in_regime and worst < 0.05,
           f"gamma_cool = 50 g, worst error {worst:.2%}")


def _verify_cap_guard(checks):
    try:
        fock.FockConfig(n_at=70, n_m=70).validate()
    except CapExceeded as exc:
        _check(checks, "cap-guard", True, f"rejected as expected: {exc}")
        return
    _check(checks, "cap-guard", False, "70x70 config was not rejected")


def _verify_degenerate_guard(checks):
    model = model_from_dict(dict(
        _FOCK_ORACLE, g=0.0, gamma_m=0.0, gamma_diff_at=0.0,
        gamma_diff_m=0.0, nbar=0.0))
    liou = fock.build_liouvillian(model, fock.FockConfig(n_at=2, n_m=20))
    try:
        fock.steady_state_fock(liou)
    except (DegenerateKernel, NumericalError) as exc:
        _check(checks, "degenerate-guard", True,
               f"refused as expected: {type(exc).__name__}")
        return
    _check(checks, "degenerate-guard", False,
           "degenerate kernel went undetected")


def cmd_verify(args):
    cascade_scale = 1.01 if args.debug_perturb_cascade else 1.0
    checks = []
    _verify_params_identities(checks)
    _verify_preset_windows(checks)
    _verify_gaussian_oracle(checks)
    _verify_fock_oracle(checks)
    equivalence = _verify_equivalence(checks, cascade_scale)
    _verify_analytic(checks)
    _verify_cap_guard(checks)
    _verify_degenerate_guard(checks)

    width = max(len(c["name"]) for c in checks)
    for c in checks:
        mark = " ok " if c["passed"] else "FAIL"
        print(f"[{mark}] {c['name']:<{width}}  {c['detail']}")
    failed = [c["name"] for c in checks if not c["passed"]]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")

    if args.out:
        report = {"checks": checks, "passed": not failed}
        if equivalence is not None:
            report["equivalence"] = asdict(equivalence)
        _emit_json(report, args.out)
    return 1 if failed else 0


# ---------------------------------------------------------------- parser

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="memlat",
        description="Cascaded atom-membrane cooling models: parameter "
                    "derivation, steady states, sweeps, verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive model rates from a physical config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("steady", help="steady-state occupation and cooling factor")
    p.add_argument("config")
    p.add_argument("--analytic", action="store_true",
                   help="include the weak-coupling comparison")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("evolve", help="write a time trace CSV (t,n_at,n_m)")
    p.add_argument("config")
    p.add_argument("out")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="evaluate a (g, gamma_cool) grid to CSV")
    p.add_argument("spec")
    p.add_argument("out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the built-in property suite")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--debug-perturb-cascade", action="store_true",
                   help="fault injection: mis-scale the cascaded term by 1%%")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInput, TrapFrequencyImaginary, ReflectivityZero,
            CapExceeded, ZeroCoolRate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NotHurwitz, DegenerateKernel, TruncationLeak, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
