"""Command-line interface: thin orchestration over the library modules.

Commands read a single strict-schema JSON config (unknown keys are
rejected, units are explicit) and write CSV or JSON files. No physics is
computed here. Exit codes: 0 success, 2 config error, 3 numerical failure,
4 validation deviation breach.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from . import identical as ident
from . import montecarlo as mc
from . import oracle, scattering
from .eigen import DefectiveMatrixError, diag_complex_symmetric
from .params import SystemParams, project_operators
from .scattering import TransmissionZeroError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DEVIATION = 4

#: Oracle-vs-scattering agreement required by `validate`.
VALIDATE_RTOL = 0.02


class ConfigError(ValueError):
    pass


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing {key!r} in {where}")
    return doc[key]


def _check_keys(doc: dict, allowed: set, where: str):
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return doc


def _system_params(doc: dict) -> SystemParams:
    unit = doc.get("unit", "kappa_units")
    if unit not in ("kappa_units", "ghz_2pi"):
        raise ConfigError(f"unknown unit {unit!r}")
    sysdoc = _require(doc, "system", "config")
    _check_keys(sysdoc, {"omega_c", "kappa_b", "kappa_c", "emitters"},
                "system")
    emitters = []
    for k, e in enumerate(sysdoc.get("emitters", [])):
        _check_keys(e, {"omega", "gamma", "g"}, f"emitters[{k}]")
        emitters.append((_require(e, "omega", f"emitters[{k}]"),
                         _require(e, "gamma", f"emitters[{k}]"),
                         _require(e, "g", f"emitters[{k}]")))
    factory = (SystemParams.in_kappa_units if unit == "kappa_units"
               else SystemParams.in_ghz_2pi)
    try:
        return factory(omega_c=_require(sysdoc, "omega_c", "system"),
                       kappa_b=_require(sysdoc, "kappa_b", "system"),
                       kappa_c=_require(sysdoc, "kappa_c", "system"),
                       emitters=emitters)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad system parameters: {exc}") from exc


def _scale(doc: dict) -> float:
    """Frequency scale from config units to kappa units.

    Both unit systems divide by kappa in source units; the 2*pi of the
    ghz_2pi convention cancels in any frequency ratio.
    """
    sysdoc = doc.get("system") or doc.get("identical") or {}
    kappa = sysdoc.get("kappa_b", 0.5) + sysdoc.get("kappa_c", 0.5)
    if kappa <= 0:
        raise ConfigError("kappa must be positive")
    return 1.0 / kappa


def _omega_grid(doc: dict) -> np.ndarray:
    grid = _require(doc, "grid", "config")
    _check_keys(grid, {"omega_min", "omega_max", "points"}, "grid")
    points = int(_require(grid, "points", "grid"))
    lo = _require(grid, "omega_min", "grid") * _scale(doc)
    hi = _require(grid, "omega_max", "grid") * _scale(doc)
    if points < 2 or hi <= lo:
        raise ConfigError("grid must be nonempty and increasing")
    return np.linspace(lo, hi, points)


def _write_text(path: str, text: str):
    with open(path, "w") as fh:
        fh.write(text)


def _csv_rows(header: list, columns: list) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def cmd_spectrum(doc: dict, args) -> int:
    params = _system_params(doc)
    grid = _omega_grid(doc)
    spectrum = scattering.compute_spectrum(params, grid)
    header = ["omega_L", "T", "g2_0"]
    columns = [spectrum.omega_grid, spectrum.t, spectrum.g2zero]
    if args.contributions:
        mags, phases = [], []
        for w in grid:
            _, contr = scattering.g2_zero(params, float(w))
            mags.append([c.magnitude for c in contr])
            phases.append([c.phase for c in contr])
        mags = np.array(mags).T
        phases = np.array(phases).T
        for i in range(mags.shape[0]):
            header += [f"gamma{i}_mag", f"gamma{i}_phase"]
            columns += [mags[i], phases[i]]
    if args.format == "csv":
        _write_text(args.out, _csv_rows(header, columns))
    else:
        doc_out = {h: [float(x) for x in col]
                   for h, col in zip(header, columns)}
        _write_text(args.out, json.dumps(doc_out, indent=1))
    return EXIT_OK


def _tau_grid(doc: dict) -> np.ndarray:
    grid = _require(doc, "tau_grid", "config")
    _check_keys(grid, {"tau_max", "points"}, "tau_grid")
    points = int(_require(grid, "points", "tau_grid"))
    tau_max = _require(grid, "tau_max", "tau_grid")
    if points < 2 or tau_max <= 0:
        raise ConfigError("tau grid must be nonempty and increasing")
    return np.linspace(0.0, tau_max, points)


def settling_time(taus: np.ndarray, g2: np.ndarray, band: float = 0.05):
    """First tau after which |g2 - 1| < band for the rest of the grid."""
    outside = np.abs(g2 - 1.0) >= band
    if not outside.any():
        return float(taus[0])
    last = int(np.nonzero(outside)[0][-1])
    if last == len(taus) - 1:
        return None
    return float(taus[last + 1])


def cmd_g2tau(doc: dict, args) -> int:
    params = _system_params(doc)
    omega_l = _require(doc, "omega_l", "config") * _scale(doc)
    taus = _tau_grid(doc)
    trace = scattering.g2_tau(params, omega_l, taus)
    st = settling_time(taus, trace.g2)
    if args.format == "csv":
        _write_text(args.out, _csv_rows(["tau", "g2"], [taus, trace.g2]))
    else:
        _write_text(args.out, json.dumps({
            "omega_l": omega_l,
            "tau": [float(x) for x in taus],
            "g2": [float(x) for x in trace.g2],
            "settling_time": st}, indent=1))
    print(f"settling_time: {st}")
    return EXIT_OK


def cmd_identical_limits(doc: dict, args) -> int:
    iddoc = _require(doc, "identical", "config")
    _check_keys(iddoc, {"omega_c", "kappa_b", "kappa_c", "omega_e", "gamma",
                        "g", "n"}, "identical")
    unit = doc.get("unit", "kappa_units")
    factory = (ident.IdenticalParams.in_kappa_units if unit == "kappa_units"
               else ident.IdenticalParams.in_ghz_2pi)
    try:
        p = factory(omega_c=_require(iddoc, "omega_c", "identical"),
                    kappa_b=_require(iddoc, "kappa_b", "identical"),
                    kappa_c=_require(iddoc, "kappa_c", "identical"),
                    omega_e=_require(iddoc, "omega_e", "identical"),
                    gamma=_require(iddoc, "gamma", "identical"),
                    g=_require(iddoc, "g", "identical"),
                    n=_require(iddoc, "n", "identical"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad identical parameters: {exc}") from exc
    grid = _omega_grid(doc)
    spectrum = ident.compute_spectrum_identical(p, grid)
    n2t = p.n**2 * spectrum.t
    header = ["omega_L", "T", "g2_0", "n2_T", "limit_n2_T", "limit_g2"]
    columns = [grid, spectrum.t, spectrum.g2zero, n2t,
               ident.limit_transmission(p, grid), ident.limit_g2(p, grid)]
    if args.format == "csv":
        _write_text(args.out, _csv_rows(header, columns))
    else:
        _write_text(args.out, json.dumps(
            {h: [float(x) for x in col] for h, col in zip(header, columns)},
            indent=1))
    return EXIT_OK


def cmd_mc(doc: dict, args) -> int:
    mcdoc = _require(doc, "mc", "config")
    allowed = {"runs", "n", "mean_omega_e", "sigma_inhom", "omega_c",
               "kappa_b", "kappa_c", "g", "gamma", "seed", "omega_min",
               "omega_max", "coarse_step", "fine_halfwidth", "fine_step",
               "refine_tol"}
    _check_keys(mcdoc, allowed, "mc")
    kwargs = dict(mcdoc)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    kwargs["threads"] = args.threads
    unit = doc.get("unit", "kappa_units")
    try:
        config = (mc.MCConfig(**kwargs) if unit == "kappa_units"
                  else mc.MCConfig.in_ghz_2pi(**kwargs))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad mc parameters: {exc}") from exc
    result = mc.run_mc(config)
    _write_text(args.out, result.to_json())
    hist_path = os.path.splitext(args.out)[0] + "_hist.csv"
    _write_text(hist_path, result.histograms_csv())
    print(f"histograms: {hist_path}")
    return EXIT_OK


def cmd_validate(doc: dict, args) -> int:
    params = _system_params(doc)
    if params.n_emitters > oracle.MAX_EMITTERS:
        raise ConfigError(f"validate supports N <= {oracle.MAX_EMITTERS}")
    vdoc = doc.get("validate", {})
    _check_keys(vdoc, {"n_max", "omega", "tau_max", "tau_points",
                       "corrupt_kappa_c_factor"}, "validate")
    n_max = int(vdoc.get("n_max", 6))
    omega = float(vdoc.get("omega", 1e-3))
    grid = _omega_grid(doc)
    omega_l = _require(doc, "omega_l", "config") * _scale(doc)
    taus = np.linspace(0.0, float(vdoc.get("tau_max", 12.0)),
                       int(vdoc.get("tau_points", 25)))

    # Negative-control hook: corrupt kappa_c in the scattering path only.
    scat_params = params
    corrupt = vdoc.get("corrupt_kappa_c_factor")
    if corrupt is not None:
        scat_params = SystemParams(
            omega_c=params.omega_c, kappa_b=params.kappa_b,
            kappa_c=params.kappa_c * float(corrupt),
            emitters=params.emitters, kappa_scale=params.kappa_scale)

    t_oracle, g2_oracle = oracle.sweep_observables(params, grid, omega=omega,
                                                   n_max=n_max)
    t_scat = scattering.transmission(scat_params, grid)
    g2_scat = scattering.g2_zero_grid(scat_params, grid)
    dev_t = np.abs(t_scat - t_oracle) / np.abs(t_oracle)
    dev_g2 = np.abs(g2_scat - g2_oracle) / np.abs(g2_oracle)

    drive = oracle.DriveConfig.from_strength(params, omega_l, omega=omega,
                                             n_max=n_max)
    otr = oracle.g2_tau_regression(params, drive, taus)
    strc = scattering.g2_tau(scat_params, omega_l, taus)
    dev_tau = np.abs(strc.g2 - otr.g2) / np.abs(otr.g2)

    report = {
        "max_rel_dev_T": float(dev_t.max()),
        "worst_omega_T": float(grid[int(np.argmax(dev_t))]),
        "max_rel_dev_g2": float(dev_g2.max()),
        "worst_omega_g2": float(grid[int(np.argmax(dev_g2))]),
        "max_rel_dev_g2_tau": float(dev_tau.max()),
        "tolerance": VALIDATE_RTOL,
    }
    _write_text(args.out, json.dumps(report, indent=1))
    ok = max(report["max_rel_dev_T"], report["max_rel_dev_g2"],
             report["max_rel_dev_g2_tau"]) < VALIDATE_RTOL
    print(json.dumps(report, indent=1))
    if not ok:
        worst = max(("T", report["max_rel_dev_T"], report["worst_omega_T"]),
                    ("g2", report["max_rel_dev_g2"], report["worst_omega_g2"]),
                    key=lambda x: x[1])
        print(f"validation FAILED: {worst[0]} deviates by {worst[1]:.3%} "
              f"at omega_L = {worst[2]:.6g}", file=sys.stderr)
        return EXIT_DEVIATION
    return EXIT_OK


def _time_call(fun, budget: float = 0.2) -> float:
    """Best-of-repeats wall time of fun(), overheads amortized."""
    best = float("inf")
    t_total = 0.0
    while t_total < budget:
        t0 = time.perf_counter()
        fun()
        dt = time.perf_counter() - t0
        best = min(best, dt)
        t_total += dt
        if dt > budget:
            break
    return best


def cmd_bench(doc: dict, args) -> int:
    bdoc = doc.get("bench", {})
    _check_keys(bdoc, {"n_list", "g", "detuning", "gamma", "budget_s"},
                "bench")
    n_list = bdoc.get("n_list", [20, 26, 33, 41, 50])
    if list(n_list) != sorted(n_list):
        raise ConfigError("bench n_list must be ascending")
    g = float(bdoc.get("g", 0.2))
    det = float(bdoc.get("detuning", 0.8))
    gamma = float(bdoc.get("gamma", 0.01))
    budget = float(bdoc.get("budget_s", 0.2))

    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        import contextlib

        def threadpool_limits(**_kw):
            return contextlib.nullcontext()

    rows = []
    with threadpool_limits(limits=1):
        for n in n_list:
            params = SystemParams.in_kappa_units(
                0.0, 0.5, 0.5, [(det, gamma, g)] * int(n))

            def one_t():
                blocks = project_operators(params)
                es1 = diag_complex_symmetric(blocks.h1, level=1, passive=True)
                s = (blocks.a01 @ es1.u)[0]
                return np.abs((s**2 / (es1.lambdas - 0.35)).sum()) ** 2

            def one_g2():
                scattering.solve_system.cache_clear()
                return scattering.g2_zero(params, 0.35)[0]

            t_tr = _time_call(one_t, budget)
            t_g2 = _time_call(one_g2, budget)
            rows.append({"n": int(n), "transmission_s": t_tr, "g2_s": t_g2})
            print(f"N={n}: T {t_tr * 1e3:.3f} ms   g2 {t_g2:.3f} s")

    ns = np.array([r["n"] for r in rows], dtype=float)
    expo_t = float(np.polyfit(np.log(ns),
                              np.log([r["transmission_s"] for r in rows]), 1)[0])
    expo_g2 = float(np.polyfit(np.log(ns),
                               np.log([r["g2_s"] for r in rows]), 1)[0])
    report = {
        "machine": {"platform": platform.platform(),
                    "python": platform.python_version(),
                    "processor": platform.processor() or "unknown",
                    "blas_threads": 1},
        "timings": rows,
        "fitted_exponent_transmission": expo_t,
        "fitted_exponent_g2": expo_g2,
    }
    _write_text(args.out, json.dumps(report, indent=1))
    print(f"fitted exponents: transmission {expo_t:.2f}, g2 {expo_g2:.2f}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "g2tau": cmd_g2tau,
    "identical-limits": cmd_identical_limits,
    "mc": cmd_mc,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqed",
        description="Photon transport statistics for multi-emitter cavity QED")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--contributions", action="store_true")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("CQED_THREADS", "1")))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load_config(args.config)
        return COMMANDS[args.command](doc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DefectiveMatrixError, TransmissionZeroError,
            oracle.RefinementNeededError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
