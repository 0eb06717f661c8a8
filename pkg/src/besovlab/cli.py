"""Command-line front end.

Each subcommand loads and validates the configuration before doing any
work, writes its tables into ``--out`` and prints a short summary unless
``--quiet`` is given.  Exit codes: 0 success, 1 a verification failed,
2 invalid configuration, 3 a numerical routine failed.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from typing import Callable, Optional

import numpy as np

from . import lasota_yorke as ly
from .config import ConfigError, ExperimentConfig
from .dyadic import STANDARD, WIDE, build_filter, partition_residual, psi
from .dynamics import (ConvergenceError, DomainError, chi_min, gl_bound, pressure, r_limit)
from .kernels import (QuadratureError, decay_check, far_pairs, big_lambda, kernel_eval,
                      regimes_for, b_m_l1)
from .output import csv_text, json_text, write_text
from .transfer import assemble_matrix, stable_eigenvalues

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class Context:
    def __init__(self, cfg: ExperimentConfig, out: str, quiet: bool):
        self.cfg = cfg
        self.out = out
        self.quiet = quiet
        self.written = []

    def write(self, name: str, text: str) -> None:
        self.written.append(write_text(os.path.join(self.out, name), text))

    def say(self, msg: str) -> None:
        if not self.quiet:
            print(msg)


# commands ---------------------------------------------------------------

def cmd_filters(ctx: Context) -> int:
    """Tabulate the dyadic filters and their partition-of-unity residuals."""
    n_max = ctx.cfg["grid", "n_max"]
    rows = []
    for n in range(n_max + 1):
        f = build_filter(n, STANDARD)
        lo, hi = f.support()
        wlo, whi = build_filter(n, WIDE).support()
        rows.append([n, lo, hi, wlo, whi, float(psi(n, 2 ** n)),
                     partition_residual(n, STANDARD)])
    ctx.write("filters.csv", csv_text(
        ["n", "support_lo", "support_hi", "wide_lo", "wide_hi", "peak_value", "max_residual"],
        rows))
    top = 2 ** (n_max + 1)
    k = np.arange(top + 1)
    table = [[int(kk)] + [float(psi(n, kk)) for n in range(n_max + 1)]
             + [float(psi(n, kk, WIDE)) for n in range(n_max + 1)] for kk in k]
    header = ["k"] + [f"psi_{n}" for n in range(n_max + 1)] + \
             [f"wide_{n}" for n in range(n_max + 1)]
    ctx.write("filter_values.csv", csv_text(header, table))
    ctx.say(f"filters: blocks 0..{n_max}, max partition residual "
            f"{max(r[-1] for r in rows):.3e}")
    return EXIT_OK


def _bounds_rows(cfg: ExperimentConfig):
    fmap, g = cfg.circle_map, cfg.weight
    n_max = cfg["bounds", "n_max"]
    chi = chi_min(fmap, n_max).value
    R = r_limit(g, fmap, n_max).value
    constant_family = fmap.epsilon == 0.0 and g.family in ("constant", "inverse_jacobian")
    rows = []
    for s in cfg["bounds", "s_values"]:
        thm = math.exp(-s * chi) * R
        gl = gl_bound(fmap, g, s, n_max)
        rel = abs(thm - gl) / thm
        rows.append([s, chi, R, thm, gl, rel, constant_family and rel <= 1e-6])
    return rows


def cmd_bounds(ctx: Context) -> int:
    """Compare the essential-radius bound with the thermodynamic formula."""
    rows = _bounds_rows(ctx.cfg)
    header = ["s", "chi_min", "r_limit", "thm_bound", "gl_bound", "rel_diff", "coincide"]
    ctx.write("bounds.csv", csv_text(header, rows))
    mono = all(a[3] > b[3] for a, b in zip(rows, rows[1:]))
    ctx.write("bounds.json", json_text({
        "rows": [dict(zip(header, r)) for r in rows],
        "thm_bound_decreasing_in_s": mono if len(rows) > 1 else None,
        "gl_below_thm": all(r[4] <= r[3] * (1 + 1e-6) for r in rows),
    }))
    for r in rows:
        ctx.say(f"s={r[0]:g}: thm_bound={r[3]:.10g} gl_bound={r[4]:.10g}")
    return EXIT_OK


def cmd_spectrum(ctx: Context) -> int:
    """Export the Fourier matrix and probe truncation-stable eigenvalues."""
    cfg = ctx.cfg
    L = cfg.operator
    ks = sorted(cfg["grid", "truncations"])
    probe = stable_eigenvalues(L, ks, match_tol=cfg["spectrum", "match_tol"])
    ctx.write("matrix.csv", assemble_matrix(L, ks[-1]).csv_text())
    rows = []
    for K, spec in zip(probe.truncations, probe.spectra):
        rows += [[K, i, z.real, z.imag, abs(z)] for i, z in enumerate(spec)]
    ctx.write("spectra.csv", csv_text(["K", "index", "re", "im", "modulus"], rows))
    ctx.write("stable.csv", csv_text(
        ["re", "im", "modulus", "max_drift"],
        [[e.value.real, e.value.imag, abs(e.value), e.max_drift] for e in probe.stable]))
    radius = ly.essential_radius_probe(L, cfg["besov", "s"], ks, n_max=cfg["bounds", "n_max"],
                                       margin=cfg["spectrum", "margin"],
                                       match_tol=cfg["spectrum", "match_tol"])
    ctx.write("probe.json", json_text(radius.to_dict()))
    ctx.say(f"spectrum: {len(probe.stable)} stable eigenvalue(s); "
            f"bound {radius.bound:.6g}; consistent={radius.consistent}")
    return EXIT_OK if radius.consistent else EXIT_FAIL


def _corpus(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    modes = cfg["corpus", "modes"]
    return ly.standard_corpus(cfg["grid", "n"], cfg["corpus", "size"], rng,
                              modes=range(0, modes + 1) if modes >= 0 else ())


def cmd_ly_verify(ctx: Context) -> int:
    """Check the Lasota-Yorke block bounds on a test corpus."""
    cfg = ctx.cfg
    L, params = cfg.operator, cfg.besov
    constants = ly.compute_constants(L, params, cfg["grid", "n"],
                                     rng=np.random.default_rng(cfg.seed))
    report = ly.verify_ly(L, params, _corpus(cfg), constants)
    ctx.write("ly_report.json", report.to_json())
    ctx.write("ly_report.csv", report.to_csv())
    ctx.write("constants.txt", constants.table())
    ctx.say(f"ly-verify: {len(report.records)} functions, pass={report.passed}, "
            f"fitted high constant {report.high_constant:.6g}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_kernel_decay(ctx: Context) -> int:
    """Fit kernel decay constants over the far block pairs."""
    cfg = ctx.cfg
    branch, weight = cfg.branch, cfg.local_weight
    big = big_lambda(branch, weight)
    pairs = far_pairs(big, cfg["kernel", "top"])
    grids = {}
    summary = {"big_lambda": big, "pairs": [list(p) for p in pairs], "regimes": {}}
    text = ""
    for regime in regimes_for(weight.regularity):
        rep = decay_check(branch, weight, pairs, regime, grids)
        body = rep.to_csv()
        text += body if not text else body.split("\n", 1)[1]
        summary["regimes"][regime] = {"log_slope": rep.log_slope,
                                      "sup_constant": rep.sup_constant,
                                      "slope_ok": rep.log_slope <= 0.1}
    summary["b_l1"] = [b_m_l1(m) for m in range(cfg["kernel", "top"] + 1)]
    ctx.write("decay.csv", text)
    ctx.write("decay.json", json_text(summary))
    pair = (cfg["kernel", "export_n"], cfg["kernel", "export_l"])
    grid = grids.get(pair)
    if grid is None:
        try:
            grid = kernel_eval(branch, weight, *pair)
        except ValueError:
            grid = grids[pairs[0]]
    ctx.write(f"kernel_{grid.n}_{grid.l}.csv", grid.to_csv())
    ctx.write(f"kernel_{grid.n}_{grid.l}.dat", grid.to_gnuplot())
    ok = all(v["slope_ok"] for v in summary["regimes"].values())
    ctx.say(f"kernel-decay: {len(pairs)} pairs, slopes "
            + ", ".join(f"{k}={v['log_slope']:.3f}" for k, v in summary["regimes"].items()))
    return EXIT_OK if ok else EXIT_FAIL


def _potential(cfg: ExperimentConfig) -> Callable:
    kind = cfg["pressure", "potential"]
    fmap, g = cfg.circle_map, cfg.weight
    if kind == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if kind == "log_weight":
        return g.log_abs
    if kind == "neg_log_deriv":
        return lambda x: -np.log(np.abs(fmap.deriv(x)))
    c = cfg["pressure", "constant"]
    return lambda x: np.full(np.shape(x), c)


def cmd_pressure(ctx: Context) -> int:
    """Periodic-orbit pressure sequence for the configured potential."""
    cfg = ctx.cfg
    res = pressure(cfg.circle_map, _potential(cfg), cfg["pressure", "n_max"])
    seq = res.sequence
    rows = [[m + 1, v, abs(v - seq[m - 1]) if m else float("nan")] for m, v in enumerate(seq)]
    ctx.write("pressure.csv", csv_text(["n", "pressure", "step_delta"], rows))
    ctx.say(f"pressure: P_{len(seq)} = {res.value:.12g} (last step {res.refinement_delta:.3g})")
    return EXIT_OK


def cmd_report(ctx: Context) -> int:
    """Run every command into subdirectories and collect their exit codes."""
    codes = {}
    for name, fn in COMMANDS.items():
        if name == "report":
            continue
        sub = Context(ctx.cfg, os.path.join(ctx.out, name), True)
        codes[name] = fn(sub)
    lines = [f"{k}: {'ok' if v == EXIT_OK else 'FAIL'}" for k, v in codes.items()]
    ctx.write("report.json", json_text({"seed": ctx.cfg.seed, "exit_codes": codes}))
    ctx.write("report.txt", "\n".join(lines) + "\n")
    for line in lines:
        ctx.say(line)
    return EXIT_OK if all(v == EXIT_OK for v in codes.values()) else EXIT_FAIL


COMMANDS = {
    "filters": cmd_filters,
    "bounds": cmd_bounds,
    "spectrum": cmd_spectrum,
    "ly-verify": cmd_ly_verify,
    "kernel-decay": cmd_kernel_decay,
    "pressure": cmd_pressure,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besovlab",
        description="Transfer operators of expanding circle maps on Besov spaces.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file (defaults apply if omitted)")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for random corpora (overrides [run] seed)")
    common.add_argument("--quiet", action="store_true", help="suppress the summary")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().split("\n")[0]
                       or None)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = ExperimentConfig.from_file(args.config, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ctx = Context(cfg, args.out, args.quiet)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, QuadratureError, DomainError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
