"""Command-line frontend: JSON config in, CSV rows + JSON manifest out.

Every run writes a manifest echoing the fully resolved configuration and the
engine version; every CSV row is self-describing (n, log_p, alpha, constants,
branch flags) with floats rendered in scientific notation at 17 significant
digits so identical configs reproduce byte-identical output.  The manifest
timestamp is the only non-deterministic field and lives outside the CSV.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import __version__
from .distributions import ComponentModel, LatticeDistribution
from .errors import ConfigError, ResourceCapError
from .logdomain import NEG_INF
from .mc_estimator import GaussianComponents, McConfig, simulate_rho
from .nonuniform_be import (
    BoundConstants,
    MomentProfile,
    PowerSchedule,
    calibrate_constants,
    check_assumptions,
)
from .phase_transition import (
    CaseIConfig,
    CaseIIConfig,
    case1_rho_lower,
    case1_threshold_log_p,
    case2_exact_rho_lower,
    case2_quantities,
    eta_max,
)
from .product_factorization import (
    RectangleFamily,
    lemma3_bound,
    product_diff_exact,
    sup_diff_equal_coords,
)
from .theorem_bounds import theorem1_bound, theorem2_bound, theorem2_c

COMMANDS = (
    "check-assumptions",
    "rho-exact",
    "lemma3-bound",
    "rho-mc",
    "bound-thm1",
    "bound-thm2",
    "phase-case1",
    "phase-case2",
    "sweep",
)

AMAX_N_CAP = 4000


class ValidationError(ValueError):
    """Config validation failure; carries a $.field diagnostic."""


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value == math.inf:
            return "inf"
        if value == NEG_INF:
            return "-inf"
        return f"{value:.16e}"
    return str(value)


def _fail(path: str, message: str) -> None:
    raise ValidationError(f"config error at {path}: {message}")


def _get(cfg: dict, key: str, kind, path: str, required: bool = False, default=None):
    if key not in cfg:
        if required:
            _fail(f"{path}.{key}", "missing required field")
        return default
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        _fail(f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def parse_model(cfg: dict):
    spec = cfg.get("model", {"kind": "rademacher"})
    if not isinstance(spec, dict):
        _fail("$.model", "expected an object")
    kind = spec.get("kind", "rademacher")
    if kind == "gaussian":
        return {"kind": "gaussian"}
    if kind == "rademacher":
        return {"kind": "rademacher"}
    if kind == "lattice":
        try:
            offset = Fraction(spec["offset"])
            step = Fraction(spec["step"])
            masses = tuple(Fraction(m) for m in spec["masses"])
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            _fail("$.model", f"bad lattice spec ({exc})")
        return {"kind": "lattice", "offset": str(offset), "step": str(step),
                "masses": [str(m) for m in masses]}
    _fail("$.model.kind", f"unknown kind {kind!r}")


def build_model(model_spec: dict, n: int) -> ComponentModel | GaussianComponents:
    if model_spec["kind"] == "gaussian":
        return GaussianComponents()
    if model_spec["kind"] == "rademacher":
        return ComponentModel.rademacher_model(n)
    dist = LatticeDistribution(
        Fraction(model_spec["offset"]),
        Fraction(model_spec["step"]),
        tuple(Fraction(m) for m in model_spec["masses"]),
    )
    return ComponentModel.lattice_model(dist, n)


def resolve_n_grid(cfg: dict) -> list[int]:
    if "n_grid" in cfg:
        grid = cfg["n_grid"]
        if not isinstance(grid, list) or not all(isinstance(x, int) for x in grid):
            _fail("$.n_grid", "expected a list of integers")
        if not grid:
            _fail("$.n_grid", "n-grid empty")
        return grid
    n = _get(cfg, "n", int, "$", required=True)
    if n < 1:
        _fail("$.n", "n must be >= 1")
    return [n]


def resolve_log_p(cfg: dict, n: int) -> tuple[float, float | None]:
    """Returns (log_p, alpha or None)."""
    if "alpha" in cfg:
        alpha = _get(cfg, "alpha", float, "$")
        if not 0.0 < alpha < 1.0:
            _fail("$.alpha", "alpha must lie in (0, 1)")
        return float(n) ** alpha, alpha
    log_p = _get(cfg, "log_p", float, "$", required=True)
    return log_p, None


def resolve_alpha_grid(cfg: dict) -> list[float]:
    grid = cfg.get("alpha_grid")
    if grid is None:
        _fail("$.alpha_grid", "missing required field")
    if not isinstance(grid, list) or not grid:
        _fail("$.alpha_grid", "expected a non-empty list")
    out = []
    for i, alpha in enumerate(grid):
        if isinstance(alpha, int):
            alpha = float(alpha)
        if not isinstance(alpha, float) or not 0.0 < alpha < 1.0:
            _fail(f"$.alpha_grid[{i}]", "alpha must lie in (0, 1)")
        out.append(alpha)
    return out


def resolve_constants(cfg: dict) -> tuple[BoundConstants, float]:
    """Returns (constants, l_const)."""
    spec = cfg.get("constants", {})
    if not isinstance(spec, dict):
        _fail("$.constants", "expected an object")
    l_const = _get(spec, "l", float, "$.constants", default=2.0)
    if spec.get("calibrate", False):
        constants = calibrate_constants(
            l_const=l_const,
            m_n_coeff=_get(spec, "m_n_coeff", float, "$.constants", default=1.0),
            a_exponent=_get(spec, "a_exponent", float, "$.constants", default=0.125),
        )
    else:
        constants = BoundConstants(
            b1=_get(spec, "b1", float, "$.constants", default=1.0),
            b2=_get(spec, "b2", float, "$.constants", default=1.0),
            m_n_coeff=_get(spec, "m_n_coeff", float, "$.constants", default=1.0),
            a_n=PowerSchedule(_get(spec, "a_exponent", float, "$.constants", default=0.125)),
        )
    return constants, l_const


def resolve_eta(cfg: dict) -> float:
    eta = cfg.get("eta", "auto")
    if eta == "auto":
        return 0.9 * eta_max()
    if isinstance(eta, int):
        eta = float(eta)
    if not isinstance(eta, float) or eta <= 0.0:
        _fail("$.eta", "eta must be positive or 'auto'")
    return eta


def _p_int_columns(log_p: float) -> tuple[int | None, bool]:
    """Integer p and a rounding flag, for rows feeding exact-product paths."""
    if log_p > math.log(1e15):
        return None, False
    p_real = math.exp(log_p)
    p_int = max(1, round(p_real))
    return p_int, abs(p_real - p_int) > 1e-9 * p_real


# ---------------------------------------------------------------------------
# Command implementations: each returns (header, rows)
# ---------------------------------------------------------------------------

def cmd_check_assumptions(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    if model_spec["kind"] == "gaussian":
        _fail("$.model.kind", "check-assumptions needs a lattice-backed model")
    m_max = _get(cfg, "m_max", int, "$", default=50)
    header = [
        "n", "m_max", "symmetric", "a2_odd_moments_zero", "first_nonzero_odd_order",
        "variance_ratio", "a3_ok", "a4_ok", "l_max",
    ]
    rows = []
    _, l_const = resolve_constants(cfg)
    for n in resolve_n_grid(cfg):
        model = build_model(model_spec, n)
        report = check_assumptions(MomentProfile.for_model(model, l_const), m_max)
        rows.append([
            fmt(n), fmt(m_max), fmt(report.symmetric), fmt(report.odd_moments_zero),
            fmt(report.first_nonzero_odd_order), fmt(report.variance_ratio),
            fmt(report.a3_ok), fmt(report.a4_ok_at_profile_l), fmt(report.l_max),
        ])
    return header, rows


def cmd_rho_exact(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    if model_spec["kind"] == "gaussian":
        _fail("$.model.kind", "rho-exact needs a lattice-backed model")
    side = cfg.get("side", "left_infinite")
    if side not in ("left_infinite", "symmetric"):
        _fail("$.side", f"unknown side {side!r}")
    header = ["n", "alpha", "log_p", "p_int", "p_rounded", "side", "t_star", "rho"]
    rows = []
    for n in resolve_n_grid(cfg):
        log_p, alpha = resolve_log_p(cfg, n)
        model = build_model(model_spec, n)
        result = sup_diff_equal_coords(model.marginal(), log_p, side=side)
        p_int, rounded = _p_int_columns(log_p)
        rows.append([
            fmt(n), fmt(alpha), fmt(log_p), fmt(p_int), fmt(rounded), side,
            fmt(result.t_star), fmt(result.rho),
        ])
    return header, rows


def cmd_lemma3_bound(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    if model_spec["kind"] == "gaussian":
        _fail("$.model.kind", "lemma3-bound needs a lattice-backed model")
    rect_spec = cfg.get("rect")
    if not isinstance(rect_spec, dict) or "a" not in rect_spec or "b" not in rect_spec:
        _fail("$.rect", "expected an object with 'a' and 'b' arrays")
    try:
        rect = RectangleFamily(
            tuple(float(x) for x in rect_spec["a"]),
            tuple(float(x) for x in rect_spec["b"]),
        )
    except (TypeError, ValueError) as exc:
        _fail("$.rect", str(exc))
    from .distributions import STD_GAUSSIAN

    header = ["n", "p_dim", "lemma3_bound", "product_diff_exact"]
    rows = []
    for n in resolve_n_grid(cfg):
        model = build_model(model_spec, n)
        marg = model.marginal()
        bound = lemma3_bound(marg, STD_GAUSSIAN, rect)
        exact = product_diff_exact(marg, STD_GAUSSIAN, rect)
        rows.append([fmt(n), fmt(rect.p_dim), fmt(bound), fmt(exact)])
    return header, rows


def cmd_rho_mc(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    mc_spec = cfg.get("mc")
    if not isinstance(mc_spec, dict):
        _fail("$.mc", "expected an object")
    trials = _get(mc_spec, "trials", int, "$.mc", required=True)
    p_dim = _get(mc_spec, "p_dim", int, "$.mc", required=True)
    t_grid = mc_spec.get("t_grid")
    if not isinstance(t_grid, list) or not t_grid:
        _fail("$.mc.t_grid", "expected a non-empty list")
    seed = args.seed if args.seed is not None else _get(mc_spec, "seed", int, "$.mc", default=0)
    header = [
        "n", "p_dim", "trials", "seed", "kind", "rect_index", "t", "phat",
        "exact_gauss", "diff", "ci_halfwidth", "max_abs_diff", "union_ci_halfwidth",
    ]
    rows = []
    for n in resolve_n_grid(cfg):
        model = build_model(model_spec, n)
        mc_cfg = McConfig(
            trials=trials, seed=seed, p_dim=p_dim,
            t_grid=tuple(float(t) for t in t_grid),
        )
        result = simulate_rho(model, n, mc_cfg)
        for row in result.rows:
            rows.append([
                fmt(n), fmt(p_dim), fmt(trials), fmt(seed), "rect",
                fmt(row.index), fmt(row.t), fmt(row.phat), fmt(row.exact_gauss),
                fmt(row.diff), fmt(row.ci_halfwidth),
                fmt(result.max_abs_diff), fmt(result.union_ci_halfwidth),
            ])
        rows.append([
            fmt(n), fmt(p_dim), fmt(trials), fmt(seed), "max",
            fmt(result.max_index), "", "", "", "", "",
            fmt(result.max_abs_diff), fmt(result.union_ci_halfwidth),
        ])
    return header, rows


def _bound_header(kind: str) -> list[str]:
    return [
        "n", "alpha", "log_p", kind, "piece_1", "piece_2", "piece_3", "piece_4",
        "agg_1", "agg_2", "agg_3", "total", "b1", "b2", "a_n", "l",
        "verdicts",
    ]


def cmd_bound_thm1(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    constants, l_const = resolve_constants(cfg)
    t = cfg.get("t", [])
    if not isinstance(t, list):
        _fail("$.t", "expected a list of reals")
    header = _bound_header("a_n")
    rows = []
    for n in resolve_n_grid(cfg):
        log_p, alpha = resolve_log_p(cfg, n)
        model = build_model(model_spec, n)
        profile = MomentProfile.for_model(model, l_const)
        report = theorem1_bound([float(x) for x in t], n, log_p, profile, constants)
        rows.append([
            fmt(n), fmt(alpha), fmt(log_p), fmt(report.param_value),
            *[fmt(p) for p in report.pieces], *[fmt(a) for a in report.aggregates],
            fmt(report.total), fmt(constants.b1), fmt(constants.b2),
            constants.a_n.description, fmt(l_const), "",
        ])
    return header, rows


def cmd_bound_thm2(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    constants, l_const = resolve_constants(cfg)
    epsilon = _get(cfg, "epsilon", float, "$", required=True)
    t = cfg.get("t", [])
    if not isinstance(t, list):
        _fail("$.t", "expected a list of reals")
    header = _bound_header("epsilon")
    rows = []
    for n in resolve_n_grid(cfg):
        model = build_model(model_spec, n)
        profile = MomentProfile.for_model(model, l_const)
        try:
            report = theorem2_bound([float(x) for x in t], n, epsilon, profile, constants)
        except ValueError as exc:
            _fail("$.epsilon", str(exc))
        verdicts = ";".join(
            f"{k}={fmt(v)}" for k, v in sorted(report.extras.items())
            if isinstance(v, bool)
        )
        rows.append([
            fmt(n), "", fmt(report.log_p), fmt(epsilon),
            *[fmt(p) for p in report.pieces], *[fmt(a) for a in report.aggregates],
            fmt(report.total), fmt(constants.b1), fmt(constants.b2),
            constants.a_n.description, fmt(l_const), verdicts,
        ])
    return header, rows


def cmd_phase_case1(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    header = [
        "n", "alpha", "log_p", "threshold_log_p", "at_threshold", "gauss_side",
        "rho_lower", "gauss_side_le_2_over_e",
    ]
    rows = []
    for n in resolve_n_grid(cfg):
        threshold = case1_threshold_log_p(n)
        if "log_p" in cfg or "alpha" in cfg:
            log_p, alpha = resolve_log_p(cfg, n)
        else:
            log_p, alpha = threshold, None
        try:
            result = case1_rho_lower(CaseIConfig(n, log_p))
        except ConfigError as exc:
            _fail("$.log_p", str(exc))
        rows.append([
            fmt(n), fmt(alpha), fmt(log_p), fmt(threshold), fmt(log_p == threshold),
            fmt(result.gauss_side), fmt(result.rho_lower),
            fmt(result.gauss_side_le_2_over_e),
        ])
    return header, rows


def cmd_phase_case2(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    delta = _get(cfg, "delta", float, "$", required=True)
    eta = resolve_eta(cfg)
    header = [
        "n", "alpha", "log_p", "delta", "eta", "f_n", "n1", "branch",
        "log_g_n", "log_e1n", "log_e2n", "log_p_e1n", "log_p_e2n",
        "l1n_exact", "l2n", "rho_lower", "log_sf_walk",
    ]
    rows = []
    for n in resolve_n_grid(cfg):
        log_p, alpha = resolve_log_p(cfg, n)
        try:
            cfg2 = CaseIIConfig.build(n, log_p, delta, eta)
        except ConfigError as exc:
            _fail("$", str(exc))
        quantities = case2_quantities(cfg2)
        exact = case2_exact_rho_lower(cfg2)
        rows.append([
            fmt(n), fmt(alpha), fmt(log_p), fmt(delta), fmt(eta), fmt(cfg2.f_n),
            fmt(cfg2.n1), cfg2.branch, fmt(quantities.log_g_n), fmt(quantities.log_e1n),
            fmt(quantities.log_e2n), fmt(quantities.log_p_e1n), fmt(quantities.log_p_e2n),
            fmt(exact.l1n_exact), fmt(exact.l2n), fmt(exact.rho_lower),
            fmt(exact.log_sf_walk),
        ])
    return header, rows


SWEEP_HEADER = [
    "n", "alpha", "log_p", "p_int", "p_rounded", "amax_rho", "amax_t_star",
    "case1_applicable", "case1_gauss_side", "case1_rho_lower",
    "case2_applicable", "case2_delta", "case2_eta", "case2_f_n", "case2_n1",
    "case2_branch", "case2_rho_lower", "case2_log_p_e1n", "case2_log_p_e2n",
    "b1", "b2", "a_n", "l", "seed",
]


def _sweep_cell(payload: dict) -> list[str]:
    n = payload["n"]
    alpha = payload["alpha"]
    log_p = float(n) ** alpha
    model = build_model(payload["model"], n)
    p_int, rounded = _p_int_columns(log_p)
    row: dict[str, Any] = {
        "n": n, "alpha": alpha, "log_p": log_p, "p_int": p_int, "p_rounded": rounded,
        "b1": payload["b1"], "b2": payload["b2"], "a_n": payload["a_n"],
        "l": payload["l"], "seed": payload["seed"],
    }
    if n <= AMAX_N_CAP:
        sup = sup_diff_equal_coords(model.marginal(), log_p)
        row["amax_rho"] = sup.rho
        row["amax_t_star"] = sup.t_star
    threshold = case1_threshold_log_p(n)
    row["case1_applicable"] = log_p >= threshold
    if row["case1_applicable"]:
        result = case1_rho_lower(CaseIConfig(n, log_p))
        row["case1_gauss_side"] = result.gauss_side
        row["case1_rho_lower"] = result.rho_lower
    delta = alpha - 0.5
    row["case2_applicable"] = delta > 0.0 and log_p <= threshold
    if row["case2_applicable"]:
        eta = payload["eta"]
        cfg2 = CaseIIConfig.build(n, log_p, delta, eta)
        quantities = case2_quantities(cfg2)
        exact = case2_exact_rho_lower(cfg2)
        row.update({
            "case2_delta": delta, "case2_eta": eta, "case2_f_n": cfg2.f_n,
            "case2_n1": cfg2.n1, "case2_branch": cfg2.branch,
            "case2_rho_lower": exact.rho_lower,
            "case2_log_p_e1n": quantities.log_p_e1n,
            "case2_log_p_e2n": quantities.log_p_e2n,
        })
    return [fmt(row.get(col)) for col in SWEEP_HEADER]


def cmd_sweep(cfg: dict, args) -> tuple[list[str], list[list[str]]]:
    model_spec = parse_model(cfg)
    if model_spec["kind"] == "gaussian":
        _fail("$.model.kind", "sweep needs a lattice-backed model")
    n_grid = resolve_n_grid(cfg)
    alpha_grid = resolve_alpha_grid(cfg)
    constants, l_const = resolve_constants(cfg)
    eta = resolve_eta(cfg)
    seed = args.seed if args.seed is not None else 0
    payloads = [
        {
            "n": n, "alpha": alpha, "model": model_spec, "eta": eta,
            "b1": constants.b1, "b2": constants.b2,
            "a_n": constants.a_n.description, "l": l_const, "seed": seed,
        }
        for n in n_grid
        for alpha in alpha_grid
    ]
    workers = args.workers
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, payloads))
    else:
        rows = [_sweep_cell(p) for p in payloads]
    return SWEEP_HEADER, rows


DISPATCH = {
    "check-assumptions": cmd_check_assumptions,
    "rho-exact": cmd_rho_exact,
    "lemma3-bound": cmd_lemma3_bound,
    "rho-mc": cmd_rho_mc,
    "bound-thm1": cmd_bound_thm1,
    "bound-thm2": cmd_bound_thm2,
    "phase-case1": cmd_phase_case1,
    "phase-case2": cmd_phase_case2,
    "sweep": cmd_sweep,
}


def _load_config(path: str) -> dict:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ValidationError(f"config error at $: cannot read config ({exc})")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config error at $: invalid JSON (line {exc.lineno}: {exc.msg})")
    if not isinstance(cfg, dict):
        raise ValidationError("config error at $: top level must be an object")
    return cfg


def _write_outputs(out_path: str, header: Sequence[str], rows, manifest: dict) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    manifest_path = out_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hdclt", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path or '-' for stdin")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    if args.workers is None:
        args.workers = int(os.environ.get("HDCLT_WORKERS", "1"))
    if args.workers < 1:
        print("config error at --workers: must be >= 1", file=sys.stderr)
        return 1

    try:
        cfg = _load_config(args.config)
        header, rows = DISPATCH[args.command](cfg, args)
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"config error at $: {exc}", file=sys.stderr)
        return 1
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return 2

    manifest = {
        "command": args.command,
        "engine_version": __version__,
        "resolved_config": cfg,
        "workers": args.workers,
        "seed": args.seed,
        "out": os.path.abspath(args.out),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_outputs(args.out, header, rows, manifest)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
