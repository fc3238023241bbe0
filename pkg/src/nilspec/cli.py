"""Command-line front end: reproducible runs with machine-readable outputs.

Every run is a pure function of (RunConfig, package version): all
randomness flows from the single --seed flag, reductions use fixed
ordering, and every output file embeds a hash of the canonical argument
set, so re-running the same command reproduces its outputs byte for
byte. Thread count is a performance knob only.

Exit codes: 0 on success (a report with holds=false is still a
successful run), 1 on input or validation error with the violated
precondition named on stderr, 2 on accuracy failure with both
conflicting values printed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .estimates import (
    InfeasibleWeightError,
    LatticeSpec,
    TailError,
    WeightSpec,
    default_family,
    interpolated_weight_check,
    l1_chain,
    product_factorization_check,
    scaling_experiment,
    weighted_l2_adaptive,
    weighted_plancherel_check,
)
from .groups import (
    AssumptionViolated,
    BUILTIN_GROUPS,
    builtin_group,
    check_assumption_a,
    group_to_json_dict,
    load_group,
)
from .kernels import (
    AccuracyError,
    KernelGrid,
    ProductKernelGrid,
    QuadratureSpec,
    eval_kernel_product,
    plancherel_spectral_norm,
)
from .multipliers import (
    Multiplier,
    discrete_to_continuous_check,
    gaussian_bump,
    multiplier_from_json_dict,
    multiplier_to_json_dict,
    mw_norm,
    sobolev_norm_report,
)
from . import specfun as sf


class InputError(ValueError):
    """User-facing validation failure; message names the precondition."""


# ---------------------------------------------------------------------------
# run configuration


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Canonical record of one invocation; the hash goes into every output.

    The output path and verbosity are excluded from the hash so that
    renaming a report or adding -v does not change its bytes.
    """

    subcommand: str
    options: dict
    seed: int
    threads: int
    out: str | None
    verbosity: int

    def hash(self) -> str:
        blob = json.dumps(
            {
                "subcommand": self.subcommand,
                "options": self.options,
                "seed": self.seed,
                "threads": self.threads,
                "version": __version__,
            },
            sort_keys=True,
            separators=(",", ":"),
            default=str,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SKIP_KEYS = {"out", "csv", "emit_group", "verbose", "func"}


def _run_config(args: argparse.Namespace) -> RunConfig:
    sub = args.subcommand
    if getattr(args, "mode", None):
        sub = f"{sub}:{args.mode}"
    options = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in _SKIP_KEYS and k not in ("subcommand", "mode", "seed", "threads")
    }
    return RunConfig(
        subcommand=sub,
        options=options,
        seed=args.seed,
        threads=args.threads,
        out=args.out,
        verbosity=args.verbose,
    )


def _jsonable(x):
    """Recursive conversion to JSON-serializable builtins."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return _jsonable(dataclasses.asdict(x))
    if callable(x):
        return getattr(x, "__name__", type(x).__name__)
    return x


def _quad_hash(quad: QuadratureSpec) -> str:
    blob = json.dumps(_jsonable(quad), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _provenance(cfg: RunConfig, quad: QuadratureSpec | None = None, **extra) -> dict:
    out = {
        "config_hash": cfg.hash(),
        "subcommand": cfg.subcommand,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "version": __version__,
    }
    if quad is not None:
        out["quad"] = _jsonable(quad)
        out["quad_hash"] = _quad_hash(quad)
    out.update(_jsonable(extra))
    return out


# ---------------------------------------------------------------------------
# output writers


def _emit_text(text: str, path: str | None, cfg: RunConfig, kind: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w") as f:
        f.write(text)
    if cfg.verbosity > 0:
        print(f"wrote {kind} to {path}")


def _json_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(comment_lines: list, header: list, rows: list) -> str:
    lines = [f"# {line}" for line in comment_lines]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def emit_plot_data(obj, path: str | None, provenance: dict | None = None, cfg: RunConfig | None = None) -> str:
    """Write a kernel grid or a scaling report as plotting-ready CSV.

    The header comments document units and provenance (group label,
    multiplier family, quadrature spec hash, config hash). Returns the
    emitted text so callers can hash or test it.
    """
    prov = provenance or {}
    comments = [f"nilspec {__version__}"]
    for key in ("config_hash", "subcommand", "seed"):
        if key in prov:
            comments.append(f"{key}: {prov[key]}")
    if isinstance(obj, (KernelGrid, ProductKernelGrid)):
        comments.append(f"group: {obj.group_label}")
        comments.append(f"multiplier: {obj.multiplier_tag}")
        comments.append(f"quad_hash: {_quad_hash(obj.quad)}")
        comments.append(
            "units: z, u in exponential coordinates of the first and "
            "second layer; re, im are kernel values; est_error is the "
            "max relative two-level refinement disagreement of the sweep"
        )
        if isinstance(obj, ProductKernelGrid):
            pairs = [
                (z, u)
                for z in np.asarray(obj.z_points, dtype=float)
                for u in np.asarray(obj.u_points, dtype=float)
            ]
            values = np.asarray(obj.values).reshape(-1)
        else:
            pairs = [(np.asarray(z, float), np.asarray(u, float)) for z, u in obj.points]
            values = np.asarray(obj.values)
        dim_v = len(pairs[0][0])
        dim_z = len(pairs[0][1])
        header = (
            [f"z{i + 1}" for i in range(dim_v)]
            + [f"u{i + 1}" for i in range(dim_z)]
            + ["re", "im", "est_error"]
        )
        rows = []
        for (z, u), val in zip(pairs, values):
            val = complex(val)
            rows.append(
                [float(c) for c in z]
                + [float(c) for c in u]
                + [val.real, val.imag, float(obj.est_error)]
            )
        text = _csv_text(comments, header, rows)
    elif getattr(obj, "scaling", None):
        scal = obj.scaling
        sob_sq = obj.details.get("sobolev_sq", obj.rhs)
        comments.append(f"family: {obj.family_tag}")
        comments.append(
            f"slope: {_fmt(scal['slope'])}  exponent: {_fmt(float(scal['exponent']))}"
            f"  constant: {_fmt(obj.constant)}  one_sided_ok: {scal['one_sided_ok']}"
        )
        comments.append(
            "units: M dyadic scale (dimensionless); lhs weighted squared "
            "L2 mass of the sliced kernel; bound = constant * M^exponent "
            "* squared Sobolev norm, fitted at the largest M"
        )
        header = ["M", "lhs", "bound"]
        rows = [
            [float(M), float(lhs), float(obj.constant * M ** scal["exponent"] * sob_sq)]
            for M, lhs in scal["points"]
        ]
        text = _csv_text(comments, header, rows)
    else:
        raise InputError(
            "emit_plot_data needs a kernel grid or a report with scaling data"
        )
    if cfg is not None:
        _emit_text(text, path, cfg, "csv")
    elif path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text


# ---------------------------------------------------------------------------
# input resolution


def _resolve_group(spec: str):
    """Group from a shipped short name or a JSON file path.

    File paths win over builtin names so a local h1.json is honored;
    the decomposition block is required since every consumer needs it.
    """
    if os.path.exists(spec):
        g, dec = load_group(spec)
        if dec is None:
            raise InputError(
                f"group file {spec!r} lacks the decomposition block "
                "(blocks + ranks); kernel quadrature needs it"
            )
        return g, dec
    if spec in BUILTIN_GROUPS:
        return builtin_group(spec)
    raise InputError(
        f"group {spec!r} is neither an existing file nor one of the "
        f"builtin names {', '.join(BUILTIN_GROUPS)}"
    )


def _reference_bump() -> Multiplier:
    return gaussian_bump(2.5, 0.5, window=(1.0, 4.0))


def _resolve_symbols(args, default_spec: str) -> list:
    """Multiplier list from --multiplier FILE or --family SPEC.

    SPEC is 'default' (the 8-member family), 'default7' (its pure
    gaussian members), 'default:K' (member K), or 'ref' (the single
    reference bump).
    """
    mult = getattr(args, "multiplier", None)
    fam = getattr(args, "family", None)
    if mult is not None and fam is not None:
        raise InputError("--multiplier and --family are mutually exclusive")
    if mult is not None:
        with open(mult) as f:
            d = json.load(f)
        return [multiplier_from_json_dict(d)]
    spec = fam if fam is not None else default_spec
    if spec == "ref":
        return [_reference_bump()]
    if spec == "default":
        return default_family()
    if spec == "default7":
        return default_family()[:7]
    if spec.startswith("default:"):
        idx = int(spec.split(":", 1)[1])
        family = default_family()
        if not (0 <= idx < len(family)):
            raise InputError(f"family member index {idx} outside 0..{len(family) - 1}")
        return [family[idx]]
    raise InputError(
        f"unknown family spec {spec!r}; use 'default', 'default7', "
        "'default:K', or 'ref'"
    )


def _single_symbol(args, default_spec: str = "ref") -> Multiplier:
    symbols = _resolve_symbols(args, default_spec)
    if len(symbols) == 1:
        return symbols[0]
    member = getattr(args, "member", None)
    idx = 2 if member is None else member
    if not (0 <= idx < len(symbols)):
        raise InputError(f"--member {idx} outside 0..{len(symbols) - 1}")
    return symbols[idx]


def _symbol_tag(F: Multiplier) -> str:
    bits = [F.family]
    for key in ("center", "width", "T", "p", "omega"):
        if key in F.params:
            bits.append(f"{key}={F.params[key]:g}")
    bits.append(f"support=({F.k_lo:g},{F.k_hi:g})")
    return " ".join(bits)


def _quad_from(args, default_rmf: float, default_refine: bool) -> QuadratureSpec:
    kw = {}
    kw["rho_min_factor"] = (
        args.rho_min_factor if args.rho_min_factor is not None else default_rmf
    )
    if args.eta_sphere_nodes is not None:
        kw["eta_sphere_nodes"] = args.eta_sphere_nodes
    if args.xi_base is not None:
        kw["xi_base"] = args.xi_base
    if args.tail_tol is not None:
        kw["tail_tol"] = args.tail_tol
    kw["refine"] = default_refine if args.refine is None else args.refine
    return QuadratureSpec(**kw)


def _floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise InputError(f"expected a comma-separated float list, got {text!r}") from e


def _report_payload(rep, cfg: RunConfig, quad: QuadratureSpec, **extra) -> dict:
    return {
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "constant": rep.constant,
        "family_tag": rep.family_tag,
        "scaling": rep.scaling,
        "details": rep.details,
        "provenance": _provenance(cfg, quad, **extra),
    }


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_check_assumption(args) -> int:
    cfg = _run_config(args)
    g, dec = _resolve_group(args.group)
    report = check_assumption_a(
        g, dec, n_samples=args.samples, tol=args.tol, seed=args.seed,
        threads=args.threads,
    )
    payload = {
        "group": g.label,
        "dim_v": g.dim_v,
        "dim_z": g.dim_z,
        "holds": report.holds,
        "samples_tested": report.samples_tested,
        "max_residual": report.max_residual,
        "failure_witness": report.failure_witness,
        "per_block": report.per_block,
        "tol": report.tol,
        "provenance": _provenance(cfg),
    }
    if args.emit_group is not None:
        gtext = _json_text(group_to_json_dict(g, dec))
        with open(args.emit_group, "w") as f:
            f.write(gtext)
    _emit_text(_json_text(payload), args.out, cfg, "report")
    if args.out is not None or cfg.verbosity > 0:
        print(
            f"{g.label}: holds={str(report.holds).lower()} "
            f"max_residual={report.max_residual:.3e} "
            f"samples={report.samples_tested}"
        )
    return 0


def _identity_checks(seed: int, n_max: int, k_max: int, trials: int, omega_max: int) -> dict:
    """Residuals for the displayed special-function identities.

    Each entry records the worst |got - want| (relative where the test
    is relative), the two values behind it, and the tolerance.
    """
    from scipy.special import roots_laguerre

    rng = np.random.default_rng(seed)
    checks = {}

    worst = (0.0, 0.0, 0.0)
    for _ in range(trials):
        n = int(rng.integers(0, n_max + 1))
        k = int(rng.integers(0, k_max + 1))
        t = float(rng.uniform(0.0, 50.0))
        lhs = sf.laguerre_fn(n, k, t)
        rhs = sf.laguerre_fn(n - 1, k + 1, t) + sf.laguerre_fn(n, k + 1, t)
        res = abs(lhs - rhs) / max(1.0, abs(lhs))
        if res > worst[0]:
            worst = (res, lhs, rhs)
    checks["laguerre_stepdown"] = {
        "max_residual": worst[0], "got": worst[1], "want": worst[2],
        "tol": 1e-10, "trials": trials, "ok": worst[0] <= 1e-10,
    }

    worst = (0.0, 0.0, 0.0)
    h = 1e-5
    for _ in range(trials):
        n = int(rng.integers(0, n_max + 1))
        k = int(rng.integers(0, k_max + 1))
        t = float(rng.uniform(0.1, 50.0))
        num = (sf.laguerre_fn(n, k, t + h) - sf.laguerre_fn(n, k, t - h)) / (2 * h)
        rhs = sf.laguerre_fn(n - 1, k + 1, t) - sf.laguerre_fn(n, k + 1, t)
        res = abs(num - rhs) / max(1.0, abs(rhs))
        if res > worst[0]:
            worst = (res, num, rhs)
    checks["laguerre_derivative"] = {
        "max_residual": worst[0], "got": worst[1], "want": worst[2],
        "tol": 1e-6, "trials": trials, "ok": worst[0] <= 1e-6,
    }

    nodes, weights = roots_laguerre(300)
    worst = (0.0, 0.0, 0.0)
    for k in (0, 2, 5):
        if k > k_max:
            continue
        for n in (0, 1, 7, 15):
            for m in (0, 1, 7, 15):
                vals = (
                    (-1.0) ** (n + m)
                    * sf.laguerre_poly(n, k, nodes)
                    * sf.laguerre_poly(m, k, nodes)
                    * (nodes / 2.0) ** k
                    / 2.0
                )
                got = float(weights @ vals)
                want = (
                    math.factorial(n + k) / (2.0 ** (k + 1) * math.factorial(n))
                    if n == m
                    else 0.0
                )
                res = abs(got - want) / (want if want else 1.0)
                if res > worst[0]:
                    worst = (res, got, want)
    diag = float(weights @ (np.ones_like(nodes) / 2.0))
    checks["laguerre_orthogonality"] = {
        "max_residual": worst[0], "got": worst[1], "want": worst[2],
        "tol": 1e-8, "ok": worst[0] <= 1e-8,
    }
    checks["laguerre_orthogonality_diagonal_pin"] = {
        "max_residual": abs(diag - 0.5), "got": diag, "want": 0.5,
        "tol": 1e-12, "ok": abs(diag - 0.5) <= 1e-12,
    }

    worst = (0.0, 0.0, 0.0)
    omegas = [int(w) for w in np.linspace(0, omega_max, min(omega_max + 1, 6))]
    for _ in range(trials):
        omega = int(rng.choice(omegas))
        th1, th2 = rng.uniform(-2, 2, size=2)
        t = th1 * th1 + th2 * th2
        closed = (-1.0) ** omega * sf.laguerre_fn(omega, 0, t)
        got = sf.fourier_wigner_hermite(omega, th1, th2)
        res = abs(got - closed) / max(abs(closed), math.exp(-t))
        if res > worst[0]:
            worst = (res, got, closed)
    checks["fourier_wigner_closed_form"] = {
        "max_residual": worst[0], "got": worst[1], "want": worst[2],
        "tol": 1e-8, "trials": trials, "omega_max": omega_max,
        "ok": worst[0] <= 1e-8,
    }

    lhs1, rhs1, _ = discrete_to_continuous_check(
        lambda x: math.sin(x[0]), (1,), (2,), deriv=lambda x: math.cos(x[0])
    )
    checks["discrete_to_continuous_single_step"] = {
        "max_residual": abs(lhs1 - rhs1), "got": lhs1, "want": rhs1,
        "tol": 1e-10, "ok": abs(lhs1 - rhs1) <= 1e-10,
    }
    lhs2, rhs2, _ = discrete_to_continuous_check(
        lambda x: math.exp(x[0] + x[1]),
        (1, 1),
        (0, 0),
        deriv=lambda x: math.exp(x[0] + x[1]),
    )
    closed2 = (math.e - 1.0) ** 2
    res2 = max(abs(lhs2 - closed2), abs(rhs2 - lhs2))
    checks["discrete_to_continuous_closed_form"] = {
        "max_residual": res2, "got": lhs2, "want": closed2,
        "tol": 1e-6, "ok": res2 <= 1e-6,
    }
    return checks


def _cmd_identities(args) -> int:
    cfg = _run_config(args)
    checks = _identity_checks(
        args.seed, args.n_max, args.k_max, args.trials, args.omega_max
    )
    payload = {"checks": checks, "provenance": _provenance(cfg)}
    _emit_text(_json_text(payload), args.out, cfg, "report")
    failing = {name: c for name, c in checks.items() if not c["ok"]}
    if failing:
        for name, c in failing.items():
            print(
                f"accuracy error: {name} residual {c['max_residual']:.3e} "
                f"exceeds {c['tol']:.1e}; got {c['got']!r} want {c['want']!r}",
                file=sys.stderr,
            )
        return 2
    if args.out is not None or cfg.verbosity > 0:
        print(f"all {len(checks)} identity checks pass")
    return 0


def _cmd_norms(args) -> int:
    cfg = _run_config(args)
    symbols = _resolve_symbols(args, "default")
    rows = []
    for F in symbols:
        rep = sobolev_norm_report(F, args.s, grid=args.grid)
        row = {"symbol": _symbol_tag(F), "json": multiplier_to_json_dict(F)}
        row.update(rep)
        if args.dyadic:
            row["mw_norm"] = mw_norm(F, args.s, grid=args.grid // 2, threads=args.threads)
        rows.append(row)
    payload = {"s": args.s, "members": rows, "provenance": _provenance(cfg)}
    _emit_text(_json_text(payload), args.out, cfg, "report")
    unresolved = [r["symbol"] for r in rows if not r["resolved"]]
    if unresolved:
        for tag in unresolved:
            row = next(r for r in rows if r["symbol"] == tag)
            print(
                f"accuracy error: norm of {tag} unresolved at grid {args.grid}: "
                f"fine {row['value']!r} vs coarse {row['coarse_value']!r}",
                file=sys.stderr,
            )
        return 2
    if args.out is not None or cfg.verbosity > 0:
        for r in rows:
            print(f"{r['symbol']}: W^{args.s:g} norm {r['value']:.6g}")
    return 0


def _cmd_kernel(args) -> int:
    cfg = _run_config(args)
    g, dec = _resolve_group(args.group)
    F = _single_symbol(args)
    quad = _quad_from(args, default_rmf=1e-3, default_refine=True)
    axis_z = np.linspace(-args.z_extent, args.z_extent, args.z_nodes)
    axis_u = np.linspace(-args.u_extent, args.u_extent, args.u_nodes)
    z_pts = [np.array(p) for p in np.stack(
        np.meshgrid(*([axis_z] * g.dim_v), indexing="ij"), axis=-1
    ).reshape(-1, g.dim_v)]
    u_pts = [np.array(p) for p in np.stack(
        np.meshgrid(*([axis_u] * g.dim_z), indexing="ij"), axis=-1
    ).reshape(-1, g.dim_z)]
    grid = eval_kernel_product(
        g, dec, F, z_pts, u_pts, quad=quad, threads=args.threads,
        raise_on_disagreement=True,
    )
    emit_plot_data(grid, args.out, provenance=_provenance(cfg, quad), cfg=cfg)
    if args.out is not None and cfg.verbosity > 0:
        print(f"{len(z_pts) * len(u_pts)} samples, est_error {grid.est_error:.3e}")
    return 0


def _cmd_plancherel(args) -> int:
    cfg = _run_config(args)
    g, dec = _resolve_group(args.group)
    symbols = _resolve_symbols(args, "default7")
    quad = _quad_from(args, default_rmf=1e-3, default_refine=False)
    u_extents = _floats(args.u_extents) if args.u_extents else [24.0] * len(symbols)
    if len(u_extents) == 1:
        u_extents = u_extents * len(symbols)
    if len(u_extents) != len(symbols):
        raise InputError(
            f"--u-extents needs one entry per member ({len(symbols)}), "
            f"got {len(u_extents)}"
        )
    w_one = WeightSpec(alpha=0.0, r=0.0)
    rows = []
    worst = 0.0
    for F, u_ext in zip(symbols, u_extents):
        spectral = plancherel_spectral_norm(g, dec, F, quad=quad)
        lat = LatticeSpec.auto(g, dec, F, z_extent=args.z_extent, u_extent=u_ext)
        grid_sq, _, lat_used, det = weighted_l2_adaptive(
            g, dec, F, w_one, lat, quad=quad, threads=args.threads,
            tail_frac=args.tail_frac, max_widenings=args.max_widenings,
        )
        grid_norm = math.sqrt(max(grid_sq, 0.0))
        rel = grid_norm / spectral - 1.0 if spectral > 0 else 0.0
        worst = max(worst, abs(rel))
        rows.append(
            {
                "symbol": _symbol_tag(F),
                "grid_norm": grid_norm,
                "spectral_norm": spectral,
                "rel_gap": rel,
                "tail_fraction": det.get("tail_fraction"),
                "lattice": lat_used,
            }
        )
    payload = {
        "members": rows,
        "max_rel_gap": worst,
        "tol": args.tol,
        "provenance": _provenance(cfg, quad),
    }
    _emit_text(_json_text(payload), args.out, cfg, "report")
    if worst > args.tol:
        for r in rows:
            if abs(r["rel_gap"]) > args.tol:
                print(
                    f"accuracy error: {r['symbol']} grid norm {r['grid_norm']!r} "
                    f"vs spectral norm {r['spectral_norm']!r} "
                    f"(rel gap {r['rel_gap']:.3%} > {args.tol:.1%})",
                    file=sys.stderr,
                )
        return 2
    if args.out is not None or cfg.verbosity > 0:
        print(f"max relative gap {worst:.3%} over {len(rows)} members (tol {args.tol:.1%})")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _run_config(args)
    mode = args.mode
    quad = _quad_from(args, default_rmf=1e-3, default_refine=False)
    extra = {}
    if mode == "product":
        g1, dec1 = _resolve_group(args.group)
        g2, dec2 = _resolve_group(args.group2 if args.group2 else args.group)
        if args.multiplier:
            with open(args.multiplier) as f:
                F1 = multiplier_from_json_dict(json.load(f))
        else:
            F1 = gaussian_bump(2.0, 0.4, window=(1.0, 3.0))
        if args.multiplier2:
            with open(args.multiplier2) as f:
                F2 = multiplier_from_json_dict(json.load(f))
        else:
            F2 = gaussian_bump(2.5, 0.5, window=(1.5, 3.5))
        rng = np.random.default_rng(args.seed)
        pts1 = [
            (rng.uniform(-1.0, 1.0, g1.dim_v), rng.uniform(-0.5, 0.5, g1.dim_z))
            for _ in range(args.points)
        ]
        pts2 = [
            (rng.uniform(-1.0, 1.0, g2.dim_v), rng.uniform(-0.5, 0.5, g2.dim_z))
            for _ in range(args.points)
        ]
        rep = product_factorization_check(
            g1, dec1, g2, dec2, F1, F2, pts1, pts2, quad=quad,
            threads=args.threads, s_pair=(args.s1, args.s2),
        )
        extra = {"groups": [g1.label, g2.label], "points_per_factor": args.points}
    else:
        g, dec = _resolve_group(args.group)
        extra = {"group": g.label}
        if mode == "scaling":
            F = _single_symbol(args)
            M_list = _floats(args.M_list)
            rep = scaling_experiment(
                g, dec, F, args.r, M_list, quad=quad, threads=args.threads,
                z_extent=args.z_extent, u_extent_at_unit=args.u_extent_at_unit,
                tail_frac=args.tail_frac, max_widenings=args.max_widenings,
                method=args.method,
            )
            extra["symbol"] = _symbol_tag(F)
        elif mode == "weighted":
            family = _resolve_symbols(args, "default")
            u_extents = _floats(args.u_extents) if args.u_extents else None
            rep = weighted_plancherel_check(
                g, dec, family, args.r, quad=quad, threads=args.threads,
                u_extents=u_extents, z_extent=args.z_extent,
                tail_frac=args.tail_frac, max_widenings=args.max_widenings,
            )
        elif mode == "interp":
            family = _resolve_symbols(args, "default7")
            u_extents = _floats(args.u_extents) if args.u_extents else None
            rep = interpolated_weight_check(
                g, dec, family, args.alpha, args.r, args.beta, quad=quad,
                threads=args.threads, u_extents=u_extents,
                z_extent=args.z_extent, tail_frac=args.tail_frac,
                max_widenings=args.max_widenings,
            )
        elif mode == "l1chain":
            F = _single_symbol(args)
            rep = l1_chain(
                g, dec, F, args.s, quad=quad, threads=args.threads,
                tail_frac=args.tail_frac, max_widenings=args.max_widenings,
            )
            extra["symbol"] = _symbol_tag(F)
        else:
            raise InputError(f"unknown estimate mode {mode!r}")
    payload = _report_payload(rep, cfg, quad, **extra)
    _emit_text(_json_text(payload), args.out, cfg, "report")
    if args.csv is not None:
        if not rep.scaling:
            raise InputError("--csv needs a scaling run (only scaling reports tabulate as M, lhs, bound)")
        emit_plot_data(rep, args.csv, provenance=_provenance(cfg, quad), cfg=cfg)
    if args.out is not None or cfg.verbosity > 0:
        line = f"estimate {mode}: constant {rep.constant:.6g}"
        if rep.scaling:
            line += f", slope {rep.scaling['slope']:.4f}, one_sided_ok {rep.scaling['one_sided_ok']}"
        if "spread" in rep.details:
            line += f", family spread {rep.details['spread']:.4g}"
        print(line)
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--seed", type=int, default=0, help="seed for the single run RNG")
    base.add_argument("--threads", type=int, default=1, help="worker threads (results identical)")
    base.add_argument("--out", default=None, help="output file (default: stdout)")
    base.add_argument("-v", "--verbose", action="count", default=0)

    quadp = argparse.ArgumentParser(add_help=False)
    quadp.add_argument("--rho-min-factor", type=float, default=None,
                       help="low-frequency cutoff as a fraction of the support top")
    quadp.add_argument("--eta-sphere-nodes", type=int, default=None)
    quadp.add_argument("--xi-base", type=int, default=None)
    quadp.add_argument("--tail-tol", type=float, default=None)
    quadp.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None,
                       help="run the two-level refinement sweep")

    symp = argparse.ArgumentParser(add_help=False)
    symp.add_argument("--multiplier", default=None, help="multiplier JSON file")
    symp.add_argument("--family", default=None,
                      help="family spec: default | default7 | default:K | ref")
    symp.add_argument("--member", type=int, default=None,
                      help="member index when a single symbol is needed from a family")

    p = argparse.ArgumentParser(
        prog="nilspec",
        description="Spectral-multiplier experiments on 2-step stratified groups.",
    )
    p.add_argument("--version", action="version", version=f"nilspec {__version__}")
    subs = p.add_subparsers(dest="subcommand", required=True)

    s = subs.add_parser("check-assumption", parents=[base],
                        help="test the orthogonal-block spectral contract on a group")
    s.add_argument("--group", required=True, help="builtin name or group JSON file")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--emit-group", default=None,
                   help="also write the normalized group JSON here")
    s.set_defaults(func=_cmd_check_assumption)

    s = subs.add_parser("identities", parents=[base],
                        help="special-function identity suite with residual report")
    s.add_argument("--n-max", type=int, default=40)
    s.add_argument("--k-max", type=int, default=8)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--omega-max", type=int, default=10)
    s.set_defaults(func=_cmd_identities)

    s = subs.add_parser("norms", parents=[base, symp],
                        help="fractional Sobolev norms of symbols")
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--grid", type=int, default=2048)
    s.add_argument("--dyadic", action="store_true",
                   help="also report the sup over dyadic dilates")
    s.set_defaults(func=_cmd_norms)

    s = subs.add_parser("kernel", parents=[base, quadp, symp],
                        help="sample the convolution kernel on a centered lattice (CSV)")
    s.add_argument("--group", required=True)
    s.add_argument("--z-extent", type=float, default=2.0)
    s.add_argument("--z-nodes", type=int, default=5)
    s.add_argument("--u-extent", type=float, default=2.0)
    s.add_argument("--u-nodes", type=int, default=5)
    s.set_defaults(func=_cmd_kernel)

    s = subs.add_parser("plancherel", parents=[base, quadp, symp],
                        help="grid L2 norm vs frequency-side norm per family member")
    s.add_argument("--group", required=True)
    s.add_argument("--z-extent", type=float, default=9.0)
    s.add_argument("--u-extents", default="40,24,24,24,40,110,24,180",
                   help="comma list, one entry per member (or a single broadcast value)")
    s.add_argument("--tol", type=float, default=0.04)
    s.add_argument("--tail-frac", type=float, default=0.05)
    s.add_argument("--max-widenings", type=int, default=1)
    s.set_defaults(func=_cmd_plancherel)

    est = subs.add_parser("estimate", help="weighted / L1 estimate experiments")
    modes = est.add_subparsers(dest="mode", required=True)

    estp = argparse.ArgumentParser(add_help=False)
    estp.add_argument("--tail-frac", type=float, default=0.05)
    estp.add_argument("--max-widenings", type=int, default=1)
    estp.add_argument("--csv", default=None,
                      help="also emit plotting CSV (scaling runs only)")

    s = modes.add_parser("scaling", parents=[base, quadp, symp, estp],
                         help="dyadic-slice scaling law, one-sided fit")
    s.add_argument("--group", required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--M-list", default="0.25,0.125,0.0625,0.03125,0.015625")
    s.add_argument("--method", choices=("lattice", "spectral"), default="lattice")
    s.add_argument("--z-extent", type=float, default=12.0)
    s.add_argument("--u-extent-at-unit", type=float, default=8.0)
    s.set_defaults(func=_cmd_estimate)

    s = modes.add_parser("weighted", parents=[base, quadp, symp, estp],
                         help="center-weighted squared L2 mass vs Sobolev norm")
    s.add_argument("--group", required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--z-extent", type=float, default=9.0)
    s.add_argument("--u-extents", default="40,24,24,24,40,110,24,180")
    s.set_defaults(func=_cmd_estimate)

    s = modes.add_parser("interp", parents=[base, quadp, symp, estp],
                         help="mixed-weight estimate below the interpolation line")
    s.add_argument("--group", required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--z-extent", type=float, default=12.0)
    s.add_argument("--u-extents", default="48,24,24,24,48,380,24")
    s.set_defaults(func=_cmd_estimate)

    s = modes.add_parser("l1chain", parents=[base, quadp, symp, estp],
                         help="L1 bound through the weighted Cauchy-Schwarz chain")
    s.add_argument("--group", required=True)
    s.add_argument("--s", type=float, required=True)
    s.set_defaults(func=_cmd_estimate)

    s = modes.add_parser("product", parents=[base, quadp, symp, estp],
                         help="direct-product kernel factorization check")
    s.add_argument("--group", required=True)
    s.add_argument("--group2", default=None, help="second factor (default: same as --group)")
    s.add_argument("--multiplier2", default=None, help="multiplier JSON for the second factor")
    s.add_argument("--points", type=int, default=3, help="random points per factor")
    s.add_argument("--s1", type=float, default=1.0)
    s.add_argument("--s2", type=float, default=1.2)
    s.set_defaults(func=_cmd_estimate)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; our contract reserves 2 for
        # accuracy failures, so grammar problems map to input errors
        return 0 if e.code in (0, None) else 1
    try:
        return args.func(args)
    except AccuracyError as e:
        fine = np.asarray(e.fine).reshape(-1)
        coarse = np.asarray(e.coarse).reshape(-1)
        worst = int(np.argmax(np.abs(fine - coarse)))
        print(
            f"accuracy error: {e}; worst sample: fine {complex(fine[worst])!r} "
            f"vs coarse {complex(coarse[worst])!r}",
            file=sys.stderr,
        )
        return 2
    except TailError as e:
        print(
            f"accuracy error: {e}; lattice mass {e.total!r} with outermost "
            f"shell fraction {e.shell_fraction!r}",
            file=sys.stderr,
        )
        return 2
    except InfeasibleWeightError as e:
        print(f"input error: {e}; violated: {e.violated}", file=sys.stderr)
        return 1
    except (InputError, AssumptionViolated, ValueError, KeyError, OSError,
            json.JSONDecodeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
