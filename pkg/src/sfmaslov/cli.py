"""
Command-line front end.

    sfmaslov {sf,maslov,parametrix,bifurcate,flow-trace} --config cfg.json [--out DIR]
             [--seed N] [--tol-override key=value ...] [--methods m1,m2]

Every run writes ``<subcommand>.json`` and ``<subcommand>.txt`` (and
``flow-trace.csv`` for the trace) into the output directory.  Exit status: 0
success, 1 method disagreement or failed certificate/numerical check, 2 bad
configuration (nothing is written).
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__, _tol
from .exceptions import SFMaslovError

KINDS = ("explicit-samples", "sturm-liouville", "random-seeded", "builtin")
METHODS = ("morse", "crossing", "maslov", "oracle")
BUILTINS = ("scalar-crossing", "opposite-crossings", "rotation-loop")
KEYS = {
    "kind", "interval", "dimension", "degree", "path", "frames", "reference",
    "name", "length", "potential", "nonlinearity", "methods", "tolerances",
    "seed", "samples", "out", "verify", "eps0", "rungs", "k_max",
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration

def load_config(path, seed=None, overrides=(), methods=None):
    """Parse and normalise a JSON configuration; raises :class:`ConfigError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(cfg) - KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}")
    if seed is not None:
        cfg["seed"] = int(seed)
    if kind == "random-seeded" and "seed" not in cfg:
        raise ConfigError("random-seeded configs need a seed")
    if "seed" in cfg and (not isinstance(cfg["seed"], int) or cfg["seed"] < 0):
        raise ConfigError("seed must be a non-negative integer")
    tols = dict(cfg.get("tolerances", {}))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"bad --tol-override {item!r}")
        k, v = item.split("=", 1)
        try:
            tols[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"bad tolerance value {v!r}") from None
    try:
        cfg["_tol"] = _tol.DEFAULT.with_overrides(**{k: float(v) for k, v in tols.items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerance override: {exc}") from None
    cfg["tolerances"] = tols
    if methods is not None:
        cfg["methods"] = [m.strip() for m in methods.split(",") if m.strip()]
    ms = cfg.setdefault("methods", list(METHODS))
    if not ms or any(m not in METHODS for m in ms):
        raise ConfigError(f"methods must be drawn from {METHODS}")
    if "interval" in cfg:
        iv = cfg["interval"]
        if (not isinstance(iv, list) or len(iv) != 2
                or not all(isinstance(x, (int, float)) for x in iv) or not iv[0] < iv[1]):
            raise ConfigError("interval must be [a, b] with a < b")
    nl = cfg.setdefault("nonlinearity", {"name": "none"})
    if not isinstance(nl, dict) or nl.get("name") not in ("cubic", "quintic", "none") \
            or set(nl) - {"name", "coef"}:
        raise ConfigError("nonlinearity must be {name: cubic|quintic|none, coef: number}")
    if kind == "builtin" and cfg.get("name") not in BUILTINS:
        raise ConfigError(f"builtin name must be one of {BUILTINS}")
    return cfg


def _matrix_list(raw, what):
    try:
        mats = [np.array(M, dtype=float) for M in raw]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be nested numeric arrays") from None
    if not mats or any(M.ndim != 2 for M in mats) or len({M.shape for M in mats}) != 1:
        raise ConfigError(f"{what} must be equally sized 2-d arrays")
    return mats


def build_operator_path(cfg):
    """OperatorPath described by the configuration."""
    from .bifurcate import discretize_sturm_liouville
    from .spectral import OperatorPath

    kind = cfg["kind"]
    if kind == "explicit-samples":
        p = cfg.get("path")
        if not isinstance(p, dict) or set(p) != {"grid", "matrices"}:
            raise ConfigError("explicit-samples needs path = {grid, matrices}")
        mats = _matrix_list(p["matrices"], "path.matrices")
        if mats[0].shape[0] != mats[0].shape[1]:
            raise ConfigError("path matrices must be square")
        try:
            return OperatorPath.from_samples(p["grid"], mats)
        except (ValueError, SFMaslovError) as exc:
            raise ConfigError(f"invalid sampled path: {exc}") from None
    if kind == "sturm-liouville":
        N = cfg.get("dimension", 200)
        if not isinstance(N, int) or N < 3:
            raise ConfigError("sturm-liouville dimension must be an integer >= 3")
        length = float(cfg.get("length", np.pi))
        V = cfg.get("potential", 0.0)
        if not isinstance(V, (int, float)):
            raise ConfigError("potential must be a constant")
        pot = (lambda x: V + 0 * x) if V else None
        return discretize_sturm_liouville(N, length, pot, tuple(cfg.get("interval", [0.5, 9.5])))
    if kind == "random-seeded":
        n = cfg.get("dimension", 4)
        deg = cfg.get("degree", 2)
        if not isinstance(n, int) or n < 1 or not isinstance(deg, int) or deg < 1:
            raise ConfigError("dimension and degree must be positive integers")
        rng = np.random.default_rng(cfg["seed"])
        coefs = [(lambda G: (G + G.T) / 2)(rng.standard_normal((n, n))) for _ in range(deg + 1)]
        a, b = cfg.get("interval", [-1.0, 1.0])

        def A(lam):
            return sum(C * lam ** j for j, C in enumerate(coefs))

        def dA(lam):
            return sum(j * C * lam ** (j - 1) for j, C in enumerate(coefs) if j)

        return OperatorPath(A, a, b, derivative=dA)
    name = cfg["name"]
    a, b = cfg.get("interval", [-1.0, 1.0])
    if name == "scalar-crossing":
        return OperatorPath(lambda lam: np.array([[lam]]), a, b, derivative=lambda lam: np.eye(1))
    if name == "opposite-crossings":
        return OperatorPath(lambda lam: np.diag([lam - 0.25, 0.75 - lam]), 0.0, 1.0,
                            derivative=lambda lam: np.diag([1.0, -1.0]))
    raise ConfigError(f"builtin {name!r} is not an operator path")


def build_lagrangian_path(cfg):
    """(LagrangianPath, reference frame or None) for the maslov subcommand."""
    from .grassmann import LagrangianPath
    from .spectral import graph_path
    from .symlin import h0_frame

    if cfg["kind"] == "builtin" and cfg["name"] == "rotation-loop":
        return LagrangianPath(lambda t: np.array([[np.cos(np.pi * t)], [np.sin(np.pi * t)]]),
                              0.0, 1.0, n_grid=33), None
    if cfg["kind"] == "explicit-samples" and "frames" in cfg:
        fr = cfg["frames"]
        if not isinstance(fr, dict) or set(fr) != {"grid", "frames"}:
            raise ConfigError("frames must be {grid, frames}")
        mats = _matrix_list(fr["frames"], "frames.frames")
        try:
            path = LagrangianPath.from_samples(fr["grid"], mats)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        ref = cfg.get("reference")
        ref = None if ref is None else _matrix_list([ref], "reference")[0]
        return path, ref
    op = build_operator_path(cfg)
    return graph_path(op), h0_frame(op.n)


# ---------------------------------------------------------------------------
# subcommands; each returns (result dict, status)

def _error_dict(exc):
    return {"error": type(exc).__name__, "message": str(exc),
            "where": _jsonable(getattr(exc, "where", None)),
            "margin": _jsonable(getattr(exc, "margin", None))}


def cmd_sf(cfg):
    from . import spectral as sp

    path = build_operator_path(cfg)
    tol = cfg["_tol"]
    runners = {
        "morse": lambda: sp.spectral_flow_morse(path, tol).value,
        "crossing": lambda: sp.spectral_flow_crossings(path, tol).value,
        "maslov": lambda: sp.spectral_flow_maslov(path, tol).value,
        "oracle": lambda: sp.eigenvalue_tracking_oracle(path, cfg.get("samples", 400), tol),
    }
    values, errors = {}, {}
    for m in cfg["methods"]:
        try:
            values[m] = int(runners[m]())
        except SFMaslovError as exc:
            errors[m] = _error_dict(exc)
    crossings = []
    try:
        crossings = [sp.crossing_form(path, lam, tol, kernel_dim=len(js)).as_dict()
                     for lam, js in sp.singular_set(path, tol, return_detail=True)]
    except SFMaslovError as exc:
        errors["singular_set"] = _error_dict(exc)
    agree = len(set(values.values())) == 1 and not any(m in errors for m in cfg["methods"])
    res = {"values": values, "agree": agree, "value": next(iter(values.values())) if agree else None,
           "crossings": crossings, "errors": errors, "sign_convention": "sf = mu(A_a) - mu(A_b)"}
    if getattr(path, "interpolation", None):
        res["interpolation"] = path.interpolation
    return res, ("ok" if agree else "disagreement")


def cmd_maslov(cfg):
    from .grassmann import maslov_loop_index, relative_maslov_index
    from .symlin import gap

    tol = cfg["_tol"]
    path, ref = build_lagrangian_path(cfg)
    closed = gap(path.frame(path.a), path.frame(path.b)) <= max(tol.gap, 1e-7)
    out = {"closed": bool(closed), "n": int(path.n)}
    try:
        if closed and ref is None:
            out["loop_index"] = maslov_loop_index(path, tol)
        else:
            from .symlin import h0_frame
            out["relative_index"] = relative_maslov_index(path, h0_frame(path.n) if ref is None else ref, tol)
            if closed:
                out["loop_index"] = maslov_loop_index(path, tol)
    except SFMaslovError as exc:
        out["errors"] = _error_dict(exc)
        return out, "numerical-failure"
    return out, "ok"


def cmd_parametrix(cfg):
    from .parametrix import parametrix_path, refine, replay_certificate

    tol = cfg["_tol"]
    path = build_operator_path(cfg)
    try:
        pp = parametrix_path(path, tol, k_max=cfg.get("k_max"))
        replay = replay_certificate(pp, path, 10, tol)
    except SFMaslovError as exc:
        return {"errors": _error_dict(exc)}, "certificate-failure"
    ts = refine(pp.grid, 1)
    ranks = [int(np.linalg.matrix_rank(pp.K(t), tol=1e-10 * max(1.0, np.linalg.norm(pp.K(t), 2))))
             for t in ts]
    return {"method": pp.method, "dim_F": int(pp.F.shape[1]), "suspension": int(pp.k),
            "min_singular_value": float(pp.min_singular_value), "replay_min_singular_value": float(replay),
            "max_rank_K": max(ranks), "F": pp.F.tolist(),
            "diagnostics": _jsonable(pp.diagnostics)}, "ok"


def cmd_bifurcate(cfg):
    from .bifurcate import VariationalFamily, analyze

    tol = cfg["_tol"]
    path = build_operator_path(cfg)
    nl = cfg["nonlinearity"]
    fam = VariationalFamily.named(path, nl["name"], float(nl.get("coef", 1.0)))
    kw = {k: cfg[k] for k in ("eps0", "rungs") if k in cfg}
    try:
        rep = analyze(fam, tol, verify=cfg.get("verify", True), **kw)
    except SFMaslovError as exc:
        return {"errors": _error_dict(exc)}, "numerical-failure"
    return rep.as_dict(), "ok"


def cmd_flow_trace(cfg):
    path = build_operator_path(cfg)
    lams = np.linspace(path.a, path.b, int(cfg.get("samples", 400)))
    rows = []
    for lam in lams:
        for j, e in enumerate(np.linalg.eigvalsh(path.matrix(lam))):
            rows.append((repr(float(lam)), j, repr(float(e))))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "branch_index", "eigenvalue"])
    w.writerows(rows)
    return {"samples": len(lams), "branches": int(path.n), "csv": "flow-trace.csv",
            "_csv": buf.getvalue()}, "ok"


COMMANDS = {"sf": cmd_sf, "maslov": cmd_maslov, "parametrix": cmd_parametrix,
            "bifurcate": cmd_bifurcate, "flow-trace": cmd_flow_trace}


# ---------------------------------------------------------------------------
# output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _summary(report):
    lines = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}.{k}" if prefix else k, obj[k])
        elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
            lines.append((prefix, f"[{len(obj)} entries]"))
        else:
            lines.append((prefix, json.dumps(obj)))

    walk("", {k: v for k, v in report.items() if k not in ("config",)})
    width = max(len(k) for k, _ in lines)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in lines)


EXIT = {"ok": 0, "disagreement": 1, "certificate-failure": 1, "numerical-failure": 1}


def run(subcommand, cfg, out_dir):
    """Run one subcommand on a parsed config; returns the exit code."""
    try:
        result, status = COMMANDS[subcommand](cfg)
    except ConfigError:
        raise
    except SFMaslovError as exc:
        result, status = {"errors": _error_dict(exc)}, "numerical-failure"
    csv_text = result.pop("_csv", None)
    public_cfg = {k: v for k, v in cfg.items() if not k.startswith("_")}
    report = _jsonable({
        "tool": "sfmaslov",
        "version": __version__,
        "subcommand": subcommand,
        "status": status,
        "exit_code": EXIT[status],
        "config": public_cfg,
        "tolerances": cfg["_tol"].as_dict(),
        "result": result,
    })
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, f"{subcommand}.json"),
                  json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    _atomic_write(os.path.join(out_dir, f"{subcommand}.txt"), _summary(report))
    if csv_text is not None:
        _atomic_write(os.path.join(out_dir, "flow-trace.csv"), csv_text)
    return EXIT[status]


def build_parser():
    p = argparse.ArgumentParser(prog="sfmaslov", description="Spectral flow and Maslov index toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON problem configuration")
    p.add_argument("--out", default=None, help="output directory (default: config 'out' or .)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--methods", default=None, help="comma-separated subset of " + ",".join(METHODS))
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config, args.seed, args.tol_override, args.methods)
        if args.seed is not None and args.seed >= 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")
        out_dir = args.out or cfg.get("out", ".")
        # build the problem up front so config errors leave no output behind
        if args.subcommand == "maslov":
            build_lagrangian_path(cfg)
        else:
            build_operator_path(cfg)
        return run(args.subcommand, cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
