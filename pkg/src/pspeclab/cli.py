"""Command-line front door.

Subcommands: scan, contours, symbol, quasimode, lab weyl, lab ssv,
fit boundary.  Options may come from flags or a JSON config file
(``--config``); flags win.  Exit codes: 0 success, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import engine, gallery, linalg, quasimodes, randlab, reporting, symbols

USAGE_ERROR = 2
NUMERICAL_ERROR = 3


class UsageError(Exception):
    pass


def _parse_complex(s: str) -> complex:
    try:
        return complex(str(s).replace("i", "j").replace(" ", ""))
    except ValueError:
        raise UsageError(f"field 'z': cannot parse complex number {s!r}") from None


def _parse_floats(s: str, field: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in str(s).split(",")]
    except ValueError:
        raise UsageError(f"field {field!r}: expected comma-separated numbers, got {s!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"field {field!r}: expected {n} values, got {len(vals)}")
    return vals


def _parse_grid(s: str) -> engine.ComplexGrid:
    v = _parse_floats(s, "grid", 6)
    try:
        return engine.ComplexGrid(v[0], v[1], v[2], v[3], int(v[4]), int(v[5]))
    except ValueError as exc:
        raise UsageError(f"field 'grid': {exc}") from None


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PSPECLAB_WORKERS", "1")))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pspeclab")
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--print-config", action="store_true",
                   help="echo the fully resolved configuration and exit")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        return sp

    sp = add("scan", help="sigma_min field over a complex grid")
    sp.add_argument("--model", default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--h", type=float, default=None)
    sp.add_argument("--grid", default=None, help="re_min,re_max,im_min,im_max,nx,ny")
    sp.add_argument("--out", default=None, help="output field CSV")

    sp = add("contours", help="marching-squares isolines of a field")
    sp.add_argument("--field", default=None, help="input field CSV (from scan)")
    sp.add_argument("--model", default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--h", type=float, default=None)
    sp.add_argument("--grid", default=None)
    sp.add_argument("--levels", default=None, help="comma-separated ascending levels")
    sp.add_argument("--svg", default=None, help="output SVG figure")
    sp.add_argument("--out", default=None, help="optional polyline CSV")

    sp = add("symbol", help="classical-spectrum computations on a symbol")
    sp.add_argument("action", choices=["sigma", "lambda", "order", "volume", "kappa"])
    sp.add_argument("--model", default=None)
    sp.add_argument("--z", default=None)
    sp.add_argument("--t", default=None, help="single t (volume) or comma list (kappa)")
    sp.add_argument("--grid", default=None, help="sigma/lambda output grid")
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--out", default=None, help="output CSV (default: stdout)")

    sp = add("quasimode", help="Gaussian-beam residual decay over an h list")
    sp.add_argument("--model", default=None)
    sp.add_argument("--z", default=None)
    sp.add_argument("--hlist", default=None)
    sp.add_argument("--sign", choices=["plus", "minus"], default=None)
    sp.add_argument("--out", default=None, help="output JSON report")

    lab = sub.add_parser("lab", help="Monte Carlo experiments")
    labsub = lab.add_subparsers(dest="lab_command", required=True)
    sp = labsub.add_parser("weyl")
    for flag, typ in (("--model", str), ("--N", int), ("--delta", str), ("--gamma", str),
                      ("--draws", int), ("--seed", int), ("--out", str), ("--h", str),
                      ("--figure", str), ("--eigs-csv", str), ("--workers", int)):
        sp.add_argument(flag, type=typ, default=None)
    sp = labsub.add_parser("ssv")
    for flag, typ in (("--model", str), ("--N", int), ("--h", float), ("--delta", float),
                      ("--tgrid", str), ("--draws", int), ("--seed", int), ("--out", str),
                      ("--law", str), ("--workers", int)):
        sp.add_argument(flag, type=typ, default=None)

    fit = sub.add_parser("fit", help="resolvent exponent fits")
    fitsub = fit.add_subparsers(dest="fit_command", required=True)
    sp = fitsub.add_parser("boundary")
    for flag, typ in (("--model", str), ("--z0", str), ("--hlist", str),
                      ("--out", str), ("--workers", int), ("--seed", int)):
        sp.add_argument(flag, type=typ, default=None)
    return p


_DEFAULTS = {
    "scan": {"model": None, "N": None, "h": 1.0, "grid": None, "out": None, "workers": None, "seed": 0},
    "contours": {"field": None, "model": None, "N": None, "h": 1.0, "grid": None,
                 "levels": None, "svg": None, "out": None, "workers": None, "seed": 0},
    "symbol": {"model": None, "z": None, "t": None, "grid": None, "resolution": 501,
               "out": None, "workers": None, "seed": 0},
    "quasimode": {"model": "davies", "z": None, "hlist": None, "sign": "plus", "out": None,
                  "workers": None, "seed": 0},
    "lab weyl": {"model": "hager", "N": 601, "h": "auto", "delta": "auto", "gamma": "-0.5,0.5,-0.5,0.5",
                 "draws": 20, "seed": 7, "out": None, "figure": None, "eigs_csv": None,
                 "workers": None},
    "lab ssv": {"model": "hager", "N": 50, "h": 0.08, "delta": 1e-3, "tgrid": "1e-3,1,13",
                "draws": 20000, "seed": 11, "out": None, "law": "gaussian", "workers": None},
    "fit boundary": {"model": "davies", "z0": "1", "hlist": "0.02,0.01,0.005,0.0025",
                     "out": None, "workers": None, "seed": 0},
}


def _command_key(args) -> str:
    if args.command == "lab":
        return f"lab {args.lab_command}"
    if args.command == "fit":
        return f"fit {args.fit_command}"
    return args.command


def _resolve_config(args) -> dict:
    key = _command_key(args)
    resolved = dict(_DEFAULTS[key])
    if args.config:
        try:
            file_cfg = json.loads(open(args.config).read())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"field 'config': cannot read {args.config!r}: {exc}") from None
        unknown = set(file_cfg) - set(resolved)
        if unknown:
            raise UsageError(f"config file has unknown keys: {sorted(unknown)}")
        resolved.update(file_cfg)
    for k in resolved:
        flag_val = getattr(args, k, None)
        if flag_val is not None:
            resolved[k] = flag_val
    if resolved.get("workers") is None:
        resolved["workers"] = _default_workers()
    resolved["command"] = key
    return resolved


def _require(cfg: dict, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise UsageError(f"field {k!r} is required for '{cfg['command']}'")


def _make_operator(cfg) -> gallery.DiscretizedOperator:
    try:
        return gallery.make_operator(cfg["model"], N=int(cfg["N"]), h=float(cfg["h"]))
    except ValueError as exc:
        raise UsageError(f"field 'model'/'N'/'h': {exc}") from None


def _cmd_scan(cfg) -> int:
    _require(cfg, "model", "N", "grid", "out")
    op = _make_operator(cfg)
    grid = _parse_grid(cfg["grid"])
    fld = engine.scan(op, grid, workers=cfg["workers"])
    reporting.write_field_csv(fld, cfg["out"])
    if fld.missing_count:
        print(f"warning: {fld.missing_count} grid points failed and were marked missing",
              file=sys.stderr)
    print(f"wrote {cfg['out']} ({grid.nx}x{grid.ny} points)")
    return 0


def _cmd_contours(cfg) -> int:
    _require(cfg, "levels")
    if cfg["field"]:
        fld = reporting.read_field_csv(cfg["field"])
    else:
        _require(cfg, "model", "N", "grid")
        fld = engine.scan(_make_operator(cfg), _parse_grid(cfg["grid"]), workers=cfg["workers"])
    levels = _parse_floats(cfg["levels"], "levels")
    cs = engine.contours(fld, levels)
    if cfg["svg"]:
        reporting.contour_figure(cs, cfg["svg"],
                                 title=str(fld.fingerprint.get("model", "")))
        print(f"wrote {cfg['svg']}")
    if cfg["out"]:
        reporting.write_contours_csv(cs, cfg["out"])
        print(f"wrote {cfg['out']}")
    return 0


def _symbol_rows(cfg):
    model = gallery.get_symbol(cfg["model"])
    action = cfg["action"]
    res = int(cfg["resolution"])
    if action in ("sigma", "lambda"):
        _require(cfg, "grid")
        grid = _parse_grid(cfg["grid"])
        box = symbols.default_phase_box(model, complex(0.5 * (grid.re_min + grid.re_max),
                                                       0.5 * (grid.im_min + grid.im_max)))
        re = grid.re_points()
        im = grid.im_points()
        if action == "sigma":
            mask = symbols.classical_spectrum_mask(model, grid, box, res)
            for ix in range(grid.nx):
                for iy in range(grid.ny):
                    yield (re[ix], im[iy], int(mask[ix, iy]))
        else:
            masks = symbols.lambda_pm_mask(model, grid, box, res)
            names = {(False, False): "none", (True, False): "lambda_plus",
                     (False, True): "lambda_minus", (True, True): "both"}
            for ix in range(grid.nx):
                for iy in range(grid.ny):
                    yield (re[ix], im[iy], names[(bool(masks.plus[ix, iy]),
                                                  bool(masks.minus[ix, iy]))])
        return
    _require(cfg, "z")
    z = _parse_complex(cfg["z"])
    if action == "order":
        sample = symbols.level_set_sample(model, z)
        if not sample:
            raise UsageError(f"field 'z': no level-set points found for z={z}")
        yield (z.real, z.imag, symbols.order_at(model, z, sample))
    elif action == "volume":
        _require(cfg, "t")
        t = _parse_floats(cfg["t"], "t")
        for ti in t:
            yield (z.real, z.imag, symbols.volume_V_z(model, z, ti, resolution=max(res, 1001)))
    else:  # kappa
        _require(cfg, "t")
        ts = _parse_floats(cfg["t"], "t")
        yield (z.real, z.imag, symbols.kappa_fit(model, z, ts))


def _cmd_symbol(cfg) -> int:
    _require(cfg, "model")
    rows = list(_symbol_rows(cfg))
    out = open(cfg["out"], "w") if cfg["out"] else sys.stdout
    try:
        out.write("z_re,z_im,value\n")
        for r in rows:
            out.write(f"{r[0]!r},{r[1]!r},{r[2]}\n")
    finally:
        if cfg["out"]:
            out.close()
            print(f"wrote {cfg['out']}")
    return 0


def _cmd_quasimode(cfg) -> int:
    _require(cfg, "model", "z", "hlist")
    z = _parse_complex(cfg["z"])
    h_list = _parse_floats(cfg["hlist"], "hlist")
    model = gallery.get_symbol(cfg["model"])

    def family(h):
        if model.domain_kind == "circle":
            n = gallery.coverage_dimension(model, "fourier", h,
                                           (z.real - 0.5, z.real + 0.5, z.imag - 0.5, z.imag + 0.5))
            return gallery.hager_model(h, n)
        n = gallery.coverage_dimension(model, "hermite", h,
                                       (z.real - 0.5, z.real + 0.5, z.imag - 0.5, z.imag + 0.5))
        ctor = gallery.davies_ho if cfg["model"] == "davies" else gallery.selfadjoint_ho
        return ctor(h, n)

    report = quasimodes.residual_decay(family, z, h_list, sign=cfg["sign"])
    payload = {
        "z": report.z, "h_list": report.h_list, "residuals": report.residuals,
        "slope": report.slope,
        "centers": [{"x": c.x, "xi": c.xi} for c in report.centers],
    }
    if cfg["out"]:
        reporting.write_json_report(payload, cfg["out"], config=cfg)
        print(f"wrote {cfg['out']}")
    else:
        print(json.dumps(payload, indent=2, default=reporting._json_default))
    return 0


def _cmd_lab_weyl(cfg) -> int:
    n = int(cfg["N"])
    h = 4.0 / n if cfg["h"] in (None, "auto") else float(cfg["h"])
    delta = float(n) ** -4 if cfg["delta"] in (None, "auto") else float(cfg["delta"])
    cfg["h"] = h
    op = _make_operator(cfg)
    gamma = tuple(_parse_floats(cfg["gamma"], "gamma", 4))
    spec = randlab.PerturbationSpec(kind="gaussian_matrix", delta=delta)
    report = randlab.probabilistic_weyl_experiment(op, gamma, spec,
                                                   draws=int(cfg["draws"]), seed=int(cfg["seed"]))
    if cfg["out"]:
        reporting.write_json_report(report.to_dict(), cfg["out"], config=cfg, seed=report.seed)
        print(f"wrote {cfg['out']}")
    if cfg.get("figure"):
        reporting.weyl_figure(report, cfg["figure"])
        print(f"wrote {cfg['figure']}")
    if cfg.get("eigs_csv"):
        reporting.write_eigenvalues_csv(report.eigenvalues, cfg["eigs_csv"])
        print(f"wrote {cfg['eigs_csv']}")
    print(f"mean count {report.mean_count:.2f} vs prediction {report.prediction:.2f} "
          f"(discrepancy {100 * report.relative_discrepancy:.1f}%)")
    return 0


def _cmd_lab_ssv(cfg) -> int:
    cfg["h"] = float(cfg["h"])
    op = _make_operator(cfg)
    lo, hi, num = _parse_floats(cfg["tgrid"], "tgrid", 3)
    t_grid = np.geomspace(lo, hi, int(num))
    report = randlab.ssv_tail_experiment(op.matrix, float(cfg["delta"]), t_grid,
                                         draws=int(cfg["draws"]), seed=int(cfg["seed"]),
                                         law=cfg["law"])
    if cfg["out"]:
        reporting.write_json_report(report.to_dict(), cfg["out"], config=cfg, seed=report.seed)
        print(f"wrote {cfg['out']}")
    print(f"tail slope {report.slope} (bound ratio max {report.bound_max_ratio:.3g})")
    return 0


def _cmd_fit_boundary(cfg) -> int:
    _require(cfg, "model", "z0", "hlist")
    z0 = _parse_complex(cfg["z0"])
    h_list = _parse_floats(cfg["hlist"], "hlist")
    name = cfg["model"]
    sym = gallery.get_symbol(name)

    def family(h):
        n = gallery.coverage_dimension(sym, "hermite" if sym.domain_kind == "line" else "fourier",
                                       h, (z0.real - 0.5, z0.real + 0.5, z0.imag - 0.5, z0.imag + 0.5))
        return gallery.make_operator(name, N=n, h=h)

    slope = engine.boundary_exponent_fit(family, z0, h_list)
    payload = {"model": name, "z0": z0, "h_list": h_list, "slope": slope}
    if cfg["out"]:
        reporting.write_json_report(payload, cfg["out"], config=cfg)
        print(f"wrote {cfg['out']}")
    else:
        print(json.dumps(payload, indent=2, default=reporting._json_default))
    return 0


_HANDLERS = {
    "scan": _cmd_scan,
    "contours": _cmd_contours,
    "symbol": _cmd_symbol,
    "quasimode": _cmd_quasimode,
    "lab weyl": _cmd_lab_weyl,
    "lab ssv": _cmd_lab_ssv,
    "fit boundary": _cmd_fit_boundary,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        cfg = _resolve_config(args)
        if args.command == "symbol":
            cfg["action"] = args.action
        if args.print_config:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return 0
        return _HANDLERS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (linalg.EigenConvergenceError, linalg.SingularResolventError,
            symbols.BoxTooSmallError, quasimodes.NoAdmissibleCenterError,
            quasimodes.TurningPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
