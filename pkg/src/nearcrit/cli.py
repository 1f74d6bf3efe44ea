"""Experiment runner: config parsing, dispatch, CSV and SVG output.

Configuration is flat `key = value` text (one pair per line, `#` comments);
command-line flags override file values.  Every table is written as CSV
with `#`-prefixed metadata lines carrying the experiment parameters and
master seed, a header row, and reals at 17 significant digits so the file
round-trips bit-faithfully.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time

import numpy as np

from . import estimators as est
from .estimators import ExperimentResult
from .arms import FOUR_ARM, ONE_ARM, TWO_ARM, ArmQuery, sample_arm_prob, quasi_mult_ratio
from .explorer import dump_path, pivotal_sweep, explore
from .lattice import Disc, build_domain
from .render import render_svg
from .sampling import coloring_at, sample_field

EXPERIMENTS = ("crossing", "pstar", "corrlen", "arms", "quasimult", "length",
               "dimension", "asymmetry", "regime-sweep", "pivotal-sweep",
               "goodtri", "enumerate")

_PATTERNS = {"b": ONE_ARM, "bw": TWO_ARM, "bwbw": FOUR_ARM}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path: str, experiment: str, params: dict, header, rows) -> None:
    """Atomically write a result table with metadata comment lines."""
    lines = [f"# experiment = {experiment}"]
    for k, v in params.items():
        lines.append(f"# {k} = {_fmt(v)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_result(path: str, result: ExperimentResult) -> None:
    """Serialize an ExperimentResult (wall time stays in memory only)."""
    write_table(path, result.experiment, result.params, result.header,
                result.rows)


def read_table(path: str):
    """Parse a result CSV back into (params, header, rows)."""
    params = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    params[k.strip()] = v.strip()
                continue
            cells = line.split(",")
            if header is None:
                header = cells
            else:
                parsed = []
                for c in cells:
                    try:
                        parsed.append(int(c))
                    except ValueError:
                        try:
                            parsed.append(float(c))
                        except ValueError:
                            parsed.append(c)
                rows.append(parsed)
    return params, header, rows


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nearcrit",
        description="Triangular-lattice percolation interface experiments")
    subs = parser.add_subparsers(dest="experiment", required=True)
    registry = {}

    def sub(name, **kw):
        sp = subs.add_parser(name, **kw)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--seed", type=int,
                        default=int(os.environ.get("NEARCRIT_SEED", "0")),
                        help="master seed (env NEARCRIT_SEED overrides the default)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=f"{name}.csv", help="output CSV path")
        registry[name] = sp
        return sp

    p = sub("crossing", help="crossing probability R(p, N)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--svg", default=None, help="render one sample to SVG")
    p.add_argument("--dump-path", default=None,
                   help="write the first sample's interface as a step dump")

    p = sub("pstar", help="near-critical threshold p*(N, eps)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--samples-per-probe", type=int, default=2000)
    p.add_argument("--tolerance", type=float, default=0.005)

    p = sub("corrlen", help="correlation length L(p, eps), optional scaling product")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p-list", type=_float_list, default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--samples-per-probe", type=int, default=2000)
    p.add_argument("--n-max", type=int, default=4096)
    p.add_argument("--scaling", action="store_true",
                   help="add the (p-1/2) L^2 P(A4(L)) product columns")
    p.add_argument("--arm-samples", type=int, default=20000)

    p = sub("arms", help="arm-event probability estimates")
    p.add_argument("--pattern", choices=sorted(_PATTERNS), default="bw")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--n-inner", type=int, default=0)
    p.add_argument("--n-list", type=_int_list, required=True,
                   help="comma-separated outer radii")
    p.add_argument("--samples", type=int, default=4000)

    p = sub("quasimult", help="quasi-multiplicativity ratio")
    p.add_argument("--pattern", choices=sorted(_PATTERNS), default="bw")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--samples", type=int, default=4000)

    p = sub("length", help="interface length exponent")
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--p-mode", choices=("critical", "pstar", "fixed"),
                   default="critical")
    p.add_argument("--p", type=float, default=0.5, help="used with --p-mode fixed")
    p.add_argument("--eps", type=float, default=0.1, help="used with --p-mode pstar")
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--samples-per-probe", type=int, default=2000)

    p = sub("dimension", help="box-counting dimension")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--lambda-list", type=_int_list, default=[4, 8, 16, 32])
    p.add_argument("--samples", type=int, default=200)

    p = sub("asymmetry", help="revealed-color imbalance statistics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p-mode", choices=("critical", "pstar", "fixed"),
                   default="fixed")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--samples-per-probe", type=int, default=2000)

    p = sub("regime-sweep", help="R along n for p = 1/2 + c n^-b")
    p.add_argument("--b-list", type=_float_list, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--samples", type=int, default=2000)

    p = sub("pivotal-sweep", help="interface jumps across a disc as p rises")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-hi", type=float, required=True)
    p.add_argument("--disc", type=_float_list, default=[0.0, 0.35, 0.1],
                   help="cx,cy,radius in rescaled coordinates")
    p.add_argument("--fields", type=int, default=1,
                   help="number of independent fields to sweep")

    p = sub("goodtri", help="good/very-good triangle Z statistic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p-mode", choices=("critical", "pstar", "fixed"),
                   default="critical")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.125)
    p.add_argument("--k-first", type=int, default=16)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--f-hat-samples", type=int, default=64)
    p.add_argument("--a-param", type=float, default=0.2)
    p.add_argument("--samples-per-probe", type=int, default=2000)

    p = sub("enumerate", help="exact R and E[length] by enumeration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--mc-check", type=int, default=0,
                   help="also run this many Monte Carlo samples")

    return parser, registry


def _apply_config(parser, registry, argv):
    """Load --config defaults into the chosen subparser; flags still win."""
    name = next((a for a in argv if not a.startswith("-")), None)
    cfg_path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            cfg_path = argv[i + 1]
        elif a.startswith("--config="):
            cfg_path = a.split("=", 1)[1]
    if cfg_path is None or name not in registry:
        return
    sp = registry[name]
    actions = {act.dest: act for act in sp._actions}
    defaults = {}
    with open(cfg_path) as fh:
        for ln, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise SystemExit(f"config line {ln}: expected key = value")
            key, val = (s.strip() for s in body.split("=", 1))
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise SystemExit(f"config line {ln}: unknown key '{key}'")
            act = actions[dest]
            if isinstance(act, argparse._StoreTrueAction):
                defaults[dest] = val.lower() in ("1", "true", "yes")
            elif act.type is not None:
                defaults[dest] = act.type(val)
            else:
                defaults[dest] = val
            if act.choices and defaults[dest] not in act.choices:
                raise SystemExit(f"config line {ln}: bad value for '{key}'")
            act.required = False
    sp.set_defaults(**defaults)


def _resolve_p(args):
    if args.p_mode == "critical":
        return 0.5, None
    if args.p_mode == "fixed":
        if args.p is None:
            raise SystemExit("--p is required with --p-mode fixed")
        return args.p, None
    res = est.estimate_pstar(args.n, args.eps, args.samples_per_probe, 0.005,
                             args.seed + 0x5A5A, workers=args.workers)
    return res.value, res


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, registry = _build_parser()
    try:
        _apply_config(parser, registry, argv)
        args = parser.parse_args(argv)
        return _dispatch(args)
    except SystemExit as e:
        code = e.code if e.code is not None else 0
        return code if isinstance(code, int) else 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    name = args.experiment
    meta = {"master_seed": args.seed, "workers": args.workers}
    t0 = time.time()

    def emit(header, rows):
        res = ExperimentResult(name, dict(meta), list(header), list(rows),
                               args.seed, time.time() - t0)
        write_result(args.out, res)
        return res

    if name == "crossing":
        r = est.estimate_R(args.p, args.n, args.samples, args.seed,
                           workers=args.workers)
        meta.update(n=args.n, p=args.p, samples=args.samples)
        emit(["p", "n", "samples", "rhat", "stderr"],
                    [(args.p, args.n, args.samples, r.mean, r.stderr)])
        if args.svg or args.dump_path:
            dom = build_domain(args.n)
            fld = sample_field(dom, args.seed, 0)
            col = coloring_at(fld, args.p)
            path = explore(dom, col)
            if args.dump_path:
                with open(args.dump_path, "w", newline="\n") as fh:
                    fh.write(dump_path(path))
            if args.svg:
                render_svg(dom, col, path, out=args.svg)
        print(f"crossing: R({args.p}, {args.n}) = {r.mean:.5f} +- {r.stderr:.5f}")

    elif name == "pstar":
        res = est.estimate_pstar(args.n, args.eps, args.samples_per_probe,
                                 args.tolerance, args.seed, workers=args.workers)
        meta.update(n=args.n, eps=args.eps,
                    samples_per_probe=args.samples_per_probe,
                    tolerance=args.tolerance)
        emit(["n", "eps", "pstar", "lo", "hi", "resolved"],
                    [(args.n, args.eps, res.value, res.lo, res.hi,
                      int(res.resolved))])
        flag = "" if res.resolved else " [UNRESOLVED]"
        print(f"pstar: p*({args.n}, {args.eps}) = {res.value:.5f}{flag}")

    elif name == "corrlen":
        ps = args.p_list if args.p_list else ([args.p] if args.p is not None else None)
        if not ps:
            raise SystemExit("corrlen needs --p or --p-list")
        if args.scaling:
            rows, ratio = est.scaling_check(ps, args.eps, args.samples_per_probe,
                                            args.arm_samples, args.seed,
                                            n_max=args.n_max, workers=args.workers)
            meta.update(eps=args.eps, samples_per_probe=args.samples_per_probe,
                        arm_samples=args.arm_samples, n_max=args.n_max,
                        product_max_over_min=ratio)
            emit(["p", "corr_len", "resolved", "a4_mean", "a4_stderr",
                         "product"],
                        [(r.p, r.corr_len, int(r.resolved), r.a4.mean,
                          r.a4.stderr, r.product) for r in rows])
            print(f"corrlen: {len(rows)} rows, product max/min = {ratio:.3f}")
        else:
            out_rows = []
            for j, p in enumerate(ps):
                res = est.estimate_L(p, args.eps, args.samples_per_probe,
                                     args.n_max, args.seed + 7919 * j,
                                     workers=args.workers)
                out_rows.append((p, args.eps, res.value, res.lo, res.hi,
                                 int(res.resolved)))
            meta.update(eps=args.eps, samples_per_probe=args.samples_per_probe,
                        n_max=args.n_max)
            emit(["p", "eps", "corr_len", "lo", "hi", "resolved"], out_rows)
            lhat = out_rows[0][2]
            print(f"corrlen: L({ps[0]}, {args.eps}) = {lhat:g}" +
                  ("" if out_rows[0][5] else " [UNRESOLVED]"))

    elif name == "arms":
        pattern = _PATTERNS[args.pattern]
        rows = []
        for j, n_out in enumerate(args.n_list):
            q = ArmQuery(pattern, args.n_inner, n_out)
            e = sample_arm_prob(args.p, q, args.samples, args.seed + 7919 * j,
                                workers=args.workers)
            rows.append((args.pattern, args.n_inner, n_out, args.p, e.mean,
                         e.stderr, args.samples))
        meta.update(pattern=args.pattern, p=args.p, samples=args.samples)
        emit(["pattern", "n_inner", "n_outer", "p", "estimate", "stderr",
                     "samples"], rows)
        print(f"arms: {len(rows)} radii, last estimate = {rows[-1][4]:.5g}")

    elif name == "quasimult":
        pattern = _PATTERNS[args.pattern]
        ratio, se = quasi_mult_ratio(args.p, args.n1, args.n2, args.samples,
                                     args.seed, pattern=pattern,
                                     workers=args.workers)
        meta.update(pattern=args.pattern, p=args.p, n1=args.n1, n2=args.n2,
                    samples=args.samples)
        emit(["pattern", "p", "n1", "n2", "ratio", "stderr", "samples"],
                    [(args.pattern, args.p, args.n1, args.n2, ratio, se,
                      args.samples)])
        print(f"quasimult: ratio = {ratio:.4f} +- {se:.4f}")

    elif name == "length":
        p_list, rows_meta = [], []
        for n in args.n_list:
            if args.p_mode == "critical":
                p_list.append(0.5)
            elif args.p_mode == "fixed":
                p_list.append(args.p)
            else:
                res = est.estimate_pstar(n, args.eps, args.samples_per_probe,
                                         0.005, args.seed + n,
                                         workers=args.workers)
                p_list.append(res.value)
        rows, fit = est.length_experiment(args.n_list, p_list, args.samples,
                                          args.seed, workers=args.workers)
        meta.update(p_mode=args.p_mode, samples=args.samples,
                    fit_slope=fit.slope, fit_slope_stderr=fit.slope_stderr,
                    fit_r_squared=fit.r_squared)
        emit(["n", "p", "ell_mean", "ell_stderr", "samples"],
                    [(r.n, r.p, r.ell.mean, r.ell.stderr, args.samples)
                     for r in rows])
        print(f"length: slope = {fit.slope:.4f} +- {fit.slope_stderr:.4f}")

    elif name == "dimension":
        rows, fit = est.dimension_experiment(args.n, args.p, args.lambda_list,
                                             args.samples, args.seed,
                                             workers=args.workers)
        meta.update(n=args.n, p=args.p, samples=args.samples,
                    fit_slope=fit.slope, fit_slope_stderr=fit.slope_stderr)
        emit(["lambda", "boxes_mean", "boxes_stderr", "samples"],
                    [(lam, e.mean, e.stderr, args.samples) for lam, e in rows])
        print(f"dimension: slope = {fit.slope:.4f} +- {fit.slope_stderr:.4f}")

    elif name == "asymmetry":
        p, _ = _resolve_p(args)
        summary = est.asymmetry_experiment(args.n, p, args.samples, args.seed,
                                           workers=args.workers)
        meta.update(n=args.n, p=p, p_mode=args.p_mode, samples=args.samples)
        header = ["statistic"] + [f"q{int(100 * q)}" for q in est._QUANTS] + ["mean"]
        rows = []
        for label, d in (("diff", summary.diff),
                         ("diff_over_ell", summary.diff_over_ell),
                         ("diff_over_sqrt_ell", summary.diff_over_sqrt_ell)):
            rows.append([label] + [d[h] for h in header[1:]])
        emit(header, rows)
        print(f"asymmetry: median diff = {summary.diff['q50']:.2f} at p = {p:.5f}")

    elif name == "regime-sweep":
        rows = est.regime_sweep(args.b_list, args.c, args.n_list, args.samples,
                                args.seed, workers=args.workers)
        meta.update(c=args.c, samples=args.samples)
        emit(["b", "n", "p", "rhat", "stderr", "samples"],
                    [(r.b, r.n, r.p, r.r.mean, r.r.stderr, args.samples)
                     for r in rows])
        print(f"regime-sweep: {len(rows)} rows")

    elif name == "pivotal-sweep":
        cx, cy, rad = args.disc
        disc = Disc(cx, cy, rad)
        dom = build_domain(args.n)
        rows = []
        for i in range(args.fields):
            fld = sample_field(dom, args.seed, i)
            for pval, site, frm, to in pivotal_sweep(fld, args.p_hi, disc):
                rows.append((i, pval, int(dom.site_q[site]), int(dom.site_r[site]),
                             frm.value, to.value))
        meta.update(n=args.n, p_hi=args.p_hi, disc_cx=cx, disc_cy=cy,
                    disc_radius=rad, fields=args.fields)
        emit(["field", "p", "site_q", "site_r", "from_side", "to_side"],
                    rows)
        print(f"pivotal-sweep: {len(rows)} jumps over {args.fields} fields")

    elif name == "goodtri":
        p, _ = _resolve_p(args)
        res = est.z_statistic(args.n, p, args.eta, args.k_first, args.samples,
                              args.f_hat_samples, args.seed,
                              a_param=args.a_param, workers=args.workers)
        meta.update(n=args.n, p=p, p_mode=args.p_mode, eta=args.eta,
                    k_first=args.k_first, samples=args.samples,
                    f_hat_samples=args.f_hat_samples, a_param=args.a_param)
        emit(["n", "p", "eta", "z_mean", "z_stderr", "samples",
                     "good_per_sample", "short_samples", "degenerate"],
                    [(args.n, p, args.eta, res.estimate.mean,
                      res.estimate.stderr, args.samples, res.n_good_mean,
                      res.n_short, res.n_degenerate)])
        print(f"goodtri: Z = {res.estimate.mean:.4f} +- {res.estimate.stderr:.4f}")

    elif name == "enumerate":
        r_exact, ell_exact = est.enumerate_exact(args.n, args.p)
        rows = [(args.n, args.p, r_exact, ell_exact)]
        header = ["n", "p", "r_exact", "ell_exact"]
        if args.mc_check > 0:
            r = est.estimate_R(args.p, args.n, args.mc_check, args.seed,
                               workers=args.workers)
            header += ["rhat", "rhat_stderr", "mc_samples"]
            rows = [(args.n, args.p, r_exact, ell_exact, r.mean, r.stderr,
                     args.mc_check)]
        meta.update(n=args.n, p=args.p)
        emit(header, rows)
        print(f"enumerate: R = {r_exact:.6f}, E[length] = {ell_exact:.6f}")

    else:  # pragma: no cover
        raise SystemExit(f"unknown experiment {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
