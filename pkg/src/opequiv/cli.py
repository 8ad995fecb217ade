"""Command-line interface: ``opequiv <command> ...``.

Exit codes: 0 success / equivalent, 1 input or I/O error, 2 regularity
failure, 3 inequivalent, 4 inconclusive.
"""
import argparse
import csv
import io as _io
import sys

import numpy as np

from . import __version__
from .connections import decompose
from .errors import (DimensionMismatch, DocumentError, IncompatibleWords, OpEquivError,
                     RegularityError)
from .invariants import fingerprint, regularity_report, symbol_pipeline, word_name
from .io import (dumps, load_model, load_operator, load_symbol, model_to_doc, operator_to_doc,
                 save_model, symbol_to_doc, write_json)
from .jets import monomials
from .models import ChartOperator, Grid, build_model, compare_models
from .orbits import EQUIVALENT, INCONCLUSIVE, symbols_equivalent
from .samples import random_gauge, random_operator, random_symbol, scalar_operator
from .tensors import DEFAULT_TOL

EXIT_OK, EXIT_INPUT, EXIT_REGULARITY, EXIT_INEQUIVALENT, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
VERDICT_EXIT = {EQUIVALENT: EXIT_OK, INCONCLUSIVE: EXIT_INCONCLUSIVE}


def _repro(args, **extra):
    block = {"version": __version__, "seed": args.seed, "tol": args.tol}
    block.update(extra)
    return block


def _report(command, args, body, **repro):
    doc = {"schema": "opequiv.report/1", "command": command,
           "reproducibility": _repro(args, **repro)}
    doc.update(body)
    return doc


def _emit(args, doc, rows=None):
    if getattr(args, "csv", False) and rows is not None:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
        text = buf.getvalue()
    else:
        text = dumps(doc)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_invariants(args):
    sigma = load_symbol(args.input)
    rep = regularity_report(sigma, args.tol, seed=args.seed)
    ok = rep.overall if args.require == "regular" else rep.admissible
    body = {"regularity": rep.as_dict(), "require": args.require}
    rows = [("word", "value")]
    if rep.admissible:
        _, _, rs = symbol_pipeline(sigma, args.tol)
        fp = fingerprint(rs, max_len=args.words)
        body["fingerprint"] = [{"word": word_name(w, fp.alphabet), "value": v}
                               for w, v in zip(fp.words, fp.values)]
        rows += [(word_name(w, fp.alphabet), float(v)) for w, v in zip(fp.words, fp.values)]
    _emit(args, _report("invariants", args, body, words=args.words), rows)
    return EXIT_OK if ok else EXIT_REGULARITY


def cmd_equiv_symbols(args):
    s1, s2 = load_symbol(args.a), load_symbol(args.b)
    res = symbols_equivalent(s1, s2, args.tol, rtol=args.rtol, seed=args.seed, require=args.require)
    body = {"verdict": res.verdict, "reason": res.reason,
            "fingerprint_deviation": res.fingerprint_deviation,
            "transform_residual": res.transform_residual, "require": args.require}
    if res.certificate is not None:
        body["conjugacy"] = {"verdict": res.certificate.verdict,
                             "residual": res.certificate.residual,
                             "null_dim": res.certificate.null_dim}
    if res.A is not None:
        body["A"] = res.A
        body["B"] = res.B
    _emit(args, _report("equiv-symbols", args, body, rtol=args.rtol))
    return VERDICT_EXIT.get(res.verdict, EXIT_INEQUIVALENT)


def _jet_dump(jet):
    return [{"multi_index": list(a), "value": c} for a, c in zip(monomials(jet.n, jet.order), jet.coeffs)]


def cmd_decompose(args):
    chart_op, _ = load_operator(args.input)
    point = np.zeros(chart_op.n) if args.at is None else np.array(args.at, dtype=float)
    if len(point) != chart_op.n:
        raise DimensionMismatch(f"--at needs {chart_op.n} coordinates")
    order = args.order if args.order is not None else max(chart_op.base.order, 2)
    op = chart_op.jet_at(point, order)
    total = decompose(op, args.tol)
    residual = total.recombine().max_diff(op)
    body = {"point": point, "order": order, "connection": _jet_dump(total.connection.Gamma),
            "christoffel": _jet_dump(total.christoffel.Gamma_c), "subsymbol": _jet_dump(total.sigma0),
            "first_order_remainder": total.sigma1.max_abs(), "recombination_residual": residual}
    _emit(args, _report("decompose", args, body))
    return EXIT_OK


def _grid(args, chart_op, box):
    n = chart_op.n
    shape = args.grid or [5] * n
    if len(shape) == 1:
        shape = shape * n
    if len(shape) != n:
        raise DimensionMismatch(f"--grid needs 1 or {n} sizes")
    if args.box is not None:
        if len(args.box) != 2 * n:
            raise DimensionMismatch(f"--box needs {2 * n} numbers (lows then highs)")
        box = (tuple(args.box[:n]), tuple(args.box[n:]))
    if box is None:
        box = ((-0.5,) * n, (0.5,) * n)
    return Grid(tuple(box[0]), tuple(box[1]), tuple(shape))


def cmd_model(args):
    chart_op, box = load_operator(args.input)
    grid = _grid(args, chart_op, box)
    like = load_model(args.like) if args.like else None
    model = build_model(chart_op, grid, like=like, max_len=args.words, tol=args.tol,
                        require=args.require)
    doc = model_to_doc(model)
    if args.out:
        save_model(args.out, model)
        summary = {"model": args.out, "words": list(model.words),
                   "coord_words": list(model.coord_words), "jacobian_min": model.jacobian_min}
        sys.stdout.write(dumps(_report("model", args, summary)))
    else:
        sys.stdout.write(dumps(doc))
    return EXIT_OK


def cmd_compare_models(args):
    m1, m2 = load_model(args.a), load_model(args.b)
    v = compare_models(m1, m2, args.tol)
    body = {"verdict": v.verdict, "worst_deviation": v.worst_deviation, "method": v.method,
            "overlap": v.overlap, "tolerance": v.tolerance, "details": v.details}
    _emit(args, _report("compare-models", args, body))
    return VERDICT_EXIT.get(v.verdict, EXIT_INEQUIVALENT)


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    if args.kind == "symbol":
        doc = symbol_to_doc(random_symbol(args.m, args.n, rng), label=f"random seed {args.seed}")
    else:
        if args.kind == "scalar-operator":
            op = scalar_operator(args.m, args.n, seed=rng)
        else:
            op = random_operator(args.m, args.n, seed=rng)
        gauge = None
        if args.gauge_seed is not None:
            grid = Grid.cube(args.n, 0.5, 5)
            gauge = random_gauge(args.m, args.n, seed=args.gauge_seed, points=grid.points)
        doc = operator_to_doc(ChartOperator(op, gauge), box=((-0.5,) * args.n, (0.5,) * args.n),
                              label=f"{args.kind} seed {args.seed}")
    if args.out:
        write_json(args.out, doc)
    else:
        sys.stdout.write(dumps(doc))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="opequiv",
                                description="Invariants and gauge equivalence of second-order "
                                            "matrix differential operators.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    # --tol is added per command: set_defaults on a subparser would rewrite the
    # default of an action shared through ``parents`` for every command
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write output to this file")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV output where supported")
    req = argparse.ArgumentParser(add_help=False)
    req.add_argument("--require", choices=("regular", "admissible"), default="regular",
                     help="genericity gate: all four conditions, or all but cyclicity of g2")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("invariants", parents=[common, req], help="regularity report and fingerprint")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="genericity tolerance")
    s.add_argument("input")
    s.add_argument("--words", type=int, default=4, help="maximal word length")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("equiv-symbols", parents=[common, req], help="decide equivalence of two symbols")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="genericity tolerance")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--rtol", type=float, default=1e-7)
    s.set_defaults(func=cmd_equiv_symbols)

    s = sub.add_parser("decompose", parents=[common], help="associated connection and subsymbol")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="genericity tolerance")
    s.add_argument("input")
    s.add_argument("--at", type=float, nargs="+", help="base point (default: origin)")
    s.add_argument("--order", type=int, help="jet order (default: the document's K, at least 2)")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("model", parents=[common, req], help="build a model over a grid")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="genericity tolerance")
    s.add_argument("input")
    s.add_argument("--grid", type=int, nargs="+", help="points per axis")
    s.add_argument("--box", type=float, nargs="+", help="lows then highs of the chart box")
    s.add_argument("--words", "--budget", dest="words", type=int, default=3,
                   help="maximal length of basic words")
    s.add_argument("--like", help="reuse basic words and coordinates of this model")
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("compare-models", parents=[common], help="compare two models")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--tol", type=float, default=1e-6, help="relative deviation tolerance")
    s.set_defaults(func=cmd_compare_models)

    s = sub.add_parser("generate", parents=[common], help="write a random fixture document")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="genericity tolerance")
    s.add_argument("kind", choices=("symbol", "operator", "scalar-operator"))
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--gauge-seed", type=int, help="conjugate the operator by a random gauge")
    s.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for regularity failures
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except RegularityError as exc:
        sys.stderr.write(f"opequiv: regularity failure ({exc.condition}): {exc}\n")
        points = getattr(exc, "points", None)
        if points:
            for p, r in list(zip(points, exc.reasons))[:10]:
                sys.stderr.write(f"  at {p}: {r}\n")
        return EXIT_REGULARITY
    except (DocumentError, DimensionMismatch, IncompatibleWords, OSError) as exc:
        sys.stderr.write(f"opequiv: {exc}\n")
        return EXIT_INPUT
    except OpEquivError as exc:
        sys.stderr.write(f"opequiv: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
