"""Command-line front end.

Subcommands: homology, pages, e2, oracle-check, extend, compare-ls,
kunneth.  All output is byte-deterministic.  Exit codes: 0 ok (for
oracle-check and compare-ls: the check passed), 1 check failed,
2 parse error, 3 invariant violation, 4 precondition violation.
"""

import argparse
import sys

from .documents import Document, load_document, print_document
from .errors import InvariantError, ParseError, PreconditionError
from .fibration import FibrationData, e2_table, leray_serre_compare
from .localsystems import extend_subsystem
from .morse import JOIN

def _fmt_cell(d):
    return str(d) if d else "."


def render_table(entries, sn=0, sk=0):
    """Dimension table: p left to right, q bottom to top; "." for zero."""
    if not entries:
        return ["  (empty)"]
    shifted = {(p + sn, q + sk): d for (p, q), d in entries.items()}
    ps = sorted({p for p, _ in shifted})
    qs = sorted({q for _, q in shifted})
    prange = list(range(ps[0], ps[-1] + 1))
    qrange = list(range(qs[0], qs[-1] + 1))
    tokens = [str(p) for p in prange] + [str(q) for q in qrange]
    tokens += [_fmt_cell(d) for d in shifted.values()]
    w = max(len(t) for t in tokens) + 2
    head_label = "q\\p"
    lw = max(len(head_label), max(len(str(q)) for q in qrange)) + 2
    lines = ["%s |%s" % (head_label.rjust(lw), "".join(str(p).rjust(w) for p in prange))]
    for q in reversed(qrange):
        row = "".join(_fmt_cell(shifted.get((p, q), 0)).rjust(w) for p in prange)
        lines.append("%s |%s" % (str(q).rjust(lw), row))
    return lines


def _tsv_lines(r, entries, sn=0, sk=0):
    return [
        "%d\t%d\t%d\t%d" % (r, p + sn, q + sk, d)
        for (p, q), d in sorted(entries.items())
    ]


def _emit(lines):
    sys.stdout.write("\n".join(lines) + ("\n" if lines else ""))


def _homology_lines(cx):
    degs = cx.degrees()
    if not degs:
        return ["(zero complex)"]
    dims = cx.cohomology().dims()
    s = cx.display_shift
    return ["H^%d %d" % (k + s, dims.get(k, 0)) for k in range(degs[0], degs[-1] + 1)]


def cmd_homology(args):
    doc = load_document(args.file, args.field)
    _emit(_homology_lines(doc.build_complex()))
    return 0


def _doc_shifts(doc, args):
    sn = args.shift_n if args.shift_n is not None else doc.shift_n
    sk = args.shift_k if args.shift_k is not None else doc.shift_k
    return sn, sk


def cmd_pages(args):
    doc = load_document(args.file, args.field)
    tower = doc.build_tower()
    sn, sk = _doc_shifts(doc, args)
    tsv = args.raw or args.format == "tsv"
    lines = []
    if args.all:
        conv = tower.converge()
        last = max(1, conv.r_stop)
        for r in range(1, last + 1):
            if tsv:
                lines += _tsv_lines(r, tower.page(r).dims(), sn, sk)
            else:
                lines.append("page %d" % r)
                lines += render_table(tower.page(r).dims(), sn, sk)
                lines.append("")
        if tsv:
            lines += _tsv_lines(-1, conv.einf, sn, sk)
        else:
            lines.append("stable page: %d" % conv.r_stop)
            lines.append("certified: %s" % ("true" if conv.certified else "false"))
            lines.append("E_infinity")
            lines += render_table(conv.einf, sn, sk)
            totals = conv.einf_total_dims()
            lines.append("totals: %s" % " ".join("H^%d %d" % (k + sn + sk, d) for k, d in totals.items()))
    else:
        r = args.page if args.page is not None else 2
        page = tower.page(r)
        if tsv:
            lines += _tsv_lines(r, page.dims(), sn, sk)
        else:
            lines.append("page %d" % r)
            lines += render_table(page.dims(), sn, sk)
    _emit(lines)
    return 0


def cmd_e2(args):
    doc = load_document(args.file, args.field)
    if not isinstance(doc.payload, FibrationData):
        raise PreconditionError("e2 needs a fibration_data document")
    table = e2_table(doc.payload)
    sn, sk = _doc_shifts(doc, args)
    lines = []
    if args.raw or args.format == "tsv":
        lines += _tsv_lines(2, table.entries, sn, sk)
    else:
        lines.append("E_2 = H^p(base; H^q(fiber))")
        lines += render_table(table.entries, sn, sk)
        lines.append("matches page 2: yes")
    _emit(lines)
    return 0


def cmd_oracle_check(args):
    doc = load_document(args.file, args.field)
    tower = doc.build_tower()
    conv = tower.converge()
    direct = tower.complex.cohomology().dims()
    totals = conv.einf_total_dims()
    degenerate = not any(
        tower.page(r).has_nonzero_differential()
        for r in range(2, tower.n + 2)
    )
    lines = []
    span = tower.complex.degrees()
    degs = list(range(span[0], span[-1] + 1)) if span else []
    lines.append("direct cohomology: %s" % (" ".join("H^%d %d" % (k, direct.get(k, 0)) for k in degs) or "0"))
    lines.append("E_infinity totals: %s" % (" ".join("H^%d %d" % (k, totals.get(k, 0)) for k in degs) or "0"))
    lines.append("certified: %s" % ("true" if conv.certified else "false"))
    lines.append("degenerates at E_2: %s" % ("yes" if degenerate else "no"))
    ok = conv.certified and direct == totals
    lines.append("PASS" if ok else "FAIL")
    _emit(lines)
    return 0 if ok else 1


def cmd_extend(args):
    sub_doc = load_document(args.subsystem, args.field)
    base_doc = load_document(args.base)
    if sub_doc.kind != "local_subsystem":
        raise PreconditionError("extend needs a local_subsystem document")
    if base_doc.kind != "base_graph":
        raise PreconditionError("extend needs a base_graph document")
    report = extend_subsystem(sub_doc.payload, base_doc.payload, max_word_depth=args.max_word_depth)
    lines = []
    lines.append("base point: %s" % report.base_point)
    lines.append("pi1 generators of base: %s" % (" ".join(report.pi1_generators) or "(none)"))
    lines.append("subsystem loops: %s" % " ".join(n for n, _, _ in report.loop_generators))
    if report.surjective is True:
        verdict = "yes"
    elif report.surjective is False:
        verdict = "no"
    else:
        verdict = "unknown"
    lines.append("surjective on pi1: %s" % verdict)
    if report.extension is not None:
        lines.append("extension:")
        ext_doc = Document("local_system", sub_doc.field, report.extension)
        lines.append(print_document(ext_doc).rstrip("\n"))
    else:
        lines.append("extension: none")
    _emit(lines)
    return 0


def cmd_compare_ls(args):
    cell_doc = load_document(args.cellular, args.field)
    fib_doc = load_document(args.fibration, args.field)
    if cell_doc.kind != "cellular_data":
        raise PreconditionError("compare-ls needs a cellular_data document first")
    if not isinstance(fib_doc.payload, FibrationData):
        raise PreconditionError("compare-ls needs a fibration_data document second")
    cmp = leray_serre_compare(cell_doc.payload, fib_doc.payload, field=cell_doc.field)
    lines = []
    for r in sorted(cmp.pages_cellular):
        same = cmp.pages_cellular[r] == cmp.pages_fibration[r]
        lines.append("page %d: %s" % (r, "equal" if same else "DIFFERENT"))
        if not same:
            lines.append("  cellular:")
            lines += ["  " + l for l in render_table(cmp.pages_cellular[r])]
            lines.append("  fibration:")
            lines += ["  " + l for l in render_table(cmp.pages_fibration[r])]
    lines.append("E_infinity: %s" % ("equal" if cmp.einf_cellular == cmp.einf_fibration else "DIFFERENT"))
    lines.append("towers agree (pages >= 2 through E_infinity): %s" % ("yes" if cmp.equal else "no"))
    _emit(lines)
    return 0 if cmp.equal else 1


def cmd_kunneth(args):
    base_doc = load_document(args.base, args.field)
    fiber_doc = load_document(args.fiber, args.field)
    if base_doc.kind != "cochain_complex" or fiber_doc.kind != "cochain_complex":
        raise PreconditionError("kunneth needs two cochain_complex documents")
    if base_doc.field != fiber_doc.field:
        raise PreconditionError("kunneth factors must share a field")
    fd = product_fibration(base_doc.payload, fiber_doc.payload)
    doc = Document("fibration_data", base_doc.field, fd)
    sys.stdout.write(print_document(doc))
    return 0


def product_fibration(base_cx, fiber_cx):
    """Product FibrationData: base complex as Morse data, trivial transports.

    Each integral differential entry c becomes |c| unit-sign trajectories
    (over F_p, the canonical residue is the count); non-integral entries
    over Q cannot be modelled as signed trajectory counts.
    """
    from .localsystems import BaseGraph
    from .morse import MorseData, Trajectory

    field = base_cx.field
    points = []
    for g, k in base_cx.basis.generators:
        if k < 0:
            raise InvariantError("kunneth base degrees must be >= 0, got %d for %r" % (k, g))
        if JOIN in g:
            raise InvariantError("kunneth base generator %r must not contain %r" % (g, JOIN))
        points.append((g, k))
    edges = []
    trajs = []
    for k in base_cx.degrees():
        src, tgt = base_cx.basis.gens(k), base_cx.basis.gens(k + 1)
        for i, j, v in base_cx.d(k).entries():
            if field.p is None:
                if v.denominator != 1:
                    raise InvariantError(
                        "kunneth base differential entry %r -> %r is not an integer" % (src[j], tgt[i])
                    )
                count, sign = abs(v.numerator), (1 if v.numerator > 0 else -1)
            else:
                count, sign = int(v), 1
            for t in range(count):
                eid = "t%d_%s_%s_%d" % (k, src[j], tgt[i], t)
                edges.append((eid, tgt[i], src[j]))
                trajs.append(Trajectory(eid, tgt[i], src[j], sign, ((eid, 1),)))
    graph = BaseGraph([g for g, _ in points], edges)
    md = MorseData(graph, points, trajs)
    return FibrationData(md, fiber_cx, {})


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spectower",
        description="spectral sequences of finite filtered cochain complexes",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, shifts=True):
        p.add_argument("--field", default=None, help="override the document field (e.g. F2, Q)")
        if shifts:
            p.add_argument("--shift-n", dest="shift_n", type=int, default=None,
                           help="display shift added to p")
            p.add_argument("--shift-k", dest="shift_k", type=int, default=None,
                           help="display shift added to q")

    p = sub.add_parser("homology", help="per-degree cohomology dimensions")
    p.add_argument("file")
    common(p, shifts=False)
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("pages", help="render spectral sequence pages")
    p.add_argument("file")
    p.add_argument("--page", type=int, default=None, help="single page index r")
    p.add_argument("--all", action="store_true", help="all pages to stabilization plus the convergence report")
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.add_argument("--raw", action="store_true", help="emit r<TAB>p<TAB>q<TAB>dim lines")
    common(p)
    p.set_defaults(func=cmd_pages)

    p = sub.add_parser("e2", help="E_2 table through the cohomology local system")
    p.add_argument("file")
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.add_argument("--raw", action="store_true")
    common(p)
    p.set_defaults(func=cmd_e2)

    p = sub.add_parser("oracle-check", help="compare E_infinity totals with direct cohomology")
    p.add_argument("file")
    common(p, shifts=False)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("extend", help="extend a local subsystem to a local system")
    p.add_argument("subsystem")
    p.add_argument("base")
    p.add_argument("--max-word-depth", dest="max_word_depth", type=int, default=6)
    common(p, shifts=False)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("compare-ls", help="compare a skeleton-filtered cellular tower with a fibration tower")
    p.add_argument("cellular")
    p.add_argument("fibration")
    common(p, shifts=False)
    p.set_defaults(func=cmd_compare_ls)

    p = sub.add_parser("kunneth", help="emit the product fibration of two complexes")
    p.add_argument("base")
    p.add_argument("fiber")
    common(p, shifts=False)
    p.set_defaults(func=cmd_kunneth)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write("parse error: %s\n" % exc)
        return 2
    except InvariantError as exc:
        sys.stderr.write("invariant violation: %s\n" % exc)
        return 3
    except PreconditionError as exc:
        sys.stderr.write("precondition violation: %s\n" % exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
