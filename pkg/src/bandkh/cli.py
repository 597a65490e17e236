"""Command-line front end and the diagram text format.

Format (one declaration per line, ``#`` starts a comment)::

    surface planar_holes 2        # or: surface orientable G B | surface moebius
    crossing x1
    crossing x2
    edge x1.0 x2.1 : a b'
    edge x1.1 x2.0 :
    edge x1.2 x2.3 : b
    edge x1.3 x2.2 :
    loop : a

Crossing declaration order is the crossing order used for signs.  Edge words
follow the ``:`` and may be empty; a trailing apostrophe marks an inverse
letter.  Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from .chainmaps import duality_check, long_exact_sequence_check, skein_triple
from .diagram import (
    Diagram,
    DiagramError,
    Edge,
    R3Site,
    SiteError,
    apply_r1_neg,
    apply_r2,
    apply_r3,
    validate_r3_site,
)
from .homology import aggregate_handlebody, homology
from .skein import (
    LaurentPolyA,
    bracket_recursive,
    euler_characteristic,
    expansion_text,
    kauffman_bracket,
    phi_expand,
)
from .state_complex import ComplexError, GradedComplex, _mat_mul
from .surface import (
    CurveKind,
    SurfaceModel,
    UNSUPPORTED_MESSAGE,
    SurfaceError,
    UnsupportedSurfaceError,
    parse_word,
    word_text,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_OFF_CATALOGUE = {"rp2", "projective", "projective_plane", "sphere", "s2",
                  "torus", "klein", "klein_bottle", "closed"}


def parse_diagram(text: str) -> Diagram:
    surface: SurfaceModel | None = None
    crossings: list[str] = []
    edges: list[Edge] = []
    loops: list = []

    def endpoint(token: str, lineno: int):
        parts = token.rsplit(".", 1)
        if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) > 3:
            raise ParseError(f"bad slot reference {token!r}", lineno)
        cid, slot = parts[0], int(parts[1])
        if cid not in crossings:
            raise ParseError(f"unknown crossing {cid!r}", lineno)
        return (cid, slot)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "surface":
            if surface is not None:
                raise ParseError("duplicate surface declaration", lineno)
            name = tokens[1] if len(tokens) > 1 else ""
            if name in _OFF_CATALOGUE:
                raise UnsupportedSurfaceError(UNSUPPORTED_MESSAGE)
            try:
                if name == "planar_holes" and len(tokens) == 3:
                    surface = SurfaceModel.planar_holes(int(tokens[2]))
                elif name == "orientable" and len(tokens) == 4:
                    surface = SurfaceModel.orientable(int(tokens[2]), int(tokens[3]))
                elif name == "moebius" and len(tokens) == 2:
                    surface = SurfaceModel.moebius_band()
                else:
                    raise ParseError(f"bad surface declaration {line!r}", lineno)
            except (ValueError, SurfaceError) as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(str(exc), lineno) from None
            continue
        if surface is None:
            raise ParseError("the surface must be declared first", lineno)
        if kind == "crossing":
            if len(tokens) != 2:
                raise ParseError("expected: crossing <id>", lineno)
            crossings.append(tokens[1])
        elif kind == "edge":
            if ":" not in tokens:
                raise ParseError("edge needs a ':' before its word", lineno)
            colon = tokens.index(":")
            if colon != 3:
                raise ParseError("expected: edge <c.s> <c.s> : <word>", lineno)
            a = endpoint(tokens[1], lineno)
            b = endpoint(tokens[2], lineno)
            try:
                word = parse_word(" ".join(tokens[colon + 1:]))
                surface.check_word(word)
            except (ValueError, SurfaceError) as exc:
                raise ParseError(str(exc), lineno) from None
            edges.append(Edge(a, b, word))
        elif kind == "loop":
            if not tokens[1:] or tokens[1] != ":":
                raise ParseError("expected: loop : <word>", lineno)
            try:
                word = parse_word(" ".join(tokens[2:]))
                surface.check_word(word)
            except (ValueError, SurfaceError) as exc:
                raise ParseError(str(exc), lineno) from None
            loops.append(word)
        else:
            raise ParseError(f"unknown declaration {kind!r}", lineno)
    if surface is None:
        raise ParseError("missing surface declaration", 1)
    try:
        return Diagram(surface, tuple(crossings), tuple(edges), tuple(loops))
    except DiagramError as exc:
        raise ParseError(str(exc), len(text.splitlines()) or 1) from None


def emit_diagram(diagram: Diagram) -> str:
    lines = [f"surface {diagram.surface.describe()}"]
    for c in diagram.crossings:
        lines.append(f"crossing {c}")
    for e in diagram.edges:
        word = word_text(e.word)
        lines.append(f"edge {e.a[0]}.{e.a[1]} {e.b[0]}.{e.b[1]} :"
                     + (f" {word}" if word else ""))
    for w in diagram.loops:
        word = word_text(w)
        lines.append("loop :" + (f" {word}" if word else ""))
    return "\n".join(lines) + "\n"


def load_diagram(path: str) -> Diagram:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_diagram(handle.read())


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_homology(diagram: Diagram, coefficients: str, aggregate: bool,
                 out) -> int:
    table = homology(GradedComplex(diagram), coefficients)
    if aggregate:
        combined = aggregate_handlebody(table)
        for (i, j) in sorted(combined, key=lambda k: (k[1], k[0])):
            g = combined[(i, j)]
            torsion = ",".join(str(t) for t in g.torsion) or "-"
            out.write(f"{i}\t{j}\t{g.rank}\t{torsion}\n")
    else:
        text = table.to_tsv()
        out.write(text + ("\n" if text else ""))
    return 0


def run_bracket(diagram: Diagram, recursive: bool, out) -> int:
    expansion = bracket_recursive(diagram) if recursive else kauffman_bracket(diagram)
    text = expansion_text(expansion)
    out.write(text + ("\n" if text else ""))
    return 0


def run_euler(diagram: Diagram, out) -> int:
    table = homology(GradedComplex(diagram))
    gradings = sorted({s for (_i, _j, s) in table.groups}, key=lambda s: s.sort_key)
    for s in gradings:
        out.write(f"{s.text}\t{euler_characteristic(table, s).text}\n")
    return 0


def _find_r3_sites(diagram: Diagram, limit: int = 2) -> list[R3Site]:
    sites = []
    ids = diagram.crossings
    plain = [k for k, e in enumerate(diagram.edges) if not e.word]
    for p in ids:
        for v in ids:
            for w in ids:
                if len({p, v, w}) != 3:
                    continue
                join = lambda x, y: [k for k in plain
                                     if {diagram.edges[k].a[0],
                                         diagram.edges[k].b[0]} == {x, y}]
                for e_a in join(v, w):
                    for e_vp in join(v, p):
                        for e_wp in join(w, p):
                            site = R3Site(p, v, w, e_a, e_vp, e_wp)
                            try:
                                validate_r3_site(diagram, site)
                            except SiteError:
                                continue
                            sites.append(site)
                            if len(sites) >= limit:
                                return sites
    return sites


def run_verify(diagram: Diagram, suites: list[str], out) -> int:
    from .homology import table_isomorphic

    failed = False

    def report(ok: bool, label: str):
        nonlocal failed
        out.write(f"{'PASS' if ok else 'FAIL'} {label}\n")
        failed = failed or not ok

    cx = GradedComplex(diagram)
    if "d2" in suites:
        blocks: dict = {}
        for (i, j, s) in cx.buckets:
            prod = _mat_mul(cx.differential((i, j, s)), cx.differential((i + 2, j, s)))
            ok = all(not any(row) for row in prod)
            key = (j, s)
            blocks[key] = blocks.get(key, True) and ok
        for (j, s) in sorted(blocks, key=lambda k: (k[0], k[1].sort_key)):
            report(blocks[(j, s)], f"d2 (j={j},s={s.text})")
    table = None
    if "euler" in suites:
        try:
            table = homology(cx)
        except ComplexError:
            report(False, "euler (differential does not square to zero)")
        else:
            q = phi_expand(bracket_recursive(diagram))
            gradings = sorted({s for (_, _, s) in table.groups} | set(q),
                              key=lambda s: s.sort_key)
            for s in gradings:
                ok = euler_characteristic(table, s) == q.get(s, LaurentPolyA.zero())
                report(ok, f"euler (s={s.text})")
    if "reidemeister" in suites:
        if table is None:
            table = homology(cx)
        for k in range(len(diagram.edges)):
            moved = apply_r1_neg(diagram, ("edge", k))
            ok = table_isomorphic(table, homology(GradedComplex(moved)), (-1, -3))
            report(ok, f"r1neg (edge={k})")
        for k in range(len(diagram.loops)):
            moved = apply_r1_neg(diagram, ("loop", k))
            ok = table_isomorphic(table, homology(GradedComplex(moved)), (-1, -3))
            report(ok, f"r1neg (loop={k})")
        trivial_loops = [k for k, w in enumerate(diagram.loops)
                         if not _loop_is_nontrivial(diagram, w)]
        if diagram.edges and trivial_loops:
            moved = apply_r2(diagram, ("loop", trivial_loops[0]), ("edge", 0))
            ok = table_isomorphic(table, homology(GradedComplex(moved)), (0, 0))
            report(ok, f"r2 (loop={trivial_loops[0]},edge=0)")
        else:
            out.write("SKIP r2 (needs a trivial free loop and an edge)\n")
        sites = _find_r3_sites(diagram)
        if sites:
            for site in sites:
                moved = apply_r3(diagram, site)
                ok = table_isomorphic(table, homology(GradedComplex(moved)), (0, 0))
                report(ok, f"r3 (p={site.p},v={site.v},w={site.w})")
        else:
            out.write("SKIP r3 (no valid triangle site found)\n")
    if "les" in suites:
        for p in range(diagram.n_crossings):
            result = long_exact_sequence_check(skein_triple(diagram, p))
            report(result.ok, f"les (crossing={diagram.crossings[p]})")
            for failure in result.failures:
                out.write(f"  {failure}\n")
        if diagram.n_crossings == 0:
            out.write("SKIP les (no crossings)\n")
    if "duality" in suites:
        result = duality_check(diagram)
        report(result.ok, "duality")
        for failure in result.failures:
            out.write(f"  {failure}\n")
    return 1 if failed else 0


def _loop_is_nontrivial(diagram: Diagram, word) -> bool:
    from .surface import classify

    return classify(word, diagram.surface).kind is not CurveKind.TRIVIAL


def _parse_move_site(token: str) -> tuple[str, int]:
    kind = {"e": "edge", "l": "loop"}.get(token[:1])
    if kind is None or not token[1:].isdigit():
        raise SiteError(f"bad site token {token!r} (use e<k> or l<k>)")
    return (kind, int(token[1:]))


def run_moves(diagram: Diagram, move: str, site: str, out_path: str | None,
              out) -> int:
    if move == "r1neg":
        token, _, side = site.partition(":")
        moved = apply_r1_neg(diagram, _parse_move_site(token), side or "left")
    elif move == "r2":
        tokens = site.split(",")
        if len(tokens) != 2:
            raise SiteError("r2 needs --site=<strand>,<strand>")
        moved = apply_r2(diagram, _parse_move_site(tokens[0]),
                         _parse_move_site(tokens[1]))
    elif move == "r3":
        tokens = site.split(",")
        if len(tokens) != 6:
            raise SiteError("r3 needs --site=p,v,w,<e_a>,<e_vp>,<e_wp>")
        moved = apply_r3(diagram, R3Site(tokens[0], tokens[1], tokens[2],
                                         int(tokens[3]), int(tokens[4]),
                                         int(tokens[5])))
    else:
        raise SiteError(f"unknown move {move!r}")
    text = emit_diagram(moved)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        out.write(text)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandkh",
        description="Khovanov-type homology of band-link diagrams on surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p_hom = sub.add_parser("homology", help="print the (i, j, s) homology table")
    p_hom.add_argument("file")
    p_hom.add_argument("--coefficients", choices=("Z", "Q", "Z2"), default="Z")
    p_hom.add_argument("--aggregate", action="store_true",
                       help="sum over the s-grading")

    p_br = sub.add_parser("bracket", help="print the bracket expansion")
    p_br.add_argument("file")
    p_br.add_argument("--recursive", action="store_true",
                      help="use the recursive resolution instead of the state sum")

    p_eu = sub.add_parser("euler", help="print the A-graded Euler characteristics")
    p_eu.add_argument("file")

    p_ver = sub.add_parser("verify", help="run structural identity suites")
    p_ver.add_argument("file")
    p_ver.add_argument("--suite", default="all",
                       choices=("d2", "euler", "reidemeister", "les",
                                "duality", "all"))

    p_mv = sub.add_parser("moves", help="apply a Reidemeister move")
    p_mv.add_argument("file")
    p_mv.add_argument("--move", required=True, choices=("r1neg", "r2", "r3"))
    p_mv.add_argument("--site", required=True)
    p_mv.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    out = sys.stdout
    try:
        diagram = load_diagram(args.file)
        if args.command == "homology":
            return run_homology(diagram, args.coefficients, args.aggregate, out)
        if args.command == "bracket":
            return run_bracket(diagram, args.recursive, out)
        if args.command == "euler":
            return run_euler(diagram, out)
        if args.command == "verify":
            suites = (["d2", "euler", "reidemeister", "les", "duality"]
                      if args.suite == "all" else [args.suite])
            return run_verify(diagram, suites, out)
        if args.command == "moves":
            return run_moves(diagram, args.move, args.site, args.out, out)
        raise AssertionError(args.command)
    except (ParseError, UnsupportedSurfaceError, SurfaceError, DiagramError,
            SiteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
