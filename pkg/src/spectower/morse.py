"""Morse and cellular cochain complexes twisted by a local system.

Trajectory convention: a trajectory record (id, src, dst, sign, word)
flows downward, from the higher-index critical point `src` to the
lower-index `dst`, and its transport word follows the flow (a path from
src's vertex to dst's vertex in the base graph).  The cohomological
differential raises the Morse index, so the block it contributes maps
the fiber over `dst` to the fiber over `src`, via the *inverse* of the
word transport.

Cells are anchored at base-graph vertices; incidence transport words
connect anchor vertices.  The 0/1-cell exceptional case (a 1-cell whose
two endpoints coincide) replaces the single incidence term with
orientation * (plus-transport - minus-transport).
"""

from .complexes import CochainComplex
from .errors import InvariantError, ParseError
from .matrix import Matrix

JOIN = "|"


class Trajectory:
    __slots__ = ("id", "src", "dst", "sign", "word")

    def __init__(self, id, src, dst, sign, word):
        self.id = str(id)
        self.src = str(src)
        self.dst = str(dst)
        if sign not in (1, -1):
            raise ParseError("trajectory %r has sign %r, expected +1 or -1" % (id, sign))
        self.sign = sign
        self.word = tuple(word)


class MorseData:
    """Critical points with indices, signed trajectories, and a base graph."""

    def __init__(self, graph, points, trajectories):
        self.graph = graph
        self.points = {str(x): int(k) for x, k in points}
        if len(self.points) != len(list(points)):
            raise ParseError("duplicate critical point ids")
        vset = set(graph.vertices)
        for x in self.points:
            if x not in vset:
                raise ParseError("critical point %r is not a base graph vertex" % x)
        trajs = []
        ids = set()
        for t in trajectories:
            if not isinstance(t, Trajectory):
                t = Trajectory(*t)
            if t.id in ids:
                raise ParseError("duplicate trajectory id %r" % t.id)
            ids.add(t.id)
            for end in (t.src, t.dst):
                if end not in self.points:
                    raise ParseError("trajectory %r endpoint %r is not a critical point" % (t.id, end))
            if self.points[t.src] <= self.points[t.dst]:
                raise ParseError(
                    "trajectory %r must flow from a higher index to a lower one" % t.id
                )
            a, b = graph.word_endpoints(t.word, t.src if not t.word else None)
            if (a, b) != (t.src, t.dst):
                raise ParseError(
                    "trajectory %r word runs %r -> %r, expected %r -> %r" % (t.id, a, b, t.src, t.dst)
                )
            trajs.append(t)
        self.trajectories = tuple(trajs)

    def differential_trajectories(self):
        """Trajectories with index drop exactly one (the others only feed
        transport-composition tests)."""
        return [t for t in self.trajectories if self.points[t.src] == self.points[t.dst] + 1]

    def trajectory(self, tid):
        for t in self.trajectories:
            if t.id == tid:
                return t
        raise KeyError("no trajectory %r" % tid)

    def points_by_index(self):
        out = {}
        for x, k in self.points.items():
            out.setdefault(k, []).append(x)
        return out


def _twisted_generators(names_with_degrees, fiber_dim):
    gens = []
    for name, k in names_with_degrees:
        if JOIN in name:
            raise ParseError("id %r must not contain %r" % (name, JOIN))
        for i in range(fiber_dim):
            gens.append((name + JOIN + str(i), k))
    return gens


def _report_d2_pairs(cx, what):
    for k in sorted(cx._d):
        prod = cx.d(k + 1) * cx.d(k)
        if prod.is_zero():
            continue
        i, j, _ = prod.entries()[0]
        src = cx.basis.gens(k)[j].split(JOIN)[0]
        dst = cx.basis.gens(k + 2)[i].split(JOIN)[0]
        raise InvariantError(
            "twisted %s differential fails d^2 = 0 between %r and %r" % (what, src, dst)
        )


def morse_complex(md, ls):
    """Cochain complex of the critical points with local coefficients.

    Generators are (critical point) x (fiber basis), graded by Morse
    index; d(m<x>) sums sign * transport^{-1}(m) over trajectories into x
    from one index higher.
    """
    if ls.graph != md.graph:
        raise ParseError("local system lives on a different base graph")
    dim = ls.fiber_dim
    gens = _twisted_generators([(x, k) for x, k in md.points.items()], dim)
    entries = []
    for t in md.differential_trajectories():
        tinv = ls.transport_along(t.word, start=t.src).inverse()
        for i, j, v in tinv.entries():
            entries.append(
                (t.dst + JOIN + str(j), t.src + JOIN + str(i), ls.field.mul(ls.field.normalize(t.sign), v))
            )
    cx = CochainComplex.from_generator_entries(ls.field, gens, entries, check=False)
    _report_d2_pairs(cx, "Morse")
    return cx


class CellularData:
    """Cells with orientations, incidence numbers, and transport words.

    `filtration`, when given, labels each cell with a base-skeleton index
    (used by the fibration comparison).  The untwisted incidence complex
    is checked for d^2 = 0 over the integers at construction; exceptional
    0/1 incidences contribute zero untwisted.
    """

    def __init__(self, cells, incidences, exceptional=(), graph=None, filtration=None):
        self.graph = graph
        self.cells = {}
        order = []
        for c in cells:
            cid, dim = str(c[0]), int(c[1])
            anchor = str(c[2]) if len(c) > 2 and c[2] is not None else None
            orient = int(c[3]) if len(c) > 3 else 1
            if cid in self.cells:
                raise ParseError("duplicate cell id %r" % cid)
            if orient not in (1, -1):
                raise ParseError("cell %r orientation must be +1 or -1" % cid)
            if graph is not None and anchor is not None and anchor not in set(graph.vertices):
                raise ParseError("cell %r anchor %r is not a base graph vertex" % (cid, anchor))
            self.cells[cid] = (dim, anchor, orient)
            order.append(cid)
        self.order = tuple(order)
        inc = []
        for src, dst, coeff, word in incidences:
            src, dst = str(src), str(dst)
            word = tuple(word)
            self._check_pair(src, dst, word)
            inc.append((src, dst, int(coeff), word))
        self.incidences = tuple(inc)
        exc = []
        for src, dst, plus, minus in exceptional:
            src, dst = str(src), str(dst)
            plus, minus = tuple(plus), tuple(minus)
            if self.cells[src][0] != 0 or self.cells[dst][0] != 1:
                raise ParseError("exceptional incidence %r -> %r must join a 0-cell to a 1-cell" % (src, dst))
            self._check_pair(src, dst, plus)
            self._check_pair(src, dst, minus)
            exc.append((src, dst, plus, minus))
        self.exceptional = tuple(exc)
        self.filtration = None
        if filtration is not None:
            self.filtration = {str(c): int(p) for c, p in filtration.items()}
            for c in self.filtration:
                if c not in self.cells:
                    raise ParseError("filtration labels unknown cell %r" % c)
        self._check_untwisted()

    def _check_pair(self, src, dst, word):
        if src not in self.cells or dst not in self.cells:
            raise ParseError("incidence references unknown cell %r -> %r" % (src, dst))
        if self.cells[dst][0] != self.cells[src][0] + 1:
            raise ParseError("incidence %r -> %r must raise dimension by one" % (src, dst))
        if self.graph is not None and word:
            a, b = self.graph.word_endpoints(word)
            if (a, b) != (self.cells[src][1], self.cells[dst][1]):
                raise ParseError(
                    "incidence word %r -> %r runs %r -> %r, expected the anchors %r -> %r"
                    % (src, dst, a, b, self.cells[src][1], self.cells[dst][1])
                )
        elif self.graph is None and word:
            raise ParseError("transport words need a base graph")
        if self.graph is not None and not word:
            if self.cells[src][1] != self.cells[dst][1]:
                raise ParseError(
                    "incidence %r -> %r has an empty word but different anchors" % (src, dst)
                )

    def dims(self):
        return sorted({d for d, _, _ in self.cells.values()})

    def cells_of_dim(self, k):
        return [c for c in self.order if self.cells[c][0] == k]

    def _untwisted_matrix(self, k):
        rows = self.cells_of_dim(k + 1)
        cols = self.cells_of_dim(k)
        rpos = {c: i for i, c in enumerate(rows)}
        cpos = {c: j for j, c in enumerate(cols)}
        m = [[0] * len(cols) for _ in rows]
        for src, dst, coeff, _ in self.incidences:
            if self.cells[src][0] == k:
                m[rpos[dst]][cpos[src]] += coeff
        return m

    def _check_untwisted(self):
        for k in self.dims():
            a = self._untwisted_matrix(k)
            b = self._untwisted_matrix(k + 1)
            if not a or not b:
                continue
            for i in range(len(b)):
                for j in range(len(a[0]) if a else 0):
                    s = sum(b[i][t] * a[t][j] for t in range(len(a)))
                    if s != 0:
                        raise InvariantError(
                            "untwisted incidence complex fails d^2 = 0 between %r and %r"
                            % (self.cells_of_dim(k)[j], self.cells_of_dim(k + 2)[i])
                        )


def cellular_complex(cd, ls=None, field=None):
    """Twisted cellular cochain complex via incidence numbers.

    With ls=None (or a trivial system) this is the untwisted incidence
    complex with `field` coefficients, entry for entry.
    """
    if ls is None:
        if field is None:
            raise ValueError("cellular_complex needs a local system or a field")
        dim = 1
        f = field
    else:
        dim = ls.fiber_dim
        f = ls.field
        if cd.graph is not None and ls.graph != cd.graph:
            raise ParseError("local system lives on a different base graph")
    gens = _twisted_generators([(c, cd.cells[c][0]) for c in cd.order], dim)
    ident = Matrix.identity(f, dim)
    entries = []
    for src, dst, coeff, word in cd.incidences:
        t = ls.transport_along(word, start=cd.cells[src][1]) if ls is not None else ident
        block = t.scale(coeff)
        for i, j, v in block.entries():
            entries.append((src + JOIN + str(j), dst + JOIN + str(i), v))
    for src, dst, plus, minus in cd.exceptional:
        if ls is None:
            continue  # plus and minus transports cancel untwisted
        tp = ls.transport_along(plus, start=cd.cells[src][1])
        tm = ls.transport_along(minus, start=cd.cells[src][1])
        block = (tp - tm).scale(cd.cells[src][2])
        for i, j, v in block.entries():
            entries.append((src + JOIN + str(j), dst + JOIN + str(i), v))
    cx = CochainComplex.from_generator_entries(f, gens, entries, check=False)
    _report_d2_pairs(cx, "cellular")
    return cx
