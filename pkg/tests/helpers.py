"""Shared test utilities: independent oracles and random instance generators.

The oracles are deliberately naive (dense, no pivot strategy, no reuse of
library internals) so they stay independent of the code under test.
"""

from fractions import Fraction

from spectower.complexes import CochainComplex, GradedBasis
from spectower.field import Field
from spectower.matrix import Matrix
from spectower.spectral import SplitFilteredComplex


# -- oracles ----------------------------------------------------------------


def oracle_rank(field, dense):
    """Textbook dense Gaussian elimination, first nonzero pivot, no frills."""
    rows = [[field.normalize(v) for v in row] for row in dense]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(rows)):
            if rows[i][col] != field.zero:
                piv = i
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        for i in range(len(rows)):
            if i == rank:
                continue
            f = rows[i][col]
            if f == field.zero:
                continue
            ratio = field.div(f, pv)
            rows[i] = [field.sub(a, field.mul(ratio, b)) for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def oracle_matrix_rank(m):
    return oracle_rank(m.field, m.to_dense())


def oracle_kernel_f2(m):
    """All kernel vectors of a small F_2 matrix by brute-force enumeration."""
    assert m.field.p == 2 and m.ncols <= 12
    dense = m.to_dense()
    out = []
    for mask in range(1 << m.ncols):
        vec = [(mask >> j) & 1 for j in range(m.ncols)]
        prod = [sum(dense[i][j] * vec[j] for j in range(m.ncols)) % 2 for i in range(m.nrows)]
        if not any(prod):
            out.append(tuple(vec))
    return out


def oracle_cohomology_dims(cx):
    """dim H^k = dim C^k - rank d^k - rank d^{k-1}, via the dense oracle."""
    dims = {}
    for k in cx.degrees():
        r_out = oracle_matrix_rank(cx.d(k))
        r_in = oracle_matrix_rank(cx.d(k - 1))
        dims[k] = cx.dim(k) - r_out - r_in
    return {k: v for k, v in dims.items() if v}


# -- random instances ---------------------------------------------------------


def random_scalar(rng, field, nonzero=False):
    if field.p is not None:
        lo = 1 if nonzero else 0
        return rng.randrange(lo, field.p)
    num = rng.choice([x for x in range(-3, 4) if x or not nonzero])
    den = rng.choice([1, 1, 2, 3])
    return Fraction(num, den)


def random_matrix(rng, field, nrows, ncols, density=0.3):
    ent = {}
    for i in range(nrows):
        for j in range(ncols):
            if rng.random() < density:
                v = random_scalar(rng, field)
                if v:
                    ent[(i, j)] = v
    return Matrix(field, nrows, ncols, ent)


def _random_unitriangular(rng, field, n, density=0.25):
    """I + strictly upper triangular noise; invertible by construction."""
    ent = {(i, i): field.one for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                v = random_scalar(rng, field, nonzero=True)
                ent[(i, j)] = v
    return Matrix(field, n, n, ent)


def random_invertible(rng, field, n, density=0.25):
    up = _random_unitriangular(rng, field, n, density)
    low = _random_unitriangular(rng, field, n, density).transpose()
    diag = Matrix(field, n, n, {(i, i): random_scalar(rng, field, nonzero=True) for i in range(n)})
    return up * diag * low


def random_split_complex(rng, field, max_gens=30, max_len=5, max_degree=5, pair_prob=0.7):
    """A random SplitFilteredComplex with d^2 = 0 guaranteed.

    Start from a direct sum of two-term pieces (plus surviving classes)
    respecting blocks, then conjugate degreewise by a random
    filtration-preserving automorphism; that mixes all the d_r components
    while keeping the square zero exactly.
    """
    nblocks = rng.randint(1, max_len)
    n = rng.randint(2, max_gens)
    raw = []
    for i in range(n):
        raw.append(("g%d" % i, rng.randint(0, max_degree), rng.randrange(nblocks)))
    # basis order: degree, then block, then id counter; same-degree order is
    # block-sorted so strictly-upper conjugators preserve the filtration
    raw.sort(key=lambda t: (t[1], t[2], int(t[0][1:])))
    gens = [(g, k) for g, k, _ in raw]
    blocks = {g: p for g, k, p in raw}
    by_slot = {}
    for g, k, p in raw:
        by_slot.setdefault(k, []).append(g)

    basis = GradedBasis(gens)
    used = set()
    entries = {}
    for g, k, p in raw:
        if g in used or rng.random() > pair_prob:
            continue
        pool = [
            h
            for h in by_slot.get(k + 1, [])
            if h not in used and blocks[h] >= p
        ]
        if not pool:
            continue
        h = rng.choice(pool)
        used.add(g)
        used.add(h)
        i = basis.position(h)[1]
        j = basis.position(g)[1]
        entries.setdefault(k, []).append((i, j, random_scalar(rng, field, nonzero=True)))
    diff = {
        k: Matrix.from_entries(field, basis.dim(k + 1), basis.dim(k), tr)
        for k, tr in entries.items()
    }
    # strictly lower triangular noise in the block-sorted order sends each
    # generator into blocks >= its own, hence preserves the filtration
    conj = {k: _random_unitriangular(rng, field, basis.dim(k)).transpose() for k in basis.degrees()}
    twisted = {}
    for k, m in diff.items():
        t_next = conj.get(k + 1, Matrix.identity(field, basis.dim(k + 1)))
        twisted[k] = t_next * m * conj[k].inverse()
    cx = CochainComplex(field, basis, twisted)
    return SplitFilteredComplex(cx, blocks)


def random_fields(rng):
    return rng.choice([Field(2), Field(3), Field()])


# -- random fibration machinery -------------------------------------------------


from spectower.localsystems import BaseGraph  # noqa: E402
from spectower.morse import MorseData, Trajectory  # noqa: E402
from spectower.fibration import FibrationData  # noqa: E402


def random_standard_fiber(rng, field, acyclic=False, max_deg=2, max_pairs=2, max_h=2):
    """A fiber complex with known homology: two-term pieces plus surviving
    generators, conjugated degreewise by a random invertible change of basis.

    Returns (complex, conj, hgens) where hgens maps degree -> ids of the
    surviving classes (so dim H^q = len(hgens[q])) and conj holds the
    change-of-basis matrices.
    """
    gens = []
    pairs = []
    hgens = {}
    idx = 0
    for deg in range(0, max_deg + 1):
        for _ in range(rng.randint(0, max_pairs)):
            a, b = "p%d" % idx, "q%d" % idx
            idx += 1
            gens += [(a, deg), (b, deg + 1)]
            pairs.append((a, b))
        if not acyclic:
            for _ in range(rng.randint(0, max_h)):
                h = "h%d" % idx
                idx += 1
                gens.append((h, deg))
                hgens.setdefault(deg, []).append(h)
    if not gens or (acyclic and not pairs):
        gens = [("p0x", 0), ("q0x", 1)] + ([("h0x", 0)] if not acyclic else [])
        pairs = [("p0x", "q0x")]
        hgens = {0: ["h0x"]} if not acyclic else {}
    entries = [(a, b, random_scalar(rng, field, nonzero=True)) for a, b in pairs]
    std = CochainComplex.from_generator_entries(field, gens, entries)
    conj = {k: random_invertible(rng, field, std.dim(k)) for k in std.degrees()}
    twisted = {}
    for k in std.degrees():
        m = std.d(k)
        if m.is_zero():
            continue
        twisted[k] = conj[k + 1] * m * conj[k].inverse()
    cx = CochainComplex(field, std.basis, twisted)
    return cx, conj, hgens


def _nonidentity_mix(rng, field, n):
    """A random invertible n x n matrix different from the identity."""
    if n == 1 and field.p == 2:
        return None  # GL_1(F_2) is trivial
    for _ in range(20):
        m = random_invertible(rng, field, n)
        if m != Matrix.identity(field, n):
            return m
    if n >= 2:
        ent = {(i, i): field.one for i in range(n)}
        ent[(0, 1)] = field.one
        return Matrix(field, n, n, ent)
    return Matrix(field, 1, 1, {(0, 0): field.normalize(-1)})


def random_chain_auto(rng, cx, conj, hgens, h_action=None, homotopy_noise=True):
    """An invertible chain automorphism of cx as {degree: Matrix}.

    In the standard-form coordinates the map is the identity on the paired
    generators and acts by h_action (a {degree: Matrix} dict) on the
    surviving classes; composing with I + dh + hd noise scrambles the
    chain level without touching cohomology.
    """
    field = cx.field
    h_action = h_action or {}
    blocks = {}
    for k in cx.degrees():
        names = cx.basis.gens(k)
        n = len(names)
        ent = {(i, i): field.one for i in range(n)}
        hs = [i for i, g in enumerate(names) if g in set(hgens.get(k, []))]
        mix = h_action.get(k)
        if mix is not None:
            for a, pos_a in enumerate(hs):
                ent.pop((pos_a, pos_a))
            for a, pos_a in enumerate(hs):
                for b, pos_b in enumerate(hs):
                    v = mix.get(a, b)
                    if v != field.zero:
                        ent[(pos_a, pos_b)] = v
        b = Matrix(field, n, n, ent, _normalized=True)
        p = conj.get(k, Matrix.identity(field, n))
        blocks[k] = p * b * p.inverse()
    if homotopy_noise:
        hmap = {}
        for k in cx.degrees():
            hmap[k] = random_matrix(rng, field, cx.dim(k - 1), cx.dim(k), 0.3)
        noised = {}
        ok = True
        for k in cx.degrees():
            t = Matrix.identity(field, cx.dim(k))
            t = t + cx.d(k - 1) * hmap.get(k, Matrix.zero(field, cx.dim(k - 1), cx.dim(k)))
            nxt = hmap.get(k + 1)
            if nxt is not None:
                t = t + nxt * cx.d(k)
            if t.rank() != cx.dim(k):
                ok = False
                break
            noised[k] = blocks[k] * t
        if ok:
            blocks = noised
    return blocks


def random_two_level_base(rng, max_min=3, max_max=3):
    """Morse data with only index-0 and index-1 points (free pi_1, so any
    transports are consistent and d^2 = 0 holds for every assembly)."""
    mins = ["m%d" % i for i in range(rng.randint(1, max_min))]
    maxs = ["X%d" % i for i in range(rng.randint(1, max_max))]
    edges, trajs = [], []
    eidx = 0
    for top in maxs:
        for _ in range(rng.randint(1, 3)):
            bot = rng.choice(mins)
            eid = "g%d" % eidx
            eidx += 1
            edges.append((eid, top, bot))
            trajs.append(Trajectory(eid, top, bot, rng.choice([1, -1]), ((eid, 1),)))
    graph = BaseGraph(mins + maxs, edges)
    return MorseData(graph, [(m, 0) for m in mins] + [(x, 1) for x in maxs], trajs)


def sphere_base():
    """Two critical points of index 0 and 2; no differential trajectories."""
    g = BaseGraph(["b0", "b2"], [("c", "b2", "b0")])
    return MorseData(g, [("b0", 0), ("b2", 2)], [("tc", "b2", "b0", 1, (("c", 1),))])


def torus_morse_base():
    """Four points (0,1,1,2); pairs of opposite-sign trajectories cancel, so
    the untwisted Morse differential vanishes identically."""
    vs = ["m", "s1", "s2", "T"]
    edges, trajs = [], []
    for i, (top, bot) in enumerate([("s1", "m"), ("s2", "m"), ("T", "s1"), ("T", "s2")]):
        for sgn in (1, -1):
            eid = "e%d%s" % (i, "p" if sgn == 1 else "n")
            edges.append((eid, top, bot))
            trajs.append(Trajectory(eid, top, bot, sgn, ((eid, 1),)))
    g = BaseGraph(vs, edges)
    return MorseData(g, [("m", 0), ("s1", 1), ("s2", 1), ("T", 2)], trajs)


def random_product_fibration(rng, field):
    base = rng.choice(
        [random_two_level_base(rng), sphere_base(), torus_morse_base(), projective_base()]
    )
    fiber, _, _ = random_standard_fiber(rng, field)
    return FibrationData(base, fiber, {})


def random_acyclic_fibration(rng, field):
    base = rng.choice([random_two_level_base(rng), sphere_base()])
    fiber, conj, hgens = random_standard_fiber(rng, field, acyclic=True)
    actions = {}
    for eid in base.graph.edges:
        if rng.random() < 0.5:
            actions[eid] = random_chain_auto(rng, fiber, conj, hgens)
    return FibrationData(base, fiber, actions)


def projective_base():
    """Three index levels (0, 1, 2) with homotopic trajectory pairs declared;
    the lower pair cancels, the upper pair adds, as for RP^2."""
    g = BaseGraph(
        ["m", "s", "T"],
        [("a", "s", "m"), ("b", "s", "m"), ("c", "T", "s"), ("d", "T", "s")],
        [["a", "~b"], ["c", "~d"]],
    )
    return MorseData(
        g,
        [("m", 0), ("s", 1), ("T", 2)],
        [
            Trajectory("ta", "s", "m", 1, (("a", 1),)),
            Trajectory("tb", "s", "m", -1, (("b", 1),)),
            Trajectory("tc", "T", "s", 1, (("c", 1),)),
            Trajectory("td", "T", "s", 1, (("d", 1),)),
        ],
    )


def _mixable_fiber(rng, field):
    while True:
        fiber, conj, hgens = random_standard_fiber(rng, field)
        mixable = [q for q, hs in hgens.items()
                   if len(hs) >= 2 or (len(hs) == 1 and field.p != 2)]
        if mixable:
            return fiber, conj, hgens, mixable


def random_twisted_fibration(rng, field):
    """A fibration with monodromy acting nontrivially on fiber cohomology
    (witnessed by a non-identity standard-form mix).

    Two base shapes: a free-pi_1 two-level base with an arbitrary twisted
    edge, or the three-level projective base, where the declared homotopies
    force equal transports along each trajectory pair (so the nontrivial
    action rides both lower edges).
    """
    fiber, conj, hgens, mixable = _mixable_fiber(rng, field)
    q0 = rng.choice(mixable)
    mix = _nonidentity_mix(rng, field, len(hgens[q0]))
    if rng.random() < 0.3:
        base = projective_base()
        twisted = random_chain_auto(rng, fiber, conj, hgens, h_action={q0: mix},
                                    homotopy_noise=False)
        actions = {"a": twisted, "b": twisted}
        return FibrationData(base, fiber, actions)
    base = random_two_level_base(rng)
    actions = {}
    edge_ids = list(base.graph.edges)
    special = rng.choice(edge_ids)
    for eid in edge_ids:
        if eid == special:
            actions[eid] = random_chain_auto(rng, fiber, conj, hgens, h_action={q0: mix})
        elif rng.random() < 0.4:
            actions[eid] = random_chain_auto(rng, fiber, conj, hgens)
    return FibrationData(base, fiber, actions)


# -- dense textbook oracle for page dimensions ----------------------------------


def _dense_kernel(field, rows):
    """Kernel basis of a dense matrix, textbook RREF, no library reuse."""
    m = [[field.normalize(v) for v in row] for row in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if m[i][c] != field.zero:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = field.inv(m[r][c])
        m[r] = [field.mul(inv, x) for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != field.zero:
                f = m[i][c]
                m[i] = [field.sub(a, field.mul(f, b)) for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    pivset = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        vec = [field.zero] * ncols
        vec[free] = field.one
        for i, pc in enumerate(pivots):
            vec[pc] = field.neg(m[i][free])
        basis.append(vec)
    return basis


def _dense_mul(field, rows, vecs):
    """rows (r x c) times column vectors (list of length-c lists)."""
    out = []
    for v in vecs:
        col = []
        for row in rows:
            s = field.zero
            for a, b in zip(row, v):
                s = field.add(s, field.mul(a, b))
            col.append(s)
        out.append(col)
    return out


class DensePageOracle:
    """Page dimensions straight from the subquotient definition, computed
    with dense textbook elimination only (independent of spectower.matrix).
    """

    def __init__(self, field, dims, d_rows, spans, n):
        # dims: degree -> dim C^k; d_rows: degree -> dense rows of d^k;
        # spans: (p, k) -> list of dense column vectors spanning F_p C^k
        self.field = field
        self.dims = dims
        self.d_rows = d_rows
        self.spans = spans
        self.n = n

    @classmethod
    def from_filtered(cls, fc):
        cx = fc.complex
        field = cx.field
        dims = {k: cx.dim(k) for k in cx.degrees()}
        d_rows = {k: cx.d(k).to_dense() for k in cx.degrees()}
        spans = {}
        for p in range(0, fc.n + 2):
            for k in cx.degrees():
                m = fc.span(p, k)
                cols = [[m.get(i, j) for i in range(m.nrows)] for j in range(m.ncols)]
                spans[(p, k)] = cols
        return cls(field, dims, d_rows, spans, fc.n)

    def span(self, p, k):
        if k not in self.dims:
            return []
        if p <= 0:
            n = self.dims[k]
            return [[self.field.one if i == j else self.field.zero for i in range(n)]
                    for j in range(n)]
        if p > self.n:
            return []
        return self.spans.get((p, k), [])

    def _d_apply(self, k, vecs):
        rows = self.d_rows.get(k)
        if rows is None or not rows:
            nxt = self.dims.get(k + 1, 0)
            return [[self.field.zero] * nxt for _ in vecs]
        return _dense_mul(self.field, rows, vecs)

    def zspan(self, r, p, q):
        k = p + q
        u = self.span(p, k)
        if r <= 0 or not u:
            return u
        v = self.span(p + r, k + 1)
        du = self._d_apply(k, u)
        nrows = self.dims.get(k + 1, 0)
        stacked_cols = du + [[self.field.neg(x) for x in col] for col in v]
        rows = [[stacked_cols[j][i] for j in range(len(stacked_cols))] for i in range(nrows)]
        if not rows:
            rows = [[self.field.zero] * len(stacked_cols)] if stacked_cols else []
        kern = _dense_kernel(self.field, rows) if stacked_cols else []
        out = []
        for kv in kern:
            a = kv[: len(u)]
            vec = [self.field.zero] * self.dims.get(k, 0)
            for j, coef in enumerate(a):
                if coef != self.field.zero:
                    for i in range(len(vec)):
                        vec[i] = self.field.add(vec[i], self.field.mul(coef, u[j][i]))
            out.append(vec)
        return out

    def page_dim(self, r, p, q):
        # dim E_r = dim span(Z_r) - dim span(B_r); B_r ⊆ Z_r is a theorem,
        # so ranks subtract directly
        z = self.zspan(r, p, q)
        b = self.zspan(r - 1, p + 1, q - 1)
        lower = self.zspan(r - 1, p - r + 1, q + r - 2)
        b = b + self._d_apply(p + q - 1, lower)
        return self._rank_cols(z) - self._rank_cols(b)

    def _rank_cols(self, cols):
        if not cols:
            return 0
        rows = [[col[i] for col in cols] for i in range(len(cols[0]))]
        return oracle_rank(self.field, rows)

    def page_dims(self, r, degrees):
        out = {}
        for p in range(0, self.n + 1):
            for k in degrees:
                d = self.page_dim(r, p, k - p)
                if d:
                    out[(p, k - p)] = d
        return out
