"""Filtered cochain complexes and their spectral sequence towers.

Conventions
-----------
A filtration is decreasing, C = F_0 ⊇ F_1 ⊇ ... ⊇ F_n ⊇ F_{n+1} = 0,
compatible with the degree +1 differential.  Pages carry differentials
d_r of bidegree (r, -r+1) and satisfy E_{r+1} = H(E_r, d_r); both facts
are re-verified numerically while the tower is built, so a page that
comes back without raising is certified against the classical
subquotient description

    E_r^{p,q} = Z_r^{p,q} / (Z_{r-1}^{p+1,q-1} + d Z_{r-1}^{p-r+1,q+r-2}),
    Z_r^{p,q} = {x in F_p C^{p+q} : dx in F_{p+r} C^{p+q+1}}.

Entry representatives are kept as ambient vectors in C^{p+q} (never as
abstract quotient coordinates), which makes the zig-zag cross-check and
the E_infinity / H comparison direct linear algebra.

Pages stabilize at r = n+1 for a length-n filtration: d_r moves p by r,
so beyond that bound it leaves the support rectangle.  That bound is a
theorem, not a heuristic, and `converge` relies on it.
"""

from .errors import InvariantError, PreconditionError
from .matrix import Matrix, quotient_basis, span_contains

__all__ = [
    "FilteredComplex",
    "SplitFilteredComplex",
    "FilteredChainMap",
    "Page",
    "ConvergenceReport",
    "ZigzagWitness",
    "zigzag_class_and_d",
    "map_of_spectral_sequences",
]


class Page:
    """One page E_r: bigraded dimensions, witnesses, and d_r matrices.

    `reps(p, q)` columns are ambient cocycle-like vectors in C^{p+q}
    representing a basis of E_r^{p,q}; `class_of` expresses any ambient
    element of Z_r^{p,q} in that basis.
    """

    __slots__ = ("r", "field", "_cells", "_diff", "flagged")

    def __init__(self, r, field, cells, diffs, flagged):
        self.r = r
        self.field = field
        self._cells = cells  # (p, q) -> (reps Matrix, denominator span Matrix)
        self._diff = diffs  # (p, q) -> Matrix into cell (p+r, q-r+1)
        self.flagged = flagged  # nonzero cells with q < 0

    def dim(self, p, q):
        cell = self._cells.get((p, q))
        return cell[0].ncols if cell else 0

    def reps(self, p, q):
        cell = self._cells.get((p, q))
        if cell is None:
            raise KeyError("no cell (%d, %d) on page %d" % (p, q, self.r))
        return cell[0]

    def cells(self):
        """Sorted (p, q) with nonzero dimension."""
        return sorted(k for k, cell in self._cells.items() if cell[0].ncols)

    def dims(self):
        return {k: self._cells[k][0].ncols for k in self.cells()}

    def total_dims(self):
        """Total-degree dimensions: k -> sum over p+q = k."""
        out = {}
        for (p, q), cell in self._cells.items():
            d = cell[0].ncols
            if d:
                out[p + q] = out.get(p + q, 0) + d
        return dict(sorted(out.items()))

    def differential(self, p, q):
        """The matrix of d_r : E_r^{p,q} -> E_r^{p+r, q-r+1}."""
        m = self._diff.get((p, q))
        if m is None:
            return Matrix.zero(self.field, self.dim(p + self.r, q - self.r + 1), self.dim(p, q))
        return m

    def has_nonzero_differential(self):
        return any(not m.is_zero() for m in self._diff.values())

    def class_of(self, p, q, vec):
        """Coordinates of an ambient Z_r^{p,q} element in this cell's basis.

        Accepts a column Matrix (or several columns) over C^{p+q}; returns
        None when a column is not in Z_r^{p,q} at all.
        """
        cell = self._cells.get((p, q))
        if cell is None:
            if vec.is_zero():
                return Matrix.zero(vec.field, 0, vec.ncols)
            return None
        reps, denom = cell
        stacked = Matrix.hstack(vec.field, reps.nrows, [reps, denom])
        x = stacked.solve(vec)
        if x is None:
            return None
        return x.take_rows(range(reps.ncols))


class ConvergenceReport:
    """Stabilized tower data plus the direct filtration on cohomology.

    certified is True iff dim E_inf^{p,q} = dim F_pH^{p+q} - dim F_{p+1}H^{p+q}
    for every (p, q); a False value signals an engine bug, never valid input.
    """

    __slots__ = ("r_stop", "einf", "h_filtration", "h_dims", "certified")

    def __init__(self, r_stop, einf, h_filtration, h_dims, certified):
        self.r_stop = r_stop
        self.einf = einf
        self.h_filtration = h_filtration
        self.h_dims = h_dims
        self.certified = certified

    def einf_total_dims(self):
        out = {}
        for (p, q), d in self.einf.items():
            out[p + q] = out.get(p + q, 0) + d
        return dict(sorted(out.items()))


class FilteredComplex:
    """A cochain complex with a decreasing, d-compatible filtration.

    `steps[p-1]` gives per-degree span matrices of F_p C^k for
    p = 1 .. n; F_0 is the whole complex and F_{n+1} = 0.  Pages are
    computed lazily and cached per r (the cache is write-once per key).
    """

    def __init__(self, complex, steps, check=True):
        self.complex = complex
        norm = []
        for step in steps:
            norm.append({int(k): m for k, m in step.items() if m.ncols})
        self.steps = norm
        self._zspans = {}
        self._pages = {}
        self._converged = None
        if check:
            self._check()

    @property
    def n(self):
        """Filtration length: the largest p with F_p possibly nonzero."""
        return len(self.steps)

    def span(self, p, k):
        """A matrix whose columns span F_p C^k inside C^k."""
        dim = self.complex.dim(k)
        if p <= 0:
            return Matrix.identity(self.complex.field, dim)
        if p > self.n:
            return Matrix.zero(self.complex.field, dim, 0)
        m = self.steps[p - 1].get(k)
        if m is None:
            return Matrix.zero(self.complex.field, dim, 0)
        return m

    def _check(self):
        cx = self.complex
        for p in range(1, self.n + 1):
            for k, m in self.steps[p - 1].items():
                if m.field != cx.field:
                    raise InvariantError("filtration span has wrong field at (p=%d, k=%d)" % (p, k))
                if m.nrows != cx.dim(k):
                    raise InvariantError(
                        "filtration span at (p=%d, k=%d) has %d rows, expected %d"
                        % (p, k, m.nrows, cx.dim(k))
                    )
        for p in range(0, self.n + 1):
            degrees = set()
            if p >= 1:
                degrees |= set(self.steps[p - 1])
            if p + 1 <= self.n:
                degrees |= set(self.steps[p])
            for k in sorted(degrees):
                if not span_contains(self.span(p, k), self.span(p + 1, k)):
                    raise InvariantError("filtration is not decreasing at (p=%d, k=%d)" % (p, k))
        for p in range(1, self.n + 1):
            for k in sorted(self.steps[p - 1]):
                img = cx.d(k) * self.span(p, k)
                if not span_contains(self.span(p, k + 1), img):
                    raise InvariantError(
                        "differential does not respect the filtration at (p=%d, k=%d)" % (p, k)
                    )

    # -- subquotient machinery -------------------------------------------

    def _zspan(self, r, p, q):
        """Spanning matrix of Z_r^{p,q} (ambient coordinates in C^{p+q}).

        For r <= 0 this is F_p C^{p+q} itself.  Memoized, since B_r reuses
        the Z_{r-1} spans of neighbouring cells.
        """
        if r < 0:
            r = -1  # all negative levels coincide
        key = (r, p, q)
        hit = self._zspans.get(key)
        if hit is not None:
            return hit
        k = p + q
        u = self.span(p, k)
        if r <= 0:
            out = u
        else:
            v = self.span(p + r, k + 1)
            du = self.complex.d(k) * u
            stacked = Matrix.hstack(u.field, du.nrows, [du, -v])
            ker = stacked.kernel()
            out = u * ker.take_rows(range(u.ncols))
        self._zspans[key] = out
        return out

    def _denominator(self, r, p, q):
        """Span of Z_{r-1}^{p+1,q-1} + d Z_{r-1}^{p-r+1, q+r-2}."""
        k = p + q
        first = self._zspan(r - 1, p + 1, q - 1)
        lower = self._zspan(r - 1, p - r + 1, q + r - 2)
        second = self.complex.d(k - 1) * lower
        return Matrix.hstack(first.field, self.complex.dim(k), [first, second])

    def page(self, r):
        """The page E_r with differentials; verified against E_{r-1} for r >= 1."""
        if r < 0:
            raise ValueError("page index must be >= 0")
        cached = self._pages.get(r)
        if cached is not None:
            return cached
        cx = self.complex
        cells = {}
        flagged = []
        for p in range(0, self.n + 1):
            for k in cx.degrees():
                q = k - p
                z = self._zspan(r, p, q)
                denom = self._denominator(r, p, q)
                reps = quotient_basis(z, denom)
                cells[(p, q)] = (reps, denom)
                if reps.ncols and q < 0:
                    flagged.append((p, q))
        diffs = {}
        for (p, q), (reps, _) in cells.items():
            if not reps.ncols:
                continue
            tp, tq = p + r, q - r + 1
            target = cells.get((tp, tq))
            if target is None or not target[0].ncols:
                continue
            imgs = cx.d(p + q) * reps
            treps, tdenom = target
            stacked = Matrix.hstack(cx.field, treps.nrows, [treps, tdenom])
            x = stacked.solve(imgs)
            if x is None:
                raise InvariantError(
                    "d_%d image escaped its page cell at (p=%d, q=%d): engine bug" % (r, p, q)
                )
            m = x.take_rows(range(treps.ncols))
            if not m.is_zero():
                diffs[(p, q)] = m
        page = Page(r, cx.field, cells, diffs, tuple(sorted(flagged)))
        self._verify_page(page)
        self._pages[r] = page
        return page

    def _verify_page(self, page):
        """Certify E_r = H(E_{r-1}, d_{r-1}) dimensionwise and d_r o d_r = 0."""
        r = page.r
        for (p, q) in page.cells():
            out = page.differential(p, q)
            nxt = page.differential(p + r, q - r + 1)
            if not (nxt * out).is_zero():
                raise InvariantError("d_%d o d_%d != 0 at (p=%d, q=%d): engine bug" % (r, r, p, q))
        if r == 0:
            return
        prev = self.page(r - 1)
        s = r - 1
        keys = set(page._cells) | set(prev._cells)
        for (p, q) in keys:
            out_rank = prev.differential(p, q).rank()
            in_rank = prev.differential(p - s, q + s - 1).rank()
            expect = prev.dim(p, q) - out_rank - in_rank
            if page.dim(p, q) != expect:
                raise InvariantError(
                    "page %d cell (%d, %d) has dim %d but H(E_%d, d_%d) gives %d: engine bug"
                    % (r, p, q, page.dim(p, q), s, s, expect)
                )

    # -- convergence -------------------------------------------------------

    def h_filtration_dim(self, p, k):
        """dim F_p H^k, computed directly as the image of H(F_p C) in H(C)."""
        zf = self._zspan(self.n + 1 - p, p, k - p)
        b = self.complex.d(k - 1)
        stacked = Matrix.hstack(b.field, self.complex.dim(k), [zf, b])
        return stacked.rank() - b.rank()

    def converge(self):
        """Iterate pages to stabilization and certify E_inf against F_pH."""
        if self._converged is not None:
            return self._converged
        rmax = self.n + 1
        r_stop = 0
        for r in range(0, rmax + 1):
            if self.page(r).has_nonzero_differential():
                r_stop = r + 1
        last = self.page(rmax)
        einf = last.dims()
        h = self.complex.cohomology()
        h_dims = h.dims()
        h_filt = {}
        for p in range(0, self.n + 2):
            for k in self.complex.degrees():
                d = self.h_filtration_dim(p, k)
                if d:
                    h_filt[(p, k)] = d
        certified = True
        for p in range(0, self.n + 1):
            for k in self.complex.degrees():
                graded = h_filt.get((p, k), 0) - h_filt.get((p + 1, k), 0)
                if einf.get((p, k - p), 0) != graded:
                    certified = False
        for k in set(h_dims) | {kk for _, kk in h_filt}:
            if h_filt.get((0, k), 0) != h_dims.get(k, 0):
                certified = False
        self._converged = ConvergenceReport(r_stop, einf, h_filt, h_dims, certified)
        return self._converged


class SplitFilteredComplex:
    """A complex split as C^k = ⊕_p C_p^k with a block-nondecreasing d.

    `blocks` maps generator ids to their p-index.  The induced filtration
    F_p = span of blocks >= p embeds this canonically into the general
    FilteredComplex machinery; the zig-zag operations below exploit the
    splitting directly.
    """

    def __init__(self, complex, blocks, check=True):
        self.complex = complex
        self.blocks = {g: int(p) for g, p in blocks.items()}
        self._filtered = None
        if check:
            self._check()

    def _check(self):
        cx = self.complex
        for g, _ in cx.basis.generators:
            if g not in self.blocks:
                raise InvariantError("generator %r has no block index" % g)
            if self.blocks[g] < 0:
                raise InvariantError("generator %r has negative block index" % g)
        for k in cx.degrees():
            src = cx.basis.gens(k)
            dst = cx.basis.gens(k + 1)
            for i, j, _ in cx.d(k).entries():
                shift = self.blocks[dst[i]] - self.blocks[src[j]]
                if shift < 0:
                    raise InvariantError(
                        "differential entry %r -> %r lowers the block index by %d"
                        % (src[j], dst[i], -shift)
                    )

    @property
    def n(self):
        return max(self.blocks.values(), default=0)

    def block_of(self, gid):
        return self.blocks[gid]

    def block_indices(self, k, p):
        """Coordinate positions of block-p generators inside C^k."""
        return [i for i, g in enumerate(self.complex.basis.gens(k)) if self.blocks[g] == p]

    def component_matrix(self, k, p, r):
        """The block d_r : C_p^k -> C_{p+r}^{k+1} of the differential."""
        rows = self.block_indices(k + 1, p + r)
        cols = self.block_indices(k, p)
        return self.complex.d(k).submatrix(rows, cols)

    def to_filtered(self):
        """The canonical embedding into the general filtered form (cached)."""
        if self._filtered is None:
            cx = self.complex
            steps = []
            for p in range(1, self.n + 1):
                step = {}
                for k in cx.degrees():
                    idx = [i for i, g in enumerate(cx.basis.gens(k)) if self.blocks[g] >= p]
                    if idx:
                        step[k] = Matrix.identity(cx.field, cx.dim(k)).take_columns(idx)
                steps.append(step)
            self._filtered = FilteredComplex(cx, steps, check=False)
        return self._filtered

    def page(self, r):
        return self.to_filtered().page(r)

    def converge(self):
        return self.to_filtered().converge()


class ZigzagWitness:
    """Result of a successful zig-zag lift of a single-block element.

    chain = alpha + beta_{p+1} + ... + beta_{p+r-1} is an ambient vector
    with d(chain) in F_{p+r}; image is the block-(p+r) component of
    d(chain), which represents d_r[alpha].
    """

    __slots__ = ("p", "degree", "r", "chain", "image")

    def __init__(self, p, degree, r, chain, image):
        self.p = p
        self.degree = degree
        self.r = r
        self.chain = chain
        self.image = image


def zigzag_class_and_d(sfc, r, degree, alpha):
    """Lift a block-p element to an E_r class and read off d_r, or None.

    alpha is a column over C^degree supported in one block p.  The lift
    solves the staircase system: for j = 0..r-1 the block p+j of
    d(alpha + sum beta) must vanish.  Returns None when the system has no
    solution, i.e. alpha defines no class on page r.
    """
    if r < 1:
        raise ValueError("zig-zag lifting needs r >= 1")
    cx = sfc.complex
    k = degree
    if alpha.shape != (cx.dim(k), 1):
        raise ValueError("alpha has shape %s, expected a column over C^%d" % (alpha.shape, k))
    gens = cx.basis.gens(k)
    support = {sfc.blocks[gens[i]] for (i, _), v in alpha._e.items()}
    if len(support) > 1:
        raise PreconditionError("alpha is supported in blocks %s, expected one" % sorted(support))
    if not support:
        raise PreconditionError("alpha is zero; it defines no leading block")
    p = support.pop()

    unknown_cols = []
    col_spans = []
    for i in range(1, r):
        idx = sfc.block_indices(k, p + i)
        unknown_cols.append(idx)
        col_spans.append(len(idx))
    rows_rhs = []
    row_blocks = []
    for j in range(r):
        ridx = sfc.block_indices(k + 1, p + j)
        row_blocks.append(ridx)
        rows_rhs.append(ridx)

    f = cx.field
    d = cx.d(k)
    blocks = []
    for j in range(r):
        row = []
        for i in range(1, r):
            if i <= j:
                row.append(d.submatrix(row_blocks[j], unknown_cols[i - 1]))
            else:
                row.append(Matrix.zero(f, len(row_blocks[j]), col_spans[i - 1]))
        blocks.append(row)
    width = sum(col_spans)
    system = Matrix.vstack(
        f,
        width,
        [Matrix.hstack(f, len(row_blocks[j]), blocks[j]) for j in range(r)],
    ) if width else Matrix.zero(f, sum(len(rb) for rb in row_blocks), 0)

    dalpha = d * alpha
    rhs = Matrix.vstack(
        f, 1, [(-dalpha).take_rows(row_blocks[j]) for j in range(r)]
    )
    sol = system.solve(rhs)
    if sol is None:
        return None

    chain = alpha
    off = 0
    for i in range(1, r):
        idx = unknown_cols[i - 1]
        ent = {}
        for t, pos in enumerate(idx):
            v = sol.get(off + t, 0)
            if v != f.zero:
                ent[(pos, 0)] = v
        chain = chain + Matrix(f, cx.dim(k), 1, ent, _normalized=True)
        off += len(idx)
    dchain = d * chain
    img_idx = set(sfc.block_indices(k + 1, p + r))
    ent = {key: v for key, v in dchain._e.items() if key[0] in img_idx}
    image = Matrix(f, cx.dim(k + 1), 1, ent, _normalized=True)
    # blocks p..p+r-1 of d(chain) vanish by construction; check it anyway
    for j in range(r):
        for pos in row_blocks[j]:
            if (pos, 0) in dchain._e:
                raise InvariantError("zig-zag system solution failed to clear block %d" % (p + j))
    return ZigzagWitness(p, k, r, chain, image)


class FilteredChainMap:
    """A chain map sending F_p(source) into F_p(target) for every p."""

    def __init__(self, chain_map, source, target, check=True):
        self.chain_map = chain_map
        self.source = source
        self.target = target
        if check:
            self._check()

    def _check(self):
        f = self.chain_map
        nmax = max(self.source.n, self.target.n)
        for p in range(1, nmax + 1):
            for k in f.source.degrees():
                src = self.source.span(p, k)
                if not src.ncols:
                    continue
                img = f.block(k) * src
                if not span_contains(self.target.span(p, k), img):
                    raise PreconditionError(
                        "chain map does not preserve the filtration at (p=%d, k=%d)" % (p, k)
                    )


def map_of_spectral_sequences(fmap):
    """Per-page, per-cell matrices induced by a filtration-preserving map.

    Returns {r: {(p, q): Matrix}} for r = 0 .. stabilization bound; every
    square against d_r is verified before returning.
    """
    f = fmap.chain_map
    src, tgt = fmap.source, fmap.target
    rmax = max(src.n, tgt.n) + 1
    out = {}
    for r in range(0, rmax + 1):
        ps, pt = src.page(r), tgt.page(r)
        level = {}
        for (p, q) in ps.cells():
            imgs = f.block(p + q) * ps.reps(p, q)
            coords = pt.class_of(p, q, imgs)
            if coords is None:
                raise InvariantError(
                    "induced map escaped the target page at r=%d, (p=%d, q=%d)" % (r, p, q)
                )
            level[(p, q)] = coords
        for (p, q), m in level.items():
            tcell = (p + r, q - r + 1)
            # commuting square: d_r^tgt o f = f o d_r^src
            lhs = pt.differential(p, q) * m
            rhs_m = level.get(tcell)
            if rhs_m is None:
                rhs = Matrix.zero(f.source.field, pt.dim(*tcell), ps.dim(p, q))
            else:
                rhs = rhs_m * ps.differential(p, q)
            if lhs != rhs:
                raise InvariantError(
                    "induced page map does not commute with d_%d at (p=%d, q=%d)" % (r, p, q)
                )
        out[r] = level
    return out
