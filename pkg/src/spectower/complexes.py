"""Finite cochain complexes over an exact field.

A complex is a finite graded basis together with degree +1 differential
blocks; d^2 = 0 is checked at construction.  Cohomology is computed with
explicit representative cocycles: the canonical kernel basis of d^k is
reduced against the image of d^{k-1}, so repeated runs produce identical
representatives.
"""

from .errors import InvariantError
from .matrix import Matrix, quotient_basis

TENSOR_SEP = "|"


class GradedBasis:
    """Ordered generators (id, degree); ids are opaque unique labels."""

    __slots__ = ("generators", "_by_degree", "_pos")

    def __init__(self, generators):
        gens = tuple((str(g), int(k)) for g, k in generators)
        by_degree = {}
        pos = {}
        for g, k in gens:
            if g in pos:
                raise ValueError("duplicate generator id %r" % g)
            pos[g] = (k, len(by_degree.setdefault(k, [])))
            by_degree[k].append(g)
        self.generators = gens
        self._by_degree = {k: tuple(v) for k, v in by_degree.items()}
        self._pos = pos

    def degrees(self):
        return sorted(self._by_degree)

    def dim(self, k):
        return len(self._by_degree.get(k, ()))

    def gens(self, k):
        return self._by_degree.get(k, ())

    def position(self, gid):
        """(degree, offset within that degree) of a generator id."""
        return self._pos[gid]

    def __contains__(self, gid):
        return gid in self._pos

    def __len__(self):
        return len(self.generators)

    def __eq__(self, other):
        return isinstance(other, GradedBasis) and self.generators == other.generators

    __hash__ = None


class CochainComplex:
    """Graded basis + differential blocks d^k : C^k -> C^{k+1}.

    `differential` maps a degree k to a Matrix of shape dim C^{k+1} x
    dim C^k; missing degrees mean zero.  Degrees may be any integers.
    `display_shift` only relabels degrees in reports, never in math.
    """

    __slots__ = ("field", "basis", "_d", "display_shift", "_cohomology")

    def __init__(self, field, basis, differential, check=True, display_shift=0):
        self.field = field
        self.basis = basis
        d = {}
        for k, m in differential.items():
            if m.is_zero():
                continue
            if m.field != field:
                raise ValueError("differential block in degree %d has wrong field" % k)
            want = (basis.dim(k + 1), basis.dim(k))
            if m.shape != want:
                raise ValueError(
                    "differential block in degree %d has shape %s, expected %s" % (k, m.shape, want)
                )
            d[k] = m
        self._d = d
        self.display_shift = int(display_shift)
        self._cohomology = None
        if check:
            self.check_d_squared()

    def check_d_squared(self):
        for k in sorted(self._d):
            if not (self.d(k + 1) * self.d(k)).is_zero():
                raise InvariantError("d^2 != 0 from degree %d to degree %d" % (k, k + 2))

    @classmethod
    def from_generator_entries(cls, field, generators, entries, check=True, display_shift=0):
        """Build from (src_id, dst_id, scalar) differential entries.

        Each entry must raise degree by exactly one; duplicates accumulate.
        """
        basis = GradedBasis(generators)
        triples = {}
        for src, dst, v in entries:
            if src not in basis or dst not in basis:
                raise ValueError("differential entry references unknown generator %r -> %r" % (src, dst))
            ks, s_off = basis.position(src)
            kd, d_off = basis.position(dst)
            if kd != ks + 1:
                raise InvariantError(
                    "differential entry %r -> %r changes degree by %d, not +1" % (src, dst, kd - ks)
                )
            triples.setdefault(ks, []).append((d_off, s_off, v))
        diff = {
            k: Matrix.from_entries(field, basis.dim(k + 1), basis.dim(k), tr)
            for k, tr in triples.items()
        }
        return cls(field, basis, diff, check=check, display_shift=display_shift)

    def dim(self, k):
        return self.basis.dim(k)

    def degrees(self):
        return self.basis.degrees()

    def d(self, k):
        m = self._d.get(k)
        if m is None:
            return Matrix.zero(self.field, self.dim(k + 1), self.dim(k))
        return m

    def euler_characteristic(self):
        return sum((-1) ** k * self.dim(k) for k in self.degrees())

    def vector(self, coeffs):
        """(degree, column Matrix) for a homogeneous combination {id: scalar}."""
        degs = {self.basis.position(g)[0] for g in coeffs}
        if len(degs) != 1:
            raise ValueError("combination is not homogeneous (degrees %s)" % sorted(degs))
        k = degs.pop()
        ent = {}
        for g, v in coeffs.items():
            ent[(self.basis.position(g)[1], 0)] = v
        return k, Matrix(self.field, self.dim(k), 1, ent)

    def cohomology(self):
        if self._cohomology is None:
            dims, reps = {}, {}
            for k in self.degrees():
                z = self.d(k).kernel()
                b = self.d(k - 1)
                r = quotient_basis(z, b)
                dims[k] = r.ncols
                reps[k] = r
            self._cohomology = CohomologyResult(self, dims, reps)
        return self._cohomology

    def shifted(self, s, check=False):
        """The same complex with every degree raised by s."""
        gens = [(g, k + s) for g, k in self.basis.generators]
        diff = {k + s: m for k, m in self._d.items()}
        return CochainComplex(self.field, GradedBasis(gens), diff, check=check,
                              display_shift=self.display_shift)


class CohomologyResult:
    """Per-degree dimensions and representative cocycles of a complex."""

    __slots__ = ("complex", "_dims", "_reps")

    def __init__(self, complex, dims, reps):
        self.complex = complex
        self._dims = dims
        self._reps = reps

    def degrees(self):
        return sorted(k for k, v in self._dims.items() if v)

    def dim(self, k):
        return self._dims.get(k, 0)

    def dims(self):
        return {k: v for k, v in sorted(self._dims.items()) if v}

    def total_dim(self):
        return sum(self._dims.values())

    def representatives(self, k):
        m = self._reps.get(k)
        if m is None:
            return Matrix.zero(self.complex.field, self.complex.dim(k), 0)
        return m

    def coordinates(self, k, vecs):
        """Coordinates of cocycle columns in the H^k basis, or None.

        None means some column is not a cocycle class expressible here,
        i.e. not in ker d^k + nothing (callers treat that as a bug).
        """
        reps = self.representatives(k)
        b = self.complex.d(k - 1)
        stacked = Matrix.hstack(self.complex.field, reps.nrows, [reps, b])
        x = stacked.solve(vecs)
        if x is None:
            return None
        return x.take_rows(range(reps.ncols))


class ChainMap:
    """Degree-preserving map of complexes commuting with the differentials."""

    __slots__ = ("source", "target", "_blocks")

    def __init__(self, source, target, blocks, check=True):
        if source.field != target.field:
            raise ValueError("chain map between complexes over different fields")
        self.source = source
        self.target = target
        b = {}
        for k, m in blocks.items():
            want = (target.dim(k), source.dim(k))
            if m.shape != want:
                raise ValueError("chain map block in degree %d has shape %s, expected %s" % (k, m.shape, want))
            if not m.is_zero():
                b[k] = m
        self._blocks = b
        if check:
            self.check_commutes()

    def check_commutes(self):
        degrees = set(self._blocks) | set(self.source._d) | set(self.target._d)
        for k in sorted(degrees):
            if self.target.d(k) * self.block(k) != self.block(k + 1) * self.source.d(k):
                raise InvariantError("chain map does not commute with d in degree %d" % k)

    def block(self, k):
        m = self._blocks.get(k)
        if m is None:
            return Matrix.zero(self.source.field, self.target.dim(k), self.source.dim(k))
        return m

    @classmethod
    def identity(cls, complex):
        blocks = {k: Matrix.identity(complex.field, complex.dim(k)) for k in complex.degrees()}
        return cls(complex, complex, blocks, check=False)


def tensor_product(a, b, check=True):
    """Tensor product complex; generator ids are "ga|gb".

    d(x (x) y) = dx (x) y + (-1)^{deg x} x (x) dy, so the product of two
    complexes passes the d^2 = 0 check by construction.
    """
    if a.field != b.field:
        raise ValueError("tensor product of complexes over different fields")
    for g, _ in a.basis.generators:
        if TENSOR_SEP in g:
            raise ValueError("generator id %r contains the tensor separator %r" % (g, TENSOR_SEP))
    gens = []
    for ga, da in a.basis.generators:
        for gb, db in b.basis.generators:
            gens.append((ga + TENSOR_SEP + gb, da + db))
    entries = []
    for k in a.degrees():
        m = a.d(k)
        tgt, src = a.basis.gens(k + 1), a.basis.gens(k)
        for i, j, v in m.entries():
            for gb, _ in b.basis.generators:
                entries.append((src[j] + TENSOR_SEP + gb, tgt[i] + TENSOR_SEP + gb, v))
    for ga, da in a.basis.generators:
        sign = a.field.normalize(-1 if da % 2 else 1)
        for k in b.degrees():
            m = b.d(k)
            tgt, src = b.basis.gens(k + 1), b.basis.gens(k)
            for i, j, v in m.entries():
                entries.append((ga + TENSOR_SEP + src[j], ga + TENSOR_SEP + tgt[i], a.field.mul(sign, v)))
    return CochainComplex.from_generator_entries(a.field, gens, entries, check=check)


def induced_map_on_cohomology(f):
    """Per-degree matrices H^k(source) -> H^k(target) of a chain map.

    Well-definedness is a theorem; an inexpressible image marks an engine
    bug and raises.
    """
    h_src = f.source.cohomology()
    h_tgt = f.target.cohomology()
    out = {}
    for k in sorted(set(h_src.dims()) | set(h_tgt.dims())):
        imgs = f.block(k) * h_src.representatives(k)
        coords = h_tgt.coordinates(k, imgs)
        if coords is None:
            raise InvariantError("image of a cocycle is not a cocycle in degree %d" % k)
        out[k] = coords
    return out
