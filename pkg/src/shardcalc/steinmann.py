"""Wall relations, the semisimple quotient, products, and factorization.

A bipartition (S|T) with both sides of size at least two carries pairs
of shards that differ on exactly one movable key.  Pushing such a pair
up to the one-block support along the merging cut and its reverse gives
a four-term alternating vector; the span of all of these is the
relation subspace, and the quotient of the one-block shard span by it
is the semisimple quotient.  A functional kills every relation exactly
when all its single-cut derivatives are constant on Steinmann classes,
and such functionals over a product support expand uniquely in
blockwise tensor bases.

Relation generation is independent per cut, so batches could run in
parallel; everything here is sequential and all orders are fixed by
shard ids, which keeps outputs reproducible.
"""

from itertools import combinations, product as iter_product

from .arrangement import (
    Shard,
    SupportMismatchError,
    context_for,
    enumerate_shards,
    project,
    steinmann_classes,
)
from .calculus import Functional, InvariantViolation, ShardVector, arrow, forest_derivative
from .exactla import ONE, ZERO, RationalMatrix, kernel_basis, rank, rowspace_reducer
from .forests import Cut, cut_forest, iter_forests
from .ground import (
    GroundMismatchError,
    GroundSet,
    Partition,
    Subset,
    is_r_semisimple,
    iter_bits,
    popcount,
)

_RELATIONS = {}
_QUOTIENTS = {}


class NotSemisimpleError(ValueError):
    """The functional fails a required Steinmann class constancy."""


def _halves(ground):
    """Bipartition masks (S, T), |S|, |T| >= 2, S holding the least label."""
    n = ground.n
    full = ground.full_mask
    out = []
    for size in range(2, n - 1):
        for rest in combinations(range(1, n), size - 1):
            S = 1
            for i in rest:
                S |= 1 << i
            out.append((S, full ^ S))
    out.sort()
    return out


def _adjacent_pairs(Q):
    """Shard pairs over Q differing on exactly one movable key.

    Flipping each non-semisimple key and hashing the result finds the
    pairs in one sweep; each pair appears once, id-sorted.
    """
    ctx = context_for(Q)
    shards = enumerate_shards(Q)
    movable = [
        k
        for k, r in enumerate(ctx.keys)
        if not is_r_semisimple(Q, Q, Subset(Q.ground, r))
    ]
    index = {X.signs: X for X in shards}
    pairs = []
    for X in shards:
        for k in movable:
            flipped = X.signs[:k] + (-X.signs[k],) + X.signs[k + 1 :]
            Y = index.get(flipped)
            if Y is not None and X.id() < Y.id():
                pairs.append((X, Y))
    pairs.sort(key=lambda p: (p[0].id(), p[1].id()))
    return pairs


class RelationSet:
    """Four-term wall relations over the one-block support.

    relations[i] equals X1^V - X1^W + X2^W - X2^V where W reverses the
    cut V and provenance[i] records (V, (X1, X2)); the list is
    deduplicated up to overall sign, in cut-then-pair order.
    """

    __slots__ = ("ground", "relations", "provenance", "_matrix", "_rank")

    def __init__(self, ground, relations, provenance):
        self.ground = ground
        self.relations = tuple(relations)
        self.provenance = tuple(provenance)
        self._matrix = None
        self._rank = None

    def __len__(self):
        return len(self.relations)

    def __iter__(self):
        return iter(self.relations)

    def shard_basis(self):
        """One-block shards sorted by id, the ambient column order."""
        P = Partition.one_block(self.ground)
        return sorted(enumerate_shards(P), key=Shard.id)

    def matrix(self):
        """Relation rows over the id-sorted shard columns."""
        if self._matrix is None:
            M = RationalMatrix([X.id() for X in self.shard_basis()])
            for v in self.relations:
                M.add_row({X.id(): c for X, c in v.items()})
            self._matrix = M
        return self._matrix

    def rank(self):
        if self._rank is None:
            self._rank = rank(self.matrix())
        return self._rank

    def annihilator_basis(self):
        """Functionals over the one-block support killing every relation."""
        P = Partition.one_block(self.ground)
        out = []
        for vec in kernel_basis(self.matrix()):
            values = {X.id(): ZERO for X in enumerate_shards(P)}
            for key, c in vec.items():
                values[key] = c
            out.append(Functional(P, values))
        return out


def steinmann_relations(ground):
    """All four-term wall relations over ground, deduplicated up to sign.

    One candidate per cut V merging a bipartition (S|T) with both sides
    of size at least two and per adjacent pair X1, X2 over (S|T); the
    vector is normalized so its id-least entry is positive before
    deduplication.
    """
    cached = _RELATIONS.get(ground.labels)
    if cached is not None:
        return cached
    full = ground.full_mask
    relations, provenance, seen = [], [], set()
    for S, T in _halves(ground):
        Q = Partition(ground, [S, T])
        V = Cut(ground, full, S)
        W = V.reversed()
        for X1, X2 in _adjacent_pairs(Q):
            vec = (
                ShardVector.basis(arrow(X1, V))
                - ShardVector.basis(arrow(X1, W))
                + ShardVector.basis(arrow(X2, W))
                - ShardVector.basis(arrow(X2, V))
            )
            items = vec.items()
            if not items:
                continue
            if items[0][1] < ZERO:
                vec = -vec
                items = vec.items()
            sig = tuple((X.id(), str(c)) for X, c in items)
            if sig in seen:
                continue
            seen.add(sig)
            relations.append(vec)
            provenance.append((V, (X1, X2)))
    out = RelationSet(ground, relations, provenance)
    _RELATIONS[ground.labels] = out
    return out


class QuotientSpace:
    """One-block shard span modulo the relation span.

    Coset representatives are the unique members supported on the free
    columns of the relation matrix over the id-sorted shard basis.
    """

    __slots__ = ("ground", "relation_set", "shards", "rank", "dim", "_reduce", "_byid")

    def __init__(self, ground):
        self.ground = ground
        self.relation_set = steinmann_relations(ground)
        self.shards = tuple(self.relation_set.shard_basis())
        self.rank = self.relation_set.rank()
        self.dim = len(self.shards) - self.rank
        self._reduce = rowspace_reducer(self.relation_set.matrix())
        self._byid = {X.id(): X for X in self.shards}

    def reduce(self, v):
        """Canonical coset representative of a one-block ShardVector."""
        if isinstance(v, Shard):
            v = ShardVector.basis(v)
        P = Partition.one_block(self.ground)
        if v.support != P or v.ground != self.ground:
            raise SupportMismatchError("vector is not over the one-block support")
        red = self._reduce({X.id(): c for X, c in v.items()})
        return ShardVector(P, {self._byid[key]: c for key, c in red.entries.items()})

    def contains(self, v):
        """True iff v lies in the relation span."""
        return self.reduce(v).is_zero()


def quotient_space(ground):
    cached = _QUOTIENTS.get(ground.labels)
    if cached is None:
        cached = QuotientSpace(ground)
        _QUOTIENTS[ground.labels] = cached
    return cached


def quotient_dim(ground):
    """Number of one-block shards minus the relation rank."""
    return quotient_space(ground).dim


def is_semisimple(f, R=None):
    """True iff f is constant on every Steinmann R-class of its support.

    R defaults to the support itself; coarser R demands constancy on the
    larger classes joined by keys movable relative to R.
    """
    if R is None:
        R = f.support
    for cls in steinmann_classes(f.support, R):
        v = f(cls[0])
        for X in cls[1:]:
            if f(X) != v:
                return False
    return True


def _single_cut_forests(P):
    """One forest per ordered proper split of each block of P."""
    out = []
    for U in P.blocks:
        A = (U - 1) & U
        while A:
            out.append(cut_forest(P, U, A))
            A = (A - 1) & U
    return out


def is_semisimply_differentiable(f, verify=False):
    """True iff f and all its single-cut derivatives are semisimple.

    With verify=True the answer is recomputed from the definition, as
    semisimplicity of forest_derivative(F, f) for every forest from the
    support, and the two routes must agree.
    """
    P = f.support
    fast = is_semisimple(f) and all(
        is_semisimple(forest_derivative(F, f)) for F in _single_cut_forests(P)
    )
    if verify:
        depth = P.ground.n - len(P.blocks)
        slow = all(
            is_semisimple(forest_derivative(F, f)) for F in iter_forests(P, depth)
        )
        if fast is not slow:
            raise InvariantViolation(
                "single-cut route gives %r but the all-forests route gives %r"
                % (fast, slow)
            )
    return fast


def product(P, factors):
    """Blockwise product functional over the common refinement.

    factors[j], taken in P.blocks order, lives over a partition whose
    blocks inside P's j-th block refine it and are singletons elsewhere;
    in the simple case every factor sits on the simple flat of its block
    and the result is a functional over P itself.  The value at a shard
    multiplies the factor values on its projected components.
    """
    factors = list(factors)
    if len(factors) != len(P.blocks):
        raise ValueError(
            "expected %d factors, got %d" % (len(P.blocks), len(factors))
        )
    ground = P.ground
    fine = []
    for T, f in zip(P.blocks, factors):
        Pj = f.support
        if f.ground != ground:
            raise GroundMismatchError("factor ground differs from the partition ground")
        for b in Pj.blocks:
            if b & T:
                if b & ~T:
                    raise SupportMismatchError(
                        "factor block %s straddles %s"
                        % (ground.mask_labels(b), ground.mask_labels(T))
                    )
                fine.append(b)
            elif popcount(b) != 1:
                raise SupportMismatchError(
                    "factor for block %s must be singletons outside it"
                    % ground.mask_labels(T)
                )
    Q = Partition(ground, fine)

    def value(X):
        comps = project(P, X)
        v = ONE
        for f, c in zip(factors, comps):
            v = v * f(c)
        return v

    return Functional.from_callable(Q, value)


def _spread(positions, mask):
    out = 0
    for i in iter_bits(mask):
        out |= 1 << positions[i]
    return out


def simple_flat(P, T):
    """The partition with block T and singletons elsewhere."""
    blocks = [T]
    blocks += [1 << i for i in iter_bits(P.ground.full_mask ^ T)]
    return Partition(P.ground, blocks)


def flat_annihilator_basis(P, T):
    """Annihilator basis over the sub-ground of T, moved to its simple flat.

    Spreading sub-ground masks into T is monotone, so the canonical keys
    of the two supports agree position by position and a sign tuple over
    one is a sign tuple over the other; the move is certified here.
    """
    ground = P.ground
    positions = list(iter_bits(T))
    sub = GroundSet(ground.labels[i] for i in positions)
    sub_ctx = context_for(Partition.one_block(sub))
    flat = simple_flat(P, T)
    flat_ctx = context_for(flat)
    spread_keys = [_spread(positions, r) for r in sub_ctx.keys]
    if spread_keys != list(flat_ctx.keys):
        raise InvariantViolation(
            "canonical keys of %s do not spread onto the simple flat of %s"
            % (sub, ground.mask_labels(T))
        )
    out = []
    for g in steinmann_relations(sub).annihilator_basis():
        values = {}
        for X in enumerate_shards(flat):
            values[X] = g.values[sub_ctx.intern(X.signs)]
        out.append(Functional(flat, values))
    return out


class Factorization:
    """Expansion of a functional in blockwise annihilator bases.

    bases[j] is the fixed basis for the j-th block moved to its simple
    flat; coefficients maps index tuples to nonzero rationals; factors
    holds the recovered factor functionals when the coefficient tensor
    has rank one (scalars folded into the first factor), None otherwise.
    """

    __slots__ = ("partition", "bases", "coefficients", "factors")

    def __init__(self, partition, bases, coefficients, factors):
        self.partition = partition
        self.bases = bases
        self.coefficients = coefficients
        self.factors = factors

    def expand(self):
        """Rebuild the functional from the coefficients."""
        P = self.partition

        def value(X):
            comps = project(P, X)
            total = ZERO
            for alpha, c in self.coefficients.items():
                v = c
                for j, i in enumerate(alpha):
                    v = v * self.bases[j][i](comps[j])
                total += v
            return total

        return Functional.from_callable(P, value)


def _rank_one_factors(bases, coefficients, dims):
    """Factor functionals when the coefficient tensor is an outer product."""
    if not coefficients:
        return None
    pivot = min(coefficients)
    base = coefficients[pivot]
    k = len(dims)
    slices = []
    for j in range(k):
        col = []
        for i in range(dims[j]):
            alpha = pivot[:j] + (i,) + pivot[j + 1 :]
            col.append(coefficients.get(alpha, ZERO))
        slices.append(col)
    scale = base ** (k - 1)
    for alpha in iter_product(*[range(d) for d in dims]):
        lhs = coefficients.get(alpha, ZERO) * scale
        rhs = ONE
        for j, i in enumerate(alpha):
            rhs = rhs * slices[j][i]
        if lhs != rhs:
            return None
    factors = []
    for j in range(k):
        flat = bases[j][0].support
        values = {}
        for X in enumerate_shards(flat):
            v = ZERO
            for i in range(dims[j]):
                if slices[j][i]:
                    v += slices[j][i] * bases[j][i](X)
            values[X] = v / scale if j == 0 else v
        factors.append(Functional(flat, values))
    return factors


def factorize(P, f):
    """Expand a semisimply differentiable f over P in blockwise bases.

    Raises NotSemisimpleError unless f is constant on Steinmann classes
    and every single-cut derivative is as well; the expansion then
    exists and is unique because the blockwise product map is injective
    onto the semisimple span.  The result reports the coefficient
    tensor, the bases, and the recovered factors for pure products.
    """
    if f.support != P or f.ground != P.ground:
        raise SupportMismatchError("functional is not over %s" % P.format())
    if not is_semisimple(f):
        raise NotSemisimpleError(
            "functional is not constant on a Steinmann class of %s" % P.format()
        )
    for F in _single_cut_forests(P):
        if not is_semisimple(forest_derivative(F, f)):
            raise NotSemisimpleError(
                "derivative along %r is not semisimple" % (F.cuts[0],)
            )
    bases = [flat_annihilator_basis(P, T) for T in P.blocks]
    dims = [len(b) for b in bases]
    alphas = list(iter_product(*[range(d) for d in dims]))
    M = RationalMatrix(alphas + ["rhs"])
    for X in enumerate_shards(P):
        comps = project(P, X)
        row = {}
        for alpha in alphas:
            v = ONE
            for j, i in enumerate(alpha):
                v = v * bases[j][i](comps[j])
            if v:
                row[alpha] = v
        fx = f(X)
        if fx:
            row["rhs"] = fx
        M.add_row(row)
    kernel = kernel_basis(M)
    if len(kernel) != 1 or not kernel[0].get("rhs"):
        raise InvariantViolation(
            "tensor expansion failed for a semisimply differentiable functional"
        )
    sol = kernel[0]
    t = sol.get("rhs")
    coefficients = {}
    for alpha in alphas:
        c = sol.get(alpha)
        if c:
            coefficients[alpha] = -c / t
    out = Factorization(P, bases, coefficients, _rank_one_factors(bases, coefficients, dims))
    if out.expand() != f:
        raise InvariantViolation("expansion does not reproduce the functional")
    return out
