"""Arrows, dual forest derivatives, and forest derivatives of functionals.

A cut V splitting a block of P into C and D sends a shard X with support Q
(the fine side) to the shard X^V with support P lying on the positive side
of the new wall; the dual derivative of a cut is the difference X^V - X^Vbar,
and a layered forest derives cut by cut, innermost (last-listed) cut first.
Functionals on the coarse side pull back along the dual derivative.
"""

from .arrangement import Shard, SupportContext, context_for, enumerate_shards, shard_from_signs
from .exactla import ONE, ZERO, SparseVector, rat, rat_str
from .forests import BoundaryMismatchError, antisymmetrize
from .ground import GroundMismatchError, Partition


class InvariantViolation(AssertionError):
    """Two evaluation routes that must agree did not."""


def _merged_source(Q, V):
    # coarse partition on the far side of V: C and D fused back together
    if V.ground != Q.ground:
        raise GroundMismatchError("cut over a different ground set")
    if V.left not in Q.blocks or V.right not in Q.blocks:
        raise BoundaryMismatchError(
            "cut %r does not split a block of %s into two of its blocks"
            % (V, Q.format())
        )
    blocks = [b for b in Q.blocks if b != V.left and b != V.right]
    blocks.append(V.parent)
    return Partition(Q.ground, blocks)


def arrow(X, V, certify=False):
    """X^V: the shard one level coarser, positive toward V's left part.

    Per canonical key of the coarse support: the key representing the new
    wall is + when it reduces to C (and - when to D); every other key class
    misses {C, D, empty} mod the fine support, so its sign is inherited.
    """
    Q = X.support
    P = _merged_source(Q, V)
    ctx = context_for(P)
    out = []
    for rep in ctx.keys:
        if rep == V.left:
            out.append("+")
        elif rep == V.right:
            out.append("-")
        else:
            s = X.sign_of(rep)
            if s == 0:
                raise InvariantViolation(
                    "key %s vanished on the fine support" % Q.ground.mask_labels(rep)
                )
            out.append("+" if s > 0 else "-")
    return shard_from_signs(P, "".join(out), certify=certify)


class ShardVector:
    """Formal rational combination of shards sharing one support partition."""

    __slots__ = ("ctx", "vec")

    def __init__(self, support, entries=None):
        ctx = support if isinstance(support, SupportContext) else context_for(support)
        clean = {}
        for X, c in (entries or {}).items():
            if X.support != ctx.P or X.ground != ctx.ground:
                raise BoundaryMismatchError("basis shard has a different support")
            c = rat(c)
            if c != ZERO:
                clean[ctx.intern(X.signs)] = c
        self.ctx = ctx
        self.vec = SparseVector(clean)

    @classmethod
    def zero(cls, support):
        return cls(support)

    @classmethod
    def basis(cls, X, coeff=ONE):
        return cls(X.ctx, {X: coeff})

    @property
    def support(self):
        return self.ctx.P

    @property
    def ground(self):
        return self.ctx.ground

    def coefficient(self, X):
        return self.vec.entries.get(X, ZERO)

    def items(self):
        return sorted(self.vec.entries.items(), key=lambda kv: kv[0].id())

    def is_zero(self):
        return not self.vec.entries

    def __len__(self):
        return len(self.vec.entries)

    def __iter__(self):
        return iter(self.items())

    def _wrap(self, vec):
        out = ShardVector(self.ctx)
        out.vec = vec
        return out

    def __add__(self, other):
        if not isinstance(other, ShardVector) or other.ctx is not self.ctx:
            raise BoundaryMismatchError("vectors over different supports")
        return self._wrap(self.vec + other.vec)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._wrap(-self.vec)

    def scale(self, c):
        return self._wrap(self.vec.scale(rat(c)))

    def __eq__(self, other):
        return (
            isinstance(other, ShardVector)
            and self.ctx.P == other.ctx.P
            and self.ctx.ground == other.ctx.ground
            and self.vec == other.vec
        )

    def __hash__(self):
        return hash((self.ctx.ground.labels, self.ctx.P.blocks, tuple(self.items())))

    def to_json_obj(self):
        return {
            "kind": "shard_vector",
            "support": self.ctx.P.format(),
            "values": {X.id(): rat_str(c) for X, c in self.items()},
        }

    def __repr__(self):
        if self.is_zero():
            return "ShardVector(%s, 0)" % self.ctx.P.format()
        bits = ["%s*%s" % (rat_str(c), X.id()) for X, c in self.items()]
        return "ShardVector(%s, %s)" % (self.ctx.P.format(), " + ".join(bits))


class Functional:
    """Total rational-valued map on the shards of one support partition."""

    __slots__ = ("ctx", "values")

    def __init__(self, support, values):
        ctx = support if isinstance(support, SupportContext) else context_for(support)
        basis = enumerate_shards(ctx.P)
        table = {}
        for k, c in values.items():
            X = shard_from_signs(ctx.P, k) if isinstance(k, str) else ctx.intern(k.signs)
            table[X] = rat(c)
        if set(table) != set(basis):
            raise ValueError(
                "functional must assign a value to each of the %d shards"
                % len(basis)
            )
        self.ctx = ctx
        self.values = table

    @classmethod
    def zero(cls, support):
        ctx = support if isinstance(support, SupportContext) else context_for(support)
        return cls(ctx, {X: ZERO for X in enumerate_shards(ctx.P)})

    @classmethod
    def indicator(cls, X):
        return cls(X.ctx, {Y: (ONE if Y == X else ZERO) for Y in enumerate_shards(X.support)})

    @classmethod
    def from_callable(cls, support, fn):
        ctx = support if isinstance(support, SupportContext) else context_for(support)
        return cls(ctx, {X: fn(X) for X in enumerate_shards(ctx.P)})

    @property
    def support(self):
        return self.ctx.P

    @property
    def ground(self):
        return self.ctx.ground

    def __call__(self, X):
        if X.support != self.ctx.P or X.ground != self.ctx.ground:
            raise BoundaryMismatchError("shard has a different support")
        return self.values[self.ctx.intern(X.signs)]

    def evaluate_vector(self, v):
        if v.support != self.ctx.P or v.ground != self.ctx.ground:
            raise BoundaryMismatchError("vector over a different support")
        total = ZERO
        for X, c in v.items():
            total += c * self.values[X]
        return total

    def items(self):
        return [(X, self.values[X]) for X in enumerate_shards(self.ctx.P)]

    def __eq__(self, other):
        return (
            isinstance(other, Functional)
            and self.ctx.P == other.ctx.P
            and self.ctx.ground == other.ctx.ground
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.ctx.ground.labels, self.ctx.P.blocks, tuple(self.items())))

    def to_json_obj(self):
        return {
            "kind": "functional",
            "support": self.ctx.P.format(),
            "values": {X.id(): rat_str(c) for X, c in self.items()},
        }

    def __repr__(self):
        return "Functional(%s, %d shards)" % (self.ctx.P.format(), len(self.values))


def random_functional(support, seed, span=9):
    """Deterministic pseudorandom functional; integer values in [-span, span]."""
    import random

    ctx = support if isinstance(support, SupportContext) else context_for(support)
    rng = random.Random(seed)
    return Functional(
        ctx, {X: rat(rng.randint(-span, span)) for X in enumerate_shards(ctx.P)}
    )


def _dual_cut(v, V, certify):
    coarse = context_for(_merged_source(v.support, V))
    entries = {}
    rev = V.reversed()
    for X, c in v.items():
        for Y, s in ((arrow(X, V, certify), c), (arrow(X, rev, certify), -c)):
            entries[Y] = entries.get(Y, ZERO) + s
    return ShardVector(coarse, entries)


def dual_forest_derivative(F, v, certify=False):
    """Push a shard vector from target(F) up to source(F).

    Evaluates twice: cut by cut (innermost first), and as the signed sum of
    arrow chains over every left/right switch of F.  The two totals must
    match; disagreement raises InvariantViolation.
    """
    if isinstance(v, Shard):
        v = ShardVector.basis(v)
    if v.support != F.target or v.ground != F.ground:
        raise BoundaryMismatchError(
            "vector support %s is not the forest target %s"
            % (v.support.format(), F.target.format())
        )
    out = v
    for V in reversed(F.cuts):
        out = _dual_cut(out, V, certify)

    acc = {}
    for sign, G in antisymmetrize(F):
        for X, c in v.items():
            Y = X
            for V in reversed(G.cuts):
                Y = arrow(Y, V)
            acc[Y] = acc.get(Y, ZERO) + (c if sign > 0 else -c)
    alt = ShardVector(F.source, acc)
    if out != alt:
        raise InvariantViolation(
            "cut-by-cut and antisymmetrized evaluations disagree for %r" % (F,)
        )
    return out


def forest_derivative(F, f, certify=False):
    """The functional on target(F) given by X -> f(dual derivative of X)."""
    if f.support != F.source or f.ground != F.ground:
        raise BoundaryMismatchError(
            "functional support %s is not the forest source %s"
            % (f.support.format(), F.source.format())
        )
    fine = context_for(F.target)
    values = {}
    for X in enumerate_shards(fine.P):
        values[X] = f.evaluate_vector(dual_forest_derivative(F, X, certify))
    return Functional(fine, values)
