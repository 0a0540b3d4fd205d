"""Shards of the adjoint braid arrangement.

Fix a partition P of the ground set; its flat is the space of points whose
coordinates sum to zero on every block.  Subset-sum functionals lambda_E
cut the flat into relatively open faces; a face spanning the whole flat is
a shard with support P, stored as one sign per canonical key.

A canonical key is the numerically smaller bitmask of the pair
{reduction(P, E), reduction(P, I-E)}; every subset E that is not a union
of blocks maps to exactly one key with an orientation, and lambda_E on the
flat equals the orientation times the key's functional.

Enumeration walks the chamber graph: flip one key sign at a time, screen
candidates by the superadditivity test, try cheap exactly-verified probe
points, and fall back to the exact strict-feasibility LP, which is the
sole authority on infeasibility.  A naive mode LP-tests all 2^#keys
patterns as an independent oracle for small cases.
"""

import random

from . import exactla
from ._backend import kernel
from .exactla import ONE, ZERO, Rational, RationalMatrix, strictly_feasible
from .ground import (
    GroundMismatchError,
    NotFinerError,
    Partition,
    Subset,
    is_finer,
    is_r_semisimple,
    iter_bits,
    popcount,
    reduction_mask,
)


class OnHyperplaneError(ValueError):
    """The point lies on a hyperplane of the arrangement under its flat."""

    def __init__(self, subset):
        self.subset = subset
        super().__init__("point lies on the hyperplane of %r" % (subset,))


class NotInFlatError(ValueError):
    """The point has a nonzero block sum, so it is outside the flat."""


class SupportMismatchError(ValueError):
    """Shards were expected to share a support partition."""


class SupportContext:
    """Cached per-support data: keys, lookup tables, LP scaffold, memo."""

    def __init__(self, P):
        self.P = P
        self.ground = P.ground
        self.full = P.ground.full_mask
        self.n = P.ground.n
        keys = set()
        for e in range(1, self.full):
            a = reduction_mask(P, e)
            if a == 0:
                continue
            b = reduction_mask(P, self.full ^ e)
            keys.add(min(a, b))
        self.keys = sorted(keys)
        self.K = len(self.keys)
        self.key_index = {r: k for k, r in enumerate(self.keys)}
        self._key_subsets = [Subset(self.ground, r) for r in self.keys]
        self._quads = None
        self._normals = None
        self._memo = {}  # sign tuple -> witness coord tuple or None
        self._interned = {}
        self._enumerated = None
        self._block_of = [P.block_of(i) for i in range(self.n)]

    def key_subsets(self):
        return list(self._key_subsets)

    def lookup(self, mask):
        """Map a subset mask to (key index, orientation); (-1, 0) if zero."""
        a = reduction_mask(self.P, mask)
        if a == 0:
            return -1, 0
        b = reduction_mask(self.P, self.full ^ mask)
        if a <= b:
            return self.key_index[a], 1
        return self.key_index[b], -1

    def intern(self, signs):
        shard = self._interned.get(signs)
        if shard is None:
            shard = Shard(self, signs)
            self._interned[signs] = shard
        return shard

    # ---- geometry helpers ----

    def quads(self):
        """Superadditivity screen table; see kernel.quick_check."""
        if self._quads is not None:
            return self._quads
        oriented = []
        for k, r in enumerate(self.keys):
            oriented.append((r, k, 1))
            oriented.append((self.full ^ r, k, -1))
        quads = set()
        for i in range(len(oriented)):
            ma, ia, oa = oriented[i]
            for j in range(i + 1, len(oriented)):
                mb, ib, ob = oriented[j]
                inter = ma & mb
                union = ma | mb
                if inter == ma or inter == mb:
                    continue  # containment carries no pruning power
                if inter == 0 and union == self.full:
                    continue  # complementary pair, identity is 0 = 0
                iu, ou = self.lookup(union) if union != self.full else (-1, 0)
                iv, ov = self.lookup(inter) if inter != 0 else (-1, 0)
                quads.add((ia, oa, ib, ob, iu, ou, iv, ov))
        self._quads = sorted(quads)
        return self._quads

    def normals(self):
        """Per key: flat-projected normal vector g and its squared norm."""
        if self._normals is not None:
            return self._normals
        out = []
        for r in self.keys:
            g = []
            for i in range(self.n):
                b = self._block_of[i]
                inside = popcount(r & b)
                val = Rational(int(bool(r >> i & 1)) * popcount(b) - inside, popcount(b))
                g.append(val)
            gg = sum((q * q for q in g), ZERO)
            out.append((tuple(g), gg))
        self._normals = out
        return out


_context_cache = {}


def context_for(P):
    key = (P.ground.labels, P.blocks)
    ctx = _context_cache.get(key)
    if ctx is None:
        ctx = SupportContext(P)
        _context_cache[key] = ctx
    return ctx


def canonical_keys(P):
    """The canonical key subsets of a support partition, in storage order."""
    return context_for(P).key_subsets()


class Shard:
    """A face of the arrangement spanning the flat of its support partition.

    Identity is (ground, support, signs); the cached witness point is
    excluded from equality.
    """

    __slots__ = ("ctx", "signs", "witness")

    def __init__(self, ctx, signs):
        signs = tuple(signs)
        if len(signs) != ctx.K or any(s not in (1, -1) for s in signs):
            raise ValueError("need one sign of +-1 per canonical key")
        self.ctx = ctx
        self.signs = signs
        self.witness = None

    @property
    def support(self):
        return self.ctx.P

    @property
    def ground(self):
        return self.ctx.ground

    def sign_of(self, E):
        """Sign of lambda_E on this shard: +1, -1, or 0 when E = 0 mod P."""
        mask = E.mask if isinstance(E, Subset) else int(E)
        idx, orient = self.ctx.lookup(mask)
        if idx < 0:
            return 0
        return orient * self.signs[idx]

    def sign_map(self):
        """Canonical key mask -> sign, in storage order."""
        return dict(zip(self.ctx.keys, self.signs))

    def id(self):
        """Sign string over the canonical keys, e.g. '++-+'."""
        return "".join("+" if s > 0 else "-" for s in self.signs)

    def to_json_obj(self):
        g = self.ctx.ground
        return {
            "support": self.ctx.P.format(),
            "signs": {
                g.mask_labels(r): ("+" if s > 0 else "-")
                for r, s in zip(self.ctx.keys, self.signs)
            },
        }

    def __eq__(self, other):
        return (
            isinstance(other, Shard)
            and self.ctx.ground == other.ctx.ground
            and self.ctx.P.blocks == other.ctx.P.blocks
            and self.signs == other.signs
        )

    def __hash__(self):
        return hash((self.ctx.ground.labels, self.ctx.P.blocks, self.signs))

    def __repr__(self):
        return "Shard(%s, %s)" % (self.ctx.P.format(), self.id() or "<point>")


def _coords_to_nums(coords):
    """Common-denominator integer numerators of a rational coordinate tuple."""
    lcm = 1
    for q in coords:
        d = int(q.denominator)
        g = _gcd(lcm, d)
        lcm = lcm // g * d
    return [int(q.numerator) * (lcm // int(q.denominator)) for q in coords]


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _key_signs_at(ctx, coords):
    """Exact sign of every key functional at a rational point."""
    return kernel.sign_eval(ctx.keys, _coords_to_nums(coords))


def shard_from_point(P, point):
    """The shard whose sign data is the signature of a generic flat point.

    point: rational coordinates in ground order.  Raises NotInFlatError if
    some block sum is nonzero, OnHyperplaneError (carrying the subset) if
    the point lies on a hyperplane live under the flat.
    """
    ctx = context_for(P)
    coords = tuple(exactla.rat(x) for x in point)
    if len(coords) != ctx.n:
        raise ValueError("point has wrong dimension")
    nums = _coords_to_nums(coords)
    for b in P.blocks:
        if sum(nums[i] for i in iter_bits(b)):
            raise NotInFlatError(
                "block %s has nonzero sum" % ctx.ground.mask_labels(b)
            )
    signs = kernel.sign_eval(ctx.keys, nums)
    for r, s in zip(ctx.keys, signs):
        if s == 0:
            raise OnHyperplaneError(Subset(ctx.ground, r))
    shard = ctx.intern(tuple(signs))
    if shard.witness is None:
        shard.witness = coords
    return shard


def shard_from_signs(P, signs, certify=False):
    """Build a shard from sign data without enumeration.

    signs: dict mapping canonical key masks/Subsets/label strings to +-1 or
    '+'/'-', or a '+-' string over the storage order.  certify=True runs
    the feasibility cascade and raises if the sign pattern is empty.
    """
    ctx = context_for(P)
    if isinstance(signs, str):
        if len(signs) != ctx.K or any(c not in "+-" for c in signs):
            raise ValueError("bad sign string %r" % signs)
        tup = tuple(1 if c == "+" else -1 for c in signs)
    else:
        by_mask = {}
        for k, v in signs.items():
            if isinstance(k, Subset):
                mask = k.mask
            elif isinstance(k, str):
                mask = ctx.ground.parse_block(k)
            else:
                mask = int(k)
            idx, orient = ctx.lookup(mask)
            if idx < 0:
                raise ValueError("subset is a union of blocks, carries no sign")
            s = {1: 1, -1: -1, "+": 1, "-": -1}[v]
            by_mask[idx] = orient * s
        if sorted(by_mask) != list(range(ctx.K)):
            raise ValueError("signs must cover every canonical key exactly once")
        tup = tuple(by_mask[k] for k in range(ctx.K))
    if certify and _feasible(ctx, tup) is None:
        raise ValueError("sign pattern %s is not realizable" % repr(tup))
    shard = ctx.intern(tup)
    if certify and shard.witness is None:
        shard.witness = _feasible(ctx, tup)
    return shard


def _lp_witness(ctx, signs):
    """Exact LP: coordinates realizing the given key signs inside the flat."""
    cols = list(range(ctx.n))
    rows = []
    lp_signs = []
    for r, s in zip(ctx.keys, signs):
        rows.append({i: ONE for i in iter_bits(r)})
        lp_signs.append("+" if s > 0 else "-")
    for b in ctx.P.blocks:
        rows.append({i: ONE for i in iter_bits(b)})
        lp_signs.append("0")
    vec = strictly_feasible(RationalMatrix(cols, rows), lp_signs)
    if vec is None:
        return None
    return tuple(vec.get(i) for i in range(ctx.n))


def _probe_candidates(ctx, signs, hint):
    """Cheap rational points likely to realize a flipped sign pattern."""
    if hint is None:
        return
    coords, flipped = hint
    g, gg = ctx.normals()[flipped]
    lam = sum((coords[i] for i in iter_bits(ctx.keys[flipped])), ZERO)
    if lam == 0 or gg == 0:
        return
    step = lam / gg
    for theta_num, theta_den in ((2, 1), (3, 2), (9, 8), (17, 16)):
        theta = Rational(theta_num, theta_den)
        yield tuple(
            coords[i] - theta * step * g[i] for i in range(ctx.n)
        )


def _feasible(ctx, signs, hint=None):
    """Witness coordinates for a sign pattern, or None; memoized, exact.

    Order: memo, superadditivity screen, probe points (each verified by
    exact sign evaluation), then the LP as the final authority.
    """
    if signs in ctx._memo:
        return ctx._memo[signs]
    if ctx.K and not kernel.quick_check(list(signs), ctx.quads()):
        ctx._memo[signs] = None
        return None
    for coords in _probe_candidates(ctx, signs, hint):
        if tuple(_key_signs_at(ctx, coords)) == signs:
            ctx._memo[signs] = coords
            return coords
    coords = _lp_witness(ctx, signs)
    ctx._memo[signs] = coords
    return coords


def _generic_flat_point(ctx, seed):
    """Fixed-seed rational point of the flat avoiding all key hyperplanes."""
    rnd = random.Random("%s|%s|%s" % (ctx.ground.labels, ctx.P.blocks, seed))
    span = 9
    for _ in range(200):
        raw = [rnd.randint(-span, span) for _ in range(ctx.n)]
        coords = []
        for i in range(ctx.n):
            b = ctx._block_of[i]
            total = sum(raw[j] for j in iter_bits(b))
            coords.append(Rational(raw[i] * popcount(b) - total, popcount(b)))
        if all(s != 0 for s in _key_signs_at(ctx, coords)):
            return tuple(coords)
        span *= 2
    raise AssertionError("could not sample a generic point of the flat")


def enumerate_shards(P, method="bfs", seed=0):
    """All shards with support exactly P, sorted by sign string.

    method='bfs' (default) walks the chamber graph from a generic seed
    point.  method='naive' LP-tests every sign pattern independently; it
    is the oracle for small key counts and refuses K > 12.
    """
    ctx = context_for(P)
    if ctx.K == 0:
        shard = ctx.intern(())
        if shard.witness is None:
            shard.witness = (ZERO,) * ctx.n
        return [shard]
    if method == "naive":
        if ctx.K > 12:
            raise ValueError("naive enumeration is limited to 12 keys")
        found = []
        for bits in range(1 << ctx.K):
            signs = tuple(-1 if bits >> k & 1 else 1 for k in range(ctx.K))
            w = _lp_witness(ctx, signs)
            if w is not None:
                shard = ctx.intern(signs)
                if shard.witness is None:
                    shard.witness = w
                found.append(shard)
        return sorted(found, key=Shard.id)
    if method != "bfs":
        raise ValueError("unknown enumeration method %r" % method)
    if ctx._enumerated is not None:
        return list(ctx._enumerated)

    start = _generic_flat_point(ctx, seed)
    first = tuple(_key_signs_at(ctx, start))
    ctx._memo[first] = start
    frontier = [first]
    seen = {first}
    while frontier:
        signs = frontier.pop()
        coords = ctx._memo[signs]
        for k in range(ctx.K):
            cand = signs[:k] + (-signs[k],) + signs[k + 1 :]
            if cand in seen:
                continue
            w = _feasible(ctx, cand, hint=(coords, k))
            if w is not None:
                seen.add(cand)
                frontier.append(cand)
    out = []
    for signs in seen:
        shard = ctx.intern(signs)
        if shard.witness is None:
            shard.witness = ctx._memo[signs]
        out.append(shard)
    out.sort(key=Shard.id)
    ctx._enumerated = tuple(out)
    return list(out)


def project(R, X):
    """Components of X over the blocks of R: one shard per block.

    Block T_j yields the shard over P restricted to T_j (completed with
    singletons elsewhere) whose sign at a subset S is X's sign at S; keys
    of the component reduce into T_j, so this is total.
    """
    P = X.support
    if P.ground != R.ground:
        raise GroundMismatchError("operands use different ground sets")
    if not is_finer(P, R):
        raise NotFinerError("support %s is not finer than %s" % (P.format(), R.format()))
    out = []
    for T in R.blocks:
        blocks = [b for b in P.blocks if b & T]
        blocks += [1 << i for i in iter_bits(R.ground.full_mask ^ T)]
        Pj = Partition(R.ground, blocks)
        ctx_j = context_for(Pj)
        signs = []
        for r in ctx_j.keys:
            s = X.sign_of(r)
            if s == 0:
                raise AssertionError("component key %s vanished upstream" % r)
            signs.append(s)
        out.append(ctx_j.intern(tuple(signs)))
    return out


def steinmann_adjacent(R, X1, X2):
    """Witness key subset if X1, X2 differ exactly on one non-R-semisimple
    canonical key class; None otherwise (including X1 = X2)."""
    if X1.ctx is not X2.ctx and (
        X1.ctx.ground != X2.ctx.ground or X1.ctx.P != X2.ctx.P
    ):
        raise SupportMismatchError("shards have different supports")
    P = X1.support
    if not is_finer(P, R):
        raise NotFinerError("support %s is not finer than %s" % (P.format(), R.format()))
    diff = [k for k in range(X1.ctx.K) if X1.signs[k] != X2.signs[k]]
    if len(diff) != 1:
        return None
    E = Subset(P.ground, X1.ctx.keys[diff[0]])
    if is_r_semisimple(P, R, E):
        return None
    return E


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def steinmann_classes(P, R):
    """Steinmann R-equivalence classes of enumerate_shards(P).

    Two shards are joined when they differ exactly on one canonical key
    class that is not R-semisimple; classes are sorted by least member.
    """
    if not is_finer(P, R):
        raise NotFinerError("%s is not finer than %s" % (P.format(), R.format()))
    shards = enumerate_shards(P)
    ctx = context_for(P)
    movable = []
    for k, r in enumerate(ctx.keys):
        E = Subset(P.ground, r)
        if not is_r_semisimple(P, R, E):
            movable.append(k)
    index = {sh.signs: i for i, sh in enumerate(shards)}
    uf = _UnionFind(len(shards))
    for i, sh in enumerate(shards):
        for k in movable:
            other = sh.signs[:k] + (-sh.signs[k],) + sh.signs[k + 1 :]
            j = index.get(other)
            if j is not None:
                uf.union(i, j)
    groups = {}
    for i in range(len(shards)):
        groups.setdefault(uf.find(i), []).append(shards[i])
    classes = [sorted(g, key=Shard.id) for g in groups.values()]
    classes.sort(key=lambda g: g[0].id())
    return classes
