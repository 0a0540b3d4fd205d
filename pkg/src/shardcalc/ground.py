"""Ground sets, bitmask subsets, partitions, reduction, semisimplicity.

Everything downstream runs on integer bitmasks over a fixed ground set of
labeled elements.  A partition is a sorted tuple of disjoint block masks.
The reduction of a subset E modulo a partition P removes from E every block
of P that E fully contains; two subset hyperplanes coincide under the flat
of P exactly when their reductions agree or are complementary mod P, which
is why reduced representatives are the canonical storage for sign data.
"""


class GroundMismatchError(ValueError):
    """Operands were built over different ground sets."""


class NotFinerError(ValueError):
    """A partition was required to refine another and does not."""


class EmptyReductionError(ValueError):
    """The subset is a union of blocks (E = 0 mod P), so no hyperplane exists."""


def popcount(mask):
    return bin(mask).count("1")


def iter_bits(mask):
    """Yield set bit positions of mask in increasing order."""
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class GroundSet:
    """An ordered finite set of distinct labels, indexed 0..n-1."""

    def __init__(self, labels):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise ValueError("ground set must be nonempty")
        if len(set(labels)) != len(labels):
            raise ValueError("ground set labels must be distinct")
        bad = set("|,(){}[]@ \t\n")
        if any(x == "" or set(x) & bad for x in labels):
            raise ValueError("labels may not contain syntax characters or spaces")
        self.labels = labels
        self.n = len(labels)
        self.index = {x: i for i, x in enumerate(labels)}
        self.full_mask = (1 << self.n) - 1
        self.single_char = all(len(x) == 1 for x in labels)

    @classmethod
    def of_size(cls, n):
        """Default ground set with labels "1", "2", ..., str(n)."""
        return cls(str(i + 1) for i in range(n))

    def subset(self, items):
        m = 0
        for x in items:
            m |= 1 << self.index[str(x)]
        return Subset(self, m)

    def subset_from_mask(self, mask):
        if mask & ~self.full_mask:
            raise ValueError("mask has bits outside the ground set")
        return Subset(self, mask)

    def mask_labels(self, mask):
        """Render a mask as its sorted label string, e.g. 13 or a1,b."""
        parts = [self.labels[i] for i in iter_bits(mask)]
        return "".join(parts) if self.single_char else ",".join(parts)

    def parse_block(self, text):
        """Parse one block of partition text into a mask."""
        if text.startswith("{") and text.endswith("}"):
            text = text[1:-1]
        parts = text.split(",") if ("," in text or not self.single_char) else list(text)
        m = 0
        for p in parts:
            p = p.strip()
            if p not in self.index:
                raise ValueError("unknown label %r" % p)
            m |= 1 << self.index[p]
        return m

    def __eq__(self, other):
        return isinstance(other, GroundSet) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return "GroundSet(%s)" % (",".join(self.labels))


class Subset:
    """A subset of a ground set, stored as a bitmask."""

    __slots__ = ("ground", "mask")

    def __init__(self, ground, mask):
        if mask & ~ground.full_mask:
            raise ValueError("mask has bits outside the ground set")
        self.ground = ground
        self.mask = mask

    def labels(self):
        return [self.ground.labels[i] for i in iter_bits(self.mask)]

    def complement(self):
        return Subset(self.ground, self.ground.full_mask ^ self.mask)

    def __len__(self):
        return popcount(self.mask)

    def __bool__(self):
        return self.mask != 0

    def __le__(self, other):
        return (self.mask & ~other.mask) == 0

    def __and__(self, other):
        return Subset(self.ground, self.mask & other.mask)

    def __or__(self, other):
        return Subset(self.ground, self.mask | other.mask)

    def __eq__(self, other):
        return (
            isinstance(other, Subset)
            and self.ground == other.ground
            and self.mask == other.mask
        )

    def __hash__(self):
        return hash((self.ground.labels, self.mask))

    def __repr__(self):
        return "{%s}" % ",".join(self.labels())


class Partition:
    """Blocks as disjoint nonempty masks covering the ground set.

    Blocks are stored sorted by smallest element, which fixes serialization
    and every enumeration order downstream.
    """

    __slots__ = ("ground", "blocks")

    def __init__(self, ground, blocks):
        # sort by lowest set bit = smallest element; disjointness below
        # guarantees the key is strict
        blocks = tuple(sorted((int(b) for b in blocks), key=lambda b: b & -b))
        if not blocks or any(b == 0 for b in blocks):
            raise ValueError("blocks must be nonempty")
        union = 0
        for b in blocks:
            if union & b:
                raise ValueError("blocks must be disjoint")
            union |= b
        if union != ground.full_mask:
            raise ValueError("blocks must cover the ground set")
        self.ground = ground
        self.blocks = blocks

    @classmethod
    def parse(cls, ground, text):
        """Parse partition text like (12|34|5) or (a1,a2|b)."""
        text = text.strip()
        if not (text.startswith("(") and text.endswith(")")):
            raise ValueError("partition text must be parenthesized: %r" % text)
        body = text[1:-1]
        if not body:
            raise ValueError("empty partition text")
        return cls(ground, [ground.parse_block(p) for p in body.split("|")])

    @classmethod
    def one_block(cls, ground):
        return cls(ground, [ground.full_mask])

    @classmethod
    def singletons(cls, ground):
        return cls(ground, [1 << i for i in range(ground.n)])

    def format(self):
        return "(%s)" % "|".join(self.ground.mask_labels(b) for b in self.blocks)

    def block_of(self, i):
        """The block mask containing element index i."""
        bit = 1 << i
        for b in self.blocks:
            if b & bit:
                return b
        raise ValueError("element index out of range")

    def block_count(self):
        return len(self.blocks)

    def dim(self):
        """Dimension of the flat of this partition: n minus number of blocks."""
        return self.ground.n - len(self.blocks)

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.ground == other.ground
            and self.blocks == other.blocks
        )

    def __hash__(self):
        return hash((self.ground.labels, self.blocks))

    def __repr__(self):
        return self.format()


def _same_ground(a, b):
    if a.ground != b.ground:
        raise GroundMismatchError("operands use different ground sets")


def is_finer(Q, P):
    """True iff every block of Q is contained in some block of P. Reflexive."""
    _same_ground(Q, P)
    for q in Q.blocks:
        i = q & -q  # lowest bit picks the containing block candidate
        for p in P.blocks:
            if p & i:
                if q & ~p:
                    return False
                break
    return True


def reduction_mask(P, emask):
    """Mask of E minus all blocks of P fully contained in E."""
    m = emask
    for b in P.blocks:
        if (b & ~emask) == 0:
            m &= ~b
    return m


def reduction(P, E):
    """The subset E with every fully contained block of P removed.

    Idempotent: reducing a reduced subset changes nothing.
    """
    _same_ground(P, E)
    return Subset(P.ground, reduction_mask(P, E.mask))


def is_r_semisimple(P, R, E):
    """True iff the reduction of E mod P sits inside a single block of R.

    P must be finer than R and E must not be a union of blocks of P; the
    two precondition failures raise distinct errors.
    """
    _same_ground(P, R)
    _same_ground(P, E)
    if not is_finer(P, R):
        raise NotFinerError("%s is not finer than %s" % (P.format(), R.format()))
    red = reduction_mask(P, E.mask)
    if red == 0:
        raise EmptyReductionError(
            "subset %r is a union of blocks of %s" % (E, P.format())
        )
    for b in R.blocks:
        if red & b:
            return (red & ~b) == 0
    raise AssertionError("unreachable: reduction not covered by blocks")


def all_partitions(ground):
    """All partitions of the ground set, deterministic order.

    Generated by placing elements in index order (restricted growth), then
    sorted by (block count, block masks).
    """
    out = []

    def rec(i, blocks):
        if i == ground.n:
            out.append(Partition(ground, blocks))
            return
        bit = 1 << i
        for j in range(len(blocks)):
            blocks[j] |= bit
            rec(i + 1, blocks)
            blocks[j] &= ~bit
        blocks.append(bit)
        rec(i + 1, blocks)
        blocks.pop()

    rec(0, [])
    out.sort(key=lambda p: (len(p.blocks), p.blocks))
    return out


def partitions_of_mask(ground, mask):
    """All partitions of the sub-ground set given by mask, as block tuples."""
    bits = list(iter_bits(mask))
    out = []

    def rec(i, blocks):
        if i == len(bits):
            out.append(tuple(sorted(blocks, key=lambda b: b & -b)))
            return
        bit = 1 << bits[i]
        for j in range(len(blocks)):
            blocks[j] |= bit
            rec(i + 1, blocks)
            blocks[j] &= ~bit
        blocks.append(bit)
        rec(i + 1, blocks)
        blocks.pop()

    rec(0, [])
    out.sort(key=lambda bs: (len(bs), bs))
    return out


def coarser_partitions(ground, P):
    """All partitions R with P finer than R, deterministic order."""
    blocks = P.blocks
    out = []

    def rec(i, groups):
        if i == len(blocks):
            out.append(Partition(ground, [g for g in groups]))
            return
        b = blocks[i]
        for j in range(len(groups)):
            groups[j] |= b
            rec(i + 1, groups)
            groups[j] &= ~b
        groups.append(b)
        rec(i + 1, groups)
        groups.pop()

    rec(0, [])
    uniq = sorted(set(p.blocks for p in out), key=lambda bs: (len(bs), bs))
    return [Partition(ground, bs) for bs in uniq]
