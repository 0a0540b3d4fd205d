"""Layered binary trees and forests between partitions.

A forest F : P <- Q refines the coarse partition P into Q by an ordered
list of cuts; each cut splits one currently present block into a favored
left part and a right part.  The ordered cut list is the forest's unique
normal form: composition is concatenation, and the layering (the global
order of nodes) is exactly the list order, outermost first.

Text notation nests brackets, e.g. "[[2,3],5]" over {2,3,5}; several trees
join with "|"; "@" fixes the layering by listing preorder node indices in
layer order when more than one layering exists (with "@L"/"@R" sugar when
there are exactly two).
"""

from itertools import permutations

from .ground import (
    GroundMismatchError,
    Partition,
    Subset,
    iter_bits,
    popcount,
)


class ForestSyntaxError(ValueError):
    """Malformed forest text; carries the position."""

    def __init__(self, message, pos):
        self.pos = pos
        super().__init__("%s (at position %d)" % (message, pos))


class AmbiguousLayeringError(ValueError):
    """The bracket term admits several layerings and none was annotated."""


class BoundaryMismatchError(ValueError):
    """Forest endpoints do not line up for the requested operation."""


class Cut:
    """One refinement step: parent block split into favored left and right."""

    __slots__ = ("ground", "parent", "left", "right")

    def __init__(self, ground, parent, left):
        parent = parent.mask if isinstance(parent, Subset) else int(parent)
        left = left.mask if isinstance(left, Subset) else int(left)
        if left == 0 or left & ~parent or left == parent:
            raise ValueError("left part must be nonempty and proper in parent")
        self.ground = ground
        self.parent = parent
        self.left = left
        self.right = parent ^ left

    def reversed(self):
        return Cut(self.ground, self.parent, self.right)

    def serial(self):
        return (self.parent, self.left)

    def __eq__(self, other):
        return (
            isinstance(other, Cut)
            and self.ground == other.ground
            and self.parent == other.parent
            and self.left == other.left
        )

    def __hash__(self):
        return hash((self.ground.labels, self.parent, self.left))

    def __repr__(self):
        g = self.ground
        return "[%s,%s]" % (g.mask_labels(self.left), g.mask_labels(self.right))


class LayeredForest:
    """Ordered cut list from a source partition; target is the replay result."""

    __slots__ = ("ground", "source", "target", "cuts")

    def __init__(self, source, cuts):
        cuts = tuple(cuts)
        blocks = set(source.blocks)
        for cut in cuts:
            if cut.ground != source.ground:
                raise GroundMismatchError("cut over a different ground set")
            if cut.parent not in blocks:
                raise ValueError(
                    "cut %r splits a block not present at its layer" % (cut,)
                )
            blocks.remove(cut.parent)
            blocks.add(cut.left)
            blocks.add(cut.right)
        self.ground = source.ground
        self.source = source
        self.target = Partition(source.ground, blocks)
        self.cuts = cuts

    @classmethod
    def identity(cls, P):
        return cls(P, ())

    def is_identity(self):
        return not self.cuts

    def serial(self):
        return tuple(c.serial() for c in self.cuts)

    def active_blocks(self):
        """Blocks of the source that this forest actually splits."""
        roots = set(self.source.blocks)
        return frozenset(c.parent for c in self.cuts if c.parent in roots)

    def __eq__(self, other):
        return (
            isinstance(other, LayeredForest)
            and self.ground == other.ground
            and self.source == other.source
            and self.serial() == other.serial()
        )

    def __hash__(self):
        return hash((self.ground.labels, self.source.blocks, self.serial()))

    def __repr__(self):
        return "LayeredForest(%s <- %s, %s)" % (
            self.source.format(),
            self.target.format(),
            format_forest(self),
        )


def identity_forest(P):
    return LayeredForest.identity(P)


def cut_forest(P, parent, left):
    """The single-cut forest splitting `parent` (a block of P) at `left`."""
    parent = parent.mask if isinstance(parent, Subset) else int(parent)
    left = left.mask if isinstance(left, Subset) else int(left)
    if parent not in P.blocks:
        raise ValueError("parent is not a block of the source partition")
    return LayeredForest(P, [Cut(P.ground, parent, left)])


def compose(F1, F2):
    """F1 then F2: source(F1) <- target(F2), every F1 node before every F2 node."""
    if F1.ground != F2.ground:
        raise GroundMismatchError("forests over different ground sets")
    if F1.target != F2.source:
        raise BoundaryMismatchError(
            "target %s of the outer forest differs from source %s"
            % (F1.target.format(), F2.source.format())
        )
    return LayeredForest(F1.source, F1.cuts + F2.cuts)


def merge(F1, F2):
    """Union of forests over one source acting on disjoint sets of blocks.

    Layering is F1's nodes then F2's.
    """
    if F1.source != F2.source:
        raise BoundaryMismatchError("merge needs a shared source partition")
    if F1.active_blocks() & F2.active_blocks():
        raise ValueError("forests act on a common block, merge is ambiguous")
    return LayeredForest(F1.source, F1.cuts + F2.cuts)


def antisymmetrize(F):
    """Signed sum over all left/right switches; original first, sign +1."""
    l = len(F.cuts)
    terms = []
    for s in range(1 << l):
        cuts = [
            F.cuts[i].reversed() if s >> i & 1 else F.cuts[i] for i in range(l)
        ]
        sign = -1 if popcount(s) & 1 else 1
        terms.append((sign, LayeredForest(F.source, cuts)))
    return SignedForestSum(terms)


class SignedForestSum:
    """Formal signed sum of layered forests sharing both endpoints."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = tuple((int(s), f) for s, f in terms)
        if terms:
            src, tgt = terms[0][1].source, terms[0][1].target
            for _, f in terms:
                if f.source != src or f.target != tgt:
                    raise BoundaryMismatchError("summands have mixed endpoints")
        self.terms = terms

    @property
    def source(self):
        return self.terms[0][1].source

    @property
    def target(self):
        return self.terms[0][1].target

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        bits = []
        for s, f in self.terms:
            bits.append(("+ " if s > 0 else "- ") + format_forest(f))
        return "SignedForestSum(%s)" % " ".join(bits)


# ---- text notation ----


class _Node:
    __slots__ = ("mask", "left", "right")

    def __init__(self, mask, left=None, right=None):
        self.mask = mask
        self.left = left
        self.right = right


def _parse_leaf(ground, text, i):
    n = len(text)
    if i < n and text[i] == "{":
        j = text.find("}", i)
        if j < 0:
            raise ForestSyntaxError("unclosed '{'", i)
        mask = 0
        for lab in text[i + 1 : j].split(","):
            lab = lab.strip()
            if lab not in ground.index:
                raise ForestSyntaxError("unknown label %r" % lab, i)
            mask |= 1 << ground.index[lab]
        return _Node(mask), j + 1
    j = i
    while j < n and text[j] not in "[],|{}@":
        j += 1
    run = text[i:j]
    if not run:
        raise ForestSyntaxError("expected a leaf", i)
    mask = 0
    if ground.single_char:
        for ch in run:
            if ch not in ground.index:
                raise ForestSyntaxError("unknown label %r" % ch, i)
            mask |= 1 << ground.index[ch]
    else:
        if run not in ground.index:
            raise ForestSyntaxError("unknown label %r" % run, i)
        mask = 1 << ground.index[run]
    return _Node(mask), j


def _parse_tree(ground, text, i):
    if i < len(text) and text[i] == "[":
        left, i = _parse_tree(ground, text, i + 1)
        if i >= len(text) or text[i] != ",":
            raise ForestSyntaxError("expected ',' in bracket", i)
        right, i = _parse_tree(ground, text, i + 1)
        if i >= len(text) or text[i] != "]":
            raise ForestSyntaxError("expected ']'", i)
        node = _Node(left.mask | right.mask, left, right)
        if left.mask & right.mask:
            raise ForestSyntaxError("branches overlap", i)
        return node, i + 1
    return _parse_leaf(ground, text, i)


def _preorder_internal(roots):
    nodes = []

    def walk(nd):
        if nd.left is not None:
            nodes.append(nd)
            walk(nd.left)
            walk(nd.right)

    for r in roots:
        walk(r)
    return nodes


def _ancestor_pairs(roots):
    """(i, j) meaning preorder node i must come before node j."""
    nodes = _preorder_internal(roots)
    index = {id(nd): k for k, nd in enumerate(nodes)}
    pairs = []

    def walk(nd, anc):
        if nd.left is None:
            return
        k = index[id(nd)]
        for a in anc:
            pairs.append((a, k))
        walk(nd.left, anc + [k])
        walk(nd.right, anc + [k])

    for r in roots:
        walk(r, [])
    return len(nodes), pairs


def _linear_extensions(count, pairs, limit=None):
    before = {k: set() for k in range(count)}
    for a, b in pairs:
        before[b].add(a)
    out = []

    def rec(prefix, placed):
        if limit is not None and len(out) >= limit:
            return
        if len(prefix) == count:
            out.append(tuple(prefix))
            return
        for k in range(count):
            if k not in placed and before[k] <= placed:
                prefix.append(k)
                placed.add(k)
                rec(prefix, placed)
                placed.remove(k)
                prefix.pop()

    rec([], set())
    return out


def parse_forest(ground, text):
    """Parse forest text into a LayeredForest; see the module docstring."""
    text = text.strip()
    at = text.find("@")
    layer_text = None
    if at >= 0:
        layer_text = text[at + 1 :].strip()
        text = text[:at].strip()
    roots = []
    i = 0
    while True:
        node, i = _parse_tree(ground, text, i)
        roots.append(node)
        if i >= len(text):
            break
        if text[i] != "|":
            raise ForestSyntaxError("expected '|' between trees", i)
        i += 1
    source = Partition(ground, [r.mask for r in roots])
    nodes = _preorder_internal(roots)
    count, pairs = _ancestor_pairs(roots)

    if layer_text is None:
        exts = _linear_extensions(count, pairs, limit=2)
        if len(exts) > 1:
            raise AmbiguousLayeringError(
                "term admits several layerings; annotate with @"
            )
        order = exts[0] if exts else ()
    elif layer_text in ("L", "R"):
        exts = _linear_extensions(count, pairs, limit=3)
        if len(exts) != 2:
            raise AmbiguousLayeringError(
                "@L/@R requires exactly two layerings, found %d" % len(exts)
            )
        exts.sort()
        order = exts[0] if layer_text == "L" else exts[1]
    else:
        if "," in layer_text:
            try:
                order = tuple(int(p) for p in layer_text.split(","))
            except ValueError:
                raise ForestSyntaxError("bad layering annotation", at)
        else:
            if not layer_text.isdigit():
                raise ForestSyntaxError("bad layering annotation", at)
            order = tuple(int(ch) for ch in layer_text)
        if sorted(order) != list(range(count)):
            raise ForestSyntaxError(
                "layering is not a permutation of 0..%d" % (count - 1), at
            )
        placed = set()
        for k in order:
            if any(a not in placed for a, b in pairs if b == k):
                raise ForestSyntaxError("layering puts a node before its parent", at)
            placed.add(k)
    cuts = [Cut(ground, nodes[k].mask, nodes[k].left.mask) for k in order]
    return LayeredForest(source, cuts)


def _leaf_text(ground, mask):
    labels = [ground.labels[i] for i in iter_bits(mask)]
    if ground.single_char:
        return "".join(labels)
    if len(labels) == 1:
        return labels[0]
    return "{%s}" % ",".join(labels)


def format_forest(F):
    """Bracket text with an explicit @layering whenever several exist."""
    ground = F.ground
    children = {}  # parent mask -> (left, right), per layer replay
    for c in F.cuts:
        children[c.parent] = (c.left, c.right)

    def render(mask):
        if mask in children:
            l, r = children[mask]
            return "[%s,%s]" % (render(l), render(r))
        return _leaf_text(ground, mask)

    body = "|".join(render(b) for b in F.source.blocks)

    # preorder index of each cut, matching parse_forest's numbering
    order = []
    counter = [0]

    def walk(mask):
        if mask in children:
            idx = counter[0]
            counter[0] += 1
            order.append(mask)
            l, r = children[mask]
            walk(l)
            walk(r)

    for b in F.source.blocks:
        walk(b)
    pre_index = {mask: k for k, mask in enumerate(order)}
    perm = tuple(pre_index[c.parent] for c in F.cuts)

    count = len(F.cuts)
    # ancestor closure via replay: a cut's parent was produced by the cut
    # that created it; chase creators transitively
    creator = {}
    for k, c in enumerate(F.cuts):
        creator[c.left] = k
        creator[c.right] = k
    anc_pairs = set()
    for k, c in enumerate(F.cuts):
        m = c.parent
        while m in creator:
            kk = creator[m]
            anc_pairs.add((pre_index[F.cuts[kk].parent], pre_index[c.parent]))
            m = F.cuts[kk].parent
    exts = _linear_extensions(count, sorted(anc_pairs), limit=2)
    if len(exts) <= 1:
        return body
    if count <= 10:
        suffix = "".join(str(k) for k in perm)
    else:
        suffix = ",".join(str(k) for k in perm)
    return body + "@" + suffix


def all_trees(P, block, leaves):
    """All layered binary trees over `block` with the given leaf blocks.

    block must be a block of P; leaves must partition block.  Each result
    is a forest P <- (P with block replaced by leaves); sticks elsewhere.
    Deterministic order: lexicographic on serialized cut lists.
    """
    block = block.mask if isinstance(block, Subset) else int(block)
    if block not in P.blocks:
        raise ValueError("block is not a block of the partition")
    atom_masks = []
    for leaf in leaves:
        atom_masks.append(leaf.mask if isinstance(leaf, Subset) else int(leaf))
    union = 0
    for a in atom_masks:
        if a == 0 or a & ~block or union & a:
            raise ValueError("leaves must partition the block")
        union |= a
    if union != block:
        raise ValueError("leaves must partition the block")

    results = []

    def rec(blocks, cuts):
        splittable = [m for m in blocks if m not in atom_masks]
        if not splittable:
            results.append(tuple(cuts))
            return
        for m in splittable:
            atoms = [a for a in atom_masks if a & m]
            for pick in range(1, 1 << len(atoms)):
                if pick == (1 << len(atoms)) - 1:
                    continue
                left = 0
                for t in range(len(atoms)):
                    if pick >> t & 1:
                        left |= atoms[t]
                cuts.append(Cut(P.ground, m, left))
                rec([b for b in blocks if b != m] + [m & ~left, left], cuts)
                cuts.pop()

    rec([block], [])
    seqs = sorted(set(results), key=lambda cs: tuple(c.serial() for c in cs))
    return [LayeredForest(P, cs) for cs in seqs]


def iter_forests(P, max_cuts):
    """Every layered forest with source P and at most max_cuts cuts.

    Deterministic: depth-first over ordered splits in serialized order.
    """
    out = []

    def rec(blocks, cuts):
        out.append(tuple(cuts))
        if len(cuts) == max_cuts:
            return
        for m in sorted(blocks):
            if popcount(m) < 2:
                continue
            bits = list(iter_bits(m))
            for pick in range(1, 1 << len(bits)):
                if pick == (1 << len(bits)) - 1:
                    continue
                left = 0
                for t in range(len(bits)):
                    if pick >> t & 1:
                        left |= 1 << bits[t]
                cuts.append(Cut(P.ground, m, left))
                rec([b for b in blocks if b != m] + [m ^ left, left], cuts)
                cuts.pop()

    rec(list(P.blocks), [])
    return [LayeredForest(P, cs) for cs in out]
