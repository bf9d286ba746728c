"""Groups with decidable normal forms and exact word arithmetic.

Four classes are supported: free groups, free abelian groups, free
products of supported groups, and right-angled Artin groups.  Each has a
textbook normal form whose length equals the word-metric distance to the
identity, so the Cayley-ball layer never faces an undecidable word
problem.

A word is a tuple of letters; a letter is ``(generator_index, sign)``
with sign +1 or -1.  The empty tuple is the identity.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable, Tuple

from .errors import ParseError, UnsupportedClass, ValidationError

Letter = Tuple[int, int]
Word = Tuple[Letter, ...]

IDENTITY: Word = ()

FREE = "free"
FREE_ABELIAN = "free_abelian"
FREE_PRODUCT = "free_product"
RAAG = "raag"

_SUPPORTED = (FREE, FREE_ABELIAN, FREE_PRODUCT, RAAG)


@dataclass(frozen=True)
class GroupSpec:
    """A finitely generated group in one of the supported classes.

    ``generators`` are ordered symbol names; inverses are represented by
    the letter sign, not by extra symbols.  For ``free_product`` the
    generators must be the concatenation of the factor generators, in
    order.  For ``raag`` the ``edges`` are unordered pairs of generator
    names; an edge means the two generators commute.
    """

    generators: Tuple[str, ...]
    class_tag: str
    factors: Tuple["GroupSpec", ...] = ()
    edges: frozenset = frozenset()
    description: str = ""

    def __post_init__(self):
        gens = self.generators
        if not gens:
            raise ValidationError("group needs at least one generator")
        if any(not g for g in gens):
            raise ValidationError("generator names must be nonempty")
        if len(set(gens)) != len(gens):
            raise ValidationError("generator names must be distinct")
        if self.class_tag not in _SUPPORTED:
            raise UnsupportedClass("unknown class tag %r" % (self.class_tag,))
        if self.class_tag == FREE_PRODUCT:
            if len(self.factors) < 2:
                raise ValidationError("free product needs >= 2 factors")
            combined = tuple(g for f in self.factors for g in f.generators)
            if combined != gens:
                raise ValidationError(
                    "product generators must be the factor generators in order"
                )
        elif self.factors:
            raise ValidationError("only free products carry factors")
        if self.class_tag == RAAG:
            for edge in self.edges:
                pair = tuple(sorted(edge))
                if len(pair) != 2:
                    raise ValidationError("raag edge must join two distinct vertices")
                if pair[0] not in gens or pair[1] not in gens:
                    raise ValidationError("raag edge uses unknown generator %r" % (pair,))
        elif self.edges:
            raise ValidationError("only raag groups carry edges")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letters(self) -> Tuple[Letter, ...]:
        """All single-letter words in canonical order: generator, then +1, -1."""
        return tuple((i, s) for i in range(self.rank) for s in (1, -1))


@functools.lru_cache(maxsize=None)
def _factor_of_letter(g: GroupSpec) -> Tuple[Tuple[int, int], ...]:
    """Map global generator index -> (factor index, local index)."""
    out = []
    for fi, f in enumerate(g.factors):
        for li in range(f.rank):
            out.append((fi, li))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _commutes(g: GroupSpec) -> Tuple[Tuple[bool, ...], ...]:
    """RAAG commutation table over generator indices."""
    n = g.rank
    table = [[False] * n for _ in range(n)]
    name_to_idx = {name: i for i, name in enumerate(g.generators)}
    for edge in g.edges:
        a, b = tuple(edge)
        i, j = name_to_idx[a], name_to_idx[b]
        table[i][j] = table[j][i] = True
    return tuple(tuple(row) for row in table)


def validate_word(g: GroupSpec, w: Word) -> None:
    for gi, s in w:
        if not (0 <= gi < g.rank) or s not in (1, -1):
            raise ValidationError("letter (%r, %r) invalid for this group" % (gi, s))


def inverse(w: Word) -> Word:
    return tuple((gi, -s) for gi, s in reversed(w))


def _free_reduce(w: Iterable[Letter]) -> Word:
    out = []
    for gi, s in w:
        if out and out[-1][0] == gi and out[-1][1] == -s:
            out.pop()
        else:
            out.append((gi, s))
    return tuple(out)


def _abelian_nf(g: GroupSpec, w: Word) -> Word:
    exps = [0] * g.rank
    for gi, s in w:
        exps[gi] += s
    out = []
    for gi, e in enumerate(exps):
        s = 1 if e > 0 else -1
        out.extend([(gi, s)] * abs(e))
    return tuple(out)


def _raag_nf(g: GroupSpec, w: Word) -> Word:
    # Geodesic normal form for graph groups, in two stages.  First,
    # shuffle cancellation: a letter and its inverse cancel whenever every
    # letter between them commutes with both; repeating this to a fixpoint
    # yields a geodesic word, and any two geodesic words for the same
    # element differ only by commutation moves.  Second, the canonical
    # representative of that commutation class: greedily emit the least
    # available letter (one preceded only by letters it commutes with).
    # Letter order: generator index, then +1 before -1.
    comm = _commutes(g)
    letters = list(_free_reduce(w))

    changed = True
    while changed:
        changed = False
        n = len(letters)
        for i in range(n):
            gi, s = letters[i]
            for j in range(i + 1, n):
                gj, sj = letters[j]
                if gj == gi:
                    if sj == -s:
                        del letters[j]
                        del letters[i]
                        changed = True
                    break
                if not comm[gi][gj]:
                    break
            if changed:
                break

    def key(letter):
        gi, s = letter
        return (gi, 0 if s == 1 else 1)

    out = []
    while letters:
        best = None
        for p, letter in enumerate(letters):
            if any(
                letters[q][0] == letter[0] or not comm[letters[q][0]][letter[0]]
                for q in range(p)
            ):
                continue
            if best is None or key(letter) < key(letters[best]):
                best = p
        out.append(letters.pop(best))
    return tuple(out)


def _product_nf(g: GroupSpec, w: Word) -> Word:
    fmap = _factor_of_letter(g)
    offsets = []
    off = 0
    for f in g.factors:
        offsets.append(off)
        off += f.rank
    # Alternating-syllable form: split into runs by factor, put each run in
    # its factor normal form, drop trivial runs, merge adjacent same-factor
    # runs, and repeat until stable.
    runs = []
    for gi, s in w:
        fi, li = fmap[gi]
        if runs and runs[-1][0] == fi:
            runs[-1][1].append((li, s))
        else:
            runs.append((fi, [(li, s)]))
    while True:
        changed = False
        out = []
        for fi, letters in runs:
            nf = normal_form(g.factors[fi], tuple(letters))
            if len(nf) != len(letters):
                changed = True
            if not nf:
                continue
            if out and out[-1][0] == fi:
                out[-1] = (fi, list(out[-1][1]) + list(nf))
                changed = True
            else:
                out.append((fi, list(nf)))
        runs = out
        if not changed:
            break
    flat = []
    for fi, letters in runs:
        base = offsets[fi]
        flat.extend((base + li, s) for li, s in letters)
    return tuple(flat)


def normal_form(g: GroupSpec, w: Word) -> Word:
    """Canonical normal form of ``w``; equal group elements agree exactly.

    Free reduction for free groups, sorted exponent vector for free
    abelian, alternating syllables for free products, shortlex for RAAGs.
    The result is geodesic in every class, so ``len(normal_form(w))`` is
    the word metric ``d(e, w)``.
    """
    if g.class_tag == FREE:
        return _free_reduce(w)
    if g.class_tag == FREE_ABELIAN:
        return _abelian_nf(g, w)
    if g.class_tag == FREE_PRODUCT:
        return _product_nf(g, w)
    if g.class_tag == RAAG:
        return _raag_nf(g, w)
    raise UnsupportedClass(g.class_tag)


def multiply(g: GroupSpec, u: Word, v: Word) -> Word:
    return normal_form(g, u + v)


def distance_words(g: GroupSpec, u: Word, v: Word) -> int:
    """Word-metric distance |u^-1 v| for words already in normal form.

    Avoids building the product word where a direct formula exists:
    common-prefix cancellation for free groups, exponent differences for
    free abelian, syllable-wise recursion for free products.  Agrees with
    ``len(normal_form(inverse(u) + v))`` on all inputs.
    """
    if g.class_tag == FREE:
        i, m = 0, min(len(u), len(v))
        while i < m and u[i] == v[i]:
            i += 1
        return len(u) + len(v) - 2 * i
    if g.class_tag == FREE_ABELIAN:
        exps = [0] * g.rank
        for gi, s in u:
            exps[gi] -= s
        for gi, s in v:
            exps[gi] += s
        return sum(abs(e) for e in exps)
    if g.class_tag == FREE_PRODUCT:
        fmap = _factor_of_letter(g)

        def syllables(w):
            out = []
            for gi, s in w:
                fi, li = fmap[gi]
                if out and out[-1][0] == fi:
                    out[-1][1].append((li, s))
                else:
                    out.append((fi, [(li, s)]))
            return out

        su, sv = syllables(u), syllables(v)
        i, m = 0, min(len(su), len(sv))
        while i < m and su[i][0] == sv[i][0] and su[i][1] == sv[i][1]:
            i += 1
        rest_u = sum(len(ls) for _, ls in su[i:])
        rest_v = sum(len(ls) for _, ls in sv[i:])
        if i < len(su) and i < len(sv) and su[i][0] == sv[i][0]:
            f = g.factors[su[i][0]]
            merged = distance_words(
                f, tuple(su[i][1]), tuple(sv[i][1])
            )
            return rest_u + rest_v - len(su[i][1]) - len(sv[i][1]) + merged
        return rest_u + rest_v
    return len(normal_form(g, inverse(u) + v))


def word_length(g: GroupSpec, w: Word) -> int:
    return len(normal_form(g, w))


@dataclass(frozen=True)
class SubgroupSpec:
    """A subgroup of ``ambient`` given by generating words in normal form."""

    ambient: GroupSpec
    sub_generators: Tuple[Word, ...]
    name: str = ""

    def __post_init__(self):
        if not self.sub_generators:
            raise ValidationError("subgroup needs at least one generator word")
        for w in self.sub_generators:
            validate_word(self.ambient, w)
            if not w:
                raise ValidationError("identity is not allowed as a subgroup generator")
            if normal_form(self.ambient, w) != w:
                raise ValidationError("subgroup generators must be in normal form")


# ---------------------------------------------------------------------------
# Text formats.
#
# Group grammar (used by the CLI config):
#   free:a,b
#   abelian:a,b
#   product:(abelian:a,b)*(free:c)*(free:d)
#   raag:a,b,c;edges=a-b,b-c
#
# Word grammar: tokens separated by whitespace or '*', each token a
# generator name with an optional integer exponent, e.g. "a b^-1 a^2".


def _parse_names(text: str) -> Tuple[str, ...]:
    names = tuple(n.strip() for n in text.split(","))
    if any(not n for n in names):
        raise ParseError("empty generator name in %r" % text)
    return names


def _split_factors(text: str):
    if not text.startswith("(") or not text.endswith(")"):
        raise ParseError("product factors must be parenthesized: %r" % text)
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses in %r" % text)
            if depth == 0:
                parts.append(text[start:i])
        elif depth == 0 and ch != "*":
            raise ParseError("unexpected %r between product factors" % ch)
    if depth != 0:
        raise ParseError("unbalanced parentheses in %r" % text)
    if len(parts) < 2:
        raise ParseError("free product needs >= 2 factors: %r" % text)
    return parts


def parse_group(text: str) -> GroupSpec:
    text = text.strip()
    head, sep, rest = text.partition(":")
    if not sep:
        raise ParseError("group spec needs 'class:...': %r" % text)
    head = head.strip()
    if head == "free":
        return GroupSpec(_parse_names(rest), FREE, description=text)
    if head == "abelian":
        return GroupSpec(_parse_names(rest), FREE_ABELIAN, description=text)
    if head == "product":
        factors = tuple(parse_group(p) for p in _split_factors(rest.strip()))
        gens = tuple(g for f in factors for g in f.generators)
        return GroupSpec(gens, FREE_PRODUCT, factors=factors, description=text)
    if head == "raag":
        gen_part, sep2, edge_part = rest.partition(";")
        gens = _parse_names(gen_part)
        edges = set()
        if sep2:
            key, eq, val = edge_part.partition("=")
            if key.strip() != "edges" or not eq:
                raise ParseError("raag tail must be ';edges=...': %r" % text)
            for item in val.split(","):
                item = item.strip()
                if not item:
                    continue
                a, dash, b = item.partition("-")
                if not dash or not a or not b:
                    raise ParseError("bad raag edge %r" % item)
                edges.add(frozenset((a.strip(), b.strip())))
        return GroupSpec(gens, RAAG, edges=frozenset(edges), description=text)
    raise ParseError("unknown group class %r" % head)


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)(?:\^(-?\d+))?$")


def parse_word(g: GroupSpec, text: str) -> Word:
    """Parse a word and return its normal form."""
    name_to_idx = {name: i for i, name in enumerate(g.generators)}
    letters = []
    for token in text.replace("*", " ").split():
        m = _TOKEN.match(token)
        if not m:
            raise ParseError("bad word token %r" % token)
        name, exp = m.group(1), int(m.group(2) or 1)
        if name not in name_to_idx:
            raise ParseError("unknown generator %r" % name)
        s = 1 if exp > 0 else -1
        letters.extend([(name_to_idx[name], s)] * abs(exp))
    return normal_form(g, tuple(letters))


def word_to_str(g: GroupSpec, w: Word) -> str:
    if not w:
        return "1"
    parts = []
    for gi, s in w:
        name = g.generators[gi]
        if parts and parts[-1][0] == name and parts[-1][1] * s > 0:
            parts[-1] = (name, parts[-1][1] + s)
        else:
            parts.append((name, s))
    return " ".join(n if e == 1 else "%s^%d" % (n, e) for n, e in parts)
