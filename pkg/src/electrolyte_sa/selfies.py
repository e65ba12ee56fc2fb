"""SELFIES encoder/decoder over the supported element alphabet.

Decoding follows the SELFIES derivation rules: each atom token bonds to the
previous atom with ``min(requested order, remaining valence of previous
atom, capacity of new atom)``; ``[BranchN]``/``[RingN]`` read N index tokens
from a fixed 16-symbol table; ring bonds are formed after derivation and
dropped if either end has no free valence. Every grammar-valid token
sequence therefore decodes to a valence-valid graph.

Fragments are separated by a bare ``.`` token, as in the reference text
form (``[Li+1].[F][P-1]...``).
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from .chem.graph import ELEMENTS, Atom, Bond, MolGraph, canonical_ranks, max_valence
from .chem.smiles import parse_smiles
from .errors import TokenGrammarError, UnsupportedFeature, ValenceError

INDEX_ALPHABET = (
    "[C]", "[Ring1]", "[Ring2]",
    "[Branch1]", "[=Branch1]", "[#Branch1]",
    "[Branch2]", "[=Branch2]", "[#Branch2]",
    "[O]", "[N]", "[=N]", "[=C]", "[#C]", "[S]", "[P]",
)
INDEX_CODE = {tok: i for i, tok in enumerate(INDEX_ALPHABET)}
MAX_INDEX = len(INDEX_ALPHABET) - 1
DOT = "."

_PREFIX = {"": 1, "=": 2, "#": 3}
_PREFIX_OF = {1: "", 2: "=", 3: "#"}
_ELEMENT_RE = "|".join(sorted(ELEMENTS, key=len, reverse=True))
_TOKEN_RE = re.compile(
    rf"^\[([=#]?)(?:(Branch|Ring)([12])|({_ELEMENT_RE})([+-][12])?)\]$"
)
_SPLIT_RE = re.compile(r"\[[^\[\]]*\]|\.")

SelfiesString = list  # list[str] of tokens


def split_selfies(text: str) -> list[str]:
    """Split concatenated SELFIES text into tokens (no grammar check)."""
    tokens = _SPLIT_RE.findall(text)
    if sum(len(t) for t in tokens) != len(text):
        raise TokenGrammarError(f"stray characters in SELFIES text {text!r}")
    return tokens


def join_selfies(tokens: Iterable[str]) -> str:
    return "".join(tokens)


def _parse_token(tok: str):
    if tok == DOT:
        return ("dot",)
    m = _TOKEN_RE.match(tok)
    if m is None:
        raise TokenGrammarError(f"malformed SELFIES token {tok!r}")
    prefix, kind, n, element, charge = m.groups()
    order = _PREFIX[prefix]
    if kind == "Branch":
        return ("branch", order, int(n))
    if kind == "Ring":
        return ("ring", order, int(n))
    return ("atom", order, Atom(element, int(charge) if charge else 0))


def is_grammar_valid(tok: str) -> bool:
    try:
        _parse_token(tok)
    except TokenGrammarError:
        return False
    return True


def _charge_text(charge: int) -> str:
    return f"{charge:+d}" if charge else ""


def atom_token(atom: Atom, order: int | None = None) -> str:
    prefix = "" if order is None else _PREFIX_OF[order]
    return f"[{prefix}{atom.element}{_charge_text(atom.charge)}]"


def grammar_tokens() -> tuple[str, ...]:
    """Every individually grammar-valid token, sorted. Superset of :func:`alphabet`."""
    toks = {DOT}
    for prefix in _PREFIX:
        for n in (1, 2):
            toks.add(f"[{prefix}Branch{n}]")
            toks.add(f"[{prefix}Ring{n}]")
        for element in ELEMENTS:
            for charge in range(-2, 3):
                toks.add(f"[{prefix}{element}{_charge_text(charge)}]")
    return tuple(sorted(toks))


def alphabet() -> frozenset[str]:
    """All tokens :func:`encode` can emit."""
    toks = {DOT, *INDEX_ALPHABET}
    for order, prefix in _PREFIX_OF.items():
        toks.add(f"[{prefix}Branch1]")
        toks.add(f"[{prefix}Ring1]")
        for element in ELEMENTS:
            for charge in range(-2, 3):
                if order <= max_valence(element, charge):
                    toks.add(f"[{prefix}{element}{_charge_text(charge)}]")
    return frozenset(toks)


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


class _Derivation:
    def __init__(self):
        self.atoms: list[Atom] = []
        self.bonds: dict[tuple[int, int], int] = {}
        self.used: list[int] = []
        self.rings: list[tuple[int, int, int]] = []

    def add_atom(self, atom: Atom) -> int:
        self.atoms.append(atom)
        self.used.append(0)
        return len(self.atoms) - 1

    def add_bond(self, i: int, j: int, order: int):
        key = (min(i, j), max(i, j))
        self.bonds[key] = self.bonds.get(key, 0) + order
        self.used[i] += order
        self.used[j] += order

    def derive(self, toks: Sequence[tuple], pos: int, limit: float,
               state: int, prev: int | None) -> tuple[int, int]:
        """Derive up to ``limit`` tokens starting at ``pos``; return (pos, count)."""
        n = 0
        while n < limit and pos < len(toks):
            tok = toks[pos]
            pos += 1
            n += 1
            kind = tok[0]
            if kind == "branch":
                order, width = tok[1], tok[2]
                if state <= 1:
                    next_state = state
                else:
                    init = min(state - 1, order)
                    next_state = state - init
                    q, pos = _read_index(toks, pos, width)
                    pos, k = self.derive(toks, pos, q + 1, init, prev)
                    n += width + k
            elif kind == "ring":
                order, width = tok[1], tok[2]
                if state == 0:
                    next_state = state
                else:
                    ring_order = min(order, state)
                    left = state - ring_order
                    next_state = left or None
                    q, pos = _read_index(toks, pos, width)
                    n += width
                    self.rings.append((max(0, prev - (q + 1)), prev, ring_order))
            else:
                order, atom = tok[1], tok[2]
                cap = atom.capacity
                bond = 0 if state == 0 else min(order, state, cap)
                left = cap - bond
                next_state = left or None
                new = self.add_atom(atom)
                if bond:
                    self.add_bond(prev, new, bond)
                prev = new
            if next_state is None:
                break
            state = next_state
        # tokens after derivation halts are consumed and ignored
        while n < limit and pos < len(toks):
            pos += 1
            n += 1
        return pos, n

    def close_rings(self):
        for left, right, order in self.rings:
            if left == right:
                continue
            lfree = self.atoms[left].capacity - self.used[left]
            rfree = self.atoms[right].capacity - self.used[right]
            if lfree <= 0 or rfree <= 0:
                continue
            order = min(order, lfree, rfree)
            key = (min(left, right), max(left, right))
            existing = self.bonds.get(key, 0)
            order = min(order + existing, 3) - existing
            if order > 0:
                self.add_bond(left, right, order)

    def graph(self) -> MolGraph:
        return MolGraph(
            tuple(self.atoms),
            tuple(Bond(a, b, o) for (a, b), o in sorted(self.bonds.items())),
        )


def _read_index(toks: Sequence[tuple], pos: int, width: int) -> tuple[int, int]:
    value = 0
    for _ in range(width):
        code = 0
        if pos < len(toks):
            code = INDEX_CODE.get(toks[pos][-1], 0)
            pos += 1
        value = value * len(INDEX_ALPHABET) + code
    return value, pos


def decode(s: str | Sequence[str]) -> MolGraph:
    """Decode SELFIES text or a token list into a valence-valid graph.

    Only a malformed individual token raises (:class:`TokenGrammarError`);
    any sequence of well-formed tokens yields a molecule.

    >>> g = decode("[F][=C]")
    >>> [(b.a, b.b, b.order) for b in g.bonds]
    [(0, 1, 1)]
    """
    tokens = split_selfies(s) if isinstance(s, str) else list(s)
    parsed = []
    for tok in tokens:
        p = _parse_token(tok)
        # keep the raw text alongside for index lookup
        parsed.append(p + (tok,))
    fragments: list[list[tuple]] = [[]]
    for p in parsed:
        if p[0] == "dot":
            fragments.append([])
        else:
            fragments[-1].append(p)

    d = _Derivation()
    for frag in fragments:
        d.derive(frag, 0, float("inf"), 0, None)
    d.close_rings()
    return d.graph()


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def _component_size(g: MolGraph, start: int, blocked: set[int]) -> int:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, _ in g.neighbors[u]:
            if v not in seen and v not in blocked:
                seen.add(v)
                stack.append(v)
    return len(seen)


def _encode_fragment(g: MolGraph, root: int, rank: Sequence[int] | None) -> list[str]:
    pre: dict[int, int] = {}
    children: dict[int, list[int]] = {}

    def pick(u: int, cands: list[int]) -> int:
        if rank is None:
            return min(cands)
        blocked = set(pre)
        return min(cands, key=lambda v: (_component_size(g, v, blocked), rank[v]))

    def visit(u: int):
        pre[u] = len(pre)
        children[u] = []
        while True:
            cands = [v for v, _ in g.neighbors[u] if v not in pre]
            if not cands:
                return
            v = pick(u, cands)
            children[u].append(v)
            visit(v)

    visit(root)
    tree = {(min(u, v), max(u, v)) for u, kids in children.items() for v in kids}
    closings: dict[int, list[int]] = {u: [] for u in pre}
    for bond in g.bonds:
        if bond.a in pre and (bond.a, bond.b) not in tree:
            opener, closer = sorted((bond.a, bond.b), key=pre.get)
            closings[closer].append(opener)

    def emit(u: int, order: int | None) -> list[str]:
        out: list[str] = []
        cur = u
        while True:
            out.append(atom_token(g.atoms[cur], order))
            for opener in sorted(closings[cur], key=pre.get):
                q = pre[cur] - pre[opener] - 1
                if q > MAX_INDEX:
                    raise UnsupportedFeature(f"ring span {q + 1} exceeds single-index range")
                prefix = _PREFIX_OF[g.bond_order(cur, opener)]
                out += [f"[{prefix}Ring1]", INDEX_ALPHABET[q]]
            kids = children[cur]
            for k in kids[:-1]:
                border = g.bond_order(cur, k)
                branch = emit(k, border)
                q = len(branch) - 1
                if q > MAX_INDEX:
                    raise UnsupportedFeature(
                        f"branch of {len(branch)} tokens exceeds single-index range"
                    )
                prefix = _PREFIX_OF[border]
                out += [f"[{prefix}Branch1]", INDEX_ALPHABET[q]] + branch
            if not kids:
                return out
            order = g.bond_order(cur, kids[-1])
            cur = kids[-1]

    return emit(root, None)


def encode(g: MolGraph, canonical: bool = False) -> list[str]:
    """Encode a graph as a SELFIES token list.

    With ``canonical=False`` the walk follows atom order (first atom of each
    fragment as root, neighbours by ascending index), which matches the
    reference encoder on conventionally written SMILES. With
    ``canonical=True`` the output depends only on graph structure: roots and
    neighbour order come from canonical ranks, smaller subtrees go into
    branches first, and fragments are sorted.
    """
    for i, atom in enumerate(g.atoms):
        used = sum(o for _, o in g.neighbors[i])
        if used > atom.capacity:
            raise ValenceError(f"atom {i} exceeds its valence; cannot encode")
    rank = canonical_ranks(g) if canonical else None
    pieces = []
    for comp in g.fragments():
        root = comp[0] if rank is None else min(comp, key=lambda i: rank[i])
        pieces.append(_encode_fragment(g, root, rank))
    if canonical:
        pieces.sort(key=join_selfies)
    out: list[str] = []
    for k, piece in enumerate(pieces):
        if k:
            out.append(DOT)
        out.extend(piece)
    return out


def smiles_to_selfies(smiles: str) -> str:
    """Canonical SELFIES text for a SMILES string; equal graphs give equal text."""
    return join_selfies(encode(parse_smiles(smiles), canonical=True))


def strip_bond_prefixes(tokens: Sequence[str]) -> list[str]:
    """Drop ``=``/``#`` from structural tokens, leaving index tokens intact.

    Index positions are taken to be the single token after each
    ``Branch1``/``Ring1`` token, which is how :func:`encode` lays them out.
    """
    out = []
    index_next = False
    for tok in tokens:
        if index_next:
            out.append(tok)
            index_next = False
            continue
        if tok.startswith(("[=", "[#")):
            tok = "[" + tok[2:]
        if tok in ("[Branch1]", "[Ring1]"):
            index_next = True
        out.append(tok)
    return out
