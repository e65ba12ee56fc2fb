"""Restricted SMILES reader/writer.

Supported: organic-subset and bracket atoms (charge and H count), bonds
``-`` ``=`` ``#``, branches, ring-closure digits 1-9 and ``.`` fragments.
Lowercase aromatic atoms are accepted only in six-membered rings and are
kekulized on the way in. Stereo, isotopes, atom classes, ``%nn`` ring labels
and wildcards are rejected.
"""

from __future__ import annotations

from collections import deque

from ..errors import SmilesSyntaxError, ValenceError
from .graph import ELEMENTS, ORGANIC_SUBSET, Atom, Bond, MolGraph, max_valence, validate_valence

_BOND_CHARS = {"-": 1, "=": 2, "#": 3, ":": 0}
_AROMATIC = {"b": "B", "c": "C", "n": "N", "o": "O", "s": "S", "p": "P"}
_AROMATIC_BOND = 0  # placeholder order until kekulization


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def error(self, msg: str) -> SmilesSyntaxError:
        return SmilesSyntaxError(f"{msg} at position {self.pos} in {self.text!r}")

    def organic_atom(self) -> tuple[str, bool] | None:
        two = self.text[self.pos:self.pos + 2]
        if two in ("Cl", "Br"):
            self.pos += 2
            return two, False
        ch = self.peek()
        if ch in ORGANIC_SUBSET:
            self.pos += 1
            return ch, False
        if ch in _AROMATIC:
            self.pos += 1
            return _AROMATIC[ch], True
        return None

    def bracket_atom(self) -> tuple[Atom, bool]:
        end = self.text.find("]", self.pos)
        if end < 0:
            raise self.error("unclosed bracket atom")
        body = self.text[self.pos + 1:end]
        start = self.pos
        self.pos = end + 1
        i = 0
        if body[:1].isdigit():
            raise SmilesSyntaxError(f"isotopes are not supported: [{body}] at {start}")
        symbol = None
        for cand in sorted(ELEMENTS, key=len, reverse=True):
            if body.startswith(cand):
                symbol, aromatic = cand, False
                break
        if symbol is None and body[:1] in _AROMATIC:
            symbol, aromatic = _AROMATIC[body[0]], True
            i = 1
        elif symbol is not None:
            i = len(symbol)
        if symbol is None:
            raise SmilesSyntaxError(f"unknown element in [{body}] at {start}")
        rest = body[i:]
        if rest.startswith("@"):
            raise SmilesSyntaxError(f"stereochemistry is not supported: [{body}]")
        h = 0
        if rest.startswith("H"):
            j = 1
            while j < len(rest) and rest[j].isdigit():
                j += 1
            h = int(rest[1:j]) if j > 1 else 1
            rest = rest[j:]
        charge = 0
        if rest[:1] in ("+", "-"):
            sign = 1 if rest[0] == "+" else -1
            j = 1
            while j < len(rest) and rest[j] == rest[0]:
                j += 1
            if j > 1:
                charge = sign * j
                rest = rest[j:]
            else:
                k = 1
                while k < len(rest) and rest[k].isdigit():
                    k += 1
                charge = sign * (int(rest[1:k]) if k > 1 else 1)
                rest = rest[k:]
        if rest:
            raise SmilesSyntaxError(f"unsupported bracket atom [{body}] at {start}")
        try:
            atom = Atom(symbol, charge, h)
        except ValenceError as err:
            raise SmilesSyntaxError(f"[{body}]: {err}") from None
        return atom, aromatic


def parse_smiles(s: str) -> MolGraph:
    """Parse SMILES text into a valence-checked :class:`MolGraph`.

    Atoms are numbered in order of first appearance.

    >>> g = parse_smiles("CCO")
    >>> [a.element for a in g.atoms], [(b.a, b.b, b.order) for b in g.bonds]
    (['C', 'C', 'O'], [(0, 1, 1), (1, 2, 1)])
    """
    if not isinstance(s, str) or not s.strip():
        raise SmilesSyntaxError("empty SMILES")
    s = s.strip()
    lex = _Lexer(s)
    atoms: list[Atom] = []
    aromatic: list[bool] = []
    bonds: dict[tuple[int, int], int] = {}
    prev: int | None = None
    pending: str | None = None
    branches: list[int | None] = []
    rings: dict[str, tuple[int, str | None]] = {}

    def add_bond(i: int, j: int, bond_char: str | None):
        key = (min(i, j), max(i, j))
        if i == j or key in bonds:
            raise lex.error("ring closure duplicates an existing bond")
        if bond_char is None:
            order = _AROMATIC_BOND if aromatic[i] and aromatic[j] else 1
        else:
            order = _BOND_CHARS[bond_char]
        bonds[key] = order

    while lex.pos < len(s):
        ch = lex.peek()
        if ch in _BOND_CHARS:
            if pending is not None:
                raise lex.error("two consecutive bond symbols")
            pending = ch
            lex.pos += 1
        elif ch in "/\\":
            raise lex.error("directional bonds are not supported")
        elif ch == "(":
            if prev is None or pending is not None:
                raise lex.error("branch without a preceding atom")
            branches.append(prev)
            lex.pos += 1
            if lex.peek() == ")":
                raise lex.error("empty branch")
        elif ch == ")":
            if not branches or pending is not None:
                raise lex.error("unbalanced ')'")
            prev = branches.pop()
            lex.pos += 1
        elif ch.isdigit():
            if prev is None:
                raise lex.error("ring label without a preceding atom")
            if ch == "0":
                raise lex.error("ring label 0 is not supported")
            if ch in rings:
                other, other_char = rings.pop(ch)
                if pending and other_char and pending != other_char:
                    raise lex.error("conflicting ring-closure bond symbols")
                add_bond(other, prev, pending or other_char)
            else:
                rings[ch] = (prev, pending)
            pending = None
            lex.pos += 1
        elif ch == "%":
            raise lex.error("two-digit ring labels are not supported")
        elif ch == ".":
            if branches or pending is not None or prev is None:
                raise lex.error("misplaced '.'")
            prev = None
            lex.pos += 1
        else:
            if ch == "[":
                atom, aro = lex.bracket_atom()
            else:
                found = lex.organic_atom()
                if found is None:
                    raise lex.error(f"unexpected character {ch!r}")
                atom, aro = Atom(found[0]), found[1]
            atoms.append(atom)
            aromatic.append(aro)
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending)
            elif pending is not None:
                raise lex.error("bond symbol without a preceding atom")
            pending = None
            prev = idx
    if branches:
        raise SmilesSyntaxError(f"unbalanced '(' in {s!r}")
    if rings:
        raise SmilesSyntaxError(f"unclosed ring label(s) {sorted(rings)} in {s!r}")
    if pending is not None:
        raise SmilesSyntaxError(f"dangling bond symbol in {s!r}")

    if any(aromatic):
        _kekulize(s, atoms, aromatic, bonds)
    graph = MolGraph(tuple(atoms), tuple(Bond(a, b, o) for (a, b), o in bonds.items()))
    validate_valence(graph)
    return graph


def _kekulize(s: str, atoms: list[Atom], aromatic: list[bool],
              bonds: dict[tuple[int, int], int]) -> None:
    aro_adj: dict[int, set[int]] = {i: set() for i, f in enumerate(aromatic) if f}
    for (i, j), order in bonds.items():
        if order == _AROMATIC_BOND:
            if not (aromatic[i] and aromatic[j]):
                raise SmilesSyntaxError(f"aromatic bond between non-aromatic atoms in {s!r}")
            aro_adj[i].add(j)
            aro_adj[j].add(i)

    def ring_distance(u: int, v: int) -> int | None:
        # shortest u-v path through aromatic bonds, excluding the direct bond
        dist = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for y in aro_adj[x]:
                if (x, y) in ((u, v), (v, u)) or y in dist:
                    continue
                dist[y] = dist[x] + 1
                if y == v:
                    return dist[y]
                queue.append(y)
        return None

    ring_bonds = []
    for (i, j), order in list(bonds.items()):
        if order != _AROMATIC_BOND:
            continue
        d = ring_distance(i, j)
        if d is None:
            bonds[(i, j)] = 1  # aromatic atoms joined outside any ring
            aro_adj[i].discard(j)
            aro_adj[j].discard(i)
        elif d != 5:
            raise SmilesSyntaxError(
                f"only six-membered aromatic rings are supported ({d + 1}-ring in {s!r})"
            )
        else:
            ring_bonds.append((i, j))
    for i, nbrs in aro_adj.items():
        if len(nbrs) < 2:
            raise SmilesSyntaxError(f"aromatic atom {i} is not in a ring in {s!r}")

    needs = set()
    for i in aro_adj:
        used = atoms[i].explicit_h or 0
        for (a, b), order in bonds.items():
            if i in (a, b):
                used += 1 if order == _AROMATIC_BOND else order
        if max_valence(atoms[i].element, atoms[i].charge) - used >= 1:
            needs.add(i)

    partner: dict[int, int] = {}

    def match(remaining: set[int]) -> bool:
        if not remaining:
            return True
        u = min(remaining, key=lambda x: (sum(1 for y in aro_adj[x] if y in remaining), x))
        for v in sorted(aro_adj[u]):
            if v in remaining and v != u:
                partner[u], partner[v] = v, u
                if match(remaining - {u, v}):
                    return True
                del partner[u], partner[v]
        return False

    if not match(needs):
        raise SmilesSyntaxError(f"cannot kekulize aromatic system in {s!r}")
    for i, j in ring_bonds:
        bonds[(i, j)] = 2 if partner.get(i) == j else 1


# ---------------------------------------------------------------------------
# writer
# ---------------------------------------------------------------------------


def _charge_text(charge: int) -> str:
    if charge == 0:
        return ""
    sign = "+" if charge > 0 else "-"
    return sign if abs(charge) == 1 else f"{sign}{abs(charge)}"


def atom_text(atom: Atom) -> str:
    if atom.charge == 0 and atom.explicit_h is None and atom.element in ORGANIC_SUBSET:
        return atom.element
    h = atom.explicit_h or 0
    h_text = "" if h == 0 else ("H" if h == 1 else f"H{h}")
    return f"[{atom.element}{h_text}{_charge_text(atom.charge)}]"


_ORDER_CHAR = {1: "", 2: "=", 3: "#"}


def write_smiles(g: MolGraph) -> str:
    """Serialize a graph; re-parsing yields an isomorphic graph.

    Output is Kekulé form, not canonical: fragments follow atom order and
    the walk visits neighbours by ascending index.
    """
    pieces = []
    for comp in g.fragments():
        pieces.append(_write_fragment(g, comp[0]))
    return ".".join(pieces)


def _write_fragment(g: MolGraph, root: int) -> str:
    children: dict[int, list[int]] = {}
    ring_edges: list[tuple[int, int]] = []  # (ancestor, descendant)
    preorder: dict[int, int] = {}
    parent = {root: None}
    stack = [(root, iter(g.neighbors[root]))]
    preorder[root] = 0
    children[root] = []
    while stack:
        u, it = stack[-1]
        advanced = False
        for v, _ in it:
            if v == parent[u]:
                continue
            if v in preorder:
                if preorder[v] < preorder[u]:
                    ring_edges.append((v, u))
                continue
            parent[v] = u
            preorder[v] = len(preorder)
            children[u].append(v)
            children[v] = []
            stack.append((v, iter(g.neighbors[v])))
            advanced = True
            break
        if not advanced:
            stack.pop()

    # ring events in output order: assign digits at the ancestor, free at the descendant
    events: dict[int, list[tuple[int, int]]] = {u: [] for u in preorder}
    for anc, desc in ring_edges:
        events[anc].append((preorder[desc], desc))
        events[desc].append((-1, anc))
    digit_of: dict[tuple[int, int], int] = {}
    free = list(range(1, 10))
    labels: dict[int, str] = {}
    for u in sorted(preorder, key=preorder.get):
        text = []
        closes = [anc for key, anc in events[u] if key == -1]
        opens = sorted((key, desc) for key, desc in events[u] if key != -1)
        for anc in sorted(closes, key=preorder.get):
            d = digit_of.pop((anc, u))
            text.append(str(d))
            free.append(d)
            free.sort()
        for _, desc in opens:
            if not free:
                raise ValueError("more than nine simultaneously open rings")
            d = free.pop(0)
            digit_of[(u, desc)] = d
            text.append(_ORDER_CHAR[g.bond_order(u, desc)] + str(d))
        labels[u] = "".join(text)

    def emit(u: int, into: int | None) -> str:
        out = [] if into is None else [_ORDER_CHAR[g.bond_order(into, u)]]
        cur = u
        while True:
            out.append(atom_text(g.atoms[cur]) + labels[cur])
            kids = children[cur]
            if not kids:
                break
            for k in kids[:-1]:
                out.append("(" + emit(k, cur) + ")")
            nxt = kids[-1]
            out.append(_ORDER_CHAR[g.bond_order(cur, nxt)])
            cur = nxt
        return "".join(out)

    return emit(root, None)
