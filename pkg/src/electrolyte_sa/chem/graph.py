"""Molecular graph types, the valence table, and graph comparison.

Hydrogens are never atoms here. An atom's hydrogen count is either an
explicit bracket count or ``None`` (implicit: whatever valence is left).
Graph identity (isomorphism, canonical ranks) ignores hydrogens entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from ..errors import ValenceError

ELEMENTS = ("C", "N", "O", "B", "S", "P", "F", "Cl", "Br", "I", "Li", "Na", "K")
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "S", "P", "F", "Cl", "Br", "I"})

_NEUTRAL_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "S": 6, "P": 5,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
    "Li": 1, "Na": 1, "K": 1,
}
# charged exceptions; every other charged atom uses its neutral value
_CHARGED_VALENCE = {("N", 1): 4, ("O", -1): 1, ("B", -1): 4, ("P", -1): 6}

_ELEMENT_RANK = {e: i for i, e in enumerate(ELEMENTS)}


def max_valence(element: str, charge: int = 0) -> int:
    """Maximum total bond order for an atom of ``element`` with ``charge``."""
    if element not in _NEUTRAL_VALENCE:
        raise ValenceError(f"unsupported element {element!r}")
    return _CHARGED_VALENCE.get((element, charge), _NEUTRAL_VALENCE[element])


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    explicit_h: int | None = None

    def __post_init__(self):
        if self.element not in _NEUTRAL_VALENCE:
            raise ValenceError(f"unsupported element {self.element!r}")
        if not -2 <= self.charge <= 2:
            raise ValenceError(f"charge {self.charge} outside [-2, 2]")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise ValenceError("negative hydrogen count")

    @property
    def capacity(self) -> int:
        return max_valence(self.element, self.charge)


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int = 1

    def __post_init__(self):
        if self.a == self.b:
            raise ValenceError(f"self-loop on atom {self.a}")
        if self.order not in (1, 2, 3):
            raise ValenceError(f"bond order {self.order} not in {{1, 2, 3}}")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)


@dataclass(frozen=True)
class MolGraph:
    atoms: tuple[Atom, ...] = ()
    bonds: tuple[Bond, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if bond.b >= n:
                raise ValenceError(f"bond {bond} references a missing atom")
            if (bond.a, bond.b) in seen:
                raise ValenceError(f"duplicate bond between {bond.a} and {bond.b}")
            seen.add((bond.a, bond.b))

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom, ``(neighbor, order)`` pairs sorted by neighbor index."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return tuple(tuple(sorted(row)) for row in adj)

    @cached_property
    def bond_orders(self) -> dict[tuple[int, int], int]:
        return {(b.a, b.b): b.order for b in self.bonds}

    def bond_order(self, i: int, j: int) -> int:
        """Order of the bond between ``i`` and ``j``, 0 if absent."""
        if i > j:
            i, j = j, i
        return self.bond_orders.get((i, j), 0)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def valence_used(self, i: int) -> int:
        """Bond orders at atom ``i`` plus its explicit hydrogens."""
        h = self.atoms[i].explicit_h or 0
        return h + sum(order for _, order in self.neighbors[i])

    def fragments(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by their lowest atom."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            comp, stack = [], [start]
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(sorted(comp))
        return out

    def relabel(self, order: Sequence[int]) -> "MolGraph":
        """New graph whose atom ``k`` is this graph's atom ``order[k]``."""
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of the atom indices")
        new_index = {old: new for new, old in enumerate(order)}
        atoms = tuple(self.atoms[old] for old in order)
        bonds = sorted(
            (Bond(new_index[b.a], new_index[b.b], b.order) for b in self.bonds),
            key=lambda b: (b.a, b.b),
        )
        return MolGraph(atoms, tuple(bonds))


def validate_valence(g: MolGraph) -> None:
    """Raise :class:`ValenceError` if any atom exceeds its valence bound."""
    for i, atom in enumerate(g.atoms):
        used = g.valence_used(i)
        cap = atom.capacity
        if used > cap:
            label = atom.element + (f"{atom.charge:+d}" if atom.charge else "")
            raise ValenceError(
                f"atom {i} ({label}) has valence {used}, maximum is {cap}"
            )


def is_valence_valid(g: MolGraph) -> bool:
    try:
        validate_valence(g)
    except ValenceError:
        return False
    return True


# ---------------------------------------------------------------------------
# colour refinement
# ---------------------------------------------------------------------------


def _atom_invariant(g: MolGraph, i: int) -> tuple:
    atom = g.atoms[i]
    orders = tuple(sorted(o for _, o in g.neighbors[i]))
    return (len(orders), _ELEMENT_RANK[atom.element], atom.charge, orders)


def _compress(keys: Sequence) -> list[int]:
    table = {k: c for c, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def refine_colors(graphs: Sequence[MolGraph], colors: list[int]) -> list[int]:
    """Iterate neighbourhood refinement to a stable partition.

    ``colors`` covers the atoms of all ``graphs`` laid end to end, so colours
    stay comparable between graphs. New colours are ranks of sorted
    signatures, which keeps the result independent of atom numbering.
    """
    offsets, total = [], 0
    for g in graphs:
        offsets.append(total)
        total += len(g)
    n_classes = len(set(colors))
    while True:
        sigs = []
        for g, off in zip(graphs, offsets):
            for i in range(len(g)):
                nb = sorted((o, colors[off + j]) for j, o in g.neighbors[i])
                sigs.append((colors[off + i], tuple(nb)))
        new = _compress(sigs)
        n_new = len(set(new))
        if n_new == n_classes:
            return new
        colors, n_classes = new, n_new


def canonical_ranks(g: MolGraph) -> list[int]:
    """A total order of atoms that depends only on graph structure.

    Terminal atoms sort first (the invariant leads with degree). Remaining
    ties after refinement are split by individualising the lowest-index atom
    of the first tied class, which is canonical whenever tied atoms are
    symmetry-equivalent, the usual case for molecules.
    """
    colors = refine_colors([g], _compress([_atom_invariant(g, i) for i in range(len(g))]))
    while len(set(colors)) < len(colors):
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, k in counts.items() if k > 1)
        pick = colors.index(target)
        keys = [(c, 0 if i == pick else 1) for i, c in enumerate(colors)]
        colors = refine_colors([g], _compress(keys))
    return colors


# ---------------------------------------------------------------------------
# isomorphism
# ---------------------------------------------------------------------------


def _search_order(g: MolGraph, colors: Sequence[int]) -> list[int]:
    """BFS order per fragment, starting each fragment at its rarest colour."""
    freq: dict[int, int] = {}
    for c in colors:
        freq[c] = freq.get(c, 0) + 1
    order: list[int] = []
    for comp in g.fragments():
        start = min(comp, key=lambda i: (freq[colors[i]], colors[i], i))
        seen = {start}
        queue = [start]
        for u in queue:
            order.append(u)
            for v, _ in g.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    return order


def graph_isomorphic(a: MolGraph, b: MolGraph) -> bool:
    """True iff a bijection preserves element, charge and bond orders.

    Exact backtracking over a refined colouring; exponential in the worst
    case, fine for molecules of a few dozen atoms.
    """
    if len(a) != len(b) or len(a.bonds) != len(b.bonds):
        return False
    if len(a) == 0:
        return True
    init = [_atom_invariant(a, i) for i in range(len(a))]
    init += [_atom_invariant(b, i) for i in range(len(b))]
    colors = refine_colors([a, b], _compress(init))
    ca, cb = colors[: len(a)], colors[len(a):]
    if sorted(ca) != sorted(cb):
        return False

    by_color: dict[int, list[int]] = {}
    for j, c in enumerate(cb):
        by_color.setdefault(c, []).append(j)

    order = _search_order(a, ca)
    fwd: dict[int, int] = {}
    used = [False] * len(b)

    def consistent(u: int, cand: int) -> bool:
        mapped_u = 0
        for v, o in a.neighbors[u]:
            if v in fwd:
                mapped_u += 1
                if b.bond_order(cand, fwd[v]) != o:
                    return False
        mapped_c = sum(1 for w, _ in b.neighbors[cand] if used[w])
        return mapped_u == mapped_c

    def extend(k: int) -> bool:
        if k == len(order):
            return True
        u = order[k]
        for cand in by_color[ca[u]]:
            if used[cand] or not consistent(u, cand):
                continue
            fwd[u] = cand
            used[cand] = True
            if extend(k + 1):
                return True
            del fwd[u]
            used[cand] = False
        return False

    return extend(0)


def atom_multiset(g: MolGraph) -> list[tuple[str, int]]:
    return sorted((a.element, a.charge) for a in g.atoms)


def from_edges(atoms: Iterable[Atom | str], edges: Iterable[tuple[int, int, int]]) -> MolGraph:
    """Convenience constructor: atoms as Atom or element symbols."""
    atoms = tuple(a if isinstance(a, Atom) else Atom(a) for a in atoms)
    return MolGraph(atoms, tuple(Bond(i, j, o) for i, j, o in edges))
