"""Hypothesis strategies for valence-valid molecular graphs."""

from __future__ import annotations

from hypothesis import strategies as st

from electrolyte_sa.chem.graph import Atom, Bond, MolGraph

ATOM_CHOICES = [
    Atom("C"), Atom("C"), Atom("C"), Atom("N"), Atom("O"), Atom("O"), Atom("S"),
    Atom("P"), Atom("F"), Atom("Cl"), Atom("B"), Atom("N", 1), Atom("O", -1),
    Atom("P", -1), Atom("B", -1), Atom("Li", 1), Atom("Br"), Atom("I"),
]


@st.composite
def mol_graphs(draw, max_atoms: int = 14, allow_fragments: bool = True) -> MolGraph:
    """Random graph: a spanning forest plus a few ring bonds, never over valence."""
    n = draw(st.integers(1, max_atoms))
    atoms = [draw(st.sampled_from(ATOM_CHOICES)) for _ in range(n)]
    free = [a.capacity for a in atoms]
    bonds: dict[tuple[int, int], int] = {}

    def add(i, j, order):
        order = min(order, free[i], free[j])
        if order < 1 or i == j or (min(i, j), max(i, j)) in bonds:
            return
        bonds[(min(i, j), max(i, j))] = order
        free[i] -= order
        free[j] -= order

    for j in range(1, n):
        if allow_fragments and draw(st.integers(0, 9)) == 0:
            continue
        i = draw(st.integers(0, j - 1))
        add(i, j, draw(st.sampled_from([1, 1, 1, 2, 3])))
    for _ in range(draw(st.integers(0, 3))):
        if n < 3:
            break
        i = draw(st.integers(0, n - 1))
        j = draw(st.integers(0, n - 1))
        add(i, j, draw(st.sampled_from([1, 1, 2])))
    return MolGraph(tuple(atoms), tuple(Bond(i, j, o) for (i, j), o in sorted(bonds.items())))


@st.composite
def permutations_of(draw, n: int) -> list[int]:
    return draw(st.permutations(list(range(n))))
