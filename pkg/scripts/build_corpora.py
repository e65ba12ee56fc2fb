"""Regenerate the bundled molecule lists under src/electrolyte_sa/data/.

electrolytes.smi holds common battery solvents, additives and salts plus
homologous series built from them. toy_corpus.smi is a 500-molecule
pretraining set drawn from the same families. Both are deterministic.

    python scripts/build_corpora.py
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from electrolyte_sa.chem import parse_smiles
from electrolyte_sa.selfies import encode

DATA = Path(__file__).resolve().parents[1] / "src" / "electrolyte_sa" / "data"

SOLVENTS = [
    "O=C1OCCO1",            # ethylene carbonate
    "CC1COC(=O)O1",         # propylene carbonate
    "COC(=O)OC",            # dimethyl carbonate
    "CCOC(=O)OCC",          # diethyl carbonate
    "CCOC(=O)OC",           # ethyl methyl carbonate
    "O=C1OC=CO1",           # vinylene carbonate
    "O=C1OCC(F)O1",         # fluoroethylene carbonate
    "O=C1OC(F)C(F)O1",      # difluoroethylene carbonate
    "C=CC1COC(=O)O1",       # vinyl ethylene carbonate
    "COCCOC",               # DME
    "COCCOCCOC",            # diglyme
    "COCCOCCOCCOC",         # triglyme
    "COCCOCCOCCOCCOC",      # tetraglyme
    "C1COCO1",              # 1,3-dioxolane
    "C1CCOC1",              # THF
    "CC1CCCO1",             # 2-methyl-THF
    "C1COCCO1",             # 1,4-dioxane
    "CC#N",                 # acetonitrile
    "N#CCCCCC#N",           # adiponitrile
    "N#CCCC#N",             # glutaronitrile
    "N#CCC#N",              # malononitrile
    "CS(C)=O",              # DMSO
    "O=S1(=O)CCCC1",        # sulfolane
    "CS(=O)(=O)C",          # dimethyl sulfone
    "CCS(=O)(=O)CC",        # diethyl sulfone
    "O=C1CCCO1",            # gamma-butyrolactone
    "CCOC(C)=O",            # ethyl acetate
    "COC(C)=O",             # methyl acetate
    "CCCOC(=O)CC",          # propyl propionate
    "CCC(=O)OC",            # methyl propionate
    "O=C1OCCS1",
    "O=S1OCCO1",            # ethylene sulfite
    "O=S1(=O)OCCO1",        # ethylene sulfate
    "O=S1(=O)CCCO1",        # propane sultone
    "COP(=O)(OC)OC",        # trimethyl phosphate
    "CCOP(=O)(OCC)OCC",     # triethyl phosphate
    "FC(F)C(F)(F)COC(F)(F)C(F)F",  # TTE
    "FC(F)(F)COCC(F)(F)F",  # bis(trifluoroethyl) ether
    "O=C(OCC(F)(F)F)OCC(F)(F)F",
    "CN(C)C=O",             # DMF
    "CC(=O)N(C)C",          # DMAc
    "CN1CCCC1=O",           # NMP
    "c1ccccc1",             # benzene
    "Cc1ccccc1",            # toluene
    "Fc1ccccc1",            # fluorobenzene
    "COc1ccccc1",           # anisole
    "CCOCC",                # diethyl ether
    "CCCCOCCCC",            # dibutyl ether
    "C1CCOCC1",             # tetrahydropyran
    "C1COCCOCCOCCO1",       # 12-crown-4
    "C1COCCOCCOCCOCCO1",    # 15-crown-5
    "CC(C)OC(=O)OC(C)C",
    "B(OC)(OC)OC",          # trimethyl borate
    "FB(F)F",
    "O=C=O",
    "CO",
    "CCO",
    "OCCO",
    "O",
    "N#N",
]

SALTS = [
    "[Li+].F[P-](F)(F)(F)(F)F",
    "[Li+].F[B-](F)(F)F",
    "[Li+].[O-]Cl(=O)(=O)=O",
    "[Li+].O=S(=O)([N-]S(=O)(=O)C(F)(F)F)C(F)(F)F",
    "[Li+].O=S(=O)([N-]S(=O)(=O)F)F",
    "[Li+].[O-]S(=O)(=O)C(F)(F)F",
    "[Li+].O=C1O[B-]2(OC1=O)OC(=O)C(=O)O2",
    "[Li+].O=C1O[B-](F)(F)OC1=O",
    "[Li+].[O-][N+](=O)[O-]",
    "[Li+].[F-]",
    "[Li+].[Cl-]",
    "[Li+].[Br-]",
    "[Li+].[I-]",
    "[Li+].[O-]P(=O)(F)F",
    "[Na+].F[P-](F)(F)(F)(F)F",
    "[Na+].O=S(=O)([N-]S(=O)(=O)C(F)(F)F)C(F)(F)F",
    "[Na+].O=S(=O)([N-]S(=O)(=O)F)F",
    "[Na+].[O-]Cl(=O)(=O)=O",
    "[Na+].F[B-](F)(F)F",
    "[K+].F[P-](F)(F)(F)(F)F",
    "[K+].O=S(=O)([N-]S(=O)(=O)F)F",
    "[Li+].[Li+].[O-]S(=O)(=O)[O-]",
    "[Li+].[Li+].O=C([O-])[O-]",
    "[Li+].[O-]C(=O)C(F)(F)F",
    "[Li+].O=S(=O)([N-]S(=O)(=O)C(F)(F)C(F)(F)F)C(F)(F)C(F)(F)F",
]

# (written before the attachment point, written after it)
ALKYL = [
    ("C", "C"), ("CC", "CC"), ("CCC", "CCC"), ("CCCC", "CCCC"), ("CC(C)", "C(C)C"),
    ("CCCCC", "CCCCC"), ("FC(F)(F)", "C(F)(F)F"), ("FC(F)(F)C", "CC(F)(F)F"),
    ("FCC", "CCF"), ("FC(F)", "C(F)F"), ("C=CC", "CC=C"), ("N#CC", "CC#N"),
    ("COCC", "CCOC"), ("CC(C)(C)", "C(C)(C)C"), ("FC(F)(F)C(F)(F)", "C(F)(F)C(F)(F)F"),
]
FLUOROALKYL = ["C(F)(F)F", "C(F)(F)C(F)(F)F", "C(F)(F)C(F)(F)C(F)(F)F",
               "C(F)(F)C(F)(F)C(F)(F)C(F)(F)F"]


def families() -> list[str]:
    out = []
    # glymes, crown-free polyethers and their fluorinated end caps
    for n in range(1, 16):
        out.append("CO" + "CCO" * n + "C")
        out.append("CCO" + "CCO" * n + "CC")
    for n in range(1, 6):
        out.append("FC(F)(F)CO" + "CCO" * n + "CC(F)(F)F")
    # linear carbonates, esters, ethers from alkyl pairs
    for (a, _), (_, b) in itertools.combinations_with_replacement(ALKYL, 2):
        out.append(f"{a}OC(=O)O{b}")
        out.append(f"{a}C(=O)O{b}")
        out.append(f"{a}O{b}")
        out.append(f"{a}S(=O)(=O){b}")
    # substituted cyclic carbonates
    for left, r in ALKYL:
        out.append(f"O=C1OCC({r})O1")
        out.append(f"{left}C1COC(=O)O1")
        out.append(f"O=C1CC({r})CO1")
    # nitriles and dinitriles
    for n in range(1, 9):
        out.append("C" * n + "C#N")
        out.append("N#C" + "C" * n + "C#N")
    # alkyl phosphates and phosphonates
    for left, r in ALKYL[:6]:
        out.append(f"O=P(O{r})(O{r})O{r}")
        out.append(f"{left}P(=O)(OC)OC")
    # imide and sulfonate anions with perfluoro chains
    for m in ("[Li+]", "[Na+]", "[K+]"):
        for rf in FLUOROALKYL:
            out.append(f"{m}.O=S(=O)([N-]S(=O)(=O){rf}){rf}")
            out.append(f"{m}.[O-]S(=O)(=O){rf}")
            out.append(f"{m}.[O-]C(=O){rf}")
    # borates and phosphates with fluorine substitution
    for k in range(0, 5):
        ligands = ["F"] * k + ["O" + "C"] * (4 - k)
        out.append("[Li+].[B-](" + ")(".join(ligands[:3]) + ")" + ligands[3])
    for k in range(0, 7):
        ligands = ["F"] * k + ["C(F)(F)F"] * (6 - k)
        out.append("[Li+].[P-](" + ")(".join(ligands[:5]) + ")" + ligands[5])
    # alkyl benzenes
    for left, _ in ALKYL[:8]:
        out.append(f"{left}c1ccccc1")
        out.append(f"{left}Oc1ccccc1")
    return out


def canonical_key(smiles: str, min_atoms: int = 2, max_atoms: int = 60) -> str | None:
    """Canonical SELFIES of an acceptable molecule, else None."""
    try:
        g = parse_smiles(smiles)
        key = "".join(encode(g, canonical=True))
    except ValueError:
        return None
    return key if min_atoms <= len(g.atoms) <= max_atoms else None


def distinct_molecules(candidates):
    seen = set()
    for s in candidates:
        key = canonical_key(s)
        if key is not None and key not in seen:
            seen.add(key)
            yield s


def main() -> None:
    pool = list(distinct_molecules(SOLVENTS + SALTS + families()))
    DATA.mkdir(parents=True, exist_ok=True)
    header = "# solvents, additives and salts; one SMILES per line\n"
    (DATA / "electrolytes.smi").write_text(header + "".join(s + "\n" for s in pool),
                                           encoding="utf-8")

    rng = random.Random(7)
    toy = list(pool)
    rng.shuffle(toy)
    toy = toy[:500]
    (DATA / "toy_corpus.smi").write_text(
        "# toy pretraining corpus\n" + "".join(s + "\n" for s in toy), encoding="utf-8")
    print(f"electrolytes.smi: {len(pool)} molecules; toy_corpus.smi: {len(toy)}")


if __name__ == "__main__":
    main()
