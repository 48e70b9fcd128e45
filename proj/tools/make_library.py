#!/usr/bin/env python3
# Copyright 2026 The dgnn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the shipped toy molecule library (data/library).

Needs RDKit. The C++ code never links RDKit; it only reads the graph JSON
files written here. Coordinates come from ETKDG + MMFF with a fixed seed.
"""
import json
import pathlib
import sys

from rdkit import Chem
from rdkit.Chem import AllChem

ALCOHOLS = [
    ("methanol", "CO"),
    ("ethanol", "CCO"),
    ("propan-1-ol", "CCCO"),
    ("propan-2-ol", "CC(C)O"),
    ("butan-1-ol", "CCCCO"),
    ("butan-2-ol", "CCC(C)O"),
    ("isobutanol", "CC(C)CO"),
    ("tert-butanol", "CC(C)(C)O"),
    ("cyclopropanol", "OC1CC1"),
    ("cyclobutanol", "OC1CCC1"),
    ("cyclopentanol", "OC1CCCC1"),
    ("allyl-alcohol", "C=CCO"),
    ("propargyl-alcohol", "C#CCO"),
    ("but-3-en-1-ol", "C=CCCO"),
    ("2-fluoroethanol", "OCCF"),
    ("2,2,2-trifluoroethanol", "OCC(F)(F)F"),
    ("2-methoxyethanol", "COCCO"),
    ("2-aminoethanol", "NCCO"),
    ("3-hydroxypropanenitrile", "N#CCCO"),
    ("phenol", "Oc1ccccc1"),
]

ACYL_SKELETONS = [
    ("acetyl", "CC(=O){X}"),
    ("propanoyl", "CCC(=O){X}"),
    ("isobutyryl", "CC(C)C(=O){X}"),
    ("cyclopropanecarbonyl", "O=C({X})C1CC1"),
    ("acryloyl", "C=CC(=O){X}"),
    ("methoxyacetyl", "COCC(=O){X}"),
]
HALOGENS = [("chloride", "Cl"), ("bromide", "Br"), ("iodide", "I")]


def to_graph(name, smiles, role):
    mol = Chem.AddHs(Chem.MolFromSmiles(smiles))
    Chem.Kekulize(mol, clearAromaticFlags=True)
    params = AllChem.ETKDGv3()
    params.randomSeed = 20230101
    if AllChem.EmbedMolecule(mol, params) != 0:
        sys.exit(f"embedding failed for {name}")
    AllChem.MMFFOptimizeMolecule(mol)
    conf = mol.GetConformer()
    atoms = []
    for atom in mol.GetAtoms():
        p = conf.GetAtomPosition(atom.GetIdx())
        atoms.append({"el": atom.GetSymbol(), "q": atom.GetFormalCharge(),
                      "xyz": [round(p.x, 4), round(p.y, 4), round(p.z, 4)]})
    bonds = [[b.GetBeginAtomIdx(), b.GetEndAtomIdx(), int(b.GetBondTypeAsDouble())]
             for b in mol.GetBonds()]
    return {"name": name, "role": role, "atoms": atoms, "bonds": bonds}


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "data" / "library"
    for i, (name, smi) in enumerate(ALCOHOLS):
        g = to_graph(name, smi, "alcohol")
        (root / "alcohols" / f"{i:02d}_{name}.json").write_text(json.dumps(g) + "\n")
    k = 0
    for hname, x in HALOGENS:
        for sname, pattern in ACYL_SKELETONS:
            name = f"{sname}-{hname}"
            g = to_graph(name, pattern.format(X=x), "acyl_halide")
            (root / "acyl_halides" / f"{k:02d}_{name}.json").write_text(json.dumps(g) + "\n")
            k += 1


if __name__ == "__main__":
    main()
