#!/usr/bin/env python3
"""Writes the synthetic smoke-test corpus: pk_dataset.csv and bioactivity.csv.

Molecules are assembled from a handful of scaffolds and substituents; the
labels are noisy functions of simple structural counts so that a model has
something to learn. Run from this directory; output is deterministic.
"""
import csv
import math
import random
import re

SEED = 20170801
N_MOLECULES = 300
N_TARGETS = 16

TEMPLATES = [
    "{a}c1ccc({b})cc1",
    "{a}C1CCN(CC1){b}",
    "{a}c1ccncc1{b}",
    "{a}CC(=O)N{b}",
    "{a}C1CCCCC1{b}",
    "{a}c1ccc2ccccc2c1{b}",
]
PREFIXES = ["", "C", "CC", "O", "N", "F", "Cl", "CO", "OC(=O)", "FC(F)(F)", "N#C",
            "OCC", "CN(C)", "NS(=O)(=O)", "c1ccccc1", "NC(=O)"]
SUFFIXES = ["", "C", "CC", "O", "N", "F", "Cl", "OC", "C(=O)O", "C(F)(F)F", "C#N",
            "CCO", "N(C)C", "S(=O)(=O)N", "c1ccccc1", "C(=O)N"]

WEIGHTS = {"C": 12.011, "N": 14.007, "O": 15.999, "F": 18.998, "S": 32.06, "Cl": 35.45}


def build(template, a, b):
    s = template.format(a=a, b=b)
    return s.replace("()", "")


def atoms(smiles):
    return re.findall(r"Cl|Br|[BCNOSPFI]|[cnos]", smiles)


def features(smiles):
    at = atoms(smiles)
    heavy = len(at)
    n_n = sum(1 for x in at if x in ("N", "n"))
    n_o = sum(1 for x in at if x in ("O", "o"))
    hal = sum(1 for x in at if x in ("F", "Cl"))
    arom = sum(1 for x in at if x.islower())
    mw = sum(WEIGHTS[x.capitalize()] for x in at) + 1.008 * max(0, 2 * heavy - arom - hal)
    return heavy, n_n, n_o, hal, arom, mw


def clamp(v, lo, hi):
    return max(lo, min(hi, v))


def main():
    rng = random.Random(SEED)
    pool = sorted({build(t, a, b) for t in TEMPLATES for a in PREFIXES for b in SUFFIXES})
    rng.shuffle(pool)
    smiles = pool[:N_MOLECULES]

    rows = []
    for i, smi in enumerate(smiles):
        heavy, n_n, n_o, hal, arom, mw = features(smi)
        polar = n_n + n_o
        rotb = smi.count("C") - smi.count("C1") - smi.count("C(")
        desc = {
            "mw": round(mw + rng.gauss(0, 2), 3),
            "tpsa": round(max(0.0, 12.0 * polar + rng.gauss(0, 3)), 3),
            "rotb": max(0, rotb // 2 + rng.randint(0, 2)),
            "hbd": max(0, smi.count("O") // 2 + smi.count("N") // 2),
            "hba": polar,
            "heavy": heavy,
            "complexity": round(18.0 * heavy + 25.0 * arom / 6.0 + rng.gauss(0, 10), 2),
            "cbu": round(0.6 * hal + 0.1 * arom - 0.2 * polar + rng.gauss(0, 0.3), 3),
        }
        labels = {
            "ba": clamp(72 - 6 * n_n + 4 * hal - 0.08 * (mw - 200) + rng.gauss(0, 8), 0, 100),
            "ppbr": clamp(45 + 3.5 * arom - 4 * polar + 6 * hal + rng.gauss(0, 7), 0, 100),
            "vdss": clamp(math.exp(rng.gauss(3.5 + 0.15 * arom - 0.2 * polar, 0.6)), 0.5, 1999),
            "hl": clamp(math.exp(rng.gauss(1.8 + 0.05 * heavy - 0.1 * n_o, 0.5)), 0.2, 168),
        }
        present = [rng.random() < p for p in (0.55, 0.6, 0.5, 0.65)]
        if not any(present):
            present[rng.randrange(4)] = True
        row = {"id": f"M{i:04d}", "smiles": smi}
        row.update(desc)
        for (name, value), keep in zip(labels.items(), present):
            row[name] = f"{value:.3f}" if keep else ""
        rows.append(row)

    columns = ["id", "smiles", "mw", "tpsa", "rotb", "hbd", "hba", "heavy", "complexity",
               "cbu", "ba", "ppbr", "vdss", "hl"]
    with open("pk_dataset.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    # Bioactivity: the PK molecules plus the rest of the pool, sparse and
    # imbalanced.
    bio_smiles = pool[: min(len(pool), 600)]
    with open("bioactivity.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["smiles", "target_id", "active"])
        for smi in bio_smiles:
            heavy, n_n, n_o, hal, arom, mw = features(smi)
            for t in range(N_TARGETS):
                if rng.random() > 0.4:
                    continue
                score = (0.8 * (t % 4 == n_n % 4) + 0.5 * (hal > 0) * (t % 3 == 0)
                         + 0.4 * (arom >= 6) * (t % 2 == 1) + rng.gauss(0, 0.35))
                w.writerow([smi, f"T{t:03d}", 1 if score > 1.25 else 0])


if __name__ == "__main__":
    main()
