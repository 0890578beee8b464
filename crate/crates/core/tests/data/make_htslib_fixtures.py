"""Regenerates the htslib-produced fixtures used by tests/htslib_compat.rs.

Requires pysam. Run from this directory: python3 make_htslib_fixtures.py
"""
import os
import random

import pysam

rng = random.Random(20240611)
CHROMS = [("1", 3_000_000), ("2", 1_500_000), ("X", 800_000)]


def write(path, lines):
    with open(path, "w") as f:
        f.writelines(l + "\n" for l in lines)


def bed_lines():
    out = []
    for chrom, size in CHROMS:
        begs = sorted(rng.randrange(0, size - 200_000) for _ in range(1200))
        for i, b in enumerate(begs):
            r = rng.random()
            span = rng.randint(1, 50) if r < 0.8 else rng.randint(1_000, 40_000) if r < 0.98 else rng.randint(100_000, 190_000)
            out.append(f"{chrom}\t{b}\t{b + span}\tf{chrom}_{i}")
    return out


def vcf_lines():
    out = ["##fileformat=VCFv4.2", "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO"]
    for chrom, size in CHROMS:
        for i, p in enumerate(sorted(rng.randrange(1, size) for _ in range(1500))):
            ref = "".join(rng.choice("ACGT") for _ in range(rng.choice([1, 1, 1, 2, 7, 40])))
            out.append(f"{chrom}\t{p}\tv{i}\t{ref}\tA\t.\tPASS\tDP={rng.randint(1, 99)}")
    return out


def queries(path, preset, n):
    t = pysam.TabixFile(path)
    data = [l for l in pysam.BGZFile(path).read().decode().split("\n") if l and not l.startswith("#")]
    where = {l: i for i, l in enumerate(data)}
    rows = []
    for _ in range(n):
        chrom, size = rng.choice(CHROMS)
        beg = rng.randrange(0, size)
        end = beg + rng.choice([1, 10, 1_000, 50_000, 400_000])
        hits = [where[l] for l in t.fetch(chrom, beg, end)]
        rows.append(f"{chrom}\t{beg}\t{end}\t{','.join(map(str, hits)) or '.'}")
    return rows


for name, lines, preset in [("htslib.bed", bed_lines(), "bed"), ("htslib.vcf", vcf_lines(), "vcf")]:
    write(name, lines)
    pysam.tabix_compress(name, name + ".gz", force=True)
    pysam.tabix_index(name + ".gz", preset=preset, force=True)
    os.remove(name)
    write(name + ".queries", queries(name + ".gz", preset, 150))
