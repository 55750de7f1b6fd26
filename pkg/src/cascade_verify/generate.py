"""Seeded synthetic records for desk-scale and performance runs.

Values are drawn per annotation from a small hand-written profile when one
exists, otherwise from a fallback keyed on the annotation's scale.  Output
depends only on the dictionary, the count and the seed.
"""

from __future__ import annotations

import json
from collections.abc import Iterator
from typing import IO, Callable

import numpy as np

from .dictionary import ClassificationDictionary

CHUNK = 50_000

CONSEQUENCES = (
    ("missense_variant", 0.22),
    ("synonymous_variant", 0.15),
    ("intron_variant", 0.25),
    ("intergenic_variant", 0.12),
    ("3_prime_UTR_variant", 0.06),
    ("5_prime_UTR_variant", 0.03),
    ("splice_region_variant", 0.04),
    ("stop_gained", 0.02),
    ("frameshift_variant", 0.02),
    ("inframe_deletion", 0.02),
    ("inframe_insertion", 0.01),
    ("splice_donor_variant", 0.02),
    ("splice_acceptor_variant", 0.02),
    ("start_lost", 0.01),
    ("stop_lost", 0.01),
)

Column = list


def _choice(options, weights=None, missing: float = 0.0):
    opts = np.array(options, dtype=object)
    p = None if weights is None else np.asarray(weights, dtype=float) / np.sum(weights)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return opts[rng.choice(len(opts), size=n, p=p)]

    return _with_missing(draw, missing)


def _with_missing(draw, missing: float):
    def sample(rng: np.random.Generator, n: int) -> Column:
        values = draw(rng, n).tolist()
        if missing:
            gone = (rng.random(n) < missing).tolist()
            values = [None if g else v for v, g in zip(values, gone)]
        return values

    return sample


def _uniform(low: float, high: float, digits: int = 4, missing: float = 0.0):
    return _with_missing(lambda rng, n: np.round(rng.uniform(low, high, n), digits), missing)


def _log_uniform(low_exp: float, high_exp: float, missing: float = 0.0):
    def draw(rng, n):
        return np.array([float(f"{x:.4g}") for x in 10.0 ** rng.uniform(low_exp, high_exp, n)])

    return _with_missing(draw, missing)


def _integers(low: int, high: int, missing: float = 0.0):
    return _with_missing(lambda rng, n: rng.integers(low, high, n, endpoint=True), missing)


def _poisson(lam: float, missing: float = 0.0):
    return _with_missing(lambda rng, n: rng.poisson(lam, n), missing)


def _genotype_quality(missing: float = 0.0):
    # mostly confident calls with a tail of poor ones
    def draw(rng, n):
        good = rng.random(n) < 0.9
        return np.where(good, rng.integers(60, 100, n), rng.integers(0, 60, n))

    return _with_missing(draw, missing)


def _flag(p: float, missing: float = 0.0):
    return _with_missing(lambda rng, n: rng.random(n) < p, missing)


PROFILES: dict[str, Callable[[np.random.Generator, int], Column]] = {
    "gnomAD_AF": _log_uniform(-6, 0, missing=0.3),
    "gnomAD_Hom": _poisson(0.05, missing=0.3),
    "gnomAD_Hem": _poisson(0.02, missing=0.3),
    "gnomAD_PopMax_AN": _integers(0, 30_000, missing=0.3),
    "gnomAD_PopMax_AF": _log_uniform(-6, 0, missing=0.3),
    "pLI": _uniform(0, 1, missing=0.05),
    "REVEL_score": _uniform(0, 1, missing=0.4),
    "PolyPhen": _uniform(0, 1, missing=0.4),
    "Polyphen_2_HVAR": _uniform(0, 1, missing=0.4),
    "QD": _uniform(2, 40, digits=2),
    "QUAL": _uniform(0, 5000, digits=1),
    "Proband_GQ": _genotype_quality(),
    "Min_GQ": _genotype_quality(),
    "Most_Severe_Consequence": _choice(*zip(*CONSEQUENCES)),
    "Transcript_consequence": _choice(*zip(*CONSEQUENCES)),
    "Canonical_Annotation": _choice(*zip(*CONSEQUENCES), missing=0.1),
    "Mostly_Expressed_In": _choice(("Brain", "Liver", "Muscle", "Heart", "Testis", "Whole Blood")),
    "HGMD_Tags": _choice(("DM", "DM?", "DP", "DFP", "FP"), missing=0.95),
    "Region_Masked": _flag(0.05),
    "Called_De_Novo": _flag(0.001),
    "Called_CNV": _flag(0.001),
    "Clinvar_Benign": _choice(("Benign", "Likely benign", "Pathogenic", "Uncertain significance"), missing=0.9),
    "Clinvar_stars": _choice(("0", "1", "2", "3", "4"), (0.3, 0.4, 0.2, 0.08, 0.02), missing=0.9),
    "Clinvar_Trusted_Simplified": _choice(("benign", "pathogenic", "vus"), missing=0.95),
    "ClinVar_Status": _choice(("Pathogenic", "Likely pathogenic", "VUS", "Benign"), missing=0.9),
    "Inheritance_Mode": _choice(("Homozygous Recessive", "X-linked", "Heterozygous", "De novo"), missing=0.9),
    "Compound_Het": _choice(("Proband", "Parent"), missing=0.98),
}

# Fallback by scale: scores for variant-level data, labels otherwise.
_FALLBACK = {
    "gene": _uniform(0, 1),
    "variant": _uniform(0, 1),
    "variant in transcript": _choice(("canonical", "alternative")),
    "position": _flag(0.05),
}


def profile_for(dictionary: ClassificationDictionary, annotation: str):
    if annotation in PROFILES:
        return PROFILES[annotation]
    entry = dictionary.entries[annotation]
    return _FALLBACK.get(entry.scale, _uniform(0, 1))


def _ids(rng: np.random.Generator, start: int, n: int) -> list[str]:
    chroms = rng.integers(1, 23, n).tolist()
    offsets = rng.integers(0, 97, n).tolist()
    bases = np.array(list("ACGT"))
    ref = rng.integers(0, 4, n)
    alt = (ref + rng.integers(1, 4, n)) % 4
    refs, alts = bases[ref].tolist(), bases[alt].tolist()
    # positions strictly increase with the record index, so ids are unique
    return [
        f"chr{c}:{10_000 + (start + i) * 97 + o} {r}>{a}"
        for i, (c, o, r, a) in enumerate(zip(chroms, offsets, refs, alts))
    ]


def generate_lines(dictionary: ClassificationDictionary, count: int, seed: int) -> Iterator[str]:
    """Yield ``count`` serialized records, one JSON object per line."""
    rng = np.random.default_rng(seed)
    names = sorted(dictionary.entries)
    samplers = [profile_for(dictionary, n) for n in names]
    dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":")).encode
    done = 0
    while done < count:
        n = min(CHUNK, count - done)
        ids = _ids(rng, done, n)
        columns = [s(rng, n) for s in samplers]
        for i in range(n):
            obj = {"_id": ids[i]}
            for name, col in zip(names, columns):
                v = col[i]
                if v is not None:
                    obj[name] = v
            yield dumps(obj) + "\n"
        done += n


def write_records(dictionary: ClassificationDictionary, count: int, seed: int, out: IO[str]) -> int:
    written = 0
    for line in generate_lines(dictionary, count, seed):
        out.write(line)
        written += 1
    return written
