"""Recovering hashed feature names by hashing corpus-derived candidates.

A hashed model only stores SHA-256 digests of its feature strings.  Every
feature string that real pages and URLs can produce is enumerable, so running
the extractors over a corpus yields candidate strings whose digests can be
matched against the model's manifest.  Recovery is complete for every
manifest digest whose preimage occurs in the corpus.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .classifier import HEX64, Classifier, HashFormatError
from .dom import DomTree, load_page
from .features import extract_page_features, extract_url_features, hash_feature

PHISH = "phish"
LEGIT = "legit"


@dataclass
class CorpusPage:
    url: str
    tree: DomTree
    label: str

    def __post_init__(self):
        if self.label not in (PHISH, LEGIT):
            raise ValueError(f"bad corpus label {self.label!r}")


@dataclass
class Corpus:
    pages: list[CorpusPage] = field(default_factory=list)
    url_list: list[str] = field(default_factory=list)


@dataclass
class InversionReport:
    recovered: dict[str, str]          # digest -> canonical string
    unrecovered: set[str]
    candidates_tried: int
    elapsed: float

    def recovery_rate(self) -> float:
        total = len(self.recovered) + len(self.unrecovered)
        return len(self.recovered) / total if total else 0.0


def load_corpus(manifest_path) -> Corpus:
    """Read a JSON-lines corpus manifest.

    Each record is ``{"url": ..., "path": ..., "label": "phish"|"legit"}``;
    records without a ``path`` contribute a bare URL only.  Paths are
    resolved relative to the manifest file.
    """
    import os

    base = os.path.dirname(os.path.abspath(manifest_path))
    corpus = Corpus()
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            url = record["url"]
            path = record.get("path")
            if path:
                full = path if os.path.isabs(path) else os.path.join(base, path)
                corpus.pages.append(CorpusPage(
                    url, load_page(full, url), record.get("label", LEGIT)))
            else:
                corpus.url_list.append(url)
    return corpus


def harvest_candidates(corpus: Corpus) -> set[str]:
    """All canonical feature strings the corpus can produce."""
    candidates: set[str] = set()
    for page in corpus.pages:
        candidates.update(extract_page_features(page.tree).keys())
        candidates.update(f.canonical for f in extract_url_features(page.url))
    for url in corpus.url_list:
        candidates.update(f.canonical for f in extract_url_features(url))
    return candidates


def check_manifest(manifest) -> set[str]:
    digests = set()
    for digest in manifest:
        if not HEX64.match(digest):
            raise HashFormatError(f"not a 64-hex digest: {digest!r}")
        digests.add(digest)
    return digests


def load_manifest(path) -> set[str]:
    """Read a digest manifest: one 64-hex digest per line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh]
    return check_manifest(line for line in lines if line)


def save_manifest(digests, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for digest in sorted(digests):
            fh.write(digest + "\n")


def invert_hashes(candidates, manifest) -> InversionReport:
    """Match candidate strings against a digest manifest.

    Deterministic: the recovered map depends only on the candidate and
    manifest sets.  Candidate hashing is a pure map, so chunked parallel
    hashing would merge to the same report; at this scale one pass is used.
    """
    targets = check_manifest(manifest)
    started = time.perf_counter()
    recovered: dict[str, str] = {}
    tried = 0
    for candidate in sorted(set(candidates)):
        tried += 1
        digest = hash_feature(candidate)
        if digest in targets:
            recovered[digest] = candidate
    elapsed = time.perf_counter() - started
    return InversionReport(
        recovered=recovered,
        unrecovered=targets - recovered.keys(),
        candidates_tried=tried,
        elapsed=elapsed,
    )


FULLY_INFERRED = "fully_inferred"
PARTIALLY_INFERRED = "partially_inferred"
OPAQUE = "opaque"


def infer_rules(classifier: Classifier, recovered: dict[str, str]) -> dict[str, set[str]]:
    """Partition a hashed classifier's rules by digest coverage.

    Fully inferred rules (every digest recovered) can be deleted and added;
    partially inferred rules can only be deleted; opaque rules cannot be
    targeted at all.
    """
    if not classifier.hashed:
        raise ValueError("rule inference applies to hashed classifiers")
    out = {FULLY_INFERRED: set(), PARTIALLY_INFERRED: set(), OPAQUE: set()}
    for rule in classifier.rules:
        known = sum(1 for digest in rule.features if digest in recovered)
        if known == len(rule.features):
            out[FULLY_INFERRED].add(rule.id)
        elif known:
            out[PARTIALLY_INFERRED].add(rule.id)
        else:
            out[OPAQUE].add(rule.id)
    return out


def report_to_dict(report: InversionReport, include_timing: bool = False) -> dict:
    return {
        "recovered": dict(sorted(report.recovered.items())),
        "unrecovered": sorted(report.unrecovered),
        "candidates_tried": report.candidates_tried,
        "elapsed_ms": round(report.elapsed * 1000.0, 3) if include_timing else None,
    }
