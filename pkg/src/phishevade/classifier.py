"""Rule-based logistic page classifier.

A classifier is a bias plus a set of classification rules.  Each rule is a
weighted conjunction of features; a rule is hit when every one of its
features has a non-zero value (frequency features must also reach the
detection threshold).  The raw score is ``bias + sum over hit rules of
weight * product of feature values`` and the decision score is the logistic
transform of the raw score; a page is flagged when the decision score
reaches the threshold.

Models may carry hashed feature names (64-hex SHA-256 digests); extraction
output is then hashed before hit testing.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace

from . import features as F
from .dom import DomTree
from .features import FeatureValueMap, extract_all_features, hash_feature

HEX64 = re.compile(r"^[0-9a-f]{64}$")

# Digests of the frequency feature names, for hashed-mode hit testing.
_FREQ_DIGESTS = frozenset(hash_feature(k) for k in F.FREQUENCY_KINDS)


class SchemaError(ValueError):
    """Model file is missing required keys or has the wrong shape."""


class HashFormatError(ValueError):
    """A digest is not 64 lowercase hex characters."""


class UnknownRuleError(KeyError):
    """A rule id does not exist in the classifier."""


@dataclass(frozen=True)
class ClassificationRule:
    id: str
    features: frozenset[str]
    weight: float

    def __post_init__(self):
        if not self.features:
            raise ValueError(f"rule {self.id!r} has no features")


@dataclass(frozen=True)
class Classifier:
    bias: float
    rules: tuple[ClassificationRule, ...]
    threshold: float = 0.5
    hashed: bool = False
    freq_detect_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        ids = [r.id for r in self.rules]
        if len(ids) != len(set(ids)):
            raise ValueError("rule ids must be unique")
        if self.hashed:
            for rule in self.rules:
                for feat in rule.features:
                    if not HEX64.match(feat):
                        raise HashFormatError(
                            f"rule {rule.id!r}: {feat!r} is not a 64-hex digest")

    def rule(self, rule_id: str) -> ClassificationRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise UnknownRuleError(rule_id)


def logistic(x: float) -> float:
    """Numerically stable e^x / (1 + e^x)."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _freq_features(hashed: bool) -> frozenset[str]:
    return _FREQ_DIGESTS if hashed else F.FREQUENCY_KINDS


def rule_hit(rule: ClassificationRule, fmap: FeatureValueMap,
             freq_detect_threshold: float = 0.05, hashed: bool = False) -> bool:
    """True when every rule feature is non-zero and every frequency feature
    reaches the detection threshold."""
    freq = _freq_features(hashed)
    for feat in rule.features:
        value = fmap.get(feat, 0.0)
        if value == 0.0:
            return False
        if feat in freq and value < freq_detect_threshold:
            return False
    return True


def prepare_map(classifier: Classifier, fmap: FeatureValueMap) -> FeatureValueMap:
    """Hash the map keys when the classifier carries hashed feature names."""
    if not classifier.hashed:
        return fmap
    return {hash_feature(k): v for k, v in fmap.items()}


def rule_contribution(rule: ClassificationRule, fmap: FeatureValueMap) -> float:
    product = rule.weight
    for feat in rule.features:
        product *= fmap.get(feat, 0.0)
    return product


def hit_rules(classifier: Classifier, fmap: FeatureValueMap,
              prepared: bool = False) -> list[ClassificationRule]:
    if not prepared:
        fmap = prepare_map(classifier, fmap)
    t = classifier.freq_detect_threshold
    return [r for r in classifier.rules
            if rule_hit(r, fmap, t, classifier.hashed)]


def raw_score(classifier: Classifier, fmap: FeatureValueMap) -> float:
    fmap = prepare_map(classifier, fmap)
    x = classifier.bias
    for rule in hit_rules(classifier, fmap, prepared=True):
        x += rule_contribution(rule, fmap)
    return x


def score(classifier: Classifier, fmap: FeatureValueMap) -> float:
    return logistic(raw_score(classifier, fmap))


def is_phishing(classifier: Classifier, fmap: FeatureValueMap) -> bool:
    return score(classifier, fmap) >= classifier.threshold


def partition_rules(classifier: Classifier) -> tuple[list[ClassificationRule],
                                                     list[ClassificationRule]]:
    """(positive rules, negative rules); zero-weight rules are in neither."""
    positive = [r for r in classifier.rules if r.weight > 0]
    negative = [r for r in classifier.rules if r.weight < 0]
    return positive, negative


def find_subset_rules(classifier: Classifier) -> set[tuple[str, str]]:
    """Ordered pairs ``(r, r')`` of rule ids with ``features(r') subset-of
    features(r)`` and ``r != r'``."""
    pairs = set()
    for r in classifier.rules:
        for r2 in classifier.rules:
            if r.id != r2.id and r2.features <= r.features:
                pairs.add((r.id, r2.id))
    return pairs


def find_single_rules(classifier: Classifier) -> set[str]:
    """Rules whose every feature appears in no other rule."""
    singles = set()
    for r in classifier.rules:
        others = set()
        for r2 in classifier.rules:
            if r2.id != r.id:
                others |= r2.features
        if not (r.features & others):
            singles.add(r.id)
    return singles


def prune(classifier: Classifier, rule_ids) -> Classifier:
    """Zero the weights of the named rules; the rules stay in the model."""
    ids = set(rule_ids)
    known = {r.id for r in classifier.rules}
    missing = ids - known
    if missing:
        raise UnknownRuleError(sorted(missing)[0])
    rules = tuple(replace(r, weight=0.0) if r.id in ids else r
                  for r in classifier.rules)
    return replace(classifier, rules=rules)


@dataclass
class ScoreOracle:
    """Query-counting wrapper around a classifier.

    Single owner per attack: the counter is not synchronized.
    """

    classifier: Classifier
    query_count: int = 0

    def score_map(self, fmap: FeatureValueMap) -> float:
        self.query_count += 1
        return score(self.classifier, fmap)

    def score_page(self, page: DomTree) -> float:
        return self.score_map(extract_all_features(page))


def oracle_score(oracle: ScoreOracle, page: DomTree) -> float:
    return oracle.score_page(page)


# -- model files -----------------------------------------------------------

def _rule_to_dict(rule: ClassificationRule, strip_weights: bool) -> dict:
    entry: dict = {"id": rule.id, "features": sorted(rule.features)}
    if not strip_weights:
        entry["weight"] = rule.weight
    return entry


def save_model(classifier: Classifier, path, strip_weights: bool = False) -> None:
    """Write the model as JSON; ``strip_weights`` omits rule weights, the
    grey-box export."""
    doc = {
        "bias": classifier.bias,
        "threshold": classifier.threshold,
        "freq_detect_threshold": classifier.freq_detect_threshold,
        "hashed": classifier.hashed,
        "rules": [_rule_to_dict(r, strip_weights) for r in classifier.rules],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"model file is missing {key!r}")
    return doc[key]


def load_model(path) -> Classifier:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("model file must hold a JSON object")
    bias = _require(doc, "bias")
    threshold = _require(doc, "threshold")
    raw_rules = _require(doc, "rules")
    hashed = bool(doc.get("hashed", False))
    freq_t = float(doc.get("freq_detect_threshold", 0.05))
    rules = []
    for entry in raw_rules:
        rule_id = _require(entry, "id")
        feats = _require(entry, "features")
        weight = _require(entry, "weight")
        rules.append(ClassificationRule(str(rule_id), frozenset(feats),
                                        float(weight)))
    return Classifier(float(bias), tuple(rules), float(threshold),
                      hashed, freq_t)


def load_rule_features(path) -> list[tuple[str, frozenset[str]]]:
    """Load just ``(id, features)`` pairs; accepts weight-stripped exports."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    raw_rules = _require(doc, "rules")
    out = []
    for entry in raw_rules:
        out.append((str(_require(entry, "id")),
                    frozenset(_require(entry, "features"))))
    return out
