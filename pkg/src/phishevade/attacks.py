"""Evasion attacks: white-box greedy, grey-box delete-then-add, black-box
modify-then-add with rollback.

All three mutate a detected page until the oracle's decision score falls
below the threshold, differing in what they know about the classifier:

* white: full model (rules and weights); each step greedily picks the
  feature deletion or rule addition with the largest exact score influence.
* grey: rule feature sets but no weights; tentatively deletes features of
  hit rules, then tentatively adds absent rules, keeping a change only when
  the queried score drops.
* black: nothing but the score oracle; modifies every modifiable node one at
  a time keeping improvements, then randomly adds harvested invisible
  elements with a rollback checkpoint every few additions.

Influence values are exact score differences, so accepted white-box steps
are the one-step-lookahead optimum.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import NamedTuple

from . import features as F
from .classifier import (
    ClassificationRule,
    Classifier,
    ScoreOracle,
    prepare_map,
    rule_contribution,
    rule_hit,
)
from .dom import DomTree, serialize, walk_elements, walk_text_nodes
from .features import FeatureValueMap, extract_all_features, term_spans
from .mutation import (
    MODIFIABLE_ATTRS,
    ElementSpec,
    FeatureAbsent,
    MutationPlan,
    PathError,
    TermNotFound,
    UnsupportedMutation,
    UrlFeatureUnaddable,
    _apply_in_place,
    add_invisible_element,
    addable_feature,
    apply,
    apply_op,
    deletable_feature,
    modify_attribute,
    modify_text,
    plan_add_rule,
    plan_delete_feature,
)

WHITE, GREY, BLACK = "white", "grey", "black"
SUCCESS, EXHAUSTED, BUDGET_EXHAUSTED = "success", "exhausted", "budget_exhausted"


class RuleAlreadyHit(ValueError):
    """Influence of adding a rule is undefined when the page already hits it."""


@dataclass
class Knowledge:
    """What the attacker knows, plus the score oracle every level may query."""

    level: str
    oracle: ScoreOracle
    model: Classifier | None = None                      # white only
    rules: list[tuple[str, frozenset[str]]] | None = None  # grey only
    threshold: float = 0.5
    freq_detect_threshold: float = 0.05


def white_knowledge(model: Classifier, oracle: ScoreOracle) -> Knowledge:
    return Knowledge(WHITE, oracle, model=model, threshold=model.threshold,
                     freq_detect_threshold=model.freq_detect_threshold)


def grey_knowledge(rules, oracle: ScoreOracle, threshold: float = 0.5,
                   freq_detect_threshold: float = 0.05) -> Knowledge:
    return Knowledge(GREY, oracle, rules=list(rules), threshold=threshold,
                     freq_detect_threshold=freq_detect_threshold)


def black_knowledge(oracle: ScoreOracle, threshold: float = 0.5) -> Knowledge:
    return Knowledge(BLACK, oracle, threshold=threshold)


class TrajectoryStep(NamedTuple):
    step: int
    op: str
    score: float


@dataclass
class AttackResult:
    success: bool
    status: str
    final_page: DomTree
    trajectory: list[TrajectoryStep]
    mutated_features: int
    mutated_rules: int
    queries: int
    elapsed: float
    additions: int = 0
    score_after_modification: float | None = None
    rng_seed: int | None = None

    def to_dict(self, seed_path: str = "", final_path: str = "",
                include_timing: bool = False) -> dict:
        return {
            "success": self.success,
            "status": self.status,
            "seed_path": seed_path,
            "final_path": final_path,
            "steps": [{"op": s.op, "score": s.score} for s in self.trajectory],
            "mutated_features": self.mutated_features,
            "mutated_rules": self.mutated_rules,
            "queries": self.queries,
            "additions": self.additions,
            "score_after_modification": self.score_after_modification,
            "elapsed_ms": round(self.elapsed * 1000.0, 3) if include_timing else None,
            "rng_seed": self.rng_seed,
        }


# -- influence ---------------------------------------------------------------

def influence_feature(classifier: Classifier, fmap: FeatureValueMap,
                      feature: str) -> float:
    """Exact raw-score drop from zeroing ``feature``: the summed
    contributions of the currently hit rules that rely on it."""
    if fmap.get(feature, 0.0) == 0.0:
        raise FeatureAbsent(feature)
    t = classifier.freq_detect_threshold
    total = 0.0
    for rule in classifier.rules:
        if feature in rule.features and rule_hit(rule, fmap, t):
            total += rule_contribution(rule, fmap)
    return total


def _post_addition_map(fmap: FeatureValueMap, rule_features,
                       freq_detect_threshold: float) -> FeatureValueMap:
    post = dict(fmap)
    for feat in rule_features:
        value = post.get(feat, 0.0)
        if value == 0.0 or \
                (F.is_frequency_feature(feat) and value < freq_detect_threshold):
            post[feat] = 1.0
    return post


def _unsatisfied(rule_features, fmap: FeatureValueMap,
                 freq_detect_threshold: float) -> set[str]:
    out = set()
    for feat in rule_features:
        value = fmap.get(feat, 0.0)
        if value == 0.0 or \
                (F.is_frequency_feature(feat) and value < freq_detect_threshold):
            out.add(feat)
    return out


def influence_rule(classifier: Classifier, fmap: FeatureValueMap,
                   rule: ClassificationRule) -> float:
    """Exact raw-score change from adding every feature of ``rule``.

    Counts every rule the addition flips to hit, i.e. rules whose
    unsatisfied features are covered by the added set (subset rules are the
    common case), with added features valued at 1.
    """
    t = classifier.freq_detect_threshold
    if rule_hit(rule, fmap, t):
        raise RuleAlreadyHit(rule.id)
    post = _post_addition_map(fmap, rule.features, t)
    total = 0.0
    for other in classifier.rules:
        if rule_hit(other, fmap, t):
            continue
        if _unsatisfied(other.features, fmap, t) <= set(rule.features):
            total += rule_contribution(other, post)
    return total


# -- shared helpers ------------------------------------------------------------

def _rule_products(classifier: Classifier, fmap: FeatureValueMap) -> dict[str, float]:
    """Gated value product per non-zero-weight rule: the product of its
    feature values when hit, else 0.  A rule counts as mutated when this
    changes, covering both hit flips and frequency-value drift."""
    prepared = prepare_map(classifier, fmap)
    t = classifier.freq_detect_threshold
    out = {}
    for r in classifier.rules:
        if r.weight == 0.0:
            continue
        if rule_hit(r, prepared, t, classifier.hashed):
            product = 1.0
            for feat in r.features:
                product *= prepared.get(feat, 0.0)
            out[r.id] = product
        else:
            out[r.id] = 0.0
    return out


def _known_rule_products(rules, fmap: FeatureValueMap, t: float) -> dict[str, float]:
    """Weight-free variant over grey knowledge (id, features) pairs."""
    out = {}
    for rule_id, feats in rules:
        if _unsatisfied(feats, fmap, t):
            out[rule_id] = 0.0
        else:
            product = 1.0
            for feat in feats:
                product *= fmap.get(feat, 0.0)
            out[rule_id] = product
    return out


def _changed(before: dict[str, float], after: dict[str, float]) -> int:
    return sum(1 for rule_id in before if before[rule_id] != after[rule_id])


def _term_payloads(rules_features) -> set[str]:
    prefix = F.PAGE_TERM + "="
    return {f[len(prefix):] for feats in rules_features for f in feats
            if f.startswith(prefix)}


_PLAN_FAILURES = (UnsupportedMutation, TermNotFound, FeatureAbsent,
                  UrlFeatureUnaddable, PathError)


# -- white-box ------------------------------------------------------------------

def white_box(knowledge: Knowledge, page: DomTree,
              only_rules: set[str] | None = None) -> AttackResult:
    """Greedy two-step loop: delete the positive-rule feature with maximal
    influence while it dominates every addable negative rule; otherwise add
    the negative rule with minimal (most negative) influence; stop when the
    score drops below the threshold or neither step applies."""
    clf = knowledge.model
    oracle = knowledge.oracle
    tau = knowledge.threshold
    t = clf.freq_detect_threshold
    started = time.perf_counter()
    queries_before = oracle.query_count

    tree = page
    score = oracle.score_page(tree)
    trajectory = [TrajectoryStep(0, "initial", score)]
    mutated_features = mutated_rules = 0
    status = SUCCESS if score < tau else None

    rules = [r for r in clf.rules
             if only_rules is None or r.id in only_rules]
    positive = [r for r in rules if r.weight > 0]
    negative = [r for r in rules if r.weight < 0]
    avoid_terms = _term_payloads([r.features for r in positive])
    banned_deletions: set[str] = set()
    banned_additions: set[str] = set()
    step = 0
    feature_universe = {f for r in rules for f in r.features}
    max_steps = max(50, 4 * (len(rules) + len(feature_universe)))

    while status is None and step < max_steps:
        fmap = extract_all_features(tree)
        products_before = _rule_products(clf, fmap)

        deletions: dict[str, float] = {}
        for feat in sorted({f for r in positive for f in r.features}):
            if feat in banned_deletions or not deletable_feature(feat):
                continue
            if fmap.get(feat, 0.0) == 0.0:
                continue
            delta = influence_feature(clf, fmap, feat)
            if delta > 0:
                deletions[feat] = delta

        additions: dict[str, tuple[float, ClassificationRule]] = {}
        for rule in negative:
            if rule.id in banned_additions:
                continue
            if rule_hit(rule, fmap, t):
                continue
            unsat = _unsatisfied(rule.features, fmap, t)
            if not all(addable_feature(f) for f in unsat):
                continue
            delta = influence_rule(clf, fmap, rule)
            if delta < 0:
                additions[rule.id] = (delta, rule)

        plan: MutationPlan | None = None
        op_label = ""
        while plan is None:
            best_del = min(deletions.items(), key=lambda kv: (-kv[1], kv[0]),
                           default=None)
            best_add = min(additions.items(), key=lambda kv: (kv[1][0], kv[0]),
                           default=None)
            if best_del and (best_add is None
                             or best_del[1] >= -best_add[1][0]):
                feat = best_del[0]
                try:
                    plan = plan_delete_feature(tree, feat, t, avoid_terms)
                    op_label = f"delete {feat}"
                except _PLAN_FAILURES:
                    banned_deletions.add(feat)
                    del deletions[feat]
            elif best_add:
                rule = best_add[1][1]
                try:
                    plan = plan_add_rule(tree, rule.features, t)
                    op_label = f"add rule {rule.id}"
                except _PLAN_FAILURES:
                    banned_additions.add(rule.id)
                    del additions[rule.id]
            else:
                break
        if plan is None:
            status = EXHAUSTED
            break

        tree = apply(tree, plan)
        score = oracle.score_page(tree)
        step += 1
        mutated_features += 1
        products_after = _rule_products(clf, extract_all_features(tree))
        mutated_rules += _changed(products_before, products_after)
        trajectory.append(TrajectoryStep(step, op_label, score))
        if score < tau:
            status = SUCCESS

    if status is None:
        status = EXHAUSTED
    return AttackResult(
        success=status == SUCCESS,
        status=status,
        final_page=tree,
        trajectory=trajectory,
        mutated_features=mutated_features,
        mutated_rules=mutated_rules,
        queries=oracle.query_count - queries_before,
        elapsed=time.perf_counter() - started,
    )


# -- grey-box -------------------------------------------------------------------

def grey_box(knowledge: Knowledge, page: DomTree) -> AttackResult:
    """Phase 1 tentatively deletes each deletable feature of the known hit
    rules, keeping a deletion only when the queried score drops; phase 2
    does the same for additions of known rules the page does not hit."""
    oracle = knowledge.oracle
    tau = knowledge.threshold
    t = knowledge.freq_detect_threshold
    rules = knowledge.rules or []
    started = time.perf_counter()
    queries_before = oracle.query_count

    tree = page
    score = oracle.score_page(tree)
    trajectory = [TrajectoryStep(0, "initial", score)]
    mutated_features = mutated_rules = 0
    step = 0
    avoid_terms = _term_payloads([feats for _, feats in rules])

    fmap = extract_all_features(tree)
    hit_ids = {rule_id for rule_id, product
               in _known_rule_products(rules, fmap, t).items() if product}
    reliance: dict[str, int] = {}
    for _, feats in rules:
        for feat in feats:
            reliance[feat] = reliance.get(feat, 0) + 1
    candidates = sorted(
        {f for rule_id, feats in rules if rule_id in hit_ids
         for f in feats if deletable_feature(f)},
        key=lambda f: (-reliance[f], f))

    for feat in candidates:
        if score < tau:
            break
        fmap = extract_all_features(tree)
        if fmap.get(feat, 0.0) == 0.0:
            continue
        try:
            plan = plan_delete_feature(tree, feat, t, avoid_terms)
        except _PLAN_FAILURES:
            continue
        candidate = apply(tree, plan)
        new_score = oracle.score_page(candidate)
        if new_score < score:
            products_before = _known_rule_products(rules, fmap, t)
            tree, score = candidate, new_score
            products_after = _known_rule_products(
                rules, extract_all_features(tree), t)
            step += 1
            mutated_features += 1
            mutated_rules += _changed(products_before, products_after)
            trajectory.append(TrajectoryStep(step, f"delete {feat}", score))

    if score >= tau:
        for rule_id, feats in sorted(rules):
            if score < tau:
                break
            fmap = extract_all_features(tree)
            if not _unsatisfied(feats, fmap, t):
                continue
            try:
                plan = plan_add_rule(tree, feats, t)
            except _PLAN_FAILURES:
                continue
            candidate = apply(tree, plan)
            new_score = oracle.score_page(candidate)
            if new_score < score:
                products_before = _known_rule_products(rules, fmap, t)
                tree, score = candidate, new_score
                products_after = _known_rule_products(
                    rules, extract_all_features(tree), t)
                step += 1
                mutated_features += 1
                mutated_rules += _changed(products_before, products_after)
                trajectory.append(TrajectoryStep(step, f"add rule {rule_id}", score))

    status = SUCCESS if score < tau else EXHAUSTED
    return AttackResult(
        success=status == SUCCESS,
        status=status,
        final_page=tree,
        trajectory=trajectory,
        mutated_features=mutated_features,
        mutated_rules=mutated_rules,
        queries=oracle.query_count - queries_before,
        elapsed=time.perf_counter() - started,
    )


# -- black-box ------------------------------------------------------------------

def _modification_candidates(tree: DomTree) -> list[tuple[str, tuple[int, ...], str]]:
    candidates: list[tuple[str, tuple[int, ...], str]] = []
    for path, el in walk_elements(tree):
        entry = MODIFIABLE_ATTRS.get(el.tag)
        if not entry:
            continue
        for attr_node in el.attr_nodes:
            if attr_node.attr_name in entry[0]:
                candidates.append(("attr", path, attr_node.attr_name))
    for path, node in walk_text_nodes(tree):
        seen: set[str] = set()
        for term, _, _ in term_spans(node.value):
            if len(term) >= 2 and term not in seen:
                seen.add(term)
                candidates.append(("text", path, term))
    return candidates


def black_box(knowledge: Knowledge, page: DomTree, pool: list[ElementSpec],
              batch: int = 3, budget: int = 2000, rng_seed: int = 0,
              trace: list | None = None) -> AttackResult:
    """Phase 1 applies every candidate node modification one at a time and
    keeps those that lower the queried score.  Phase 2 randomly adds
    invisible elements drawn from the pool; every ``batch`` additions the
    score is checked and the batch is rolled back unless it improved.
    """
    oracle = knowledge.oracle
    clf = oracle.classifier     # reporting only: rule flips are not used to guide
    tau = knowledge.threshold
    rng = random.Random(rng_seed)
    started = time.perf_counter()
    queries_before = oracle.query_count

    tree = page
    score = oracle.score_page(tree)
    trajectory = [TrajectoryStep(0, "initial", score)]
    mutated_features = mutated_rules = 0
    step = 0

    for kind, path, arg in _modification_candidates(tree):
        if score < tau:
            break
        try:
            if kind == "attr":
                op = modify_attribute(tree, path, arg)
                label = f"modify {arg} at {list(path)}"
            else:
                op = modify_text(tree, path, arg)
                label = f"split term {arg!r}"
        except (UnsupportedMutation, TermNotFound, PathError):
            continue
        candidate = apply_op(tree, op)
        new_score = oracle.score_page(candidate)
        if new_score < score:
            products_before = _rule_products(clf, extract_all_features(tree))
            tree, score = candidate, new_score
            products_after = _rule_products(clf, extract_all_features(tree))
            step += 1
            mutated_features += 1
            mutated_rules += _changed(products_before, products_after)
            trajectory.append(TrajectoryStep(step, label, score))

    score_after_modification = score
    additions = 0
    status = SUCCESS if score < tau else None

    if status is None and pool:
        while score >= tau and additions < budget:
            if trace is not None:
                trace.append(("checkpoint", serialize(tree)))
            work = tree.copy()
            applied = 0
            draws = 0
            while applied < batch and additions < budget and draws < 10 * batch:
                draws += 1
                spec = pool[rng.randrange(len(pool))]
                try:
                    op = add_invisible_element(work, spec)
                except UnsupportedMutation:
                    continue
                _apply_in_place(work, op)
                additions += 1
                applied += 1
            if applied == 0:
                break
            new_score = oracle.score_page(work)
            if new_score < score:
                products_before = _rule_products(clf, extract_all_features(tree))
                tree, score = work, new_score
                products_after = _rule_products(clf, extract_all_features(tree))
                step += 1
                mutated_rules += _changed(products_before, products_after)
                trajectory.append(
                    TrajectoryStep(step, f"add batch of {applied}", score))
                if trace is not None:
                    trace.append(("keep", serialize(tree)))
            else:
                if trace is not None:
                    trace.append(("rollback", serialize(tree)))
        if score < tau:
            status = SUCCESS

    if status is None:
        status = BUDGET_EXHAUSTED
    return AttackResult(
        success=status == SUCCESS,
        status=status,
        final_page=tree,
        trajectory=trajectory,
        mutated_features=mutated_features,
        mutated_rules=mutated_rules,
        queries=oracle.query_count - queries_before,
        elapsed=time.perf_counter() - started,
        additions=additions,
        score_after_modification=score_after_modification,
        rng_seed=rng_seed,
    )


def run_attack(knowledge: Knowledge, page: DomTree,
               pool: list[ElementSpec] | None = None, batch: int = 3,
               budget: int = 2000, rng_seed: int = 0) -> AttackResult:
    """Dispatch on the knowledge level."""
    if knowledge.level == WHITE:
        result = white_box(knowledge, page)
    elif knowledge.level == GREY:
        result = grey_box(knowledge, page)
    elif knowledge.level == BLACK:
        result = black_box(knowledge, page, pool or [], batch, budget, rng_seed)
    else:
        raise ValueError(f"unknown knowledge level {knowledge.level!r}")
    if result.rng_seed is None:
        result.rng_seed = rng_seed
    return result
