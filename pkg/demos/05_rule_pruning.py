"""Harden a classifier by zeroing its subset and single rules.

Subset rules ride along whenever their superset rule is added, handing the
attacker extra score drop per addition; pruning them raises the black-box
operation count.  The demo also checks the safety side: pruning the
low-weight rules shifts scores but flips no verdicts on a mixed corpus.
"""

import random

from phishevade import (
    ScoreOracle,
    black_knowledge,
    extract_all_features,
    find_single_rules,
    find_subset_rules,
    parse_html,
    prune,
    run_attack,
    score,
)
from phishevade.classifier import ClassificationRule, Classifier
from phishevade.mutation import ElementSpec


def rule(rule_id, feats, weight):
    return ClassificationRule(rule_id, frozenset(feats), weight)


rules = [rule("p_forms", {"PageHasForms"}, 0.5),
         rule("p_scripts", {"PageNumScriptTags>1"}, 0.5)]
for i in range(8):
    rules.append(rule(f"big{i}", {f"PageTerm=ta{i}", f"PageTerm=tb{i}"}, -0.3))
    rules.append(rule(f"sub{i}", {f"PageTerm=ta{i}"}, -0.25))
model = Classifier(bias=-0.2, rules=tuple(rules))

subs = sorted({sub for _, sub in find_subset_rules(model)})
print(f"subset rules to prune: {subs}")
hardened = prune(model, subs)

pool = [ElementSpec("div", (), f"ta{i} tb{i}") for i in range(8)]
pool += [ElementSpec("span", (), f"chaff{i}") for i in range(8)]

SEED = ("<html><head><title>pay portal</title></head><body>"
        "<form></form><script>a()</script><script>b()</script></body></html>")

print("\nblack-box attack cost, same RNG seeds, before and after pruning:")
print(f"{'seed':>6} {'ops (with subset rules)':>25} {'ops (pruned)':>15}")
for i in range(5):
    seed = parse_html(SEED, f"http://victim{i}.test/pay")
    kept = run_attack(black_knowledge(ScoreOracle(model)), seed, pool=pool,
                      rng_seed=i)
    removed = run_attack(black_knowledge(ScoreOracle(hardened)), seed,
                         pool=pool, rng_seed=i)
    ops_kept = kept.mutated_features + kept.additions
    ops_removed = removed.mutated_features + removed.additions
    print(f"{i:>6} {ops_kept:>25} {ops_removed:>15}")

print("\naccuracy impact of pruning on a mixed corpus:")
singles = sorted(find_single_rules(model))
for name, variant in [("subset", hardened),
                      ("single", prune(model, singles))]:
    rng = random.Random(5)
    changed = flipped = 0
    for i in range(100):
        terms = [f"ta{j}" for j in range(8) if rng.random() < 0.3]
        html = "<html><body>" + "".join(f"<p>{t}</p>" for t in terms) + \
            ("<form></form>" if rng.random() < 0.5 else "") + "</body></html>"
        page = parse_html(html, f"http://mix{i}.test/p")
        fmap = extract_all_features(page)
        base, after = score(model, fmap), score(variant, fmap)
        changed += base != after
        flipped += (base >= 0.5) != (after >= 0.5)
    print(f"  {name}-rule pruning: {changed}/100 scores shifted, "
          f"{flipped}/100 verdicts flipped")
