"""Score a page with a rule-based classifier and inspect its rules.

Walks through: parsing HTML into a DOM tree, extracting page and URL
features, the logistic decision score, and the two structural weaknesses a
rule set can carry (subset rules and single rules).
"""

from phishevade import (
    extract_all_features,
    find_single_rules,
    find_subset_rules,
    logistic,
    parse_html,
    partition_rules,
    raw_score,
    score,
)
from phishevade.classifier import ClassificationRule, Classifier

HTML = """
<html><body>
<p>urgent signin required</p>
<form action="http://collect.credsink.invalid/grab">
<input type="password" name="pass">
</form>
<a href="https://mail.example.com/inbox">mail</a>
</body></html>
"""


def rule(rule_id, feats, weight):
    return ClassificationRule(rule_id, frozenset(feats), weight)


model = Classifier(bias=-0.5, rules=(
    rule("pswd", {"PageHasPswdInputs"}, 1.1),
    rule("urgent-term", {"PageTerm=urgent"}, 1.2),
    rule("combo", {"PageTerm=urgent", "PageTerm=signin"}, 0.4),
    rule("good-words", {"PageTerm=privacy"}, -0.8),
    rule("lonely", {"PageTerm=jackpot"}, 0.9),
))

page = parse_html(HTML, "http://account-services.badhost.test/login")
fmap = extract_all_features(page)

print("extracted features:")
for name, value in sorted(fmap.items()):
    print(f"  {name} = {value:g}")

x = raw_score(model, fmap)
print(f"\nraw score x = {x:.3f}")
print(f"decision score = {score(model, fmap):.6f} "
      f"(logistic({x:.3f}) = {logistic(x):.6f})")
print("verdict:", "PHISH" if score(model, fmap) >= model.threshold else "BENIGN")

positive, negative = partition_rules(model)
print(f"\npositive rules: {[r.id for r in positive]}")
print(f"negative rules: {[r.id for r in negative]}")

print("\nsubset rule pairs (superset, sub-rule):")
for pair in sorted(find_subset_rules(model)):
    print(f"  {pair}")
print("single rules (features shared with no other rule):",
      sorted(find_single_rules(model)))
