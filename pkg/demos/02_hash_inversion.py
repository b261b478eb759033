"""Recover hashed feature names by hashing corpus-derived candidates.

A protected model ships only SHA-256 digests of its feature strings.  The
extractors enumerate every feature a sample corpus can produce; hashing the
candidates and matching digests recovers the concealed names, and the
recovered set partitions the rules by how attackable they are.
"""

from phishevade import (
    Corpus,
    CorpusPage,
    harvest_candidates,
    hash_feature,
    infer_rules,
    invert_hashes,
    parse_html,
)
from phishevade.classifier import ClassificationRule, Classifier

PHISH = """
<html><body><p>please verify your account today</p>
<input type="password"></body></html>
"""
LEGIT = """
<html><body><p>privacy policy and contact page</p>
<a href="https://news.example.org/a">news</a></body></html>
"""

corpus = Corpus(pages=[
    CorpusPage("http://verify-account.badhost.test/now",
               parse_html(PHISH, "http://verify-account.badhost.test/now"),
               "phish"),
    CorpusPage("https://town.example.org/hall",
               parse_html(LEGIT, "https://town.example.org/hall"), "legit"),
], url_list=["http://promo.linkfarm.test/win/big"])

candidates = harvest_candidates(corpus)
print(f"harvested {len(candidates)} candidate feature strings, e.g.:")
for name in sorted(candidates)[:8]:
    print(f"  {name}")

# The "protected" model hides these five features behind digests.
secret_features = ["PageTerm=verify", "PageTerm=account", "PageHasPswdInputs",
                   "PageTerm=privacy", "PageTerm=completely-absent"]
manifest = {hash_feature(f) for f in secret_features}

report = invert_hashes(candidates, manifest)
print(f"\nmatched {len(report.recovered)}/{len(manifest)} digests "
      f"after hashing {report.candidates_tried} candidates:")
for digest, name in sorted(report.recovered.items()):
    print(f"  {digest[:16]}...  ->  {name}")
print(f"unrecovered: {len(report.unrecovered)} "
      "(their preimages never occur in the corpus)")


def hashed_rule(rule_id, feats, weight):
    return ClassificationRule(rule_id,
                              frozenset(hash_feature(f) for f in feats), weight)


protected = Classifier(bias=-0.4, hashed=True, rules=(
    hashed_rule("r1", {"PageTerm=verify", "PageTerm=account"}, 1.4),
    hashed_rule("r2", {"PageHasPswdInputs", "PageTerm=completely-absent"}, 0.9),
    hashed_rule("r3", {"PageTerm=completely-absent"}, 0.7),
))
parts = infer_rules(protected, report.recovered)
print("\nrule knowledge after inversion:")
print(f"  fully inferred (deletable and addable): {sorted(parts['fully_inferred'])}")
print(f"  partially inferred (deletable only):    {sorted(parts['partially_inferred'])}")
print(f"  opaque (cannot be targeted):            {sorted(parts['opaque'])}")
