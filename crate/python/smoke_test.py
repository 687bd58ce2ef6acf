"""Smoke test for the n3truth Python module.

Build and install first:  pip install -e crates/n3truth-py --no-build-isolation
Run:  python3 python/smoke_test.py
"""

import json
import pathlib
import sys

import n3truth

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def check(ok, what):
    print(("ok   " if ok else "FAIL ") + what)
    return bool(ok)


def main():
    results = []
    liar = n3truth.Model.load(str(MODELS / "liar.model"))
    results.append(check(liar.validate() == [], "liar model is valid"))
    results.append(check(liar.eval("P(a)") == "true", "P(a) is true in the liar model"))
    results.append(check(liar.eval("lambda") == "undefined", "lambda is undefined with T empty"))

    fp = liar.fixpoint("nve")
    results.append(check(fp.is_fixed_point and fp.verified, "liar reaches a verified nve fixed point"))
    results.append(check(fp.naivety() == [], "naivety holds at that fixed point"))
    cell = fp.cell("J0")
    results.append(check("lambda" not in cell and "~lambda" not in cell, "lambda stays out of g"))
    bad = [p for p, asserted, _, v in fp.principles() if asserted and v]
    results.append(check(bad == [], "asserted principles have no violations"))
    results.append(check(json.loads(fp.to_json())["status"] == "fixed-point", "record round-trips through json"))

    curry = n3truth.Model.load(str(MODELS / "curry.model"))
    collapse = curry.fixpoint("n3nve")
    results.append(check(collapse.status == "collapse", "curry collapses under n3nve"))
    results.append(check("kappa" in (collapse.detail or ""), "collapse detail names kappa"))
    nve = curry.fixpoint("nve")
    results.append(check(nve.deduction_theorem([], "T('kappa')", "false") == (False, False),
                         "deduction theorem sides agree on T(kappa), false"))
    results.append(check("cut" in n3truth.curry_derivation(curry, "kappa").lower(), "curry derivation ends in a cut"))

    verdict, tree = n3truth.prove("P(a), ~P(a) => false", "k3")
    results.append(check(verdict == "proved" and tree, "explosion into false is proved in K3"))
    verdict, _ = n3truth.prove("=> P(a), ~P(a)", "k3")
    results.append(check(verdict == "not-proved", "excluded middle is not proved in K3"))

    code, out, _ = n3truth.run_cli(["fixpoint", str(MODELS / "curry.model"), "--cond", "n3nve"])
    results.append(check(code == 3 and out.startswith("fixpoint: collapse"), "cli exits 3 on collapse"))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
