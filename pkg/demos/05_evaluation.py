"""
Scoring predictions
===================

Global scores match predicted and gold expressions by exact token sets.
Unseen scores keep only gold expressions whose lemma multiset never occurs in
training.  Variant scores keep seen expressions with a new surface form.
Finally we check the correlation between seen-expression rate and F1 over
fourteen languages.
"""
from pathlib import Path

from mwejoint.cupt import read_cupt
from mwejoint.evaluate import evaluate, seen_ratio_correlation

fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "eval"
gold = read_cupt(fixtures / "gold.cupt")
pred = read_cupt(fixtures / "pred.cupt")
train = read_cupt(fixtures / "train.cupt")

print(evaluate(gold, pred, train).table())

# (unseen %, global F1) per language
table = {"DE": (37, 76.17), "EL": (31, 72.62), "EU": (15, 80.03), "FR": (22, 79.42), "GA": (69, 30.07),
         "HE": (60, 48.30), "HI": (45, 73.62), "IT": (29, 63.76), "PL": (22, 81.02), "PT": (24, 73.34),
         "RO": (7, 90.46), "SV": (31, 71.58), "TR": (26, 69.46), "ZH": (38, 69.63)}
r = seen_ratio_correlation([(100 - u, f1) for u, f1 in table.values()])
print(f"\nPearson r between seen % and global F1: {r:.3f}")
