"""
The three commands end to end
=============================

``train`` reads a flat key=value config, ``predict`` writes a system CUPT
file and ``evaluate`` prints the report.  The same entry point is installed as
the ``mwejoint`` console script; here we call it in-process.
"""
import tempfile
from pathlib import Path

from mwejoint.cli import main
from mwejoint.cupt import save_cupt
from mwejoint.toy import toy_corpus

work = Path(tempfile.mkdtemp(prefix="mwejoint-"))
save_cupt(toy_corpus(20), work / "train.cupt")
save_cupt(toy_corpus(8, seed=7), work / "dev.cupt")
(work / "xx.cfg").write_text("""\
# per-language run
language = xx
train = train.cupt
dev = dev.cupt
checkpoint = xx.model.json
log = xx.train.tsv
epochs = 80
learning_rate = 3e-3
alpha = 1/300
""")

print("train ->", main(["train", "--config", str(work / "xx.cfg")]))
print((work / "xx.train.tsv").read_text().splitlines()[-1])
print("predict ->", main(["predict", "--model", str(work / "xx.model.json"), "--input", str(work / "dev.cupt"),
                          "--output", str(work / "dev.pred.cupt"), "--emit-heads"]))
print("evaluate ->", main(["evaluate", "--gold", str(work / "dev.cupt"), "--pred", str(work / "dev.pred.cupt"),
                           "--train", str(work / "train.cupt")]))
print("outputs in", work)
