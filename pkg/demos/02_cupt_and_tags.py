"""
Reading CUPT and tagging expressions
====================================

A CUPT file is CoNLL-U plus an eleventh column holding MWE codes.  We parse a
sentence with a gapped verbal idiom, turn its expressions into per-token
labels (with the ``o-`` label on tokens inside the gap) and decode them back.
"""
from mwejoint.cupt import MweInstance, extract_mwes, parse_cupt, with_mwes, write_cupt
from mwejoint.tags import build_vocab, decode, encode

TEXT = """\
# source_sent_id = demo-1
# text = I would give this job a go
1\tI\tI\tPRON\t_\t_\t3\tnsubj\t_\t_\t*
2\twould\twould\tAUX\t_\t_\t3\taux\t_\t_\t*
3\tgive\tgive\tVERB\t_\t_\t0\troot\t_\t_\t1:VID
4\tthis\tthis\tDET\t_\t_\t5\tdet\t_\t_\t*
5\tjob\tjob\tNOUN\t_\t_\t3\tiobj\t_\t_\t*
6\ta\ta\tDET\t_\t_\t7\tdet\t_\t_\t1
7\tgo\tgo\tNOUN\t_\t_\t3\tobj\t_\t_\t1

"""

(sent,) = parse_cupt(TEXT)
mwes = extract_mwes(sent)
print("expressions:", mwes)

tags = encode(len(sent), mwes)
for tok, tag in zip(sent.tokens, tags):
    print(f"{tok.form:>6}  {tag}")

# decoding is total: any label string yields a set of expressions
print("decoded:", decode(tags))
print("repair of a stray I- label:", decode(["O", "I-VID", "O", "I-VID"]))

# a second, overlapping-in-span expression of another category is fine
both = with_mwes(sent, mwes + [MweInstance("LVC.full", (4, 5))])
print(encode(len(both), extract_mwes(both)))
print(write_cupt([both]))

print("label vocabulary:", build_vocab([both]).labels)
