"""
Joint MWE tagging and tree CRF training
=======================================

The model shares one small self-attention encoder between a tag classifier
and a bilinear arc scorer.  The training objective is
``loss_mwe + alpha * loss_dep``.  We train on a synthetic corpus and watch
both losses fall, then compare with a single-task run.
"""
from mwejoint.cupt import extract_mwes
from mwejoint.evaluate import mwe_based_prf
from mwejoint.model import ModelConfig
from mwejoint.toy import toy_corpus
from mwejoint.train import TrainConfig, predict_corpus, train

corpus = toy_corpus(20)
print(len(corpus), "sentences, e.g.", " ".join(corpus[0].forms))

multi = train(corpus, None, ModelConfig(alpha=1 / 300), TrainConfig(learning_rate=3e-3, epochs=60))
print(multi.log_text().splitlines()[0])
for line in multi.log_text().splitlines()[1::10]:
    print(line)

pred = predict_corpus(multi.model, corpus)
gold_mwes = [extract_mwes(s) for s in corpus]
print("train F1 after 60 epochs:", mwe_based_prf(gold_mwes, [extract_mwes(s) for s in pred]).f1)

tags, heads = multi.model.predict(corpus[0])
print("tags :", tags)
print("heads:", heads, "gold", list(corpus[0].heads))

# with alpha = 0 the tree branch gets exactly zero gradient; single-task drops it
single = train(corpus, None, ModelConfig(mode="single-task"), TrainConfig(learning_rate=3e-3, epochs=60))
print("single-task final loss_mwe", single.history[-1].loss_mwe, "multi-task", multi.history[-1].loss_mwe)
