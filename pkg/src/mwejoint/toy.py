"""A tiny synthetic CUPT corpus: two categories, gapped and contiguous MWEs, gold trees."""
from __future__ import annotations

import numpy as np

from .cupt import MweInstance, Sentence, Token, with_mwes

# (words, lemmas, heads, [(category, positions)])
TEMPLATES = [
    ("S would give this job a go", "S would give this job a go", [3, 3, 0, 5, 3, 7, 3], [("VID", (3, 6, 7))]),
    ("S gave it a go", "S give it a go", [2, 0, 2, 5, 2], [("VID", (2, 4, 5))]),
    ("S made a decision", "S make a decision", [2, 0, 4, 2], [("LVC.full", (2, 4))]),
    ("S made the final decision today", "S make the final decision today", [2, 0, 5, 5, 2, 2],
     [("LVC.full", (2, 5))]),
    ("S took a walk", "S take a walk", [2, 0, 4, 2], [("LVC.full", (2, 4))]),
    ("S pulled my leg", "S pull my leg", [2, 0, 4, 2], [("VID", (2, 4))]),
    ("S spilled the beans", "S spill the beans", [2, 0, 4, 2], [("VID", (2, 4))]),
    ("S kicked the bucket", "S kick the bucket", [2, 0, 4, 2], [("VID", (2, 4))]),
    ("S saw the film", "S see the film", [2, 0, 4, 2], []),
    ("S took a long walk", "S take a long walk", [2, 0, 5, 5, 2], [("LVC.full", (2, 5))]),
    ("S read the book", "S read the book", [2, 0, 4, 2], []),
]
SUBJECTS = ["I", "she", "they", "we", "he", "you"]


def make_sentence(words, lemmas, heads, mwes, sent_id: str | None = None) -> Sentence:
    tokens = tuple(
        Token(index=i, form=w, lemma=l.lower(), upos="_", head=h, deprel="dep" if h else "root")
        for i, (w, l, h) in enumerate(zip(words, lemmas, heads), 1)
    )
    comments = (f"# source_sent_id = {sent_id}",) if sent_id else ()
    sent = Sentence(tokens, comments)
    return with_mwes(sent, [MweInstance(c, p) for c, p in mwes])


def toy_corpus(n_sentences: int = 20, seed: int = 0) -> list[Sentence]:
    """Every template once (cycling), each with a random subject."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_sentences):
        words, lemmas, heads, mwes = TEMPLATES[k % len(TEMPLATES)]
        subj = SUBJECTS[int(rng.integers(len(SUBJECTS)))]
        ws = [subj if w == "S" else w for w in words.split()]
        ls = [subj if w == "S" else w for w in lemmas.split()]
        out.append(make_sentence(ws, ls, heads, mwes, f"toy-{k + 1}"))
    return out
