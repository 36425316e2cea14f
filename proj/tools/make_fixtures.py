#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under data/ and tests/data/.

  data/labels/issue_status_labels.jsonl  1500 labelled sentences, split
                                         532/334/259 train and 165/121/89 test
  tests/data/synthetic_corpus.jsonl      20 on-topic papers, 5 off-topic, 1 malformed line

Output is deterministic; rerunning overwrites the files byte-for-byte.
"""

import json
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent

METHODS = ["graph reasoning network", "iterative retriever", "question decomposer", "evidence ranker",
           "span extractor", "entity linker", "chain-of-reasoning reader", "passage reranker",
           "memory network", "bridge entity selector", "dense retriever", "answer verifier"]
TASKS = ["multi-hop question answering", "open-domain retrieval", "reading comprehension",
         "supporting fact prediction", "answer explanation", "compositional reasoning",
         "evidence aggregation", "bridge entity discovery"]
DATASETS = ["HotpotQA", "WikiHop", "2WikiMultiHopQA", "MuSiQue", "FEVER", "Natural Questions"]
METRICS = ["exact match", "F1", "joint F1", "supporting fact accuracy", "recall at 20", "answer accuracy"]
ADJ = ["flexible", "lightweight", "modular", "scalable", "interpretable", "robust"]
ISSUES = ["noisy distractor paragraphs", "shortcut reasoning", "long evidence chains",
          "annotation artifacts", "retrieval errors that propagate", "unanswerable questions",
          "limited training data", "single-hop shortcuts"]

RESOLVED = [
    "In this paper, we present {m}, a {a} approach for {t}.",
    "We show that our {m} improves {metric} on {d} by a clear margin.",
    "Our experiments demonstrate that the {m} achieves state-of-the-art {metric} on {d}.",
    "Finally, we show that the proposed {m} facilitates interpretability for {t}.",
    "We introduce {m} and achieve strong {metric} gains on {d}.",
    "The results confirm that {m} successfully resolves {issue} in {t}.",
]
NEUTRAL = [
    "We train the {m} for {n} epochs on {d}.",
    "The {m} uses {n} layers with a hidden size of {k}.",
    "We have conducted a series of experiments.",
    "For the {ordinal} setting, we pre-train the model on {d} and fine-tune on {d2}.",
    "Each question in {d} is paired with {n} candidate paragraphs.",
    "The training set contains {k} examples drawn from {d}.",
]
FINDING = [
    "Future work may explore {m} for {t}.",
    "A limitation of our approach is that it struggles with {issue}.",
    "It remains unclear whether {m} generalizes beyond {d}.",
    "More robust methods are needed to handle {issue} in {t}.",
    "Future directions include extending the {m} to {t} where data is scarce.",
    "Further study should address {issue} before deployment.",
]
ORDINALS = ["first", "second", "third", "fourth"]


def fill(template, rng, theme=None):
    return template.format(
        m=theme["method"] if theme else rng.choice(METHODS),
        t=theme["task"] if theme else rng.choice(TASKS),
        d=rng.choice(DATASETS), d2=rng.choice(DATASETS), metric=rng.choice(METRICS),
        a=rng.choice(ADJ), issue=theme["issue"] if theme else rng.choice(ISSUES),
        n=rng.randint(2, 12), k=rng.randint(100, 90000), ordinal=rng.choice(ORDINALS))


def make_labels():
    rng = random.Random(20230101)
    counts = {"train": {"resolved": 532, "neutral": 334, "finding": 259},
              "test": {"resolved": 165, "neutral": 121, "finding": 89}}
    templates = {"resolved": RESOLVED, "neutral": NEUTRAL, "finding": FINDING}
    rows = []
    for split in ("train", "test"):
        for label, n in counts[split].items():
            for _ in range(n):
                rows.append({"text": fill(rng.choice(templates[label]), rng), "label": label, "split": split})
    rng.shuffle(rows)
    out = ROOT / "data" / "labels" / "issue_status_labels.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def build_doc(corpusid, title, sections, bib, year):
    """sections: list of (header, [paragraph, ...]); offsets are code points."""
    text = ""
    headers, paragraphs = [], []
    for header, paras in sections:
        start = len(text)
        text += header
        headers.append({"start": start, "end": len(text)})
        text += "\n"
        for p in paras:
            start = len(text)
            text += p
            paragraphs.append({"start": start, "end": len(text)})
            text += "\n"
    return {"corpusid": corpusid, "title": title, "text": text, "year": year,
            "annotations": {"section_headers": headers, "paragraphs": paragraphs, "bibentry": bib}}


def make_corpus():
    rng = random.Random(4242)
    themes = []
    for i in range(20):
        themes.append({"method": METHODS[i % len(METHODS)], "task": TASKS[(i * 3) % len(TASKS)],
                       "issue": ISSUES[(i * 5) % len(ISSUES)]})
    docs = []
    insight_headers = ["Conclusion", "Discussion", "Limitations", "Conclusion and Future Work",
                       "6 Discussion and Conclusions"]
    for i in range(20):
        cid = 101 + i
        theme = themes[i]
        # Later papers take up the issue an earlier one left open.
        if i >= 3:
            theme = dict(theme, issue=themes[i - 3]["issue"])
        title = f"{theme['method'].capitalize()} for {theme['task']} on HotpotQA"
        intro = (f"HotpotQA is a benchmark for {theme['task']}. "
                 f"Prior work by Yang et al. (2018) introduced the dataset. "
                 f"We study the {theme['method']} in this setting.")
        method = (f"Our {theme['method']} encodes each paragraph separately. "
                  f"We report results in Table 2 and Fig. 3 of the appendix.")
        insight = []
        for _ in range(rng.randint(1, 2)):
            sents = [fill(rng.choice(RESOLVED), rng, theme), fill(rng.choice(NEUTRAL), rng),
                     fill(rng.choice(FINDING), rng, theme)]
            if rng.random() < 0.5:
                sents.append(f"As shown in Table {rng.randint(1, 5)}, the gains hold on {rng.choice(DATASETS)}.")
            if rng.random() < 0.4:
                sents.append(f"Following Smith et al. (2020), we also report {rng.choice(METRICS)} \u2014 see Fig. 2.")
            insight.append(" ".join(sents))
        sections = [("1 Introduction", [intro]), ("2 Approach", [method])]
        headers = rng.sample(insight_headers, rng.randint(1, 2))
        sections.append((headers[0], insight[:1]))
        if len(headers) > 1 and len(insight) > 1:
            sections.append((headers[1], insight[1:]))
        elif len(insight) > 1:
            sections[-1] = (headers[0], insight)
        sections.append(("Acknowledgements", ["We thank the reviewers."]))
        bib = []
        earlier = list(range(101, cid))
        for k, cited in enumerate(sorted(rng.sample(earlier, min(len(earlier), rng.randint(1, 4))))):
            bib.append({"key": f"b{k}", "cited_corpusid": cited})
        bib.append({"key": f"b{len(bib)}", "cited_corpusid": 9000 + rng.randint(0, 50)})
        bib.append({"key": f"b{len(bib)}", "cited_corpusid": None})
        docs.append(build_doc(cid, title, sections, bib, 2018 + i // 5))

    off_topic = []
    for j in range(5):
        off_topic.append(build_doc(201 + j, f"Image segmentation study {j}",
                                   [("Introduction", ["We segment images with convolutional networks."]),
                                    ("Conclusion", ["Segmentation quality improves with more data."])],
                                   [{"key": "b0", "cited_corpusid": 101}], 2020))
    lines = [json.dumps(d, ensure_ascii=False, sort_keys=True) for d in docs + off_topic]
    lines.insert(7, '{"corpusid": 999, "title": "truncated HotpotQA record", "text": ')
    order = random.Random(99).sample(range(len(lines)), len(lines))
    out = ROOT / "tests" / "data" / "synthetic_corpus.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        for i in order:
            f.write(lines[i] + "\n")


if __name__ == "__main__":
    make_labels()
    make_corpus()
