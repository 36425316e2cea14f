#!/usr/bin/env python3
"""Writes tests/data/kg_citation_golden.json for the seven-paper fixture.

Independent of the C++ code: keyword ranking, vocabulary intersection and
forest layout are recomputed here from the fixture definition.
"""
import json
import math
import re
import sys
from collections import Counter
from pathlib import Path

STOPWORDS = set("""a about above after again against all also am an and any are as at be because been before
being below between both but by can could did do does doing down during each et al etc few for from further
had has have having he her here hers herself him himself his how however i if in into is it its itself just may
me might more most must my myself no nor not now of off on once only or other our ours ourselves out over own
same she should so some such than that the their theirs them themselves then there these they this those
through thus to too under until up us very was we were what when where which while who whom why will with
would you your yours yourself yourselves e g ie eg via within without""".split())

PAPERS = {
    1: ("A dataset for diverse explainable multi-hop question answering",
        "We present a multi-hop dataset with supporting facts.",
        "Future work may explore retrieval for multi-hop questions.", []),
    2: ("Reading comprehension over multiple paragraphs",
        "We show that a reading comprehension model handles multi-hop questions.",
        "A limitation is that single-hop shortcuts remain.", [1]),
    3: ("Retrieval of evidence paragraphs",
        "We introduce dense retrieval of evidence paragraphs for multi-hop questions.",
        "It remains unclear whether retrieval scales to open domains.", [1]),
    4: ("Evaluation of single-hop shortcuts",
        "We show that single-hop shortcuts inflate evaluation scores.",
        "More robust evaluation metrics are needed.", [2]),
    5: ("Graph networks for reasoning chains",
        "We present a graph network for reasoning chains.",
        "We train the network for ten epochs.", [1, 2]),
    6: ("Question decomposition for retrieval",
        "We introduce question decomposition for open domain retrieval.",
        "Future work may explore decomposition for evaluation.", [1, 3]),
    7: ("Open domain retrieval at scale",
        "Our experiments demonstrate that open domain retrieval scales to millions of documents.",
        "Further study should address latency.", [3]),
}
# Paper 5's second sentence is methodological, so it carries no Finding.
FINDING_EMPTY = {5}


def tokens(s):
    return [t for t in re.findall(r"[0-9a-z]+(?:-[0-9a-z]+)*", s.lower()) if t not in STOPWORDS]


def profile(pid):
    title, r, f, _ = PAPERS[pid]
    return title + "\n" + r + " " + f


DF = Counter()
for pid in PAPERS:
    DF.update(set(tokens(profile(pid))))


def idf(term):
    return math.log((1 + len(PAPERS)) / (1 + DF[term])) + 1


def ranked(pid, k):
    tf = Counter(t for t in tokens(profile(pid)) if not re.fullmatch(r"[0-9-]+", t))
    scored = sorted(((c * idf(t), t) for t, c in tf.items()), key=lambda x: (-x[0], x[1]))
    return scored[:k]


def vocabulary(a, b, k):
    first = {t: s for s, t in ranked(a, 2 * k)}
    shared = [(first[t] + s, t) for s, t in ranked(b, 2 * k) if t in first]
    shared.sort(key=lambda x: (-x[0], x[1]))
    return [t for _, t in shared[:k]]


# Forest for N=1, M=2, T=3: root p1 (cited four times), its two best citers
# p2 and p3, then p2's citers p4, p5 and p3's citers p6, p7.
PARENT = {2: 1, 3: 1, 4: 2, 5: 2, 6: 3, 7: 3}

nodes = []
for pid in sorted(PAPERS):
    title, r, f, _ = PAPERS[pid]
    nodes.append({"id": pid, "label": title, "title": {
        "keywords": [t for _, t in ranked(pid, 5)],
        "issue_resolved": r,
        "issue_finding": "" if pid in FINDING_EMPTY else f}})
edges = [{"from": c, "to": p, "label": ", ".join(vocabulary(p, c, 3)), "title": f"{c} cites {p}", "arrows": "to"}
         for c, p in sorted(PARENT.items())]
doc = {"kind": "inheritance", "params": {"N": 1, "M": 2, "T": 3, "topic": "HotpotQA"}, "nodes": nodes, "edges": edges}
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests/data/kg_citation_golden.json"
out.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
