#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The convsearch Authors
"""Independent reference for the synthetic experiment.

Re-implements tokenization, BM25, the reformulation methods, re-ranking,
reciprocal rank fusion and the metrics directly from their definitions and
prints the metrics table as CSV (method,stage,metric,value). The C++ test
suite compares its own experiment output against the checked-in result.

No stemming or stopword removal: the fixture config leaves both off.
"""

import json
import math
import re
import sys
from collections import Counter
from pathlib import Path


def tokenize(text):
    return re.findall(r"[a-z0-9\x80-\xff]+", text.lower())


class Bm25:
    def __init__(self, docs, k1, b):
        self.docs = {d: Counter(tokenize(t)) for d, t in docs.items()}
        self.lens = {d: sum(c.values()) for d, c in self.docs.items()}
        self.n = len(docs)
        self.avgdl = sum(self.lens.values()) / self.n
        self.df = Counter()
        for c in self.docs.values():
            self.df.update(c.keys())
        self.k1, self.b = k1, b

    def term(self, term, doc):
        tf = self.docs[doc].get(term, 0)
        if tf == 0:
            return 0.0
        df = self.df[term]
        idf = math.log(1 + (self.n - df + 0.5) / (df + 0.5))
        norm = self.k1 * (1 - self.b + self.b * self.lens[doc] / self.avgdl)
        return idf * tf * (self.k1 + 1) / (tf + norm)

    def score(self, tokens, doc):
        return sum(self.term(t, doc) for t in tokens)

    def search(self, tokens, k):
        scored = [(self.score(tokens, d), d) for d in self.docs]
        scored = [(s, d) for s, d in scored if s > 0]
        scored.sort(key=lambda x: (-x[0], x[1]))
        return scored[:k]

    def max_term(self, term):
        return max((self.term(term, d) for d in self.docs), default=0.0)

    def top1(self, tokens):
        hits = self.search(tokens, 1)
        return hits[0][0] if hits else 0.0


def eligible(tags, k):
    return tags is None or tags[k] in ("NOUN", "PROPN", "ADJ")


def hqe(bm, turns, tags, r_topic, r_sub, eta, m):
    """turns[0..i-1] are u_1..u_i (token lists)."""
    i = len(turns)
    if i == 1:
        return list(turns[0])
    w_topic, w_sub = [], []
    for j in range(1, i + 1):
        for k, w in enumerate(turns[j - 1]):
            if not eligible(tags[j - 1] if tags else None, k):
                continue
            s = bm.max_term(w)
            if s > r_topic and w not in w_topic:
                w_topic.append(w)
            if s > r_sub and j >= i - m and w not in w_sub:
                w_sub.append(w)
    q = list(w_topic)
    if bm.top1(turns[-1]) < eta:
        q += w_sub
    return q + list(turns[-1])


def concat(turns, tags, m):
    i = len(turns)
    q = []
    for j in range(max(1, i - m), i):
        for k, w in enumerate(turns[j - 1]):
            if eligible(tags[j - 1] if tags else None, k):
                q.append(w)
    return q + list(turns[-1])


def rrf(lists, k, depth):
    fused = {}
    for lst in lists:
        for rank, doc in enumerate(lst, start=1):
            fused.setdefault(doc, []).append(1.0 / (k + rank))
    scored = [(sum(sorted(v)), d) for d, v in fused.items()]
    scored.sort(key=lambda x: (-x[0], x[1]))
    return [d for _, d in scored[:depth]]


def rerank(docs, scores, qid):
    return [d for _, d in sorted(((scores[(qid, d)], d) for d in docs), key=lambda x: (-x[0], x[1]))]


def ap(ranked, rel, depth=1000):
    nrel = sum(1 for g in rel.values() if g >= 1)
    hits, total = 0, 0.0
    for i, d in enumerate(ranked[:depth], start=1):
        if rel.get(d, 0) >= 1:
            hits += 1
            total += hits / i
    return total / nrel


def ndcg(ranked, rel, k):
    dcg = sum(rel.get(d, 0) / math.log2(i + 1) for i, d in enumerate(ranked[:k], start=1))
    ideal = sorted((g for g in rel.values() if g > 0), reverse=True)
    idcg = sum(g / math.log2(i + 1) for i, g in enumerate(ideal[:k], start=1))
    return dcg / idcg


def recall(ranked, rel, k):
    nrel = sum(1 for g in rel.values() if g >= 1)
    return sum(1 for d in ranked[:k] if rel.get(d, 0) >= 1) / nrel


def load_tsv_map(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if line:
            qid, text = line.split("\t", 1)
            out[qid] = text
    return out


def main(config_path):
    config_path = Path(config_path)
    base = config_path.parent
    cfg = json.loads(config_path.read_text())
    docs = dict(line.split("\t", 1) for line in (base / cfg["corpus"]).read_text().splitlines() if line)
    bm = Bm25(docs, cfg["bm25"]["k1"], cfg["bm25"]["b"])
    topics = json.loads((base / cfg["topics"]).read_text())
    sessions = [(str(t["number"]), [u["raw_utterance"] for u in sorted(t["turn"], key=lambda u: u["number"])])
                for t in topics]
    pos = {}
    for line in (base / cfg["pos"]).read_text().splitlines():
        row = json.loads(line)
        pos[row["qid"]] = row["tags"]
    qrels = {}
    for line in (base / cfg["qrels"]).read_text().splitlines():
        qid, _, doc, grade = line.split()
        qrels.setdefault(qid, {})[doc] = int(grade)
    rewrites = {name: load_tsv_map(base / p) for name, p in cfg["rewrites"].items()}
    rerank_scores = {}
    for method, p in cfg["rerank_scores"].items():
        table = {}
        for line in (base / p).read_text().splitlines():
            qid, doc, score = line.split("\t")
            table[(qid, doc)] = float(score)
        rerank_scores[method] = table

    h = cfg["hqe"]
    depth = cfg["retrieval_depth"]
    runs = {}
    for method in cfg["methods"]:
        run = {}
        for sid, utterances in sessions:
            turns = [tokenize(u) for u in utterances]
            qids = [f"{sid}_{i + 1}" for i in range(len(turns))]
            tags = [pos[q] for q in qids] if method.endswith("-pos") else None
            for i, qid in enumerate(qids):
                prefix, prefix_tags = turns[:i + 1], (tags[:i + 1] if tags else None)
                if method == "raw":
                    q = turns[i]
                elif method.startswith("concat"):
                    q = concat(prefix, prefix_tags, cfg["concat_window"])
                elif method.startswith("hqe"):
                    q = hqe(bm, prefix, prefix_tags, h["r_topic"], h["r_sub"], h["eta"], h["m_window"])
                else:
                    q = tokenize(rewrites[method.split(":", 1)[1]][qid])
                run[qid] = [d for _, d in bm.search(q, depth)]
        runs[method] = run

    rows = []

    def report(method, stage, run):
        judged = sorted(q for q, rel in qrels.items() if any(g >= 1 for g in rel.values()))
        for metric in cfg["metrics"]:
            vals = []
            for qid in judged:
                ranked = run.get(qid, [])
                rel = qrels[qid]
                if metric == "map":
                    vals.append(ap(ranked, rel))
                elif metric.startswith("ndcg@"):
                    vals.append(ndcg(ranked, rel, int(metric[5:])))
                else:
                    vals.append(recall(ranked, rel, int(metric.split("@")[1])))
            rows.append((method, stage, metric, sum(vals) / len(vals)))

    reranked = {}
    for method in cfg["methods"]:
        report(method, "first-stage", runs[method])
        if method in rerank_scores:
            reranked[method] = {q: rerank(docs_[:cfg["rerank_depth"]], rerank_scores[method], q)
                                for q, docs_ in runs[method].items()}
            report(method, "reranked", reranked[method])

    fusion = cfg.get("fusion", {"mode": "none"})
    if fusion["mode"] != "none":
        source = runs if fusion["mode"] == "early" else reranked
        fused = {}
        for qid in runs[fusion["methods"][0]]:
            lists = [source[m][qid] for m in fusion["methods"] if qid in source[m]]
            fused[qid] = rrf(lists, fusion["k"], fusion["depth"])
            if fusion["mode"] == "early" and fusion.get("designated"):
                fused[qid] = rerank(fused[qid], rerank_scores[fusion["designated"]], qid)
        report("fusion", fusion["mode"] + "-fusion", fused)

    print("method,stage,metric,value")
    for method, stage, metric, value in rows:
        print(f"{method},{stage},{metric},{value!r}")


if __name__ == "__main__":
    main(sys.argv[1])
