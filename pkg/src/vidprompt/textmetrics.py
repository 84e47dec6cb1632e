"""Open-ended answer scoring: BLEU-4, ROUGE-L, and corpus-level CIDEr.

One canonical tokenizer is shared by all metrics (and by dataset word-count
statistics): lowercase, split punctuation characters off as their own
tokens, then split on whitespace. Numeric parity with any particular
external evaluation script is not claimed; variant choices are reported in
``metric_metadata()``.

Variants, fixed and documented:

* BLEU-4: modified n-gram precisions (n = 1..4) clipped against the
  per-reference maxima; zero (or undefined) precisions are replaced by
  epsilon 1e-9; brevity penalty uses the closest reference length, shorter
  on ties. Empty candidates score 0.
* ROUGE-L: LCS F-measure with beta = 1, maximized over references.
* CIDEr: for each n, TF-IDF vectors with document frequency counted over
  the reference sets of the evaluated corpus and idf = ln((N + 1) / df)
  (the +1 keeps idf positive on tiny corpora, so a candidate equal to the
  sole reference still scores 10); per-pair score is the mean over n of
  10 x cosine(candidate vector, mean reference vector); the corpus score
  is the mean over pairs. No length penalty.
"""

from __future__ import annotations

import math
import re
from collections import Counter

from .errors import EmptyCorpusError

BLEU_EPSILON = 1e-9
_PUNCT = re.compile(r"([^\w\s]|_)")

TOKENIZER_NOTE = ("lowercase; punctuation split into separate tokens; "
                  "whitespace split")
CIDER_NOTE = ("tf-idf over corpus reference sets, idf=ln((N+1)/df), "
              "10x cosine vs mean reference vector, mean over n=1..4; "
              "no length penalty")


def metric_metadata() -> dict:
    return {"tokenizer": TOKENIZER_NOTE, "bleu_smoothing": BLEU_EPSILON,
            "cider_variant": CIDER_NOTE, "rouge_beta": 1.0}


def tokenize(text: str | list[str]) -> list[str]:
    """Canonical tokenization; token lists pass through unchanged."""
    if isinstance(text, list):
        return list(text)
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str | list[str], references: list[str | list[str]]) -> float:
    """Geometric mean of modified 1..4-gram precisions times brevity penalty."""
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    if not refs:
        raise EmptyCorpusError("bleu4: at least one reference required")
    c = len(cand)
    if c == 0:
        return 0.0

    log_sum = 0.0
    for n in range(1, 5):
        counts = _ngram_counts(cand, n)
        total = max(0, c - n + 1)
        if total == 0 or not counts:
            p = BLEU_EPSILON
        else:
            max_ref = Counter()
            for r in refs:
                for gram, cnt in _ngram_counts(r, n).items():
                    if cnt > max_ref[gram]:
                        max_ref[gram] = cnt
            clipped = sum(min(cnt, max_ref[gram]) for gram, cnt in counts.items())
            p = clipped / total if clipped > 0 else BLEU_EPSILON
        log_sum += math.log(p)

    # closest reference length; ties go to the shorter reference
    r = min((abs(len(t) - c), len(t)) for t in refs)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / 4.0)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str | list[str], references: list[str | list[str]]) -> float:
    """LCS-based F-measure (beta = 1), maximum over references."""
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    if not refs:
        raise EmptyCorpusError("rouge_l: at least one reference required")
    if not cand:
        return 0.0
    best = 0.0
    for ref in refs:
        if not ref:
            continue
        lcs = _lcs_length(cand, ref)
        if lcs == 0:
            continue
        p = lcs / len(cand)
        r = lcs / len(ref)
        best = max(best, 2.0 * p * r / (p + r))
    return best


def _cosine(u: dict, v: dict) -> float:
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    dot = sum(x * v.get(g, 0.0) for g, x in u.items())
    return dot / (nu * nv)


def cider(corpus: list[tuple[str | list[str], list[str | list[str]]]]) -> float:
    """Consensus TF-IDF n-gram similarity over a whole corpus."""
    if not corpus:
        raise EmptyCorpusError("cider: corpus has no candidate/reference pairs")
    tok_corpus = [(tokenize(cand), [tokenize(r) for r in refs])
                  for cand, refs in corpus]
    if any(not refs for _, refs in tok_corpus):
        raise EmptyCorpusError("cider: every pair needs at least one reference")
    n_docs = len(tok_corpus)

    scores = []
    for n in range(1, 5):
        df: Counter = Counter()
        for _, refs in tok_corpus:
            seen = set()
            for r in refs:
                seen.update(_ngram_counts(r, n).keys())
            df.update(seen)
        idf = {g: math.log((n_docs + 1) / max(d, 1)) for g, d in df.items()}
        default_idf = math.log(float(n_docs + 1))

        pair_scores = []
        for cand, refs in tok_corpus:
            cand_counts = _ngram_counts(cand, n)
            cand_vec = {g: c * idf.get(g, default_idf)
                        for g, c in cand_counts.items()}
            mean_ref: dict = {}
            for r in refs:
                for g, c in _ngram_counts(r, n).items():
                    mean_ref[g] = mean_ref.get(g, 0.0) + c * idf[g]
            k = len(refs)
            mean_ref = {g: v / k for g, v in mean_ref.items()}
            pair_scores.append(10.0 * _cosine(cand_vec, mean_ref))
        scores.append(pair_scores)

    per_pair = [sum(scores[n][i] for n in range(4)) / 4.0 for i in range(n_docs)]
    return sum(per_pair) / n_docs
