"""Summary-quality metrics: BLEU, METEOR, ROUGE-L, ROUGE-W, keyword buckets."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

Tokens = Sequence[str]


class LengthMismatchError(ValueError):
    """Raised when candidate and reference collections disagree in size."""


# ---------------------------------------------------------------------------
# BLEU


def _ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(candidate: Tokens, reference: Tokens, n: int) -> tuple[int, int]:
    """(matched, total) clipped n-gram counts for one candidate/reference pair."""
    cand_counts = _ngram_counts(candidate, n)
    if not cand_counts:
        return 0, 0
    ref_counts = _ngram_counts(reference, n)
    matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return matched, sum(cand_counts.values())


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len > ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def corpus_bleu(
    candidates: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4
) -> list[float]:
    """Corpus-level BLEU-1..BLEU-max_n as percentages.

    Clipped n-gram counts are pooled over the whole corpus before the
    geometric mean, and the brevity penalty uses pooled lengths, so the
    scores are invariant to sample order.
    """
    if len(candidates) != len(references) or not candidates:
        raise LengthMismatchError(
            f"need equal, non-zero counts; got {len(candidates)} candidates "
            f"and {len(references)} references"
        )
    matched = [0] * max_n
    total = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            m, t = _clipped_matches(cand, ref, n)
            matched[n - 1] += m
            total[n - 1] += t
    bp = _brevity_penalty(cand_len, ref_len)
    precisions = [m / t if t else 0.0 for m, t in zip(matched, total)]
    scores = []
    for k in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:k]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:k]) / k
        scores.append(100.0 * bp * math.exp(log_mean))
    return scores


def sentence_bleu(candidate: Tokens, reference: Tokens, max_n: int = 4) -> float:
    """Smoothed per-sentence BLEU-max_n (percent).

    Add-one smoothing applies to n >= 2 only; unigram precision stays raw so
    a candidate with zero overlap still scores 0.
    """
    if not candidate:
        return 0.0
    precisions = []
    for n in range(1, max_n + 1):
        m, t = _clipped_matches(candidate, reference, n)
        if n == 1:
            precisions.append(m / t if t else 0.0)
        else:
            precisions.append((m + 1.0) / (t + 1.0))
    if precisions[0] == 0.0:
        return 0.0
    bp = _brevity_penalty(len(candidate), len(reference))
    log_mean = sum(math.log(p) for p in precisions) / max_n
    return 100.0 * bp * math.exp(log_mean)


def bleu(
    candidates: Sequence[Tokens],
    references: Sequence[Tokens],
    max_n: int = 4,
    level: str = "corpus",
) -> list[float]:
    """BLEU-1..max_n: pooled corpus scores, or macro-averaged sentence scores."""
    if level == "corpus":
        return corpus_bleu(candidates, references, max_n)
    if level == "sentence":
        if len(candidates) != len(references) or not candidates:
            raise LengthMismatchError(
                f"need equal, non-zero counts; got {len(candidates)} candidates "
                f"and {len(references)} references"
            )
        per_n = []
        for k in range(1, max_n + 1):
            scores = [sentence_bleu(c, r, k) for c, r in zip(candidates, references)]
            per_n.append(sum(scores) / len(scores))
        return per_n
    raise ValueError(f"level must be 'corpus' or 'sentence', got {level!r}")


# ---------------------------------------------------------------------------
# METEOR


@dataclass(frozen=True)
class MeteorConfig:
    alpha: float = 0.9
    beta: float = 3.0
    gamma: float = 0.5


_ALIGN_NODE_BUDGET = 500_000


def _align_exact(candidate: Tokens, reference: Tokens) -> tuple[int, int]:
    """(matches, chunks) of a maximum exact-match unigram alignment with the
    fewest chunks.

    A chunk is a maximal run of matches contiguous in both sentences. Ties
    between alignments of equal cardinality are resolved by exhaustive
    search over occurrence assignments; a node budget guards degenerate
    inputs, falling back to leftmost assignment.
    """
    cand_counts = Counter(candidate)
    ref_counts = Counter(reference)
    need = {w: min(cand_counts[w], ref_counts[w]) for w in cand_counts if w in ref_counts}
    total_matches = sum(need.values())
    if total_matches == 0:
        return 0, 0
    if tuple(candidate) == tuple(reference):
        return len(candidate), 1

    slots = [j for j, w in enumerate(reference) if w in need]
    slot_word = [reference[j] for j in slots]
    m = len(candidate)

    # Remaining occurrences of each needed word in candidate[i:].
    suffix: list[dict[str, int]] = [dict() for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        counts = dict(suffix[i + 1])
        w = candidate[i]
        if w in need:
            counts[w] = counts.get(w, 0) + 1
        suffix[i] = counts

    memo: dict[tuple[int, int, int], int] = {}
    nodes = 0
    infeasible = total_matches + 1

    def matched_of(word: str, mask: int) -> int:
        count = 0
        for bit, w in enumerate(slot_word):
            if w == word and mask >> bit & 1:
                count += 1
        return count

    def search(i: int, mask: int, prev_slot: int) -> int:
        # prev_slot: ref position matched at candidate position i-1, else -2
        # (a sentinel -1 would collide with j - 1 when j is 0).
        nonlocal nodes
        if i == m:
            return 0 if bin(mask).count("1") == total_matches else infeasible
        key = (i, mask, prev_slot)
        if key in memo:
            return memo[key]
        nodes += 1
        if nodes > _ALIGN_NODE_BUDGET:
            return infeasible
        word = candidate[i]
        best = infeasible
        if word in need:
            done = matched_of(word, mask)
            # Skipping is allowed only if later occurrences can still fill the quota.
            if done + suffix[i + 1].get(word, 0) >= need[word]:
                best = min(best, search(i + 1, mask, -2))
            if done < need[word]:
                for bit, j in enumerate(slots):
                    if slot_word[bit] != word or mask >> bit & 1:
                        continue
                    new_chunk = 0 if prev_slot == j - 1 else 1
                    sub = search(i + 1, mask | 1 << bit, j)
                    if sub + new_chunk < best:
                        best = sub + new_chunk
        else:
            best = search(i + 1, mask, -2)
        memo[key] = best
        return best

    chunks = search(0, 0, -2)
    if chunks > total_matches:
        # Budget exceeded: leftmost-occurrence assignment.
        used = [False] * len(reference)
        quota = dict(need)
        chunks = 0
        prev_j = -2
        for w in candidate:
            if quota.get(w, 0) <= 0:
                prev_j = -2
                continue
            for j, rw in enumerate(reference):
                if rw == w and not used[j]:
                    used[j] = True
                    quota[w] -= 1
                    if j != prev_j + 1:
                        chunks += 1
                    prev_j = j
                    break
            else:
                prev_j = -2
    return total_matches, chunks


def meteor(
    candidate: Tokens, reference: Tokens, config: MeteorConfig = MeteorConfig()
) -> float:
    """Exact-match METEOR in [0, 1]; zero when no unigram aligns."""
    matches, chunks = _align_exact(candidate, reference)
    if matches == 0:
        return 0.0
    precision = matches / len(candidate)
    recall = matches / len(reference)
    fmean = precision * recall / (config.alpha * precision + (1.0 - config.alpha) * recall)
    frag = chunks / matches
    return (1.0 - config.gamma * frag**config.beta) * fmean


# ---------------------------------------------------------------------------
# ROUGE


def lcs_length(a: Tokens, b: Tokens) -> int:
    """Longest common subsequence length via the classic quadratic table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


def _lcs_fscore(p: float, r: float) -> float:
    if p == 0.0 or r == 0.0:
        return 0.0
    beta = p / r
    return (1.0 + beta * beta) * p * r / (r + beta * beta * p)


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    """LCS-based F-score in [0, 1] with the precision/recall ratio as beta."""
    if not candidate or not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    return _lcs_fscore(lcs / len(candidate), lcs / len(reference))


def rouge_w(candidate: Tokens, reference: Tokens, weight_exponent: float = 1.2) -> float:
    """Weighted-LCS F-score favoring consecutive matches.

    Uses the run-length weight f(k) = k**weight_exponent and its inverse to
    map the weighted LCS back to a [0, 1] score.
    """
    if weight_exponent <= 1.0:
        raise ValueError(f"weight_exponent must be > 1, got {weight_exponent}")
    if not candidate or not reference:
        return 0.0
    m, n = len(candidate), len(reference)

    def f(k: float) -> float:
        return k**weight_exponent

    c = [[0.0] * (n + 1) for _ in range(m + 1)]
    w = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if candidate[i - 1] == reference[j - 1]:
                k = w[i - 1][j - 1]
                c[i][j] = c[i - 1][j - 1] + f(k + 1) - f(k)
                w[i][j] = k + 1
            elif c[i - 1][j] >= c[i][j - 1]:
                c[i][j] = c[i - 1][j]
            else:
                c[i][j] = c[i][j - 1]
    wlcs = c[m][n]
    if wlcs == 0.0:
        return 0.0
    inv = 1.0 / weight_exponent
    p = (wlcs / f(m)) ** inv
    r = (wlcs / f(n)) ** inv
    return _lcs_fscore(p, r)


# ---------------------------------------------------------------------------
# Aggregate reporting


@dataclass(frozen=True)
class EvalReport:
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    meteor: float
    rouge_l: float
    rouge_w: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "bleu3": self.bleu3,
            "bleu4": self.bleu4,
            "meteor": self.meteor,
            "rouge_l": self.rouge_l,
            "rouge_w": self.rouge_w,
            "n_samples": self.n_samples,
        }


def evaluate(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> EvalReport:
    """Full metric suite: corpus BLEU plus mean METEOR/ROUGE, as percentages."""
    bleu_scores = corpus_bleu(candidates, references, max_n=4)
    n = len(candidates)
    meteor_mean = sum(meteor(c, r) for c, r in zip(candidates, references)) / n
    rouge_l_mean = sum(rouge_l(c, r) for c, r in zip(candidates, references)) / n
    rouge_w_mean = sum(rouge_w(c, r) for c, r in zip(candidates, references)) / n
    return EvalReport(
        bleu1=bleu_scores[0],
        bleu2=bleu_scores[1],
        bleu3=bleu_scores[2],
        bleu4=bleu_scores[3],
        meteor=100.0 * meteor_mean,
        rouge_l=100.0 * rouge_l_mean,
        rouge_w=100.0 * rouge_w_mean,
        n_samples=n,
    )


def length_breakdown(
    candidates: Sequence[Tokens],
    references: Sequence[Tokens],
    lengths: Sequence[int],
    bin_width: int = 10,
) -> dict[str, dict]:
    """Mean smoothed sentence BLEU-4 grouped into fixed-width length bins."""
    if not (len(candidates) == len(references) == len(lengths)):
        raise LengthMismatchError("candidates, references, and lengths must align")
    bins: dict[int, list[float]] = {}
    for cand, ref, length in zip(candidates, references, lengths):
        low = (max(length, 1) - 1) // bin_width * bin_width + 1
        bins.setdefault(low, []).append(sentence_bleu(cand, ref))
    return {
        f"{low}-{low + bin_width - 1}": {
            "count": len(scores),
            "bleu4": sum(scores) / len(scores),
        }
        for low, scores in sorted(bins.items())
    }


# ---------------------------------------------------------------------------
# Low-frequency keyword analysis


@dataclass(frozen=True)
class KeywordBucketReport:
    """Counts of correctly generated words below each training-frequency threshold."""

    thresholds: tuple[int, ...] = (10, 20, 50, 100)
    counts: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {str(t): self.counts[t] for t in self.thresholds}


def keyword_bucket_analysis(
    generated: Sequence[Tokens],
    references: Sequence[Tokens],
    train_token_freq: Mapping[str, int],
    thresholds: tuple[int, ...] = (10, 20, 50, 100),
) -> KeywordBucketReport:
    """Count correctly predicted words whose training frequency is under each
    threshold.

    A word counts once per sample where it appears in both the generated and
    reference summaries (set intersection, no multiplicity).
    """
    if len(generated) != len(references):
        raise LengthMismatchError(
            f"got {len(generated)} generated and {len(references)} references"
        )
    counts = {t: 0 for t in thresholds}
    for gen, ref in zip(generated, references):
        for word in set(gen) & set(ref):
            freq = train_token_freq.get(word, 0)
            for t in thresholds:
                if freq < t:
                    counts[t] += 1
    return KeywordBucketReport(thresholds=tuple(thresholds), counts=counts)
