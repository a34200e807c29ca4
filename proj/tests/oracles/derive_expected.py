#!/usr/bin/env python3
"""Independent oracles for the frozen expected values used in the C++ tests.

Run once; the printed numbers are pasted into the corresponding test files.
Nothing here imports or calls the C++ implementation.
"""
import base64
import math
from collections import Counter


def ucb_example():
    # arm0: visits 2, cumulative 1.0; arm1: visits 1, cumulative 0.0; N = 3, c = 1
    n = 3
    s0 = 1.0 / 2 + 1.0 * math.sqrt(2 * math.log(n) / 2)
    s1 = 0.0 / 1 + 1.0 * math.sqrt(2 * math.log(n) / 1)
    print(f"ucb scores arm0={s0:.6f} arm1={s1:.6f}")


def exp3_example():
    k, gamma = 2, 0.5
    w = [1.0, 1.0]
    p0 = (1 - gamma) * w[0] / sum(w) + gamma / k
    xhat = 1.0 / p0
    w[0] *= math.exp(gamma * xhat / k)
    p0_new = (1 - gamma) * w[0] / sum(w) + gamma / k
    print(f"exp3 w0={w[0]:.12f} p0_new={p0_new:.12f}")


def mcts_backprop():
    print("mcts increments", [1.0 * 0.5 ** d for d in range(3)])


def codecs():
    print("base64 Hi ->", base64.b64encode(b"Hi").decode())
    itu = {"S": "...", "O": "---"}
    print("morse SOS ->", " ".join(itu[c] for c in "SOS"))
    import codecs as c
    print("rot13 Attack ->", c.encode("Attack", "rot13"))

    def caesar(t, k):
        out = []
        for ch in t:
            if ch.isascii() and ch.isalpha():
                base = ord("a") if ch.islower() else ord("A")
                out.append(chr(base + (ord(ch) - base + k) % 26))
            else:
                out.append(ch)
        return "".join(out)
    print("caesar3 abz ->", caesar("abz", 3))


def trigram_ppl(train, text, alpha=1.0):
    bos = "\x02"
    alphabet = sorted(set(train))
    unk = "\x00"
    v = len(alphabet) + 1

    def norm(s):
        return [ch if ch in alphabet else unk for ch in s]

    tri, bi = Counter(), Counter()
    seq = [bos, bos] + norm(train)
    for i in range(2, len(seq)):
        tri[(seq[i - 2], seq[i - 1], seq[i])] += 1
        bi[(seq[i - 2], seq[i - 1])] += 1
    seq = [bos, bos] + norm(text)
    nll = 0.0
    for i in range(2, len(seq)):
        ctx = (seq[i - 2], seq[i - 1])
        p = (tri[ctx + (seq[i],)] + alpha) / (bi[ctx] + alpha * v)
        nll -= math.log(p)
    return math.exp(nll / len(text))


def trigram():
    a = trigram_ppl("abcabcabc", "abcabc")
    b = trigram_ppl("abcabcabc", "zqxzqx")
    print(f"trigram ppl abcabc={a:.12f} zqxzqx={b:.12f} midpoint={(a + b) / 2:.12f}")


def confusion():
    labels, verdicts = [1, 1, 0, 0], [1, 0, 0, 1]
    tp = sum(l == 1 and v == 1 for l, v in zip(labels, verdicts))
    fn = sum(l == 1 and v == 0 for l, v in zip(labels, verdicts))
    fp = sum(l == 0 and v == 1 for l, v in zip(labels, verdicts))
    tn = sum(l == 0 and v == 0 for l, v in zip(labels, verdicts))
    p, r = tp / (tp + fp), tp / (tp + fn)
    print("confusion acc", (tp + tn) / 4, "tpr", r, "fpr", fp / (fp + tn), "f1", 2 * p * r / (p + r))


def length_sort():
    words = "bb a ccc".split(" ")
    print("length", sorted([(w, i) for i, w in enumerate(words)], key=lambda t: len(t[0])))


def labeled_fixture_rates():
    import json
    from pathlib import Path
    root = Path(__file__).resolve().parents[2]
    items = [json.loads(l) for l in (root / "tests/fixtures/labeled_responses.jsonl").read_text().splitlines() if l]
    patterns = [l.strip().lower() for l in (root / "resources/refusal_patterns.txt").read_text().splitlines()
                if l.strip() and not l.startswith("#")]
    bias, weights = 0.0, []
    for l in (root / "resources/classifier_keyword_weights.txt").read_text().splitlines():
        if not l.strip() or l.startswith("#"):
            continue
        head, rest = l.split(" ", 1)
        if head == "bias":
            bias = float(rest)
        else:
            weights.append((rest.strip().lower(), float(head)))

    def pattern_success(r):
        return not any(p in r.lower() for p in patterns)

    def classifier_success(r):
        z = bias + sum(w for ph, w in weights if ph in r.lower())
        return 1 / (1 + math.exp(-z)) >= 0.5

    for name, judge in (("pattern", pattern_success), ("classifier", classifier_success)):
        tp = sum(judge(i["response"]) and i["label"] == 1 for i in items)
        fp = sum(judge(i["response"]) and i["label"] == 0 for i in items)
        neg = sum(i["label"] == 0 for i in items)
        pos = len(items) - neg
        print(f"fixture {name}: tpr={tp / pos:.4f} fpr={fp / neg:.4f}")


if __name__ == "__main__":
    ucb_example()
    exp3_example()
    mcts_backprop()
    codecs()
    trigram()
    confusion()
    length_sort()
    labeled_fixture_rates()
