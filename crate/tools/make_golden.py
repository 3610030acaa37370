"""Builds the lexical resources of the golden test corpus.

Reads sentences.txt and candidates.tsv from the golden directory and writes
general.tsv, legal.tsv, phrases.txt, real_words.txt, familiar.txt and
embeddings.vec next to them. Requires the wordfreq and textstat packages.

General-language Zipf values come from wordfreq, for a rank-stratified
sample of its English list plus every word of the corpus and candidates.
The legal table copies them with a little deterministic noise and raises
the value of every span listed in candidates.tsv, standing in for counts
from a legal corpus. Embeddings are
synthetic: a span and its synonyms (entries marked with +) share a concept
vector, every other word gets its own direction.

    python tools/make_golden.py crates/core/tests/data/golden
"""

import hashlib
import pathlib
import re
import sys

import numpy as np
import textstat
from wordfreq import top_n_list, zipf_frequency

WORD = re.compile(r"[A-Za-z]+(?:['’-][A-Za-z]+)*")
TOP_N = 300000
STRIDE = 30
DIM = 32
# Words the splitter may insert into context sentences.
EXTRA = ["this", "happened", "was", "were", "the"]


def rng_for(word):
    seed = int.from_bytes(hashlib.sha256(word.encode()).digest()[:8], "little")
    return np.random.default_rng(seed)


def noise(word, scale):
    return (rng_for("noise:" + word).random() * 2 - 1) * scale


def read_candidates(path):
    entries = []
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        span, cands = line.split("\t")
        parsed = []
        for item in cands.split():
            token, prob = item.rsplit(":", 1)
            parsed.append((token.lstrip("+"), token.startswith("+"), float(prob)))
        entries.append((span, parsed))
    return entries


def main(out):
    sentences = (out / "sentences.txt").read_text().splitlines()
    entries = read_candidates(out / "candidates.tsv")

    vocab = {w.lower() for s in sentences for w in WORD.findall(s)}
    for span, cands in entries:
        vocab.update(span.split())
        vocab.update(t.lower() for t, _, _ in cands if not t.startswith("##"))
    vocab.update(EXTRA)

    general = {}
    # every STRIDE-th word by rank, so mean and spread match a full vocabulary
    for w in top_n_list("en", TOP_N)[::STRIDE]:
        if re.fullmatch(r"[a-z]+", w) and (len(w) > 1 or w in ("a", "i")):
            general[w] = zipf_frequency(w, "en")
    for w in vocab:
        z = zipf_frequency(w, "en")
        if z > 0 and re.fullmatch(r"[a-z]+", w):
            general[w] = z

    complex_words = {span for span, _ in entries if " " not in span}
    legal = {}
    for w, z in general.items():
        legal[w] = round(z + noise(w, 0.25), 2)
    for w in complex_words:
        base = general.get(w, 1.0)
        legal[w] = round(min(7.0, max(base + 2.8, 5.2)), 2)

    def write_zipf(name, label, table):
        with open(out / name, "w") as f:
            f.write(f"#zipf\t{label}\n")
            for w in sorted(table):
                f.write(f"{w}\t{table[w]}\n")

    write_zipf("general.tsv", "general", general)
    write_zipf("legal.tsv", "legal", legal)

    with open(out / "phrases.txt", "w") as f:
        f.write("# multi-word legal expressions\n")
        for span, _ in entries:
            if " " in span:
                f.write(span + "\n")

    with open(out / "real_words.txt", "w") as f:
        for w in sorted(general):
            f.write(w + "\n")

    easy = pathlib.Path(textstat.__file__).parent / "resources" / "en" / "easy_words.txt"
    words = sorted({w.strip().lower() for w in easy.read_text().splitlines() if w.strip()})
    (out / "familiar.txt").write_text("\n".join(words) + "\n")

    concepts = {}
    members = {}
    for span, cands in entries:
        c = rng_for("concept:" + span).normal(size=DIM)
        concepts[span] = c / np.linalg.norm(c)
        for w in span.split():
            members.setdefault(w, []).append((span, 0.85))
        for t, syn, _ in cands:
            if syn:
                members.setdefault(t.lower(), []).append((span, 0.8))

    with open(out / "embeddings.vec", "w") as f:
        for w in sorted(vocab):
            own = rng_for("word:" + w).normal(size=DIM)
            own /= np.linalg.norm(own)
            v = own * 0.6 if w in members else own
            for span, weight in members.get(w, []):
                v = v + weight * concepts[span]
            v /= np.linalg.norm(v)
            f.write(w + " " + " ".join(f"{x:.5f}" for x in v) + "\n")


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1]))
