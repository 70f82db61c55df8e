#!/usr/bin/env python3
"""Rebuild the bundled data assets under data/ from their upstream packages.

Upstream inputs (fetch once, then point this script at the extracted trees):

  npm pack @stdlib/datasets-sotu@0.2.3          -> package/data/*.txt
  pip download lemminflect==0.2.3               -> lemminflect/resources/
  pip download --no-binary :all: textblob-aptagger==0.2.0
                                                -> textblob_aptagger/trontagger-0.1.0.pickle
  pip download --no-binary :all: pattern3==3.0.0
                                                -> pattern3/text/en/wordnet/dict/index.*

Usage:
  prepare_data.py --sotu DIR --lemminflect DIR --aptagger PICKLE --wordnet DIR --out data/ \
                  --lexicon-out crates/core/data/lexicon
"""

import argparse
import collections
import csv
import gzip
import os
import pickle
import re
import string
import unicodedata

ASCII_PUNCT = set(string.punctuation)


def is_punct(ch):
    return ch in ASCII_PUNCT or unicodedata.category(ch)[0] in "PS"


def pretokenize(text):
    """Whitespace split plus single-character punctuation isolation."""
    out, cur = [], []
    for ch in text:
        if ch.isspace():
            if cur:
                out.append("".join(cur))
                cur = []
        elif is_punct(ch):
            if cur:
                out.append("".join(cur))
                cur = []
            out.append(ch)
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


ABBREV = {
    "mr", "mrs", "ms", "dr", "st", "gen", "jr", "sr", "no", "vs", "messrs",
    "hon", "rev", "col", "capt", "lt", "gov", "sen", "rep", "u.s", "u.s.a",
    "etc", "i.e", "e.g", "co", "inc", "ft", "jan", "feb", "mar", "apr", "aug",
    "sept", "sep", "oct", "nov", "dec",
}
SENT_END = re.compile(r"(?<=[.!?])[\"'”’)\]]*\s+(?=[\"'“‘(\[]?[A-Z0-9])")


def split_sentences(paragraph):
    pieces, start = [], 0
    for m in SENT_END.finditer(paragraph):
        head = paragraph[start:m.start()]
        last = head.split()[-1] if head.split() else ""
        word = last.rstrip(".!?").lower()
        if word in ABBREV or (len(word) == 1 and word.isalpha()):
            continue
        pieces.append(paragraph[start:m.end()].strip())
        start = m.end()
    tail = paragraph[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def build_corpus(sotu_dir):
    files = sorted(f for f in os.listdir(sotu_dir) if f.endswith(".txt"))
    sentences = []
    for name in files:
        with open(os.path.join(sotu_dir, name), encoding="utf-8") as fh:
            for para in fh.read().split("\n"):
                para = " ".join(para.split())
                if para:
                    sentences.extend(split_sentences(para))
    return sentences


class SilverTagger:
    START = ["-START-", "-START2-"]
    END = ["-END-", "-END2-"]

    def __init__(self, path):
        with open(path, "rb") as fh:
            self.weights, self.tagdict, classes = pickle.load(fh, encoding="latin1")
        self.classes = sorted(classes)

    @staticmethod
    def normalize(word):
        if "-" in word and word[0] != "-":
            return "!HYPHEN"
        if word.isdigit() and len(word) == 4:
            return "!YEAR"
        if word[0].isdigit():
            return "!DIGITS"
        return word.lower()

    def features(self, i, word, context, prev, prev2):
        i += 2
        return [
            "bias",
            "i suffix " + word[-3:],
            "i pref1 " + word[0],
            "i-1 tag " + prev,
            "i-2 tag " + prev2,
            "i tag+i-2 tag %s %s" % (prev, prev2),
            "i word " + context[i],
            "i-1 tag+i word %s %s" % (prev, context[i]),
            "i-1 word " + context[i - 1],
            "i-1 suffix " + context[i - 1][-3:],
            "i-2 word " + context[i - 2],
            "i+1 word " + context[i + 1],
            "i+1 suffix " + context[i + 1][-3:],
            "i+2 word " + context[i + 2],
        ]

    def tag(self, words):
        prev, prev2 = self.START
        context = self.START + [self.normalize(w) for w in words] + self.END
        tags = []
        for i, word in enumerate(words):
            tag = self.tagdict.get(word)
            if not tag:
                scores = collections.defaultdict(float)
                for feat in self.features(i, word, context, prev, prev2):
                    for label, weight in self.weights.get(feat, {}).items():
                        scores[label] += weight
                tag = max(self.classes, key=lambda label: (scores[label], label))
            tags.append(tag)
            prev2, prev = prev, tag
        return tags


# (lemma, tag) -> preferred surface, applied on top of the upstream tables.
HAND_OVERRIDES = {
    ("run", "VBN"): ["run"],
    ("be", "VB"): ["be"],
    ("be", "VBP"): ["are", "am"],
    ("be", "VBD"): ["was", "were"],
    ("be", "VBN"): ["been"],
    ("be", "VBG"): ["being"],
    ("be", "VBZ"): ["is"],
}

VERB_COLUMNS = ["VBD", "VBN", "VBG", "VBZ"]
ADJ_COLUMNS = ["JJR", "JJS"]
TAG_ORDER = ["NNS", "VBD", "VBN", "VBG", "VBZ", "VBP", "JJR", "JJS"]
WORD = re.compile(r"^[a-z][a-z'-]*$")


def build_lexicon(lemminflect_dir):
    table = collections.OrderedDict()  # (lemma, tag) -> [surfaces]

    def add(lemma, tag, forms):
        slot = table.setdefault((lemma, tag), [])
        for f in forms:
            if f and WORD.match(f) and f not in slot:
                slot.append(f)

    with gzip.open(os.path.join(lemminflect_dir, "infl_lu.csv.gz"), "rt") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(",")
            lemma, cat, cols = parts[0], parts[1], parts[2:]
            if not WORD.match(lemma):
                continue
            if cat == "noun":
                add(lemma, "NNS", cols[0].split("/") if cols else [])
            elif cat == "verb":
                forms = [c.split("/") if c else [] for c in cols]
                while len(forms) < 4:
                    forms.append([])
                if not forms[1]:
                    forms[1] = forms[0]
                for tag, f in zip(VERB_COLUMNS, forms):
                    add(lemma, tag, f)
            elif cat == "adj":
                for tag, c in zip(ADJ_COLUMNS, cols):
                    add(lemma, tag, c.split("/") if c else [])

    overrides = []
    with open(os.path.join(lemminflect_dir, "infl_overrides.csv")) as fh:
        for row in csv.reader(fh):
            if len(row) == 3 and not row[0].startswith("#") and row[1] in TAG_ORDER:
                overrides.append((row[0], row[1], [row[2]]))
    overrides.extend((l, t, f) for (l, t), f in HAND_OVERRIDES.items())
    for lemma, tag, forms in overrides:
        if not WORD.match(lemma):
            continue
        slot = table.setdefault((lemma, tag), [])
        for f in reversed(forms):
            if f in slot:
                slot.remove(f)
            slot.insert(0, f)

    table = {k: v for k, v in table.items() if v}
    lemma_lu = collections.defaultdict(list)
    with gzip.open(os.path.join(lemminflect_dir, "lemma_lu.csv.gz"), "rt") as fh:
        for line in fh:
            surface, cat, lemmas = line.rstrip("\n").split(",", 2)
            lemma_lu[(surface, cat)].extend(lemmas.split("/"))
    return table, lemma_lu


COARSE = {"NNS": "noun", "VBD": "verb", "VBN": "verb", "VBG": "verb",
          "VBZ": "verb", "VBP": "verb", "JJR": "adj", "JJS": "adj"}


def invert(table, lemma_lu, freq):
    candidates = collections.defaultdict(list)
    for (lemma, tag), forms in table.items():
        if tag in ("VB",):
            continue
        for f in forms:
            if lemma not in candidates[(f, tag)]:
                candidates[(f, tag)].append(lemma)
    out = {}
    for (surface, tag), lemmas in candidates.items():
        if len(lemmas) == 1:
            out[(surface, tag)] = lemmas[0]
            continue
        pref = lemma_lu.get((surface, COARSE[tag]), [])
        ranked = [l for l in pref if l in lemmas]
        if ranked:
            out[(surface, tag)] = ranked[0]
        else:
            out[(surface, tag)] = sorted(lemmas, key=lambda l: (-freq[l], l))[0]
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sotu", required=True)
    ap.add_argument("--lemminflect", required=True)
    ap.add_argument("--aptagger", required=True)
    ap.add_argument("--wordnet", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--lexicon-out", required=True)
    ap.add_argument("--silver-every", type=int, default=4)
    args = ap.parse_args()

    sentences = build_corpus(args.sotu)
    with gzip.GzipFile(os.path.join(args.out, "corpus", "sotu.txt.gz"), "wb", mtime=0) as fh:
        fh.write(("\n".join(sentences) + "\n").encode("utf-8"))

    freq = collections.Counter()
    for s in sentences:
        for w in pretokenize(s):
            freq[w.lower()] += 1

    tagger = SilverTagger(args.aptagger)
    lines = []
    for i, s in enumerate(sentences):
        if i % args.silver_every:
            continue
        words = pretokenize(s)
        if len(words) < 3:
            continue
        for w, t in zip(words, tagger.tag(words)):
            lines.append("%s\t%s" % (w, t))
        lines.append("")
    with gzip.GzipFile(os.path.join(args.out, "corpus", "sotu-silver.tsv.gz"), "wb", mtime=0) as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))

    table, lemma_lu = build_lexicon(args.lemminflect)
    with open(os.path.join(args.lexicon_out, "inflections.tsv"), "w") as fh:
        fh.write("# lemma\ttag\tsurface\tpreference-rank\n")
        for (lemma, tag) in sorted(table, key=lambda k: (k[0], TAG_ORDER.index(k[1]) if k[1] in TAG_ORDER else -1)):
            for rank, f in enumerate(table[(lemma, tag)], 1):
                fh.write("%s\t%s\t%s\t%d\n" % (lemma, tag, f, rank))
    lemmas = invert(table, lemma_lu, freq)
    with open(os.path.join(args.lexicon_out, "lemmas.tsv"), "w") as fh:
        fh.write("# surface\ttag\tlemma\n")
        for (surface, tag) in sorted(lemmas, key=lambda k: (k[0], TAG_ORDER.index(k[1]))):
            fh.write("%s\t%s\t%s\n" % (surface, tag, lemmas[(surface, tag)]))

    types = set()
    for pos in ("noun", "verb", "adj", "adv"):
        with open(os.path.join(args.wordnet, "index." + pos), encoding="latin1") as fh:
            for line in fh:
                if line.startswith(" "):
                    continue
                lemma = line.split(" ", 1)[0]
                if "_" not in lemma:
                    types.add(lemma)
    with gzip.GzipFile(os.path.join(args.out, "types", "wordnet-lemmas.txt.gz"), "wb", mtime=0) as fh:
        fh.write(("\n".join(sorted(types)) + "\n").encode("utf-8"))


if __name__ == "__main__":
    main()
