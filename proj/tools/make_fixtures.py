#!/usr/bin/env python3
"""Generates the synthetic ERTMS-style corpus used by tests and examples.

Writes, deterministically:
  tests/data/ertms/requirements.jsonl   190 requirements in 5 documents
  tests/data/ertms/parses.conllu        UD parses built from the sentence templates
  tests/data/ertms/binary.jsonl         10,859 labeled pairs (9,606 none / 1,253 related)
  tests/data/ertms/multiclass.jsonl     4,432 labeled pairs (3,720 none / 378 requires / 334 is_similar)
  data/embeddings/ertms-16d.txt         small word-vector table over the corpus vocabulary
  data/lexicon.tsv                      word/tag counts from the parses plus common function words

Usage: python3 tools/make_fixtures.py [repo_root]
"""

import json
import math
import random
import sys
from itertools import combinations
from pathlib import Path

SEED = 20240501
N_REQ = 190
DOCS = ["subset026-3", "subset026-4", "subset026-5", "subset034", "subset035"]

# Noun phrases: (key, [(form, upos, lemma), ...]); the last token is the head.
AGENTS = [
    ("onboard", [("ETCS", "PROPN", "etcs"), ("on-board", "NOUN", "on-board")]),
    ("rbc", [("RBC", "PROPN", "rbc")]),
    ("dmi", [("DMI", "PROPN", "dmi")]),
    ("driver", [("driver", "NOUN", "driver")]),
    ("trackside", [("trackside", "NOUN", "trackside")]),
    ("trainborne", [("ETCS", "PROPN", "etcs"), ("trainborne", "ADJ", "trainborne"), ("equipment", "NOUN", "equipment")]),
    ("odometry", [("odometry", "NOUN", "odometry"), ("function", "NOUN", "function")]),
    ("interlocking", [("interlocking", "NOUN", "interlocking")]),
]
OBJECTS = [
    ("ma", [("movement", "NOUN", "movement"), ("authority", "NOUN", "authority")]),
    ("traindata", [("train", "NOUN", "train"), ("data", "NOUN", "data")]),
    ("speed", [("static", "ADJ", "static"), ("speed", "NOUN", "speed"), ("profile", "NOUN", "profile")]),
    ("position", [("position", "NOUN", "position"), ("report", "NOUN", "report")]),
    ("emergency", [("emergency", "NOUN", "emergency"), ("message", "NOUN", "message")]),
    ("status", [("current", "ADJ", "current"), ("operational", "ADJ", "operational"), ("status", "NOUN", "status")]),
    ("pantograph", [("pantograph", "NOUN", "pantograph"), ("command", "NOUN", "command")]),
    ("power", [("power", "NOUN", "power"), ("supply", "NOUN", "supply"), ("information", "NOUN", "information")]),
    ("track", [("track", "NOUN", "track"), ("description", "NOUN", "description")]),
    ("level", [("level", "NOUN", "level"), ("transition", "NOUN", "transition"), ("order", "NOUN", "order")]),
    ("brake", [("brake", "NOUN", "brake"), ("command", "NOUN", "command")]),
    ("session", [("communication", "NOUN", "communication"), ("session", "NOUN", "session")]),
    ("mode", [("mode", "NOUN", "mode"), ("profile", "NOUN", "profile")]),
    ("integrity", [("train", "NOUN", "train"), ("integrity", "NOUN", "integrity"), ("information", "NOUN", "information")]),
    ("gradient", [("gradient", "NOUN", "gradient"), ("profile", "NOUN", "profile")]),
    ("balise", [("balise", "NOUN", "balise"), ("group", "NOUN", "group"), ("message", "NOUN", "message")]),
]
LOCATIONS = ["rbc", "dmi", "driver", "trackside", "onboard", "interlocking"]

# (lemma, base, past participle, gerund, family); family groups near-synonymous actions.
VERBS = [
    ("receive", "receive", "received", "receiving", "transfer"),
    ("transmit", "transmit", "transmitted", "transmitting", "transfer"),
    ("send", "send", "sent", "sending", "transfer"),
    ("display", "display", "displayed", "displaying", "show"),
    ("indicate", "indicate", "indicated", "indicating", "show"),
    ("show", "show", "shown", "showing", "show"),
    ("record", "record", "recorded", "recording", "store"),
    ("store", "store", "stored", "storing", "store"),
    ("log", "log", "logged", "logging", "store"),
    ("supervise", "supervise", "supervised", "supervising", "check"),
    ("monitor", "monitor", "monitored", "monitoring", "check"),
    ("check", "check", "checked", "checking", "check"),
    ("calculate", "calculate", "calculated", "calculating", "compute"),
    ("update", "update", "updated", "updating", "compute"),
    ("provide", "provide", "provided", "providing", "transfer"),
    ("request", "request", "requested", "requesting", "transfer"),
]
PREP_FOR = {"transfer": ["to", "from"], "show": ["on"], "store": ["in"], "check": ["for"], "compute": ["for"]}

AGENT = dict(AGENTS)
OBJECT = dict(OBJECTS)


class Sentence:
    """Token list with 1-based heads; add() returns the new token id."""

    def __init__(self):
        self.rows = []

    def add(self, form, upos, lemma, head=0, deprel="_"):
        self.rows.append([form, lemma, upos, head, deprel])
        return len(self.rows)

    def set_head(self, tid, head, deprel):
        self.rows[tid - 1][3] = head
        self.rows[tid - 1][4] = deprel

    def np(self, words, det=True):
        """Adds a noun phrase; returns the head id (head attachment left to caller)."""
        ids = []
        if det:
            ids.append(("det", self.add("the", "DET", "the")))
        for form, upos, lemma in words:
            ids.append((upos, self.add(form, upos, lemma)))
        head = ids[-1][1]
        for upos, tid in ids[:-1]:
            rel = "det" if upos == "det" else ("amod" if upos == "ADJ" else "compound")
            self.set_head(tid, head, rel)
        return head

    def text(self):
        out = ""
        for i, r in enumerate(self.rows):
            if i and r[2] != "PUNCT":
                out += " "
            out += r[0]
        return out[0].upper() + out[1:]


def capitalize_first(s):
    s.rows[0][0] = s.rows[0][0][0].upper() + s.rows[0][0][1:]


def t_active(s, agent, verb, obj, loc, rng):
    subj = s.np(AGENT[agent])
    aux = s.add("shall", "AUX", "shall")
    v = s.add(verb[1], "VERB", verb[0])
    o = s.np(OBJECT[obj])
    prep = rng.choice(PREP_FOR[verb[4]])
    p = s.add(prep, "ADP", prep)
    l = s.np(AGENT[loc])
    dot = s.add(".", "PUNCT", ".")
    s.set_head(subj, v, "nsubj")
    s.set_head(aux, v, "aux")
    s.set_head(o, v, "obj")
    s.set_head(p, l, "case")
    s.set_head(l, v, "obl")
    s.set_head(dot, v, "punct")


def t_passive(s, agent, verb, obj, loc, rng):
    o = s.np(OBJECT[obj])
    aux = s.add("shall", "AUX", "shall")
    be = s.add("be", "AUX", "be")
    v = s.add(verb[2], "VERB", verb[0])
    to = s.add("to", "ADP", "to")
    d = s.np(AGENT["driver"])
    on = s.add("on", "ADP", "on")
    l = s.np(AGENT[loc if loc != "driver" else "dmi"])
    dot = s.add(".", "PUNCT", ".")
    s.set_head(o, v, "nsubj:pass")
    s.set_head(aux, v, "aux")
    s.set_head(be, v, "aux:pass")
    s.set_head(to, d, "case")
    s.set_head(d, v, "obl")
    s.set_head(on, l, "case")
    s.set_head(l, v, "obl")
    s.set_head(dot, v, "punct")


def t_able(s, agent, verb, obj, loc, rng):
    subj = s.np(AGENT[agent])
    aux = s.add("shall", "AUX", "shall")
    be = s.add("be", "AUX", "be")
    able = s.add("able", "ADJ", "able")
    to = s.add("to", "PART", "to")
    v = s.add(verb[1], "VERB", verb[0])
    o = s.np(OBJECT[obj])
    dot = s.add(".", "PUNCT", ".")
    s.set_head(subj, able, "nsubj")
    s.set_head(aux, able, "aux")
    s.set_head(be, able, "cop")
    s.set_head(to, v, "mark")
    s.set_head(v, able, "xcomp")
    s.set_head(o, v, "obj")
    s.set_head(dot, able, "punct")


def t_capable(s, agent, verb, obj, loc, rng):
    subj = s.np(AGENT[agent])
    aux = s.add("shall", "AUX", "shall")
    be = s.add("be", "AUX", "be")
    cap = s.add("capable", "ADJ", "capable")
    of = s.add("of", "SCONJ", "of")
    v = s.add(verb[3], "VERB", verb[0])
    o = s.np(OBJECT[obj])
    fr = s.add("from", "ADP", "from")
    l = s.np(AGENT[loc])
    dot = s.add(".", "PUNCT", ".")
    s.set_head(subj, cap, "nsubj")
    s.set_head(aux, cap, "aux")
    s.set_head(be, cap, "cop")
    s.set_head(of, v, "mark")
    s.set_head(v, cap, "advcl")
    s.set_head(o, v, "obj")
    s.set_head(fr, l, "case")
    s.set_head(l, v, "obl")
    s.set_head(dot, cap, "punct")


def t_generic(s, agent, verb, obj, loc, rng):
    noun = rng.choice(["function", "system"])
    subj = s.np([(noun, "NOUN", noun)])
    aux = s.add("shall", "AUX", "shall")
    v = s.add(verb[1], "VERB", verb[0])
    o = s.np(OBJECT[obj])
    w = s.add("within", "ADP", "within")
    n = rng.choice(["2", "5", "10", "30"])
    num = s.add(n, "NUM", n)
    sec = s.add("seconds", "NOUN", "second")
    dot = s.add(".", "PUNCT", ".")
    s.set_head(subj, v, "nsubj")
    s.set_head(aux, v, "aux")
    s.set_head(o, v, "obj")
    s.set_head(w, sec, "case")
    s.set_head(num, sec, "nummod")
    s.set_head(sec, v, "obl")
    s.set_head(dot, v, "punct")


def t_reference(s, agent, verb, obj, loc, rng, ref):
    subj = s.np(AGENT[agent])
    aux = s.add("shall", "AUX", "shall")
    v = s.add(verb[1], "VERB", verb[0])
    o = s.np(OBJECT[obj])
    as_ = s.add("as", "SCONJ", "as")
    spec = s.add("specified", "VERB", "specify")
    in_ = s.add("in", "ADP", "in")
    r = s.add(ref, "PROPN", ref.lower())
    dot = s.add(".", "PUNCT", ".")
    s.set_head(subj, v, "nsubj")
    s.set_head(aux, v, "aux")
    s.set_head(o, v, "obj")
    s.set_head(as_, spec, "mark")
    s.set_head(spec, v, "advcl")
    s.set_head(in_, r, "case")
    s.set_head(r, spec, "obl")
    s.set_head(dot, v, "punct")


TEMPLATES = [("active", t_active, 5), ("passive", t_passive, 2), ("able", t_able, 2), ("capable", t_capable, 2),
             ("generic", t_generic, 1), ("reference", None, 1)]


def build_corpus(rng):
    reqs = []
    weights = [w for _, _, w in TEMPLATES]
    for i in range(N_REQ):
        rid = "R%03d" % (i + 1)
        doc = DOCS[i * len(DOCS) // N_REQ]
        order = i - (i * len(DOCS) // N_REQ) * (N_REQ // len(DOCS))
        name, fn, _ = rng.choices(TEMPLATES, weights)[0]
        agent = rng.choice([a for a, _ in AGENTS])
        verb = rng.choice(VERBS)
        obj = rng.choice([o for o, _ in OBJECTS])
        loc = rng.choice([l for l in LOCATIONS if l != agent])
        s = Sentence()
        ref = None
        if name == "reference" and i > 0:
            ref = "R%03d" % rng.randint(1, i)
            t_reference(s, agent, verb, obj, loc, rng, ref)
        else:
            if name == "reference":
                name, fn = "active", t_active
            fn(s, agent, verb, obj, loc, rng)
        capitalize_first(s)
        subject = "generic" if name == "generic" else (obj if name == "passive" else agent)
        reqs.append({
            "id": rid, "doc": doc, "order": order, "text": s.text(), "sentence": s,
            "template": name, "agent": subject, "verb": verb[0], "family": verb[4], "object": obj,
            "location": loc if name in ("active", "capable", "passive") else None, "ref": ref,
        })
    return reqs


def conllu(reqs):
    out = []
    for r in reqs:
        s = r["sentence"]
        out.append("# sent_id = %s/0" % r["id"])
        out.append("# text = %s" % r["text"])
        for i, (form, lemma, upos, head, deprel) in enumerate(s.rows, 1):
            rel = "root" if head == 0 else deprel
            out.append("\t".join([str(i), form, lemma, upos, "_", "_", str(head), rel, "_", "_"]))
        out.append("")
    return "\n".join(out) + "\n"


def requires_score(a, b):
    """Evidence that a depends on b: what a acts on is what b is about."""
    score = 0
    if a["location"] and a["location"] == b["agent"]:
        score += 2
    if a["ref"] == b["id"]:
        score += 3
    if a["object"] == b["object"] and a["family"] != b["family"]:
        score += 1
    return score


def similar_score(a, b):
    score = 0
    if a["object"] == b["object"]:
        score += 2
    if a["family"] == b["family"]:
        score += 1
    if a["agent"] == b["agent"]:
        score += 1
    return score


def pick(candidates, n, rng, taken):
    """Top-n by score with seeded tie-breaking, skipping taken pairs."""
    keyed = [(-score, rng.random(), pair) for pair, score in candidates if pair not in taken]
    keyed.sort()
    chosen = [p for _, _, p in keyed[:n]]
    if len(chosen) != n:
        raise SystemExit("not enough candidate pairs: wanted %d, got %d" % (n, len(chosen)))
    taken.update(chosen)
    return chosen


def gold_sets(reqs, rng):
    pairs = list(combinations(range(len(reqs)), 2))
    assert len(pairs) == 17955

    def rel_score(p):
        a, b = reqs[p[0]], reqs[p[1]]
        return max(similar_score(a, b), requires_score(a, b), requires_score(b, a))

    taken = set()
    related = pick([(p, rel_score(p)) for p in pairs], 1253, rng, taken)
    none = pick([(p, 0) for p in pairs], 9606, rng, taken)
    binary = [(p, "related") for p in related] + [(p, "none") for p in none]

    taken = set()
    directed = []
    for i, j in pairs:
        f, b = requires_score(reqs[i], reqs[j]), requires_score(reqs[j], reqs[i])
        directed.append(((i, j) if f >= b else (j, i), max(f, b)))
    req_pairs = pick(directed, 378, rng, taken)
    taken |= {tuple(sorted(p)) for p in req_pairs}
    sim = pick([(p, similar_score(reqs[p[0]], reqs[p[1]])) for p in pairs], 334, rng, taken)
    none_m = pick([(p, 0) for p in pairs], 3720, rng, taken)
    multi = [(p, "requires") for p in req_pairs] + [(p, "is_similar") for p in sim] + [(p, "none") for p in none_m]
    return binary, multi


def relations_jsonl(reqs, labeled, rng):
    rows = []
    for (i, j), label in labeled:
        rows.append({"source": reqs[i]["id"], "target": reqs[j]["id"], "type": label})
    rng.shuffle(rows)
    return "".join(json.dumps(r) + "\n" for r in rows)


def embeddings(reqs, rng, dim=16):
    """Family-clustered vectors: words of one verb family or one noun phrase share a centroid."""
    groups = {}
    for lemma, base, part, ger, fam in VERBS:
        groups.setdefault("verb:" + fam, set()).update({lemma, base, part, ger})
    for key, words in AGENTS + OBJECTS:
        groups.setdefault("np:" + key, set()).update(w[0].lower() for w in words)
    centroid = {g: [rng.gauss(0, 1) for _ in range(dim)] for g in sorted(groups)}
    table = {}
    for g in sorted(groups):
        for w in sorted(groups[g]):
            if w in table:
                continue
            table[w] = [c + rng.gauss(0, 0.25) for c in centroid[g]]
    for extra in ["log", "record"]:
        table.setdefault(extra, centroid["verb:store"])
    lines = []
    for w in sorted(table):
        v = table[w]
        norm = math.sqrt(sum(x * x for x in v)) or 1.0
        lines.append(w + " " + " ".join("%.6f" % (x / norm) for x in v))
    return "\n".join(lines) + "\n"


FUNCTION_WORDS = [
    ("the", "DET"), ("a", "DET"), ("an", "DET"), ("all", "DET"), ("each", "DET"), ("shall", "AUX"), ("be", "AUX"),
    ("is", "AUX"), ("are", "AUX"), ("must", "AUX"), ("should", "AUX"), ("to", "PART"), ("of", "ADP"), ("on", "ADP"),
    ("in", "ADP"), ("from", "ADP"), ("for", "ADP"), ("with", "ADP"), ("by", "ADP"), ("about", "ADP"), ("within", "ADP"),
    ("and", "CCONJ"), ("or", "CCONJ"), ("if", "SCONJ"), ("when", "SCONJ"), ("as", "SCONJ"), ("that", "SCONJ"),
    ("not", "PART"), ("it", "PRON"), ("this", "PRON"), ("able", "ADJ"), ("capable", "ADJ"), ("special", "ADJ"),
    ("separately", "ADV"), ("efficiently", "ADV"), ("information", "NOUN"), ("software", "NOUN"), ("system", "NOUN"),
    ("user", "NOUN"), ("fitted", "VERB"), ("lines", "NOUN"), ("entry", "NOUN"), ("select", "VERB"),
]


def lexicon(reqs):
    counts = {}
    for r in reqs:
        for form, lemma, upos, head, deprel in r["sentence"].rows:
            if upos == "PUNCT":
                continue
            key = (form.lower(), upos)
            counts[key] = counts.get(key, 0) + 1
    for w, tag in FUNCTION_WORDS:
        counts[(w, tag)] = counts.get((w, tag), 0) + 10
    lines = ["# word\ttag\tcount"]
    for (w, tag), c in sorted(counts.items()):
        lines.append("%s\t%s\t%d" % (w, tag, c))
    return "\n".join(lines) + "\n"


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent)
    rng = random.Random(SEED)
    reqs = build_corpus(rng)
    out = root / "tests" / "data" / "ertms"
    out.mkdir(parents=True, exist_ok=True)
    (out / "requirements.jsonl").write_text(
        "".join(json.dumps({"id": r["id"], "doc": r["doc"], "order": r["order"], "text": r["text"]}) + "\n" for r in reqs))
    (out / "parses.conllu").write_text(conllu(reqs))
    binary, multi = gold_sets(reqs, rng)
    (out / "binary.jsonl").write_text(relations_jsonl(reqs, binary, rng))
    (out / "multiclass.jsonl").write_text(relations_jsonl(reqs, multi, rng))
    emb = root / "data" / "embeddings"
    emb.mkdir(parents=True, exist_ok=True)
    (emb / "ertms-16d.txt").write_text(embeddings(reqs, rng))
    (root / "data" / "lexicon.tsv").write_text(lexicon(reqs))
    print("wrote %d requirements, %d binary and %d multiclass pairs" % (len(reqs), len(binary), len(multi)))


if __name__ == "__main__":
    main()
