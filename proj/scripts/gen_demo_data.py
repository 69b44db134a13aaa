#!/usr/bin/env python3
"""Writes the small deterministic demo corpus under data/demo.

Everything is synthetic: a few dozen "hard" words, each with a handful of
plainer substitutes spread over four paraphrase resources, fifty sentences
that use them, a background corpus for the n-gram model and a frequency list.
"""
import argparse
import math
import random
from pathlib import Path

HARD = {
    # word: (pos, substitutes)
    "meticulous": ("ADJ", ["careful", "precise", "thorough", "exact", "painstaking", "rigorous", "scrupulous", "detailed", "fussy", "neat"]),
    "ubiquitous": ("ADJ", ["common", "everywhere", "widespread", "universal", "pervasive", "frequent", "general", "rife"]),
    "arduous": ("ADJ", ["hard", "difficult", "tough", "tiring", "demanding", "strenuous", "laborious", "heavy", "grueling"]),
    "ostentatious": ("ADJ", ["showy", "flashy", "loud", "gaudy", "flamboyant", "pretentious", "garish", "vulgar"]),
    "benevolent": ("ADJ", ["kind", "generous", "caring", "friendly", "charitable", "gentle", "warm", "humane"]),
    "precarious": ("ADJ", ["risky", "unsafe", "shaky", "dangerous", "uncertain", "unstable", "fragile", "dicey"]),
    "conspicuous": ("ADJ", ["visible", "obvious", "clear", "striking", "noticeable", "prominent", "evident", "plain"]),
    "innocuous": ("ADJ", ["harmless", "safe", "mild", "inoffensive", "gentle", "bland", "innocent"]),
    "erroneous": ("ADJ", ["wrong", "false", "incorrect", "mistaken", "faulty", "inaccurate", "untrue", "flawed"]),
    "copious": ("ADJ", ["plenty", "abundant", "ample", "rich", "lavish", "generous", "many", "profuse"]),
    "frugal": ("ADJ", ["thrifty", "careful", "sparing", "economical", "prudent", "cheap", "modest"]),
    "tenacious": ("ADJ", ["stubborn", "firm", "persistent", "determined", "strong", "resolute", "dogged"]),
    "expeditiously": ("ADV", ["quickly", "fast", "promptly", "swiftly", "rapidly", "speedily", "soon", "briskly"]),
    "subsequently": ("ADV", ["later", "then", "afterwards", "next", "after", "thereafter", "eventually"]),
    "predominantly": ("ADV", ["mainly", "mostly", "largely", "chiefly", "primarily", "principally", "generally"]),
    "inadvertently": ("ADV", ["accidentally", "mistakenly", "unknowingly", "carelessly", "unintentionally", "by mistake"]),
    "endeavor": ("NOUN", ["effort", "attempt", "try", "project", "task", "venture", "undertaking", "work"]),
    "predicament": ("NOUN", ["problem", "trouble", "mess", "dilemma", "difficulty", "situation", "plight", "bind", "fix"]),
    "proximity": ("NOUN", ["nearness", "closeness", "vicinity", "neighborhood", "presence", "area"]),
    "remuneration": ("NOUN", ["pay", "salary", "wage", "payment", "fee", "income", "earnings", "reward", "compensation"]),
    "commencement": ("NOUN", ["start", "beginning", "opening", "launch", "onset", "dawn", "outset"]),
    "altercation": ("NOUN", ["fight", "argument", "quarrel", "dispute", "row", "clash", "squabble"]),
    "apprehension": ("NOUN", ["fear", "worry", "anxiety", "concern", "dread", "unease", "alarm"]),
    "ameliorate": ("VERB", ["improve", "better", "ease", "fix", "help", "mend", "enhance", "relieve", "amend"]),
    "procure": ("VERB", ["get", "buy", "obtain", "acquire", "gain", "secure", "purchase", "find"]),
    "commence": ("VERB", ["start", "begin", "open", "launch", "initiate", "embark"]),
    "terminate": ("VERB", ["end", "stop", "finish", "close", "cancel", "conclude", "halt"]),
    "facilitate": ("VERB", ["help", "ease", "aid", "assist", "enable", "simplify", "support"]),
    "disseminate": ("VERB", ["spread", "share", "circulate", "distribute", "broadcast", "publish", "scatter"]),
    "scrutinize": ("VERB", ["examine", "inspect", "check", "study", "review", "analyze", "probe", "look at"]),
    "augment": ("VERB", ["increase", "boost", "raise", "add", "expand", "enlarge", "extend", "grow"]),
    "take into account": ("VERB", ["consider", "weigh", "remember", "note", "allow for", "include"]),
}

# Inflected forms used in the sentences, mapped back to the lemma.
INFLECTED = {
    "commenced": ("VERB", "commence"),
    "terminated": ("VERB", "terminate"),
    "procured": ("VERB", "procure"),
    "predicaments": ("NOUN", "predicament"),
    "took into account": ("VERB", "take into account"),
}

FILLER = {
    "OTHER": ["the", "a", "an", "of", "to", "in", "on", "for", "with", "and", "but", "that", "this",
              "it", "they", "we", "she", "he", "our", "their", "before", "after", "during", "at",
              "by", "from", "into", "was", "is", "were", "will", "should", "must", "can", "not",
              "very", "all", "every", "some"],
    "NOUN": ["team", "report", "city", "council", "plan", "budget", "doctor", "village", "school",
             "company", "worker", "market", "storm", "road", "bridge", "family", "manager", "rule",
             "meeting", "results", "data", "river", "house", "teacher", "students", "news",
             "project", "week", "year", "money", "office", "garden", "staff", "museum", "trip"],
    "VERB": ["said", "found", "made", "asked", "knew", "wanted", "needed", "tried", "was", "felt",
             "saw", "told", "kept", "left", "gave"],
    "ADJ": ["new", "old", "small", "large", "local", "young", "long", "short", "next", "last"],
}

SENTENCES = [
    "The {meticulous} teacher checked every report before the meeting .",
    "Plastic bags are {ubiquitous} in the local market .",
    "The climb to the old bridge was {arduous} for the young students .",
    "Their {ostentatious} house stood at the end of the road .",
    "A {benevolent} doctor gave money to the village school .",
    "The family lived in a {precarious} house near the river .",
    "The new rule was {conspicuous} in the budget report .",
    "The manager said the results were {innocuous} .",
    "The council used {erroneous} data in the plan .",
    "The garden produced {copious} food during the long year .",
    "A {frugal} family kept money for the next trip .",
    "The {tenacious} worker tried again after the storm .",
    "The staff must answer every letter {expeditiously} .",
    "The team left the office and {subsequently} found the news .",
    "The students were {predominantly} young .",
    "He {inadvertently} left the report in the museum .",
    "Every {endeavor} of the council needed money .",
    "The storm left the village in a {predicament} .",
    "The {proximity} of the river made the house very cold .",
    "The workers asked for fair {remuneration} .",
    "The {commencement} of the project was in the last week .",
    "An {altercation} started in the market after the meeting .",
    "She felt {apprehension} before the trip .",
    "The new plan will {ameliorate} the road .",
    "The school must {procure} new books for the students .",
    "The meeting will {commence} after the news .",
    "The company will {terminate} the project next year .",
    "The new bridge will {facilitate} the trip to the city .",
    "The council wanted to {disseminate} the report to every family .",
    "The doctor will {scrutinize} the results of the study .",
    "The company tried to {augment} the budget .",
    "The manager must {take into account} the needs of the staff .",
    "The team {commenced} work on the bridge .",
    "The council {terminated} the old rule .",
    "The museum {procured} a large garden .",
    "The village faced many {predicaments} after the storm .",
    "The teacher {took into account} the weather .",
    "A {meticulous} manager will {scrutinize} every budget .",
    "The {arduous} road was {precarious} after the storm .",
    "The {benevolent} company will {augment} the {remuneration} of the staff .",
    "Their {frugal} plan will {ameliorate} the {predicament} of the family .",
    "The {erroneous} report was {conspicuous} in the news .",
    "The {commencement} of the meeting was {predominantly} calm .",
    "The workers {subsequently} left the {precarious} bridge .",
    "The {tenacious} teacher will {facilitate} the {endeavor} of the students .",
    "The {ostentatious} manager {inadvertently} left the office .",
    "The council will {disseminate} the news {expeditiously} .",
    "The {altercation} caused {apprehension} in the village .",
    "The {proximity} of the market is {innocuous} for the garden .",
    "The school will {procure} {copious} books for the {ubiquitous} students .",
]

CORPUS_FRAMES = [
    "the {n} was {a} .", "the {a} {n} {v} the {n2} .", "they {v} a {a} {n} .",
    "it was {a} in the {n} .", "the {n} {v} {adv} .", "we {v} the {n} {adv} .",
    "a {a} {n} is {a2} .", "the {n} of the {n2} was {a} .",
]


def zipf_count(rng, word, hard):
    if hard:
        return int(10 ** rng.uniform(1.5, 2.6))
    return int(10 ** (6.2 - 0.22 * len(word) + rng.gauss(0, 0.45)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "demo"))
    ap.add_argument("--seed", type=int, default=2017)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def emit(name, lines):
        (out / name).write_text("".join(l + "\n" for l in lines), encoding="utf-8")

    # sentences
    sents = []
    for frame in SENTENCES:
        s = frame
        for hard in HARD:
            s = s.replace("{" + hard + "}", hard)
        for infl in INFLECTED:
            s = s.replace("{" + infl + "}", infl)
        s = s[0].upper() + s[1:]
        sents.append(s.replace(" .", "."))
    assert len(sents) == 50
    emit("sentences.txt", sents)

    # lexicons
    pos = {}
    for word, (p, subs) in HARD.items():
        pos.setdefault(word, p)
        for sub in subs:
            pos.setdefault(sub, p)
    for p, words in FILLER.items():
        for w in words:
            pos.setdefault(w, p)
    emit("pos.tsv", ["# surface\tpos"] + [f"{w}\t{p}" for w, p in sorted(pos.items()) if " " not in w]
         + [f"{w}\t{p}" for w, (p, _) in sorted(INFLECTED.items()) if " " not in w])
    emit("lemmas.tsv", ["# surface\tpos\tlemma"] + [f"{w}\t{p}\t{l}" for w, (p, l) in sorted(INFLECTED.items()) if " " not in w]
         + ["took\tVERB\ttake"])
    emit("mwe.txt", ["take_into_account", "by_mistake", "look_at", "allow_for"])
    hard_sorted = sorted(HARD)
    emit("policy.txt", [h.replace(" ", "_") for h in hard_sorted])
    emit("seed.txt", [h.replace(" ", "_") for h in hard_sorted[::3]])

    # paraphrase resources
    ppdb, syn, dt = [], {}, []
    tags = {"ADJ": "[JJ]", "ADV": "[RB]", "NOUN": "[NN]", "VERB": "[VB]"}
    for word in hard_sorted:
        p, subs = HARD[word]
        placed = False
        for i, sub in enumerate(subs):
            r = rng.random()
            in_ppdb = r < 0.65
            in_syn = rng.random() < 0.5
            in_dt = rng.random() < 0.45
            if i == len(subs) - 1 and not (placed or in_ppdb or in_syn or in_dt):
                in_ppdb = True
            if in_ppdb:
                score = round(rng.uniform(1.0, 5.0), 3)
                rel = rng.choice(["Equivalence", "ForwardEntailment", "ReverseEntailment", "OtherRelated"])
                ppdb.append(f"{tags[p]} ||| {word} ||| {sub} ||| PPDB2.0Score={score} PPDB1.0Score={round(score / 2, 3)} ||| 0-0 ||| {rel}")
            if in_syn:
                syn.setdefault((word, p), []).append(sub)
            if in_dt:
                dt.append(f"{word}\t{sub}\t{rng.randint(20, 400)}")
            placed = placed or in_ppdb or in_syn or in_dt
    ppdb.append("this line is not a rule")
    emit("ppdb.txt", ppdb)
    emit("synlex.tsv", [f"{w}\t{p}\t{','.join(s)}" for (w, p), s in sorted(syn.items())])
    emit("dt.tsv", dt)

    # embeddings: every word sits near the centers of the groups it belongs to
    dim = 50
    centers = {w: [rng.gauss(0, 1) for _ in range(dim)] for w in hard_sorted}
    vectors = {}
    for word in hard_sorted:
        vectors.setdefault(word, [c + rng.gauss(0, 0.3) for c in centers[word]])
        for sub in HARD[word][1]:
            vectors.setdefault(sub.replace(" ", "_"), [0.0] * dim)
    members = {}
    for word in hard_sorted:
        for sub in HARD[word][1]:
            members.setdefault(sub.replace(" ", "_"), []).append(word)
    for key, groups in members.items():
        noise = 0.3 + 0.3 * rng.random()
        vectors[key] = [sum(centers[g][d] for g in groups) / len(groups) + rng.gauss(0, noise)
                        for d in range(dim)]
    for w in FILLER["NOUN"] + FILLER["ADJ"]:
        vectors.setdefault(w, [rng.gauss(0, 1) for _ in range(dim)])
    emb = [f"{len(vectors)} {dim}"]
    for k in sorted(vectors):
        emb.append(k.replace(" ", "_") + " " + " ".join(f"{x:.5f}" for x in vectors[k]))
    emit("embeddings.txt", emb)

    # frequencies: plain words are frequent, shorter ones more so
    freq = {}
    for word in hard_sorted:
        for token in word.split():
            freq.setdefault(token, zipf_count(rng, token, len(word.split()) == 1))
        for sub in HARD[word][1]:
            for token in sub.split():
                freq.setdefault(token, zipf_count(rng, token, False))
    for p, words in FILLER.items():
        for w in words:
            freq.setdefault(w, int(10 ** rng.uniform(5.5, 7.0)))
    for w, (_, lemma) in INFLECTED.items():
        for token in w.split():
            freq.setdefault(token, zipf_count(rng, token, True))
    emit("freq.tsv", [f"{w}\t{c}" for w, c in sorted(freq.items())])

    # background corpus for the n-gram model; substitutes appear uniformly
    nouns, adjs, verbs = FILLER["NOUN"], FILLER["ADJ"], FILLER["VERB"]
    by_pos = {"ADJ": [], "NOUN": [], "VERB": [], "ADV": []}
    for word in hard_sorted:
        p, subs = HARD[word]
        by_pos[p].extend(s for s in subs)
    corpus = []
    for _ in range(600):
        frame = rng.choice(CORPUS_FRAMES)
        s = frame.format(
            n=rng.choice(nouns + by_pos["NOUN"]), n2=rng.choice(nouns),
            a=rng.choice(adjs + by_pos["ADJ"]), a2=rng.choice(by_pos["ADJ"]),
            v=rng.choice(verbs + by_pos["VERB"]), adv=rng.choice(by_pos["ADV"]))
        corpus.append(s)
    corpus += [s.lower().replace(".", " .") for s in sents[:10]]
    emit("lm_corpus.txt", corpus)

    emit("demo.conf", [
        "# demo service configuration; paths are relative to this file",
        "ppdb_path = ppdb.txt",
        "synlex_path = synlex.tsv",
        "dt_path = dt.tsv",
        "embeddings_path = embeddings.txt",
        "lm_corpus_path = lm_corpus.txt",
        "lm_order = 3",
        "frequency_path = freq.tsv",
        "seed_lexicon_path = seed.txt",
        "mwe_lexicon_path = mwe.txt",
        "lemma_lexicon_path = lemmas.tsv",
        "pos_lexicon_path = pos.tsv",
        "data_dir = run",
        "batch_size = 100",
        "display_cap = 10",
        "k_embed = 10",
        "adaboost_rounds = 50",
        "ranker_epochs = 100",
        "ranker_lr = 0.1",
        "ranker_l2 = 0.001",
        "seed = 42",
        "admin_token = demo-token",
        "bind_address = 127.0.0.1",
        "port = 8080",
    ])
    print(f"wrote demo data to {out}")


if __name__ == "__main__":
    main()
