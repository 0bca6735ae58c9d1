#!/usr/bin/env python3
"""Regenerate the bundled toy corpora (deterministic; seeded).

Run from the repository root:

    python tools/gen_toy_data.py

Overwrites src/textregen/data/toy_*.jsonl and medical_entities.tsv.
The corpora are fully synthetic, template-built texts shaped like the
three corpus families the pipeline targets: clinical notes with
recognizable entities, plot synopses with tags, and author-stamped
short letters with distinct stylistic habits.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "textregen" / "data"

# entity pools are frequency-skewed so a greedy decoder has a clear
# modal choice in every entity slot
DISEASES = [
    ("septic shock", 0.45), ("pneumonia", 0.15), ("renal failure", 0.12),
    ("heart failure", 0.08), ("angioedema", 0.06), ("bowel obstruction", 0.05),
    ("liver failure", 0.05), ("atrial fibrillation", 0.04),
]
DRUGS = [
    ("aspirin", 0.45), ("warfarin", 0.15), ("metoprolol", 0.12),
    ("insulin", 0.08), ("furosemide", 0.07), ("heparin", 0.05),
    ("lisinopril", 0.04), ("amoxicillin", 0.04),
]
SPECIALTIES = [
    ("cardiology", 0.45), ("gastroenterology", 0.25),
    ("neurology", 0.20), ("general surgery", 0.10),
]


def _weighted(rng, pool):
    x = rng.random()
    acc = 0.0
    for item, w in pool:
        acc += w
        if x < acc:
            return item
    return pool[-1][0]


# sentence templates use dedicated cue words so that the dominant bigram
# chain runs through entity slots; one sentence per note carries all
# three entity classes, keeping entities present even in fully
# regenerated (100% masked) notes
def gen_medical(rng):
    docs = []
    for i in range(200):
        d1 = _weighted(rng, DISEASES)
        d2 = _weighted(rng, DISEASES)
        m1 = _weighted(rng, DRUGS)
        m2 = _weighted(rng, DRUGS)
        s1 = _weighted(rng, SPECIALTIES)
        s2 = _weighted(rng, SPECIALTIES)
        parts = []
        if rng.random() < 0.85:
            parts.append(f"admission followed sudden {d1} last week .")
        if rng.random() < 0.85:
            parts.append(f"doctors gave {m1} twice daily .")
        parts.append(f"the {s1} team prescribed {m2} for {d2} .")
        if rng.random() < 0.6:
            parts.append(
                rng.choice(
                    [
                        "recovery continued without complications .",
                        "recovery remained slow but steady .",
                    ]
                )
            )
        if rng.random() < 0.7:
            parts.append(f"followup with {s2} was arranged .")
        if rng.random() < 0.85:
            parts.append(
                rng.choice(
                    [
                        "discharge happened in stable condition .",
                        "discharge came after steady progress .",
                    ]
                )
            )
        docs.append({"id": f"med-{i:03d}", "text": " ".join(parts)})
    return docs


HEROES = ["a young detective", "an exiled queen", "a retired boxer", "a quiet farmer",
          "a struggling writer", "an ambitious lawyer", "a wandering musician"]
PLACES = ["a small coastal town", "the old capital", "a remote mining colony",
          "the crowded city", "a snowbound village"]
EVENTS = ["the murder of a friend", "a string of robberies", "a forbidden romance",
          "an old family feud", "a mysterious disappearance", "a rigged election"]
ARCS = [
    "must confront the past before the truth comes out",
    "slowly uncovers a conspiracy reaching the highest offices",
    "falls in love while everything else falls apart",
    "plots a careful revenge against powerful enemies",
    "gathers unlikely allies for one final confrontation",
]
ENDINGS = [
    "the story ends with an uneasy peace .",
    "nothing is resolved and the cycle begins again .",
    "a final twist changes the meaning of everything before .",
    "the family is reunited at great cost .",
]
TAG_WEIGHTS = [
    ("violence", 0.45), ("romantic", 0.38), ("murder", 0.30), ("flashback", 0.25),
    ("revenge", 0.18), ("cult", 0.12), ("scifi", 0.06), ("heist", 0.04),
]


def gen_movies(rng):
    docs = []
    for i in range(200):
        text = (
            f"{rng.choice(HEROES)} returns to {rng.choice(PLACES)} "
            f"after {rng.choice(EVENTS)} and {rng.choice(ARCS)} . "
            f"{rng.choice(ENDINGS)}"
        )
        labels = [tag for tag, w in TAG_WEIGHTS if rng.random() < w]
        if not labels:
            labels = [TAG_WEIGHTS[0][0]]
        docs.append({"id": f"mov-{i:03d}", "text": text, "labels": labels})
    return docs


AUTHOR_STYLES = {
    "auth-ana": {
        "greet": "hi there ,", "sign": "thanks so much , ana",
        "fill": ["honestly", "really", "super"], "punct": " !",
        "topics": ["the schedule for next week", "my upload that keeps failing",
                   "the placement paperwork", "our travel plans"],
    },
    "auth-ben": {
        "greet": "dear colleague :", "sign": "kind regards , benjamin",
        "fill": ["accordingly", "furthermore", "therefore"], "punct": " ;",
        "topics": ["the quarterly report", "the committee minutes",
                   "the revised contract", "the audit findings"],
    },
    "auth-cam": {
        "greet": "hey hey", "sign": "cheers - cam",
        "fill": ["basically", "kinda", "pretty much"], "punct": " ...",
        "topics": ["that gig on friday", "the band practice", "the festival lineup",
                   "the new songs"],
    },
    "auth-dia": {
        "greet": "good afternoon ,", "sign": "sincerely , diana",
        "fill": ["specifically", "in particular", "notably"], "punct": " .",
        "topics": ["the lecture series", "the grant deadline", "the lab rotation",
                   "the seminar room booking"],
    },
    "auth-eli": {
        "greet": "yo !", "sign": "later , eli",
        "fill": ["lowkey", "totally", "for real"], "punct": " !!",
        "topics": ["the game last night", "the group chat drama", "the road trip",
                   "the playoffs"],
    },
    "auth-fay": {
        "greet": "hello friend ,", "sign": "warmly , fay",
        "fill": ["gently", "quietly", "slowly"], "punct": " .",
        "topics": ["the garden this spring", "the pottery class", "the long walks",
                   "the recipe you sent"],
    },
    "auth-gus": {
        "greet": "to whom it may concern :", "sign": "respectfully , gus",
        "fill": ["pursuant", "herewith", "aforementioned"], "punct": " ;",
        "topics": ["the tenancy agreement", "the insurance claim", "the parking permit",
                   "the council decision"],
    },
    "auth-hui": {
        "greet": "morning team ,", "sign": "best , hui",
        "fill": ["iteratively", "roughly", "asynchronously"], "punct": " .",
        "topics": ["the deployment window", "the flaky tests", "the api migration",
                   "the sprint review"],
    },
}

LETTER_SHAPES = [
    "{greet} i wanted to write about {t1} {p} {f1} it has been on my mind all week "
    "and i would value your thoughts {p} {f2} we should talk about {t2} soon {p} {sign}",
    "{greet} quick note on {t1} {p} {f1} things moved faster than expected and "
    "{f2} i had to improvise {p} let me know how {t2} looks on your side {p} {sign}",
    "{greet} following up on {t1} {p} {f1} nothing is blocked but {f2} the timing "
    "is tight {p} could we align on {t2} before friday {p} {sign}",
]


def gen_authors(rng):
    docs = []
    i = 0
    for author, style in AUTHOR_STYLES.items():
        for _ in range(15):
            t1, t2 = rng.sample(style["topics"], 2)
            f1, f2 = rng.choice(style["fill"]), rng.choice(style["fill"])
            text = rng.choice(LETTER_SHAPES).format(
                greet=style["greet"], sign=style["sign"], t1=t1, t2=t2,
                f1=f1, f2=f2, p=style["punct"],
            )
            docs.append({"id": f"aut-{i:03d}", "text": text, "author": author})
            i += 1
    return docs


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_lexicon(path):
    rows = [(e, "DISEASE") for e, _ in DISEASES]
    rows += [(e, "DRUG") for e, _ in DRUGS]
    rows += [(e, "SPECIALTY") for e, _ in SPECIALTIES]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for surface, etype in rows:
            fh.write(f"{surface}\t{etype}\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_jsonl(OUT / "toy_medical.jsonl", gen_medical(random.Random(2024_01)))
    write_jsonl(OUT / "toy_movies.jsonl", gen_movies(random.Random(2024_02)))
    write_jsonl(OUT / "toy_authors.jsonl", gen_authors(random.Random(2024_03)))
    write_lexicon(OUT / "medical_entities.tsv")
    print(f"wrote toy corpora to {OUT}")


if __name__ == "__main__":
    main()
