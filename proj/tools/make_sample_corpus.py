"""Writes data/sample/sample.cha, the synthetic transcript used for smoke
runs. Deterministic; rerun only if the generator changes."""

import random
from pathlib import Path

NOUNS = """ball dog book cup car cat baby duck truck bear shoe block apple bird
spoon hat cookie juice bottle fish horse train boat cow sock banana blanket
box chair door flower house milk moon pig puzzle sheep star table tree
teddy bowl bubble bunny crayon egg frog monkey nose pillow plate""".split()
ADJS = "big little red blue nice yellow soft silly".split()
VERBS = "see want have find get push throw hold".split()

TEMPLATES = [
    "look at {np} .",
    "do you {verb} {np} ?",
    "where is {np} ?",
    "that's {np} .",
    "can you {verb} {np} ?",
    "let's {verb} {np} .",
    "here's {np} .",
    "is that {np} ?",
    "put {np} in {np} .",
    "give mommy {np} .",
    "you {verb} {np} .",
    "oh {np} fell down !",
    "what does {np} say ?",
    "good job !",
    "all done .",
    "yeah .",
    "okay .",
    "what's that ?",
    "&-um let's see .",
    "no no <don't do that> [/] don't do that .",
    "you're so silly .",
    "thank you .",
    "xxx ball .",
    "time for a bath@b .",
    "want more ?",
]


def zipf_choice(rng, items, a=1.06):
    weights = [1.0 / (r ** a) for r in range(1, len(items) + 1)]
    return rng.choices(items, weights)[0]


def noun_phrase(rng):
    det = rng.choices(["a", "the", "your", "that"], [0.34, 0.5, 0.1, 0.06])[0]
    noun = zipf_choice(rng, NOUNS)
    if rng.random() < 0.15:
        return f"{det} {rng.choice(ADJS)} {noun}"
    return f"{det} {noun}"


def utterance(rng):
    template = rng.choice(TEMPLATES)
    while "{np}" in template:
        template = template.replace("{np}", noun_phrase(rng), 1)
    return template.replace("{verb}", rng.choice(VERBS))


def main():
    rng = random.Random(7)
    lines = [
        "@UTF8",
        "@Begin",
        "@Languages:\teng",
        "@Participants:\tCHI Target_Child, MOT Mother, FAT Father",
        "@ID:\teng|sample|CHI|2;03.00|||Target_Child|||",
        "@Comment:\tSynthetic transcript for smoke tests; not real speech.",
    ]
    adult = 0
    while adult < 200:
        if rng.random() < 0.15:
            lines.append(f"*CHI:\t{rng.choice(['ball .', 'doggie !', 'more juice .', 'xxx .', 'mine !'])}")
            continue
        speaker = "MOT" if rng.random() < 0.8 else "FAT"
        text = utterance(rng)
        if len(text) > 40 and rng.random() < 0.3:
            cut = text.index(" ", 20)
            text = text[:cut] + "\n\t" + text[cut + 1:]
        lines.append(f"*{speaker}:\t{text}")
        if rng.random() < 0.2:
            lines.append("%com:\tpoints at the toy")
        adult += 1
    lines.append("@End")
    out = Path(__file__).resolve().parent.parent / "data" / "sample" / "sample.cha"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
