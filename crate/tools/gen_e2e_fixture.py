#!/usr/bin/env python3
"""Writes the end-to-end mock fixture used by `generate --mock`.

Outputs (relative to the repository root):
  fixtures/e2e.json         scripted replies for the three generation steps
  fixtures/e2e_cases.json   expected (region, condition) set of every case

Every generation prompt is answered with one of the free-form cases below,
chosen by prompt hash. The conversion rule of a case matches on its full
free-form text; each finding is then discretized by a rule keyed on the
finding's wording.

With `--golden ASSIGNMENT` (comma-separated case names in item order) the
script also writes fixtures/e2e_golden.json for a 10-item run.
"""

import argparse
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

# name, breed/age/sex/weight for the draft, findings as (wording, region, condition)
# A finding whose region is None is answered by a scripted repair sequence.
CASES = [
    ("left_grade2", ("Pug", 4, "male", 8.2), [
        ("chronic change of the left knee joint", 12, 7),
        ("pain at the left lateral fabella", 24, 1),
        ("tension over the left ischial tuberosity", 20, 2),
        ("swelling around the left calcaneal tendon insertion", 28, 4),
    ]),
    ("bilateral_grade3", ("Chihuahua", 7, "female", 2.6), [
        ("chronic change of the left knee joint", 12, 7),
        ("acute inflammation of the right knee joint", 13, 3),
        ("pain in the left hip joint", 10, 1),
        ("tension at the left medial fabella", 26, 2),
        ("tension at the right medial fabella", 27, 2),
        ("atrophy near the left iliopsoas insertion", 22, 6),
    ]),
    ("duplicate_region", ("Yorkshire Terrier", 2, "female", 3.1), [
        ("pain of the right knee joint", 13, 1),
        ("swelling of the right knee joint", 13, 4),
        ("warmth at the right lateral fabella", 25, 5),
    ]),
    ("repair", ("Maltese", 11, "male", 4.0), [
        ("tenderness around the left stifle", 12, 1),
        ("tension over the right ischial tuberosity", 21, 2),
    ]),
    ("no_findings", ("Pomeranian", 5, "female", 2.9), []),
]

REPAIR_FINDING = "tenderness around the left stifle"


def freeform(findings):
    if not findings:
        return "no abnormalities found"
    return "\n".join(text for text, _, _ in findings)


def expected_set(findings):
    kept, seen = [], set()
    for _, region, condition in findings:
        if region not in seen:
            seen.add(region)
            kept.append([region, condition])
    return sorted(kept)


def reply(region, condition):
    return json.dumps({"region": str(region), "condition": str(condition)}, separators=(",", ":"))


def build():
    texts = [freeform(f) for _, _, f in CASES]
    for i, a in enumerate(texts):
        for j, b in enumerate(texts):
            assert i == j or a not in b, f"case text {i} is contained in case {j}"

    generation = {
        "name": "generation",
        "contains": ["## Task Definition and Background"],
        "pick": "prompt_hash",
        "replies": [
            f"The patient shows the typical pattern of the diagnosis.</think>\n{t}\n" for t in texts
        ],
    }
    rules = [generation]
    for (name, (breed, age, sex, weight), findings), text in zip(CASES, texts):
        draft = {
            "breed": breed,
            "age": age,
            "sex": sex,
            "weight": weight,
            "palpation_findings": [t for t, _, _ in findings],
        }
        rules.append({
            "name": f"convert_{name}",
            "contains": ["Convert it into", text],
            "pick": "attempt",
            "replies": [json.dumps(draft, separators=(",", ":"))],
        })

    answers = {}
    for _, _, findings in CASES:
        for text, region, condition in findings:
            assert answers.get(text, (region, condition)) == (region, condition), text
            answers[text] = (region, condition)
    for a in answers:
        for b in answers:
            assert a == b or not b.endswith(a), f"{a!r} is a suffix of {b!r}"
    for text, (region, condition) in sorted(answers.items()):
        replies = [reply(region, condition)]
        if text == REPAIR_FINDING:
            replies = [reply(999, condition), replies[0]]
        rules.append({
            "name": f"discretize {text}",
            "contains": ["best match"],
            "ends_with": text,
            "pick": "attempt",
            "replies": replies,
        })
    return {"native_constraints": False, "rules": rules}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--golden", help="comma-separated case names of a 10-item run")
    args = parser.parse_args()

    out = ROOT / "fixtures"
    out.mkdir(exist_ok=True)
    (out / "e2e.json").write_text(json.dumps(build(), indent=1) + "\n")
    cases = {name: expected_set(f) for name, _, f in CASES}
    (out / "e2e_cases.json").write_text(json.dumps(cases, indent=1) + "\n")
    if args.golden:
        names = args.golden.split(",")
        golden = {
            "seed": 1,
            "count": len(names),
            "items": [
                {"id": f"llm-{i:06}", "case": n, "abnormalities": cases[n]} for i, n in enumerate(names)
            ],
        }
        (out / "e2e_golden.json").write_text(json.dumps(golden, indent=1) + "\n")


if __name__ == "__main__":
    main()
