#!/usr/bin/env python3
"""Regenerates the shipped default data files.

Outputs (relative to the repository root):
  data/atlas.json            region/condition atlas over the two-view template
  data/template.svg          schematic body-map background
  data/kb.json               breed knowledge base
  data/other_diagnoses.txt   label pool for the negative class
  prompts/few_shot.json      encoded example documentations

Geometry is schematic: regions are laid out on two dog silhouettes (supine on
the left, prone on the right) with the body axis vertical and the head at the
top. The supine view is mirrored, so a region on the dog's left side sits to
the viewer's right of the supine axis and to the viewer's left of the prone
axis.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

WIDTH, HEIGHT = 1000, 660
AXIS = {"supine": 250, "prone": 750}

CONDITIONS = [
    (1, "pain", [230, 159, 0]),
    (2, "tension", [0, 114, 178]),
    (3, "acute inflammation", [213, 0, 0]),
    (4, "swelling", [0, 158, 115]),
    (5, "warmth", [204, 121, 167]),
    (6, "atrophy", [86, 180, 233]),
    (7, "chronic change", [0, 0, 0]),
]

# --- geometry helpers -------------------------------------------------------


def place_x(view, side, u0, u1):
    """Maps a lateral range (distance from the body axis) to canvas x."""
    axis = AXIS[view]
    if side == "midline":
        return axis - u1, axis + u1
    # supine is mirrored: the dog's left appears on the viewer's right
    toward_right = (side == "left") == (view == "supine")
    if toward_right:
        return axis + u0, axis + u1
    return axis - u1, axis - u0


def circle_cx(view, side, u):
    axis = AXIS[view]
    if side == "midline":
        return axis
    toward_right = (side == "left") == (view == "supine")
    return axis + u if toward_right else axis - u


regions = []


def add_pair_circle(name, view, u, v, r, tags=()):
    for side in ("left", "right"):
        regions.append(
            {
                "label": f"{side} {name}",
                "view": view,
                "side": side,
                "shape": "circle",
                "geometry": {"cx": circle_cx(view, side, u), "cy": v, "r": r},
                "tags": list(tags),
            }
        )


def band(names, view, box, vertical, tags=()):
    """Lays out paired rectangles as strips inside a band box (u0, u1, y0, y1)."""
    u0, u1, y0, y1 = box
    n = len(names)
    gap = 2
    for i, name in enumerate(names):
        if vertical:
            span = (u1 - u0 - gap * (n - 1)) / n
            a = round(u0 + i * (span + gap))
            b = round(u0 + i * (span + gap) + span)
            ru0, ru1, ry0, ry1 = a, b, y0, y1
        else:
            span = (y1 - y0 - gap * (n - 1)) / n
            a = round(y0 + i * (span + gap))
            b = round(y0 + i * (span + gap) + span)
            ru0, ru1, ry0, ry1 = u0, u1, a, b
        for side in ("left", "right"):
            x0, x1 = place_x(view, side, ru0, ru1)
            regions.append(
                {
                    "label": f"{side} {name}",
                    "view": view,
                    "side": side,
                    "shape": "rectangle",
                    "geometry": {"x": x0, "y": ry0, "w": x1 - x0, "h": ry1 - ry0},
                    "tags": list(tags),
                }
            )


midline = []


def add_midline_rect(label, view, half_width, y0, y1):
    x0, x1 = place_x(view, "midline", 0, half_width)
    midline.append(
        {
            "label": label,
            "view": view,
            "side": "midline",
            "shape": "rectangle",
            "geometry": {"x": x0, "y": y0, "w": x1 - x0, "h": y1 - y0},
            "tags": [],
        }
    )


def add_midline_circle(label, view, v, r):
    midline.append(
        {
            "label": label,
            "view": view,
            "side": "midline",
            "shape": "circle",
            "geometry": {"cx": AXIS[view], "cy": v, "r": r},
            "tags": [],
        }
    )


# --- atlas content ----------------------------------------------------------

# joints first so that the commonly referenced ones get small, stable indices
add_pair_circle("shoulder joint", "prone", 112, 168, 10)
add_pair_circle("elbow joint", "supine", 126, 255, 10)
add_pair_circle("carpal joint", "supine", 126, 340, 9)
add_pair_circle("sacroiliac joint", "prone", 40, 402, 8)
add_pair_circle("hip joint", "prone", 100, 418, 11, tags=["hip_joint"])
add_pair_circle("knee joint", "supine", 120, 502, 11, tags=["knee_joint"])
add_pair_circle("tarsal joint", "supine", 120, 584, 9)

# circular soft-tissue structures and muscle origins/insertions
add_pair_circle("biceps brachii origin (supraglenoid tubercle)", "supine", 112, 178, 6)
add_pair_circle("greater trochanter (gluteal insertion)", "prone", 122, 436, 6)
add_pair_circle("ischial tuberosity (hamstring origin)", "prone", 62, 446, 6, tags=["upper_thigh"])
add_pair_circle("iliopsoas insertion (lesser trochanter)", "supine", 88, 430, 6, tags=["upper_thigh"])
add_pair_circle("lateral fabella", "prone", 146, 508, 5, tags=["knee_area"])
add_pair_circle("medial fabella", "supine", 98, 514, 5, tags=["knee_area"])
add_pair_circle("calcaneal tendon insertion", "prone", 126, 590, 6, tags=["lower_leg"])

# head and neck
band(["masseter muscle"], "supine", (12, 44, 96, 120), False)
band(["temporalis muscle"], "prone", (12, 42, 50, 100), False)
band(["sternocephalicus muscle", "brachiocephalicus muscle (cervical part)"],
     "supine", (10, 42, 124, 160), True)
band(["splenius muscle", "trapezius muscle (cervical part)", "rhomboideus muscle (cervical part)"], "prone", (8, 44, 112, 152), True)

# shoulder and thorax
band(["supraspinatus muscle", "infraspinatus muscle", "deltoideus muscle", "teres major muscle",
      "trapezius muscle (thoracic part)"], "prone", (44, 100, 150, 222), True)
band(["pectoralis superficialis muscle", "pectoralis profundus muscle", "serratus ventralis muscle (thoracic part)"], "supine", (22, 92, 166, 236), True)
band(["latissimus dorsi muscle", "iliocostalis thoracis muscle",
      "longissimus thoracis muscle"], "prone", (12, 92, 230, 312), True)
band(["external intercostal muscles", "cutaneous trunci muscle"],
     "supine", (22, 80, 244, 300), False)

# abdomen and lumbar back
band(["rectus abdominis muscle", "external abdominal oblique muscle", "internal abdominal oblique muscle",
      "transversus abdominis muscle"], "supine", (14, 80, 306, 392), True)
band(["longissimus lumborum muscle", "iliocostalis lumborum muscle", "multifidus lumborum muscle"], "prone", (10, 80, 318, 392), True)

# forelimb
band(["biceps brachii muscle", "brachialis muscle"],
     "supine", (98, 156, 190, 244), True)
band(["pronator teres muscle", "flexor carpi radialis muscle", "flexor carpi ulnaris muscle",
      "superficial digital flexor muscle (forelimb)", "deep digital flexor muscle (forelimb)"],
     "supine", (96, 156, 270, 330), True)
band(["triceps brachii muscle (long head)", "triceps brachii muscle (lateral head)"],
     "prone", (100, 156, 196, 252), True)
band(["extensor carpi radialis muscle", "common digital extensor muscle", "lateral digital extensor muscle",
      "ulnaris lateralis muscle"], "prone", (96, 156, 272, 332), True)
band(["carpal pad region", "forepaw digits"], "supine", (104, 148, 384, 400), True)
band(["dorsal forepaw", "forelimb metacarpal region"], "prone", (104, 148, 342, 372), True)

# pelvis and gluteal region
band(["middle gluteal muscle", "superficial gluteal muscle", "deep gluteal muscle", "piriformis muscle"],
     "prone", (48, 92, 388, 412), False)
band(["tensor fasciae latae muscle"], "prone", (134, 156, 396, 426), True, tags=["upper_thigh"])

# thigh
band(["sartorius muscle (cranial part)", "sartorius muscle (caudal part)", "gracilis muscle", "pectineus muscle",
      "adductor muscle", "vastus medialis muscle", "rectus femoris muscle", "iliopsoas muscle"],
     "supine", (82, 160, 438, 488), True, tags=["upper_thigh"])
band(["biceps femoris muscle (cranial part)", "biceps femoris muscle (caudal part)", "semitendinosus muscle",
      "semimembranosus muscle", "vastus lateralis muscle", "vastus intermedius muscle"],
     "prone", (82, 160, 446, 496), True, tags=["upper_thigh"])

# knee area
band(["patellar ligament", "medial femorotibial joint capsule"], "supine", (82, 107, 492, 512), False,
     tags=["knee_area"])
band(["medial collateral ligament of the knee", "medial retinaculum of the patella"], "supine",
     (134, 158, 492, 512), False, tags=["knee_area"])
band(["lateral collateral ligament of the knee", "lateral retinaculum of the patella", "popliteal lymph node region"],
     "prone", (86, 138, 500, 516), True, tags=["knee_area"])

# lower leg
band(["cranial tibial muscle", "long digital extensor muscle", "medial head of gastrocnemius muscle",
      "popliteus muscle"], "supine", (84, 156, 522, 572), True, tags=["lower_leg"])
band(["lateral head of gastrocnemius muscle", "superficial digital flexor muscle (hindlimb)",
      "fibularis longus muscle", "deep digital flexor muscle (hindlimb)", "lateral digital extensor muscle (hindlimb)"],
     "prone", (84, 156, 522, 576), True, tags=["lower_leg"])
band(["calcaneal tendon"], "prone", (104, 116, 578, 604), True, tags=["lower_leg"])

# hind paw
band(["plantar pad region", "hindpaw digits"], "supine", (100, 140, 596, 610), True)
band(["dorsal hindpaw", "hindlimb metatarsal region"], "prone", (100, 140, 608, 628), True)

# midline structures
add_midline_circle("atlanto-occipital joint", "prone", 106, 8)
add_midline_rect("cervical spine", "prone", 6, 116, 156)
add_midline_rect("thoracic spine (T1-T6)", "prone", 6, 160, 232)
add_midline_rect("thoracic spine (T7-T13)", "prone", 6, 236, 306)
add_midline_circle("thoracolumbar junction", "prone", 314, 6)
add_midline_rect("lumbar spine (L1-L4)", "prone", 6, 322, 362)
add_midline_rect("lumbar spine (L5-L7)", "prone", 6, 366, 392)
add_midline_circle("lumbosacral joint", "prone", 400, 7)
add_midline_rect("sacrum", "prone", 6, 410, 438)
add_midline_rect("tail base", "prone", 6, 442, 470)
add_midline_rect("tail", "prone", 5, 474, 630)
add_midline_rect("mandibular symphysis region", "supine", 8, 100, 118)
add_midline_rect("manubrium of the sternum", "supine", 8, 166, 186)
add_midline_rect("sternum (body)", "supine", 8, 190, 276)
add_midline_rect("xiphoid process", "supine", 8, 280, 300)
add_midline_rect("linea alba (cranial)", "supine", 6, 306, 348)
add_midline_rect("linea alba (caudal)", "supine", 6, 352, 392)
add_midline_rect("pubic symphysis region", "supine", 8, 400, 420)

# atlanto-occipital joint is kept at index 1 to align joint indices
atlas_regions = [midline[0]] + regions + midline[1:]
assert len(atlas_regions) == 214, len(atlas_regions)
for i, r in enumerate(atlas_regions, start=1):
    r["index"] = i
    g = r["geometry"]
    if r["shape"] == "rectangle":
        assert g["w"] > 0 and g["h"] > 0, r
        assert g["x"] >= 0 and g["y"] >= 0 and g["x"] + g["w"] <= WIDTH and g["y"] + g["h"] <= HEIGHT, r
    else:
        assert g["r"] > 0
        assert g["cx"] - g["r"] >= 0 and g["cy"] - g["r"] >= 0, r
        assert g["cx"] + g["r"] <= WIDTH and g["cy"] + g["r"] <= HEIGHT, r
labels = [r["label"] for r in atlas_regions]
assert len(set(labels)) == len(labels)
assert atlas_regions[11]["label"] == "left knee joint"

atlas = {
    "template": {"path": "template.svg", "width": WIDTH, "height": HEIGHT},
    "conditions": [{"index": i, "label": l, "color": c} for i, l, c in CONDITIONS],
    "regions": [
        {k: r[k] for k in ("index", "label", "view", "side", "shape", "geometry", "tags") if k != "tags" or r[k]}
        for r in atlas_regions
    ],
}

# --- template ---------------------------------------------------------------


def silhouette(axis):
    s = []
    a = axis
    s.append(f'<circle cx="{a}" cy="78" r="46"/>')
    s.append(f'<rect x="{a - 44}" y="112" width="88" height="50" rx="18"/>')
    s.append(f'<ellipse cx="{a}" cy="290" rx="96" ry="152"/>')
    for sign in (-1, 1):
        s.append(f'<rect x="{a + sign * 126 - 32}" y="160" width="64" height="244" rx="26"/>')
        s.append(f'<rect x="{a + sign * 121 - 42}" y="400" width="84" height="232" rx="30"/>')
    s.append(f'<rect x="{a - 7}" y="440" width="14" height="194" rx="7"/>')
    return s


tpl = [
    f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
    f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    '<g fill="#f2f2f2" stroke="#9a9a9a" stroke-width="2">',
]
tpl += silhouette(AXIS["supine"]) + silhouette(AXIS["prone"])
tpl.append("</g>")
tpl.append('<g font-family="sans-serif" font-size="16" fill="#6a6a6a" text-anchor="middle">')
tpl.append(f'<text x="{AXIS["supine"]}" y="22">supine</text>')
tpl.append(f'<text x="{AXIS["prone"]}" y="22">prone</text>')
tpl.append(f'<text x="{AXIS["supine"] + 170}" y="22">L</text><text x="{AXIS["supine"] - 170}" y="22">R</text>')
tpl.append(f'<text x="{AXIS["prone"] - 170}" y="22">L</text><text x="{AXIS["prone"] + 170}" y="22">R</text>')
tpl.append("</g>")
tpl.append("</svg>")

# --- breed knowledge base ---------------------------------------------------

# breed, male weight range (kg), male life expectancy (years)
BREEDS = [
    ("Affenpinscher", 3.0, 6.0, 13), ("Afghan Hound", 23.0, 27.0, 13), ("Airedale Terrier", 23.0, 29.0, 12),
    ("Akita", 45.0, 59.0, 11), ("Alaskan Malamute", 36.0, 43.0, 11), ("American Bulldog", 32.0, 54.0, 12),
    ("American Cocker Spaniel", 11.0, 14.0, 13), ("American Foxhound", 29.0, 34.0, 12),
    ("American Staffordshire Terrier", 25.0, 32.0, 13), ("Anatolian Shepherd", 50.0, 65.0, 12),
    ("Australian Cattle Dog", 16.0, 22.0, 14), ("Australian Kelpie", 14.0, 20.0, 13),
    ("Australian Shepherd", 25.0, 32.0, 14), ("Australian Terrier", 6.5, 7.5, 13), ("Basenji", 10.0, 12.0, 14),
    ("Basset Hound", 23.0, 29.0, 12), ("Beagle", 10.0, 11.0, 13), ("Bearded Collie", 20.0, 25.0, 13),
    ("Bedlington Terrier", 8.0, 10.0, 13), ("Belgian Malinois", 25.0, 30.0, 13),
    ("Belgian Tervuren", 25.0, 30.0, 12), ("Bernese Mountain Dog", 38.0, 50.0, 8),
    ("Bichon Frise", 5.0, 8.0, 15), ("Black Russian Terrier", 50.0, 60.0, 11),
    ("Bloodhound", 41.0, 50.0, 10), ("Bluetick Coonhound", 25.0, 36.0, 12), ("Border Collie", 14.0, 20.0, 14),
    ("Border Terrier", 5.9, 7.1, 14), ("Borzoi", 34.0, 47.0, 11), ("Boston Terrier", 6.0, 11.0, 13),
    ("Bouvier des Flandres", 35.0, 40.0, 11), ("Boxer", 27.0, 32.0, 11), ("Briard", 30.0, 45.0, 12),
    ("Brittany", 14.0, 18.0, 13), ("Brussels Griffon", 3.5, 5.0, 13), ("Bull Terrier", 23.0, 32.0, 12),
    ("Bulldog", 23.0, 25.0, 9), ("Bullmastiff", 50.0, 59.0, 9), ("Cairn Terrier", 6.0, 8.0, 14),
    ("Cane Corso", 45.0, 50.0, 10), ("Cardigan Welsh Corgi", 14.0, 17.0, 13),
    ("Cavalier King Charles Spaniel", 5.9, 8.2, 11), ("Chesapeake Bay Retriever", 29.0, 36.0, 12),
    ("Chihuahua", 1.5, 3.0, 15), ("Chinese Crested", 4.0, 5.5, 14), ("Chinese Shar-Pei", 20.0, 27.0, 10),
    ("Chow Chow", 25.0, 32.0, 11), ("Clumber Spaniel", 32.0, 39.0, 11), ("Collie", 27.0, 34.0, 13),
    ("Curly-Coated Retriever", 32.0, 41.0, 10), ("Dachshund", 7.0, 14.0, 14), ("Dalmatian", 23.0, 32.0, 12),
    ("Dandie Dinmont Terrier", 8.0, 11.0, 13), ("Doberman Pinscher", 40.0, 45.0, 11),
    ("Dogo Argentino", 40.0, 45.0, 11), ("Dogue de Bordeaux", 50.0, 65.0, 7),
    ("English Cocker Spaniel", 13.0, 16.0, 13), ("English Setter", 29.0, 36.0, 11),
    ("English Springer Spaniel", 20.0, 25.0, 13), ("English Toy Spaniel", 3.6, 6.4, 11),
    ("Entlebucher Mountain Dog", 25.0, 30.0, 12), ("Eurasier", 23.0, 32.0, 13),
    ("Field Spaniel", 18.0, 23.0, 13), ("Finnish Lapphund", 15.0, 24.0, 13), ("Finnish Spitz", 12.0, 13.0, 13),
    ("Flat-Coated Retriever", 27.0, 36.0, 10), ("French Bulldog", 9.0, 13.0, 11),
    ("German Pinscher", 11.0, 20.0, 13), ("German Shepherd", 30.0, 40.0, 11),
    ("German Shorthaired Pointer", 25.0, 32.0, 12), ("German Wirehaired Pointer", 25.0, 32.0, 13),
    ("Giant Schnauzer", 35.0, 47.0, 12), ("Golden Retriever", 30.0, 34.0, 11),
    ("Gordon Setter", 25.0, 36.0, 12), ("Great Dane", 54.0, 90.0, 8), ("Great Pyrenees", 50.0, 60.0, 11),
    ("Greater Swiss Mountain Dog", 52.0, 64.0, 9), ("Greyhound", 30.0, 40.0, 12), ("Havanese", 3.0, 6.0, 15),
    ("Hovawart", 30.0, 40.0, 12), ("Ibizan Hound", 23.0, 27.0, 13), ("Icelandic Sheepdog", 12.0, 14.0, 13),
    ("Irish Setter", 29.0, 34.0, 13), ("Irish Terrier", 11.0, 12.0, 14), ("Irish Water Spaniel", 25.0, 30.0, 11),
    ("Irish Wolfhound", 54.0, 70.0, 7), ("Italian Greyhound", 3.5, 5.0, 14), ("Jack Russell Terrier", 6.0, 8.0, 14),
    ("Japanese Chin", 1.8, 4.0, 11), ("Keeshond", 16.0, 20.0, 13), ("Kerry Blue Terrier", 15.0, 18.0, 13),
    ("Komondor", 50.0, 60.0, 11), ("Kuvasz", 45.0, 52.0, 11), ("Labrador Retriever", 29.0, 36.0, 12),
    ("Lagotto Romagnolo", 13.0, 16.0, 15), ("Lakeland Terrier", 7.0, 8.0, 13), ("Leonberger", 54.0, 77.0, 8),
    ("Lhasa Apso", 6.0, 8.0, 14), ("Lowchen", 4.0, 8.0, 13), ("Maltese", 3.0, 4.0, 13),
    ("Manchester Terrier", 5.0, 10.0, 15), ("Mastiff", 73.0, 100.0, 8), ("Miniature Pinscher", 3.5, 4.5, 13),
    ("Miniature Schnauzer", 5.0, 8.0, 13), ("Neapolitan Mastiff", 60.0, 70.0, 8),
    ("Newfoundland", 60.0, 70.0, 9), ("Norfolk Terrier", 5.0, 5.5, 13), ("Norwegian Elkhound", 23.0, 27.0, 13),
    ("Norwich Terrier", 5.0, 5.5, 13), ("Nova Scotia Duck Tolling Retriever", 20.0, 23.0, 13),
    ("Old English Sheepdog", 32.0, 45.0, 11), ("Papillon", 2.5, 4.5, 15), ("Parson Russell Terrier", 6.0, 8.0, 14),
    ("Pekingese", 3.2, 6.0, 13), ("Pembroke Welsh Corgi", 10.0, 14.0, 13), ("Pharaoh Hound", 20.0, 25.0, 13),
    ("Plott Hound", 23.0, 27.0, 13), ("Pointer", 25.0, 34.0, 13), ("Pomeranian", 1.9, 3.5, 14),
    ("Poodle (Standard)", 20.0, 32.0, 13), ("Poodle (Miniature)", 5.0, 7.0, 14), ("Poodle (Toy)", 2.0, 3.0, 15),
    ("Portuguese Water Dog", 19.0, 27.0, 12), ("Pug", 6.0, 8.0, 13), ("Puli", 13.0, 15.0, 13),
    ("Rat Terrier", 4.5, 11.0, 15), ("Rhodesian Ridgeback", 36.0, 41.0, 11), ("Rottweiler", 50.0, 60.0, 9),
    ("Saint Bernard", 64.0, 82.0, 9), ("Saluki", 18.0, 27.0, 13), ("Samoyed", 20.0, 30.0, 13),
    ("Schipperke", 5.0, 7.0, 14), ("Scottish Deerhound", 39.0, 50.0, 9), ("Scottish Terrier", 8.5, 10.0, 12),
    ("Shetland Sheepdog", 7.0, 11.0, 13), ("Shiba Inu", 9.0, 11.0, 14), ("Shih Tzu", 4.0, 7.5, 13),
    ("Siberian Husky", 20.0, 27.0, 13), ("Soft-Coated Wheaten Terrier", 16.0, 20.0, 13),
    ("Staffordshire Bull Terrier", 13.0, 17.0, 13), ("Standard Schnauzer", 16.0, 20.0, 14),
    ("Tibetan Mastiff", 45.0, 73.0, 11), ("Tibetan Terrier", 8.0, 14.0, 14), ("Vizsla", 25.0, 27.0, 13),
    ("Weimaraner", 30.0, 40.0, 12), ("West Highland White Terrier", 7.0, 10.0, 14), ("Whippet", 11.0, 15.0, 13),
    ("Xoloitzcuintli", 9.0, 14.0, 14), ("Yorkshire Terrier", 2.0, 3.5, 14),
]
assert len(BREEDS) == 149, len(BREEDS)
assert len({b[0] for b in BREEDS}) == 149


def tenth(x):
    return round(x * 10) / 10


kb = []
for name, wmin, wmax, le in BREEDS:
    fmin = max(tenth(wmin * 0.85), 0.5)
    fmax = max(tenth(wmax * 0.85), fmin)
    kb.append(
        {
            "breed": name,
            "male": {"life_expectancy": float(le), "w_min": wmin, "w_max": wmax},
            "female": {"life_expectancy": le + 0.5, "w_min": fmin, "w_max": fmax},
        }
    )

# --- negative-class diagnosis pool -------------------------------------------

OTHER_DIAGNOSES = """lumbosacral osteoarthritis
lumbosacral stenosis
hip dysplasia
elbow dysplasia
fragmented medial coronoid process
osteochondritis dissecans of the shoulder
osteochondritis dissecans of the elbow
osteochondritis dissecans of the tarsus
cranial cruciate ligament rupture
partial cranial cruciate ligament tear
caudal cruciate ligament rupture
meniscal tear
osteoarthritis of the hip
osteoarthritis of the elbow
osteoarthritis of the shoulder
osteoarthritis of the carpus
osteoarthritis of the tarsus
polyarthritis
immune-mediated polyarthritis
septic arthritis
spondylosis deformans
intervertebral disc disease (cervical)
intervertebral disc disease (thoracolumbar)
degenerative myelopathy
fibrocartilaginous embolism
discospondylitis
wobbler syndrome
atlantoaxial instability
cauda equina syndrome
iliopsoas strain
iliopsoas tendinopathy
gracilis contracture
semitendinosus contracture
infraspinatus contracture
supraspinatus tendinopathy
biceps tendinopathy
medial shoulder instability
bicipital tenosynovitis
carpal hyperextension injury
tarsal instability
calcaneal tendon rupture
calcaneal tendinopathy
superficial digital flexor tendon luxation
panosteitis
hypertrophic osteodystrophy
Legg-Calve-Perthes disease
avascular necrosis of the femoral head
ununited anconeal process
incomplete ossification of the humeral condyle
radius curvus
angular limb deformity
femoral fracture (healed)
tibial fracture (healed)
pelvic fracture (healed)
radius and ulna fracture (healed)
amputation of a forelimb
amputation of a hindlimb
sacroiliac luxation
coxofemoral luxation
shoulder luxation
elbow luxation
digit injury
nail bed infection
interdigital cyst
myositis
masticatory muscle myositis
polymyositis
muscle atrophy due to disuse
generalized muscle weakness
myasthenia gravis
exercise-induced collapse
fibrotic myopathy
rhabdomyolysis
back pain of unknown origin
neck pain of unknown origin
chronic lameness of unknown origin
obesity-related joint overload
geriatric muscle loss
postoperative rehabilitation after hip replacement
postoperative rehabilitation after tibial plateau leveling osteotomy
postoperative rehabilitation after disc surgery
postoperative rehabilitation after fracture repair
postoperative rehabilitation after amputation
soft tissue sarcoma of the limb
osteosarcoma of the distal radius
osteosarcoma of the proximal humerus
synovial cell sarcoma
lipoma of the thigh
lipoma of the thoracic wall
hemangiosarcoma of the spleen with secondary weakness
hypothyroidism-related myopathy
Cushing's disease-related muscle wasting
Lyme disease arthritis
leishmaniasis-related polyarthritis
anaplasmosis-related lameness
ehrlichiosis-related polyarthritis
steroid-responsive meningitis-arteritis
vestibular syndrome
peripheral neuropathy
brachial plexus injury
sciatic nerve injury
radial nerve paralysis
tail injury
limber tail syndrome
perianal fistula with secondary tension
thoracic wall trauma
rib fracture
pectoral muscle strain
triceps strain
quadriceps strain
hamstring strain
gastrocnemius strain
gluteal muscle strain
lumbar muscle strain
cervical muscle spasm
trigger points in the shoulder girdle
myofascial pain syndrome
compensatory overload of the forelimbs
compensatory overload of the hindlimbs
sporting injury of the carpus
agility-related shoulder strain
flyball-related tarsal strain
hip osteoarthritis after femoral head ostectomy
shoulder osteoarthritis secondary to osteochondrosis
elbow incongruity
carpal valgus
medial coronoid disease with secondary arthritis
stifle osteoarthritis without luxation
tarsocrural osteoarthritis
spinal arachnoid diverticulum
syringomyelia
chiari-like malformation
hemivertebrae
transitional lumbosacral vertebra
osteomyelitis of the tibia
carpal tunnel-like flexor tendinopathy
""".strip().splitlines()
assert len(OTHER_DIAGNOSES) == 136, len(OTHER_DIAGNOSES)
assert len(set(OTHER_DIAGNOSES)) == 136
assert not any("patellar" in d for d in OTHER_DIAGNOSES)

# --- few-shot examples ------------------------------------------------------


def by_tag(tag, side):
    return [r["index"] for r in atlas_regions if tag in r.get("tags", []) and r["side"] == side]


def find(label):
    for r in atlas_regions:
        if r["label"] == label:
            return r["index"]
    raise KeyError(label)


rng = random.Random(20240611)
SPECS = [(1, "left", 9), (2, "right", 18), (3, "bilateral", 30), (4, "bilateral", 51)]
few_shot = []
for grade, location, target in SPECS:
    sides = ["left", "right"] if location == "bilateral" else [location]
    picked = {}
    knee_cond = 3 if grade <= 2 else 7
    for side in sides:
        picked[find(f"{side} knee joint")] = knee_cond
        if grade >= 3:
            picked[find(f"{side} hip joint")] = rng.choice([3, 7])
    soft = [i for s in sides for t in ("knee_area", "upper_thigh", "lower_leg") for i in by_tag(t, s)]
    rng.shuffle(soft)
    others = [r["index"] for r in atlas_regions if r["index"] not in soft and r["index"] not in picked]
    rng.shuffle(others)
    pool = soft + others
    while len(picked) < target:
        idx = pool.pop(0)
        picked[idx] = rng.choice([1, 1, 2, 2, 4, 5, 6])
    few_shot.append(
        {
            "id": f"example-grade-{grade}",
            "metadata": None,
            "diagnosis": {"name": "patellar luxation", "grade": grade, "location": location},
            "abnormalities": [{"region": r, "condition": c} for r, c in sorted(picked.items())],
            "provenance": "real",
            "seed": 0,
        }
    )

# --- write ------------------------------------------------------------------

def one_line_items(key, items):
    body = ",\n".join("  " + json.dumps(item) for item in items)
    return f'"{key}": [\n{body}\n ]'


atlas_text = "{\n " + ",\n ".join(
    [f'"template": {json.dumps(atlas["template"])}',
     one_line_items("conditions", atlas["conditions"]),
     one_line_items("regions", atlas["regions"])]
) + "\n}\n"
(ROOT / "data" / "atlas.json").write_text(atlas_text)
(ROOT / "data" / "template.svg").write_text("\n".join(tpl) + "\n")
(ROOT / "data" / "kb.json").write_text("[\n" + ",\n".join(" " + json.dumps(r) for r in kb) + "\n]\n")
(ROOT / "data" / "other_diagnoses.txt").write_text("\n".join(OTHER_DIAGNOSES) + "\n")
(ROOT / "prompts" / "few_shot.json").write_text("[\n" + ",\n".join(" " + json.dumps(d) for d in few_shot) + "\n]\n")
print("regions", len(atlas_regions), "breeds", len(kb), "diagnoses", len(OTHER_DIAGNOSES))
for side in ("left", "right"):
    print(side, {t: len(by_tag(t, side)) for t in ("knee_joint", "hip_joint", "knee_area", "upper_thigh", "lower_leg")})
