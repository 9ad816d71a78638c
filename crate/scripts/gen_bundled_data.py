#!/usr/bin/env python3
"""Regenerates the bundled desk-scale data under crates/core/data.

Word vectors are synthetic: three category centres (symptom, disease,
medicine) plus shared modifier words placed between them, so that
multi-word phrases overlap across categories. Output is deterministic.
"""
import json
import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")
DIM = 50
rng = np.random.default_rng(20211)

SYMPTOMS = """fever cough headache nausea fatigue rash dizziness vomiting diarrhea chills
sweating itching swelling cramp wheezing insomnia palpitation numbness tingling stiffness
soreness congestion sneezing bloating constipation heartburn tremor weakness confusion thirst
hoarseness jaundice bruising bleeding fainting seizure blurriness breathlessness ache lump""".split()
DISEASES = """diabetes asthma hypertension pneumonia influenza malaria tuberculosis arthritis bronchitis hepatitis
anemia migraine eczema psoriasis leukemia lymphoma melanoma cancer stroke epilepsy
dementia parkinsonism cirrhosis gastritis colitis sinusitis tonsillitis measles mumps cholera
typhoid dengue hypothyroidism osteoporosis gout lupus obesity glaucoma cataract appendicitis""".split()
MEDICINES = """paracetamol ibuprofen aspirin amoxicillin insulin metformin lisinopril atorvastatin omeprazole albuterol
prednisone warfarin heparin morphine codeine naproxen cetirizine loratadine azithromycin ciprofloxacin
doxycycline fluoxetine sertraline diazepam lorazepam levothyroxine amlodipine losartan simvastatin clopidogrel
furosemide hydrochlorothiazide gabapentin tramadol ranitidine montelukast salbutamol penicillin acyclovir chloroquine""".split()

# modifier -> weights over (symptom, disease, medicine) centres
MODIFIERS = {
    "acute": (0.45, 0.55, 0.0), "chronic": (0.4, 0.6, 0.0), "severe": (0.6, 0.4, 0.0),
    "mild": (0.6, 0.3, 0.1), "recurrent": (0.5, 0.5, 0.0), "persistent": (0.7, 0.3, 0.0),
    "oral": (0.0, 0.2, 0.8), "topical": (0.1, 0.1, 0.8), "tablet": (0.0, 0.1, 0.9),
    "syrup": (0.1, 0.0, 0.9), "injection": (0.0, 0.2, 0.8), "dose": (0.0, 0.2, 0.8),
    "pain": (0.7, 0.3, 0.0), "infection": (0.3, 0.7, 0.0), "inflammation": (0.4, 0.6, 0.0),
    "low": (0.4, 0.4, 0.2), "high": (0.4, 0.4, 0.2), "blood": (0.35, 0.45, 0.2),
    "pressure": (0.3, 0.6, 0.1), "skin": (0.5, 0.5, 0.0), "chest": (0.6, 0.4, 0.0),
    "abdominal": (0.6, 0.4, 0.0), "joint": (0.5, 0.5, 0.0), "muscle": (0.6, 0.3, 0.1),
    "night": (0.8, 0.2, 0.0), "daily": (0.1, 0.1, 0.8), "extended": (0.0, 0.2, 0.8),
    "release": (0.0, 0.1, 0.9), "childhood": (0.2, 0.8, 0.0), "viral": (0.3, 0.7, 0.0),
    "bacterial": (0.2, 0.7, 0.1), "cream": (0.1, 0.1, 0.8),
}

GENERIC = """do does you have has is are what when where why how can the a an of with and for
to in at by after often take taken used treat treats treated medicine disease symptom common
patient patients doctor cause causes caused spread sign signs relief relieve feel feeling
any your it which kind type lasts last long day days week weeks mosquito mosquitoes lungs
liver heart exercise sleep sugar attack attacks""".split()

centres = rng.normal(0.0, 1.0, size=(3, DIM))
centres *= 2.2 / np.linalg.norm(centres, axis=1, keepdims=True)

vectors = {}
for cat, words in enumerate([SYMPTOMS, DISEASES, MEDICINES]):
    for w in words:
        vectors[w] = centres[cat] + rng.normal(0.0, 0.45, size=DIM)
for w, mix in MODIFIERS.items():
    vectors[w] = np.asarray(mix) @ centres + rng.normal(0.0, 0.45, size=DIM)
for w in GENERIC:
    if w not in vectors:
        vectors[w] = rng.normal(0.0, 0.3, size=DIM)

with open(os.path.join(OUT, "vectors.txt"), "w") as f:
    for w, v in vectors.items():
        f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

# Labelled mini-corpus: ~100 items per category, a head word alone or
# with one or two modifiers drawn from the category's likely modifiers.
CATEGORY_NAMES = ["symptom", "disease", "medicine"]
mods = list(MODIFIERS)
items = []
seen = set()
for cat, words in enumerate([SYMPTOMS, DISEASES, MEDICINES]):
    affinity = np.array([MODIFIERS[m][cat] + 0.05 for m in mods])
    affinity /= affinity.sum()
    rows = []
    for w in words:
        rows.append(w)
    while len(rows) < 100:
        head = words[rng.integers(len(words))]
        n_mod = 1 if rng.random() < 0.7 else 2
        chosen = rng.choice(len(mods), size=n_mod, replace=False, p=affinity)
        phrase = " ".join([mods[i] for i in chosen] + [head])
        if phrase in seen:
            continue
        seen.add(phrase)
        rows.append(phrase)
    for i, text in enumerate(rows):
        # exercise the preprocessing path on a share of the items
        if i % 7 == 3:
            text = text.replace(" ", "_").title()
        elif i % 11 == 5:
            text = text.upper() + "!"
        items.append({"text": text, "category": CATEGORY_NAMES[cat]})

order = rng.permutation(len(items))
with open(os.path.join(OUT, "mini_labelled.jsonl"), "w") as f:
    for i in order:
        f.write(json.dumps(items[i]) + "\n")

print(len(vectors), "vectors;", len(items), "labelled items")
