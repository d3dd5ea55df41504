#!/usr/bin/env python3
"""Builds the bundled annotated corpus (annotated_corpus.jsonl + registry.json).

Deterministic: rerunning rewrites byte-identical files. Each JSONL line is a
message submission plus "units", the manual labels per classification unit.
"""

import datetime as dt
import json
import random
from collections import Counter
from pathlib import Path

HERE = Path(__file__).resolve().parent
rng = random.Random(20170601)

SUBJECTS = {
    "FarmProducts": 67,
    "Equipment": 60,
    "SalesMarketing": 24,
    "Environment": 8,
    "System": 23,
    "Others": 18,
}
IMPORTANCE = {"L1": 26, "L2": 10, "L3": 89, "L4": 41, "L5": 12, "Unclassified": 24}
TYPES = {"A0": 75, "A1": 5, "A2": 7, "B0": 27, "B1": 6, "B2": 7, "C1": 4, "C2": 24,
         "Unclassified": 50}
PEST_MESSAGES = 18

HOUSES = [f"House{k}" for k in range(1, 11)]
CROPS = {k: ("green peppers" if k <= 6 else "tomatoes") for k in range(1, 11)}
CROP_ADJ = {k: ("green pepper" if k <= 6 else "tomato") for k in range(1, 11)}


def house_rect(k):
    lat0 = 43.0500 + 0.0010 * (k - 1)
    lon0 = 141.7800
    return [[lat0, lon0], [lat0, lon0 + 0.0008], [lat0 + 0.0006, lon0 + 0.0008],
            [lat0 + 0.0006, lon0]]


# --- transcript banks -------------------------------------------------------
# Keyed by (subject, type letter or "U"); "{h}" = house number, "{crop}" = crop,
# "{n}"/"{m}" = small numbers. Digit flavour is appended separately.

PEST_LINES = [
    "Found powdery mildew on the lower leaves of the {crop} in House {h}",
    "A few aphids on the new shoots near the door of House {h}",
    "Leaf spot is spreading on the older {crop1} leaves in House {h}",
    "Armyworm damage on two rows in House {h}, the eaten leaves are easy to see",
    "Whiteflies are flying up when I touch the {crop1} plants in House {h}",
    "Thrips marks on the {crop1} flowers in House {h}",
    "The mildew on the {crop} in House {h} came back after the rain",
    "Spider mite webbing on the top leaves in House {h}",
    "Aphids again on the {crop1} seedlings in House {h}",
]

BANK = {
    ("FarmProducts", "A"): [
        "The {crop} in House {h} are setting fruit evenly",
        "Checked the {crop} roots in House {h}",
        "Harvest of the {crop} in House {h} finished for today",
        "The flowers on the third row of House {h} have opened",
        "The seedlings in House {h} were moved to the bench",
        "The {crop1} stems in House {h} are thicker than last week",
        "Fruit colour in House {h} is turning",
    ],
    ("FarmProducts", "B"): [
        "I removed the yellow leaves from the {crop} in House {h}",
        "I harvested the ripe {crop} in House {h}",
        "Tied up the {crop1} stems in House {h}",
        "Applied liquid fertilizer to the {crop} in House {h}",
        "Pinched the side shoots in House {h}",
        "I cut back the old vines in House {h}",
        "Watered the seedlings in House {h} by hand",
    ],
    ("FarmProducts", "C"): [
        "We should consider thinning the {crop1} fruit in House {h}",
        "It may be necessary to change the fertilizer plan for House {h}",
        "Be careful on the wet floor of House {h} when carrying the {crop}",
        "Difficult to decide whether to harvest House {h} this week or next",
    ],
    ("Equipment", "A"): [
        "The circulation fan in House {h} is running",
        "Checked the irrigation pump for House {h}",
        "The side curtain motor of House {h} works again",
        "The heater in House {h} started on schedule",
        "The drip line filter for House {h} is clean",
        "The water tank next to House {h} is full",
        "The vinyl film on House {h} is intact after the storm",
    ],
    ("Equipment", "B"): [
        "I cleaned the drip line filter for House {h}",
        "Replaced the broken valve in House {h}",
        "Washed the sprayer nozzles after use in House {h}",
        "I fixed the hose connection in House {h}",
        "Greased the side curtain motor of House {h}",
        "Swept the floor and washed the carts in House {h}",
        "Restarted the controller for House {h}",
    ],
    ("Equipment", "C"): [
        "We should consider replacing the fan in House {h}",
        "It may be necessary to repair the pump before winter",
        "Difficult to decide whether to buy a new heater for House {h}",
        "Be careful, the valve handle in House {h} is loose",
    ],
    ("SalesMarketing", "A"): [
        "Delivered the {crop1} boxes to the farm stand",
        "The roadside shop sold out of {crop} today",
        "Received an order from the restaurant in town",
        "The cooperative price list arrived",
        "A customer asked about the {crop1} variety at the market",
    ],
    ("SalesMarketing", "B"): [
        "I packed the {crop} for the market",
        "Sent the invoice to the restaurant",
        "Put new labels on the shipping boxes",
        "Called the supermarket buyer about next week",
    ],
    ("SalesMarketing", "C"): [
        "We should consider selling the small {crop} as a bag set",
        "It may be necessary to raise the price at the farm stand",
        "Difficult to decide whether to ship to the city market",
    ],
    ("Environment", "A"): [
        "Strong wind from the west this morning",
        "Heavy rain overnight, the path by House {h} is flooded",
        "First frost on the grass outside",
        "Clear sky and bright sunlight all morning",
    ],
    ("Environment", "B"): [
        "Closed the side windows because of the wind",
        "Opened the vents of House {h} for the heat",
    ],
    ("Environment", "C"): [
        "Difficult to decide whether to vent today, the morning air is still cold",
        "We should consider shade cloth for the hottest weeks",
    ],
    ("Others", "A"): [
        "Lunch break",
        "The visitors from the school arrived",
        "Meeting with the neighbours this afternoon",
        "Started work at the usual time",
    ],
    ("Others", "B"): [
        "Cleaned up the rest area",
        "Moved the office desk",
    ],
    ("Others", "C"): [
        "We should consider a new work schedule for autumn",
    ],
    ("System", "U"): [
        "Test recording from the headset",
        "The app did not upload my last message",
        "Checking whether the voice app works in House {h}",
        "The headset battery is low",
        "Recording again because the app stopped",
        "Voice app test number {n}",
        "The smartphone lost the network in House {h}",
        "The app button did not respond",
    ],
    ("Others", "U"): [
        "Memo about the staff meeting on Saturday",
        "Reminder for the tax documents",
        "Note for the new part-time worker",
        "About the visitor schedule next month",
        "Memo on the road repair near the farm",
    ],
}

QUANT = [
    " and it was about {n} degrees",
    ", roughly {n} kg in total",
    ", {n} plants out of {m}",
    " at {n} percent humidity",
    ", it took {n} minutes",
]
QUAL = [
    ", the plants look slightly weak",
    ", the colour is a little pale",
    ", it looks much better than before",
    ", it looks a little worse than last week",
    ", not as good as expected",
    ", the condition is fairly good",
]


def fill(template, h):
    return template.format(h=h, crop=CROPS[h], crop1=CROP_ADJ[h], n=rng.randint(2, 40), m=rng.randint(41, 90))


def sentence(subject, type_code, h, pest=False):
    if type_code == "Unclassified":
        key = (subject, "U") if (subject, "U") in BANK else (subject, "A")
        body = fill(rng.choice(BANK[key]), h)
        return body + "."
    letter, digit = type_code[0], type_code[1]
    if pest:
        body = fill(rng.choice(PEST_LINES), h)
        if letter == "B":
            body += ", so I removed the affected leaves"
        elif letter == "C":
            body += ", we should consider treating it early"
    else:
        body = fill(rng.choice(BANK[(subject, letter)]), h)
    if digit == "1":
        body += fill(rng.choice(QUANT), h)
    elif digit == "2":
        body += rng.choice(QUAL)
    return body + "."


# --- label assignment --------------------------------------------------------

# Five messages are split into two units. Subjects never differ inside a
# message; types always differ; importance differs in two of them.
SPLITS = [
    ("FarmProducts", [("L3", "A0"), ("L4", "B0")]),
    ("FarmProducts", [("L4", "A2"), ("L5", "B2")]),
    ("Equipment", [("L3", "B0"), ("L3", "C2")]),
    ("Equipment", [("L3", "A0"), ("L3", "C2")]),
    ("FarmProducts", [("L4", "A1"), ("L4", "B1")]),
]

# Fixed single-unit messages carrying specific content.
FIXED = [
    ("FarmProducts", "L5", "A2",
     "White mildew patches have spread over the lower tomato leaves in House 7. "
     "They look worse than on Monday, the upper leaves still seem healthy."),
    ("FarmProducts", "L5", "B2",
     "In House 4 the green peppers along the west aisle wilt every afternoon, so I watered them "
     "twice and added a little fertilizer. They still look weak, tomorrow I want to look at the "
     "drip emitters on that side."),
    ("FarmProducts", "L5", "C2",
     "Please be careful when tying the green pepper stems this month, they snap at the joint "
     "if you pull too hard and the whole branch is wasted."),
    ("Environment", "L4", "C2",
     "The CO2 reading in House 2 went down quickly by mid-morning while the vents stayed shut. "
     "Not sure whether the intake timer is set wrong, we should check it."),
    ("FarmProducts", "L4", "C2",
     "A few tomatoes along the north wall of House 8 froze overnight. A second curtain layer on "
     "that wall might be worth it, we should consider it in autumn."),
]


def take(pool, label):
    assert pool[label] > 0, label
    pool[label] -= 1


def build():
    imp_pool = Counter(IMPORTANCE)
    type_pool = Counter(TYPES)
    subj_pool = Counter(SUBJECTS)
    messages = []

    for subject, units in SPLITS:
        take(subj_pool, subject)
        for imp in sorted({u[0] for u in units}):
            take(imp_pool, imp)
        for tc in sorted({u[1] for u in units}):
            take(type_pool, tc)
        messages.append({"subject": subject, "units": units, "fixed": None, "pest": False})

    for subject, imp, tc, text in FIXED:
        take(subj_pool, subject)
        take(imp_pool, imp)
        take(type_pool, tc)
        messages.append({"subject": subject, "units": [(imp, tc)], "fixed": text,
                         "pest": "mildew" in text})

    # System messages are system problems: no importance, no type.
    singles = []
    for _ in range(subj_pool["System"]):
        take(imp_pool, "Unclassified")
        take(type_pool, "Unclassified")
        singles.append({"subject": "System", "units": [("Unclassified", "Unclassified")]})
    subj_pool["System"] = 0
    # One unreadable Others message also has no importance.
    take(subj_pool, "Others")
    take(imp_pool, "Unclassified")
    take(type_pool, "Unclassified")
    singles.append({"subject": "Others", "units": [("Unclassified", "Unclassified")]})
    assert imp_pool["Unclassified"] == 0

    remaining_subjects = [s for s, n in subj_pool.items() for _ in range(n)]
    rng.shuffle(remaining_subjects)
    # Give the remaining unclassified types to Others and Sales first.
    remaining_subjects.sort(key=lambda s: {"Others": 0, "SalesMarketing": 1}.get(s, 2))
    types = [t for t, n in type_pool.items() for _ in range(n)]
    unclassified = [t for t in types if t == "Unclassified"]
    classified = [t for t in types if t != "Unclassified"]
    rng.shuffle(classified)
    ordered_types = unclassified + classified
    levels = [i for i, n in imp_pool.items() for _ in range(n)]
    rng.shuffle(levels)
    assert len(remaining_subjects) == len(ordered_types) == len(levels)
    for s, t, i in zip(remaining_subjects, ordered_types, levels):
        singles.append({"subject": s, "units": [(i, t)]})

    for m in singles:
        m["fixed"] = None
        m["pest"] = False
    messages.extend(singles)

    # Pest mentions: the fixed mildew message plus FarmProducts messages with a
    # leveled importance and a real type, preferring the important ones.
    pest_needed = PEST_MESSAGES - sum(m["pest"] for m in messages)
    candidates = [m for m in messages
                  if m["subject"] == "FarmProducts" and m["fixed"] is None and len(m["units"]) == 1
                  and m["units"][0][1] != "Unclassified" and m["units"][0][0] != "Unclassified"]
    rank = {"L5": 0, "L4": 1, "L3": 2, "L2": 3, "L1": 4}
    candidates.sort(key=lambda m: rank[m["units"][0][0]])
    for m in candidates[:pest_needed]:
        m["pest"] = True
    return messages


def timestamps(count):
    terms = [(dt.datetime(2017, 6, 1), dt.datetime(2017, 8, 1)),
             (dt.datetime(2017, 9, 1), dt.datetime(2017, 12, 1))]
    days = []
    for a, b in terms:
        d = a
        while d < b:
            days.append(d)
            d += dt.timedelta(days=1)
    picked = set()
    while len(picked) < count:
        day = rng.choice(days)
        # 06:00-18:00 local (UTC+9) is 21:00-09:00 UTC.
        secs = rng.randrange(-3 * 3600, 9 * 3600, 7)
        picked.add(day + dt.timedelta(seconds=secs))
    return sorted(picked)


def location(subject, text):
    # House number mentioned in the text wins; otherwise office messages are unzoned.
    h = None
    for k in range(10, 0, -1):
        if f"House {k}" in text:
            h = k
            break
    if h is None:
        if subject in ("FarmProducts", "Equipment"):
            h = rng.randint(1, 10)
        else:
            return {}
    roll = rng.random()
    if roll < 0.75:
        return {"beacon_id": f"beacon-h{h:02d}"}
    lat0, lon0 = house_rect(h)[0]
    return {"gps": {"lat": round(lat0 + rng.uniform(0.0001, 0.0005), 6),
                    "lon": round(lon0 + rng.uniform(0.0001, 0.0007), 6)}}


def main():
    messages = build()
    rng.shuffle(messages)
    times = timestamps(len(messages))
    lines = []
    for n, (m, at) in enumerate(zip(messages, times), start=1):
        h = rng.randint(1, 10)
        if m["fixed"]:
            text = m["fixed"]
        else:
            parts = [sentence(m["subject"], tc, h, pest=m["pest"] and i == 0)
                     for i, (_, tc) in enumerate(m["units"])]
            text = " Then ".join(p if i == 0 else p[0].lower() + p[1:] for i, p in enumerate(parts)) \
                if len(parts) > 1 else parts[0]
        rec = {
            "id": f"c{n:03d}",
            "author_id": "owner",
            "recorded_at": at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        rec.update(location(m["subject"], text))
        rec["transcript"] = text
        rec["units"] = [{"subject": m["subject"], "importance": i, "type_code": t}
                        for i, t in m["units"]]
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    (HERE / "annotated_corpus.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    registry = {
        "users": [
            {"id": "owner", "display_name": "Farm owner", "role": "Owner"},
            {"id": "worker1", "display_name": "Worker 1", "role": "Worker"},
            {"id": "worker2", "display_name": "Worker 2", "role": "Worker"},
            {"id": "advisor", "display_name": "Extension advisor", "role": "Advisor"},
        ],
        "zones": [
            {"id": h, "name": f"House {k}", "geofence": house_rect(k),
             "beacon_ids": [f"beacon-h{k:02d}"]}
            for k, h in enumerate(HOUSES, start=1)
        ],
        "streams": [
            {"id": f"h{k:02d}-{kind.lower()}", "kind": kind, "zone_id": f"House{k}"}
            for k in (2, 8) for kind in ("Temperature", "CO2")
        ],
        "subscriptions": [
            {"id": "sub-worker1-peppers", "user_id": "worker1",
             "zone_filter": [f"House{k}" for k in range(1, 7)]},
            {"id": "sub-worker2-important", "user_id": "worker2", "min_importance": "L4"},
            {"id": "sub-advisor-pests", "user_id": "advisor", "subject_filter": ["FarmProducts"],
             "keyword_filter": ["mildew", "aphid", "aphids", "thrips", "armyworm", "whiteflies",
                                "leaf spot", "spider mite"]},
        ],
    }
    (HERE / "registry.json").write_text(json.dumps(registry, indent=2) + "\n", encoding="utf-8")

    # Self-check of the label distributions under distinct-label-per-message counting.
    subj, imp, typ = Counter(), Counter(), Counter()
    for m in messages:
        subj.update({m["subject"]})
        imp.update({u[0] for u in m["units"]})
        typ.update({u[1] for u in m["units"]})
    assert dict(subj) == SUBJECTS, subj
    assert dict(imp) == IMPORTANCE, imp
    assert dict(typ) == TYPES, typ
    assert sum(len(m["units"]) for m in messages) == 205
    assert sum(m["pest"] for m in messages) == PEST_MESSAGES


if __name__ == "__main__":
    main()
