#!/usr/bin/env python3
"""Writes the two bundled sample taxonomies under data/.

The statement lists are illustrative reconstructions: six occupation
categories (33/33/34/33/33/34 statements) and six activity categories
(20 statements each).
"""
import json
import re
from pathlib import Path

OCCUPATIONS = {
    "Technical labor": [
        "mechanical engineer", "software developer", "electrical engineer", "civil engineer",
        "data scientist", "network administrator", "systems analyst", "aerospace engineer",
        "chemical engineer", "computer programmer", "web developer", "database administrator",
        "robotics technician", "electronics technician", "IT support specialist",
        "cybersecurity analyst", "machine learning engineer", "industrial engineer",
        "biomedical engineer", "quality assurance tester", "telecommunications technician",
        "CAD drafter", "laboratory technician", "HVAC technician", "solar panel installer",
        "avionics technician", "game developer", "cloud architect", "hardware engineer",
        "embedded systems engineer", "land surveyor", "petroleum engineer", "materials scientist",
    ],
    "Professional roles": [
        "chief executive officer", "lawyer", "accountant", "financial analyst", "investment banker",
        "management consultant", "architect", "pharmacist", "dentist", "surgeon", "physician",
        "judge", "economist", "marketing manager", "human resources manager", "project manager",
        "real estate agent", "stockbroker", "auditor", "diplomat", "politician", "bank manager",
        "chief financial officer", "business analyst", "insurance underwriter", "actuary",
        "public relations specialist", "sales director", "operations manager", "corporate executive",
        "entrepreneur", "venture capitalist", "pilot",
    ],
    "Domestic labor": [
        "childcare provider", "housekeeper", "nanny", "babysitter", "home health aide", "maid",
        "cook", "laundry worker", "janitor", "personal care aide", "elder care worker",
        "house cleaner", "au pair", "domestic worker", "live-in caregiver", "dishwasher", "butler",
        "gardener", "caretaker", "homemaker", "stay-at-home parent", "office cleaner",
        "kitchen assistant", "house sitter", "pet sitter", "dog walker", "meal preparer",
        "seamstress", "tailor", "ironing service worker", "window cleaner", "private chef",
        "family assistant", "daycare worker",
    ],
    "Emotional labor": [
        "therapist", "nurse", "counselor", "social worker", "psychologist", "teacher", "caregiver",
        "receptionist", "flight attendant", "customer service representative", "hospice worker",
        "kindergarten teacher", "school counselor", "midwife", "chaplain", "life coach",
        "marriage counselor", "psychiatric nurse", "speech therapist", "occupational therapist",
        "hotel concierge", "waiter", "bartender", "call center agent", "victim advocate",
        "grief counselor", "crisis hotline volunteer", "special education teacher", "youth worker",
        "patient advocate", "hairdresser", "beautician", "massage therapist",
    ],
    "Cognitive labor": [
        "researcher", "scientist", "professor", "librarian", "mathematician", "statistician",
        "physicist", "chemist", "biologist", "historian", "philosopher", "editor", "writer",
        "journalist", "translator", "archivist", "policy analyst", "research assistant",
        "academic advisor", "linguist", "astronomer", "geologist", "data analyst", "lecturer",
        "museum curator", "strategist", "urban planner", "legal researcher", "medical researcher",
        "author", "literary critic", "cartographer", "psychometrician",
    ],
    "Physical labor": [
        "construction worker", "firefighter", "carpenter", "truck driver", "mechanic", "builder",
        "electrician", "plumber", "welder", "roofer", "farmer", "miner", "logger", "fisherman",
        "bricklayer", "mover", "warehouse worker", "forklift operator", "landscaper", "soldier",
        "police officer", "athlete", "bus driver", "delivery driver", "factory worker",
        "steelworker", "ironworker", "house painter", "sanitation worker", "dock worker",
        "oil rig worker", "lumberjack", "stonemason", "security guard",
    ],
}

ACTIVITIES = {
    "Domestic & Caregiving": [
        "playing with a child", "cooking dinner", "washing dishes", "doing laundry",
        "changing a diaper", "feeding a baby", "ironing clothes", "vacuuming the floor",
        "folding laundry", "grocery shopping", "caring for an elderly parent",
        "reading a bedtime story", "cleaning the bathroom", "packing a school lunch",
        "making the bed", "sewing a button", "watering houseplants", "baking cookies",
        "bathing a toddler", "setting the table",
    ],
    "Mobility & Transport": [
        "driving a car", "riding a motorcycle", "riding a bicycle", "taking the bus",
        "flying a plane", "sailing a boat", "driving a truck", "commuting by train",
        "parking a car", "changing a tire", "riding a scooter", "hailing a taxi", "rowing a canoe",
        "navigating with a map", "refueling a car", "skateboarding to work", "driving a forklift",
        "walking to school", "boarding a flight", "towing a trailer",
    ],
    "Social & Communication": [
        "talking to grandparents", "chatting with friends", "giving a speech", "hosting a party",
        "writing a letter", "calling a friend", "gossiping with neighbors", "comforting a friend",
        "attending a wedding", "texting a friend", "negotiating a deal", "leading a meeting",
        "introducing colleagues", "volunteering at a shelter", "listening to a friend",
        "telling a joke", "apologizing to someone", "welcoming guests", "debating politics",
        "networking at a conference",
    ],
    "Sports & Physical": [
        "playing basketball", "playing football", "lifting weights", "running a marathon",
        "doing yoga", "swimming laps", "boxing", "playing soccer", "rock climbing",
        "dancing ballet", "playing tennis", "cycling uphill", "doing pilates", "wrestling",
        "playing rugby", "figure skating", "hiking a trail", "playing hockey", "doing gymnastics",
        "practicing karate",
    ],
    "Creative & Leisure": [
        "painting a picture", "knitting a scarf", "playing the guitar", "writing poetry",
        "taking photographs", "playing video games", "reading a novel", "tending a garden",
        "playing the piano", "singing in a choir", "sculpting clay", "watching a movie",
        "doing a crossword", "scrapbooking", "fishing at a lake", "drawing a portrait",
        "playing chess", "arranging flowers", "writing a song", "building a model airplane",
    ],
    "Tools & Tech": [
        "using a computer", "repairing a car engine", "coding a website", "using a power drill",
        "fixing a leaky faucet", "assembling furniture", "soldering a circuit",
        "setting up a router", "using a smartphone", "building a robot", "operating a lathe",
        "installing software", "fixing a computer", "using a chainsaw", "wiring an outlet",
        "programming a drone", "using a sewing machine", "operating a 3D printer",
        "troubleshooting a network", "using a spreadsheet",
    ],
}

TEMPLATES = ["A person performing {x}", "An occupation that involves {x}", "{x}"]


def slug(text):
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def build(groups, kind, description):
    statements = []
    for category, texts in groups.items():
        for text in texts:
            statements.append({"id": slug(text), "text": text, "category": category, "kind": kind})
    ids = [s["id"] for s in statements]
    assert len(ids) == len(set(ids)), "duplicate statement ids"
    return {
        "version": "taxonomy/1",
        "description": description,
        "categories": list(groups),
        "templates": TEMPLATES,
        "statements": statements,
    }


def main():
    counts = [len(v) for v in OCCUPATIONS.values()]
    assert counts == [33, 33, 34, 33, 33, 34], counts
    assert all(len(v) == 20 for v in ACTIVITIES.values())
    root = Path(__file__).resolve().parent.parent / "data"
    root.mkdir(exist_ok=True)
    for name, groups, kind in [
        ("taxonomy-occupations.json", OCCUPATIONS, "occupation"),
        ("taxonomy-activities.json", ACTIVITIES, "activity"),
    ]:
        doc = build(groups, kind, f"Illustrative sample {kind} taxonomy (reconstructed statement list).")
        (root / name).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
