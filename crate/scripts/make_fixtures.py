"""Regenerates the files under fixtures/. Output is deterministic."""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures"
rng = random.Random(20240611)

SMALL = [
    ("Tesla", "founded_by", "Elon_Musk"),
    ("Tesla", "headquartered_in", "Austin"),
    ("Austin", "located_in", "Texas"),
    ("Texas", "part_of", "United_States"),
    ("SpaceX", "founded_by", "Elon_Musk"),
    ("SpaceX", "headquartered_in", "Hawthorne"),
    ("Hawthorne", "located_in", "California"),
    ("California", "part_of", "United_States"),
    ("Elon_Musk", "born_in", "Pretoria"),
    ("Pretoria", "located_in", "South_Africa"),
    ("Elon_Musk", "studied_at", "University_of_Pennsylvania"),
    ("University_of_Pennsylvania", "located_in", "Philadelphia"),
    ("Tesla", "produces", "Model_3"),
    ("Tesla", "competitor_of", "BYD"),
    ("BYD", "headquartered_in", "Shenzhen"),
    ("Shenzhen", "located_in", "China"),
    ("Model_3", "category", "Electric_Car"),
    ("BYD", "produces", "Seal"),
    ("Seal", "category", "Electric_Car"),
    ("SpaceX", "produces", "Falcon_9"),
]

PREFIX = ["Nimbus", "Orion", "Helix", "Cobalt", "Aurora", "Vertex", "Quanta", "Lumen", "Zephyr", "Ember",
          "Summit", "Atlas", "Nova", "Cascade", "Beacon", "Harbor", "Solace", "Tundra", "Meridian", "Pioneer"]
SECTOR = ["Robotics", "Energy", "Foods", "Labs", "Motors", "Systems", "Analytics", "Pharma", "Aerospace", "Textiles"]
FIRST = ["Ada", "Bruno", "Chiara", "Dmitri", "Elena", "Farid", "Grace", "Hiro", "Ines", "Jonas",
         "Kemi", "Luca", "Maya", "Nikhil", "Olga", "Pedro", "Quinn", "Rosa", "Sven", "Tariq"]
LAST = ["Okafor", "Lindqvist", "Moreau", "Tanaka", "Alvarez", "Novak", "Haddad", "Kowalski", "Osei", "Brennan"]
CITIES = {
    "Lisbon": "Portugal", "Porto": "Portugal", "Lyon": "France", "Marseille": "France", "Osaka": "Japan",
    "Sapporo": "Japan", "Lagos": "Nigeria", "Accra": "Ghana", "Krakow": "Poland", "Gdansk": "Poland",
    "Austin": "United_States", "Denver": "United_States", "Toronto": "Canada", "Calgary": "Canada",
    "Gothenburg": "Sweden", "Aarhus": "Denmark",
}
CAPITALS = {"Portugal": "Lisbon", "Poland": "Warsaw", "Japan": "Tokyo", "France": "Paris", "Ghana": "Accra",
            "Nigeria": "Abuja", "United_States": "Washington", "Canada": "Ottawa", "Sweden": "Stockholm",
            "Denmark": "Copenhagen"}
UNIS = ["Lisbon_Institute_of_Technology", "Osaka_Polytechnic", "Lyon_School_of_Engineering",
        "Krakow_University", "Toronto_College_of_Science", "Accra_Technical_University"]
PRODUCT = ["Falcon", "Drift", "Pulse", "Spark", "Orbit", "Echo", "Glide", "Forge"]


def world():
    triples = set()
    companies = rng.sample([f"{p}_{s}" for p in PREFIX for s in SECTOR], 60)
    people = rng.sample([f"{f}_{l}" for f in FIRST for l in LAST], 90)
    cities = list(CITIES)
    for city, country in CITIES.items():
        triples.add((city, "located_in", country))
    for country, capital in CAPITALS.items():
        triples.add((capital, "capital_of", country))
    for u in UNIS:
        triples.add((u, "located_in", rng.choice(cities)))
    for i, c in enumerate(companies):
        founders = rng.sample(people, rng.choice([1, 1, 2]))
        for f in founders:
            triples.add((c, "founded_by", f))
        triples.add((c, "headquartered_in", rng.choice(cities)))
        triples.add((rng.choice(people), "ceo_of", c))
        sector = c.split("_")[1]
        for _ in range(rng.choice([1, 2])):
            triples.add((c, "produces", f"{rng.choice(PRODUCT)}_{sector}_{rng.randint(1, 9)}"))
        if i > 5 and rng.random() < 0.35:
            triples.add((c, "subsidiary_of", rng.choice(companies[:i])))
        if rng.random() < 0.5:
            other = rng.choice([o for o in companies if o.split("_")[1] == sector and o != c] or companies)
            if other != c:
                triples.add((c, "competitor_of", other))
        if rng.random() < 0.4:
            triples.add((rng.choice(companies), "invested_in", c))
    for p in people:
        triples.add((p, "born_in", rng.choice(cities)))
        if rng.random() < 0.7:
            triples.add((p, "studied_at", rng.choice(UNIS)))
        if rng.random() < 0.5:
            triples.add((p, "works_for", rng.choice(companies)))
    return sorted(triples), companies, people


def main():
    OUT.mkdir(exist_ok=True)
    (OUT / "kg_small.tsv").write_text("".join(f"{s}\t{r}\t{o}\n" for s, r, o in SMALL))
    (OUT / "kg_small.nt").write_text("".join(
        f"<http://example.org/{s}> <http://example.org/{r}> <http://example.org/{o}> .\n" for s, r, o in SMALL))

    triples, companies, people = world()
    assert len(triples) >= 500, len(triples)
    triples = sorted(rng.sample(triples, 500))
    (OUT / "kg_500.tsv").write_text("".join(f"{s}\t{r}\t{o}\n" for s, r, o in triples))

    in_graph = {x for s, _, o in triples for x in (s, o)}
    comps = [c for c in companies if c in in_graph]
    ppl = [p for p in people if p in in_graph]
    queries = [
        {"id": "q01", "question": f"Who founded {comps[0].replace('_', ' ')} and where is it based?", "seeds": [comps[0]]},
        {"id": "q02", "question": f"What does {comps[1].replace('_', ' ')} produce?", "seeds": [comps[1]]},
        {"id": "q03", "question": f"Which companies compete with {comps[2].replace('_', ' ')}?", "seeds": [comps[2]]},
        {"id": "q04", "question": f"Where was {ppl[0].replace('_', ' ')} born and where did they study?", "seeds": [ppl[0]]},
        {"id": "q05", "question": f"What is the career of {ppl[1].replace('_', ' ')}?", "seeds": [ppl[1]]},
        {"id": "q06", "question": "Which companies are headquartered in Lisbon?", "seeds": ["Lisbon"]},
        {"id": "q07", "question": f"How are {comps[3].replace('_', ' ')} and {comps[4].replace('_', ' ')} related?",
         "seeds": [comps[3], comps[4]]},
        {"id": "q08", "question": "Which firms invest in energy companies?"},
    ]
    (OUT / "queries.jsonl").write_text("".join(json.dumps(q) + "\n" for q in queries))
    small_queries = [
        {"id": "s1", "question": "Who founded Tesla?", "seeds": ["Tesla"]},
        {"id": "s2", "question": "Where is SpaceX headquartered?", "seeds": ["SpaceX"]},
        {"id": "s3", "question": "Where was Elon Musk born?", "seeds": ["Elon_Musk"]},
    ]
    (OUT / "queries_small.jsonl").write_text("".join(json.dumps(q) + "\n" for q in small_queries))


if __name__ == "__main__":
    main()
