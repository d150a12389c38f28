import json

import numpy as np
import pytest

from conftest import METAQA_KB, SAMPLE_EDGES
from core.exceptions import (AmbiguousEvidenceError, DataValidationError, EmptyInputError,
                             MalformedInputError, MissingAnnotationError, MissingEvidenceError,
                             MissingNameError, UnknownPairError)
from core.kg import (branching_share, build_graph, build_hopping_examples, build_parsing_examples,
                     extract_question_subgraph, generate_walks, graph_stats, load_triples, metaqa_evidence,
                     out_degree_histogram, parse_pair_mapping, path_relations, random_walk,
                     serialize_sequence, shortest_path_matrix, split_questions, validate_walk)
from core.models import MetaQARecord, QuestionRecord, Triple, Walk
from data import PAIR_MAPPING_PATH, read_lines

FIG_WALK = ["Cloudburst", "composer", "Eric Whitacre", "country of citizenship", "American"]


def metaqa_graph(extra=()):
    batch = load_triples(list(METAQA_KB) + list(extra), fmt="pipe")
    return build_graph(batch.triples, add_inverse_relations=True)


def packaged_mapping():
    return parse_pair_mapping(read_lines(PAIR_MAPPING_PATH), str(PAIR_MAPPING_PATH))


def random_graph(n, edges, seed):
    rng = np.random.default_rng(seed)
    triples = []
    for _ in range(edges):
        h, t = rng.integers(n, size=2)
        triples.append(Triple(head=f"e{h}", relation=f"r{int(rng.integers(3))}", tail=f"e{t}"))
    return build_graph(triples)


def test_load_triples_in_every_format():
    tsv = [f"{h}\t{r}\t{t}\n" for h, r, t in SAMPLE_EDGES]
    pipe = [f"{h}|{r}|{t}\n" for h, r, t in SAMPLE_EDGES]
    jsonl = [json.dumps({"h": h, "r": r, "t": t}) + "\n" for h, r, t in SAMPLE_EDGES]
    expected = [Triple(head=h, relation=r, tail=t) for h, r, t in SAMPLE_EDGES]
    for lines, fmt in ((tsv, "tsv"), (pipe, "pipe"), (jsonl, "jsonl")):
        assert load_triples(lines, fmt).triples == expected
    long_keys = [json.dumps({"head": "a", "relation": "r", "tail": "b"})]
    assert load_triples(long_keys, "jsonl").triples == [Triple(head="a", relation="r", tail="b")]


def test_duplicates_are_dropped_and_counted():
    batch = load_triples(["a\tr\tb", "a\tr\tb", "", "a\tr\tc"], "tsv")
    assert [t.tail for t in batch.triples] == ["b", "c"]
    assert batch.duplicate_count == 1


def test_strict_and_lenient_loading():
    lines = ["a\tr\tb", "broken line", "c\tr\t"]
    with pytest.raises(MalformedInputError, match="kb.tsv:2:"):
        load_triples(lines, "tsv", strict=True, source="kb.tsv")
    batch = load_triples(lines, "tsv", strict=False, source="kb.tsv")
    assert len(batch.triples) == 1
    assert len(batch.skipped) == 2
    assert batch.skipped[1].startswith("kb.tsv:3:")
    with pytest.raises(DataValidationError):
        load_triples(lines, "csv")


def test_sample_graph_stats(sample_graph):
    stats = graph_stats(sample_graph)
    assert (stats.nodes, stats.edges, stats.relations) == (6, 5, 5)
    assert sample_graph.out_degree("Cloudburst") == 2
    assert sample_graph.tails("Francis Searle", "date of birth") == ["14 March 1909"]
    with pytest.raises(MissingNameError):
        sample_graph.out_degree("Nobody")


def test_self_loop_and_inverse_relations():
    graph = build_graph([Triple(head="a", relation="r", tail="a")])
    assert graph.num_entities == 1 and graph.num_edges == 1
    assert graph.out_degree("a") == 1
    both = build_graph([Triple(head="a", relation="r", tail="b")], add_inverse_relations=True)
    assert both.has_edge("b", "r_reversed", "a")
    assert both.num_relations == 2


def test_question_subgraph(sample_graph):
    questions = [
        QuestionRecord(id=1, source="Cloudburst", relations=["composer", "country of citizenship"],
                       answer="American"),
        QuestionRecord(id=2, evidence=["Cloudburst", "director", "Francis Searle"]),
        QuestionRecord(id=3, source="Cloudburst", relations=["composer"], answer="Francis Searle"),
        QuestionRecord(id=4, question="unannotated"),
    ]
    result = extract_question_subgraph(sample_graph, questions)
    stats = graph_stats(result.graph)
    assert (stats.nodes, stats.edges) == (4, 3)
    assert set(result.failures) == {"3", "4"}


def test_complete_random_walk_follows_edges(sample_graph):
    walk = random_walk(sample_graph, "Cloudburst", 2, np.random.default_rng(0))
    assert not walk.short and walk.hops == 2
    validate_walk(sample_graph, walk)


def test_dead_end_walk_is_short(sample_graph):
    walk = random_walk(sample_graph, "Eric Whitacre", 2, np.random.default_rng(0))
    assert walk.short
    assert walk.sequence == ["Eric Whitacre", "country of citizenship", "American"]
    leaf = random_walk(sample_graph, "American", 2, np.random.default_rng(0))
    assert leaf.sequence == ["American"] and leaf.short
    with pytest.raises(DataValidationError):
        random_walk(sample_graph, "Cloudburst", 0, np.random.default_rng(0))


def test_edges_at_exposes_index_level_edges(sample_graph):
    index = sample_graph.entity_index("Cloudburst")
    named = {(sample_graph.relations[r], sample_graph.entities[t]) for r, t in sample_graph.edges_at(index)}
    assert named == {("composer", "Eric Whitacre"), ("director", "Francis Searle")}
    assert sample_graph.edges_at(sample_graph.entity_index("American")) == ()


def test_branches_are_chosen_uniformly(sample_graph):
    walks = generate_walks(sample_graph, starts=["Cloudburst"], hops=1, walks_per_start=10_000, seed=0)
    share = sum(w.relations[0] == "composer" for w in walks) / len(walks)
    assert abs(share - 0.5) <= 0.02


def test_walk_generation_is_seeded():
    graph = random_graph(50, 200, seed=1)
    a = generate_walks(graph, hops=3, walks_per_start=2, seed=7)
    b = generate_walks(graph, hops=3, walks_per_start=2, seed=7, workers=4)
    c = generate_walks(graph, hops=3, walks_per_start=2, seed=8)
    assert a == b
    assert a != c
    assert len(a) == 2 * graph.num_entities


def test_validate_walk(sample_graph):
    assert validate_walk(sample_graph, FIG_WALK).hops == 2
    with pytest.raises(DataValidationError):
        validate_walk(sample_graph, ["Cloudburst", "composer", "American"])
    with pytest.raises(DataValidationError):
        validate_walk(sample_graph, ["Cloudburst", "composer"])
    with pytest.raises(DataValidationError):
        validate_walk(sample_graph, ["Nobody"])


def test_hopping_example_for_sample_walk(sample_graph):
    batch = build_hopping_examples(sample_graph, [Walk(sequence=FIG_WALK)])
    assert len(batch.examples) == 1
    example = batch.examples[0]
    assert example.input == ["Cloudburst", "composer", "country of citizenship"]
    assert example.target == FIG_WALK
    assert serialize_sequence(example.target) == \
        "Cloudburst; composer; Eric Whitacre; country of citizenship; American"


def test_short_walks_are_skipped_unless_requested(sample_graph):
    short = Walk(sequence=["Eric Whitacre", "country of citizenship", "American"], short=True)
    assert build_hopping_examples(sample_graph, [short]).short_skipped == 1
    assert len(build_hopping_examples(sample_graph, [short], include_short=True).examples) == 1


def test_heldout_walks_never_become_examples():
    graph = random_graph(300, 1500, seed=2)
    walks = [w for w in generate_walks(graph, hops=2, walks_per_start=40, seed=3) if not w.short][:10_000]
    distinct = list(dict.fromkeys(tuple(w.sequence) for w in walks))
    heldout = [Walk(sequence=list(seq)) for seq in distinct[:100]]
    batch = build_hopping_examples(graph, walks, heldout)
    held = {tuple(w.sequence) for w in heldout}
    assert not any(tuple(e.target) in held for e in batch.examples)
    assert batch.excluded == sum(tuple(w.sequence) in held for w in walks)
    assert len(batch.examples) + batch.excluded == len(walks)


def test_subpath_and_edge_exclusion(sample_graph):
    one_hop = Walk(sequence=FIG_WALK[:3])
    two_hop = Walk(sequence=FIG_WALK)
    other = Walk(sequence=["Cloudburst", "director", "Francis Searle", "date of birth", "14 March 1909"])
    assert build_hopping_examples(sample_graph, [two_hop], [one_hop], mode="exact").excluded == 0
    assert build_hopping_examples(sample_graph, [two_hop], [one_hop], mode="subpath").excluded == 1
    assert build_hopping_examples(sample_graph, [one_hop], [two_hop], mode="subpath").excluded == 1
    edge_heldout = [Walk(sequence=["Eric Whitacre", "country of citizenship", "American"])]
    batch = build_hopping_examples(sample_graph, [two_hop, other], edge_heldout, mode="edge")
    assert batch.excluded == 1
    assert batch.examples[0].target == other.sequence
    with pytest.raises(DataValidationError):
        build_hopping_examples(sample_graph, [two_hop], mode="fuzzy")


def test_parsing_examples():
    question = QuestionRecord(id="q1", question="who composed [Cloudburst] and where from?",
                              source="Cloudburst", relations=["composer", "country of citizenship"])
    [example] = build_parsing_examples([question])
    assert example.target == ["Cloudburst", "composer", "country of citizenship"]
    with pytest.raises(MissingAnnotationError):
        build_parsing_examples([QuestionRecord(id="q2", question="?", relations=["composer"])])
    with pytest.raises(MissingAnnotationError):
        build_parsing_examples([question], hops=3)


def test_out_degree_histogram(sample_graph):
    hist = out_degree_histogram(sample_graph)
    assert list(hist) == [0, 1, 2]
    assert hist[2] == pytest.approx(2 / 6)
    assert hist[1] == pytest.approx(1 / 6)
    assert hist[0] == pytest.approx(3 / 6)
    assert sum(hist.values()) == pytest.approx(1.0)
    assert branching_share(hist) == pytest.approx(1 / 3)
    loop = build_graph([Triple(head="a", relation="r", tail="a")])
    assert out_degree_histogram(loop) == {1: 1.0}
    with pytest.raises(EmptyInputError):
        out_degree_histogram(build_graph([]))


def test_packaged_pair_mapping_matches_relation_table(table7):
    assert packaged_mapping() == table7


def test_pair_mapping_errors():
    with pytest.raises(EmptyInputError):
        parse_pair_mapping(["# only a header\n"])
    with pytest.raises(MalformedInputError):
        parse_pair_mapping(["movie\tlanguage\n"], "map.tsv")


def test_metaqa_evidence_for_two_hop_question():
    record = MetaQARecord(id=1, question="what language is the movie directed by [Joel Zwick] in",
                          path="director_to_movie_to_language", answer="Greek")
    assert record.source == "Joel Zwick"
    question = metaqa_evidence(record, metaqa_graph(), packaged_mapping())
    assert question.relations == ["directed_by_reversed", "in_language"]
    assert question.evidence == ["Joel Zwick", "directed_by_reversed", "My Big Fat Greek Wedding",
                                 "in_language", "Greek"]


def test_metaqa_evidence_failures():
    mapping = packaged_mapping()
    graph = metaqa_graph()
    with pytest.raises(UnknownPairError):
        path_relations("director_to_language", mapping, hops=1)
    with pytest.raises(DataValidationError):
        path_relations("movie_to_language", mapping, hops=2)
    missing = MetaQARecord(id=2, question="[Joel Zwick]", path="director_to_movie_to_language", answer="French")
    with pytest.raises(MissingEvidenceError):
        metaqa_evidence(missing, graph, mapping)
    with pytest.raises(MissingAnnotationError):
        MetaQARecord(id=3, question="no brackets here", path="movie_to_year", answer="2004")


def test_metaqa_evidence_reports_every_candidate():
    graph = metaqa_graph(["Another Movie|directed_by|Joel Zwick", "Another Movie|in_language|Greek"])
    record = MetaQARecord(id=4, question="[Joel Zwick]", path="director_to_movie_to_language", answer="Greek")
    with pytest.raises(AmbiguousEvidenceError) as info:
        metaqa_evidence(record, graph, packaged_mapping())
    assert sorted(chain[2] for chain in info.value.candidates) == ["Another Movie", "My Big Fat Greek Wedding"]


def test_shortest_path_matrix(sample_graph):
    d = shortest_path_matrix(sample_graph, ["American", "14 March 1909", "Cloudburst"])
    assert d.d[0, 1] == 4
    assert d.d[0, 2] == 2
    assert d.connected
    assert shortest_path_matrix(sample_graph, ["American"]).d.tolist() == [[0.0]]
    with pytest.raises(EmptyInputError):
        shortest_path_matrix(sample_graph, [])
    with pytest.raises(MissingNameError):
        shortest_path_matrix(sample_graph, ["Nobody"])


def test_shortest_path_matrix_marks_other_components():
    graph = build_graph([Triple(head="a", relation="r", tail="b"), Triple(head="c", relation="r", tail="d")])
    d = shortest_path_matrix(graph, ["a", "b", "c"])
    assert not d.connected
    assert np.isinf(d.d[0, 2]) and d.d[0, 1] == 1


def test_split_questions():
    records = [QuestionRecord(id=i) for i in range(10)]
    train, dev, test = split_questions(records, seed=5)
    assert (len(train), len(dev), len(test)) == (8, 1, 1)
    assert sorted(r.id for r in train + dev + test) == sorted(r.id for r in records)
    assert split_questions(records, seed=5) == (train, dev, test)
    with pytest.raises(DataValidationError):
        split_questions(records, (0.5, -0.1, 0.6))
