"""Tests for BIO conversion, span enumeration, negative sampling and noisy-set construction."""

import pytest

from lib.ner.corpus import (
    Dataset,
    EntityDictionary,
    GoldSpan,
    LabelSet,
    Provenance,
    Sentence,
    bio_from_spans,
    build_entity_dictionary,
    corrupt_by_rate,
    dataset_statistics,
    distant_supervise,
    enumerate_spans,
    format_bio,
    format_entity_dictionary,
    format_tokens,
    load_entity_dictionary,
    merge_datasets,
    negative_sample,
    parse_bio,
    parse_bio_triples,
    parse_tokens,
    spans_from_bio,
)
from lib.ner.validation import BioFormatError, ContractViolation, ValidationError


def _sentence(text, sentence_id=0):
    return Sentence(sentence_id, tuple(text.split(" ")))


class TestParseBio:

    def test_single_token_span(self):
        dataset = parse_bio("EU\tB-ORG\nrejects\tO\n")
        assert len(dataset) == 1
        assert dataset.annotations[0] == (GoldSpan(0, 0, "ORG"),)
        assert dataset.label_set.labels == ("ORG", "O")

    def test_continuation(self):
        dataset = parse_bio("John\tB-PER\nSmith\tI-PER\nsaid\tO\n")
        assert dataset.annotations[0] == (GoldSpan(0, 1, "PER"),)

    def test_orphan_continuation_starts_span(self):
        dataset = parse_bio("x\tI-PER\ny\tI-PER\n")
        assert dataset.annotations[0] == (GoldSpan(0, 1, "PER"),)
        assert dataset.bio_report.orphan_continuations == 1
        assert dataset.bio_report.orphan_positions == [(0, 0)]

    def test_sentences_and_ids(self, tiny_dataset):
        assert [s.id for s in tiny_dataset.sentences] == [0, 1, 2]
        assert tiny_dataset.sentences[1].tokens == ("Peter", "Blackburn")
        assert tiny_dataset.num_spans == 4

    def test_first_id(self):
        dataset = parse_bio("a\tO\n\nb\tO\n", first_id=100)
        assert [s.id for s in dataset.sentences] == [100, 101]

    def test_extra_blank_lines_and_missing_final_newline(self):
        dataset = parse_bio("\n\na\tB-X\n\n\n\nb\tO")
        assert len(dataset) == 2

    def test_wrong_field_count_reports_line(self):
        with pytest.raises(BioFormatError) as exc:
            parse_bio("EU\tB-ORG\nrejects\n")
        assert exc.value.line_no == 2

    def test_invalid_tag_reports_line(self):
        with pytest.raises(BioFormatError) as exc:
            parse_bio("a\tO\nb\tX-PER\n")
        assert exc.value.line_no == 2

    def test_explicit_label_set(self):
        labels = LabelSet.from_entity_types(["LOC", "ORG", "PER"])
        dataset = parse_bio("EU\tB-ORG\n", label_set=labels)
        assert dataset.label_set is labels

    def test_unknown_label_under_explicit_label_set(self):
        with pytest.raises(ContractViolation):
            parse_bio("EU\tB-ORG\n", label_set=LabelSet.from_entity_types(["PER"]))

    def test_triples(self):
        gold, pred = parse_bio_triples("EU\tB-ORG\tB-ORG\nrejects\tO\tB-PER\n")
        assert gold.annotations[0] == (GoldSpan(0, 0, "ORG"),)
        assert pred.annotations[0] == (GoldSpan(0, 0, "ORG"), GoldSpan(1, 1, "PER"))
        assert gold.label_set == pred.label_set

    def test_format_bio_inverts_parse(self, tiny_dataset):
        again = parse_bio(format_bio(tiny_dataset))
        assert again.sentences == tiny_dataset.sentences
        assert again.annotations == tiny_dataset.annotations

    def test_tokens_round_trip(self, tiny_dataset):
        sentences = parse_tokens(format_tokens(tiny_dataset.sentences))
        assert sentences == list(tiny_dataset.sentences)

    def test_tokens_ignore_tag_column(self):
        assert parse_tokens("a\tB-X\nb\tO\n") == [Sentence(0, ("a", "b"))]


class TestSpansAndTags:

    def test_no_entities(self):
        assert spans_from_bio(["O", "O", "O"]) == []

    def test_two_spans(self):
        assert spans_from_bio(["B-A", "I-A", "O", "B-B"]) == [GoldSpan(0, 1, "A"), GoldSpan(3, 3, "B")]

    def test_adjacent_same_type(self):
        assert spans_from_bio(["B-A", "B-A"]) == [GoldSpan(0, 0, "A"), GoldSpan(1, 1, "A")]

    def test_type_change_inside_run(self):
        assert spans_from_bio(["B-A", "I-B"]) == [GoldSpan(0, 0, "A"), GoldSpan(1, 1, "B")]

    def test_bio_from_spans(self):
        assert bio_from_spans(3, []) == ["O", "O", "O"]
        assert bio_from_spans(4, [GoldSpan(0, 1, "A"), GoldSpan(3, 3, "B")]) == ["B-A", "I-A", "O", "B-B"]

    def test_overlap_rejected(self):
        with pytest.raises(ContractViolation):
            bio_from_spans(4, [GoldSpan(0, 2, "A"), GoldSpan(2, 3, "B")])

    def test_out_of_range_rejected(self):
        with pytest.raises(ContractViolation):
            bio_from_spans(2, [GoldSpan(1, 2, "A")])

    def test_round_trip_random(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            spans, k = [], 0
            while k < n:
                if rng.random() < 0.4:
                    length = int(rng.integers(1, n - k + 1))
                    spans.append(GoldSpan(k, k + length - 1, str(rng.choice(["A", "B", "C"]))))
                    k += length
                else:
                    k += 1
            tags = bio_from_spans(n, spans)
            assert len(tags) == n
            assert spans_from_bio(tags) == spans


class TestEnumerateSpans:

    def test_single_token(self):
        assert enumerate_spans(_sentence("a"), 10) == [(0, 0)]

    def test_max_len(self):
        assert enumerate_spans(_sentence("a b c"), 2) == [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)]

    def test_count(self):
        assert len(enumerate_spans(10, 10)) == 55

    def test_max_len_must_be_positive(self):
        with pytest.raises(ContractViolation):
            enumerate_spans(3, 0)


class TestNegativeSample:

    def test_ceil_count(self):
        sentence = _sentence("a b c d e f g h i j")
        negatives = negative_sample(sentence, [], 0.35, 10, rng_seed=1)
        assert len(negatives) == 4
        assert all(n.label == "O" for n in negatives)
        bounds = [(n.start, n.end) for n in negatives]
        assert bounds == sorted(bounds)

    def test_float_noise_does_not_round_up(self):
        sentence = Sentence(0, tuple("t%d" % k for k in range(20)))
        assert len(negative_sample(sentence, [], 0.35, 10, rng_seed=1)) == 7

    def test_empty_pool(self):
        assert negative_sample(_sentence("a"), [GoldSpan(0, 0, "PER")], 0.35, 10, rng_seed=1) == []

    def test_never_samples_gold(self):
        sentence = _sentence("a b c")
        gold = [GoldSpan(0, 0, "X"), GoldSpan(1, 2, "Y")]
        for seed in range(50):
            negatives = negative_sample(sentence, gold, 1.0, 10, rng_seed=seed)
            assert len(negatives) == 3
            assert {(n.start, n.end) for n in negatives} <= {(0, 1), (0, 2), (1, 1), (2, 2)}

    def test_deterministic(self):
        sentence = _sentence("one two three four five six")
        first = negative_sample(sentence, [], 0.5, 3, rng_seed=42)
        second = negative_sample(sentence, [], 0.5, 3, rng_seed=42)
        assert first == second

    def test_ratio_range(self):
        with pytest.raises(ValidationError):
            negative_sample(_sentence("a b"), [], 0.0, 10, rng_seed=1)


class TestEntityDictionary:

    def test_build(self):
        dataset = parse_bio("in\tO\nNew\tB-LOC\nYork\tI-LOC\n")
        dictionary = build_entity_dictionary(dataset)
        assert dictionary.entries == {("New", "York"): "LOC"}

    def test_collision_keeps_first_label(self):
        dataset = parse_bio("Paris\tB-LOC\n\nParis\tB-PER\n")
        dictionary = build_entity_dictionary(dataset)
        assert dictionary.lookup(["Paris"]) == "LOC"
        assert dictionary.collisions == 1

    def test_empty_annotations(self):
        assert len(build_entity_dictionary(parse_bio("a\tO\n"))) == 0

    def test_file_round_trip(self):
        dictionary = EntityDictionary()
        dictionary.add(["New", "York"], "LOC")
        dictionary.add(["NBA"], "ORG")
        assert load_entity_dictionary(format_entity_dictionary(dictionary)).entries == dictionary.entries

    def test_malformed_dictionary_line(self):
        with pytest.raises(BioFormatError):
            load_entity_dictionary("NBA\n")


class TestDistantSupervision:

    def test_matches_everywhere(self):
        dictionary = EntityDictionary()
        dictionary.add(["NBA"], "ORG")
        dataset = distant_supervise([_sentence("NBA is in NBA")], dictionary)
        assert dataset.annotations[0] == (GoldSpan(0, 0, "ORG"), GoldSpan(3, 3, "ORG"))
        assert dataset.provenance == Provenance.DISTANTLY_SUPERVISED

    def test_longest_match(self):
        dictionary = EntityDictionary()
        dictionary.add(["New", "York"], "LOC")
        dictionary.add(["York"], "LOC")
        dataset = distant_supervise([_sentence("New York")], dictionary)
        assert dataset.annotations[0] == (GoldSpan(0, 1, "LOC"),)

    def test_left_to_right(self):
        dictionary = EntityDictionary()
        dictionary.add(["a", "b"], "X")
        dictionary.add(["b", "c"], "Y")
        dataset = distant_supervise([_sentence("a b c")], dictionary)
        assert dataset.annotations[0] == (GoldSpan(0, 1, "X"),)

    def test_empty_dictionary(self):
        dataset = distant_supervise([_sentence("NBA is here"), _sentence("nothing", 1)], EntityDictionary())
        assert dataset.num_spans == 0
        assert len(dataset) == 2

    @staticmethod
    def _greedy_oracle(tokens, entries):
        """Independent longest-match scan over a plain list of (surface, label) entries."""
        spans, k = [], 0
        while k < len(tokens):
            best = None
            for surface, label in entries:
                if tuple(tokens[k:k + len(surface)]) == tuple(surface):
                    if best is None or len(surface) > len(best[0]):
                        best = (surface, label)
            if best is None:
                k += 1
            else:
                spans.append(GoldSpan(k, k + len(best[0]) - 1, best[1]))
                k += len(best[0])
        return tuple(spans)

    def test_exhaustive_small_cases(self):
        """Every token sequence over a three-letter alphabet up to length 5 matches the plain scan."""
        entries = ((("a",), "X"), (("a", "b"), "Y"), (("b", "a", "b"), "Z"))
        dictionary = EntityDictionary()
        for surface, label in entries:
            dictionary.add(list(surface), label)
        alphabet = ["a", "b", "c"]
        for n in range(1, 6):
            for code in range(len(alphabet) ** n):
                tokens = [alphabet[(code // len(alphabet) ** p) % len(alphabet)] for p in range(n)]
                spans = distant_supervise([Sentence(0, tuple(tokens))], dictionary).annotations[0]
                assert spans == self._greedy_oracle(tokens, entries), tokens

    def test_truncated_tail_is_not_a_blocker(self):
        dictionary = EntityDictionary()
        dictionary.add(["a"], "X")
        dictionary.add(["a", "b"], "Y")
        dataset = distant_supervise([_sentence("c a")], dictionary)
        assert dataset.annotations[0] == (GoldSpan(1, 1, "X"),)


class TestCorruption:

    @staticmethod
    def _thousand_spans():
        sentences = [Sentence(k, ("w",) * 10) for k in range(200)]
        annotations = [tuple(GoldSpan(2 * m, 2 * m, "PER") for m in range(5)) for _ in range(200)]
        return Dataset(tuple(sentences), tuple(annotations), LabelSet.from_entity_types(["PER"]))

    def test_zero_rate_keeps_everything(self, tiny_dataset):
        noisy = corrupt_by_rate(tiny_dataset, 0.0, rng_seed=3)
        assert noisy.sentences == tiny_dataset.sentences
        assert noisy.annotations == tiny_dataset.annotations
        assert noisy.provenance == Provenance.CORRUPTED

    def test_full_rate_drops_everything(self, tiny_dataset):
        assert corrupt_by_rate(tiny_dataset, 1.0, rng_seed=3).num_spans == 0

    def test_binomial_drop_count(self):
        dataset = self._thousand_spans()
        assert dataset.num_spans == 1000
        dropped = 1000 - corrupt_by_rate(dataset, 0.4, rng_seed=11).num_spans
        # 99% interval of Binomial(1000, 0.4)
        assert 360 <= dropped <= 440

    def test_kept_spans_are_a_subset(self):
        dataset = self._thousand_spans()
        noisy = corrupt_by_rate(dataset, 0.5, rng_seed=2)
        for before, after in zip(dataset.annotations, noisy.annotations):
            assert set(after) <= set(before)

    def test_probability_range(self, tiny_dataset):
        with pytest.raises(ValidationError):
            corrupt_by_rate(tiny_dataset, 1.5, rng_seed=0)


class TestDatasets:

    def test_merge(self, tiny_dataset):
        extra = parse_bio("Acme\tB-ORG\n", first_id=10)
        noisy = corrupt_by_rate(extra, 0.0, rng_seed=0)
        merged = merge_datasets(tiny_dataset, noisy)
        assert len(merged) == 4
        assert merged.provenance == Provenance.CORRUPTED
        assert set(merged.label_set.entity_labels) == {"LOC", "MISC", "ORG", "PER"}

    def test_merge_requires_disjoint_ids(self, tiny_dataset):
        with pytest.raises(ContractViolation):
            merge_datasets(tiny_dataset, tiny_dataset)

    def test_statistics(self, tiny_dataset):
        stats = dataset_statistics(tiny_dataset)
        assert stats["sentences"] == 3
        assert stats["tokens"] == 8
        assert stats["spans"] == 4
        assert stats["spans_per_label"] == {"LOC": 1, "MISC": 1, "ORG": 1, "PER": 1}

    def test_sentence_contract(self):
        with pytest.raises(ContractViolation):
            Sentence(-1, ("a",))
        with pytest.raises(ContractViolation):
            Sentence(0, ())

    def test_overlapping_gold_rejected(self):
        labels = LabelSet.from_entity_types(["A"])
        with pytest.raises(ContractViolation):
            Dataset((Sentence(0, ("a", "b")),), ((GoldSpan(0, 1, "A"), GoldSpan(1, 1, "A")),), labels)

    def test_label_set_order(self):
        labels = LabelSet.from_entity_types(["PER", "LOC", "O"])
        assert labels.labels == ("LOC", "PER", "O")
        assert labels.non_entity_index == 2
        assert labels.union(LabelSet.from_entity_types(["ORG"])).labels == ("LOC", "ORG", "PER", "O")
