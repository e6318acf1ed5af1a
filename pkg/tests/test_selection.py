import json
import logging

import pytest
from hypothesis import given, strategies as st

from digesteval.errors import EmptyDayError, ExtractorUnavailableError, MissingTranscriptError
from digesteval.selection import (
    METRIC_ABS_IMBALANCE,
    METRIC_VOLATILITY,
    METRIC_VOLUME,
    METRICS,
    PIPELINE_INSIGHT,
    PIPELINE_PERFORMANCE,
    CandidateSet,
    SelectionConfig,
    extract_mentioned_companies,
    metric_value,
    performance_based_candidates,
    professional_insight_candidates,
    rank_top_k,
    read_selection_log,
    reference_extract,
    write_selection_log,
)

from helpers import D1, article, day, rec, universe


UNI = universe(
    ("2330", "Taiwan Semiconductor"),
    ("2317", "Hon Hai Precision"),
    ("2454", "MediaTek"),
    ("1101", "Taiwan Cement"),
)


class TestRankTopK:
    def test_volume_ranking(self):
        d = day(D1, [rec("A", volume=100), rec("B", volume=300), rec("C", volume=200)])
        assert rank_top_k(d, METRIC_VOLUME, 2) == ["B", "C"]

    def test_tie_broken_by_ascending_code(self):
        d = day(D1, [rec("ZZ", open_=100, close=100, high=105, low=100),
                     rec("AA", open_=100, close=100, high=105, low=100)])
        assert rank_top_k(d, METRIC_VOLATILITY, 1) == ["AA"]

    def test_fewer_records_than_k(self):
        d = day(D1, [rec("A", volume=5), rec("B", volume=9)])
        assert rank_top_k(d, METRIC_VOLUME, 10) == ["B", "A"]

    def test_empty_day(self):
        with pytest.raises(EmptyDayError):
            rank_top_k(day(D1, []), METRIC_VOLUME, 3)

    def test_excluded_never_beats_included(self):
        recs = [rec(f"T{i}", volume=(i * 37) % 11, inst_buy=i, inst_sell=0) for i in range(12)]
        d = day(D1, recs)
        for metric in METRICS:
            top = rank_top_k(d, metric, 5)
            included = min(metric_value(d.records[c], metric) for c in top)
            excluded = [metric_value(r, metric) for r in recs if r.ticker not in top]
            assert all(included >= v for v in excluded)

    @given(st.permutations(list(range(8))))
    def test_invariant_under_record_order(self, order):
        recs = [rec(f"T{i}", volume=100 + (i % 3), inst_buy=i) for i in range(8)]
        base = rank_top_k(day(D1, recs), METRIC_VOLUME, 4)
        shuffled = day(D1, [recs[i] for i in order])
        assert rank_top_k(shuffled, METRIC_VOLUME, 4) == base


class TestPerformanceBased:
    def test_same_ticker_tops_all_metrics(self):
        big = rec("X", open_=100, close=110, high=115, low=95, volume=10_000, inst_buy=9000, inst_sell=0)
        small = rec("Y", open_=100, close=100.1, high=100.2, low=100, volume=10, inst_buy=1, inst_sell=1)
        cs = performance_based_candidates(day(D1, [big, small]), SelectionConfig(k=1))
        assert cs.tickers == ("X",)
        assert cs.pipeline == PIPELINE_PERFORMANCE

    def test_disjoint_lists_k2(self):
        # Two leaders per metric, distinct across metrics.
        recs = [
            rec("V1", open_=100, close=100, high=130, low=90, volume=10, inst_buy=1, inst_sell=1),
            rec("V2", open_=100, close=100, high=125, low=90, volume=11, inst_buy=1, inst_sell=1),
            rec("U1", open_=100, close=100, high=101, low=100, volume=9000, inst_buy=1, inst_sell=1),
            rec("U2", open_=100, close=100, high=101, low=100, volume=8000, inst_buy=1, inst_sell=1),
            rec("W1", open_=100, close=100, high=101, low=100, volume=12, inst_buy=7000, inst_sell=0),
            rec("W2", open_=100, close=100, high=101, low=100, volume=13, inst_buy=6000, inst_sell=0),
        ]
        cs = performance_based_candidates(day(D1, recs), SelectionConfig(k=2))
        assert len(cs.tickers) == 6
        assert cs.tickers[:2] == ("V1", "V2")  # volatility list first

    def test_union_bound_and_membership(self):
        recs = [rec(f"T{i:02d}", volume=1000 - i, inst_buy=i * 13 % 700) for i in range(20)]
        cs = performance_based_candidates(day(D1, recs), SelectionConfig(k=5))
        assert len(cs.tickers) <= 15
        assert len(set(cs.tickers)) == len(cs.tickers)
        in_some_list = set()
        for m in METRICS:
            in_some_list.update(cs.per_metric[m])
        assert set(cs.tickers) == in_some_list

    def test_source_articles_from_explicit_tickers(self):
        arts = (
            article("a1", D1, tickers=("2330",)),
            article("a2", D1, tickers=("1101",)),
            article("a3", D1, tickers=("2317", "2330")),
        )
        d = day(D1, [rec("2330", volume=500), rec("2317", volume=400)], articles=arts)
        cs = performance_based_candidates(d, SelectionConfig(k=2), universe=UNI)
        assert cs.source_articles == ("a1", "a3")

    def test_source_articles_via_extraction_when_field_absent(self):
        arts = (article("a1", D1, headline="Taiwan Semiconductor ramps capacity", body="Detail."),)
        d = day(D1, [rec("2330", volume=500)], articles=arts)
        cs = performance_based_candidates(d, SelectionConfig(k=1), universe=UNI)
        assert cs.source_articles == ("a1",)


class TestReferenceExtract:
    def test_two_names(self):
        text = "Taiwan Semiconductor rose while Hon Hai Precision fell"
        assert reference_extract(text, UNI) == ["2330", "2317"]

    def test_no_mentions(self):
        assert reference_extract("nothing relevant here", UNI) == []

    def test_dedup_first_mention_order(self):
        text = "MediaTek...MediaTek...Taiwan Semiconductor"
        assert reference_extract(text, UNI) == ["2454", "2330"]

    def test_case_insensitive_names_exact_codes(self):
        assert reference_extract("taiwan semiconductor and 2317", UNI) == ["2330", "2317"]
        # lowercase codes are not codes
        assert reference_extract("bought more 2330x stock", UNI) == []

    def test_longest_match_wins(self):
        uni = universe(("A1", "United"), ("A2", "United Micro"))
        assert reference_extract("United Micro gained", uni) == ["A2"]

    def test_word_boundaries(self):
        uni = universe(("A1", "Acme"), ("9910", "Niner"))
        assert reference_extract("Acmeville holds no Acme shares; 99103 differs", uni) == ["A1"]

    def test_idempotent_on_extracted_names(self):
        text = "Taiwan Cement and MediaTek and Taiwan Cement"
        first = reference_extract(text, UNI)
        names = " ".join(UNI.get(c).name for c in first)
        assert reference_extract(names, UNI) == first

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
    def test_output_always_in_universe(self, text):
        for code in reference_extract(text, UNI):
            assert code in UNI


class TestExtractMentionedCompanies:
    def test_external_output_filtered_to_universe(self):
        def extractor(text, uni):
            return ["2330", "9999", "2330", "2454"]

        assert extract_mentioned_companies("x", UNI, extractor) == ["2330", "2454"]

    def test_reference_when_no_extractor(self):
        assert extract_mentioned_companies("MediaTek up", UNI) == ["2454"]


class TestProfessionalInsight:
    def test_counts_from_transcript_and_articles(self):
        arts = (
            article("a1", D1, tickers=("2330",)),
            article("a2", D1, tickers=("1101",)),
            article("a3", D1, tickers=("2317",)),
            article("a4", D1, tickers=("2330", "2454")),
            article("a5", D1, tickers=()),
        )
        d = day(
            D1,
            [rec("2330")],
            articles=arts,
            morning="Taiwan Semiconductor and Hon Hai Precision in focus.",
        )
        cs = professional_insight_candidates(d, UNI)
        assert cs.tickers == ("2330", "2317")
        assert cs.source_articles == ("a1", "a3", "a4")
        assert cs.pipeline == PIPELINE_INSIGHT

    def test_missing_transcript(self):
        with pytest.raises(MissingTranscriptError):
            professional_insight_candidates(day(D1, [rec("2330")]), UNI)

    def test_zero_mentions_warns(self, caplog):
        d = day(D1, [rec("2330")], morning="nothing about any listed company")
        with caplog.at_level(logging.WARNING):
            cs = professional_insight_candidates(d, UNI)
        assert cs.tickers == ()
        assert any("mentions no universe company" in r.message for r in caplog.records)

    def test_extractor_failure_falls_back(self, caplog):
        def broken(text, uni):
            raise ExtractorUnavailableError("backend down")

        d = day(D1, [rec("2330")], morning="Taiwan Cement mentioned.")
        with caplog.at_level(logging.WARNING):
            cs = professional_insight_candidates(d, UNI, extractor=broken)
        assert cs.tickers == ("1101",)
        assert any("falling back" in r.message or "reference extractor" in r.message for r in caplog.records)


class TestSelectionLog:
    def test_round_trip(self, tmp_path):
        sets = [
            performance_based_candidates(
                day(D1, [rec("2330", volume=10), rec("2317", volume=20)]),
                SelectionConfig(k=1),
            ),
            CandidateSet(date=D1, pipeline=PIPELINE_INSIGHT, tickers=("1101",), source_articles=("a1",)),
        ]
        path = tmp_path / "selection.log"
        write_selection_log(path, sets)
        assert read_selection_log(path) == sets
        # one JSON object per line, stable keys
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert list(json.loads(lines[0])) == sorted(json.loads(lines[0]))
