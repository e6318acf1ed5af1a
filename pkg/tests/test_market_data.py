import textwrap
from datetime import date as Date

import pytest
from hypothesis import given, strategies as st

from digesteval.errors import (
    DuplicateRecordError,
    MissingFileError,
    NonPositiveBasisError,
    RowParseError,
    UnknownTickerError,
)
from digesteval.marketdata import (
    EquityDayRecord,
    MarketDataset,
    Universe,
    institutional_imbalance,
    intraday_volatility,
    load_dataset,
    load_universe,
    simple_return,
)

from helpers import D1, D2, D3, dataset, day, rec, universe


def write(path, text):
    path.write_text(textwrap.dedent(text).lstrip(), encoding="utf-8")
    return path


@pytest.fixture
def data_dir(tmp_path):
    write(
        tmp_path / "companies.csv",
        """
        code,name
        2330,Taiwan Semiconductor
        2317,Hon Hai Precision
        1101,Taiwan Cement
        """,
    )
    write(
        tmp_path / "prices.csv",
        """
        date,code,open,high,low,close,volume,inst_buy,inst_sell
        2024-03-04,2330,100,103,99,102,5000,900,400
        2024-03-04,2317,50,50.5,49,49.7,3000,100,600
        2024-03-05,2330,102,104,101,103,4500,800,300
        """,
    )
    write(
        tmp_path / "news.jsonl",
        """
        {"id": "a1", "date": "2024-03-04", "headline": "Chipmaker expands", "body": "Capex plans grow.", "tickers": ["2330"]}
        {"id": "a2", "date": "2024-03-05", "headline": "Assembler update", "body": "Hon Hai Precision comments on outlook."}
        """,
    )
    write(
        tmp_path / "transcripts.jsonl",
        """
        {"date": "2024-03-04", "kind": "morning", "text": "Watching Taiwan Semiconductor today."}
        {"date": "2024-03-04", "kind": "closing", "text": "Taiwan Cement closed the session quietly."}
        """,
    )
    return tmp_path


class TestRecordInvariants:
    def test_valid_record(self):
        r = rec("2330", open_=100, close=103)
        assert r.ticker == "2330"

    def test_low_above_open_rejected(self):
        with pytest.raises(ValueError):
            EquityDayRecord("2330", D1, open=100, high=105, low=101, close=103, volume=1, inst_buy=0, inst_sell=0)

    def test_high_below_close_rejected(self):
        with pytest.raises(ValueError):
            EquityDayRecord("2330", D1, open=100, high=102, low=99, close=103, volume=1, inst_buy=0, inst_sell=0)

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValueError):
            EquityDayRecord("2330", D1, open=0, high=1, low=0.5, close=1, volume=1, inst_buy=0, inst_sell=0)

    def test_negative_volume_rejected(self):
        with pytest.raises(ValueError):
            rec("2330", volume=-1)


class TestDerivedQuantities:
    def test_simple_return(self):
        assert simple_return(100, 102) == pytest.approx(0.02)

    def test_simple_return_nonpositive_basis(self):
        with pytest.raises(NonPositiveBasisError):
            simple_return(0, 100)

    def test_volatility(self):
        r = rec("2330", open_=100, close=100, high=105, low=95)
        assert intraday_volatility(r) == pytest.approx(0.10)

    def test_volatility_zero_iff_flat(self):
        r = rec("2330", open_=100, close=100, high=100, low=100)
        assert intraday_volatility(r) == 0.0

    def test_imbalance_signed(self):
        assert institutional_imbalance(rec("2330", inst_buy=100, inst_sell=600)) == -500

    @given(
        basis=st.floats(min_value=0.01, max_value=1e6),
        target=st.floats(min_value=0.01, max_value=1e6),
    )
    def test_simple_return_sign_matches_move(self, basis, target):
        r = simple_return(basis, target)
        assert (r > 0) == (target > basis)
        assert (r == 0) == (target == basis)


class TestUniverse:
    def test_load_and_order(self, data_dir):
        uni, rejects = load_universe(data_dir / "companies.csv")
        assert uni.codes == ("2330", "2317", "1101")
        assert not rejects
        assert "2330" in uni and "9999" not in uni
        assert uni.get("2317").name == "Hon Hai Precision"

    def test_duplicate_code_rejected(self, tmp_path):
        path = write(tmp_path / "c.csv", "code,name\n2330,A\n2330,B\n")
        uni, rejects = load_universe(path)
        assert len(uni) == 1
        assert any("duplicate" in r.reason for r in rejects)

    def test_duplicate_code_strict(self, tmp_path):
        path = write(tmp_path / "c.csv", "code,name\n2330,A\n2330,B\n")
        with pytest.raises(DuplicateRecordError):
            load_universe(path, strict=True)

    def test_bad_code_shape_rejected(self, tmp_path):
        path = write(tmp_path / "c.csv", "code,name\nab cd,A\n2330,B\n")
        uni, rejects = load_universe(path)
        assert uni.codes == ("2330",)
        assert rejects

    def test_duplicate_in_memory_universe(self):
        with pytest.raises(ValueError):
            universe(("2330", "A"), ("2330", "B"))


class TestLoadDataset:
    def test_happy_path(self, data_dir):
        result = load_dataset(
            data_dir / "companies.csv",
            data_dir / "prices.csv",
            data_dir / "news.jsonl",
            data_dir / "transcripts.jsonl",
        )
        assert not result.rejects
        ds = result.dataset
        assert ds.dates == (Date(2024, 3, 4), Date(2024, 3, 5))
        d0 = ds.day(Date(2024, 3, 4))
        assert set(d0.records) == {"2330", "2317"}
        assert d0.morning_transcript.startswith("Watching")
        assert [a.id for a in d0.articles] == ["a1"]

    def test_missing_file(self, data_dir):
        with pytest.raises(MissingFileError):
            load_dataset(data_dir / "companies.csv", data_dir / "absent.csv", data_dir / "news.jsonl")

    def test_unknown_ticker_skipped_and_reported(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-04,9999,100,103,99,102,5000,900,400
            2024-03-04,2330,100,103,99,102,5000,900,400
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert set(result.dataset.day(Date(2024, 3, 4)).records) == {"2330"}
        assert any("9999" in r.reason for r in result.rejects)

    def test_unknown_ticker_strict(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-04,9999,100,103,99,102,5000,900,400
            """,
        )
        with pytest.raises(UnknownTickerError):
            load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl", strict=True)

    def test_duplicate_price_row(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-04,2330,100,103,99,102,5000,900,400
            2024-03-04,2330,101,103,99,102,5000,900,400
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert result.dataset.day(Date(2024, 3, 4)).records["2330"].open == 100
        assert any("duplicate" in r.reason for r in result.rejects)
        with pytest.raises(DuplicateRecordError):
            load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl", strict=True)

    def test_malformed_row_skip_and_report(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-04,2330,abc,103,99,102,5000,900,400
            2024-03-04,2317,50,50.5,49,49.7,3000,100,600
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert set(result.dataset.day(Date(2024, 3, 4)).records) == {"2317"}
        assert len(result.rejects) == 1
        with pytest.raises(RowParseError):
            load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl", strict=True)

    def test_price_invariant_violation_rejected(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-04,2330,100,101,99,103,5000,900,400
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert not result.dataset.day(Date(2024, 3, 4)).records
        assert result.rejects

    def test_news_unknown_ticker_dropped(self, data_dir):
        write(
            data_dir / "news.jsonl",
            """
            {"id": "a1", "date": "2024-03-04", "headline": "h", "body": "b", "tickers": ["2330", "9999"]}
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        arts = result.dataset.day(Date(2024, 3, 4)).articles
        assert arts[0].mentioned_tickers == ("2330",)
        assert any("9999" in r.reason for r in result.rejects)

    def test_duplicate_article_id_rejected(self, data_dir):
        write(
            data_dir / "news.jsonl",
            """
            {"id": "a1", "date": "2024-03-04", "headline": "h", "body": "b"}
            {"id": "a1", "date": "2024-03-05", "headline": "h2", "body": "b2"}
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert sum(len(d.articles) for d in result.dataset.days) == 1

    def test_transcript_crlf_normalized(self, data_dir):
        (data_dir / "transcripts.jsonl").write_text(
            '{"date": "2024-03-04", "kind": "morning", "text": "line one\\r\\nline two"}\n',
            encoding="utf-8",
        )
        result = load_dataset(
            data_dir / "companies.csv",
            data_dir / "prices.csv",
            data_dir / "news.jsonl",
            data_dir / "transcripts.jsonl",
        )
        assert result.dataset.day(Date(2024, 3, 4)).morning_transcript == "line one\nline two"

    def test_bad_transcript_kind_rejected(self, data_dir):
        write(
            data_dir / "transcripts.jsonl",
            """
            {"date": "2024-03-04", "kind": "midday", "text": "x"}
            """,
        )
        result = load_dataset(
            data_dir / "companies.csv",
            data_dir / "prices.csv",
            data_dir / "news.jsonl",
            data_dir / "transcripts.jsonl",
        )
        assert result.dataset.day(Date(2024, 3, 4)).morning_transcript is None
        assert result.rejects

    def test_days_sorted_and_records_ordered(self, data_dir):
        write(
            data_dir / "prices.csv",
            """
            date,code,open,high,low,close,volume,inst_buy,inst_sell
            2024-03-05,2330,102,104,101,103,4500,800,300
            2024-03-04,2330,100,103,99,102,5000,900,400
            2024-03-04,1101,30,31,29,30,100,5,5
            """,
        )
        result = load_dataset(data_dir / "companies.csv", data_dir / "prices.csv", data_dir / "news.jsonl")
        assert result.dataset.dates == (Date(2024, 3, 4), Date(2024, 3, 5))
        assert list(result.dataset.day(Date(2024, 3, 4)).records) == ["1101", "2330"]


class TestDatasetNavigation:
    def build(self):
        uni = universe(("A", "Alpha Corp"), ("B", "Beta Corp"))
        return dataset(
            uni,
            day(D1, [rec("A", D1), rec("B", D1)]),
            day(D2, []),  # news-only day, no trading records
            day(D3, [rec("A", D3)]),
        )

    def test_next_trading_day_skips_recordless(self):
        ds = self.build()
        assert ds.next_trading_day(D1).date == D3

    def test_prior_trading_day(self):
        ds = self.build()
        assert ds.prior_trading_day(D3).date == D1
        assert ds.prior_trading_day(D1) is None

    def test_next_at_edge(self):
        ds = self.build()
        assert ds.next_trading_day(D3) is None

    def test_days_strictly_increasing(self):
        uni = universe(("A", "Alpha Corp"))
        with pytest.raises(ValueError):
            MarketDataset(universe=uni, days=(day(D2, []), day(D1, [])))
