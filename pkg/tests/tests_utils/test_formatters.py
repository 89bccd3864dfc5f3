"""
Tests for utils/formatters.py
"""

from topv.utils.formatters import (
    format_elapsed,
    format_key_value,
    format_ratio,
    format_table,
    print_error,
    print_success,
    print_warning,
)


class TestFormatElapsed:
    """Test elapsed time formatting"""

    def test_microseconds(self):
        """Test sub-millisecond durations"""
        assert format_elapsed(0.00085) == "850 мкс"

    def test_milliseconds(self):
        """Test sub-second durations"""
        assert format_elapsed(0.0123) == "12.3 мс"

    def test_seconds(self):
        """Test durations of a second and more"""
        assert format_elapsed(2.414) == "2.41 с"


class TestFormatRatio:
    """Test ratio formatting"""

    def test_percent(self):
        """Test one decimal place"""
        assert format_ratio(0.3515625) == "35.2%"
        assert format_ratio(0.0) == "0.0%"
        assert format_ratio(1.0) == "100.0%"


class TestFormatTable:
    """Test table formatting"""

    def test_empty_table(self):
        """Test formatting empty table"""
        assert format_table([], ["a"]) == "Нет данных для отображения"

    def test_simple_table(self):
        """Test formatting simple table"""
        data = [
            {"check": "plan_vs_oracle", "N": "2", "status": "PASS"},
            {"check": "log_vs_linear", "N": "16", "status": "FAIL"},
        ]

        lines = format_table(data, ["check", "N", "status"]).splitlines()

        assert lines[0].startswith("check")
        assert set(lines[1]) == {"-"}
        assert "plan_vs_oracle" in lines[2]
        assert lines[3].endswith("FAIL")

    def test_column_width(self):
        """Test columns are padded to the widest value"""
        data = [{"a": "x", "b": "1"}, {"a": "longer", "b": "2"}]

        lines = format_table(data, ["a", "b"]).splitlines()

        assert lines[2].index("|") == lines[3].index("|")

    def test_missing_values(self):
        """Test missing keys render as empty cells"""
        result = format_table([{"a": "1"}], ["a", "b"])

        assert "1" in result


class TestFormatKeyValue:
    """Test key=value formatting"""

    def test_empty(self):
        """Test formatting empty dict"""
        assert format_key_value({}) == "Нет данных"

    def test_order_preserved(self):
        """Test one pair per line in insertion order"""
        result = format_key_value({"retained_tokens": 360, "kv_ratio": 0.648438})

        assert result == "retained_tokens=360\nkv_ratio=0.648438"


class TestPrinting:
    """Test stream routing"""

    def test_success_to_stdout(self, capsys):
        """Test success messages go to stdout"""
        print_success("готово")

        captured = capsys.readouterr()
        assert "готово" in captured.out
        assert captured.err == ""

    def test_errors_to_stderr(self, capsys):
        """Test errors and warnings go to stderr"""
        print_error("сбой")
        print_warning("внимание")

        captured = capsys.readouterr()
        assert captured.out == ""
        assert "сбой" in captured.err
        assert "внимание" in captured.err
