import csv
import io
import json
import math

import pytest

from ftkit.bench import (
    CSV_COLUMNS,
    ReportBundle,
    bundle_from_json,
    emit_report,
    run_paper_tables,
    run_scalar_checks,
)
from ftkit.sim import SimConfig


def test_empty_bundle_csv_is_header_only():
    assert emit_report(ReportBundle(), "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report(ReportBundle(), "xml")


@pytest.mark.parametrize("kwargs", [dict(tolerance=-1.0), dict(jobs=0), dict(eps_base=2.0)])
def test_argument_validation(kwargs):
    with pytest.raises(ValueError):
        run_paper_tables(**kwargs)


def test_scalar_checks():
    checks = {c.name: c for c in run_scalar_checks()}
    assert len(checks) == 6 and all(c.passed for c in checks.values())
    assert checks["mu_margin(mu=1)"].value == pytest.approx(1.7071067811865, abs=1e-12)
    assert checks["fixed_time_margin(k=1,6)"].value == pytest.approx(1.1144706547, abs=1e-10)


class TestTableRun:
    def test_shape(self, table_bundle):
        assert len(table_bundle.rows) == 17
        assert [(r.n, r.x0_scale) for r in table_bundle.rows] == sorted((r.n, r.x0_scale)
                                                                        for r in table_bundle.rows)
        assert all(r.simulated_s is not None for r in table_bundle.rows)

    def test_csv(self, table_bundle):
        rows = list(csv.DictReader(io.StringIO(emit_report(table_bundle, "csv"))))
        assert len(rows) == 17
        for parsed, row in zip(rows, table_bundle.rows):
            assert float(parsed["sim_s"]) == row.simulated_s
            assert parsed["pass"] == str(row.passed).lower()

    def test_markdown(self, table_bundle):
        md = emit_report(table_bundle, "md")
        assert md.count("| Convergence time | n=") == 4
        assert "## Scalar checks" in md

    def test_json_round_trip(self, table_bundle):
        text = emit_report(table_bundle, "json")
        again = bundle_from_json(text)
        assert again == table_bundle
        assert json.loads(emit_report(again, "json")) == json.loads(text)

    def test_monotone_in_x0_and_n(self, table_bundle):
        by = {(r.n, r.x0_scale): r.simulated_s for r in table_bundle.rows}
        for n in (2, 3, 4, 5):
            times = [by[k] for k in sorted(k for k in by if k[0] == n)]
            assert times == sorted(times)
        for x0 in (1.0, 100.0, 1e4, 1e6):
            assert [by[(n, x0)] for n in (2, 3, 4, 5)] == sorted(by[(n, x0)] for n in (2, 3, 4, 5))

    def test_power_law_bound_dominates(self, table_bundle):
        assert all(r.bound_s >= r.simulated_s for r in table_bundle.rows)


def test_infinite_tolerance_passes_every_converged_row():
    bundle = run_paper_tables(SimConfig(1e-3, "rk4", None, 1), tolerance=math.inf)
    assert all(r.passed for r in bundle.rows)


@pytest.mark.slow
def test_scaled_threshold_diagnostic(table_bundle_scaled_eps):
    """Not a gate: with eps = 1e-3**n every cell lands within 1% of the reference."""
    worst = max(abs(r.simulated_s / r.reference_simulated_s - 1) for r in table_bundle_scaled_eps.rows)
    assert worst < 0.01
