"""Release gate: the nine full-scale checks, one verdict line each.

Each check drives a pipeline through its shipped config file, at the
same scale a user run gets, and prints a single PASS/FAIL line outside
the capture so the verdicts always appear in the test log.  The final
check re-runs every pipeline and demands byte-identical serialization.
"""

import time
from fractions import Fraction
from pathlib import Path

from f2walk.config import load_config
from f2walk.experiments import run_experiment
from f2walk.finite import avg_operator, two_point_swap
from f2walk.reports import canonical_json, render_csv

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

PIPELINES = {
    "verify-finite": "verify-finite.ini",
    "verify-chain": "verify-chain.ini",
    "axioms": "axioms.ini",
    "build-tower": "build-tower.ini",
    "survey0": "survey0.ini",
    "survey1": "survey1.ini",
    "calibrate": "calibrate.ini",
}

_CACHE = {}


def pipeline(key):
    """Run a pipeline from its shipped config once, cached, timed."""
    if key not in _CACHE:
        config = load_config(str(CONFIG_DIR / PIPELINES[key]))
        start = time.monotonic()
        result = run_experiment(config)
        _CACHE[key] = (result, time.monotonic() - start)
    return _CACHE[key]


def verdict(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_operator_identity(capsys):
    result, elapsed = pipeline("verify-finite")
    rows = result.tables["systems"][1]
    ok = (
        result.passed
        and result.report["systems_checked"] == 50
        and result.report["identity_all_exact"]
        and len(rows) == 50
        and all(row[3] for row in rows)
        and elapsed <= 30.0
    )
    verdict(capsys, 1, ok, f"50 systems exact, n <= 5, {elapsed:.1f}s")


def test_criterion_2_swap_parity(capsys):
    result, _ = pipeline("verify-finite")
    swap = two_point_swap()
    one_zero = (Fraction(1), Fraction(0))
    one_one = (Fraction(0), Fraction(1))
    direct = all(
        avg_operator(swap, one_zero, 2 * n) == one_zero
        and avg_operator(swap, one_zero, 2 * n + 1) == one_one
        for n in range(1, 6)
    )
    ok = result.report["swap_parity_exact"] and direct
    verdict(capsys, 2, ok, "two-point swap alternates exactly, n <= 5")


def test_criterion_3_exact_chain(capsys):
    result, elapsed = pipeline("verify-chain")
    rows = result.tables["chain"][1]
    ok = (
        result.passed
        and result.report["norms_exact"]
        and result.report["boundary_guard"]
        and result.report["support_constant"] == "1/4"
        and [row[0] for row in rows] == list(range(-15, -1))
        and all(row[-1] for row in rows)
        and elapsed <= 10.0
    )
    verdict(capsys, 3, ok, f"unit norms and exact steps on -15..-2, {elapsed:.1f}s")


def test_criterion_4_pointwise_survey(capsys):
    result, elapsed = pipeline("axioms")
    rep = result.report
    ok = (
        result.passed
        and rep["points"] == 100_000
        and rep["violation_total"] == 0
        and rep["stratum_max_deviation"] <= 0.005
        and rep["strata_within_tolerance"]
    )
    verdict(
        capsys,
        4,
        ok,
        f"10^5 points, 0 violations, max stratum deviation "
        f"{rep['stratum_max_deviation']:.4f}, {elapsed:.1f}s",
    )


def test_criterion_5_norm_recursion(capsys):
    result, elapsed = pipeline("build-tower")
    rep = result.report
    want = ["1", "3/4", "39/64", "8463/16384", "483008799/1073741824"]
    ok = (
        result.passed
        and rep["levels"] == 4
        and rep["alphas"] == want
        and rep["norms_match"]
        and rep["alphas_decimal"][1] == 0.75
        and rep["alphas_decimal"][2] == 0.609375
        and elapsed <= 60.0
    )
    verdict(capsys, 5, ok, f"k=4 mass recursion matches exact norms, {elapsed:.1f}s")


def test_criterion_6_estimator_calibration(capsys):
    result, elapsed = pipeline("calibrate")
    rep = result.report
    ok = (
        result.passed
        and rep["trials"] == 100
        and rep["coverage"] >= 0.95
    )
    verdict(
        capsys,
        6,
        ok,
        f"99% intervals covered {rep['hits']}/100 exact values, {elapsed:.1f}s",
    )


def test_criterion_7_base_maximal_survey(capsys):
    result, elapsed = pipeline("survey0")
    rep = result.report
    lo, hi = rep["pass_fraction_ci"]
    ok = (
        result.passed
        and rep["window_found"]
        and rep["window_n"] is not None
        and rep["window_n"] <= 12
        and rep["points"] >= 200
        and rep["pass_fraction_at_n"] >= 0.8
    )
    verdict(
        capsys,
        7,
        ok,
        f"N={rep.get('window_n')}, fraction={rep.get('pass_fraction_at_n'):.3f}, "
        f"CI=[{lo:.3f}, {hi:.3f}], walks={rep.get('walks_total')}, {elapsed:.0f}s",
    )


def test_criterion_8_glued_delayed_survey(capsys):
    result, elapsed = pipeline("survey1")
    rep = result.report
    ladder = result.tables["mixing_ladder"][1]
    ok = (
        result.passed
        and rep["kappa"] == "1/64"
        and rep["delay_chosen"] in rep["delay_candidates"]
        and rep["mixing_statistic"] >= rep["mix_floor"]
        and rep["delayed_threshold"] == 0.6
        and rep["pass_fraction"] >= 0.6
        and len(ladder) >= 1
    )
    verdict(
        capsys,
        8,
        ok,
        f"M={rep.get('delay_chosen')}, mixing={rep.get('mixing_statistic', 0):.3f} "
        f">= floor {rep.get('mix_floor')}, fraction={rep.get('pass_fraction', 0):.3f} "
        f"over {rep.get('points')} copy-2 points, walks={rep.get('walks_total')}, "
        f"{elapsed:.0f}s",
    )


def test_criterion_9_reproducibility(capsys):
    matched = []
    for key, fname in PIPELINES.items():
        first, _ = pipeline(key)
        second = run_experiment(load_config(str(CONFIG_DIR / fname)))
        same_report = canonical_json(first.report) == canonical_json(second.report)
        same_tables = set(first.tables) == set(second.tables) and all(
            render_csv(*first.tables[t]) == render_csv(*second.tables[t])
            for t in first.tables
        )
        matched.append((key, same_report and same_tables))
    ok = all(m for _, m in matched)
    bad = [k for k, m in matched if not m]
    detail = (
        f"{len(matched)}/7 pipelines byte-identical on re-run"
        if ok
        else f"mismatch in: {', '.join(bad)}"
    )
    verdict(capsys, 9, ok, detail)
