"""Regenerate the bundled sample prediction table and its error profile.

The table mimics a realistic audit input: a sigmoid-threshold classifier on
the synthetic population, with the proxy attribute derailed on exactly 160
group-1 records and 300 group-0 records out of 20000, so the empirical error
profile is exactly u0 = 0.008, u1 = 0.015 (total 0.023).  Records nearest the
attribute threshold flip, the way a miscalibrated threshold would err.

Outputs are committed; rerun only to change the construction.

    python scripts/generate_sample_data.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fairseal.estimation import OutcomeRecord, counts_from_arrays, proxy_statistics, write_predictions_csv, profile_from_rates
from fairseal.bounds import check_assumption, worst_case_bounds, minimal_achievable_bound
from fairseal.correction import condition_residual
from fairseal.synthetic import ClassifierCoefficients, PopulationConfig, evaluate_classifier, sample_population

N = 20_000
U0_ERRORS = 160   # a=1 records reported as proxy group 0
U1_ERRORS = 300   # a=0 records reported as proxy group 1
SEED = 20240817

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "fairseal" / "data"


def main() -> None:
    config = PopulationConfig()
    population = sample_population(config, N, SEED)
    coeffs = ClassifierCoefficients(1.08, 0.94, 1.15)
    y_hat = evaluate_classifier(coeffs, population)

    a_hat = population.a.copy()
    margin = population.x[:, 2] + config.a_offset
    group1 = np.nonzero(population.a == 1)[0]
    group0 = np.nonzero(population.a == 0)[0]
    # Flip the records closest to the attribute threshold on each side.
    flips_to_0 = group1[np.argsort(margin[group1])[:U0_ERRORS]]
    flips_to_1 = group0[np.argsort(-margin[group0])[:U1_ERRORS]]
    a_hat[flips_to_0] = 0
    a_hat[flips_to_1] = 1

    profile = profile_from_rates(U0_ERRORS / N, U1_ERRORS / N)
    counts = counts_from_arrays(a_hat, population.y, y_hat, population.a)
    stats = proxy_statistics(counts)
    report = check_assumption(stats, profile)
    assert report.passes, report.margin
    wb = worst_case_bounds(stats, profile)
    minimal = minimal_achievable_bound(stats, profile, 1)
    residual = condition_residual(stats, profile, 1)
    assert wb.b_tpr > minimal + 1e-3, (wb.b_tpr, minimal)
    print(f"b_tpr={wb.b_tpr:.6f} minimal={minimal:.6f} residual={residual:.6f}")
    print(f"alpha_hat=\n{stats.alpha_hat}")

    records = [
        OutcomeRecord(int(ah), int(y), int(yh), int(a))
        for ah, y, yh, a in zip(a_hat, population.y, y_hat, population.a)
    ]
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    write_predictions_csv(DATA_DIR / "sample_predictions.csv", records)
    (DATA_DIR / "sample_profile.json").write_text(
        json.dumps(profile.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {DATA_DIR / 'sample_predictions.csv'} and sample_profile.json")


if __name__ == "__main__":
    main()
