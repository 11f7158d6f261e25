"""The composite-proxy formula language.

Weighted sums and products of max-normalized variables drive every
allocation. This script parses a vehicle-fleet weighting formula, evaluates
a heating formula, and prints the built-in emission-standard weight table.
"""

from regio import (
    EMISSION_STANDARD_CAPS,
    ConfidenceLevel,
    SpatialLevel,
    VariableSeries,
    euro_weight_table,
    evaluate,
    format_expr,
    normalize_series,
    parse,
    passenger_car_weights,
    variables,
)

REGIONS = ["R1", "R2", "R3"]


def series(vid, values, confidence=ConfidenceLevel.VERY_HIGH):
    return VariableSeries.from_values(
        vid, SpatialLevel.LAU, dict(zip(REGIONS, values)), confidence
    )


# -- parsing ------------------------------------------------------------
formula = "3.83 * euro_1 + 1.78 * euro_2 + 0.6745 * euro_6d"
expr = parse(formula)
print("parsed:", format_expr(expr))
print("variables:", variables(expr))

# -- max-normalization: peak -> 1.0, true zeros stay 0 -------------------
raw = series("cars", [500.0, 0.0, 2000.0])
print("\nnormalized:", {r: normalize_series(raw).value(r) for r in REGIONS})

# -- evaluation: per-variable normalization, then the weighted combine ---
env = {
    "euro_1": series("euro_1", [500.0, 100.0, 2000.0]),
    "euro_2": series("euro_2", [800.0, 300.0, 2500.0]),
    "euro_6d": series("euro_6d", [50.0, 900.0, 1200.0], ConfidenceLevel.MEDIUM),
}
out = evaluate(expr, env, REGIONS)
for region in REGIONS:
    print(f"  {region}: {out.value(region):.4f} ({out.confidence(region).name})")
# the MEDIUM euro_6d observations cap the result confidence everywhere

# -- product formulas for heat demand ------------------------------------
heat = evaluate(
    parse("living_area * heating_degree_days"),
    {
        "living_area": series("living_area", [12.0, 30.0, 18.0]),
        "heating_degree_days": series("heating_degree_days", [2800.0, 2800.0, 3400.0]),
    },
    REGIONS,
)
print("\nheat proxy:", {r: round(heat.value(r), 4) for r in REGIONS})

# -- emission-standard weights: cap sums are exact ------------------------
print("\ntier weight table (CO + HC/NOx + PM):")
for w in euro_weight_table(EMISSION_STANDARD_CAPS):
    print(f"  {w.tier:<13} {w.co_cap} + {w.hc_nox_cap} + {w.pm_cap} = {w.total}")
print("\nvehicle-stock group weights:", passenger_car_weights())
