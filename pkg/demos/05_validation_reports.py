"""Deviation reporting against bottom-up inventories and reference datasets.

The percentage deviation is anchored on the reported value:
pct = 100 * (reported - disaggregated) / reported. Values are exact
internally; tables round half-up to two decimals.
"""

from pathlib import Path

from regio import (
    RegionHierarchy,
    RegionNode,
    SpatialLevel,
    VariableSeries,
    compare_at_level,
    deviation,
    markdown_table,
    sector_comparison_report,
    write_deviation_csv,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# city inventories vs disaggregated values (building sector, MWh)
cities = [
    ("Barcelona", 9822750.0, 8841562.0),
    ("Madrid", 21644328.0, 21892150.0),
    ("Valencia", 3102478.65, 3238758.0),
    ("Seville", 1078192.20, 2166460.60),
]
rows = [deviation(reported, disagg, label) for label, reported, disagg in cities]
print(markdown_table(rows, value_unit="MWh"))

write_deviation_csv(rows, OUT / "city_deviations.csv")
print("exact CSV written to", OUT / "city_deviations.csv")

# sectoral totals reported by two datasets (kt CO2 equivalent)
sectors = sector_comparison_report(
    [
        ("Industry DE", 188.81, 115.80),
        ("Transport DE", 143.38, 147.27),
        ("Transport ES", 83.51, 90.21),
    ]
)
print("\nsector comparison:")
for row in sectors:
    print(f"  {row.label:<14} {row.pct_display:+.2f}%")

# aggregate a LAU result up to NUTS3 and join against a reference series
nodes = [
    RegionNode("AA", SpatialLevel.NUTS0, None, "AA"),
    RegionNode("AA1", SpatialLevel.NUTS1, "AA", "AA"),
    RegionNode("AA11", SpatialLevel.NUTS2, "AA1", "AA"),
    RegionNode("AA111", SpatialLevel.NUTS3, "AA11", "AA"),
    RegionNode("AA112", SpatialLevel.NUTS3, "AA11", "AA"),
    RegionNode("AA_0001", SpatialLevel.LAU, "AA111", "AA"),
    RegionNode("AA_0002", SpatialLevel.LAU, "AA111", "AA"),
    RegionNode("AA_0003", SpatialLevel.LAU, "AA112", "AA"),
]
hierarchy = RegionHierarchy(nodes)
result = VariableSeries.from_values(
    "emissions", SpatialLevel.LAU, {"AA_0001": 1.0, "AA_0002": 2.0, "AA_0003": 5.0}
)
reference = VariableSeries.from_values(
    "reference", SpatialLevel.NUTS3, {"AA111": 4.0, "AA112": 5.5}
)
comparison = compare_at_level(result, reference, hierarchy, SpatialLevel.NUTS3)
print("\nLAU result aggregated to NUTS3 vs reference:")
for row in comparison.rows:
    print(
        f"  {row.label}: reported {row.reported} vs {row.disaggregated} "
        f"-> {row.pct_display:+.2f}%"
    )
