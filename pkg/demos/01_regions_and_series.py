"""Region hierarchies and per-region variable tables.

Builds a two-country NUTS0..LAU hierarchy from CSV, ingests a variable with
gaps, and shows the missingness report, aggregation with confidence
propagation, and the correlation helper.
"""

from pathlib import Path

from regio import (
    SeriesMeta,
    SpatialLevel,
    aggregate,
    ingest_series,
    load_hierarchy,
    missing_report,
    pearson,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

HIERARCHY = """\
code,level,parent,country
AA,NUTS0,,AA
AA1,NUTS1,AA,AA
AA11,NUTS2,AA1,AA
AA111,NUTS3,AA11,AA
AA112,NUTS3,AA11,AA
AA_0001,LAU,AA111,AA
AA_0002,LAU,AA111,AA
AA_0003,LAU,AA112,AA
AA_0004,LAU,AA112,AA
"""

POPULATION = """\
region,value
AA_0001,1200
AA_0002,3400
AA_0003,560
AA_0004,
"""

hier_path = OUT / "hierarchy.csv"
hier_path.write_text(HIERARCHY)
hierarchy = load_hierarchy(hier_path)

print("countries:", hierarchy.countries())
print("LAU regions under AA111:", hierarchy.descendants("AA111", SpatialLevel.LAU))
print("NUTS0 ancestor of AA_0003:", hierarchy.ancestor("AA_0003", SpatialLevel.NUTS0))

# Ingest: present values are graded VERY_HIGH, the empty cell and any region
# with no row at all count as missing.
pop_path = OUT / "population.csv"
pop_path.write_text(POPULATION)
population = ingest_series(
    pop_path,
    SeriesMeta("population", "Resident population", "number", SpatialLevel.LAU, "AA"),
    hierarchy,
)
rep = missing_report(population)
print(f"\nmissing report: {rep.missing}/{rep.total} = {rep.pct_display}%")

# Aggregation needs a complete series unless allow_partial is set.
nuts3 = aggregate(population, hierarchy, SpatialLevel.NUTS3, allow_partial=True)
for region in nuts3.regions():
    obs = nuts3.observations[region]
    print(f"  {region}: {obs.value:.0f} ({obs.confidence.name})")

print("\npearson([1,2,3,4],[1,3,2,4]) =", pearson([1, 2, 3, 4], [1, 3, 2, 4]))
print("pearson with a constant vector ->", pearson([1, 1, 1], [1, 2, 3]))
