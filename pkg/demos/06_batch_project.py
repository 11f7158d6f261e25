"""The batch CLI on a generated project directory.

Writes a complete project (hierarchy, series, registry, formulas, pipeline,
reference data, config) under demos/output/project and drives the regio
command in-process: check -> impute -> disaggregate -> validate. The same
thing works from a shell:

    regio run --config demos/output/project/config.json
"""

import json
from pathlib import Path

from regio.cli import main

ROOT = Path(__file__).parent / "output" / "project"
(ROOT / "series").mkdir(parents=True, exist_ok=True)
(ROOT / "reference").mkdir(exist_ok=True)

(ROOT / "hierarchy.csv").write_text(
    "code,level,parent,country\n"
    "AA,NUTS0,,AA\n"
    "AA1,NUTS1,AA,AA\n"
    "AA11,NUTS2,AA1,AA\n"
    "AA111,NUTS3,AA11,AA\n"
    "AA112,NUTS3,AA11,AA\n"
    "AA_0001,LAU,AA111,AA\n"
    "AA_0002,LAU,AA111,AA\n"
    "AA_0003,LAU,AA111,AA\n"
    "AA_0004,LAU,AA112,AA\n"
    "AA_0005,LAU,AA112,AA\n"
    "AA_0006,LAU,AA112,AA\n"
)

series = {
    "population": ["AA_0001,100", "AA_0002,200", "AA_0003,300", "AA_0004,400",
                   "AA_0005,500", "AA_0006,600"],
    "night_lights": ["AA_0001,1.0", "AA_0002,2.1", "AA_0003,2.9", "AA_0004,",
                     "AA_0005,5.2", "AA_0006,5.8"],  # one gap to impute
    "heating_degree_days": ["AA111,3000", "AA112,2700"],
    "households_fec": ["AA,9000"],
}
for vid, rows in series.items():
    (ROOT / "series" / f"{vid}.csv").write_text("region,value\n" + "\n".join(rows) + "\n")

(ROOT / "variables.json").write_text(json.dumps({
    "variables": [
        {"id": "population", "description": "Resident population", "unit": "number",
         "level": "LAU", "country_scope": "AA"},
        {"id": "night_lights", "description": "Night-time light intensity", "unit": "index",
         "level": "LAU", "country_scope": "AA"},
        {"id": "heating_degree_days", "description": "Heating degree days",
         "unit": "heating degree days", "level": "NUTS3", "country_scope": "AA"},
        {"id": "households_fec", "description": "Household final energy consumption",
         "unit": "MWh", "level": "NUTS0", "country_scope": "AA"},
    ]
}, indent=2))

(ROOT / "pipeline.json").write_text(json.dumps({
    "stages": [
        {"stage": 1, "tasks": [
            {"target_id": "heating_degree_days", "source_level": "NUTS3",
             "mode": "replicate", "assignment_confidence": "MEDIUM"}]},
        {"stage": 3, "tasks": [
            {"target_id": "households_fec", "source_level": "NUTS0", "mode": "allocate",
             "formula": "population * heating_degree_days + 0.25 * night_lights",
             "assignment_confidence": "HIGH"}]},
    ]
}, indent=2))

(ROOT / "reference" / "households_fec_nuts3.csv").write_text(
    "region,value,label\nAA111,3600,North district\nAA112,5600,South district\n"
)

(ROOT / "config.json").write_text(json.dumps({
    "hierarchy": "hierarchy.csv",
    "series_dir": "series",
    "registry": "variables.json",
    "pipeline": "pipeline.json",
    "reference_dir": "reference",
    "comparisons": [
        {"target_id": "households_fec", "reference": "households_fec_nuts3.csv",
         "level": "NUTS3"}
    ],
    "output_dir": "out",
    "seed": 11,
    "imputation": {"n_estimators": [25, 50], "learning_rates": [0.1, 0.3],
                   "max_depths": [2]}
}, indent=2))

code = main(["run", "--config", str(ROOT / "config.json")])
print("\nexit code:", code)

print("\noutput files:")
for path in sorted((ROOT / "out").rglob("*")):
    if path.is_file():
        print("  ", path.relative_to(ROOT))

print("\nhouseholds_fec.csv:")
print((ROOT / "out" / "households_fec.csv").read_text())
