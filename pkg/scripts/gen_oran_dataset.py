#!/usr/bin/env python3
"""Generate the synthetic conflict dataset and everything needed to re-run
it through the CSV pipeline: samples CSV, control-graph JSON, a matching
schema file, and a ready-to-use benchmark config.
"""

import argparse
from pathlib import Path

from coad.oran import generate_oran, graph_to_json, samples_to_csv


def write_schema(path: Path, n_xapps: int, n_params: int, n_kpis: int) -> None:
    lines = []
    for prefix, count in (("xapp", n_xapps), ("param", n_params),
                          ("kpi", n_kpis)):
        lines += [f"feature.{prefix}_{i} = categorical" for i in range(count)]
    lines += [
        "label = conflict_type",
        "label.anomaly_values = direct,indirect,implicit",
        "context.column = context",
        "context.bins = 0.5,1.5,2.5",  # the context column is already binned
    ]
    path.write_text("\n".join(lines) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--graph-seed", type=int, default=0)
    parser.add_argument("--sample-seed", type=int, default=1)
    parser.add_argument("--samples", type=int, default=10000)
    parser.add_argument("--anomaly-frac", type=float, default=0.1)
    parser.add_argument("--out", default="oran_data")
    args = parser.parse_args()

    graph, samples = generate_oran(args.graph_seed, args.sample_seed,
                                   args.samples, args.anomaly_frac)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "oran.csv").write_text(samples_to_csv(graph, samples))
    (out / "graph.json").write_text(graph_to_json(graph) + "\n")
    write_schema(out / "oran.schema", graph.n_xapps, graph.n_params,
                 graph.n_kpis)
    (out / "benchmark.cfg").write_text(
        "method = C_PP_COAD,C_COAD,C_PO_COAD,FIXED\n"
        "dataset = csv\n"
        f"csv_path = {out / 'oran.csv'}\n"
        f"schema_path = {out / 'oran.schema'}\n"
        "delta = 0.95\nsteps = 50\nruns = 20\n")

    n_conflicts = sum(1 for s in samples if s.conflict != "none")
    print(f"wrote {len(samples)} samples ({n_conflicts} conflicts) to {out}/")
    print(f"next: coad run --config {out / 'benchmark.cfg'} --out {out}/results")


if __name__ == "__main__":
    main()
