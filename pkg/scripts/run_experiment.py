"""Generate the synthetic scenario and run every offline stage, then print the funnelling summary.

    python scripts/run_experiment.py runs/synthetic
"""

import argparse
import json
import sys
import time
from pathlib import Path

from topofunnel import synthetic
from topofunnel.config import load_config
from topofunnel.pipeline import EXIT_OK, run_pipeline

STAGES = ("build", "analyze", "layout", "report")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("directory", type=Path)
    parser.add_argument("--fixture-seed", type=int, default=7)
    parser.add_argument("--layout-seed", type=int, default=None)
    args = parser.parse_args()

    scenario = synthetic.generate(args.directory, seed=args.fixture_seed)
    cfg = load_config(scenario.config).with_overrides(seed=args.layout_seed)
    for stage in STAGES:
        start = time.perf_counter()
        code = run_pipeline(cfg, stage)
        print(f"{stage:<8} exit {code}  {time.perf_counter() - start:.2f}s")
        if code != EXIT_OK:
            return code

    report = json.loads((cfg.out_dir / "report.json").read_text())
    g = report["graph"]
    print(f"\n{g['nodes']} ASes, {g['edges']} edges, {g['bogons']} bogons, "
          f"observability {report['observability']['overall']:.3f}")
    print(f"{'country':<8}{'gateways':>9}{'foreign':>9}{'1st deg':>9}{'layers':>18}{'hop-1 burden':>14}{'indicator':>11}")
    for c, v in sorted(report["countries"].items(), key=lambda kv: -kv[1]["hop1_burden"]):
        layers = ",".join(str(x) for x in v["funnel"]["layers"])
        print(f"{c:<8}{synthetic.GATEWAYS.get(c, 'all'):>9}{v['foreign']['foreign_neighbours']:>9}"
              f"{v['foreign']['first_degree_domestic']:>9}{layers:>18}{v['hop1_burden']:>14.4g}"
              f"{synthetic.INDICATOR[c]:>11}")
    for r in report["correlations"]:
        if r["metric"] == "hop1_burden":
            print(f"r({r['indicator']}, hop1_burden) = {r['r']:.3f} over {r['n']} countries")
    print(f"\noutputs in {cfg.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
