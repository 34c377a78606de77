"""Write the synthetic five-country input set (RIB dumps, traceroutes, registries, V-Dem) to a directory."""

import argparse

from topofunnel import synthetic


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    scenario = synthetic.generate(args.directory, seed=args.seed)
    print(f"wrote {scenario.directory}: {synthetic.describe(scenario)}")
    print(f"config: {scenario.config}")


if __name__ == "__main__":
    main()
