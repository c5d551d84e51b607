"""Command-line entry points.

    qrbm run <config.json>
    qrbm sweep <config.json> --param <dotted.key> --values v1,v2,...
    qrbm spectrum <hamiltonian-file> [--json]
    qrbm validate <config.json>

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 capacity error.
"""

import argparse
import json
import sys

from . import exact, experiments
from .errors import CapacityError, ConfigError, PauliParseError, QrbmError
from .hamiltonians import load_pauli_sum


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrbm",
        description="Quantum Boltzmann-machine experiments: spectra, trainers,"
                    " gadget checks and imaginary-time benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config")

    p_sweep = sub.add_parser("sweep", help="run a config across parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True,
                         help="dotted config key, e.g. run_options.delta")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values (JSON literals)")

    p_spec = sub.add_parser("spectrum", help="diagonalize a Pauli-sum file")
    p_spec.add_argument("hamiltonian")
    p_spec.add_argument("--json", action="store_true", dest="as_json")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = experiments.load_config(args.config)
            return experiments.run(config)
        if args.command == "sweep":
            config = experiments.load_config(args.config)
            values = [_parse_value(v) for v in args.values.split(",") if v != ""]
            return experiments.sweep(config, args.param, values)
        if args.command == "spectrum":
            return _spectrum(args.hamiltonian, args.as_json)
        if args.command == "validate":
            experiments.load_config(args.config)
            print("ok")
            return experiments.EXIT_OK
    except ConfigError as err:
        print(json.dumps(err.to_dict()), file=sys.stderr)
        return experiments.EXIT_CONFIG
    except CapacityError as err:
        print(json.dumps({"error": "capacity", "message": str(err)}),
              file=sys.stderr)
        return experiments.EXIT_CAPACITY
    except QrbmError as err:
        print(json.dumps({"error": "numerical", "message": str(err),
                          "type": type(err).__name__}), file=sys.stderr)
        return experiments.EXIT_NUMERICAL
    return experiments.EXIT_OK


def _spectrum(path: str, as_json: bool) -> int:
    try:
        h = load_pauli_sum(path)
    except (OSError, PauliParseError) as err:
        print(json.dumps({"error": "config", "message": str(err)}),
              file=sys.stderr)
        return experiments.EXIT_CONFIG
    rep = exact.eigh(h)
    payload = {
        "n_qubits": h.n_qubits,
        "ground_energy": rep.ground_energy,
        "gap": rep.gap,
        "degenerate": bool(rep.degeneracy_flag),
        "eigenvalues": [float(v) for v in rep.eigenvalues],
    }
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"qubits:        {payload['n_qubits']}")
        print(f"ground energy: {payload['ground_energy']!r}")
        print(f"spectral gap:  {payload['gap']!r}")
        print(f"degenerate:    {payload['degenerate']}")
        print("eigenvalues:")
        for v in payload["eigenvalues"]:
            print(f"  {v!r}")
    return experiments.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
