"""Declarative experiment runner.

A run consumes one JSON config document and writes, inside its output
directory: manifest.json (resolved config and versions), trace.csv (the
training schema, header-only for non-iterative kinds), result.json, CSV
series under plotdata/ and rendered figures under figures/.  Reruns with the
same config and seed are byte-identical for trace.csv and result.json.
"""

import json
import math
import platform
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact, gadgets, plots, qite, statevec, trainers
from .ansatz import QrbmParams, trial_state_exact
from .errors import (CapacityError, ConfigError, DegenerateGapError,
                     NumericalError, PauliParseError, QrbmError,
                     ZeroOverlapError)
from .hamiltonians import HaldaneSpec, haldane_chain, load_pauli_sum
from .pauli import PauliString, PauliSum
from .trainers import ItePath, RunTrace, SpsaSchedule

KINDS = ("spectrum", "ground_state", "gibbs", "universality", "gadget_verify",
         "qite_bench")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CAPACITY = 4


@dataclass
class ExperimentConfig:
    """Validated experiment description (see from_dict for the schema)."""

    kind: str
    hamiltonian: dict
    output_dir: str
    seed: int = 0
    ansatz: dict = field(default_factory=dict)
    trainer: dict = field(default_factory=dict)
    engine: dict = field(default_factory=dict)
    run_options: dict = field(default_factory=dict)
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        errors = []
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        kind = raw.get("kind")
        if kind not in KINDS:
            errors.append(f"kind must be one of {KINDS}, got {kind!r}")
        ham = raw.get("hamiltonian")
        if not isinstance(ham, dict):
            errors.append("hamiltonian section is required")
            ham = {}
        elif ham.get("type") == "file" and not Path(ham.get("path", "")).exists():
            errors.append(f"hamiltonian file {ham.get('path')!r} does not exist")
        out = raw.get("output_dir")
        if not out:
            errors.append("output_dir is required")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            errors.append("seed must be an integer")
        workers = raw.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            errors.append("workers must be a positive integer")
        known = {"kind", "hamiltonian", "output_dir", "seed", "ansatz",
                 "trainer", "engine", "run_options", "workers"}
        for key in raw:
            if key not in known:
                errors.append(f"unknown top-level key {key!r}")
        if errors:
            raise ConfigError("invalid experiment config", errors)
        cfg = cls(kind=kind, hamiltonian=ham, output_dir=str(out),
                  seed=seed, ansatz=raw.get("ansatz", {}) or {},
                  trainer=raw.get("trainer", {}) or {},
                  engine=raw.get("engine", {}) or {},
                  run_options=raw.get("run_options", {}) or {},
                  workers=workers)
        cfg.build_hamiltonian()  # validate eagerly
        return cfg

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "hamiltonian": self.hamiltonian,
            "output_dir": self.output_dir, "seed": self.seed,
            "ansatz": self.ansatz, "trainer": self.trainer,
            "engine": self.engine, "run_options": self.run_options,
            "workers": self.workers,
        }

    def build_hamiltonian(self) -> PauliSum:
        ham = self.hamiltonian
        kind = ham.get("type")
        try:
            if kind == "haldane":
                return haldane_chain(HaldaneSpec(
                    n_sites=int(ham["n_sites"]), j=float(ham.get("j", 1.0)),
                    h1=float(ham.get("h1", 0.0)), h2=float(ham.get("h2", 0.0))))
            if kind == "file":
                return load_pauli_sum(ham["path"])
            if kind == "terms":
                return PauliSum.from_texts(
                    int(ham["qubits"]),
                    [(float(c), t) for c, t in ham.get("terms", [])],
                    identity_coeff=float(ham.get("identity", 0.0)))
            if kind == "random_simplified":
                return _random_simplified(int(ham["qubits"]),
                                          np.random.default_rng(
                                              int(ham.get("seed", self.seed))),
                                          float(ham.get("scale", 1.0)))
        except (KeyError, TypeError, ValueError, PauliParseError) as err:
            raise ConfigError(f"bad hamiltonian section: {err}")
        raise ConfigError(f"unknown hamiltonian type {kind!r}")


def _random_simplified(n, rng, scale=1.0) -> PauliSum:
    """Random instance with single-site fields and same-axis pair couplings."""
    terms = []
    for i in range(n):
        for ax in "XYZ":
            terms.append((rng.uniform(-scale, scale), PauliString.single(n, i, ax)))
    for s in range(n):
        for t in range(s + 1, n):
            for ax in "XYZ":
                terms.append((rng.uniform(-scale, scale),
                              PauliString.from_letters(n, {s: ax, t: ax})))
    return PauliSum(n, terms)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}")
    return ExperimentConfig.from_dict(raw)


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _versions() -> dict:
    import scipy
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "qrbm": "0.1.0"}


def parse_mask(selectors, template: QrbmParams) -> np.ndarray:
    """Boolean parameter mask from selector strings.

    Selectors: "b", "b[x]", "m", "w", "k", "k[z]", pair-filtered forms
    "k[x]:mirror" / "k[x]:intra1" / "k[x]:intra2" / "k[x]:cross", and a
    register filter "first"/"second" appended as a final part (the register
    split sits at n_visible/2, as in purified-thermal training), e.g.
    "b[x]:first" or "k[z]:intra2:first".
    """
    names = template.parameter_names()
    mask = np.zeros(len(names), dtype=bool)
    half = template.n_visible // 2
    for sel in selectors:
        parts = sel.split(":")
        group = parts[0]
        filters = parts[1:]
        register = None
        if filters and filters[-1] in ("first", "second"):
            register = filters.pop()
        pair_filter = filters[0] if filters else ""
        axis = None
        if "[" in group:
            group, _, rest = group.partition("[")
            axis = rest.rstrip("]")
        hit = 0
        for idx, name in enumerate(names):
            if not name.startswith(group + "["):
                continue
            if axis is not None and f",{axis}]" not in name:
                continue
            inside = name[name.index("[") + 1:name.index("]")]
            sites = [int(x) for x in inside.split(",") if x.lstrip("-").isdigit()]
            if register is not None and group in ("b", "k"):
                want_first = register == "first"
                if any((q < half) != want_first for q in sites[:2] if group == "k") \
                        or (group == "b" and (sites[0] < half) != want_first):
                    continue
            if pair_filter and group == "k":
                s, t = sites[0], sites[1]
                same = (s < half) == (t < half)
                if pair_filter == "mirror" and not (t - s == half):
                    continue
                if pair_filter == "cross" and (same or t - s == half):
                    continue
                if pair_filter.startswith("intra") and not same:
                    continue
                if pair_filter in ("intra1", "intra2") and \
                        t - s != int(pair_filter[-1]):
                    continue
            mask[idx] = True
            hit += 1
        if hit == 0:
            raise ConfigError(f"selector {sel!r} matched no parameters")
    return mask


def run(config: ExperimentConfig, out_dir: str | None = None) -> int:
    """Execute one experiment; returns the exit status."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plotdata").mkdir(exist_ok=True)
    (out / "figures").mkdir(exist_ok=True)
    _write_json(out / "manifest.json", {
        "config": config.to_dict(), "versions": _versions(),
        "seed": config.seed})
    trace = RunTrace()
    result = {"kind": config.kind, "seed": config.seed, "status": "ok"}
    status = EXIT_OK
    try:
        handler = _HANDLERS[config.kind]
        handler(config, out, trace, result)
    except ConfigError as err:
        result.update(status="config_error", error=str(err),
                      details=getattr(err, "details", []))
        status = EXIT_CONFIG
    except CapacityError as err:
        result.update(status="capacity_error", error=str(err))
        status = EXIT_CAPACITY
    except (NumericalError, DegenerateGapError, ZeroOverlapError,
            QrbmError) as err:
        result.update(status="numerical_failure", error=str(err),
                      error_type=type(err).__name__)
        status = EXIT_NUMERICAL
    trace.to_csv(out / "trace.csv", deterministic=True)
    _write_json(out / "result.json", result)
    return status


# -- kind handlers ---------------------------------------------------------


def _handle_spectrum(config, out, trace, result):
    h = config.build_hamiltonian()
    rep = exact.eigh(h)
    result.update(
        n_qubits=h.n_qubits,
        eigenvalues=[float(v) for v in rep.eigenvalues],
        ground_energy=rep.ground_energy,
        gap=rep.gap,
        degenerate=bool(rep.degeneracy_flag),
    )
    _write_csv(out / "plotdata" / "spectrum.csv", ["index", "eigenvalue"],
               list(enumerate(float(v) for v in rep.eigenvalues)))
    plots.spectrum_figure(rep.eigenvalues, out / "figures" / "spectrum.png")


def _ansatz_from_config(config, n_visible, base_state="plus_product"):
    a = config.ansatz
    n_hidden = int(a.get("n_hidden", 0))
    base = a.get("base_state", base_state)
    init = a.get("init", "zeros")
    if init == "zeros":
        return QrbmParams.zeros(n_visible, n_hidden, base_state=base)
    if init == "random":
        rng = np.random.default_rng(config.seed)
        return QrbmParams.random(n_visible, n_hidden, rng,
                                 scale=float(a.get("scale", 0.1)),
                                 base_state=base)
    raise ConfigError(f"unknown ansatz init {init!r}")


def _spsa_from_config(config) -> SpsaSchedule:
    t = dict(config.trainer.get("spsa", {}))
    t.setdefault("seed", config.seed)
    try:
        return SpsaSchedule(**t)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad spsa section: {err}")


def _ite_from_config(config) -> ItePath:
    t = dict(config.trainer.get("ite", {}))
    try:
        return ItePath(**t)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad ite section: {err}")


def _qite_from_config(config) -> qite.QiteOptions:
    e = dict(config.engine)
    e.setdefault("rng_seed", config.seed)
    try:
        return qite.QiteOptions(**e)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad engine section: {err}")


def _handle_ground_state(config, out, trace, result):
    h = config.build_hamiltonian()
    theta0 = _ansatz_from_config(config, h.n_qubits)
    sched = _spsa_from_config(config)
    mode = config.run_options.get("mode", "exact_trial")
    opts = _qite_from_config(config) if mode == "qite_trial" else None
    objective = trainers.ground_state_energy_objective(h, mode=mode, opts=opts)
    best, spsa_trace = trainers.spsa_minimize(objective, theta0, sched)
    for row in spsa_trace.rows:
        trace.append(row)
    best_energy = objective(best)
    result.update(best_energy=float(best_energy),
                  iterations=len(spsa_trace.rows),
                  postselection_failures=objective.postselection_failures)
    if h.n_qubits <= exact.DENSE_QUBIT_LIMIT:
        rep = exact.eigh(h)
        result.update(exact_ground_energy=rep.ground_energy,
                      abs_error=float(best_energy - rep.ground_energy))
    objectives = spsa_trace.objectives()
    best_seen = np.minimum.accumulate(objectives) if len(objectives) else []
    _write_csv(out / "plotdata" / "convergence.csv",
               ["iter", "objective", "best_seen"],
               [(i, float(o), float(b))
                for i, (o, b) in enumerate(zip(objectives, best_seen))])
    plots.convergence_figure(range(len(objectives)), objectives,
                             out / "figures" / "convergence.png",
                             ylabel="energy")


def _handle_gibbs(config, out, trace, result):
    from . import ansatz as ansatz_mod

    h = config.build_hamiltonian()
    beta = float(config.run_options.get("beta", 1.0))
    theta0 = _ansatz_from_config(config, 2 * h.n_qubits,
                                 base_state="bell_pairs")
    path = _ite_from_config(config)
    mask = None
    if config.run_options.get("active_params"):
        mask = parse_mask(config.run_options["active_params"], theta0)
        result["active_parameters"] = int(mask.sum())
    tangent_method = config.run_options.get("tangents", "fd")
    krylov_tol = config.run_options.get("krylov_tol")
    saved_tol = ansatz_mod.KRYLOV_TOL
    if krylov_tol is not None:
        ansatz_mod.KRYLOV_TOL = float(krylov_tol)
    try:
        params, ite_trace, fidelity = trainers.gibbs_train(
            h, beta, theta0, path, mask=mask, tangent_method=tangent_method)
    finally:
        ansatz_mod.KRYLOV_TOL = saved_tol
    for row in ite_trace.rows:
        trace.append(row)
    result.update(beta=beta, fidelity=float(fidelity),
                  iterations=len(ite_trace.rows))
    state = trial_state_exact(params)
    shots = config.run_options.get("shots")
    if shots:
        n_basis = int(config.run_options.get("n_basis", 16))
        rng = np.random.default_rng(config.seed)
        picks = sorted(rng.choice(1 << h.n_qubits, size=n_basis, replace=False))
        counts = statevec.sample_counts(state, int(shots), rng_seed=config.seed)
        est = np.zeros(1 << h.n_qubits)
        for label, c in counts.items():
            est[statevec.basis_index(label[:h.n_qubits])] += c
        est /= float(shots)
        rho = exact.gibbs_state(h, beta)
        exact_probs = np.real(np.diag(rho))
        rows = []
        errs = []
        for idx in picks:
            err = abs(est[idx] - exact_probs[idx])
            errs.append(err)
            rows.append((statevec.basis_label(int(idx), h.n_qubits),
                         float(est[idx]), float(exact_probs[idx]), float(err)))
        _write_csv(out / "plotdata" / "sampled_probs.csv",
                   ["basis", "estimated", "exact", "abs_error"], rows)
        plots.error_bar_figure([r[0] for r in rows], [r[3] for r in rows],
                               out / "figures" / "sampled_probs.png",
                               hline=1e-3)
        result.update(shots=int(shots), sampled_basis=len(picks),
                      max_sampled_error=float(max(errs)),
                      mean_sampled_error=float(np.mean(errs)))
    _write_csv(out / "plotdata" / "energy.csv", ["iter", "energy", "residual"],
               [(r.iteration, r.objective, r.residual) for r in ite_trace.rows])
    plots.convergence_figure([r.iteration for r in ite_trace.rows],
                             [r.objective for r in ite_trace.rows],
                             out / "figures" / "energy.png", ylabel="energy")


def _handle_universality(config, out, trace, result):
    h = config.build_hamiltonian()
    eps = float(config.run_options.get("epsilon", 1e-2))
    mode = config.run_options.get("hidden_mode", "diagonal_hidden")
    lam = config.run_options.get("lambda_star")
    plan = gadgets.universality_plan(h, eps, hidden_mode=mode,
                                     lambda_star=lam)
    report = gadgets.universality_check(plan)
    rep_h = exact.eigh(h)
    taus = [f * plan.tau for f in (0.2, 0.4, 0.6, 0.8, 1.0)]
    fids = []
    import dataclasses
    for tau in taus:
        state = gadgets.direct_filtered_state(dataclasses.replace(plan, tau=tau))
        fids.append(statevec.fidelity(state, rep_h.ground_state))
    result.update(
        tau=plan.tau, lambda_star=plan.lambda_star,
        delta_shift=plan.delta_shift, gap=plan.gap,
        epsilon=eps, hidden_mode=mode,
        fidelity_direct=float(report.fidelity_direct),
        predicted_fidelity=float(report.predicted_fidelity),
        fidelity_trial=(None if report.fidelity_trial is None
                        else float(report.fidelity_trial)),
        overlap_k=float(report.overlap_k),
        tau_sweep_monotone=bool(all(b >= a - 1e-12
                                    for a, b in zip(fids, fids[1:]))),
    )
    _write_csv(out / "plotdata" / "tau_sweep.csv", ["tau", "fidelity"],
               list(zip((float(t) for t in taus), (float(f) for f in fids))))
    plots.series_figure(taus, {"direct path": fids},
                        out / "figures" / "tau_sweep.png",
                        xlabel="tau", ylabel="ground-state fidelity")


def _handle_gadget_verify(config, out, trace, result):
    opts = config.run_options
    which = opts.get("construction", "cross_term")
    delta = float(opts.get("delta", 0.1))
    if which == "cross_term":
        g = gadgets.cross_term_gadget(0, 1, float(opts.get("alpha", 0.5)),
                                      delta, float(opts.get("e_scale", 1.0)))
        rep = gadgets.verify_cross_term_gadget(g)
        result.update(construction=which, delta=delta,
                      deviation=float(rep.deviation), z_used=float(rep.z_used),
                      ground_overlap=float(rep.ground_overlap))
    elif which == "three_local":
        n = int(opts.get("system_qubits", 2))
        spec = gadgets.ThreeLocalSpec(
            two_local_part=PauliSum.from_texts(
                n, [(float(c), t) for c, t in opts.get(
                    "two_local", [[0.05, "XI"], [0.04, "IZ"]])]),
            triples=[_triple_from_config(n, opts)],
            delta=delta)
        gadget = gadgets.three_local_gadget(spec)
        deviation = gadgets.three_local_deviation(gadget)
        result.update(construction=which, delta=delta,
                      deviation=float(deviation),
                      n_total=spec.n_total,
                      two_local=bool(gadget.total.max_locality() <= 2))
    else:
        raise ConfigError(f"unknown gadget construction {which!r}")
    _write_csv(out / "plotdata" / "deviation.csv", ["delta", "deviation"],
               [(delta, result["deviation"])])


def _triple_from_config(n, opts):
    spec = opts.get("triple")
    if spec is None:
        return (PauliSum.from_texts(n, [(0.15, "ZI")], identity_coeff=0.5),
                PauliSum.from_texts(n, [(0.12, "IZ")], identity_coeff=0.45),
                PauliSum.from_texts(n, [(0.09, "ZI")], identity_coeff=0.4))
    out = []
    for factor in spec:
        out.append(PauliSum.from_texts(
            n, [(float(c), t) for c, t in factor.get("terms", [])],
            identity_coeff=float(factor.get("identity", 0.0))))
    return tuple(out)


def _handle_qite_bench(config, out, trace, result):
    h = config.build_hamiltonian()
    tau = float(config.run_options.get("tau", 1.0))
    steps = [int(s) for s in config.run_options.get("steps", [25, 50, 100])]
    base = _qite_from_config(config)
    psi0 = statevec.plus_state(h.n_qubits)
    rows = []
    import dataclasses
    for n in steps:
        opts = dataclasses.replace(base, n_steps=n)
        evo = qite.qite_evolve(psi0, h, tau, opts)
        infid = (None if evo.fidelity_vs_exact is None
                 else max(1.0 - evo.fidelity_vs_exact, 0.0))
        rows.append((n, float(infid)))
    result.update(tau=tau, steps=steps,
                  infidelities=[r[1] for r in rows])
    if len(rows) >= 2 and rows[0][1] > 0 and rows[-1][1] > 0:
        order = math.log(rows[0][1] / rows[-1][1]) / math.log(rows[-1][0] / rows[0][0])
        result["measured_order"] = float(order)
    _write_csv(out / "plotdata" / "qite_scaling.csv", ["n_steps", "infidelity"],
               rows)
    plots.series_figure([r[0] for r in rows],
                        {"infidelity": [r[1] for r in rows]},
                        out / "figures" / "qite_scaling.png",
                        xlabel="Trotter steps", ylabel="infidelity", logy=True)


_HANDLERS = {
    "spectrum": _handle_spectrum,
    "ground_state": _handle_ground_state,
    "gibbs": _handle_gibbs,
    "universality": _handle_universality,
    "gadget_verify": _handle_gadget_verify,
    "qite_bench": _handle_qite_bench,
}


def _set_by_path(raw: dict, dotted: str, value):
    parts = dotted.split(".")
    node = raw
    for key in parts[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {key!r} of {dotted!r}")
    node[parts[-1]] = value


def sweep(config: ExperimentConfig, parameter: str, values) -> int:
    """One run directory per value plus a combined summary CSV and figure.

    Points already holding a result.json are skipped (resumable); failures
    are tolerated and marked in the summary.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep requires a non-empty value list")
    base = Path(config.output_dir)
    base.mkdir(parents=True, exist_ok=True)
    jobs = []
    for idx, value in enumerate(values):
        point_dir = base / f"point_{idx:03d}"
        raw = json.loads(json.dumps(config.to_dict()))
        _set_by_path(raw, parameter, value)
        raw["output_dir"] = str(point_dir)
        jobs.append((idx, value, raw, point_dir))
    statuses = {}
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(_run_sweep_point, raw, str(point_dir)): idx
                       for idx, _value, raw, point_dir in jobs
                       if not (point_dir / "result.json").exists()}
            for fut, idx in futures.items():
                statuses[idx] = fut.result()
    else:
        for idx, _value, raw, point_dir in jobs:
            if (point_dir / "result.json").exists():
                continue
            statuses[idx] = _run_sweep_point(raw, str(point_dir))
    rows = []
    metrics = {}
    for idx, value, _raw, point_dir in jobs:
        payload = json.loads((point_dir / "result.json").read_text())
        status = payload.get("status", "missing")
        metric_keys = [k for k in ("deviation", "fidelity", "best_energy",
                                   "fidelity_direct", "max_sampled_error",
                                   "gap") if k in payload]
        metric = payload.get(metric_keys[0]) if metric_keys else ""
        if metric_keys:
            metrics.setdefault(metric_keys[0], []).append((value, metric))
        rows.append((idx, value, status, metric))
    _write_csv(base / "summary.csv", ["point", "value", "status", "metric"],
               rows)
    if metrics:
        name, pairs = next(iter(metrics.items()))
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        try:
            plots.series_figure(xs, {name: ys}, base / "figures_summary.png",
                                xlabel=parameter, ylabel=name)
        except Exception:
            pass
    return EXIT_OK if all(s == EXIT_OK for s in statuses.values()) else \
        max(statuses.values(), default=EXIT_OK)


def _run_sweep_point(raw: dict, out_dir: str) -> int:
    config = ExperimentConfig.from_dict(raw)
    return run(config, out_dir)
