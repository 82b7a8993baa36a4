"""Config-driven experiment runner writing CSV, JSON and SVG artifacts."""

import asyncio
import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from itertools import product
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import aiofiles
import numpy as np

from .. import __version__
from ..config.experiment_config import ExperimentConfig
from ..config.settings import Settings, get_settings
from ..errors import ConfigError, DomainError
from ..models.circuit import AnsatzSpec, Circuit
from ..models.fourier import TruncationSpec
from ..models.hamiltonian import HamiltonianModel
from ..models.surrogate import RmpsParams
from ..models.training import KernelSpec, LossSpec, TrainConfig
from ..utils.bit_mapper import BitMapper
from .fourier_service import FourierService
from .hamiltonian_service import HamiltonianService
from .pauli_algebra_service import PauliAlgebraService
from .plot_service import PlotService
from .statevector_service import StatevectorService
from .surrogate_service import SurrogateService
from .training_service import TrainingService
from .variance_service import VarianceService

VARIANCE_FAMILIES = ("matchgate_correlator", "matchgate_truncated", "haar_truncation")
RMPS_GRID_QUANTITIES = ("correlator", "marginal", "renyi2", "truncated_prob")

Rows = List[List[Any]]


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


class ExperimentService:
    """Runs one experiment kind and writes its artifacts into an output directory."""

    def __init__(self, settings: Optional[Settings] = None, threads: Optional[int] = None):
        self.settings = settings or get_settings()
        self.threads = threads or self.settings.threads
        self.logger = logging.getLogger(__name__)
        self.hamiltonians = HamiltonianService(self.settings)
        self.statevector = StatevectorService(self.settings)
        self.fourier = FourierService()
        self.pauli_algebra = PauliAlgebraService()
        self.plots = PlotService()

    async def run(
        self, config: ExperimentConfig, out_dir: Optional[str] = None, svg: Optional[bool] = None
    ) -> List[str]:
        """Run the experiment and return the written artifact paths."""
        output = Path(out_dir or config.output_dir)
        output.mkdir(parents=True, exist_ok=True)
        svg = config.svg if svg is None else svg
        self.logger.info("Running %s experiment (seed %d) into %s", config.kind, config.seed, output)

        runners = {
            "spectrum": self._run_spectrum,
            "train_deploy": self._run_train_deploy,
            "variance_grid": self._run_variance_grid,
            "rmps_grid": self._run_rmps_grid,
            "dla_check": self._run_dla_check,
            "pps_bench": self._run_pps_bench,
            "discrepancy": self._run_discrepancy,
        }
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            artifacts, extras = await runners[config.kind](config, pool)

        if svg:
            artifacts.update(self._plots(config.kind, artifacts))
        metadata = {
            "bornlab_version": __version__,
            "kind": config.kind,
            "seed": config.seed,
            "config_hash": config.config_hash(),
            "config": config.as_dict(),
            "artifacts": sorted(artifacts) + ["metadata.json"],
            "extras": extras,
        }
        artifacts["metadata.json"] = json.dumps(metadata, indent=2, sort_keys=True) + "\n"

        written = []
        for name in sorted(artifacts):
            path = output / name
            await self._write(path, artifacts[name])
            written.append(str(path))
        self.logger.info("Wrote %d artifacts to %s", len(written), output)
        return written

    async def _write(self, path: Path, content):
        if isinstance(content, bytes):
            async with aiofiles.open(path, "wb") as f:
                await f.write(content)
        else:
            async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
                await f.write(content)

    async def _fan_out(self, pool: ThreadPoolExecutor, tasks: List[Tuple[Callable, tuple]]) -> List[Any]:
        loop = asyncio.get_running_loop()
        return await asyncio.gather(*(loop.run_in_executor(pool, fn, *args) for fn, args in tasks))

    @staticmethod
    def _csv(header: List[str], rows: Rows) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
        return buffer.getvalue()

    @staticmethod
    def _task_seeds(seed: int, count: int) -> List[int]:
        return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]

    # Builders

    def _model(self, config: ExperimentConfig) -> HamiltonianModel:
        table = dict(config.table("model"))
        try:
            kind = table.pop("kind")
            if kind == "haldane_2d":
                table["n"] = table.get("nx", 0) * table.get("ny", 0)
            return HamiltonianModel(kind, **table)
        except KeyError as e:
            raise ConfigError("Table [model] needs 'model.kind'", key="model.kind") from e
        except DomainError as e:
            raise ConfigError(f"Invalid [model]: {e}", key="model") from e

    def _target(self, config: ExperimentConfig) -> np.ndarray:
        data = config.table("data")
        if data.get("source", "ground_state") == "csv":
            dataset = self.hamiltonians.load_binary_csv(data["path"], data.get("columns"))
            return dataset.distribution()
        return self.hamiltonians.ground_state_distribution(self._model(config))

    def _ansatz(self, config: ExperimentConfig, n: Optional[int] = None) -> Circuit:
        table = config.table("ansatz")
        n = table.get("n", n)
        if n is None:
            raise ConfigError("Table [ansatz] needs 'ansatz.n'", key="ansatz.n")
        arity = table.get("arity_counts")
        algebra = None
        if "algebra" in table:
            algebra = self.pauli_algebra.named_dla(table["algebra"], n)
        try:
            spec = AnsatzSpec(
                table.get("kind", "strongly_entangling"),
                n,
                gate_count=table.get("gate_count", 0),
                layers=table.get("layers", 1),
                seed=table.get("seed", config.seed),
                arity_counts={a + 1: int(c) for a, c in enumerate(arity)} if arity is not None else None,
                algebra=algebra,
            )
        except DomainError as e:
            raise ConfigError(f"Invalid [ansatz]: {e}", key="ansatz") from e
        return self.statevector.build_ansatz(spec)

    def _loss(self, config: ExperimentConfig) -> LossSpec:
        table = config.table("loss")
        kind = table.get("kind", "mmd")
        try:
            if kind == "mmd":
                kernel_kind = "parity" if "omega" in table else "anova_substring" if "window" in table else "gaussian"
                if kernel_kind == "gaussian":
                    kernel = KernelSpec.gaussian(table.get("sigma", 1.0))
                elif kernel_kind == "anova_substring":
                    kernel = KernelSpec.anova_substring(table["window"], table.get("gamma", 1.0))
                else:
                    kernel = KernelSpec.parity(table["omega"])
                return LossSpec.mmd(kernel)
            if kind == "kl":
                return LossSpec.kl(table.get("epsilon", 1e-12))
            return LossSpec(kind)
        except DomainError as e:
            raise ConfigError(f"Invalid [loss]: {e}", key="loss") from e

    def _truncations(self, config: ExperimentConfig, n: int) -> List[Tuple[str, TruncationSpec]]:
        """(label, truncation) pairs; the label fills the k_or_D column."""
        table = config.table("truncation")
        kind = table.get("kind", "k_order")
        if kind == "full":
            return [(str(n), TruncationSpec.full())]
        if kind == "k_order":
            orders = table.get("orders", [table.get("k", n)])
            return [(str(k), TruncationSpec.k_order(int(k))) for k in orders]
        if kind == "rfc":
            if "omega" in table:
                spec = TruncationSpec.rfc(table["omega"])
                return [(str(len(spec.omega)), spec)]
            sizes = table.get("sizes")
            if not sizes:
                raise ConfigError(
                    "rfc truncation needs 'truncation.omega' or 'truncation.sizes'", key="truncation.sizes"
                )
            policy = table.get("policy", "uniform_up_to")
            seeds = self._task_seeds(config.seed, len(sizes))
            return [
                (
                    str(size),
                    self.fourier.rfc_sample(n, policy, int(size), seed, table.get("k_max"), table.get("prob", 0.5)),
                )
                for size, seed in zip(sizes, seeds)
            ]
        raise ConfigError(f"Unknown truncation kind '{kind}'", key="truncation.kind")

    def _train_config(self, config: ExperimentConfig, truncation: TruncationSpec, seed: int) -> TrainConfig:
        table = config.table("train")
        surrogate = config.table("surrogate")
        try:
            return TrainConfig(
                iterations=table.get("iterations", 100),
                learning_rate=table.get("learning_rate", 0.05),
                optimizer=table.get("optimizer", "adam"),
                beta1=table.get("beta1", 0.9),
                beta2=table.get("beta2", 0.999),
                adam_epsilon=table.get("adam_epsilon", 1e-8),
                gradient=table.get("gradient", "parameter_shift"),
                fd_step=table.get("fd_step", 1e-4),
                truncation=truncation,
                surrogate=surrogate.get("kind", "statevector"),
                h_max=surrogate.get("h_max"),
                w_max=surrogate.get("w_max"),
                batch=table.get("batch"),
                seed=seed,
                init=table.get("init", "random_uniform"),
            )
        except DomainError as e:
            raise ConfigError(f"Invalid [train]: {e}", key="train") from e

    def _train_seeds(self, config: ExperimentConfig) -> List[int]:
        return [int(s) for s in config.table("train").get("seeds", [config.seed])]

    # Experiment kinds

    async def _run_spectrum(self, config: ExperimentConfig, pool):
        model = self._model(config)
        (p,) = await self._fan_out(pool, [(self.hamiltonians.ground_state_distribution, (model,))])
        spectrum = self.fourier.correlation_spectrum(p)
        rows = [[order, mask, value] for order in sorted(spectrum) for mask, value in spectrum[order]]
        ground = [[BitMapper.format_bitstring(x, model.n), float(p[x])] for x in range(1 << model.n)]
        artifacts = {
            "correlations.csv": self._csv(["order", "subset_mask", "value"], rows),
            "ground_state.csv": self._csv(["bitstring", "probability"], ground),
        }
        return artifacts, {"model": model.as_dict()}

    async def _run_train_deploy(self, config: ExperimentConfig, pool):
        target = self._target(config)
        n = int(target.shape[0]).bit_length() - 1
        ansatz = self._ansatz(config, n)
        loss = self._loss(config)
        tasks = []
        labels = []
        for (label, truncation), seed in product(self._truncations(config, n), self._train_seeds(config)):
            tasks.append((self._train_and_deploy, (ansatz, target, loss, self._train_config(config, truncation, seed))))
            labels.append((label, seed))
        results = await self._fan_out(pool, tasks)

        artifacts: Dict[str, Any] = {}
        deployed_rows = []
        initial_kl = {}
        for (label, seed), (history, kl, kl_initial) in zip(labels, results):
            artifacts[f"loss_history_k{label}_s{seed}.csv"] = self._csv(
                ["iteration", "loss"], [[i, value] for i, value in enumerate(history)]
            )
            deployed_rows.append([label, seed, kl])
            initial_kl[f"k{label}_s{seed}"] = kl_initial
        artifacts["deployed_kl.csv"] = self._csv(["k_or_D", "seed", "kl"], deployed_rows)
        return artifacts, {"deployed_kl_initial": initial_kl, "ansatz": dict(ansatz.metadata)}

    def _train_and_deploy(self, ansatz: Circuit, target: np.ndarray, loss: LossSpec, train_config: TrainConfig):
        training = TrainingService(self.settings)
        result = training.train(ansatz, target, loss, train_config)
        kl = training.deploy_evaluate(ansatz, result.theta_star, target)
        kl_initial = training.deploy_evaluate(ansatz, result.theta_initial, target)
        return list(result.loss_history), kl, kl_initial

    async def _run_variance_grid(self, config: ExperimentConfig, pool):
        grid = config.table("grid")
        family = grid.get("family", "matchgate_correlator")
        if family not in VARIANCE_FAMILIES:
            raise ConfigError(f"Unknown variance family '{family}'", key="grid.family")
        points = [(int(n), int(k)) for n, k in product(grid.get("ns", [4]), grid.get("orders", [1]))]
        if family == "matchgate_correlator":
            skipped = [(n, k) for n, k in points if not 1 <= k <= n - 1]
            if skipped:
                self.logger.warning("Skipping grid points outside 1 <= k <= n-1: %s", skipped)
            points = [(n, k) for n, k in points if 1 <= k <= n - 1]
        else:
            points = [(n, k) for n, k in points if 0 <= k <= n]
        seeds = self._task_seeds(config.seed, len(points))
        draws = grid.get("draws", 0)
        gates = grid.get("gates", 40)
        tasks = [(self._variance_point, (family, n, k, draws, seed, gates)) for (n, k), seed in zip(points, seeds)]
        results = await self._fan_out(pool, tasks)
        rows = [[n, k, None, closed, mean, stderr] for (n, k), (closed, mean, stderr) in zip(points, results)]
        header = ["n", "order", "chi_or_blank", "closed_form", "mc_mean", "mc_stderr"]
        return {"variance.csv": self._csv(header, rows)}, {"family": family, "draws": draws}

    def _variance_point(self, family: str, n: int, k: int, draws: int, seed: int, gates: int):
        variance = VarianceService(self.settings)
        if draws < 2:
            if family == "matchgate_correlator":
                return variance.matchgate_correlator_variance(n, k), None, None
            if family == "matchgate_truncated":
                return variance.matchgate_truncated_variance(n, k), None, None
            return variance.haar_truncation_error_exact(n, k), None, None
        if family == "matchgate_correlator":
            report = variance.matchgate_monte_carlo(n, k, draws, seed, gates)
        elif family == "matchgate_truncated":
            report = variance.matchgate_truncated_monte_carlo(n, k, draws, seed, gates)
        else:
            report = variance.haar_truncation_monte_carlo(n, k, draws, seed)
        return report.closed_form, report.mc_mean, report.mc_std_error

    async def _run_rmps_grid(self, config: ExperimentConfig, pool):
        grid = config.table("grid")
        quantity = grid.get("quantity", "correlator")
        if quantity not in RMPS_GRID_QUANTITIES:
            raise ConfigError(f"Unknown RMPS quantity '{quantity}'", key="grid.quantity")
        local_dim = grid.get("local_dim", 2)
        draws = grid.get("draws", 0)
        points = [
            (int(n), int(k), int(chi))
            for n, k, chi in product(grid.get("ns", [4]), grid.get("orders", [1]), grid.get("chis", [1, 2, 4]))
            if 0 <= int(k) <= int(n)
        ]
        seeds = self._task_seeds(config.seed, len(points))
        tasks = [
            (self._rmps_point, (quantity, n, k, chi, local_dim, draws, seed))
            for (n, k, chi), seed in zip(points, seeds)
        ]
        results = await self._fan_out(pool, tasks)
        rows = [[n, k, chi, closed, mean, stderr] for (n, k, chi), (closed, mean, stderr) in zip(points, results)]
        header = ["n", "order", "chi_or_blank", "closed_form", "mc_mean", "mc_stderr"]
        return {"variance.csv": self._csv(header, rows)}, {"quantity": quantity, "local_dim": local_dim, "draws": draws}

    def _rmps_point(self, quantity: str, n: int, k: int, chi: int, local_dim: int, draws: int, seed: int):
        params = RmpsParams(n, chi, local_dim)
        surrogates = SurrogateService(self.settings)
        mask = BitMapper.qubits_to_mask(range(k), n)
        if draws >= 2 and local_dim == 2 and (k >= 1 or quantity == "truncated_prob"):
            variance = VarianceService(self.settings)
            report = variance.rmps_monte_carlo(params, quantity, draws, seed, subset_mask=mask, m=k, k=k)
            return report.closed_form, report.mc_mean, report.mc_std_error
        if quantity == "correlator":
            return surrogates.rmps_correlator_variance(params, mask), None, None
        if quantity == "marginal":
            return (surrogates.rmps_marginal_variance(params, k) if k >= 1 else None), None, None
        if quantity == "renyi2":
            return surrogates.rmps_renyi2_max(params, k), None, None
        return surrogates.rmps_truncated_prob_variance(params, k), None, None

    async def _run_dla_check(self, config: ExperimentConfig, pool):
        table = config.table("dla")
        kinds = table.get("kinds", ["haldane"])
        ns = [int(n) for n in table.get("ns", [3, 4, 5])]
        max_dim = table.get("max_dim")
        points = list(product(kinds, ns))
        results = await self._fan_out(pool, [(self._dla_point, (kind, n, max_dim)) for kind, n in points])
        rows = [
            [kind, n, closure.dimension, explicit.dimension, closure.basis == explicit.basis]
            for (kind, n), (closure, explicit) in zip(points, results)
        ]
        explicit_by_point = {point: explicit for point, (_, explicit) in zip(points, results)}
        intersections = []
        for n in ns:
            for i, kind_a in enumerate(kinds):
                for kind_b in kinds[i + 1 :]:
                    common = self.pauli_algebra.algebra_intersection(
                        explicit_by_point[(kind_a, n)], explicit_by_point[(kind_b, n)]
                    )
                    intersections.append([kind_a, kind_b, n, common.dimension])
        artifacts = {"dla.csv": self._csv(["kind", "n", "closure_dim", "explicit_dim", "equal"], rows)}
        if intersections:
            artifacts["dla_intersections.csv"] = self._csv(["kind_a", "kind_b", "n", "dim"], intersections)
        return artifacts, {}

    def _dla_point(self, kind: str, n: int, max_dim: Optional[int]):
        algebra = PauliAlgebraService()
        closure = algebra.lie_closure(algebra.named_generators(kind, n), max_dim)
        return closure, algebra.named_dla(kind, n)

    async def _run_pps_bench(self, config: ExperimentConfig, pool):
        ansatz = self._ansatz(config)
        n = ansatz.n
        surrogate = config.table("surrogate")
        kind = surrogate.get("kind", "iqp_pps")
        if kind not in ("iqp_pps", "pauli_prop"):
            raise ConfigError(f"pps_bench needs an iqp_pps or pauli_prop surrogate, got '{kind}'", key="surrogate.kind")
        budgets_key = "h_values" if kind == "iqp_pps" else "w_values"
        budgets = [int(b) for b in surrogate.get(budgets_key, list(range(n + 1)))]
        k_max = config.table("truncation").get("k", n)
        rng = np.random.default_rng(config.seed)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=ansatz.param_count)
        exact = self.fourier.decompose(np.abs(self.statevector.simulate_amplitudes(ansatz, theta)) ** 2)
        tasks = [(self._pps_point, (ansatz, theta, kind, budget, k_max)) for budget in budgets]
        results = await self._fan_out(pool, tasks)
        training = TrainingService(self.settings)
        rows = []
        for budget, approx in zip(budgets, results):
            for order in range(1, k_max + 1):
                rows.append([order, budget, training.mse_k(exact, approx, order)])
        return {"mse.csv": self._csv(["order", "h_or_chi", "value"], rows)}, {"surrogate": kind, "budgets": budgets}

    def _pps_point(self, ansatz: Circuit, theta: np.ndarray, kind: str, budget: int, k_max: int):
        truncation = TruncationSpec.k_order(k_max)
        if kind == "iqp_pps":
            evaluator_config = TrainConfig(truncation=truncation, surrogate=kind, h_max=budget)
        else:
            evaluator_config = TrainConfig(truncation=truncation, surrogate=kind, w_max=budget)
        return TrainingService(self.settings).evaluator(ansatz, evaluator_config).correlator_vector(theta)

    async def _run_discrepancy(self, config: ExperimentConfig, pool):
        target = self._target(config)
        n = int(target.shape[0]).bit_length() - 1
        ansatz = self._ansatz(config, n)
        loss = self._loss(config)
        label, truncation = self._truncations(config, n)[0]
        seed = self._train_seeds(config)[0]
        classical_config = self._train_config(config, truncation, seed)
        quantum_config = self._train_config(config, TruncationSpec.full(), seed)
        quantum_config = replace(quantum_config, surrogate="statevector", h_max=None, w_max=None)
        training = TrainingService(self.settings)
        classical, quantum = await self._fan_out(
            pool,
            [
                (training.train, (ansatz, target, loss, classical_config)),
                (training.train, (ansatz, target, loss, quantum_config)),
            ],
        )
        report = training.discrepancy_report(target, ansatz, classical, quantum)
        payload = {
            "report": report.as_dict(),
            "classical": {"truncation": label, "final_loss": classical.final_loss},
            "quantum": {"final_loss": quantum.final_loss},
        }
        return {"report.json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}, {}

    # Plots

    def _plots(self, kind: str, artifacts: Dict[str, Any]) -> Dict[str, bytes]:
        tables = {name: self._read_csv(text) for name, text in artifacts.items() if name.endswith(".csv")}
        if kind == "train_deploy":
            series = {
                name[len("loss_history_") : -len(".csv")]: (
                    [int(r["iteration"]) for r in rows],
                    [float(r["loss"]) for r in rows],
                )
                for name, rows in sorted(tables.items())
                if name.startswith("loss_history_")
            }
            return {"loss_history.svg": self.plots.line_plot(series, "iteration", "loss", "Training loss")}
        if kind == "spectrum":
            rows = tables["correlations.csv"]
            series = {"|<Z_S>|": ([int(r["order"]) for r in rows], [float(r["value"]) for r in rows])}
            plot = self.plots.scatter_plot(series, "order", "|correlator|", "Correlation spectrum")
            return {"correlations.svg": plot}
        if kind in ("variance_grid", "rmps_grid"):
            series: Dict[str, Tuple[List[float], List[float]]] = {}
            for r in tables["variance.csv"]:
                if not r["closed_form"]:
                    continue
                label = f"n={r['n']}" + (f", chi={r['chi_or_blank']}" if r["chi_or_blank"] else "")
                xs, ys = series.setdefault(label, ([], []))
                xs.append(int(r["order"]))
                ys.append(float(r["closed_form"]))
            plot = self.plots.line_plot(series, "order", "closed form", "Variance", logy=True, markers=True)
            return {"variance.svg": plot}
        if kind == "pps_bench":
            series = {}
            for r in tables["mse.csv"]:
                xs, ys = series.setdefault(f"order {r['order']}", ([], []))
                xs.append(int(r["h_or_chi"]))
                ys.append(float(r["value"]))
            return {"mse.svg": self.plots.line_plot(series, "budget", "MSE", "Surrogate error", markers=True)}
        return {}

    @staticmethod
    def _read_csv(text: str) -> List[Dict[str, str]]:
        return list(csv.DictReader(io.StringIO(text)))
