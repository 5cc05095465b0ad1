"""
📝 Relatório do MDP de seis estados
Reprodução dos três episódios guionados (com os dois bootstraps), comparação AIL vs LfGP com a
auxiliar go-right e o oráculo por força bruta; escreve texto + CSV.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

from src.envs.six_state import true_reward
from src.tabular.lfgp import TabularRun, run_ail_tabular, run_lfgp_tabular, run_seeds
from src.tabular.qlearning import (
    BOOTSTRAPS, PAIRS, QTable, SCRIPTED_EPISODES, brute_force_optimal, replay_scripted_episodes,
)

logger = logging.getLogger(__name__)

REPORT_TEXT = "six_state_report.txt"
REPORT_QTABLES = "six_state_qtables.csv"
REPORT_RUNS = "six_state_runs.csv"


@dataclass
class SixStateReport:
    replays: Dict[str, List[QTable]]
    runs: Dict[str, List[TabularRun]] = field(default_factory=dict)
    optimal_return: float = 0.0
    optimal_sequence: tuple = ()

    def success_rate(self, key: str) -> float:
        runs = self.runs.get(key, [])
        return sum(r.optimal for r in runs) / len(runs) if runs else 0.0

    def stuck_rate(self, key: str) -> float:
        runs = self.runs.get(key, [])
        return sum(r.first_action == "a15" for r in runs) / len(runs) if runs else 0.0

    def lines(self) -> List[str]:
        out = ["=" * 60, "🎲 MDP DE SEIS ESTADOS", "=" * 60]
        out.append(f"Oráculo: retorno {self.optimal_return:+.1f} via {', '.join(self.optimal_sequence)}")
        for bootstrap, snapshots in self.replays.items():
            out.append("")
            out.append(f"📼 Episódios guionados (bootstrap={bootstrap})")
            for number, (episode, q) in enumerate(zip(SCRIPTED_EPISODES, snapshots), start=1):
                out.append(f"   após episódio {number} {{{', '.join(episode)}}}: "
                           f"Q(s1,a15)={q[(1, 'a15')]:.4f}  Q(s1,a12)={q[(1, 'a12')]:.4f}")
        if len(self.replays) > 1:
            finals = {b: s[-1] for b, s in self.replays.items()}
            q12 = {b: q[(1, "a12")] for b, q in finals.items()}
            if len({round(v, 3) for v in q12.values()}) > 1:
                out.append("   ⚠️ Os bootstraps divergem em Q(s1,a12): "
                           + ", ".join(f"{b}={v:.4f}" for b, v in q12.items()))
        if self.runs:
            out.append("")
            out.append("🧭 AIL vs LfGP (go-right)")
            for key in self.runs:
                out.append(f"   {key:<24} ótimo em {self.success_rate(key):6.1%} das seeds, "
                           f"preso em a15 em {self.stuck_rate(key):6.1%}")
        out.append("=" * 60)
        return out


def build_report(seeds: Sequence[int] = tuple(range(20)), episodes: int = 200,
                 epsilons: Sequence[float] = (0.0, 0.1), workers: int = 1,
                 sweeps: Sequence[str] = ("sequential",)) -> SixStateReport:
    replays = {bootstrap: replay_scripted_episodes(bootstrap=bootstrap) for bootstrap in BOOTSTRAPS}
    best, sequence = brute_force_optimal(true_reward)
    report = SixStateReport(replays, optimal_return=best, optimal_sequence=sequence)
    for sweep in sweeps:
        for epsilon in epsilons:
            for name, runner in (("ail", run_ail_tabular), ("lfgp", run_lfgp_tabular)):
                key = f"{name} ε={epsilon:g}" + ("" if sweep == "sequential" else f" {sweep}")
                logger.info(f"🧭 {key}: {len(seeds)} seeds × {episodes} episódios")
                report.runs[key] = run_seeds(runner, seeds, workers, episodes=episodes, epsilon=epsilon,
                                             sweep=sweep)
    return report


def write_report(report: SixStateReport, out_dir) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"text": out_dir / REPORT_TEXT, "qtables": out_dir / REPORT_QTABLES, "runs": out_dir / REPORT_RUNS}
    paths["text"].write_text("\n".join(report.lines()) + "\n", encoding="utf-8")

    with open(paths["qtables"], "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["bootstrap", "episode", "state", "action", "q"])
        writer.writeheader()
        for bootstrap, snapshots in report.replays.items():
            for number, q in enumerate(snapshots, start=1):
                for state, action in PAIRS:
                    writer.writerow({"bootstrap": bootstrap, "episode": number, "state": state,
                                     "action": action, "q": f"{q[(state, action)]:.10f}"})

    with open(paths["runs"], "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["run", "seed", "greedy_path", "true_return", "optimal_return",
                                               "optimal"])
        writer.writeheader()
        for key, runs in report.runs.items():
            for run in runs:
                writer.writerow({"run": key, "seed": run.seed, "greedy_path": " ".join(run.greedy),
                                 "true_return": run.true_return, "optimal_return": run.optimal_return,
                                 "optimal": int(run.optimal)})
    logger.info(f"📝 Relatório do MDP de seis estados em {out_dir}")
    return paths
