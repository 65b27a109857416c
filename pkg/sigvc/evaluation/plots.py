"""
Similarity distribution plots. Every image has a JSON twin holding the
histogram statistics it was drawn from; `plot_from_json` redraws it.
"""

import itertools
import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sigvc.errors import EmptyInputError, FeatureIOError  # noqa: E402
from sigvc.evaluation.similarity import DistributionSummary  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

COLORS = ['#d73c49', '#417e90', '#e3a33b', '#5b8c3a', '#7a4f9a']


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "plot"


def _draw(summaries: List[DistributionSummary], title: str, out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for color, s in zip(itertools.cycle(COLORS), summaries):
        edges = np.asarray(s.histogram['edges'])
        counts = np.asarray(s.histogram['counts'], dtype=np.float64)
        density = counts / max(s.count, 1) / np.diff(edges)
        ax.stairs(density, edges, label=f"{s.condition} (n={s.count})", color=color, linewidth=1.2)
    ax.set_xlabel('Cosine similarity')
    ax.set_ylabel('Density')
    ax.set_title(title)
    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)
    ax.grid(True, alpha=0.3)
    ax.legend(loc='upper left', fontsize=8)
    fig.tight_layout()
    try:
        fig.savefig(out_path)
    except OSError as e:
        raise FeatureIOError(f"Cannot write plot {out_path}: {e}") from e
    finally:
        plt.close(fig)


def _write_pair(summaries: List[DistributionSummary], title: str, stem: Path, fmt: str) -> List[Path]:
    stem.parent.mkdir(parents=True, exist_ok=True)
    image = stem.with_name(stem.name + f".{fmt}")
    twin = stem.with_name(stem.name + ".json")
    _draw(summaries, title, image)
    payload = {'title': title, 'summaries': [s.to_dict() for s in summaries]}
    try:
        twin.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    except OSError as e:
        raise FeatureIOError(f"Cannot write plot data {twin}: {e}") from e
    return [image, twin]


def _non_empty(summaries) -> List[DistributionSummary]:
    items = list(summaries.values()) if isinstance(summaries, Mapping) else list(summaries or [])
    return [s for s in items if s.count > 0]


def emit_plots(
    summaries: Union[Mapping[str, DistributionSummary], List[DistributionSummary]],
    out_dir: PathLike,
    name: str = "similarity_conditions",
    title: str = "Speaker embedding cosine similarity",
    fmt: str = "png",
) -> List[Path]:
    """One overlaid histogram of all conditions plus its JSON twin"""
    drawn = _non_empty(summaries)
    if not drawn:
        raise EmptyInputError("No non-empty similarity distributions to plot")
    paths = _write_pair(drawn, title, Path(out_dir) / _slug(name), fmt)
    logger.info("✓ Plot written to %s", paths[0])
    return paths


def emit_comparison_plots(
    systems: Mapping[str, DistributionSummary],
    out_dir: PathLike,
    condition: str = "converted_vs_target_avg",
    fmt: str = "png",
) -> List[Path]:
    """One overlay (plus JSON twin) per pair of systems for a single condition"""
    available = {name: s for name, s in systems.items() if s.count > 0}
    if len(available) < 2:
        raise EmptyInputError("System comparison needs at least two non-empty distributions")
    paths: List[Path] = []
    for (a, sa), (b, sb) in itertools.combinations(available.items(), 2):
        relabelled = [
            DistributionSummary(a, sa.count, sa.mean, sa.std, sa.histogram, sa.quantiles),
            DistributionSummary(b, sb.count, sb.mean, sb.std, sb.histogram, sb.quantiles),
        ]
        stem = Path(out_dir) / _slug(f"compare_{a}_vs_{b}_{condition}")
        paths.extend(_write_pair(relabelled, f"{condition}: {a} vs {b}", stem, fmt))
    logger.info("✓ %d comparison plot(s) written to %s", len(paths) // 2, out_dir)
    return paths


def plot_from_json(json_path: PathLike, out_path: Optional[PathLike] = None) -> Path:
    """Redraw a plot from its JSON twin"""
    json_path = Path(json_path)
    payload = json.loads(json_path.read_text(encoding="utf-8"))
    summaries = [DistributionSummary.from_dict(s) for s in payload['summaries']]
    out_path = Path(out_path) if out_path else json_path.with_suffix(".png")
    _draw(summaries, payload.get('title', ''), out_path)
    return out_path


def summaries_from_report(report: Dict[str, object], condition: str) -> Optional[DistributionSummary]:
    data = report.get('summaries', {}).get(condition)
    return DistributionSummary.from_dict(data) if data else None
