"""SVG plots rendered purely from RunRecords."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import OutputError  # noqa: E402
from .records import RunRecord  # noqa: E402


def _qi_scan(ax, rec: RunRecord):
    ex = rec.exact
    N = np.array(ex["N_list"], dtype=float)
    v = np.array(ex["qi_values"]) / rec.config["t"] ** 2
    ax.loglog(N, v, "o-", label=f"{ex['variant']}, s={rec.config['s']}")
    if ex.get("fit_slope") is not None:
        ax.set_title(f"QI/t^2 vs N (fitted slope {ex['fit_slope']:.3f})")
    ax.set_xlabel("N")
    ax.set_ylabel("QI / t^2")


def _density(ax, rec: RunRecord):
    rows = rec.exact["cells"]
    t = [r["t"] for r in rows]
    ax.errorbar(t, [r["estimate"] for r in rows], yerr=[3 * r["stderr"] for r in rows], fmt="o-", capsize=3)
    ax.set_xlabel("t")
    ax.set_ylabel("||f_t 1_B||_p (3 s.e. bars)")
    ax.set_title(f"s={rec.config['s']}, N={rec.config['N']}, p={rec.config['p']}, R={rec.config['R']}")


def _exponents(ax, rec: RunRecord):
    r = rec.exact["r_j"]
    ax.plot(np.arange(1, len(r) + 1), r, "o-")
    ax.axhline(1.0, color="grey", lw=0.8)
    ax.set_xlabel("j")
    ax.set_ylabel("r_j")


def _tail(ax, rec: RunRecord):
    ex = rec.exact
    ax.plot(np.log(ex["Ncut_list"]), ex["log_values"], "o-")
    ax.set_xlabel("log Ncut")
    ax.set_ylabel("log tail mass")
    ax.set_title(f"slope {ex['fit_slope']:.3g}")


def _estimates(ax, rec: RunRecord):
    names = list(rec.estimates)
    vals = [rec.estimates[n]["value"] or 0.0 for n in names]
    errs = [rec.estimates[n]["stderr"] or 0.0 for n in names]
    ax.bar(range(len(names)), vals, yerr=errs)
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=7)


_PLOTTERS = {"qi-scan": _qi_scan, "density": _density, "exponents": _exponents, "tail-mass": _tail}


def plot_records(records: list[RunRecord], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for rec in records:
        _PLOTTERS.get(rec.config["kind"], _estimates)(ax, rec)
    if len(records) > 1 and records[0].config["kind"] == "qi-scan":
        ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise OutputError(f"cannot write plot to {path}: {exc}") from exc
    finally:
        plt.close(fig)
