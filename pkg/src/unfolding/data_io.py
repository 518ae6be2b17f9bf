"""Vote-file ingestion, synthetic data, and draw persistence.

Input votes are long-format CSV: ``legislator_id,item_id,cast_code`` with the
roll-call code convention (1-3 affirmative, 4-6 negative, 0 and 7-9 missing)
as the default, overridable mapping.  Ingestion applies the standard
cleaning: unanimous items are dropped, then legislators missing more than
40% of the remaining items, then a single unanimity re-check.

Draws persist as one CSV per parameter block plus a flat key-value config
echo; all floats are serialized with round-trip precision.  Files written by
an interrupted run carry a truncation marker and read back up to the last
complete block.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .gumbel_mix import GaussianMixture, read_mixture, write_mixture
from .model import (
    MISSING,
    NAY,
    YEA,
    Hyperparams,
    Item,
    Legislator,
    VoteMatrix,
    log_response_terms,
    sample_prior_items,
)
from .rng import RngStream
from .sampler import DrawStore

__all__ = [
    "DEFAULT_CAST_CODE_MAP",
    "FilterReport",
    "SimulationTruth",
    "load_votes",
    "filter_votes",
    "simulate_votes",
    "simulate_cells",
    "write_votes_csv",
    "write_draws",
    "read_draws",
    "read_config_echo",
    "DrawCsvWriter",
]

DEFAULT_CAST_CODE_MAP = {
    0: MISSING,
    1: YEA,
    2: YEA,
    3: YEA,
    4: NAY,
    5: NAY,
    6: NAY,
    7: MISSING,
    8: MISSING,
    9: MISSING,
}


@dataclass
class FilterReport:
    """What ingestion removed, stage by stage."""

    unanimous_items: list[str] = field(default_factory=list)
    absent_legislators: list[str] = field(default_factory=list)
    recheck_unanimous_items: list[str] = field(default_factory=list)
    kept_legislators: np.ndarray | None = None  # indices into the input matrix
    kept_items: np.ndarray | None = None

    def summary(self) -> str:
        return (
            f"removed {len(self.unanimous_items)} unanimous items, "
            f"{len(self.absent_legislators)} mostly-absent legislators, "
            f"{len(self.recheck_unanimous_items)} items unanimous after that"
        )


def filter_votes(votes: VoteMatrix, max_missing_share: float = 0.4):
    """Apply the cleaning rules; returns the filtered matrix and a report.

    Order is fixed: unanimous items out first, then legislators whose
    missing share among the remaining items strictly exceeds
    ``max_missing_share``, then one more unanimity pass (removing a
    legislator can leave an item without dissent).  Idempotent.
    """
    report = FilterReport()
    keep_j = ~votes.unanimous_items()
    report.unanimous_items = [it.id for it, k in zip(votes.items, keep_j) if not k]

    cells = votes.cells[:, keep_j]
    observed = cells != MISSING
    if cells.shape[1] == 0:
        missing_share = np.ones(cells.shape[0])
    else:
        missing_share = 1.0 - observed.mean(axis=1)
    keep_i = missing_share <= max_missing_share + 1e-12
    report.absent_legislators = [
        leg.id for leg, k in zip(votes.legislators, keep_i) if not k
    ]
    cells = cells[keep_i, :]

    sub = VoteMatrix(
        cells,
        [leg for leg, k in zip(votes.legislators, keep_i) if k],
        [it for it, kj in zip(votes.items, keep_j) if kj],
    )
    keep_j2 = ~sub.unanimous_items()
    report.recheck_unanimous_items = [it.id for it, k in zip(sub.items, keep_j2) if not k]
    out = VoteMatrix(
        sub.cells[:, keep_j2],
        sub.legislators,
        [it for it, k in zip(sub.items, keep_j2) if k],
    )

    idx_j = np.nonzero(keep_j)[0][keep_j2]
    report.kept_items = idx_j
    report.kept_legislators = np.nonzero(keep_i)[0]
    return out, report


def _read_rows(path, mapping):
    records = {}
    legislators: list[str] = []
    items: list[str] = []
    leg_seen = {}
    item_seen = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["legislator_id", "item_id", "cast_code"]:
            raise ValueError(
                f"{path}: expected header legislator_id,item_id,cast_code, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            leg_id, item_id, code_str = (f.strip() for f in row)
            if not leg_id or not item_id:
                raise ValueError(f"{path}:{lineno}: empty legislator or item id")
            try:
                code = int(code_str)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cast_code {code_str!r} is not an integer") from None
            if code not in mapping:
                raise ValueError(f"{path}:{lineno}: cast_code {code} has no mapping")
            key = (leg_id, item_id)
            if key in records:
                raise ValueError(f"{path}:{lineno}: duplicate vote for {key}")
            records[key] = mapping[code]
            if leg_id not in leg_seen:
                leg_seen[leg_id] = len(legislators)
                legislators.append(leg_id)
            if item_id not in item_seen:
                item_seen[item_id] = len(items)
                items.append(item_id)
    return records, legislators, items, leg_seen, item_seen


def _read_legislator_metadata(path):
    meta = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["legislator_id", "name", "party"]:
            raise ValueError(f"{path}: expected header legislator_id,name,party, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            leg_id, name, party = (f.strip() for f in row)
            meta[leg_id] = (name or None, party or None)
    return meta


def load_votes(path, mapping=None, legislators_path=None, max_missing_share: float = 0.4):
    """Read and clean a vote file; returns the filtered matrix.

    ``legislators_path`` (or a ``legislators.csv`` next to the vote file)
    supplies names and party labels.  Raises with the stage counts if
    nothing survives filtering.
    """
    mapping = DEFAULT_CAST_CODE_MAP if mapping is None else mapping
    records, leg_ids, item_ids, leg_seen, item_seen = _read_rows(path, mapping)
    if not records:
        raise ValueError(f"{path}: no vote records")

    meta = {}
    if legislators_path is None:
        candidate = os.path.join(os.path.dirname(os.path.abspath(path)), "legislators.csv")
        if os.path.exists(candidate):
            legislators_path = candidate
    if legislators_path is not None:
        meta = _read_legislator_metadata(legislators_path)

    cells = np.full((len(leg_ids), len(item_ids)), MISSING, dtype=np.int8)
    for (leg_id, item_id), vote in records.items():
        cells[leg_seen[leg_id], item_seen[item_id]] = vote

    legislators = [
        Legislator(lid, *(meta.get(lid, (None, None)))) for lid in leg_ids
    ]
    votes = VoteMatrix(cells, legislators, [Item(iid) for iid in item_ids])
    filtered, report = filter_votes(votes, max_missing_share)
    if filtered.n_legislators == 0 or filtered.n_items == 0:
        raise ValueError(f"{path}: empty matrix after filtering ({report.summary()})")
    return filtered


@dataclass
class SimulationTruth:
    """Generating parameters aligned with the (filtered) simulated matrix."""

    beta: np.ndarray
    z: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray


def simulate_cells(beta, alpha, delta, rng: RngStream, mask_rate: float = 0.0):
    """Bernoulli vote draws from the softmax response, with optional MCAR mask."""
    beta = np.asarray(beta, dtype=np.float64)
    log_theta, _ = log_response_terms(beta[:, None], alpha, delta)
    theta = np.exp(log_theta)
    cells = np.where(rng.uniform(theta.shape) < theta, YEA, NAY).astype(np.int8)
    if mask_rate > 0.0:
        cells = np.where(rng.uniform(theta.shape) < mask_rate, MISSING, cells)
    return cells


def simulate_votes(
    n_legislators: int,
    n_items: int,
    hyper: Hyperparams | None = None,
    seed: int = 0,
    mask_rate: float = 0.0,
    max_retries: int = 10,
):
    """Draw a synthetic vote matrix from the generative model.

    Positions are standard normal, item parameters come from the prior, and
    cells are Bernoulli under the softmax response.  The same ingestion
    filters as :func:`load_votes` are applied; the returned truth is aligned
    with the surviving rows and columns.  Degenerate draws (nothing left
    after filtering) retry with a shifted seed up to ``max_retries`` times.
    """
    if n_legislators < 2 or n_items < 2:
        raise ValueError("need at least 2 legislators and 2 items")
    hyper = hyper or Hyperparams()
    for attempt in range(max(1, max_retries)):
        rng = RngStream(seed + attempt, 2**32)
        beta = rng.standard_normal(n_legislators)
        z, alpha, delta = sample_prior_items(hyper, n_items, rng)
        cells = simulate_cells(beta, alpha, delta, rng, mask_rate)
        legislators = [
            Legislator(f"L{i + 1:03d}", party=("A" if beta[i] < 0 else "B"))
            for i in range(n_legislators)
        ]
        items = [Item(f"V{j + 1:04d}") for j in range(n_items)]
        votes = VoteMatrix(cells, legislators, items)
        filtered, report = filter_votes(votes)
        if filtered.n_legislators >= 2 and filtered.n_items >= 1:
            truth = SimulationTruth(
                beta=beta[report.kept_legislators],
                z=z[report.kept_items],
                alpha=alpha[report.kept_items],
                delta=delta[report.kept_items],
            )
            return filtered, truth
    raise ValueError(
        f"simulation degenerate after filtering in {max_retries} attempts "
        f"(last: {report.summary()})"
    )


def write_votes_csv(votes: VoteMatrix, path, legislators_path=None) -> None:
    """Write a matrix back to the long CSV format (codes 1/6/9)."""
    code_of = {YEA: 1, NAY: 6, MISSING: 9}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["legislator_id", "item_id", "cast_code"])
        for i, leg in enumerate(votes.legislators):
            for j, item in enumerate(votes.items):
                out.writerow([leg.id, item.id, code_of[int(votes.cells[i, j])]])
    if legislators_path is not None:
        with open(legislators_path, "w", encoding="utf-8", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["legislator_id", "name", "party"])
            for leg in votes.legislators:
                out.writerow([leg.id, leg.name or "", leg.party or ""])


# --- draw persistence ----------------------------------------------------

_STATUS_FILE = "status.txt"
_ECHO_FILE = "config_echo.txt"
_MIXTURE_FILE = "mixture.txt"


def _fmt(x) -> str:
    return repr(float(x))


class DrawCsvWriter:
    """Streams retained draws to CSV files, block by block.

    The config echo and mixture file are written up front so even an
    interrupted run documents how it was launched; ``finalize`` records the
    completion status and row count.
    """

    def __init__(self, out_dir, store_template: DrawStore, hyper=None, config=None):
        os.makedirs(out_dir, exist_ok=True)
        self.out_dir = out_dir
        self.written = 0
        n_leg = len(store_template.legislator_ids)
        n_item = len(store_template.item_ids)
        self._files = {}
        self._writers = {}
        headers = {
            "beta.csv": ["iter"] + [f"beta_{i + 1}" for i in range(n_leg)],
            "alpha.csv": ["iter", "j", "alpha1", "alpha2"],
            "delta.csv": ["iter", "j", "delta1", "delta2"],
            "z.csv": ["iter"] + [f"z_{j + 1}" for j in range(n_item)],
            "loglik.csv": ["iter", "total"] + [f"per_legislator_{i + 1}" for i in range(n_leg)],
        }
        if store_template.cell_loglik is not None:
            n_cells = store_template.cell_index.shape[0]
            headers["cell_loglik.csv"] = ["iter"] + [f"cell_{c + 1}" for c in range(n_cells)]
        for name, cols in headers.items():
            fh = open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="")
            writer = csv.writer(fh)
            writer.writerow(cols)
            self._files[name] = fh
            self._writers[name] = writer
        if store_template.cell_index is not None:
            with open(os.path.join(out_dir, "cell_index.csv"), "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["cell", "i", "j"])
                for c, (i, j) in enumerate(store_template.cell_index):
                    w.writerow([c + 1, int(i) + 1, int(j) + 1])
        self._write_echo(store_template, hyper, config)

    def _write_echo(self, store: DrawStore, hyper, config) -> None:
        lines = []
        if config is not None:
            lines += [
                f"burn_in = {config.burn_in}",
                f"n_keep = {config.n_keep}",
                f"thin = {config.thin}",
                f"flip_every = {config.flip_every}",
                f"flip_sign_prob = {_fmt(config.flip_sign_prob)}",
                f"seed = {config.seed}",
                f"init_mode = {config.init_mode}",
                f"response = {config.response}",
                f"store_cell_loglik = {str(config.store_cell_loglik).lower()}",
                f"mixture_k = {config.mixture.k}",
                f"mixture_file = {_MIXTURE_FILE}",
            ]
            write_mixture(config.mixture, os.path.join(self.out_dir, _MIXTURE_FILE))
        else:
            lines.append(f"response = {store.response}")
        if hyper is not None:
            lines += [
                f"vartheta = {_fmt(hyper.vartheta[0])}, {_fmt(hyper.vartheta[1])}",
                f"omega_sq = {_fmt(hyper.omega_sq)}",
                f"kappa_sq = {_fmt(hyper.kappa_sq)}",
            ]
        lines.append("legislator_ids = " + ", ".join(store.legislator_ids))
        lines.append("item_ids = " + ", ".join(store.item_ids))
        with open(os.path.join(self.out_dir, _ECHO_FILE), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def append(self, store: DrawStore, upto: int) -> None:
        for row in range(self.written, upto):
            it = int(store.iters[row])
            self._writers["beta.csv"].writerow([it] + [_fmt(v) for v in store.beta[row]])
            self._writers["z.csv"].writerow([it] + [int(v) for v in store.z[row]])
            self._writers["loglik.csv"].writerow(
                [it, _fmt(store.loglik[row])] + [_fmt(v) for v in store.loglik_by_legislator[row]]
            )
            for j in range(store.alpha.shape[1]):
                self._writers["alpha.csv"].writerow(
                    [it, j + 1, _fmt(store.alpha[row, j, 0]), _fmt(store.alpha[row, j, 1])]
                )
                self._writers["delta.csv"].writerow(
                    [it, j + 1, _fmt(store.delta[row, j, 0]), _fmt(store.delta[row, j, 1])]
                )
            if store.cell_loglik is not None:
                self._writers["cell_loglik.csv"].writerow(
                    [it] + [_fmt(v) for v in store.cell_loglik[row]]
                )
        self.written = upto
        for fh in self._files.values():
            fh.flush()

    def finalize(self, truncated: bool, rows: int) -> None:
        with open(os.path.join(self.out_dir, _STATUS_FILE), "w", encoding="utf-8") as fh:
            fh.write(f"status = {'truncated' if truncated else 'complete'}\n")
            fh.write(f"rows = {rows}\n")
        for fh in self._files.values():
            fh.close()


def write_draws(store: DrawStore, out_dir, hyper=None, config=None) -> None:
    """Persist a complete draw store to a directory of CSV files."""
    writer = DrawCsvWriter(out_dir, store, hyper=hyper, config=config)
    writer.append(store, store.n_draws)
    writer.finalize(truncated=store.truncated, rows=store.n_draws)


def read_config_echo(out_dir) -> dict:
    path = os.path.join(out_dir, _ECHO_FILE)
    fields = {}
    if not os.path.exists(path):
        return fields
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    return fields


def _read_csv_rows(path, expected_header, tolerate_partial):
    """Parse a draws CSV; optionally drop a ragged trailing line."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            if header is None:
                raise ValueError(f"{path}: empty file")
            for got, want in zip(header, expected_header):
                if got != want:
                    raise ValueError(f"{path}: expected column {want!r}, found {got!r}")
            raise ValueError(
                f"{path}: header has {len(header)} columns, expected {len(expected_header)}"
            )
        n_fields = len(expected_header)
        for row in reader:
            if not row:
                continue
            if len(row) != n_fields:
                if tolerate_partial:
                    break
                raise ValueError(f"{path}: malformed row with {len(row)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if tolerate_partial:
                    break
                raise
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(expected_header))


def read_draws(out_dir) -> DrawStore:
    """Read a persisted draw store; honors the truncation marker.

    A directory marked (or detected) truncated is read up to the last draw
    index present in every file; for a complete directory any inconsistency
    is an error.
    """
    echo = read_config_echo(out_dir)
    legislator_ids = [s.strip() for s in echo.get("legislator_ids", "").split(",") if s.strip()]
    item_ids = [s.strip() for s in echo.get("item_ids", "").split(",") if s.strip()]
    status_path = os.path.join(out_dir, _STATUS_FILE)
    status = "unknown"
    if os.path.exists(status_path):
        status_fields = {}
        with open(status_path, "r", encoding="utf-8") as fh:
            for line in fh:
                key, _, value = line.partition("=")
                status_fields[key.strip()] = value.strip()
        status = status_fields.get("status", "unknown")
    tolerate = status != "complete"

    n_leg = len(legislator_ids)
    n_item = len(item_ids)
    beta_head = ["iter"] + [f"beta_{i + 1}" for i in range(n_leg)]
    z_head = ["iter"] + [f"z_{j + 1}" for j in range(n_item)]
    ll_head = ["iter", "total"] + [f"per_legislator_{i + 1}" for i in range(n_leg)]
    beta_rows = _read_csv_rows(os.path.join(out_dir, "beta.csv"), beta_head, tolerate)
    z_rows = _read_csv_rows(os.path.join(out_dir, "z.csv"), z_head, tolerate)
    ll_rows = _read_csv_rows(os.path.join(out_dir, "loglik.csv"), ll_head, tolerate)
    alpha_rows = _read_csv_rows(
        os.path.join(out_dir, "alpha.csv"), ["iter", "j", "alpha1", "alpha2"], tolerate
    )
    delta_rows = _read_csv_rows(
        os.path.join(out_dir, "delta.csv"), ["iter", "j", "delta1", "delta2"], tolerate
    )

    counts = [
        beta_rows.shape[0],
        z_rows.shape[0],
        ll_rows.shape[0],
        alpha_rows.shape[0] // n_item,
        delta_rows.shape[0] // n_item,
    ]
    n = min(counts)
    if not tolerate and any(c != n for c in counts):
        raise ValueError(f"{out_dir}: inconsistent row counts across draw files: {counts}")

    alpha = alpha_rows[: n * n_item, 2:4].reshape(n, n_item, 2)
    delta = delta_rows[: n * n_item, 2:4].reshape(n, n_item, 2)
    store = DrawStore(
        iters=beta_rows[:n, 0].astype(np.int64),
        beta=beta_rows[:n, 1:],
        alpha=alpha,
        delta=delta,
        z=z_rows[:n, 1:].astype(np.int8),
        loglik=ll_rows[:n, 1],
        loglik_by_legislator=ll_rows[:n, 2:],
        legislator_ids=legislator_ids,
        item_ids=item_ids,
        truncated=(status == "truncated") or any(c != n for c in counts),
        response=echo.get("response", "logit"),
    )
    cell_path = os.path.join(out_dir, "cell_loglik.csv")
    if os.path.exists(cell_path):
        idx_rows = _read_csv_rows(
            os.path.join(out_dir, "cell_index.csv"), ["cell", "i", "j"], False
        )
        n_cells = idx_rows.shape[0]
        cell_head = ["iter"] + [f"cell_{c + 1}" for c in range(n_cells)]
        cell_rows = _read_csv_rows(cell_path, cell_head, tolerate)
        store.cell_index = (idx_rows[:, 1:].astype(np.int64) - 1)
        store.cell_loglik = cell_rows[: min(n, cell_rows.shape[0]), 1:]
    return store


def read_draws_mixture(out_dir) -> GaussianMixture | None:
    path = os.path.join(out_dir, _MIXTURE_FILE)
    return read_mixture(path) if os.path.exists(path) else None
